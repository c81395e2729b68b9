"""Shared exception types.

InputFileError covers every malformed external input (world files, sensor
logs, map files, configs); the CLI maps it to exit code 2.
"""


class InputFileError(ValueError):
    """An external input file failed to parse or validate."""


class EmptyOverlapError(ValueError):
    """Two inputs (trajectories or maps) have nothing comparable."""

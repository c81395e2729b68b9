"""2D maze-world SLAM workbench.

Simulates a differential-drive robot in segment-based maze worlds, builds
occupancy-grid maps with a Rao-Blackwellized particle filter (with or
without wheel encoders), localizes against known maps with Monte Carlo
localization, navigates with A* + pure pursuit, and scores the results
against ground truth.
"""

from mazeslam.geometry import Pose2, Twist2

__version__ = "0.1.0"

__all__ = ["Pose2", "Twist2", "__version__"]

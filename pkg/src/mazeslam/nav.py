"""Grid navigation: obstacle inflation, A* planning, pure pursuit.

Unknown cells are treated as blocked; an inspection robot must not plan
through space it has never seen.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import distance_transform_edt

from mazeslam.geometry import Pose2, Twist2, wrap_angle
from mazeslam.grid import OccupancyGrid
from mazeslam.simulator import RobotParams, Simulator

SQRT2 = math.sqrt(2.0)


class PlanError(Exception):
    pass


class StartBlocked(PlanError):
    pass


class GoalBlocked(PlanError):
    pass


class NoPath(PlanError):
    pass


@dataclass
class InflatedGrid:
    resolution: float
    origin: Pose2
    blocked: np.ndarray  # (H, W) bool

    def world_to_cell(self, x: float, y: float):
        col = math.floor((x - self.origin.x) / self.resolution)
        row = math.floor((y - self.origin.y) / self.resolution)
        if 0 <= col < self.blocked.shape[1] and 0 <= row < self.blocked.shape[0]:
            return col, row
        return None

    def cell_center(self, col: int, row: int) -> tuple[float, float]:
        return (
            self.origin.x + (col + 0.5) * self.resolution,
            self.origin.y + (row + 0.5) * self.resolution,
        )


def inflate(grid: OccupancyGrid, radius: float) -> InflatedGrid:
    """Blocked = occupied, unknown, or within ``radius`` of an occupied cell.

    Distances are exact Euclidean between cell centers.
    """
    if radius < 0:
        raise ValueError("inflation radius must be >= 0")
    occ = grid.occ_mask()
    blocked = occ | ~grid.free_mask()
    if radius > 0 and occ.any():
        dist = distance_transform_edt(~occ, sampling=grid.resolution)
        blocked |= dist <= radius
    return InflatedGrid(grid.resolution, grid.origin, blocked)


@dataclass
class Path:
    waypoints: np.ndarray  # (N, 2) world coordinates of cell centers
    total_cost: float

    def __len__(self) -> int:
        return len(self.waypoints)


# (dcol, drow, step cost in resolution units)
_NEIGHBORS = (
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, SQRT2),
    (1, -1, SQRT2),
    (-1, 1, SQRT2),
    (-1, -1, SQRT2),
)


def _octile(c0: int, r0: int, c1: int, r1: int) -> float:
    dc = abs(c1 - c0)
    dr = abs(r1 - r0)
    return (dc + dr) + (SQRT2 - 2.0) * min(dc, dr)


def plan_astar(inflated: InflatedGrid, start, goal) -> Path:
    """8-connected A* with the octile heuristic.

    Ties break on smaller heuristic, then row-major cell order, so plans
    are deterministic. Costs are in meters (resolution per straight step).
    """
    sx, sy = (start.x, start.y) if isinstance(start, Pose2) else (start[0], start[1])
    s = inflated.world_to_cell(sx, sy)
    g = inflated.world_to_cell(goal[0], goal[1])
    if s is None or inflated.blocked[s[1], s[0]]:
        raise StartBlocked(f"start cell for ({sx:.2f}, {sy:.2f}) is blocked or off-map")
    if g is None or inflated.blocked[g[1], g[0]]:
        raise GoalBlocked(f"goal cell for ({goal[0]:.2f}, {goal[1]:.2f}) is blocked or off-map")
    h, w = inflated.blocked.shape
    res = inflated.resolution
    sc, sr = s
    gc, gr = g
    if s == g:
        return Path(np.array([inflated.cell_center(sc, sr)]), 0.0)
    # g/f scores in cell units (straight step 1, diagonal sqrt(2)); the
    # metric cost is recovered from step counts at the end.
    gscore = np.full((h, w), np.inf)
    came = np.full((h, w, 2), -1, dtype=np.int32)
    gscore[sr, sc] = 0.0
    h0 = _octile(sc, sr, gc, gr)
    heap = [(h0, h0, sr * w + sc, 0.0)]
    blocked = inflated.blocked
    found = False
    while heap:
        f, _, idx, gpop = heapq.heappop(heap)
        r, c = divmod(idx, w)
        if gpop > gscore[r, c] + 1e-15:
            continue  # stale entry
        if (c, r) == (gc, gr):
            found = True
            break
        gcur = gscore[r, c]
        for dc, dr, step in _NEIGHBORS:
            nc, nr = c + dc, r + dr
            if not (0 <= nc < w and 0 <= nr < h) or blocked[nr, nc]:
                continue
            ng = gcur + step
            if ng < gscore[nr, nc] - 1e-15:
                gscore[nr, nc] = ng
                came[nr, nc, 0] = c
                came[nr, nc, 1] = r
                nh = _octile(nc, nr, gc, gr)
                heapq.heappush(heap, (ng + nh, nh, nr * w + nc, ng))
    if not found:
        raise NoPath("goal is unreachable from start")
    cells = [(gc, gr)]
    c, r = gc, gr
    while (c, r) != (sc, sr):
        pc, pr = came[r, c]
        cells.append((int(pc), int(pr)))
        c, r = int(pc), int(pr)
    cells.reverse()
    n_diag = sum(
        1 for (c0, r0), (c1, r1) in zip(cells, cells[1:]) if c0 != c1 and r0 != r1
    )
    n_straight = len(cells) - 1 - n_diag
    cost = res * (n_straight + n_diag * SQRT2)
    waypoints = np.array([inflated.cell_center(c, r) for c, r in cells])
    return Path(waypoints, cost)


@dataclass(frozen=True)
class PursuitConfig:
    lookahead: float = 0.4  # m
    v_cruise: float = 0.3  # m/s


def pure_pursuit(
    pose: Pose2,
    path: Path,
    params: RobotParams,
    cfg: PursuitConfig = PursuitConfig(),
) -> Twist2:
    """Track a path: steer at the lookahead point, slow down near the end.

    A target more than 90 degrees off the heading triggers an in-place
    rotation toward it.
    """
    wp = path.waypoints
    if len(wp) == 0:
        raise ValueError("cannot pursue an empty path")
    d = np.hypot(wp[:, 0] - pose.x, wp[:, 1] - pose.y)
    nearest = int(np.argmin(d))
    target = wp[-1]
    arc = 0.0
    for i in range(nearest + 1, len(wp)):
        arc += float(np.hypot(*(wp[i] - wp[i - 1])))
        if arc >= cfg.lookahead:
            target = wp[i]
            break
    alpha = wrap_angle(math.atan2(target[1] - pose.y, target[0] - pose.x) - pose.theta)
    if abs(alpha) > math.pi / 2:
        return Twist2(0.0, math.copysign(params.max_w / 2.0, alpha))
    goal_dist = float(np.hypot(wp[-1, 0] - pose.x, wp[-1, 1] - pose.y))
    v = cfg.v_cruise * min(1.0, goal_dist / cfg.lookahead)
    v = float(np.clip(v, 0.0, params.max_v))
    curvature = 2.0 * math.sin(alpha) / cfg.lookahead
    w = float(np.clip(v * curvature, -params.max_w, params.max_w))
    return Twist2(v, w)


@dataclass(frozen=True)
class NavConfig:
    inflate_radius: float = 0.22  # body radius + margin
    goal_pos_tol: float = 0.10  # m
    goal_ang_tol: float = 0.15  # rad
    replan_deviation: float = 0.5  # m off the path before replanning
    stuck_window: float = 10.0  # s without progress before giving up
    stuck_progress: float = 0.05  # m of progress that resets the window
    max_duration: float = 600.0  # s hard cap on a navigation attempt
    pursuit: PursuitConfig = PursuitConfig()


@dataclass
class NavOutcome:
    status: str  # reached | no_path | stuck
    trajectory: list[tuple[float, Pose2]] = field(default_factory=list)
    path_length: float = 0.0
    planned_cost: float = 0.0
    detail: str = ""


def navigate(
    sim: Simulator,
    grid: OccupancyGrid,
    goal: tuple[float, float],
    cfg: NavConfig = NavConfig(),
    localize=None,
) -> NavOutcome:
    """Closed-loop drive to ``goal`` on the given map.

    ``localize`` maps the simulator state to the pose fed to the planner
    and controller; the default uses ground truth (perfect localization).
    """
    if localize is None:
        localize = lambda state: state.true_pose  # noqa: E731
    inflated = inflate(grid, cfg.inflate_radius)
    outcome = NavOutcome(status="stuck")
    pose = localize(sim.state)
    try:
        path = plan_astar(inflated, pose, goal)
    except NoPath as exc:
        return NavOutcome(status="no_path", detail=str(exc))
    except PlanError as exc:
        return NavOutcome(status="no_path", detail=str(exc))
    outcome.planned_cost = path.total_cost
    traveled = 0.0
    prev_pose = pose
    best_goal_dist = math.hypot(pose.x - goal[0], pose.y - goal[1])
    last_progress_t = sim.state.clock
    t_end = sim.state.clock + cfg.max_duration
    while sim.state.clock < t_end:
        pose = localize(sim.state)
        outcome.trajectory.append((sim.state.clock, pose))
        goal_dist = math.hypot(pose.x - goal[0], pose.y - goal[1])
        if goal_dist <= cfg.goal_pos_tol:
            outcome.status = "reached"
            break
        if goal_dist < best_goal_dist - cfg.stuck_progress:
            best_goal_dist = goal_dist
            last_progress_t = sim.state.clock
        elif sim.state.clock - last_progress_t > cfg.stuck_window:
            outcome.status = "stuck"
            outcome.detail = "no progress toward goal"
            break
        dev = float(
            np.min(np.hypot(path.waypoints[:, 0] - pose.x, path.waypoints[:, 1] - pose.y))
        )
        if dev > cfg.replan_deviation:
            try:
                path = plan_astar(inflated, pose, goal)
            except PlanError as exc:
                outcome.status = "no_path"
                outcome.detail = f"replan failed: {exc}"
                break
        cmd = pure_pursuit(pose, path, sim.params, cfg.pursuit)
        sim.step(cmd)
        new_pose = localize(sim.state)
        traveled += math.hypot(new_pose.x - prev_pose.x, new_pose.y - prev_pose.y)
        prev_pose = new_pose
    outcome.path_length = traveled
    return outcome

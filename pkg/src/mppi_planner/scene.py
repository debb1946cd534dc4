"""Obstacle and reference-path models.

Obstacles are oriented rectangles decomposed into covering circles so that
point-to-obstacle clearance reduces to center distance minus radius. Dynamic
obstacles are extrapolated at constant velocity. The reference path is a
waypoint polyline carrying per-point reference yaw and speed plus a target
point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CircleObstacle:
    cx: float
    cy: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError(f"circle radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class ObstacleTrack:
    """Oriented rectangular footprint with an optional constant velocity."""

    cx: float
    cy: float
    yaw: float
    length: float
    width: float
    vx: float = 0.0
    vy: float = 0.0
    kind: str = "static"

    def __post_init__(self):
        if self.width <= 0.0 or self.length < self.width:
            raise ValueError(
                f"footprint needs length >= width > 0, got {self.length} x {self.width}"
            )
        if self.kind not in ("static", "moving"):
            raise ValueError(f"unknown obstacle kind {self.kind!r}")

    @property
    def velocity(self) -> np.ndarray:
        if self.kind == "static":
            return np.zeros(2)
        return np.array([self.vx, self.vy], dtype=float)


@dataclass(eq=False)
class ReferencePath:
    """Waypoints as an (N, 4) array of [x, y, ref_yaw, ref_speed] plus a target point."""

    waypoints: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=float)
        self.target = np.asarray(self.target, dtype=float).reshape(2)
        if self.waypoints.ndim != 2 or self.waypoints.shape[1] != 4:
            raise ValueError("waypoints must be an (N, 4) array of [x, y, yaw, speed]")
        if self.waypoints.shape[0] < 2:
            raise ValueError("a reference path needs at least 2 waypoints")
        steps = np.diff(self.waypoints[:, :2], axis=0)
        if np.any(np.all(steps == 0.0, axis=1)):
            raise ValueError("consecutive waypoints must be distinct")
        if np.any(self.waypoints[:, 3] < 0.0):
            raise ValueError("reference speeds must be non-negative")

    @property
    def xy(self) -> np.ndarray:
        return self.waypoints[:, :2]

    @property
    def yaws(self) -> np.ndarray:
        return self.waypoints[:, 2]

    @property
    def speeds(self) -> np.ndarray:
        return self.waypoints[:, 3]

    def arc_lengths(self) -> np.ndarray:
        """Cumulative arc length at each waypoint, starting at 0."""
        seg = np.linalg.norm(np.diff(self.xy, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(seg)])


def decompose(track: ObstacleTrack, margin: float = 0.0) -> list[CircleObstacle]:
    """Cover a rectangular footprint with circles along its major axis.

    Uses max(1, ceil(length/width)) circles whose segment centers tile the
    length; each radius is the segment half-diagonal plus the inflation
    margin, so the circles always cover the rectangle.
    """
    if margin < 0.0:
        raise ValueError(f"margin must be non-negative, got {margin}")
    n = max(1, math.ceil(track.length / track.width))
    seg = track.length / n
    radius = math.hypot(seg / 2.0, track.width / 2.0) + margin
    cos_y, sin_y = math.cos(track.yaw), math.sin(track.yaw)
    circles = []
    for k in range(n):
        off = -track.length / 2.0 + (k + 0.5) * seg
        circles.append(
            CircleObstacle(track.cx + off * cos_y, track.cy + off * sin_y, radius)
        )
    return circles


def predict(track: ObstacleTrack, t: float, margin: float = 0.0) -> list[CircleObstacle]:
    """Circle decomposition at time t under constant-velocity extrapolation."""
    if t < 0.0:
        raise ValueError(f"prediction time must be non-negative, got {t}")
    circles = decompose(track, margin)
    vx, vy = track.velocity
    if vx == 0.0 and vy == 0.0:
        return circles
    return [CircleObstacle(c.cx + vx * t, c.cy + vy * t, c.radius) for c in circles]


def closest_waypoint(path: ReferencePath, p) -> tuple[np.ndarray, float, float]:
    """Nearest waypoint to p by Euclidean distance; ties break to the lowest index."""
    p = np.asarray(p, dtype=float)
    d2 = (path.waypoints[:, 0] - p[0]) ** 2 + (path.waypoints[:, 1] - p[1]) ** 2
    i = int(np.argmin(d2))
    wp = path.waypoints[i]
    return wp[:2].copy(), float(wp[2]), float(wp[3])


def min_obstacle_distance(p, circles) -> float:
    """min over circles of (center distance - radius); +inf when there are none.

    Negative values mean penetration.
    """
    p = np.asarray(p, dtype=float)
    best = math.inf
    for c in circles:
        d = math.hypot(p[0] - c.cx, p[1] - c.cy) - c.radius
        if d < best:
            best = d
    return best


class Scene:
    """Immutable per-cycle obstacle view: decomposed circles plus their velocities."""

    def __init__(self, tracks, margin: float = 0.0):
        self.tracks = list(tracks)
        self.margin = float(margin)
        centers, radii, vels = [], [], []
        for track in self.tracks:
            vel = track.velocity
            for c in decompose(track, self.margin):
                centers.append((c.cx, c.cy))
                radii.append(c.radius)
                vels.append(vel)
        self.centers = np.array(centers, dtype=float).reshape(-1, 2)
        self.radii = np.array(radii, dtype=float)
        self.velocities = np.array(vels, dtype=float).reshape(-1, 2)

    @classmethod
    def empty(cls) -> "Scene":
        return cls([], 0.0)

    @property
    def n_circles(self) -> int:
        return self.radii.shape[0]

    def circles_at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Circle centers and radii at absolute time t."""
        return self.centers + self.velocities * t, self.radii

    def min_distance(self, p, t: float = 0.0) -> float:
        if self.n_circles == 0:
            return math.inf
        centers, radii = self.circles_at(t)
        p = np.asarray(p, dtype=float)
        d = np.hypot(centers[:, 0] - p[0], centers[:, 1] - p[1]) - radii
        return float(d.min())


class WaypointIndex:
    """Exact nearest-waypoint lookup over a uniform cell grid.

    Each cell stores every waypoint that can be nearest to some point inside
    the cell (the standard dmin + cell-diagonal bound), sorted by index so the
    lowest index wins distance ties exactly as a full argmin scan would.
    Queries outside the padded grid fall back to the full scan.
    """

    def __init__(self, path: ReferencePath, cell: float | None = None, pad: float = 12.0):
        wp = path.xy
        self.wx = wp[:, 0].copy()
        self.wy = wp[:, 1].copy()
        self.wyaw = np.ascontiguousarray(path.yaws)
        self.wspeed = np.ascontiguousarray(path.speeds)
        if cell is None:
            spacing = np.median(np.linalg.norm(np.diff(wp, axis=0), axis=1))
            cell = max(0.25, 0.5 * float(spacing))
        self.cell = float(cell)
        self.x0 = float(wp[:, 0].min() - pad)
        self.y0 = float(wp[:, 1].min() - pad)
        self.nx = int(math.ceil((wp[:, 0].max() + pad - self.x0) / self.cell)) + 1
        self.ny = int(math.ceil((wp[:, 1].max() + pad - self.y0) / self.cell)) + 1
        self._build()

    def _build(self):
        n_cells = self.nx * self.ny
        diag = self.cell * math.sqrt(2.0)
        cx = self.x0 + (np.arange(self.nx) + 0.5) * self.cell
        cy = self.y0 + (np.arange(self.ny) + 0.5) * self.cell
        cand_lists: list[np.ndarray] = []
        max_c = 1
        # row-chunked build keeps the (cells x waypoints) distance matrix small
        chunk = max(1, int(2_000_000 // max(1, self.ny * self.wx.size)))
        for i0 in range(0, self.nx, chunk):
            gx = cx[i0 : i0 + chunk]
            px = np.repeat(gx, self.ny)
            py = np.tile(cy, gx.size)
            d = np.hypot(px[:, None] - self.wx[None, :], py[:, None] - self.wy[None, :])
            dmin = d.min(axis=1)
            # 1e-9 absorbs rounding so boundary candidates are never dropped
            keep = d <= (dmin + diag + 1e-9)[:, None]
            for row in keep:
                idx = np.flatnonzero(row)
                cand_lists.append(idx)
                if idx.size > max_c:
                    max_c = idx.size
        table = np.empty((n_cells, max_c), dtype=np.int32)
        n_cand = np.empty(n_cells, dtype=np.int32)
        for k, idx in enumerate(cand_lists):
            table[k, : idx.size] = idx
            table[k, idx.size :] = idx[0]  # pad with a duplicate; never wins a tie
            n_cand[k] = idx.size
        self.table = table
        self.n_cand = n_cand

    def query(self, px: np.ndarray, py: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Nearest waypoint index and squared distance for flat coordinate arrays.

        Bit-identical to a full argmin over (dx**2 + dy**2), including the
        lowest-index tie rule. Cells with a single candidate take a direct
        path; points outside the padded grid fall back to the full scan.
        """
        px = np.ascontiguousarray(px, dtype=float).ravel()
        py = np.ascontiguousarray(py, dtype=float).ravel()
        ix = np.floor((px - self.x0) / self.cell).astype(np.int64)
        iy = np.floor((py - self.y0) / self.cell).astype(np.int64)
        inside = (ix >= 0) & (ix < self.nx) & (iy >= 0) & (iy < self.ny)
        idx = np.empty(px.size, dtype=np.int64)
        d2 = np.empty(px.size, dtype=float)
        all_inside = bool(inside.all())
        flat = ix * self.ny + iy if all_inside else (ix * self.ny + iy)[inside]
        if flat.size:
            qx = px if all_inside else px[inside]
            qy = py if all_inside else py[inside]
            single = self.n_cand[flat] == 1
            multi = ~single
            res_i = np.empty(flat.size, dtype=np.int64)
            res_d = np.empty(flat.size)
            if single.any():
                i0 = self.table[flat[single], 0]
                dx = self.wx[i0] - qx[single]
                dy = self.wy[i0] - qy[single]
                res_i[single] = i0
                res_d[single] = dx * dx + dy * dy
            if multi.any():
                cand = self.table[flat[multi]]
                dx = self.wx[cand] - qx[multi, None]
                dy = self.wy[cand] - qy[multi, None]
                dd = dx * dx + dy * dy
                j = np.argmin(dd, axis=1)
                rows = np.arange(cand.shape[0])
                res_i[multi] = cand[rows, j]
                res_d[multi] = dd[rows, j]
            if all_inside:
                idx, d2 = res_i, res_d
            else:
                idx[inside] = res_i
                d2[inside] = res_d
        if not all_inside:
            out = ~inside
            dx = self.wx[None, :] - px[out, None]
            dy = self.wy[None, :] - py[out, None]
            dd = dx * dx + dy * dy
            j = np.argmin(dd, axis=1)
            idx[out] = j
            d2[out] = dd[np.arange(j.size), j]
        return idx, d2

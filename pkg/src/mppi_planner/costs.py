"""Running and terminal cost terms for the planner.

The scenario running cost is a weighted sum of five terms: squared distance to
the closest waypoint, a backward-motion indicator against the target point,
squared wrapped yaw error, squared speed error, and a squared safe-distance
shortfall against the obstacle circles. A generic quadratic input cost with an
exploration weight is available but defaults off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import VehicleState, wrap_angle
from .scene import ReferencePath, Scene, closest_waypoint


@dataclass(frozen=True)
class CostWeights:
    w_dist: float = 15.0
    w_target: float = 7.0
    w_yaw: float = 120.0
    w_speed: float = 5.0
    w_safe: float = 25.0
    w_terminal: float = 0.0
    d_safe_c: float = 1.36
    d_safe_0: float = 11.0
    # collision-gated mode: the safe-distance cost fires only on penetration
    avoidance_gate: bool = False

    def __post_init__(self):
        for name in ("w_dist", "w_target", "w_yaw", "w_speed", "w_safe", "w_terminal"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")


def _check_psd(R: np.ndarray):
    if R.shape != (2, 2):
        raise ValueError("R must be a 2x2 matrix")
    if not np.allclose(R, R.T, atol=1e-12):
        raise ValueError("R must be symmetric")
    if np.linalg.eigvalsh(R).min() < -1e-12:
        raise ValueError("R must be positive semi-definite")


@dataclass(frozen=True)
class InputCostParams:
    R: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "R", np.asarray(self.R, dtype=float))
        _check_psd(self.R)
        if self.gamma <= 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def alpha(self) -> float:
        return (self.gamma - 1.0) / (2.0 * self.gamma)


def c_dist(p, path: ReferencePath) -> float:
    """Squared Euclidean distance to the closest waypoint."""
    p = np.asarray(p, dtype=float)
    wp, _, _ = closest_waypoint(path, p)
    dx, dy = p[0] - wp[0], p[1] - wp[1]
    return dx * dx + dy * dy


def c_target(p, p_prev, target) -> float:
    """1.0 if p moved strictly farther from the target than p_prev, else 0.0.

    Compared on squared distances, which is equivalent for non-negative norms.
    """
    p = np.asarray(p, dtype=float)
    p_prev = np.asarray(p_prev, dtype=float)
    target = np.asarray(target, dtype=float)
    d_now = (p[0] - target[0]) ** 2 + (p[1] - target[1]) ** 2
    d_prev = (p_prev[0] - target[0]) ** 2 + (p_prev[1] - target[1]) ** 2
    return 1.0 if d_now > d_prev else 0.0


def c_yaw(theta: float, theta_ref: float) -> float:
    """Squared yaw error with the difference wrapped into [-pi, pi]."""
    e = wrap_angle(theta - theta_ref)
    return e * e


def c_speed(v: float, v_ref: float) -> float:
    e = v - v_ref
    return e * e


def safe_distance_shortfall(d_obj, v, weights: CostWeights):
    """max(d_safe - d_obj, 0)^2 with d_safe = d_safe_c * v + d_safe_0.

    Works on scalars or arrays. In gated mode the cost is nonzero only while
    penetrating (d_obj <= 0).
    """
    d_safe = weights.d_safe_c * v + weights.d_safe_0
    short = np.maximum(d_safe - d_obj, 0.0)
    cost = short * short
    if weights.avoidance_gate:
        cost = np.where(d_obj <= 0.0, cost, 0.0)
    return cost


def c_safe_dist(p, v: float, circles, weights: CostWeights) -> float:
    p = np.asarray(p, dtype=float)
    d_obj = math.inf
    for c in circles:
        d = math.hypot(p[0] - c.cx, p[1] - c.cy) - c.radius
        if d < d_obj:
            d_obj = d
    return float(safe_distance_shortfall(d_obj, v, weights))


def running_state_cost(
    state: VehicleState,
    prev: VehicleState,
    scene: Scene,
    path: ReferencePath,
    weights: CostWeights,
    t: float = 0.0,
) -> float:
    """Weighted sum of the five scenario terms at horizon time t.

    Reference yaw and speed come from the closest waypoint; obstacle circles
    are extrapolated to t before the clearance test.
    """
    p = (state.x, state.y)
    wp, theta_ref, v_ref = closest_waypoint(path, p)
    dx, dy = state.x - wp[0], state.y - wp[1]
    dist_term = dx * dx + dy * dy
    target_term = c_target(p, (prev.x, prev.y), path.target)
    yaw_term = c_yaw(state.theta, theta_ref)
    speed_term = c_speed(state.v, v_ref)
    if scene.n_circles:
        centers, radii = scene.circles_at(t)
        d = np.hypot(centers[:, 0] - state.x, centers[:, 1] - state.y) - radii
        safe_term = float(safe_distance_shortfall(float(d.min()), state.v, weights))
    else:
        safe_term = 0.0
    return (
        weights.w_dist * dist_term
        + weights.w_target * target_term
        + weights.w_yaw * yaw_term
        + weights.w_speed * speed_term
        + weights.w_safe * safe_term
    )


def input_cost(u, eps, params: InputCostParams) -> float:
    """alpha * eps'Ru + u'R eps + 0.5 * u'Ru."""
    u = np.asarray(u, dtype=float)
    eps = np.asarray(eps, dtype=float)
    R = params.R
    return float(params.alpha * (eps @ R @ u) + u @ R @ eps + 0.5 * (u @ R @ u))


def terminal_cost(state: VehicleState, target, weights: CostWeights) -> float:
    """w_terminal * squared distance from the final position to the target point."""
    target = np.asarray(target, dtype=float)
    dx, dy = state.x - target[0], state.y - target[1]
    return weights.w_terminal * (dx * dx + dy * dy)

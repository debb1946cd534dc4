"""Sampling-based MPPI planning cycle.

Each cycle draws Gaussian input perturbations around a warm-started nominal
sequence, simulates and scores all rollouts, updates the nominal by
exponentially weighted averaging of the perturbations, smooths the result with
a fixed Savitzky-Golay kernel, re-simulates the optimal trajectory, and shifts
the sequence one step for the next cycle.

Rollout evaluation is split into a fixed block partition so results are
bit-identical for any worker count; blocks only change which thread computes
them, never the arrays themselves.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import rollout_block
from .costs import CostWeights, InputCostParams
from .dynamics import ControlInput, VehicleParams, VehicleState, step
from .scene import ReferencePath, Scene, WaypointIndex

# number of evaluation blocks is fixed (not tied to worker count) so that
# parallel schedules can never change floating-point results
_N_BLOCKS = 4


class PlannerFault(RuntimeError):
    """Raised when a cycle produces non-finite rollout costs."""


def default_sg_coeffs() -> tuple[float, ...]:
    """5-point quadratic Savitzky-Golay kernel (-3, 12, 17, 12, -3)/35."""
    return tuple(c / 35.0 for c in (-3.0, 12.0, 17.0, 12.0, -3.0))


@dataclass(frozen=True)
class PlannerConfig:
    """Planner parameters; speeds are in m/s internally."""

    M: int = 2560
    T: int = 16
    dt: float = 0.25
    lambda_: float = 150.0
    sigma_omega: float = 0.05
    sigma_a: float = 0.85
    omega_max: float = 0.11
    a_max: float = 1.1
    a_min: float = -2.5
    v_goal: float = 30.0 / 3.6
    seed: int = 0
    sg_coeffs: tuple[float, ...] = field(default_factory=default_sg_coeffs)
    workers: int = 1

    def __post_init__(self):
        if self.M < 1 or self.T < 1:
            raise ValueError("M and T must be at least 1")
        if self.lambda_ <= 0.0:
            raise ValueError("lambda must be positive")
        if self.sigma_omega <= 0.0 or self.sigma_a <= 0.0:
            raise ValueError("noise sigmas must be positive")
        if not (self.a_min < 0.0 < self.a_max):
            raise ValueError("need a_min < 0 < a_max")
        if self.omega_max <= 0.0 or self.v_goal <= 0.0:
            raise ValueError("omega_max and v_goal must be positive")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if len(self.sg_coeffs) % 2 != 1:
            raise ValueError("sg_coeffs must have odd length")
        if abs(sum(self.sg_coeffs) - 1.0) > 1e-9:
            raise ValueError("sg_coeffs must sum to 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @property
    def input_low(self) -> np.ndarray:
        return np.array([self.a_min, -self.omega_max])

    @property
    def input_high(self) -> np.ndarray:
        return np.array([self.a_max, self.omega_max])


@dataclass
class RolloutBatch:
    """Box-clamped perturbations, per-rollout cost-to-go, and optional trajectories."""

    noise: np.ndarray  # (M, T, 2), clamped so nominal + noise stays in the input box
    costs: np.ndarray  # (M,)
    states: np.ndarray | None = None  # (T+1, M, 5) when retained


@dataclass
class PlannedTrajectory:
    """Optimal states/inputs of one cycle.

    states[t+1] re-simulates exactly from states[t] and inputs[t] via the
    scalar bicycle step. cycle_cost is the batch minimum cost-to-go.
    """

    states: np.ndarray  # (T+1, 5)
    inputs: np.ndarray  # (T, 2) of [a, omega]
    cycle_cost: float
    compute_time_ms: float


def _draw_noise(rng: np.random.Generator, nominal: np.ndarray, config: PlannerConfig):
    """Draw (M, T, 2) Gaussian perturbations; returns (raw, box-clamped) pairs.

    The clamped perturbation is (nominal + raw) clipped into the input box,
    minus the nominal: the perturbation the rollout actually executes. The raw
    draw is kept for the input update, which averages the generated noise.
    """
    raw = rng.standard_normal((config.M, config.T, 2))
    raw[:, :, 0] *= config.sigma_a
    raw[:, :, 1] *= config.sigma_omega
    clipped = np.clip(nominal[None, :, :] + raw, config.input_low, config.input_high)
    return raw, clipped - nominal[None, :, :]


def sample_noise(rng: np.random.Generator, nominal: np.ndarray, config: PlannerConfig) -> np.ndarray:
    """Draw (M, T, 2) perturbations and clamp (nominal + eps) into the input box.

    The stored perturbation is the clamped value minus the nominal, i.e. the
    perturbation the rollout executes.
    """
    return _draw_noise(rng, nominal, config)[1]


def update_inputs(
    nominal: np.ndarray,
    costs: np.ndarray,
    noise: np.ndarray,
    lambda_: float,
    bounds: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Exponentially weighted perturbation average around the minimum cost.

    One weight per rollout, derived from its whole-trajectory cost-to-go,
    applied to all of its steps. Subtracting the batch minimum keeps the
    exponentials in range without changing the weighting.
    """
    costs = np.asarray(costs, dtype=float)
    w = np.exp(-(costs - costs.min()) / lambda_)
    updated = nominal + np.sum(w[:, None, None] * noise, axis=0) / w.sum()
    if bounds is not None:
        updated = np.clip(updated, bounds[0], bounds[1])
    return updated


def smooth(
    inputs: np.ndarray,
    coeffs=None,
    bounds: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Apply the Savitzky-Golay kernel per channel with replicate padding.

    The sequence is extended by repeating the first and last entries, and the
    filter is evaluated in difference form (u + sum_j k_j * (u_j - u)), which
    reproduces constants and interior integer ramps bit-exactly for any
    kernel that sums to 1.
    """
    inputs = np.asarray(inputs, dtype=float)
    k = np.asarray(default_sg_coeffs() if coeffs is None else coeffs, dtype=float)
    h = k.size // 2
    T = inputs.shape[0]
    ext = np.concatenate(
        [np.repeat(inputs[:1], h, axis=0), inputs, np.repeat(inputs[-1:], h, axis=0)]
    )
    # accumulate the correction separately so symmetric terms cancel exactly
    # before it is added to the signal
    corr = np.zeros_like(inputs)
    for j in range(k.size):
        if j == h:
            continue
        corr += k[j] * (ext[j : j + T] - inputs)
    out = inputs + corr
    if bounds is not None:
        out = np.clip(out, bounds[0], bounds[1])
    return out


def shift_warm_start(inputs: np.ndarray) -> np.ndarray:
    """Drop the first input and duplicate the last for the next cycle."""
    return np.concatenate([inputs[1:], inputs[-1:]], axis=0)


def _block_slices(m: int) -> list[slice]:
    n = min(m, _N_BLOCKS)
    edges = np.linspace(0, m, n + 1).astype(int)
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


class Planner:
    """Holds configuration, cost weights, the RNG stream, and per-path caches."""

    def __init__(
        self,
        config: PlannerConfig,
        weights: CostWeights | None = None,
        vehicle: VehicleParams | None = None,
        input_cost: InputCostParams | None = None,
    ):
        self.config = config
        self.weights = weights if weights is not None else CostWeights()
        base = vehicle if vehicle is not None else VehicleParams()
        # the planner always integrates at its own step
        self.vehicle = replace(base, dt=config.dt)
        self.input_cost = input_cost if input_cost is not None else InputCostParams()
        self._rng = np.random.default_rng(config.seed)
        self._kernel = np.asarray(config.sg_coeffs, dtype=float)
        self._cached_path: ReferencePath | None = None
        self._wp_index: WaypointIndex | None = None
        self._pool: ThreadPoolExecutor | None = None

    # -- helpers ---------------------------------------------------------

    def _index_for(self, path: ReferencePath) -> WaypointIndex:
        if path is not self._cached_path:
            self._wp_index = WaypointIndex(path)
            self._cached_path = path
        return self._wp_index

    def _executor(self) -> ThreadPoolExecutor:
        if self._pool is None:
            self._pool = ThreadPoolExecutor(max_workers=self.config.workers)
        return self._pool

    def _rollout_block(
        self,
        state: VehicleState,
        nominal: np.ndarray,
        eps: np.ndarray,
        centers_t: np.ndarray,
        radii: np.ndarray,
        path: ReferencePath,
        wp_index: WaypointIndex,
        retain_states: bool,
    ):
        """Simulate and score one block of rollouts; returns (costs, states)."""
        cfg = self.config
        wts = self.weights
        icp = self.input_cost
        m = eps.shape[0]
        T = cfg.T
        X = np.empty((m, T + 1))
        Y = np.empty((m, T + 1))
        TH = np.empty((m, T + 1))
        V = np.empty((m, T + 1))
        DE = np.empty((m, T + 1))
        costs = np.empty(m)
        rollout_block(
            nominal, eps,
            state.x, state.y, state.theta, state.v, state.delta,
            cfg.dt, self.vehicle.wheelbase, self.vehicle.delta_max, cfg.a_min, cfg.v_goal,
            wp_index.wx, wp_index.wy, wp_index.wyaw, wp_index.wspeed,
            wp_index.x0, wp_index.y0, wp_index.cell, wp_index.nx, wp_index.ny,
            wp_index.table, wp_index.n_cand,
            centers_t, radii,
            wts.avoidance_gate, wts.d_safe_c, wts.d_safe_0,
            wts.w_dist, wts.w_target, wts.w_yaw, wts.w_speed, wts.w_safe, wts.w_terminal,
            path.target[0], path.target[1],
            X, Y, TH, V, DE, costs,
        )
        if np.any(icp.R):
            # generic quadratic input cost, appended per rollout when enabled
            Ru = nominal @ icp.R.T  # (T, 2)
            cross = np.einsum("mtc,tc->mt", eps, Ru)
            quad = 0.5 * float(np.einsum("tc,tc->", nominal, Ru))
            costs = costs + (icp.alpha + 1.0) * cross.sum(axis=1) + quad
        states = None
        if retain_states:
            states = np.stack([X.T, Y.T, TH.T, V.T, DE.T], axis=2)
        return costs, states

    def _resimulate(self, state: VehicleState, inputs: np.ndarray):
        """Re-run the smoothed sequence through the scalar step, capping speed.

        Returns the (T+1, 5) states and the executed inputs, adjusted where the
        target-speed cap shrank the acceleration, so that states and inputs
        re-simulate consistently through the plain bicycle step.
        """
        cfg = self.config
        T = cfg.T
        states = np.empty((T + 1, 5))
        executed = np.array(inputs, dtype=float, copy=True)
        cur = state
        states[0] = cur.as_array()
        for t in range(T):
            a = executed[t, 0]
            cap = (cfg.v_goal - cur.v) / cfg.dt
            a = max(cfg.a_min, min(a, cap))
            executed[t, 0] = a
            cur = step(cur, ControlInput(a, executed[t, 1]), self.vehicle)
            states[t + 1] = cur.as_array()
        return states, executed

    # -- the planning cycle ----------------------------------------------

    def evaluate_rollouts(
        self,
        state: VehicleState,
        nominal: np.ndarray,
        noise: np.ndarray,
        scene: Scene,
        path: ReferencePath,
        t_now: float = 0.0,
        retain_states: bool = False,
    ) -> RolloutBatch:
        """Score every rollout; raises PlannerFault on non-finite costs."""
        cfg = self.config
        wp_index = self._index_for(path)
        times = t_now + (np.arange(cfg.T) + 1) * cfg.dt
        if scene.n_circles:
            centers_t = scene.centers[None, :, :] + scene.velocities[None, :, :] * times[:, None, None]
        else:
            centers_t = np.zeros((cfg.T, 0, 2))
        radii = scene.radii

        blocks = _block_slices(cfg.M)
        args = [
            (state, nominal, noise[b], centers_t, radii, path, wp_index, retain_states)
            for b in blocks
        ]
        if cfg.workers > 1 and len(blocks) > 1:
            results = list(self._executor().map(lambda a: self._rollout_block(*a), args))
        else:
            results = [self._rollout_block(*a) for a in args]

        costs = np.concatenate([r[0] for r in results])
        states = np.concatenate([r[1] for r in results], axis=1) if retain_states else None
        if not np.isfinite(costs).all():
            raise PlannerFault("non-finite rollout cost")
        return RolloutBatch(noise=noise, costs=costs, states=states)

    def plan(
        self,
        state: VehicleState,
        scene: Scene,
        path: ReferencePath,
        warm: np.ndarray | None = None,
        t_now: float = 0.0,
    ) -> tuple[PlannedTrajectory, np.ndarray]:
        """Run one full planning cycle; returns the trajectory and shifted warm start."""
        cfg = self.config
        t0 = time.perf_counter()
        if warm is None:
            warm = np.zeros((cfg.T, 2))
        else:
            warm = np.asarray(warm, dtype=float)
            if warm.shape != (cfg.T, 2):
                raise ValueError(f"warm start must have shape ({cfg.T}, 2)")
            warm = np.clip(warm, cfg.input_low, cfg.input_high)
        raw, eps = _draw_noise(self._rng, warm, cfg)
        batch = self.evaluate_rollouts(state, warm, eps, scene, path, t_now)
        bounds = (cfg.input_low, cfg.input_high)
        # the update averages the generated noise; rollouts executed the
        # box-clamped version, and the result is re-clamped right after
        updated = update_inputs(warm, batch.costs, raw, cfg.lambda_, bounds)
        smoothed = smooth(updated, self._kernel, bounds)
        states, executed = self._resimulate(state, smoothed)
        warm_next = shift_warm_start(smoothed)
        elapsed_ms = (time.perf_counter() - t0) * 1e3
        traj = PlannedTrajectory(
            states=states,
            inputs=executed,
            cycle_cost=float(batch.costs.min()),
            compute_time_ms=elapsed_ms,
        )
        return traj, warm_next

"""Config and scenario files, trajectory CSV, and run metrics.

Config files are flat JSON whose keys mirror the planner parameter names;
speeds there are in km/h and are converted to m/s on load. All logs and CSV
output are SI.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .costs import CostWeights, InputCostParams
from .dynamics import VehicleParams, VehicleState
from .scene import ObstacleTrack, ReferencePath
from .simulator import EGO_LENGTH, EGO_WIDTH, Scenario, SimulationLog
from .planner import PlannerConfig

KMH = 1.0 / 3.6

CSV_COLUMNS = (
    "t_s",
    "x_m",
    "y_m",
    "theta_rad",
    "v_mps",
    "delta_rad",
    "a_cmd",
    "omega_cmd",
    "d_obj_m",
    "cycle_ms",
)


class ConfigError(ValueError):
    """Malformed config or scenario file; the message names the offending key."""


@dataclass
class PlannerSetup:
    config: PlannerConfig
    weights: CostWeights
    vehicle: VehicleParams
    input_cost: InputCostParams


# key -> (target section, attribute, converter)
_CONFIG_KEYS = {
    "lambda": ("config", "lambda_", float),
    "M": ("config", "M", int),
    "T": ("config", "T", int),
    "dt": ("config", "dt", float),
    "sigma_omega": ("config", "sigma_omega", float),
    "sigma_a": ("config", "sigma_a", float),
    "omega_max": ("config", "omega_max", float),
    "a_max": ("config", "a_max", float),
    "a_min": ("config", "a_min", float),
    "v_goal": ("config", "v_goal", lambda v: float(v) * KMH),  # km/h in files
    "seed": ("config", "seed", int),
    "workers": ("config", "workers", int),
    "sg_coeffs": ("config", "sg_coeffs", lambda v: tuple(float(c) for c in v)),
    "w_dist": ("weights", "w_dist", float),
    "w_target": ("weights", "w_target", float),
    "w_yaw": ("weights", "w_yaw", float),
    "w_speed": ("weights", "w_speed", float),
    "w_safe": ("weights", "w_safe", float),
    "w_terminal": ("weights", "w_terminal", float),
    "d_safe_c": ("weights", "d_safe_c", float),
    "d_safe_0": ("weights", "d_safe_0", float),
    "avoidance_gate": ("weights", "avoidance_gate", bool),
    "wheelbase": ("vehicle", "wheelbase", float),
    "delta_max": ("vehicle", "delta_max", float),
    "gamma": ("input_cost", "gamma", float),
    "R": ("input_cost", "R", lambda v: np.asarray(v, dtype=float)),
}


def default_setup(seed: int = 0) -> PlannerSetup:
    return PlannerSetup(
        config=PlannerConfig(seed=seed),
        weights=CostWeights(),
        vehicle=VehicleParams(),
        input_cost=InputCostParams(),
    )


def load_config(path) -> PlannerSetup:
    """Load a flat JSON config; unknown keys or bad values raise ConfigError."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path}: invalid JSON ({e})") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path}: expected a JSON object")
    sections = {"config": {}, "weights": {}, "vehicle": {}, "input_cost": {}}
    for key, value in raw.items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key: {key!r}")
        section, attr, conv = _CONFIG_KEYS[key]
        try:
            sections[section][attr] = conv(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value for config key {key!r}: {value!r}") from e
    try:
        setup = PlannerSetup(
            config=PlannerConfig(**sections["config"]),
            weights=CostWeights(**sections["weights"]),
            vehicle=VehicleParams(**sections["vehicle"]),
            input_cost=InputCostParams(**sections["input_cost"]),
        )
    except ValueError as e:
        raise ConfigError(f"invalid config: {e}") from e
    return setup


def _state_from_dict(d: dict) -> VehicleState:
    try:
        return VehicleState(
            float(d["x"]), float(d["y"]), float(d["theta"]),
            float(d["v"]), float(d["delta"]),
        )
    except KeyError as e:
        raise ConfigError(f"state is missing key {e.args[0]!r}") from e


def load_state(path) -> VehicleState:
    return _state_from_dict(json.loads(Path(path).read_text()))


def _path_from_dict(d: dict) -> ReferencePath:
    try:
        return ReferencePath(np.asarray(d["waypoints"], dtype=float), np.asarray(d["target"], dtype=float))
    except KeyError as e:
        raise ConfigError(f"path is missing key {e.args[0]!r}") from e
    except ValueError as e:
        raise ConfigError(f"bad path: {e}") from e


def _track_from_dict(d: dict) -> ObstacleTrack:
    try:
        return ObstacleTrack(
            float(d["cx"]), float(d["cy"]), float(d.get("yaw", 0.0)),
            float(d["length"]), float(d["width"]),
            float(d.get("vx", 0.0)), float(d.get("vy", 0.0)),
            str(d.get("kind", "static")),
        )
    except KeyError as e:
        raise ConfigError(f"obstacle is missing key {e.args[0]!r}") from e
    except ValueError as e:
        raise ConfigError(f"bad obstacle: {e}") from e


def load_scene(path) -> tuple[list[ObstacleTrack], float, ReferencePath]:
    """Scene file for plan-once: reference path, obstacle tracks, circle margin."""
    raw = json.loads(Path(path).read_text())
    tracks = [_track_from_dict(t) for t in raw.get("obstacles", [])]
    margin = float(raw.get("margin", 0.0))
    if "path" not in raw:
        raise ConfigError("scene is missing key 'path'")
    return tracks, margin, _path_from_dict(raw["path"])


def load_scenario(path) -> Scenario:
    raw = json.loads(Path(path).read_text())
    for key in ("path", "initial_state", "duration"):
        if key not in raw:
            raise ConfigError(f"scenario is missing key {key!r}")
    try:
        return Scenario(
            name=str(raw.get("name", "custom")),
            path=_path_from_dict(raw["path"]),
            obstacles=[_track_from_dict(t) for t in raw.get("obstacles", [])],
            initial_state=_state_from_dict(raw["initial_state"]),
            duration=float(raw["duration"]),
            avoidance_gate=bool(raw.get("avoidance_gate", False)),
            margin=float(raw.get("margin", EGO_WIDTH / 2.0)),
            min_progress_m=float(raw.get("min_progress_m", 0.0)),
        )
    except ValueError as e:
        raise ConfigError(f"bad scenario: {e}") from e


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "name": s.name,
        "duration": s.duration,
        "avoidance_gate": s.avoidance_gate,
        "margin": s.margin,
        "min_progress_m": s.min_progress_m,
        "initial_state": {
            "x": s.initial_state.x, "y": s.initial_state.y,
            "theta": s.initial_state.theta, "v": s.initial_state.v,
            "delta": s.initial_state.delta,
        },
        "path": {
            "waypoints": s.path.waypoints.tolist(),
            "target": s.path.target.tolist(),
        },
        "obstacles": [
            {
                "cx": o.cx, "cy": o.cy, "yaw": o.yaw,
                "length": o.length, "width": o.width,
                "vx": o.vx, "vy": o.vy, "kind": o.kind,
            }
            for o in s.obstacles
        ],
    }


def write_trajectory_csv(log: SimulationLog, path) -> None:
    with open(path, "w") as f:
        f.write(",".join(CSV_COLUMNS) + "\n")
        for i in range(log.t.size):
            row = (
                log.t[i],
                log.states[i, 0], log.states[i, 1], log.states[i, 2],
                log.states[i, 3], log.states[i, 4],
                log.inputs[i, 0], log.inputs[i, 1],
                log.d_obj[i], log.cycle_ms[i],
            )
            f.write(",".join(repr(float(v)) for v in row) + "\n")


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    with open(path) as f:
        header = f.readline().strip().split(",")
        rows = [[float(v) for v in line.strip().split(",")] for line in f if line.strip()]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


@dataclass
class MetricsSummary:
    """Headline numbers for one simulation run; None marks an empty field."""

    min_d_obj: float | None
    max_speed: float
    max_abs_accel: float
    max_abs_steer: float
    mean_cycle_ms: float
    p95_cycle_ms: float
    collision: bool
    completed: bool
    final_speed: float
    progress_m: float
    overtake_clearance_m: float | None
    final_gap_m: float | None
    planner_faults: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _body_gaps(log: SimulationLog):
    """Per-tick box-to-box lateral clearance and longitudinal gap vs each track.

    Positions are transformed into each obstacle's frame; lateral clearance is
    only meaningful while the footprints overlap longitudinally.
    """
    lat_clear = math.inf
    final_gap = math.inf
    for track in log.scenario.obstacles:
        cos_y, sin_y = math.cos(track.yaw), math.sin(track.yaw)
        vel = track.velocity
        cx = track.cx + vel[0] * log.t
        cy = track.cy + vel[1] * log.t
        dx = log.states[:, 0] - cx
        dy = log.states[:, 1] - cy
        lon = dx * cos_y + dy * sin_y
        lat = -dx * sin_y + dy * cos_y
        overlap = np.abs(lon) <= (track.length + EGO_LENGTH) / 2.0
        if overlap.any():
            clear = np.abs(lat[overlap]) - (track.width + EGO_WIDTH) / 2.0
            lat_clear = min(lat_clear, float(clear.min()))
        gap_end = abs(lon[-1]) - (track.length + EGO_LENGTH) / 2.0
        final_gap = min(final_gap, float(gap_end))
    return (
        None if lat_clear is math.inf else lat_clear,
        None if final_gap is math.inf else final_gap,
    )


def summarize(log: SimulationLog) -> MetricsSummary:
    finite_d = log.d_obj[np.isfinite(log.d_obj)]
    min_d = float(finite_d.min()) if finite_d.size else None
    lat_clear, final_gap = _body_gaps(log)
    cycle = log.cycle_times if log.cycle_times.size else np.zeros(1)
    return MetricsSummary(
        min_d_obj=min_d,
        max_speed=float(log.speeds.max()),
        max_abs_accel=float(np.abs(log.inputs[:, 0]).max()),
        max_abs_steer=float(np.abs(log.states[:, 4]).max()),
        mean_cycle_ms=float(cycle.mean()),
        p95_cycle_ms=float(np.percentile(cycle, 95.0)),
        collision=log.collision,
        completed=log.completed,
        final_speed=float(log.speeds[-1]),
        progress_m=log.progress_m,
        overtake_clearance_m=lat_clear,
        final_gap_m=final_gap,
        planner_faults=log.planner_faults,
    )


def write_metrics_json(metrics: MetricsSummary, path) -> None:
    Path(path).write_text(json.dumps(metrics.to_dict(), indent=2) + "\n")

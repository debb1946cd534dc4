"""Command-line front end: simulate, plan-once, and bench subcommands.

Exit codes: 0 run completed without collision, 1 run finished but did not
complete its course, 2 usage or file errors, 3 collision.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import io as pio
from .dynamics import VehicleState
from .planner import Planner
from .scene import ReferencePath, Scene
from .simulator import BUILTIN_SCENARIOS, builtin_scenario, run

EXIT_OK = 0
EXIT_INCOMPLETE = 1
EXIT_USAGE = 2
EXIT_COLLISION = 3

BENCH_SWEEP = (320, 640, 1280, 2560)


@dataclass
class RunManifest:
    """Everything one simulate invocation needs; the seed is fixed per run."""

    scenario: str
    out_dir: str
    config_path: str | None = None
    seed: int | None = None
    replan_hz: float = 20.0
    plant_dt: float = 0.05


def _load_setup(args) -> pio.PlannerSetup:
    setup = pio.load_config(args.config) if args.config else pio.default_setup()
    if getattr(args, "seed", None) is not None:
        setup = replace(setup, config=replace(setup.config, seed=args.seed))
    return setup


def cmd_simulate(args) -> int:
    manifest = RunManifest(
        scenario=args.scenario,
        out_dir=args.out,
        config_path=args.config,
        seed=args.seed,
        replan_hz=args.hz,
        plant_dt=args.plant_dt,
    )
    setup = _load_setup(args)
    if manifest.scenario in BUILTIN_SCENARIOS:
        scenario = builtin_scenario(manifest.scenario, v_goal=setup.config.v_goal)
    elif Path(manifest.scenario).exists():
        scenario = pio.load_scenario(manifest.scenario)
    else:
        raise pio.ConfigError(
            f"unknown scenario {manifest.scenario!r}: not a built-in {BUILTIN_SCENARIOS} or a file"
        )
    log = run(
        scenario,
        setup.config,
        plant_dt=manifest.plant_dt,
        replan_hz=manifest.replan_hz,
        weights=setup.weights,
        vehicle=setup.vehicle,
        input_cost=setup.input_cost,
    )
    outdir = Path(manifest.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    pio.write_trajectory_csv(log, outdir / "trajectory.csv")
    metrics = pio.summarize(log)
    pio.write_metrics_json(metrics, outdir / "metrics.json")
    from .plots import write_plots

    write_plots(log, outdir, v_goal=setup.config.v_goal)
    print(
        f"{scenario.name}: completed={metrics.completed} collision={metrics.collision} "
        f"min_d_obj={metrics.min_d_obj} max_speed={metrics.max_speed:.3f} m/s "
        f"mean_cycle={metrics.mean_cycle_ms:.1f} ms"
    )
    if log.collision:
        return EXIT_COLLISION
    return EXIT_OK if metrics.completed else EXIT_INCOMPLETE


def cmd_plan_once(args) -> int:
    setup = _load_setup(args)
    state = pio.load_state(args.state)
    tracks, margin, path = pio.load_scene(args.scene)
    scene = Scene(tracks, margin=margin)
    planner = Planner(setup.config, setup.weights, setup.vehicle, setup.input_cost)
    traj, _ = planner.plan(state, scene, path)
    cfg = setup.config
    sys.stdout.write("t_s,x_m,y_m,theta_rad,v_mps,delta_rad,a_cmd,omega_cmd\n")
    for t in range(cfg.T):
        row = (
            (t + 1) * cfg.dt,
            traj.states[t + 1, 0], traj.states[t + 1, 1], traj.states[t + 1, 2],
            traj.states[t + 1, 3], traj.states[t + 1, 4],
            traj.inputs[t, 0], traj.inputs[t, 1],
        )
        sys.stdout.write(",".join(repr(float(v)) for v in row) + "\n")
    return EXIT_OK


def _bench_once(config, weights, vehicle, input_cost, repeats: int) -> dict:
    """Time warm-cached planning cycles on a synthetic straight-lane scene."""
    xs = np.arange(0.0, 201.0, 1.0)
    wp = np.column_stack([xs, np.zeros_like(xs), np.zeros_like(xs), np.full(xs.size, config.v_goal)])
    path = ReferencePath(wp, np.array([200.0, 0.0]))
    scene = Scene.empty()
    planner = Planner(config, weights, vehicle, input_cost)
    state = VehicleState(20.0, 0.0, 0.0, config.v_goal, 0.0)
    warm = None
    for _ in range(3):  # warm-up: caches, page faults, warm-start sequence
        _, warm = planner.plan(state, scene, path, warm)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        _, warm = planner.plan(state, scene, path, warm)
        times.append((time.perf_counter() - t0) * 1e3)
    times = np.array(times)
    return {
        "M": config.M,
        "mean_ms": float(times.mean()),
        "p95_ms": float(np.percentile(times, 95.0)),
        "rollouts_per_s": float(config.M / (times.mean() * 1e-3)),
    }


def cmd_bench(args) -> int:
    setup = _load_setup(args)
    if args.repeats < 1:
        raise pio.ConfigError("repeats must be at least 1")
    r = _bench_once(setup.config, setup.weights, setup.vehicle, setup.input_cost, args.repeats)
    print(
        f"plan cycle @ M={r['M']}, T={setup.config.T}: mean {r['mean_ms']:.2f} ms, "
        f"p95 {r['p95_ms']:.2f} ms, {r['rollouts_per_s']:.0f} rollouts/s"
    )
    print("M-sweep scaling:")
    for m in BENCH_SWEEP:
        cfg = replace(setup.config, M=m)
        r = _bench_once(cfg, setup.weights, setup.vehicle, setup.input_cost, max(3, args.repeats // 2))
        print(f"  M={m:5d}: mean {r['mean_ms']:7.2f} ms  p95 {r['p95_ms']:7.2f} ms")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mppi-planner", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write CSV/metrics/plots")
    sim.add_argument("--scenario", required=True, help="built-in name or scenario JSON file")
    sim.add_argument("--config", default=None, help="planner config JSON")
    sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--plant-dt", dest="plant_dt", type=float, default=0.05)
    sim.add_argument("--hz", type=float, default=20.0, help="replanning rate")
    sim.set_defaults(func=cmd_simulate)

    once = sub.add_parser("plan-once", help="emit a single planned trajectory as CSV")
    once.add_argument("--state", required=True, help="vehicle state JSON")
    once.add_argument("--scene", required=True, help="scene JSON (path + obstacles)")
    once.add_argument("--config", default=None)
    once.add_argument("--seed", type=int, default=None)
    once.set_defaults(func=cmd_plan_once)

    bench = sub.add_parser("bench", help="time planning cycles and the M sweep")
    bench.add_argument("--config", default=None)
    bench.add_argument("--repeats", type=int, default=20)
    bench.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except pio.ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())

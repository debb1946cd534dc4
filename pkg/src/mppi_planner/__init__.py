"""MPPI motion planner for car-like vehicles with a closed-loop simulator."""

from .costs import (
    CostWeights,
    InputCostParams,
    c_dist,
    c_safe_dist,
    c_speed,
    c_target,
    c_yaw,
    input_cost,
    running_state_cost,
    terminal_cost,
)
from .dynamics import ControlInput, VehicleParams, VehicleState, rollout, step, wrap_angle
from .planner import (
    PlannedTrajectory,
    Planner,
    PlannerConfig,
    PlannerFault,
    RolloutBatch,
    default_sg_coeffs,
    sample_noise,
    shift_warm_start,
    smooth,
    update_inputs,
)
from .scene import (
    CircleObstacle,
    ObstacleTrack,
    ReferencePath,
    Scene,
    WaypointIndex,
    closest_waypoint,
    decompose,
    min_obstacle_distance,
    predict,
)
from .simulator import (
    BUILTIN_SCENARIOS,
    Scenario,
    SimulationLog,
    builtin_scenario,
    inject_disturbance,
    run,
)

__all__ = [
    "BUILTIN_SCENARIOS",
    "CircleObstacle",
    "ControlInput",
    "CostWeights",
    "InputCostParams",
    "ObstacleTrack",
    "PlannedTrajectory",
    "Planner",
    "PlannerConfig",
    "PlannerFault",
    "ReferencePath",
    "RolloutBatch",
    "Scenario",
    "Scene",
    "SimulationLog",
    "VehicleParams",
    "VehicleState",
    "WaypointIndex",
    "builtin_scenario",
    "c_dist",
    "c_safe_dist",
    "c_speed",
    "c_target",
    "c_yaw",
    "closest_waypoint",
    "decompose",
    "default_sg_coeffs",
    "inject_disturbance",
    "input_cost",
    "min_obstacle_distance",
    "predict",
    "rollout",
    "run",
    "running_state_cost",
    "sample_noise",
    "shift_warm_start",
    "smooth",
    "step",
    "terminal_cost",
    "update_inputs",
    "wrap_angle",
]

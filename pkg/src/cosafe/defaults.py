"""Single auditable home for every run-configuration key and its default.

Each key carries its type, a one-line description, and whether the default
value is pinned by the benchmark scenario definitions ("scenario") or chosen
for this implementation ("artifact").  The flat config files the CLI reads
and writes use exactly these keys; anything else is rejected.
"""

from __future__ import annotations

from typing import NamedTuple


class KeySpec(NamedTuple):
    kind: str  # str | int | float | bool | floats | optfloat
    source: str  # "scenario" | "artifact"
    help: str


SCHEMA: dict[str, KeySpec] = {
    "example": KeySpec("str", "scenario", "system preset: second-order | unicycle"),
    "problem": KeySpec("str", "artifact", "program: clf-cbf (soft stability row) | tracking (nominal law)"),
    "seed": KeySpec("int", "artifact", "episode seed for the disturbance draw"),
    "t_final": KeySpec("float", "artifact", "episode horizon in seconds"),
    "dt_int": KeySpec("float", "artifact", "integration step"),
    "dt_ctrl": KeySpec("float", "artifact", "control update period (integer multiple of dt_int)"),
    "x0": KeySpec("floats", "artifact", "initial true state"),
    "xhat0": KeySpec("floats", "artifact", "initial estimate"),
    "kappa": KeySpec("float", "artifact", "uncertainty inflation rate"),
    "Q": KeySpec("floats", "artifact", "process noise matrix, row-major"),
    "R": KeySpec("floats", "artifact", "measurement noise matrix, row-major"),
    "P0": KeySpec("floats", "artifact", "initial uncertainty matrix, row-major"),
    "gamma": KeySpec("float", "artifact", "stability (CLF) decay rate"),
    "alpha": KeySpec("float", "artifact", "safety (CBF) rate"),
    "c1": KeySpec("scenario_float", "scenario", "confidence weight; the studies compare 0 and 1000"),
    "c2": KeySpec("float", "artifact", "stability relaxation penalty (clf-cbf program)"),
    "metric": KeySpec("str", "artifact", "confidence metric: min_eigenvalue | trace | log_determinant"),
    "control_lo": KeySpec("floats", "artifact", "control box lower corner"),
    "control_hi": KeySpec("floats", "artifact", "control box upper corner"),
    "state_lo": KeySpec("floats", "artifact", "admissible state box lower corner"),
    "state_hi": KeySpec("floats", "artifact", "admissible state box upper corner"),
    "d1": KeySpec("float", "artifact", "nominal unicycle law range gain"),
    "d2": KeySpec("float", "artifact", "nominal unicycle law bearing gain"),
    "d3": KeySpec("float", "artifact", "nominal unicycle law heading gain"),
    "goal": KeySpec("floats", "scenario", "goal position for the unicycle task"),
    "obstacle_center": KeySpec("floats", "scenario", "keep-out disc center"),
    "obstacle_radius": KeySpec("float", "scenario", "keep-out disc radius"),
    "disturbance_enabled": KeySpec("bool", "scenario", "apply the impulse disturbance"),
    "disturbance_time": KeySpec("float", "scenario", "impulse time in seconds"),
    "disturbance_coordinate": KeySpec("int", "scenario", "state coordinate the impulse hits"),
    "disturbance_lo": KeySpec("float", "scenario", "impulse sample lower bound"),
    "disturbance_hi": KeySpec("float", "scenario", "impulse sample upper bound"),
    "early_stop": KeySpec("bool", "artifact", "stop once the goal is reached with small speed"),
    "goal_tolerance": KeySpec("float", "artifact", "goal distance that counts as arrived"),
    "stop_speed": KeySpec("float", "artifact", "commanded |v| below which arrival stops the run"),
    "overshoot": KeySpec("optfloat", "artifact", "error-bound overshoot constant (>= 1), or none"),
    "decay_rate": KeySpec("optfloat", "artifact", "error-bound exponential rate, or none"),
    "error_radius": KeySpec("optfloat", "artifact", "error-bound basin radius, or none"),
    "barrier_lipschitz": KeySpec("optfloat", "artifact", "Lipschitz constant of h, or none"),
}

# The "scenario_float" kind parses as a float; the tag only marks that the
# interesting values (0 and 1000) come from the benchmark scenarios.

PRESETS: dict[str, dict] = {
    "second-order": {
        "example": "second-order",
        "problem": "clf-cbf",
        "seed": 0,
        "t_final": 10.0,
        "dt_int": 0.001,
        "dt_ctrl": 0.01,
        "x0": [-2.0, 2.2],
        "xhat0": [-2.0, 1.9],
        "kappa": 0.1,
        "Q": [1.0, 0.0, 0.0, 2.0],
        "R": [0.02],
        "P0": [1.0, 0.0, 0.0, 6.0],
        "gamma": 1.0,
        "alpha": 5.0,
        "c1": 0.0,
        "c2": 100.0,
        "metric": "min_eigenvalue",
        "control_lo": [-25.0],
        "control_hi": [25.0],
        "state_lo": [-6.0, -6.0],
        "state_hi": [6.0, 6.0],
        "d1": 1.0,
        "d2": 2.0,
        "d3": 1.0,
        "goal": [6.0, 6.0],
        "obstacle_center": [5.3, 4.0],
        "obstacle_radius": 1.1,
        "disturbance_enabled": False,
        "disturbance_time": 1.0,
        "disturbance_coordinate": 1,
        "disturbance_lo": -0.5,
        "disturbance_hi": 0.5,
        "early_stop": False,
        "goal_tolerance": 0.05,
        "stop_speed": 0.1,
        "overshoot": 1.0,
        "decay_rate": 1.0,
        "error_radius": 1.5,
        "barrier_lipschitz": 1.2,
    },
    "unicycle": {
        "example": "unicycle",
        "problem": "tracking",
        "seed": 0,
        "t_final": 15.0,
        "dt_int": 0.001,
        "dt_ctrl": 0.01,
        "x0": [0.0, 0.0, 0.0],
        "xhat0": [0.0, 0.0, 0.0],
        "kappa": 0.1,
        "Q": [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        "R": [0.1, 0.0, 0.0, 0.1],
        "P0": [0.5, 0.0, 0.0, 0.0, 0.5, 0.45, 0.0, 0.45, 1.0],
        "gamma": 1.0,
        "alpha": 1.0,
        "c1": 0.0,
        "c2": 100.0,
        "metric": "min_eigenvalue",
        "control_lo": [-12.0, -15.0],
        "control_hi": [12.0, 15.0],
        "state_lo": [-3.0, -3.0, -12.0],
        "state_hi": [9.0, 9.0, 12.0],
        "d1": 1.0,
        "d2": 2.0,
        "d3": 1.0,
        "goal": [6.0, 6.0],
        "obstacle_center": [5.3, 4.0],
        "obstacle_radius": 1.1,
        "disturbance_enabled": True,
        "disturbance_time": 1.0,
        "disturbance_coordinate": 2,
        "disturbance_lo": -0.5,
        "disturbance_hi": 0.5,
        "early_stop": True,
        "goal_tolerance": 0.05,
        "stop_speed": 0.1,
        "overshoot": 1.0,
        "decay_rate": 1.0,
        "error_radius": 1.0,
        "barrier_lipschitz": 20.0,
    },
}

OUTPUT_ROOT_ENV = "COSAFE_OUT_ROOT"

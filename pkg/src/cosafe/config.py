"""Flat key-value run configuration: parse, resolve, serialize, build.

Files look like

    example = unicycle          # system preset
    c1 = 1000.0
    Q = 1,0,0, 0,1,0, 0,0,1     # row-major

Resolution starts from the example preset, applies file values, then
programmatic overrides; every key always ends up with a value, unknown keys
are rejected by name, and serialize(resolve(...)) round-trips losslessly
(floats are written with 17 significant digits).
"""

from __future__ import annotations

import hashlib

import numpy as np

from .controller import ConfidenceMetric, SolverWeights
from .defaults import PRESETS, SCHEMA
from .errors import ConfigError
from .observer import ObserverConfig
from .safety import (ErrorBoundConstants, SafetySpec, StabilitySpec,
                     obstacle_cbf, second_order_cbf, second_order_clf)
from .sim import (PROBLEM_CLF_CBF, PROBLEM_TRACKING, DisturbanceSpec,
                  EpisodeConfig)
from .systems import UnicycleGains, second_order_system, unicycle_system


def _parse_scalar(key: str, kind: str, text: str):
    text = text.strip()
    try:
        if kind == "str":
            return text
        if kind == "int":
            return int(text)
        if kind in ("float", "scenario_float"):
            return float(text)
        if kind == "bool":
            if text.lower() in ("true", "1", "yes"):
                return True
            if text.lower() in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if kind == "floats":
            return [float(part) for part in text.split(",") if part.strip() != ""]
        if kind == "optfloat":
            if text.lower() == "none":
                return None
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse value for key '{key}': {text!r}") from exc
    raise ConfigError(f"unknown kind {kind!r} for key '{key}'")


def _format_float(value: float) -> str:
    return f"{value:.17g}"


def _format_value(kind: str, value) -> str:
    if kind == "str":
        return str(value)
    if kind == "int":
        return str(int(value))
    if kind in ("float", "scenario_float"):
        return _format_float(float(value))
    if kind == "bool":
        return "true" if value else "false"
    if kind == "floats":
        return ", ".join(_format_float(float(v)) for v in value)
    if kind == "optfloat":
        return "none" if value is None else _format_float(float(value))
    raise ConfigError(f"unknown kind {kind!r}")


def parse_config_text(text: str) -> dict:
    """Parse flat 'key = value' lines with '#' comments into typed values."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        values[key] = _parse_scalar(key, SCHEMA[key].kind, value)
    return values


def parse_config_file(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return parse_config_text(handle.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc


def resolve_config(file_values: dict | None = None,
                   overrides: dict | None = None,
                   example: str | None = None) -> dict:
    """Preset -> file -> overrides, returning a complete typed config dict."""
    file_values = dict(file_values or {})
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    name = overrides.get("example") or file_values.get("example") or example
    if name is None:
        raise ConfigError("no example selected (key 'example' or --example)")
    if name not in PRESETS:
        raise ConfigError(f"unknown example '{name}'; expected one of "
                          f"{sorted(PRESETS)}")
    resolved = dict(PRESETS[name])
    for key, value in file_values.items():
        resolved[key] = value
    for key, value in overrides.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown override key '{key}'")
        resolved[key] = value
    resolved["example"] = name
    return resolved


def serialize_config(resolved: dict) -> str:
    lines = ["# resolved run configuration"]
    for key, spec in SCHEMA.items():
        lines.append(f"{key} = {_format_value(spec.kind, resolved[key])}")
    return "\n".join(lines) + "\n"


def config_hash(resolved: dict) -> str:
    return hashlib.sha256(serialize_config(resolved).encode("utf-8")).hexdigest()


def _matrix(resolved: dict, key: str, dim: int) -> np.ndarray:
    flat = np.asarray(resolved[key], dtype=np.float64)
    if flat.size != dim * dim:
        raise ConfigError(f"key '{key}' must have {dim * dim} entries "
                          f"(row-major {dim}x{dim}), got {flat.size}")
    return flat.reshape(dim, dim)


def _vector(resolved: dict, key: str, dim: int) -> np.ndarray:
    vec = np.asarray(resolved[key], dtype=np.float64)
    if vec.size != dim:
        raise ConfigError(f"key '{key}' must have {dim} entries, got {vec.size}")
    return vec


def build_error_constants(resolved: dict) -> ErrorBoundConstants | None:
    keys = ("overshoot", "decay_rate", "error_radius", "barrier_lipschitz")
    values = [resolved[k] for k in keys]
    if any(v is None for v in values):
        return None
    try:
        return ErrorBoundConstants(*[float(v) for v in values])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_safety_spec(resolved: dict) -> SafetySpec:
    if resolved["example"] == "second-order":
        return second_order_cbf(alpha=float(resolved["alpha"]))
    center = _vector(resolved, "obstacle_center", 2)
    return obstacle_cbf(center, float(resolved["obstacle_radius"]),
                        alpha=float(resolved["alpha"]))


def build_episode_config(resolved: dict) -> EpisodeConfig:
    """Turn a resolved config dict into the runnable episode description."""
    example = resolved["example"]
    if example == "second-order":
        model = second_order_system()
    elif example == "unicycle":
        model = unicycle_system()
    else:
        raise ConfigError(f"unknown example '{example}'")

    problem = resolved["problem"]
    if problem not in (PROBLEM_CLF_CBF, PROBLEM_TRACKING):
        raise ConfigError(f"unknown problem '{problem}'")
    if problem == PROBLEM_CLF_CBF and example != "second-order":
        raise ConfigError("the clf-cbf program is defined for the "
                          "second-order example only")
    if problem == PROBLEM_TRACKING and example != "unicycle":
        raise ConfigError("the tracking program is defined for the "
                          "unicycle example only")

    stability: StabilitySpec | None = None
    gains: UnicycleGains | None = None
    try:
        if problem == PROBLEM_CLF_CBF:
            stability = second_order_clf(gamma=float(resolved["gamma"]))
        else:
            gains = UnicycleGains(d1=float(resolved["d1"]),
                                  d2=float(resolved["d2"]),
                                  d3=float(resolved["d3"]),
                                  goal=_vector(resolved, "goal", 2))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    try:
        observer = ObserverConfig(kappa=float(resolved["kappa"]),
                                  Q=_matrix(resolved, "Q", model.n_x),
                                  R=_matrix(resolved, "R", model.n_z),
                                  P0=_matrix(resolved, "P0", model.n_x))
        weights = SolverWeights(c1=float(resolved["c1"]),
                                c2=float(resolved["c2"]),
                                dt_ctrl=float(resolved["dt_ctrl"]))
        metric = ConfidenceMetric(resolved["metric"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    control_box = np.stack([_vector(resolved, "control_lo", model.n_u),
                            _vector(resolved, "control_hi", model.n_u)], axis=1)
    state_box = np.stack([_vector(resolved, "state_lo", model.n_x),
                          _vector(resolved, "state_hi", model.n_x)], axis=1)

    disturbance = None
    if resolved["disturbance_enabled"]:
        coord = int(resolved["disturbance_coordinate"])
        if not 0 <= coord < model.n_x:
            raise ConfigError("disturbance_coordinate out of range")
        try:
            disturbance = DisturbanceSpec(time=float(resolved["disturbance_time"]),
                                          coordinate=coord,
                                          low=float(resolved["disturbance_lo"]),
                                          high=float(resolved["disturbance_hi"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    try:
        return EpisodeConfig(
            example=example, model=model, problem=problem,
            x0=_vector(resolved, "x0", model.n_x),
            xhat0=_vector(resolved, "xhat0", model.n_x),
            t_final=float(resolved["t_final"]),
            dt_int=float(resolved["dt_int"]),
            dt_ctrl=float(resolved["dt_ctrl"]),
            observer=observer, safety=build_safety_spec(resolved),
            weights=weights, control_box=control_box, state_box=state_box,
            metric=metric, stability=stability, gains=gains,
            disturbance=disturbance, seed=int(resolved["seed"]),
            early_stop=bool(resolved["early_stop"]),
            goal_tolerance=float(resolved["goal_tolerance"]),
            stop_speed=float(resolved["stop_speed"]),
            config_hash=config_hash(resolved))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

"""Run-directory serialization: trajectory CSV, metrics file, comparisons.

A run directory contains trajectory.csv, metrics.txt, and config.resolved.
The CSV starts with '#'-prefixed metadata lines (seed, config hash,
disturbance sample, artifact version), then a header row, then one row per
integration boundary.  Floats are written with 17 significant digits so a
round trip through text is exact, which is what makes rerun determinism
checkable byte for byte.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import __version__
from .sim import EpisodeLog


def _fmt(value: float) -> str:
    v = float(value)
    if v == 0.0:
        v = 0.0  # drop the sign of negative zero
    return f"{v:.17g}"


def trajectory_columns(n_x: int, n_u: int) -> list[str]:
    cols = ["t"]
    cols += [f"x{i}" for i in range(n_x)]
    cols += [f"xhat{i}" for i in range(n_x)]
    cols += [f"u{k}" for k in range(n_u)]
    cols.append("delta")
    cols += [f"eigP_{i}" for i in range(n_x)]
    cols += ["h_true", "h_hat", "V_true", "metric_value", "solver_status",
             "solver_iters"]
    return cols


def write_trajectory_csv(log: EpisodeLog, path) -> None:
    n_rows = log.t.shape[0]
    n_x = log.x_true.shape[1]
    n_u = log.u.shape[1]
    sample = "none" if log.disturbance_sample is None else _fmt(log.disturbance_sample)
    lines = [
        f"# seed = {log.seed}",
        f"# config_hash = {log.config_hash}",
        f"# disturbance_sample = {sample}",
        f"# artifact_version = {__version__}",
        ",".join(trajectory_columns(n_x, n_u)),
    ]
    for r in range(n_rows):
        parts = [_fmt(log.t[r])]
        parts += [_fmt(v) for v in log.x_true[r]]
        parts += [_fmt(v) for v in log.x_hat[r]]
        parts += [_fmt(v) for v in log.u[r]]
        parts.append(_fmt(log.delta[r]))
        parts += [_fmt(v) for v in log.eig_p[r]]
        parts += [_fmt(log.h_true[r]), _fmt(log.h_hat[r]), _fmt(log.v_true[r]),
                  _fmt(log.metric_value[r]), str(log.solver_status[r]),
                  str(int(log.solver_iters[r]))]
        lines.append(",".join(parts))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trajectory_csv(path) -> dict:
    """Parse a trajectory.csv back into metadata and typed columns."""
    metadata: dict = {}
    header: list[str] | None = None
    rows: list[list[str]] = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            metadata[key.strip()] = value.strip()
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append(line.split(","))
    if header is None:
        raise ValueError(f"{path}: no header row found")
    columns: dict = {}
    for j, name in enumerate(header):
        values = [row[j] for row in rows]
        if name == "solver_status":
            columns[name] = values
        elif name == "solver_iters":
            columns[name] = np.array([int(v) for v in values], dtype=np.int64)
        else:
            columns[name] = np.array([float(v) for v in values])
    return {"metadata": metadata, "columns": header, "data": columns}


def format_metrics(metrics: dict) -> str:
    lines = []
    for key, value in metrics.items():
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = _fmt(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def write_metrics(metrics: dict, path) -> None:
    Path(path).write_text(format_metrics(metrics), encoding="utf-8")


COMPARISON_COLUMNS = ["run", "c1", "seed", "status", "min_h_true",
                      "final_est_error", "final_eig_p_max", "max_u_inf",
                      "goal_reached"]


def write_comparison_csv(rows: list[dict], path) -> None:
    lines = [",".join(COMPARISON_COLUMNS)]
    for row in rows:
        parts = []
        for col in COMPARISON_COLUMNS:
            value = row.get(col)
            if isinstance(value, bool):
                parts.append("true" if value else "false")
            elif isinstance(value, float):
                parts.append(_fmt(value))
            elif value is None:
                parts.append("none")
            else:
                parts.append(str(value))
        lines.append(",".join(parts))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

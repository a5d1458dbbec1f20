"""Multi-panel figures over one or two run directories.

Four panel kinds cover the recorded quantities: a trajectory panel (phase
plane or x-y plane, with the safe-set boundary drawn in), uncertainty
eigenvalue curves, estimation-error curves, and control curves.  A figure
spec is an ordered list of panels; the default specs reproduce the five-panel
comparison layout for each worked example.  Rendering is read-only over the
run directories and writes PNG only.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from matplotlib.figure import Figure
from matplotlib.patches import Circle

from .errors import MissingColumn, SchemaMismatch
from .io import RunData, config_floats, load_run

PANEL_KINDS = ("trajectory", "eigenvalues", "errors", "controls")

_RUN_COLORS = ("tab:blue", "tab:orange")
_STATE_STYLES = ("-", "--", ":", "-.")


@dataclass(frozen=True)
class PanelSpec:
    """One panel: what to draw and, optionally, for which run or input."""

    kind: str
    run_index: int | None = None
    component: int | None = None
    title: str = ""

    def __post_init__(self):
        if self.kind not in PANEL_KINDS:
            raise ValueError(f"unknown panel kind {self.kind!r}; "
                             f"expected one of {PANEL_KINDS}")


@dataclass(frozen=True)
class FigureSpec:
    panels: tuple

    def __post_init__(self):
        panels = tuple(self.panels)
        if not panels:
            raise ValueError("a figure needs at least one panel")
        if not all(isinstance(p, PanelSpec) for p in panels):
            raise ValueError("panels must be PanelSpec instances")
        object.__setattr__(self, "panels", panels)


def default_figure_spec(example: str) -> FigureSpec:
    """The five-panel comparison layout for a worked example."""
    if example == "second-order":
        return FigureSpec(panels=(
            PanelSpec("trajectory", run_index=0),
            PanelSpec("trajectory", run_index=1),
            PanelSpec("eigenvalues"),
            PanelSpec("errors"),
            PanelSpec("controls"),
        ))
    if example == "unicycle":
        return FigureSpec(panels=(
            PanelSpec("trajectory"),
            PanelSpec("controls", component=0, title="linear velocity"),
            PanelSpec("controls", component=1, title="angular velocity"),
            PanelSpec("eigenvalues"),
            PanelSpec("errors"),
        ))
    raise ValueError(f"no default layout for example {example!r}")


def _require(table, names) -> None:
    for name in names:
        if name not in table:
            raise MissingColumn(f"{table.path} has no column '{name}'")


def _state_columns(table) -> tuple:
    states = table.matching("x")
    estimates = table.matching("xhat")
    if not states:
        raise MissingColumn(f"{table.path} has no state columns x0, x1, ...")
    return states, estimates


def _draw_trajectory(ax, runs, index) -> None:
    if index is not None:
        runs = [runs[min(index, len(runs) - 1)]]
    example = runs[0].config.get("example", "")
    for run, color in zip(runs, _RUN_COLORS):
        table = run.trajectory
        _require(table, ("x0", "x1"))
        ax.plot(table["x0"], table["x1"], color=color, label=run.label)
        if "xhat0" in table and "xhat1" in table:
            ax.plot(table["xhat0"], table["xhat1"], color=color,
                    linestyle="--", alpha=0.7, label=f"{run.label} estimate")
        ax.plot(table["x0"][:1], table["x1"][:1], color=color, marker="o",
                linestyle="none", markersize=5)
    if example == "second-order":
        # Boundary of the preset half-plane safe set, h = -x1/2 + x2 + 1/2.
        xs = np.array(ax.get_xlim())
        ax.plot(xs, 0.5 * xs - 0.5, color="tab:red", linestyle="-.",
                linewidth=1.0, label="h = 0")
        ax.set_xlim(xs)
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    elif example == "unicycle":
        config = runs[0].config
        cx, cy = config_floats(config, "obstacle_center")
        radius = float(config["obstacle_radius"])
        gx, gy = config_floats(config, "goal")
        ax.add_patch(Circle((cx, cy), radius, fill=False, color="tab:red",
                            linewidth=1.2, label="h = 0"))
        ax.plot([gx], [gy], marker="*", color="tab:green", linestyle="none",
                markersize=10, label="goal")
        # Keep the annotations in view whatever the trajectories did.
        x_lo, x_hi = ax.get_xlim()
        y_lo, y_hi = ax.get_ylim()
        ax.set_xlim(min(x_lo, cx - 1.2 * radius, gx - 0.5),
                    max(x_hi, cx + 1.2 * radius, gx + 0.5))
        ax.set_ylim(min(y_lo, cy - 1.2 * radius, gy - 0.5),
                    max(y_hi, cy + 1.2 * radius, gy + 0.5))
        ax.set_aspect("equal", adjustable="box")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    else:
        ax.set_xlabel("x0")
        ax.set_ylabel("x1")
    ax.legend(fontsize="x-small")


def _draw_eigenvalues(ax, runs) -> None:
    for run, color in zip(runs, _RUN_COLORS):
        table = run.trajectory
        _require(table, ("t",))
        names = table.matching("eigP_")
        if not names:
            raise MissingColumn(f"{table.path} has no column 'eigP_0'")
        for i, name in enumerate(names):
            ax.plot(table["t"], table[name], color=color,
                    linestyle=_STATE_STYLES[i % len(_STATE_STYLES)],
                    label=f"{run.label} eig {i}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("eigenvalues of P")
    ax.legend(fontsize="x-small")


def _draw_errors(ax, runs) -> None:
    for run, color in zip(runs, _RUN_COLORS):
        table = run.trajectory
        _require(table, ("t",))
        states, estimates = _state_columns(table)
        if len(estimates) != len(states):
            raise MissingColumn(f"{table.path} is missing estimate columns "
                                f"for some of {states}")
        for i, (xc, xhc) in enumerate(zip(states, estimates)):
            ax.plot(table["t"], np.abs(table[xc] - table[xhc]), color=color,
                    linestyle=_STATE_STYLES[i % len(_STATE_STYLES)],
                    label=f"{run.label} |x{i} - xhat{i}|")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("estimation error")
    ax.legend(fontsize="x-small")


def _draw_controls(ax, runs, component) -> None:
    for run, color in zip(runs, _RUN_COLORS):
        table = run.trajectory
        _require(table, ("t",))
        names = table.matching("u")
        if not names:
            raise MissingColumn(f"{table.path} has no column 'u0'")
        if component is not None:
            if component >= len(names):
                raise MissingColumn(
                    f"{table.path} has no column 'u{component}'")
            names = [names[component]]
        for i, name in enumerate(names):
            ax.plot(table["t"], table[name], color=color,
                    linestyle=_STATE_STYLES[i % len(_STATE_STYLES)],
                    label=f"{run.label} {name}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("control")
    ax.legend(fontsize="x-small")


def _panel_axes(fig: Figure, count: int) -> list:
    """Axes for `count` panels; five get the 3-over-2 comparison layout."""
    if count == 5:
        grid = fig.add_gridspec(2, 6)
        return [fig.add_subplot(grid[0, 0:2]), fig.add_subplot(grid[0, 2:4]),
                fig.add_subplot(grid[0, 4:6]), fig.add_subplot(grid[1, 0:3]),
                fig.add_subplot(grid[1, 3:6])]
    rows = 1 if count <= 3 else 2
    cols = -(-count // rows)
    grid = fig.add_gridspec(rows, cols)
    return [fig.add_subplot(grid[i // cols, i % cols]) for i in range(count)]


def build_figure(spec: FigureSpec, runs) -> Figure:
    """Assemble the panels over loaded runs; raises on schema problems."""
    runs = list(runs)
    if not 1 <= len(runs) <= 2:
        raise ValueError("expected one or two runs")
    if len(runs) == 2:
        first, second = runs[0].trajectory, runs[1].trajectory
        if first.columns != second.columns:
            raise SchemaMismatch(
                f"{first.path} and {second.path} disagree on columns: "
                f"{first.columns} vs {second.columns}")
    fig = Figure(figsize=(13.5, 7.5), layout="constrained")
    axes = _panel_axes(fig, len(spec.panels))
    for panel, ax in zip(spec.panels, axes):
        if panel.kind == "trajectory":
            _draw_trajectory(ax, runs, panel.run_index)
        elif panel.kind == "eigenvalues":
            _draw_eigenvalues(ax, runs)
        elif panel.kind == "errors":
            _draw_errors(ax, runs)
        else:
            _draw_controls(ax, runs, panel.component)
        if panel.title:
            ax.set_title(panel.title, fontsize="small")
        elif panel.kind == "trajectory" and panel.run_index is not None:
            target = runs[min(panel.run_index, len(runs) - 1)]
            ax.set_title(target.label, fontsize="small")
    return fig


def render_figure(spec: FigureSpec, run_dirs, out_path) -> Path:
    """Load the run directories, draw the figure, write a PNG."""
    out_path = Path(out_path)
    if out_path.suffix.lower() != ".png":
        raise ValueError(f"raster (.png) output only, got {out_path.name!r}")
    if isinstance(run_dirs, (str, Path)):
        run_dirs = [run_dirs]
    runs = [run if isinstance(run, RunData) else load_run(run)
            for run in run_dirs]
    fig = build_figure(spec, runs)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    # Drop the library's Software tag so identical inputs give identical bytes.
    fig.savefig(out_path, dpi=150, metadata={"Software": None})
    return out_path

"""Readers for the run directories written by the simulation CLI.

A run directory holds three flat files: `trajectory.csv` (commented `# key =
value` metadata lines, one header row, numeric columns plus the solver status
strings), `metrics.txt`, and `config.resolved` (both `key = value` per line).
Everything here parses those formats from scratch; this package never imports
the simulator.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MalformedRunFile, MissingColumn, MissingRunFile

RUN_FILES = ("trajectory.csv", "metrics.txt", "config.resolved")


@dataclass(frozen=True)
class TrajectoryTable:
    """Column-oriented view of one trajectory log."""

    path: Path
    metadata: dict
    columns: tuple
    length: int
    numeric: dict = field(repr=False)
    text: dict = field(repr=False)

    def __getitem__(self, name: str) -> np.ndarray:
        if name in self.numeric:
            return self.numeric[name]
        if name in self.text:
            raise MissingColumn(
                f"column '{name}' in {self.path} is not numeric")
        raise MissingColumn(f"{self.path} has no column '{name}'")

    def __contains__(self, name: str) -> bool:
        return name in self.numeric or name in self.text

    def strings(self, name: str) -> list:
        if name not in self.text:
            raise MissingColumn(f"{self.path} has no text column '{name}'")
        return self.text[name]

    def matching(self, prefix: str) -> list:
        """Numeric column names 'prefix<k>' ordered by the integer suffix."""
        found = []
        for name in self.numeric:
            if name.startswith(prefix) and name[len(prefix):].isdigit():
                found.append((int(name[len(prefix):]), name))
        return [name for _, name in sorted(found)]


def _split_key_value(line: str, path: Path) -> tuple:
    if "=" not in line:
        raise MalformedRunFile(f"{path}: expected 'key = value', got {line!r}")
    key, _, value = line.partition("=")
    return key.strip(), value.strip()


def read_key_values(path) -> dict:
    """Parse a flat `key = value` file (metrics.txt, config.resolved)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MissingRunFile(f"cannot read {path}: {exc}") from exc
    values = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, value = _split_key_value(line, path)
        values[key] = value
    return values


def read_trajectory(path) -> TrajectoryTable:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MissingRunFile(f"cannot read {path}: {exc}") from exc
    metadata = {}
    lines = text.splitlines()
    index = 0
    while index < len(lines) and lines[index].startswith("#"):
        key, value = _split_key_value(lines[index].lstrip("#").strip(), path)
        metadata[key] = value
        index += 1
    if index >= len(lines):
        raise MalformedRunFile(f"{path}: no header row")
    rows = list(csv.reader(lines[index:]))
    header = tuple(rows[0])
    if len(set(header)) != len(header) or not header:
        raise MalformedRunFile(f"{path}: bad header {header!r}")
    body = rows[1:]
    for number, row in enumerate(body, start=index + 2):
        if len(row) != len(header):
            raise MalformedRunFile(
                f"{path}: line {number} has {len(row)} fields, "
                f"expected {len(header)}")
    numeric = {}
    text_cols = {}
    for j, name in enumerate(header):
        values = [row[j] for row in body]
        try:
            numeric[name] = np.array(values, dtype=np.float64)
        except ValueError:
            text_cols[name] = values
    return TrajectoryTable(path=path, metadata=metadata, columns=header,
                           length=len(body), numeric=numeric, text=text_cols)


@dataclass(frozen=True)
class RunData:
    """One loaded run directory."""

    path: Path
    trajectory: TrajectoryTable
    metrics: dict
    config: dict

    @property
    def label(self) -> str:
        c1 = self.config.get("c1")
        return f"c1={c1}" if c1 is not None else self.path.name


def load_run(run_dir) -> RunData:
    run_dir = Path(run_dir)
    for name in RUN_FILES:
        if not (run_dir / name).is_file():
            raise MissingRunFile(f"{run_dir} has no {name}")
    return RunData(path=run_dir,
                   trajectory=read_trajectory(run_dir / "trajectory.csv"),
                   metrics=read_key_values(run_dir / "metrics.txt"),
                   config=read_key_values(run_dir / "config.resolved"))


def config_floats(config: dict, key: str) -> list:
    """A comma-separated numeric config value as a list of floats."""
    if key not in config:
        raise MissingColumn(f"config has no key '{key}'")
    return [float(part) for part in config[key].split(",")]

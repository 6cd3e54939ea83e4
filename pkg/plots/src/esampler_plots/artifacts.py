"""Readers for the frozen run-artifact schemas.

This package deliberately never imports the sampler; everything it knows
about a run comes from the files in the run directory. Schema drift is
reported with the offending column named.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class ArtifactError(Exception):
    pass


def read_positions(path) -> dict[int, np.ndarray]:
    """positions.csv -> {iteration: (n, d) array}."""
    path = Path(path)
    with open(path) as f:
        header = f.readline().rstrip("\n").split(",")
        expected_prefix = ["iteration", "particle_id"]
        if header[:2] != expected_prefix:
            raise ArtifactError(
                f"{path.name}: expected leading columns {expected_prefix}, got {header[:2]}")
        coord_cols = header[2:]
        for k, name in enumerate(coord_cols):
            if name != f"x{k}":
                raise ArtifactError(f"{path.name}: expected coordinate column 'x{k}', "
                                    f"got {name!r}")
        if not coord_cols:
            raise ArtifactError(f"{path.name}: no coordinate columns found")
        data: dict[int, list] = {}
        for ln, line in enumerate(f, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(header):
                raise ArtifactError(f"{path.name}:{ln}: row has {len(parts)} fields, "
                                    f"header has {len(header)}")
            data.setdefault(int(parts[0]), []).append([float(v) for v in parts[2:]])
    return {it: np.asarray(rows) for it, rows in data.items()}


def read_jsonl(path) -> list[dict]:
    rows = []
    with open(path) as f:
        for ln, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise ArtifactError(f"{Path(path).name}:{ln}: invalid JSON ({e})") from e
    return rows


def read_resolved_config(run_dir) -> dict:
    path = Path(run_dir) / "resolved_config.json"
    if not path.exists():
        raise ArtifactError(f"{path} is missing; is this a run directory?")
    with open(path) as f:
        return json.load(f)


def read_dataset_csv(run_dir) -> dict[str, np.ndarray]:
    """dataset.csv -> column arrays (the predator-prey record etc.)."""
    path = Path(run_dir) / "dataset.csv"
    if not path.exists():
        raise ArtifactError(f"{path} is missing; this run has no dataset")
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        cols: dict[str, list] = {name: [] for name in reader.fieldnames or []}
        for row in reader:
            for k, v in row.items():
                cols[k].append(float(v))
    return {k: np.asarray(v) for k, v in cols.items()}


class RunArtifacts:
    """Lazy view over one run directory."""

    def __init__(self, run_dir):
        self.run_dir = Path(run_dir)
        if not self.run_dir.is_dir():
            raise ArtifactError(f"{run_dir} is not a directory")
        self.config = read_resolved_config(self.run_dir)

    @property
    def target_id(self) -> str:
        return self.config["target"]["id"]

    @property
    def target_params(self) -> dict:
        return self.config["target"].get("params") or {}

    @property
    def mesh_bounds(self) -> list[tuple[float, float]]:
        return [tuple(b) for b in self.config["mesh"]["bounds"]]

    def positions(self) -> dict[int, np.ndarray]:
        return read_positions(self.run_dir / "positions.csv")

    def metrics(self) -> list[dict]:
        return read_jsonl(self.run_dir / "metrics.jsonl")

    def diagnostics(self) -> list[dict]:
        return read_jsonl(self.run_dir / "diagnostics.jsonl")

    def dataset(self) -> dict[str, np.ndarray]:
        return read_dataset_csv(self.run_dir)

    def select_snapshots(self, which) -> list[tuple[int, np.ndarray]]:
        """'first', 'last', 'first,last', 'all', or comma-separated iterations."""
        snaps = self.positions()
        order = sorted(snaps)
        if which == "all":
            picks = order
        else:
            picks = []
            for token in str(which).split(","):
                token = token.strip()
                if token == "first":
                    picks.append(order[0])
                elif token == "last":
                    picks.append(order[-1])
                else:
                    it = int(token)
                    if it not in snaps:
                        raise ArtifactError(f"snapshot {it} not in run "
                                            f"(available: {order})")
                    picks.append(it)
        return [(it, snaps[it]) for it in picks]

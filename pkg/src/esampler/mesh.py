"""Equidistant grid of fixed positive charges encoding a target density.

Grid points are the Cartesian product of per-dimension linear spacings
(endpoints included), flattened in row-major order. Charge magnitudes are
computed once from the target density and cached; they must stay
nonnegative under every mode and annealing step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import MeshError

SINGULARITY_FLOOR_FACTOR = 1e-9


class MagnitudeMode(str, Enum):
    DENSITY = "density"                      # q_max * p(x)
    NORMALIZED_DENSITY = "normalized-density"  # q_max * p(x) / max_grid p
    LOG_DENSITY_OFFSET = "log-offset"        # q_max * (log p(x) - min_grid log p)


@dataclass(frozen=True)
class ChargeMesh:
    bounds: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]
    points: np.ndarray                 # (prod(counts), d) row-major
    magnitudes: np.ndarray | None = None
    q_max: float = 1.0
    mode: MagnitudeMode | None = None

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def n_points(self) -> int:
        return int(np.prod(self.counts))

    def spacings(self) -> np.ndarray:
        return np.array([(hi - lo) / (c - 1) for (lo, hi), c in zip(self.bounds, self.counts)])

    def cell_diagonal(self) -> float:
        return float(math.sqrt((self.spacings() ** 2).sum()))

    def singularity_floor(self) -> float:
        """Distance floor used to clamp near-coincident interactions."""
        return SINGULARITY_FLOOR_FACTOR * self.cell_diagonal()

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, c) for (lo, hi), c in zip(self.bounds, self.counts)]

    def flat_index(self, multi) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.counts))

    def multi_index(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat, self.counts))


def build_grid(bounds, counts) -> ChargeMesh:
    """Mesh the box into an equidistant grid; magnitudes left unset."""
    bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
    counts = tuple(int(c) for c in counts)
    if len(bounds) != len(counts):
        raise MeshError("bounds and counts must have the same length")
    for (lo, hi), c in zip(bounds, counts):
        if c < 2:
            raise MeshError(f"need at least 2 grid points per dimension, got {c}")
        if not lo < hi:
            raise MeshError(f"degenerate bounds ({lo}, {hi})")
    axes = [np.linspace(lo, hi, c) for (lo, hi), c in zip(bounds, counts)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(counts))
    return ChargeMesh(bounds=bounds, counts=counts, points=np.ascontiguousarray(pts))


def assign_magnitudes(mesh: ChargeMesh, target, mode: MagnitudeMode | str,
                      q_max: float) -> ChargeMesh:
    """Evaluate the target on the grid and cache nonnegative charge magnitudes.

    Points the target flags invalid get magnitude exactly 0. In log-offset
    mode the grid-wide minimum log density is subtracted, so the smallest
    valid magnitude is exactly 0 and any positive rescaling of the target
    leaves the result unchanged up to q_max.
    """
    mode = MagnitudeMode(mode)
    q_max = float(q_max)
    if not q_max > 0:
        raise MeshError(f"q_max must be positive, got {q_max}")
    valid = np.asarray(target.is_valid(mesh.points), dtype=bool)
    if not valid.any():
        raise MeshError("target is invalid at every grid point")
    mag = np.zeros(mesh.n_points)
    if mode is MagnitudeMode.LOG_DENSITY_OFFSET:
        logp = np.asarray(target.log_density(mesh.points[valid]), dtype=float)
        if not np.isfinite(logp).all():
            raise MeshError("non-finite log density on valid grid points")
        mag[valid] = q_max * (logp - logp.min())
    else:
        p = np.asarray(target.density(mesh.points[valid]), dtype=float)
        if not np.isfinite(p).all():
            raise MeshError("non-finite density on valid grid points")
        if mode is MagnitudeMode.NORMALIZED_DENSITY:
            pmax = p.max()
            if pmax <= 0:
                raise MeshError("density is zero on the whole grid; cannot normalise")
            p = p / pmax
        mag[valid] = q_max * p
    if (mag < 0).any():
        raise MeshError("negative charge magnitude produced; check the target density")
    return replace(mesh, magnitudes=mag, q_max=q_max, mode=mode)


@dataclass(frozen=True)
class GeometricSchedule:
    """Per-iteration magnitude multiplier gamma**t with a floor."""
    gamma: float = 0.99
    floor: float = 0.1

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise MeshError(f"annealing gamma must be in (0, 1], got {self.gamma}")
        if not 0 < self.floor <= 1:
            raise MeshError(f"annealing floor must be in (0, 1], got {self.floor}")

    def __call__(self, t: int) -> float:
        return max(self.gamma ** t, self.floor)


def anneal_q(mesh: ChargeMesh, schedule, t: int) -> ChargeMesh:
    """View of the mesh with magnitudes scaled by schedule(t); base cache untouched."""
    if mesh.magnitudes is None:
        raise MeshError("mesh magnitudes not assigned")
    mult = float(schedule(t)) if callable(schedule) else float(schedule[t])
    if not 0 < mult <= 1:
        raise MeshError(f"annealing multiplier must be in (0, 1], got {mult}")
    return replace(mesh, magnitudes=mesh.magnitudes * mult)


def save_mesh(mesh: ChargeMesh, path, target_id: str = "") -> None:
    """Persist the mesh cache; reload reproduces magnitudes bit-exactly."""
    if mesh.magnitudes is None:
        raise MeshError("refusing to persist a mesh without magnitudes")
    np.savez(path,
             bounds=np.array(mesh.bounds),
             counts=np.array(mesh.counts),
             points=mesh.points,
             magnitudes=mesh.magnitudes,
             q_max=np.array(mesh.q_max),
             mode=np.array(str(mesh.mode.value)),
             target_id=np.array(target_id))


def load_mesh(path, expect_target_id: str | None = None) -> ChargeMesh:
    with np.load(path, allow_pickle=False) as f:
        target_id = str(f["target_id"])
        if expect_target_id is not None and target_id != expect_target_id:
            raise MeshError(f"mesh cache is for target {target_id!r}, expected {expect_target_id!r}")
        return ChargeMesh(
            bounds=tuple(map(tuple, f["bounds"])),
            counts=tuple(int(c) for c in f["counts"]),
            points=np.ascontiguousarray(f["points"]),
            magnitudes=np.ascontiguousarray(f["magnitudes"]),
            q_max=float(f["q_max"]),
            mode=MagnitudeMode(str(f["mode"])),
        )

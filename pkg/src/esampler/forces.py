"""Generalised d-dimensional electrostatic forces.

Free particles carry unit negative charge and repel each other; fixed grid
charges attract them. Both interactions follow the same inverse-power law

    F = C(d) * q1 * q2 * (x_field - x_source) / r**d

whose magnitude decays as 1/r**(d-1). ``C(d)`` is the dimension-dependent
Coulomb constant derived from the surface area of the unit hypersphere.

Two interchangeable backends compute the pairwise sums: a compiled Cython
kernel (preferred) and a pure NumPy fallback, selected at import time and
bit-identical by construction. ``active_backend()`` reports which one is in
use; benchmarks/bench_forces.py compares them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _force_fallback
from .errors import ForceAssemblyError, InvalidDimensionError, SingularityError

try:
    from . import _forcekernel

    _BACKENDS = {"compiled": _forcekernel.accumulate, "python": _force_fallback.accumulate}
    _DEFAULT_BACKEND = "compiled"
except ImportError:  # extension not built; NumPy path only
    _BACKENDS = {"python": _force_fallback.accumulate}
    _DEFAULT_BACKEND = "python"

_active = _DEFAULT_BACKEND

VACUUM_PERMITTIVITY = 8.854e-12


def active_backend() -> str:
    """Name of the accumulation backend in use ('compiled' or 'python')."""
    return _active


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def use_backend(name: str) -> None:
    """Switch the accumulation backend (mainly for tests and benchmarks)."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = name


def coulomb_constant(d: int) -> float:
    """Force-law constant Gamma(d/2) / (2 pi^(d/2) eps0) for dimension d.

    Reduces to 1/(2 eps0) in 1D, 1/(2 pi eps0) in 2D and the familiar
    1/(4 pi eps0) in 3D.
    """
    if d < 1 or int(d) != d:
        raise InvalidDimensionError(f"dimension must be a positive integer, got {d}")
    d = int(d)
    return math.gamma(d / 2) / (2 * math.pi ** (d / 2) * VACUUM_PERMITTIVITY)


def pairwise_force(source_pos, field_pos, q_source: float, q_field: float, d: int | None = None,
                   min_distance: float = 0.0) -> np.ndarray:
    """Force exerted by the charge at ``source_pos`` on the one at ``field_pos``.

    A positive charge product gives a force pointing away from the source
    (repulsion-positive convention). Raises :class:`SingularityError` on
    coincident points unless ``min_distance`` > 0, in which case the
    separation is clamped.
    """
    source_pos = np.asarray(source_pos, dtype=float)
    field_pos = np.asarray(field_pos, dtype=float)
    if d is None:
        d = source_pos.shape[-1]
    if d < 1:
        raise InvalidDimensionError(f"dimension must be >= 1, got {d}")
    diff = field_pos - source_pos
    r = math.sqrt(float(np.dot(diff, diff)))
    if r == 0.0:
        raise SingularityError("coincident source and field points")
    if r < min_distance:
        r = min_distance
    rd = r
    for _ in range(int(d) - 1):
        rd = rd * r
    return ((coulomb_constant(d) * q_source) * q_field) / rd * diff


def _accumulate(src, q_src, field, q_field, constant, min_dist, out, workers=1):
    """Dispatch one source-set accumulation to the active backend."""
    kernel = _BACKENDS[_active]
    n = field.shape[0]
    if workers <= 1 or n < 2 * workers:
        kernel(src, q_src, field, q_field, constant, min_dist, out, 0, n)
        return
    bounds = np.linspace(0, n, workers + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(kernel, src, q_src, field, q_field, constant, min_dist, out, j0, j1)
                for j0, j1 in zip(bounds[:-1], bounds[1:]) if j1 > j0]
        for f in futs:
            f.result()


def _as_positions(ensemble_or_positions) -> np.ndarray:
    pos = getattr(ensemble_or_positions, "positions", ensemble_or_positions)
    return np.ascontiguousarray(pos, dtype=float)


def repulsive_force(j: int, ensemble, neg_charges=None, min_distance: float = 0.0) -> np.ndarray:
    """Combined repulsion on particle ``j`` from all other free particles."""
    pos = _as_positions(ensemble)
    n, d = pos.shape
    q = np.ones(n) if neg_charges is None else np.asarray(neg_charges, dtype=float)
    if np.any(q <= 0):
        raise ForceAssemblyError("negative-charge magnitudes must be positive")
    out = np.zeros((1, d))
    _accumulate(pos, q, pos[j:j + 1], q[j:j + 1], coulomb_constant(d), min_distance, out)
    return out[0]


def attractive_force(j: int, ensemble, mesh, min_distance: float | None = None) -> np.ndarray:
    """Attraction on particle ``j`` from the mesh charges (grid-point overlap skipped)."""
    pos = _as_positions(ensemble)
    d = pos.shape[1]
    if min_distance is None:
        min_distance = mesh.singularity_floor()
    if np.any(mesh.magnitudes < 0):
        raise ForceAssemblyError("mesh magnitudes must be nonnegative")
    out = np.zeros((1, d))
    _accumulate(mesh.points, mesh.magnitudes, pos[j:j + 1], np.ones(1),
                coulomb_constant(d), min_distance, out)
    return -out[0]


def normalize_forces(forces: np.ndarray) -> np.ndarray:
    """Scale the whole force array so the largest per-particle norm is 1.

    An all-zero array is returned unchanged (no division).
    """
    norms = np.linalg.norm(forces, axis=-1)
    max_norm = norms.max() if norms.size else 0.0
    if max_norm == 0.0:
        return forces
    return forces / max_norm


def assemble_forces(ensemble, mesh, normalize: bool = False, neg_charges=None,
                    workers: int = 1, magnitudes=None) -> np.ndarray:
    """Net force on every free particle: repulsion plus mesh attraction.

    ``magnitudes`` overrides the mesh's cached magnitudes (annealing).
    Raises :class:`ForceAssemblyError` naming the first particle whose force
    has a non-finite component.
    """
    pos = _as_positions(ensemble)
    n, d = pos.shape
    if n == 0:
        raise ForceAssemblyError("empty ensemble")
    q = np.ones(n) if neg_charges is None else np.ascontiguousarray(neg_charges, dtype=float)
    mag = mesh.magnitudes if magnitudes is None else np.ascontiguousarray(magnitudes, dtype=float)
    if mag is None:
        raise ForceAssemblyError("mesh magnitudes have not been assigned")
    const = coulomb_constant(d)
    floor = mesh.singularity_floor()

    rep = np.zeros((n, d))
    _accumulate(pos, q, pos, q, const, floor, rep, workers=workers)
    attr = np.zeros((n, d))
    _accumulate(mesh.points, mag, pos, np.ones(n), const, floor, attr, workers=workers)
    total = rep - attr

    finite = np.isfinite(total).all(axis=1)
    if not finite.all():
        j = int(np.flatnonzero(~finite)[0])
        raise ForceAssemblyError(f"non-finite force for particle {j}")
    if normalize:
        total = normalize_forces(total)
    return total

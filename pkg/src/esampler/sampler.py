"""Main simulation loop: evolve free particles against a charged mesh.

Each iteration assembles the net force on every particle, applies the
configured update rule, optionally perturbs positions and filters moves,
and appends diagnostics to a run record. Iterations are strictly
sequential; within one iteration all per-particle work is order-free and
the draws for perturbation and move filtering come from streams derived
from (seed, iteration, purpose), so results do not depend on scheduling
and toggling one feature never shifts another's stream.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import gaussian_kde

from . import forces
from .errors import ConfigError, SummaryError
from .integrators import PerturbationPolicy, UpdateRule, apply_rule, mh_filter, perturb
from .mesh import ChargeMesh, anneal_q
from .targets import TargetDensity

OUT_OF_REGION_WARN_FRACTION = 0.25

_PURPOSE_INIT = 0
_PURPOSE_PERTURB = 1
_PURPOSE_MH = 2


@dataclass
class ParticleEnsemble:
    positions: np.ndarray               # (n, d)
    prev_disp: np.ndarray               # (n, d), zero at t=0
    in_region_mask: np.ndarray | None = None

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class InitSpec:
    kind: str = "uniform"               # "uniform" | "gaussian"
    low: Sequence[float] | None = None
    high: Sequence[float] | None = None
    mean: Sequence[float] | None = None
    std: Sequence[float] | None = None


@dataclass(frozen=True)
class SamplerConfig:
    rule: UpdateRule = field(default_factory=UpdateRule)
    iterations: int = 100
    normalize_forces: bool = True
    perturbation: PerturbationPolicy = field(default_factory=PerturbationPolicy)
    use_mh_filter: bool = False
    annealing: object | None = None     # callable t -> multiplier in (0, 1]
    init: InitSpec = field(default_factory=InitSpec)
    n_particles: int = 400
    seed: int = 0
    snapshot_stride: int = 5
    sequential_filter: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.n_particles < 1:
            raise ConfigError("need at least one particle")
        if self.snapshot_stride < 1:
            raise ConfigError("snapshot stride must be >= 1")


@dataclass
class RunRecord:
    snapshots: list[tuple[int, np.ndarray]] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)

    def snapshot_iterations(self) -> list[int]:
        return [it for it, _ in self.snapshots]

    def final_positions(self) -> np.ndarray:
        return self.snapshots[-1][1]


def _stream(seed: int, step: int, purpose: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                        spawn_key=(step, purpose)))


def initialize(config: SamplerConfig, mesh: ChargeMesh) -> ParticleEnsemble:
    """Draw the starting ensemble from the configured proposal, at rest."""
    d = mesh.dim
    spec = config.init
    rng = _stream(config.seed, 0, _PURPOSE_INIT)
    if spec.kind == "uniform":
        low = np.array([b[0] for b in mesh.bounds]) if spec.low is None else np.asarray(spec.low, float)
        high = np.array([b[1] for b in mesh.bounds]) if spec.high is None else np.asarray(spec.high, float)
        if low.shape != (d,) or high.shape != (d,):
            raise ConfigError(f"init bounds must have dimension {d}")
        pos = rng.uniform(low, high, size=(config.n_particles, d))
    elif spec.kind == "gaussian":
        mean = np.zeros(d) if spec.mean is None else np.asarray(spec.mean, float)
        std = np.ones(d) if spec.std is None else np.asarray(spec.std, float)
        if mean.shape != (d,) or std.shape != (d,):
            raise ConfigError(f"init mean/std must have dimension {d}")
        pos = rng.normal(mean, std, size=(config.n_particles, d))
    else:
        raise ConfigError(f"unknown init kind {spec.kind!r}")
    return ParticleEnsemble(positions=pos, prev_disp=np.zeros_like(pos))


def _in_region(positions: np.ndarray, mesh: ChargeMesh) -> np.ndarray:
    low = np.array([b[0] for b in mesh.bounds])
    high = np.array([b[1] for b in mesh.bounds])
    return ((positions >= low) & (positions <= high)).all(axis=1)


def filter_in_region(ensemble: ParticleEnsemble, mesh: ChargeMesh):
    """Particles with every coordinate inside the closed mesh bounds.

    Returns (positions, n_discarded); an empty result only warns.
    """
    mask = _in_region(ensemble.positions, mesh)
    kept = ensemble.positions[mask]
    discarded = int((~mask).sum())
    if kept.shape[0] == 0:
        warnings.warn("every particle is outside the mesh region", RuntimeWarning,
                      stacklevel=2)
    return kept, discarded


def run(config: SamplerConfig, mesh: ChargeMesh, target: TargetDensity | None = None):
    """Evolve the ensemble for the configured number of iterations.

    ``target`` is only needed when the move filter is on. Returns the final
    ensemble and a RunRecord with strided position snapshots (initial state
    always included, final state always last) and one diagnostics row per
    iteration.
    """
    if mesh.magnitudes is None:
        raise ConfigError("mesh magnitudes must be assigned before running")
    if config.use_mh_filter and target is None:
        raise ConfigError("the move filter requires a target density")
    ensemble = initialize(config, mesh)
    record = RunRecord()
    record.snapshots.append((0, ensemble.positions.copy()))
    warned = False
    total = config.iterations

    for t in range(total):
        tic = time.perf_counter()
        step_mesh = mesh if config.annealing is None else anneal_q(mesh, config.annealing, t)
        raw = forces.assemble_forces(ensemble.positions, step_mesh, normalize=False,
                                     workers=config.workers)
        norms = np.linalg.norm(raw, axis=1)
        f = forces.normalize_forces(raw) if config.normalize_forces else raw

        old_positions = ensemble.positions
        new_pos, new_disp = apply_rule(config.rule, old_positions, ensemble.prev_disp, f)
        if config.perturbation.enabled:
            new_pos = perturb(new_pos, config.perturbation, t,
                              _stream(config.seed, t, _PURPOSE_PERTURB))
        if config.use_mh_filter:
            filtered = mh_filter(old_positions, new_pos, target,
                                 _stream(config.seed, t, _PURPOSE_MH))
            rejected = np.any(filtered != new_pos, axis=1)
            new_disp = np.where(rejected[:, None], np.zeros_like(new_disp), new_disp)
            new_pos = filtered

        displacement = np.linalg.norm(new_pos - old_positions, axis=1)
        ensemble.positions = new_pos
        ensemble.prev_disp = new_disp

        emptied = False
        if config.sequential_filter:
            keep = _in_region(ensemble.positions, mesh)
            ensemble.positions = ensemble.positions[keep]
            ensemble.prev_disp = ensemble.prev_disp[keep]
            emptied = ensemble.n_particles == 0

        mask = _in_region(ensemble.positions, mesh)
        ensemble.in_region_mask = mask
        frac_out = 1.0 - mask.mean() if len(mask) else 1.0
        if frac_out > OUT_OF_REGION_WARN_FRACTION and not warned:
            warnings.warn(
                f"{frac_out:.0%} of particles are outside the mesh region at iteration {t}; "
                "the model or charge magnitudes may be mis-specified", RuntimeWarning,
                stacklevel=2)
            warned = True

        record.diagnostics.append({
            "iteration": t,
            "max_force_norm": float(norms.max()),
            "mean_force_norm": float(norms.mean()),
            "mean_displacement": float(displacement.mean()),
            "n_in_region": int(mask.sum()),
            "n_particles": int(ensemble.n_particles),
            "wall_time_s": time.perf_counter() - tic,
        })
        done = t + 1
        if done % config.snapshot_stride == 0 or done == total:
            record.snapshots.append((done, ensemble.positions.copy()))
        if emptied:
            warnings.warn(f"sequential filtering removed every particle at iteration {t}; "
                          "stopping early", RuntimeWarning, stacklevel=2)
            if record.snapshots[-1][0] != done:
                record.snapshots.append((done, ensemble.positions.copy()))
            break

    return ensemble, record


def marginal_summaries(positions, mesh: ChargeMesh | None = None, bins: int = 30,
                       kde_points: int = 200):
    """Per-dimension histogram and Gaussian-kernel KDE curve.

    The KDE is evaluated on a regular grid spanning the mesh bounds when a
    mesh is given, otherwise the data range.
    """
    positions = np.asarray(getattr(positions, "positions", positions), dtype=float)
    if positions.ndim != 2 or positions.shape[0] < 2:
        raise SummaryError("marginal summaries need at least 2 particles")
    out = []
    for k in range(positions.shape[1]):
        xk = positions[:, k]
        counts, edges = np.histogram(xk, bins=bins)
        if mesh is not None:
            lo, hi = mesh.bounds[k]
        else:
            lo, hi = float(xk.min()), float(xk.max())
        grid = np.linspace(lo, hi, kde_points)
        if np.ptp(xk) > 0:
            kde = gaussian_kde(xk)(grid)
        else:  # degenerate sample: all particles identical
            kde = np.zeros_like(grid)
        out.append({"histogram_counts": counts, "histogram_edges": edges,
                    "kde_grid": grid, "kde_values": kde})
    return out

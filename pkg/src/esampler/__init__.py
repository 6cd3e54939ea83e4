"""Electrostatic interacting-particle sampling and inference."""

from .forces import (active_backend, assemble_forces, coulomb_constant,
                     normalize_forces, pairwise_force)
from .integrators import PerturbationPolicy, UpdateRule
from .mesh import ChargeMesh, MagnitudeMode, assign_magnitudes, build_grid
from .sampler import InitSpec, ParticleEnsemble, RunRecord, SamplerConfig, run
from .targets import TargetDensity, build_target

__version__ = "0.1.0"

__all__ = [
    "ChargeMesh", "InitSpec", "MagnitudeMode", "ParticleEnsemble",
    "PerturbationPolicy", "RunRecord", "SamplerConfig", "TargetDensity",
    "UpdateRule", "active_backend", "assemble_forces", "assign_magnitudes",
    "build_grid", "build_target", "coulomb_constant", "normalize_forces",
    "pairwise_force", "run",
]

"""Reference samplers: random-walk Metropolis-Hastings and Langevin dynamics.

Both are desk-scale implementations used for comparison runs. The MH
chain uses symmetric Gaussian proposals, so the acceptance ratio needs no
proposal correction; the Langevin sampler evolves a particle set with the
decaying step schedule eps_t = a * (b + t)**(-c).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, TargetError
from .targets import TargetDensity


@dataclass(frozen=True)
class MHConfig:
    n_samples: int = 10000
    proposal_std: float | np.ndarray = 1.0
    init: np.ndarray | None = None
    seed: int = 0
    burn_in_fraction: float = 0.2

    def __post_init__(self):
        if np.any(np.asarray(self.proposal_std) <= 0):
            raise ConfigError("proposal_std must be positive")
        if not 0 <= self.burn_in_fraction < 1:
            raise ConfigError("burn_in_fraction must lie in [0, 1)")


@dataclass(frozen=True)
class LMCConfig:
    a: float = 0.01
    b: float = 1.0
    c: float = 0.55
    n_iterations: int = 10000
    init: np.ndarray | None = None      # (n_particles, d)
    n_particles: int = 400
    seed: int = 0

    def __post_init__(self):
        if self.a <= 0 or self.b < 0 or not 0 < self.c < 1:
            raise ConfigError("step schedule needs a > 0, b >= 0, 0 < c < 1")


def step_size(cfg: LMCConfig, t: int) -> float:
    return cfg.a * (cfg.b + t) ** (-cfg.c)


def metropolis_hastings(target: TargetDensity, cfg: MHConfig) -> np.ndarray:
    """Random-walk MH chain; burn-in removed per config, no thinning.

    Acceptance uses min(1, p(new)/p(old)) on the (possibly unnormalised)
    target density.
    """
    rng = np.random.default_rng(cfg.seed)
    d = target.dim
    x = np.zeros(d) if cfg.init is None else np.asarray(cfg.init, dtype=float)
    with np.errstate(divide="ignore"):
        lp = float(np.where(target.is_valid(x), target.log_density(x), -np.inf))
    chain = np.empty((cfg.n_samples, d))
    stuck = np.isneginf(lp)
    n_accept = 0
    for t in range(cfg.n_samples):
        prop = x + rng.normal(0.0, cfg.proposal_std, size=d)
        with np.errstate(divide="ignore"):
            lp_prop = float(np.where(target.is_valid(prop), target.log_density(prop), -np.inf))
        if np.isneginf(lp):  # dead start: accept anything evaluable
            accept = not np.isneginf(lp_prop)
        else:
            accept = np.log(rng.uniform()) < lp_prop - lp
        if accept:
            x, lp = prop, lp_prop
            n_accept += 1
        chain[t] = x
    if stuck and n_accept == 0:
        warnings.warn("chain never left a zero-density start", RuntimeWarning, stacklevel=2)
    burn = int(cfg.burn_in_fraction * cfg.n_samples)
    return chain[burn:]


def langevin_evolve(target: TargetDensity, cfg: LMCConfig):
    """Evolve particles independently through unadjusted Langevin dynamics.

    Returns (final_particles, per_iteration_record). Requires the target
    to expose a gradient.
    """
    if not target.has_gradient:
        raise TargetError(f"target {target.name!r} has no gradient; cannot run Langevin")
    rng = np.random.default_rng(cfg.seed)
    d = target.dim
    if cfg.init is None:
        x = rng.normal(size=(cfg.n_particles, d))
    else:
        x = np.asarray(cfg.init, dtype=float).copy()
    record = []
    for t in range(cfg.n_iterations):
        eps = step_size(cfg, t)
        g = target.gradient(x)
        x = x + eps * g + np.sqrt(2 * eps) * rng.normal(size=x.shape)
        record.append({"iteration": t, "eps": eps})
    return x, record

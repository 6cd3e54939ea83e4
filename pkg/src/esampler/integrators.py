"""Position-update rules: how one step of force becomes one step of motion.

Three rules are supported. The Euler rule displaces proportionally to the
force; the momentum-carrying rule adds F*dt2 to the previous displacement
and applies it in full; its damped variant applies only a fraction
tau_prime of the accumulated displacement while carrying the undamped
displacement to the next step. Step-size parameters may be scalars or
per-dimension vectors.

Also here: the periodic Gaussian position perturbation and the optional
accept/reject move filter, both driven by caller-owned RNG streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegratorError

_VARIANTS = ("euler", "verlet", "damped-verlet")


@dataclass(frozen=True)
class UpdateRule:
    variant: str = "euler"
    tau: float | np.ndarray = 0.1          # euler only
    dt2: float | np.ndarray = 0.01         # verlet variants
    tau_prime: float | np.ndarray = 1.0    # damped-verlet only

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise IntegratorError(f"unknown update rule {self.variant!r}; use one of {_VARIANTS}")
        if np.any(np.asarray(self.tau) < 0):
            raise IntegratorError("tau must be >= 0")
        if self.variant != "euler":
            if np.any(np.asarray(self.dt2) <= 0):
                raise IntegratorError("dt2 must be > 0")
        if self.variant == "damped-verlet":
            tp = np.asarray(self.tau_prime)
            if np.any(tp <= 0) or np.any(tp > 1):
                raise IntegratorError("tau_prime must lie in (0, 1]")


@dataclass(frozen=True)
class PerturbationPolicy:
    sigma: float = 0.0
    period_k: int = 1

    def __post_init__(self):
        if self.sigma < 0:
            raise IntegratorError("noise sigma must be >= 0")
        if self.period_k < 1:
            raise IntegratorError("perturbation period must be a positive integer")

    @property
    def enabled(self) -> bool:
        return self.sigma > 0


def _check_finite(*arrays):
    for a in arrays:
        if not np.isfinite(a).all():
            raise IntegratorError("non-finite input to integrator step")


def euler_step(x, force, tau):
    """x + tau * F."""
    x = np.asarray(x, dtype=float)
    force = np.asarray(force, dtype=float)
    _check_finite(x, force)
    return x + tau * force


def verlet_step(x, prev_disp, force, dt2):
    """Momentum-carrying step: new_disp = F*dt2 + prev_disp, x moves by new_disp."""
    x = np.asarray(x, dtype=float)
    prev_disp = np.asarray(prev_disp, dtype=float)
    force = np.asarray(force, dtype=float)
    _check_finite(x, prev_disp, force)
    new_disp = force * dt2 + prev_disp
    return x + new_disp, new_disp


def damped_verlet_step(x, prev_disp, force, dt2, tau_prime):
    """Like verlet_step but the position moves by tau_prime * new_disp.

    The undamped displacement is what carries over to the next step.
    """
    x = np.asarray(x, dtype=float)
    prev_disp = np.asarray(prev_disp, dtype=float)
    force = np.asarray(force, dtype=float)
    _check_finite(x, prev_disp, force)
    new_disp = force * dt2 + prev_disp
    return x + tau_prime * new_disp, new_disp


def apply_rule(rule: UpdateRule, x, prev_disp, force):
    """Dispatch one update; returns (new_x, new_prev_disp)."""
    if rule.variant == "euler":
        return euler_step(x, force, rule.tau), prev_disp
    if rule.variant == "verlet":
        return verlet_step(x, prev_disp, force, rule.dt2)
    return damped_verlet_step(x, prev_disp, force, rule.dt2, rule.tau_prime)


def perturb(x, policy: PerturbationPolicy, step_index: int, rng) -> np.ndarray:
    """Add isotropic N(0, sigma^2) noise every period_k steps; otherwise identity."""
    x = np.asarray(x, dtype=float)
    if not policy.enabled or step_index % policy.period_k != 0:
        return x
    return x + rng.normal(0.0, policy.sigma, size=x.shape)


def mh_filter(x_old, x_proposed, target, rng):
    """Keep each proposed move with probability min(1, p(new)/p(old)).

    Invalid points count as density zero. A zero-density current position
    accepts unconditionally; if both densities vanish the old position is
    kept.
    """
    x_old = np.atleast_2d(np.asarray(x_old, dtype=float))
    x_prop = np.atleast_2d(np.asarray(x_proposed, dtype=float))
    with np.errstate(divide="ignore"):
        lp_old = np.where(target.is_valid(x_old), target.log_density(x_old), -np.inf)
        lp_new = np.where(target.is_valid(x_prop), target.log_density(x_prop), -np.inf)
    accept = np.empty(len(x_old), dtype=bool)
    both_zero = np.isneginf(lp_old) & np.isneginf(lp_new)
    old_zero = np.isneginf(lp_old) & ~both_zero
    rest = ~both_zero & ~old_zero
    accept[both_zero] = False
    accept[old_zero] = True
    u = rng.uniform(size=len(x_old))
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = np.exp(np.where(rest, lp_new - lp_old, -np.inf))
    accept[rest] = u[rest] < np.minimum(1.0, ratio[rest])
    out = np.where(accept[:, None], x_prop, x_old)
    if np.asarray(x_proposed).ndim == 1:
        return out[0]
    return out

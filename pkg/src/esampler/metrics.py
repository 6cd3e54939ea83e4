"""Sample-quality metrics: squared MMD with a cubic polynomial kernel, and
average negative log density.

The MMD statistic is the biased V-statistic: both self-sums include the
diagonal, matching a plain double sum over all index pairs. Unnormalised
targets give an NLL that is only comparable within the same target.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import MetricError
from .targets import TargetDensity


@dataclass(frozen=True)
class MetricReport:
    mmd2: float | None = None
    avg_nll: float | None = None
    n_x: int = 0
    n_y: int = 0
    n_skipped: int = 0
    runtime_s: float = 0.0

    def to_dict(self) -> dict:
        return {"mmd2": self.mmd2, "avg_nll": self.avg_nll, "n_x": self.n_x,
                "n_y": self.n_y, "n_skipped": self.n_skipped, "runtime_s": self.runtime_s}


def polynomial_kernel(x, y):
    """k(x, y) = (x.y / 3 + 1)^3, batched over rows."""
    return (x @ y.T / 3.0 + 1.0) ** 3


def mmd_squared(x, y) -> float:
    """Biased squared maximum mean discrepancy between two sample sets."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[0] == 0 or y.shape[0] == 0:
        raise MetricError("mmd needs nonempty sample sets")
    if x.shape[1] != y.shape[1]:
        raise MetricError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    n, m = x.shape[0], y.shape[0]
    kxx = polynomial_kernel(x, x).sum() / (n * n)
    kyy = polynomial_kernel(y, y).sum() / (m * m)
    kxy = polynomial_kernel(x, y).sum() / (n * m)
    return float(kxx + kyy - 2.0 * kxy)


def avg_nll(samples, target: TargetDensity) -> tuple[float, int]:
    """Mean negative log target density; invalid samples are skipped.

    Returns (value, n_skipped). Raises if no sample is evaluable.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    valid = target.is_valid(samples)
    with np.errstate(divide="ignore"):
        logp = target.log_density(samples[valid])
    usable = np.isfinite(logp)
    n_skipped = int((~valid).sum() + (~usable).sum())
    if not usable.any():
        raise MetricError("no valid samples to evaluate")
    return float(-logp[usable].mean()), n_skipped


def evaluate(samples, target: TargetDensity | None = None, reference=None) -> MetricReport:
    """Convenience wrapper computing whichever metrics the inputs allow."""
    tic = time.perf_counter()
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    mmd2 = nll = None
    skipped = 0
    n_y = 0
    if reference is not None:
        reference = np.atleast_2d(np.asarray(reference, dtype=float))
        n_y = reference.shape[0]
        mmd2 = mmd_squared(samples, reference)
    if target is not None:
        nll, skipped = avg_nll(samples, target)
    return MetricReport(mmd2=mmd2, avg_nll=nll, n_x=samples.shape[0], n_y=n_y,
                        n_skipped=skipped, runtime_s=time.perf_counter() - tic)

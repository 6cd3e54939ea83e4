"""Queryable target densities used by the sampler, baselines and metrics.

Each target evaluates batched points of shape (..., d) on its native scale
(plain density or log density); the other scale is derived. Targets may
also expose a validity predicate (points where evaluation is undefined)
and the gradient of the log density for gradient-based baselines.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import lv
from .errors import TargetError

DENSITY_FLOOR = 1e-300

_DATA_DIR = Path(__file__).parent / "data"


@dataclass(frozen=True)
class TargetDensity:
    name: str
    dim: int
    scale: str                                   # "density" | "log"
    fn: Callable[[np.ndarray], np.ndarray]
    valid_fn: Callable[[np.ndarray], np.ndarray] | None = None
    grad_fn: Callable[[np.ndarray], np.ndarray] | None = None
    reference_values: Mapping[str, float] = field(default_factory=dict)

    def density(self, x) -> np.ndarray:
        """Density (possibly unnormalised); values below 1e-300 clamp to 0."""
        x = np.asarray(x, dtype=float)
        if self.scale == "density":
            p = np.asarray(self.fn(x), dtype=float)
        else:
            with np.errstate(over="ignore"):
                p = np.exp(np.asarray(self.fn(x), dtype=float))
        return np.where((p >= 0) & (p < DENSITY_FLOOR), 0.0, p)

    def log_density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.scale == "log":
            return np.asarray(self.fn(x), dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(self.fn(x), dtype=float))

    def is_valid(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.valid_fn is None:
            return np.ones(x.shape[:-1], dtype=bool)
        return np.asarray(self.valid_fn(x), dtype=bool)

    @property
    def has_gradient(self) -> bool:
        return self.grad_fn is not None

    def gradient(self, x) -> np.ndarray:
        """Gradient of the log density."""
        if self.grad_fn is None:
            raise TargetError(f"target {self.name!r} exposes no gradient")
        return np.asarray(self.grad_fn(np.asarray(x, dtype=float)), dtype=float)


# ---------------------------------------------------------------------------
# Gaussians


def _mvn_pdf(x, mu, cov):
    d = len(mu)
    inv = np.linalg.inv(cov)
    dx = x - mu
    expo = -0.5 * np.einsum("...i,ij,...j->...", dx, inv, dx)
    norm = (2 * np.pi) ** (d / 2) * np.sqrt(np.linalg.det(cov))
    return np.exp(expo) / norm


def gaussian(mu, cov, name="gaussian") -> TargetDensity:
    """General multivariate normal target with analytic gradient."""
    mu = np.asarray(mu, dtype=float)
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    inv = np.linalg.inv(cov)

    def grad(x):
        return -(x - mu) @ inv.T

    return TargetDensity(name=name, dim=len(mu), scale="density",
                         fn=lambda x: _mvn_pdf(x, mu, cov), grad_fn=grad)


def standard_normal(dim: int = 1) -> TargetDensity:
    return gaussian(np.zeros(dim), np.eye(dim), name=f"standard-normal-{dim}d")


UNIMODAL_MU = np.array([0.5, 0.5])
UNIMODAL_COV = 0.05 * np.eye(2)

BIMODAL_W = (0.7, 0.3)
BIMODAL_MU = (np.array([0.0, 0.0]), np.array([4.0, 4.0]))
BIMODAL_COV = (np.array([[1.0, -0.5], [-0.5, 1.0]]), np.array([[1.0, 0.5], [0.5, 1.0]]))


def gaussian_unimodal() -> TargetDensity:
    t = gaussian(UNIMODAL_MU, UNIMODAL_COV, name="gaussian-unimodal")
    return TargetDensity(name=t.name, dim=2, scale="density", fn=t.fn, grad_fn=t.grad_fn,
                         reference_values={"peak_density": 1.0 / (2 * np.pi * 0.05)})


def gaussian_bimodal() -> TargetDensity:
    invs = [np.linalg.inv(c) for c in BIMODAL_COV]

    def pdf(x):
        return sum(w * _mvn_pdf(x, m, c)
                   for w, m, c in zip(BIMODAL_W, BIMODAL_MU, BIMODAL_COV))

    def grad(x):
        total = np.zeros_like(x)
        p = np.zeros(x.shape[:-1])
        for w, m, c, inv in zip(BIMODAL_W, BIMODAL_MU, BIMODAL_COV, invs):
            pk = w * _mvn_pdf(x, m, c)
            p = p + pk
            total = total + pk[..., None] * (-(x - m) @ inv.T)
        return total / p[..., None]

    return TargetDensity(name="gaussian-bimodal", dim=2, scale="density", fn=pdf, grad_fn=grad)


# ---------------------------------------------------------------------------
# The other 2D toys (unnormalised, defined through their exponents)


def _moon_exponent(x):
    x1, x2 = x[..., 0], x[..., 1]
    return -x1 ** 2 / 2 - 0.5 * (10 * x2 + 3 * x1 ** 2 - 3) ** 2


def _double_banana_exponent(x):
    x1, x2 = x[..., 0], x[..., 1]
    ring = -2.0 * (x1 ** 2 + x2 ** 2 - 3.0) ** 2
    return ring + np.logaddexp(-2.0 * (x1 - 2.0) ** 2, -2.0 * (x2 + 2.0) ** 2)


def _wave_exponent(x):
    x1, x2 = x[..., 0], x[..., 1]
    return -0.5 * ((x2 - np.sin(np.pi * x1 / 2)) / 0.4) ** 2


def moon_density() -> TargetDensity:
    return TargetDensity(name="moon", dim=2, scale="log", fn=_moon_exponent)


def double_banana_density() -> TargetDensity:
    return TargetDensity(name="double-banana", dim=2, scale="log", fn=_double_banana_exponent)


def wave_density() -> TargetDensity:
    return TargetDensity(name="wave", dim=2, scale="log", fn=_wave_exponent)


# ---------------------------------------------------------------------------
# Neal's funnel


def neals_funnel(sigma: float = 3.0) -> TargetDensity:
    """p(x1, x2) = N(x2 | 0, sigma^2) * N(x1 | 0, exp(x2/2)).

    exp(x2/2) is the variance of the conditional, so the spread of x1
    grows exponentially along the funnel axis.
    """
    s2 = float(sigma) ** 2

    def logp(x):
        x1, x2 = x[..., 0], x[..., 1]
        var1 = np.exp(x2 / 2)
        return (-0.5 * np.log(2 * np.pi * s2) - x2 ** 2 / (2 * s2)
                - 0.5 * np.log(2 * np.pi * var1) - x1 ** 2 / (2 * var1))

    def grad(x):
        x1, x2 = x[..., 0], x[..., 1]
        inv_var1 = np.exp(-x2 / 2)
        g1 = -x1 * inv_var1
        g2 = -x2 / s2 - 0.25 + 0.25 * x1 ** 2 * inv_var1
        return np.stack([g1, g2], axis=-1)

    return TargetDensity(name="neal-funnel", dim=2, scale="log", fn=logp, grad_fn=grad)


# ---------------------------------------------------------------------------
# Bayesian logistic regression on the iris data


def load_iris_data(path=None) -> tuple[np.ndarray, np.ndarray]:
    """Raw feature matrix (150, 4) and binary labels from the bundled CSV."""
    path = _DATA_DIR / "iris.csv" if path is None else Path(path)
    feats, labels = [], []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            labels.append(int(row["label"]))
            feats.append([float(row[k]) for k in
                          ("sepal_length", "sepal_width", "petal_length", "petal_width")])
    return np.array(feats), np.array(labels, dtype=float)


def iris_split(path=None, split_seed: int = 0,
               train_fraction: float = 0.7):
    """Z-scored features and a deterministic shuffled train/test split."""
    X, y = load_iris_data(path)
    X = (X - X.mean(axis=0)) / X.std(axis=0)
    idx = np.random.default_rng(split_seed).permutation(len(X))
    n_train = int(round(train_fraction * len(X)))
    tr, te = idx[:n_train], idx[n_train:]
    return X[tr], y[tr], X[te], y[te]


def blr_log_posterior(w, X, y, alpha: float = 1.0):
    """Log posterior of logistic-regression weights under a N(0, alpha I) prior.

    Batched over leading axes of ``w``; the log-sigmoid terms use
    logaddexp so labels with near-certain predictions cannot produce
    log(0).
    """
    w = np.asarray(w, dtype=float)
    z = w @ X.T                                   # (..., n_rows)
    log_sig = -np.logaddexp(0.0, -z)
    log_one_minus = -np.logaddexp(0.0, z)
    loglik = log_sig @ y + log_one_minus @ (1.0 - y)
    prior = -(w * w).sum(axis=-1) / (2 * alpha)
    return loglik + prior


def blr_gradient(w, X, y, alpha: float = 1.0):
    """X^T (y - sigmoid(Xw)) - w/alpha, batched like blr_log_posterior."""
    w = np.asarray(w, dtype=float)
    z = w @ X.T
    with np.errstate(over="ignore"):
        sig = 1.0 / (1.0 + np.exp(-z))
    return (y - sig) @ X - w / alpha


def blr_iris(alpha: float = 1.0, dataset=None, split_seed: int = 0) -> TargetDensity:
    Xtr, ytr, _, _ = iris_split(dataset, split_seed)
    return TargetDensity(
        name="blr-iris", dim=4, scale="log",
        fn=lambda w: blr_log_posterior(w, Xtr, ytr, alpha),
        grad_fn=lambda w: blr_gradient(w, Xtr, ytr, alpha),
        reference_values={"n_train": len(ytr)})


# ---------------------------------------------------------------------------
# Predator-prey parameter posterior


def lotka_volterra(dataset=None, sigma: float = 0.25, dt: float = 0.01,
                   x0: float = 33.956, y0: float = 5.933) -> TargetDensity:
    model = lv.default_model(dataset, sigma=sigma, dt=dt, x0=x0, y0=y0)

    def logp(theta):
        lp, _ = lv.lv_log_posterior(theta, model)
        return lp

    def valid(theta):
        _, ok = lv.lv_log_posterior(theta, model)
        return ok

    t = TargetDensity(name="lotka-volterra", dim=4, scale="log", fn=logp, valid_fn=valid,
                      reference_values={"map_a": 0.539, "map_b": 0.027,
                                        "map_c": 0.024, "map_d": 0.795})
    object.__setattr__(t, "model", model)       # handy for simulation-based checks
    return t


# ---------------------------------------------------------------------------
# Registry

REGISTRY: dict[str, dict] = {
    "gaussian-unimodal": {"dim": 2, "build": lambda **kw: gaussian_unimodal(), "params": {}},
    "gaussian-bimodal": {"dim": 2, "build": lambda **kw: gaussian_bimodal(), "params": {}},
    "moon": {"dim": 2, "build": lambda **kw: moon_density(), "params": {}},
    "double-banana": {"dim": 2, "build": lambda **kw: double_banana_density(), "params": {}},
    "wave": {"dim": 2, "build": lambda **kw: wave_density(), "params": {}},
    "neal-funnel": {"dim": 2, "build": neals_funnel, "params": {"sigma": 3.0}},
    "blr-iris": {"dim": 4, "build": blr_iris,
                 "params": {"alpha": 1.0, "dataset": None, "split_seed": 0}},
    "lotka-volterra": {"dim": 4, "build": lotka_volterra,
                       "params": {"dataset": None, "sigma": 0.25, "dt": 0.01,
                                  "x0": 33.956, "y0": 5.933}},
}


def build_target(name: str, params: Mapping | None = None) -> TargetDensity:
    if name not in REGISTRY:
        raise TargetError(f"unknown target {name!r}; known: {sorted(REGISTRY)}")
    entry = REGISTRY[name]
    kwargs = dict(entry["params"])
    for key, value in (params or {}).items():
        if key not in kwargs:
            raise TargetError(f"target {name!r} takes no parameter {key!r}")
        kwargs[key] = value
    return entry["build"](**kwargs)

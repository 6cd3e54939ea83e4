"""Closed-form densities for contour overlays, re-evaluated from the
parameters recorded in a run's resolved config.

Only the 2D analytic targets get contours; dataset-backed posteriors
(the logistic-regression and predator-prey targets) are rendered as
scatter slices without an overlay. The predator-prey dynamics are
re-implemented here for the posterior-predictive figure.
"""

from __future__ import annotations

import numpy as np


def _mvn(x, mu, cov):
    mu = np.asarray(mu)
    cov = np.asarray(cov)
    inv = np.linalg.inv(cov)
    dx = x - mu
    e = -0.5 * np.einsum("...i,ij,...j->...", dx, inv, dx)
    return np.exp(e) / (2 * np.pi * np.sqrt(np.linalg.det(cov)))


def gaussian_unimodal(x, **_):
    return _mvn(x, [0.5, 0.5], 0.05 * np.eye(2))


def gaussian_bimodal(x, **_):
    return (0.7 * _mvn(x, [0.0, 0.0], [[1.0, -0.5], [-0.5, 1.0]])
            + 0.3 * _mvn(x, [4.0, 4.0], [[1.0, 0.5], [0.5, 1.0]]))


def moon(x, **_):
    x1, x2 = x[..., 0], x[..., 1]
    return np.exp(-x1 ** 2 / 2 - 0.5 * (10 * x2 + 3 * x1 ** 2 - 3) ** 2)


def double_banana(x, **_):
    x1, x2 = x[..., 0], x[..., 1]
    ring = -2.0 * (x1 ** 2 + x2 ** 2 - 3.0) ** 2
    bump = np.logaddexp(-2.0 * (x1 - 2.0) ** 2, -2.0 * (x2 + 2.0) ** 2)
    return np.exp(ring + bump)


def wave(x, **_):
    x1, x2 = x[..., 0], x[..., 1]
    return np.exp(-0.5 * ((x2 - np.sin(np.pi * x1 / 2)) / 0.4) ** 2)


def neal_funnel(x, sigma=3.0, **_):
    x1, x2 = x[..., 0], x[..., 1]
    var1 = np.exp(x2 / 2)
    return (np.exp(-x2 ** 2 / (2 * sigma ** 2)) / np.sqrt(2 * np.pi * sigma ** 2)
            * np.exp(-x1 ** 2 / (2 * var1)) / np.sqrt(2 * np.pi * var1))


CONTOUR_DENSITIES = {
    "gaussian-unimodal": gaussian_unimodal,
    "gaussian-bimodal": gaussian_bimodal,
    "moon": moon,
    "double-banana": double_banana,
    "wave": wave,
    "neal-funnel": neal_funnel,
}


def contour_density(target_id: str, params: dict):
    """Density callable for the overlay, or None when the target has no
    closed 2D form."""
    fn = CONTOUR_DENSITIES.get(target_id)
    if fn is None:
        return None
    return lambda x: fn(x, **params)


def simulate_predator_prey(theta, x0, y0, t_end, dt=0.01):
    """Fixed-step RK4 of dx/dt = a x - b x y, dy/dt = c x y - d y.

    Returns (times, x, y); used only for the posterior-predictive figure.
    """
    a, b, c, d = [float(v) for v in theta]
    n = int(round(t_end / dt))
    ts = np.linspace(0.0, n * dt, n + 1)
    xs = np.empty(n + 1)
    ys = np.empty(n + 1)
    x, y = float(x0), float(y0)
    xs[0], ys[0] = x, y

    def f(x, y):
        return a * x - b * x * y, c * x * y - d * y

    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            k1x, k1y = f(x, y)
            k2x, k2y = f(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y)
            k3x, k3y = f(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y)
            k4x, k4y = f(x + dt * k3x, y + dt * k3y)
            x += dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
            y += dt / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
            if not (np.isfinite(x) and np.isfinite(y)):
                xs[i + 1:] = np.nan
                ys[i + 1:] = np.nan
                return ts, xs, ys
            xs[i + 1], ys[i + 1] = x, y
    return ts, xs, ys

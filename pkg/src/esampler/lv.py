"""Predator-prey dynamics and its Bayesian parameter posterior.

States follow dx/dt = a*x - b*x*y, dy/dt = c*x*y - d*y from fixed initial
conditions; observations are lognormal around the trajectory at the data
timestamps. Parameter vectors live in a uniform prior box; trajectories
that blow up or touch nonpositive values at an observation time are
flagged invalid rather than raising.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_DATA = Path(__file__).parent / "data" / "hudson_bay_lynx_hare.csv"

PRIOR_LOW = np.array([0.001, 0.001, 0.001, 0.001])
PRIOR_HIGH = np.array([1.0, 0.05, 0.05, 1.0])

_STATE_CLIP = 1e30


@dataclass(frozen=True)
class LVModel:
    times: np.ndarray          # observation times, years since first record
    obs_x: np.ndarray          # hare pelts (thousands)
    obs_y: np.ndarray          # lynx pelts (thousands)
    x0: float = 33.956
    y0: float = 5.933
    sigma: float = 0.25
    dt: float = 0.01
    prior_low: np.ndarray = field(default_factory=lambda: PRIOR_LOW.copy())
    prior_high: np.ndarray = field(default_factory=lambda: PRIOR_HIGH.copy())

    @property
    def n_obs(self) -> int:
        return len(self.times)


def load_lv_data(path=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read the (year, hare, lynx) record; returns years, hare, lynx arrays."""
    path = _DATA if path is None else Path(path)
    years, hare, lynx = [], [], []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            years.append(float(row["year"]))
            hare.append(float(row["hare"]))
            lynx.append(float(row["lynx"]))
    return np.array(years), np.array(hare), np.array(lynx)


def default_model(path=None, **overrides) -> LVModel:
    years, hare, lynx = load_lv_data(path)
    if (hare <= 0).any() or (lynx <= 0).any():
        raise ValueError("observed counts must be positive for the lognormal likelihood")
    return LVModel(times=years - years[0], obs_x=hare, obs_y=lynx, **overrides)


def lv_simulate(theta, model: LVModel, times=None):
    """Fixed-step RK4 trajectories at the observation times.

    Accepts a single parameter vector (4,) or a batch (B, 4). Returns
    (xs, ys, valid) where invalid marks blow-ups or nonpositive states at
    any observation time.
    """
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    th = theta[None, :] if single else theta
    a, b, c, d = th[:, 0], th[:, 1], th[:, 2], th[:, 3]
    t_obs = model.times if times is None else np.asarray(times, dtype=float)
    nb = th.shape[0]
    dt = model.dt

    x = np.full(nb, float(model.x0))
    y = np.full(nb, float(model.y0))
    blown = np.zeros(nb, dtype=bool)
    xs = np.empty((nb, len(t_obs)))
    ys = np.empty((nb, len(t_obs)))

    def deriv(xv, yv):
        return a * xv - b * xv * yv, c * xv * yv - d * yv

    oi = 0
    if t_obs[0] == 0.0:
        xs[:, 0], ys[:, 0] = x, y
        oi = 1
    n_steps = int(round(t_obs[-1] / dt))
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(n_steps):
            k1x, k1y = deriv(x, y)
            k2x, k2y = deriv(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y)
            k3x, k3y = deriv(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y)
            k4x, k4y = deriv(x + dt * k3x, y + dt * k3y)
            x = x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
            y = y + dt / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
            over = (~np.isfinite(x) | ~np.isfinite(y)
                    | (np.abs(x) > _STATE_CLIP) | (np.abs(y) > _STATE_CLIP))
            if over.any():
                blown |= over
                x = np.nan_to_num(np.clip(x, -_STATE_CLIP, _STATE_CLIP))
                y = np.nan_to_num(np.clip(y, -_STATE_CLIP, _STATE_CLIP))
            t = (s + 1) * dt
            if oi < len(t_obs) and abs(t - t_obs[oi]) < dt / 2:
                xs[:, oi], ys[:, oi] = x, y
                oi += 1
    valid = ~blown & (xs > 0).all(axis=1) & (ys > 0).all(axis=1)
    if single:
        return xs[0], ys[0], bool(valid[0])
    return xs, ys, valid


def lv_log_posterior(theta, model: LVModel):
    """Unnormalised log posterior and validity under the uniform prior box.

    Outside the prior box or on an invalid trajectory the point is flagged
    invalid and the log posterior set to -inf.
    """
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    th = theta[None, :] if single else theta

    in_box = ((th >= model.prior_low) & (th <= model.prior_high)).all(axis=1)
    logp = np.full(th.shape[0], -np.inf)
    valid = np.zeros(th.shape[0], dtype=bool)
    if in_box.any():
        xs, ys, ok = lv_simulate(th[in_box], model)
        n = model.n_obs
        prior_const = float(-np.log(model.prior_high - model.prior_low).sum())
        data_const = (-2 * n * np.log(np.sqrt(2 * np.pi) * model.sigma)
                      - float(np.log(model.obs_x).sum() + np.log(model.obs_y).sum()))
        with np.errstate(divide="ignore", invalid="ignore"):
            lx = np.log(np.where(xs > 0, xs, 1.0))
            ly = np.log(np.where(ys > 0, ys, 1.0))
            sq = ((np.log(model.obs_x)[None, :] - lx) ** 2
                  + (np.log(model.obs_y)[None, :] - ly) ** 2).sum(axis=1)
        ll = prior_const + data_const - sq / (2 * model.sigma ** 2)
        ll[~ok] = -np.inf
        idx = np.flatnonzero(in_box)
        logp[idx] = ll
        valid[idx] = ok
    if single:
        return float(logp[0]), bool(valid[0])
    return logp, valid

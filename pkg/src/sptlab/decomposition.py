"""Discrete-time log-return identities and the structural/trading split.

Conventions used throughout (these satisfy the midpoint/Ito identity exactly
in discrete time):
  - discrete Ito integral       = left-point sum,
  - discrete Stratonovich       = midpoint sum,
  - discrete cross-variation    = sum of increment products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .market import CovarianceEstimate


def _as_path(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return a


def excess_growth_rate(pi, sigma: CovarianceEstimate) -> float:
    """gamma* = (sum_i pi_i sigma_ii - sum_ij pi_i pi_j sigma_ij) / 2."""
    w = np.asarray(pi, dtype=float)
    if sigma.n != w.size:
        raise InvalidInputError("covariance dimension does not match weights")
    s = sigma.sigma
    return 0.5 * (float(w @ np.diag(s)) - float(w @ s @ w))


def gamma_star_path(pi_path, dlog_mu, dt: float) -> np.ndarray:
    """Per-step excess growth rates from single-step realized relative covariance.

    With tau_ij dt = dlog mu_i dlog mu_j per step, gamma* dt reduces to
    (sum pi (dlog mu)^2 - (sum pi dlog mu)^2) / 2; returned as rates (1/year).
    """
    pi = _as_path(pi_path, "pi_path")
    d = _as_path(dlog_mu, "dlog_mu")
    if pi.shape != d.shape:
        raise InvalidInputError("weight and increment paths are misaligned")
    second = np.sum(pi * d**2, axis=1)
    first = np.sum(pi * d, axis=1)
    return 0.5 * (second - first**2) / dt


def portfolio_log_return(pi_path, asset_log_increments, gamma_star, dt: float) -> float:
    """Cumulative log return: sum_t [sum_i pi_i dlog X_i + gamma* dt]."""
    pi = _as_path(pi_path, "pi_path")
    dx = _as_path(asset_log_increments, "asset_log_increments")
    g = _as_path(gamma_star, "gamma_star")
    if pi.shape != dx.shape or g.shape[0] != pi.shape[0]:
        raise InvalidInputError("paths are misaligned")
    return float(np.sum(pi * dx) + np.sum(g) * dt)


def relative_log_return(pi_path, mu_path, gamma_star=None, dt: float = 1.0 / 252.0,
                        cumulative: bool = False):
    """Relative log return vs the market: sum_t [sum_i pi_i dlog mu_i + gamma* dt].

    ``gamma_star`` defaults to the single-step realized rates from
    :func:`gamma_star_path`.  With ``cumulative=True`` the running series is
    returned instead of the final value.
    """
    pi = _as_path(pi_path, "pi_path")
    mu = _as_path(mu_path, "mu_path")
    if mu.shape[0] != pi.shape[0] + 1 or mu.shape[1] != pi.shape[1]:
        raise InvalidInputError("need one more weight observation than rebalances")
    dmu = np.diff(np.log(mu), axis=0)
    if gamma_star is None:
        g = gamma_star_path(pi, dmu, dt)
    else:
        g = _as_path(gamma_star, "gamma_star")
    steps = np.sum(pi * dmu, axis=1) + g * dt
    return np.cumsum(steps) if cumulative else float(steps.sum())


def market_identity_residual(mu_path, gamma_star_mu=None, dt: float = 1.0 / 252.0) -> float:
    """Residual of the market identity sum mu dlog mu = -gamma*_mu dt; ~0 up to
    discretization error."""
    mu = _as_path(mu_path, "mu_path")
    return relative_log_return(mu[:-1], mu, gamma_star_mu, dt)


def stratonovich_integral(y_path, x_path) -> float:
    """Midpoint-rule integral sum_t (Y_t + Y_{t+1})/2 (X_{t+1} - X_t)."""
    y = _as_path(y_path, "y_path")
    x = _as_path(x_path, "x_path")
    if y.shape != x.shape or y.ndim != 1 or y.size < 2:
        raise InvalidInputError("paths must be equal-length 1-d with T >= 2")
    return float(np.sum(0.5 * (y[:-1] + y[1:]) * np.diff(x)))


def ito_integral(y_path, x_path) -> float:
    """Left-point sum; differs from Stratonovich by half the cross-variation."""
    y = _as_path(y_path, "y_path")
    x = _as_path(x_path, "x_path")
    if y.shape != x.shape or y.ndim != 1 or y.size < 2:
        raise InvalidInputError("paths must be equal-length 1-d with T >= 2")
    return float(np.sum(y[:-1] * np.diff(x)))


@dataclass
class ReturnDecomposition:
    """Relative-log-return split into structural and trading components.

    All series are cumulative over the path; trading is defined as the
    residual, so relative = structural + trading holds exactly.
    ``trading_alt`` recomputes trading from the cross-variation form
    (-1/2 sum dpi dlog mu + gamma* dt); ``discrepancy`` is the difference
    between the two trading computations at the horizon.
    """

    relative: np.ndarray
    structural: np.ndarray
    trading: np.ndarray
    gamma_star_cum: np.ndarray
    trading_alt: np.ndarray
    discrepancy: float

    @property
    def total_relative_log_return(self) -> float:
        return float(self.relative[-1])


def decompose(pi_path, mu_path, dt: float) -> ReturnDecomposition:
    """Decompose the relative log return of a weight path against the market.

    ``pi_path`` has one row per holding period (T rows), ``mu_path`` one row
    per observation (T+1 rows).  Structural is the per-asset Stratonovich
    (midpoint) sum of pi against log mu; trading is the residual.
    """
    pi = _as_path(pi_path, "pi_path")
    mu = _as_path(mu_path, "mu_path")
    if mu.ndim != 2 or pi.ndim != 2 or mu.shape[1] != pi.shape[1]:
        raise InvalidInputError("paths are misaligned")
    if pi.shape[0] == mu.shape[0]:
        pi_ext = pi               # weights observed at every date
        pi = pi[:-1]              # holding weights are the left endpoints
    elif pi.shape[0] + 1 == mu.shape[0]:
        # midpoint rule needs pi at both ends of each step; extend by
        # repeating the final holding weights
        pi_ext = np.vstack([pi, pi[-1]])
    else:
        raise InvalidInputError("weight and market paths are misaligned")
    logmu = np.log(mu)
    dmu = np.diff(logmu, axis=0)
    g = gamma_star_path(pi, dmu, dt)
    rel_steps = np.sum(pi * dmu, axis=1) + g * dt

    mid = 0.5 * (pi_ext[:-1] + pi_ext[1:])
    struct_steps = np.sum(mid * dmu, axis=1)

    dpi = np.diff(pi_ext, axis=0)
    alt_steps = -0.5 * np.sum(dpi * dmu, axis=1) + g * dt

    relative = np.cumsum(rel_steps)
    structural = np.cumsum(struct_steps)
    trading = relative - structural
    trading_alt = np.cumsum(alt_steps)
    return ReturnDecomposition(
        relative=relative,
        structural=structural,
        trading=trading,
        gamma_star_cum=np.cumsum(g * dt),
        trading_alt=trading_alt,
        discrepancy=float(trading[-1] - trading_alt[-1]),
    )


def decomposition_frame(dates, dec: ReturnDecomposition):
    """Tabulate a decomposition as the standard report columns."""
    import pandas as pd

    from .market import month_str

    return pd.DataFrame({
        "date": [month_str(d) for d in np.asarray(dates, dtype=int)],
        "relative_logret": dec.relative,
        "structural": dec.structural,
        "trading": dec.trading,
        "gamma_star_cum": dec.gamma_star_cum,
    })

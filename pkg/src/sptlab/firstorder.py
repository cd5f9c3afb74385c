"""Rank-based (first-order) market models: validation, simulation, asymptotics.

Log prices follow d log X_i = g_{rank(i)} dt + sigma_{rank(i)} dW_i with the
rank recomputed each Euler step.  Growth parameters must sum to zero with
strictly negative leading partial sums, which makes the model asymptotically
stable with known local-time rates and gap variances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, ParamConstraintError
from .market import PricePanel

GSUM_TOL = 1e-10


@dataclass(frozen=True)
class FirstOrderParams:
    """Rank-indexed growth rates (1/year) and volatilities (1/sqrt(year))."""

    g: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "g", np.asarray(self.g, dtype=float))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        problems = validate_params(self, raise_on_error=False)
        if problems:
            raise ParamConstraintError("; ".join(problems))

    @property
    def n(self) -> int:
        return self.g.size


def validate_params(params, raise_on_error: bool = True) -> list[str]:
    """Check the stability constraints; returns a list of violations."""
    g = np.asarray(params.g, dtype=float)
    s = np.asarray(params.sigma, dtype=float)
    problems = []
    if g.size != s.size or g.size < 1:
        problems.append("g and sigma must be nonempty and the same length")
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(s))):
        problems.append("parameters must be finite")
    else:
        if np.any(s <= 0.0):
            problems.append("all sigma_k must be positive")
        if abs(g.sum()) > GSUM_TOL:
            problems.append(f"growth rates sum to {g.sum():g}, expected 0")
        partial = np.cumsum(g)[:-1]
        if np.any(partial >= 0.0):
            k = int(np.argmax(partial >= 0.0)) + 1
            problems.append(f"partial sum g_1+...+g_{k} = {partial[k - 1]:g} is not < 0")
    if problems and raise_on_error:
        raise ParamConstraintError("; ".join(problems))
    return problems


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings; paths > 1 runs a Monte Carlo batch."""

    steps: int
    dt: float = 1.0 / 252.0
    seed: int = 0
    initial_log_prices: np.ndarray | None = None
    paths: int = 1
    path_offset: int = 0  # global index of the first path (for chunked batches)

    def __post_init__(self):
        if self.steps < 1:
            raise InvalidInputError("steps must be >= 1")
        if self.dt <= 0:
            raise InvalidInputError("dt must be positive")
        if self.paths < 1:
            raise InvalidInputError("paths must be >= 1")


def _noise(config: SimConfig, n: int) -> np.ndarray:
    """(paths, steps, n) standard normals; one Philox substream per global
    path index so batches are reproducible and order-independent."""
    out = np.empty((config.paths, config.steps, n))
    for p in range(config.paths):
        rng = np.random.Generator(
            np.random.Philox(key=[config.seed, config.path_offset + p]))
        out[p] = rng.standard_normal((config.steps, n))
    return out


def simulate_log_paths(params: FirstOrderParams, config: SimConfig) -> np.ndarray:
    """Euler-Maruyama log-price paths, shape (paths, steps + 1, n).

    Ranks are frozen within each step; ties break toward the lower index.
    """
    validate_params(params)
    n = params.n
    if config.initial_log_prices is not None:
        x0 = np.asarray(config.initial_log_prices, dtype=float)
        if x0.size != n:
            raise InvalidInputError("initial log prices do not match n")
    else:
        x0 = np.zeros(n)
    g, sig = params.g, params.sigma
    dt = config.dt
    sqdt = np.sqrt(dt)
    noise = _noise(config, n)
    paths = config.paths
    out = np.empty((paths, config.steps + 1, n))
    out[:, 0, :] = x0
    x = np.tile(x0, (paths, 1))
    cols = np.arange(n)
    rank_idx = np.empty((paths, n), dtype=int)
    for t in range(config.steps):
        order = np.argsort(-x, axis=1, kind="stable")
        np.put_along_axis(rank_idx, order, cols[None, :], axis=1)
        x = x + g[rank_idx] * dt + sig[rank_idx] * sqdt * noise[:, t, :]
        out[:, t + 1, :] = x
    return out


def simulate(params: FirstOrderParams, config: SimConfig,
             assets: list[str] | None = None) -> PricePanel:
    """Simulate a single path and wrap it as a price panel."""
    logx = simulate_log_paths(params, config)[0]
    n = params.n
    if assets is None:
        assets = [f"A{i:02d}" for i in range(n)]
    return PricePanel(assets=assets, dates=np.arange(logx.shape[0]),
                      values=np.exp(logx), dt=config.dt)


def theoretical_local_times(params: FirstOrderParams) -> np.ndarray:
    """lambda_{k,k+1} = -2 (g_1 + ... + g_k) for k = 1..n-1."""
    return -2.0 * np.cumsum(params.g)[:-1]


def theoretical_gap_variances(params: FirstOrderParams) -> np.ndarray:
    """sigma^2_{k,k+1} = sigma_k^2 + sigma_{k+1}^2 for k = 1..n-1."""
    s2 = params.sigma**2
    return s2[:-1] + s2[1:]


def portfolio_growth_rate(params: FirstOrderParams, pi_by_rank,
                          gamma_star: float) -> float:
    """Long-run growth rate sum_k pi_(k) g_k + gamma* for rank-indexed weights."""
    w = np.asarray(pi_by_rank, dtype=float)
    if w.size != params.n:
        raise InvalidInputError("rank weights do not match n")
    if abs(w.sum() - 1.0) > 1e-10:
        raise InvalidInputError("rank weights must sum to 1")
    return float(w @ params.g) + gamma_star


def atlas_params(n: int, g_gap: float, sigma: float) -> FirstOrderParams:
    """Convenience constructor: the bottom rank carries all the drift."""
    g = np.full(n, -g_gap / n)
    g[-1] += g_gap
    return FirstOrderParams(g=g, sigma=np.full(n, sigma))

"""First-order approximation of an observed market.

Estimates local-time rates and gap variances from ranked log prices, derives
rank growth/volatility parameters from them, and provides the smoothing and
rank-size diagnostics used to compare an estimated model against data.

The local-time estimator telescopes the rank-decomposition identity: the
cumulative difference between ranked increments and the increments of the
names occupying those ranks equals half the local time accumulated at the
gap below rank k.  It needs no bandwidth or threshold.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InsufficientDataError, InvalidInputError
from .firstorder import FirstOrderParams, SimConfig, simulate_log_paths
from .market import PricePanel


def _ranked_and_occupant_increments(logx: np.ndarray):
    """Per-step ranked increments and same-rank name increments.

    ``logx`` is (T+1) x n.  Returns (D, E) each T x (n): D[t, k] is the
    increment of the rank-(k+1) log price, E[t, k] the increment of the name
    holding rank k+1 at the start of step t.
    """
    order = np.argsort(-logx, axis=1, kind="stable")
    ranked = np.take_along_axis(logx, order, axis=1)
    d_name = np.diff(logx, axis=0)
    occupant = np.take_along_axis(d_name, order[:-1], axis=1)
    return np.diff(ranked, axis=0), occupant


def _full_log_panel(panel: PricePanel) -> np.ndarray:
    logx = panel.log_values()
    if not np.all(np.isfinite(logx)):
        raise InvalidInputError(
            "estimation window has ragged assets; restrict dates to a span "
            "where all assets are present")
    if logx.shape[0] < 3:
        raise InsufficientDataError("need at least 3 observations")
    return logx


def estimate_gap_variance(panel: PricePanel) -> np.ndarray:
    """Realized quadratic variation per year of each adjacent ranked log gap."""
    logx = _full_log_panel(panel)
    ranked = np.take_along_axis(logx, np.argsort(-logx, axis=1, kind="stable"), axis=1)
    gaps = ranked[:, :-1] - ranked[:, 1:]
    dg = np.diff(gaps, axis=0)
    span = dg.shape[0] * panel.dt
    return np.sum(dg**2, axis=0) / span


def estimate_local_time_rates(panel: PricePanel) -> np.ndarray:
    """Local-time accumulation rates lambda_{k,k+1} (1/year), k = 1..n-1."""
    logx = _full_log_panel(panel)
    ranked_inc, occupant_inc = _ranked_and_occupant_increments(logx)
    span = ranked_inc.shape[0] * panel.dt
    per_rank = np.sum(ranked_inc - occupant_inc, axis=0)
    return 2.0 * np.cumsum(per_rank)[:-1] / span


def first_order_approximation(lam, gap_var) -> FirstOrderParams:
    """Derive rank parameters from local-time rates and gap variances.

    Boundary conventions: lambda_{0,1} = lambda_{n,n+1} = 0,
    sigma^2_{0,1} = sigma^2_{1,2}, sigma^2_{n,n+1} = sigma^2_{n-1,n}.
    Then g_k = (lambda_{k-1,k} - lambda_{k,k+1}) / 2 and
    sigma_k^2 = (sigma^2_{k-1,k} + sigma^2_{k,k+1}) / 4.
    Negative local-time estimates (noise) are floored at zero with a warning.
    """
    lam = np.asarray(lam, dtype=float)
    gv = np.asarray(gap_var, dtype=float)
    if lam.size != gv.size:
        raise InvalidInputError("lambda and gap-variance vectors differ in length")
    if np.any(gv < 0.0):
        raise InvalidInputError("gap variances must be nonnegative")
    n = lam.size + 1
    if np.any(lam < 0.0):
        warnings.warn("negative local-time estimates floored at zero", stacklevel=2)
    # a zero local time would make a leading partial sum of g vanish, which
    # the stability constraints forbid, so floor just above it
    lam = np.maximum(lam, 1e-12)
    lam_ext = np.concatenate([[0.0], lam, [0.0]])
    g = 0.5 * (lam_ext[:-1] - lam_ext[1:])
    if n == 1:
        gv_ext = np.array([0.0, 0.0])
    else:
        gv_ext = np.concatenate([[gv[0]], gv, [gv[-1]]])
    sigma2 = 0.25 * (gv_ext[:-1] + gv_ext[1:])
    return FirstOrderParams(g=g, sigma=np.sqrt(sigma2))


def reflected_gaussian_filter(values, bandwidth: float) -> np.ndarray:
    """Gaussian smoothing across ranks with reflected ends.

    ``bandwidth`` is the kernel standard deviation in rank units; 0 is the
    identity.  The domain is mirrored at both ends before convolution and the
    (truncated) kernel is renormalized, so constants pass through unchanged.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInputError("values must be a nonempty 1-d vector")
    if bandwidth < 0:
        raise InvalidInputError("bandwidth must be >= 0")
    if bandwidth == 0:
        return v.copy()
    return ndimage.gaussian_filter1d(v, sigma=bandwidth, mode="reflect", truncate=4.0)


def rank_size_curve(panel: PricePanel) -> np.ndarray:
    """Time-averaged ranked log prices relative to the cross-sectional mean."""
    logx = _full_log_panel_or_single(panel)
    ranked = np.take_along_axis(logx, np.argsort(-logx, axis=1, kind="stable"), axis=1)
    rel = ranked - logx.mean(axis=1, keepdims=True)
    return rel.mean(axis=0)


def _full_log_panel_or_single(panel: PricePanel) -> np.ndarray:
    logx = panel.log_values()
    if not np.all(np.isfinite(logx)):
        raise InvalidInputError(
            "rank-size curve needs a fixed asset set; restrict dates")
    return logx


@dataclass(frozen=True)
class FirstOrderEstimate:
    """Bundled estimation output for one panel window."""

    lam: np.ndarray
    gap_var: np.ndarray
    params: FirstOrderParams
    sample_span: float
    n: int

    @property
    def g(self) -> np.ndarray:
        return self.params.g

    @property
    def sigma(self) -> np.ndarray:
        return self.params.sigma


def fit_first_order(panel: PricePanel) -> FirstOrderEstimate:
    """Estimate local times and gap variances and derive model parameters."""
    lam = estimate_local_time_rates(panel)
    gv = estimate_gap_variance(panel)
    params = first_order_approximation(lam, gv)
    span = (panel.n_dates - 1) * panel.dt
    return FirstOrderEstimate(lam=lam, gap_var=gv, params=params,
                              sample_span=span, n=panel.n_assets)


def _worker_count() -> int:
    import os

    try:
        return max(1, int(os.environ.get("SPTLAB_THREADS", "1")))
    except ValueError:
        return 1


def simulated_rank_size_curve(params: FirstOrderParams, steps: int, dt: float,
                              paths: int, seed: int = 0,
                              initial_log_prices=None) -> np.ndarray:
    """Average rank-size curve over a Monte Carlo batch of model paths.

    Paths use per-index RNG substreams and are reduced by a sum keyed on the
    chunk, so the result is identical for any SPTLAB_THREADS worker count.
    """

    def chunk_curves(offset: int, count: int) -> np.ndarray:
        config = SimConfig(steps=steps, dt=dt, seed=seed, paths=count,
                           path_offset=offset,
                           initial_log_prices=initial_log_prices)
        logx = simulate_log_paths(params, config)
        ranked = -np.sort(-logx, axis=2)
        rel = ranked - logx.mean(axis=2, keepdims=True)
        return rel.mean(axis=1)

    workers = min(_worker_count(), paths)
    if workers == 1:
        curves = chunk_curves(0, paths)
    else:
        from concurrent.futures import ThreadPoolExecutor

        bounds = np.linspace(0, paths, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: chunk_curves(b[0], b[1] - b[0]),
                                  zip(bounds[:-1], bounds[1:])))
        # stack per-path curves in global path order before the single
        # reduction, so any worker count produces bit-identical output
        curves = np.vstack(parts)
    return curves.mean(axis=0)

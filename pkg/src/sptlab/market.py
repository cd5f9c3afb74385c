"""Core market objects: price panels, ranks, market weights, realized covariance.

Prices are strictly positive.  Covariances are realized (uncentered) sums of
products of log-price increments, annualized by the period length ``dt``;
this is the discrete analog of the quadratic-variation density, which is why
no mean is subtracted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import InsufficientDataError, InvalidInputError

WEIGHT_SUM_TOL = 1e-12


def month_index(s: str) -> int:
    """Convert an ISO ``YYYY-MM`` string to an integer month count."""
    try:
        year, month = s.strip().split("-")
        y, m = int(year), int(month)
    except ValueError as exc:
        raise InvalidInputError(f"bad month string {s!r}, expected YYYY-MM") from exc
    if not 1 <= m <= 12:
        raise InvalidInputError(f"bad month string {s!r}, month out of range")
    return y * 12 + (m - 1)


def month_str(idx: int) -> str:
    """Inverse of :func:`month_index`."""
    y, m = divmod(int(idx), 12)
    return f"{y:04d}-{m + 1:02d}"


@dataclass(frozen=True)
class WeightVector:
    """Portfolio weights at one rebalance date; must sum to one."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.size == 0:
            raise InvalidInputError("weights must be a nonempty 1-d vector")
        if not np.all(np.isfinite(w)):
            raise InvalidInputError("weights must be finite")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidInputError(f"weights sum to {w.sum()!r}, expected 1")

    def __len__(self) -> int:
        return self.weights.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)


@dataclass(frozen=True)
class RankState:
    """Permutation between asset names and ranks at one time.

    ``rank_of[i]`` is the rank (1-based, 1 = largest price) of asset ``i``;
    ``name_at[k]`` is the asset index occupying rank ``k + 1``.
    """

    rank_of: np.ndarray
    name_at: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rank_of, dtype=int)
        p = np.asarray(self.name_at, dtype=int)
        object.__setattr__(self, "rank_of", r)
        object.__setattr__(self, "name_at", p)
        n = r.size
        if p.size != n or not np.array_equal(np.sort(r), np.arange(1, n + 1)):
            raise InvalidInputError("rank_of must be a permutation of 1..n")
        if not np.array_equal(r[p], np.arange(1, n + 1)):
            raise InvalidInputError("rank_of and name_at are not mutually inverse")

    @property
    def n(self) -> int:
        return self.rank_of.size


@dataclass(frozen=True)
class CovarianceEstimate:
    """Annualized realized covariance matrix of log increments."""

    sigma: np.ndarray
    window: int

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float)
        object.__setattr__(self, "sigma", s)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise InvalidInputError("sigma must be square")
        if not np.allclose(s, s.T, atol=1e-12, rtol=0.0):
            raise InvalidInputError("sigma must be symmetric")
        if np.any(np.diag(s) < -1e-12):
            raise InvalidInputError("sigma has negative diagonal entries")

    @property
    def n(self) -> int:
        return self.sigma.shape[0]


def _check_prices(prices) -> np.ndarray:
    p = np.asarray(prices, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise InvalidInputError("prices must be a nonempty 1-d vector")
    if not np.all(np.isfinite(p)) or np.any(p <= 0.0):
        raise InvalidInputError("prices must be finite and strictly positive")
    return p


def compute_ranks(prices_at_t) -> RankState:
    """Rank assets by price, descending; ties go to the lower asset index."""
    p = _check_prices(prices_at_t)
    name_at = np.argsort(-p, kind="stable")
    rank_of = np.empty(p.size, dtype=int)
    rank_of[name_at] = np.arange(1, p.size + 1)
    return RankState(rank_of=rank_of, name_at=name_at)


def market_weights(prices_at_t) -> WeightVector:
    """Weights proportional to price (the market portfolio)."""
    p = _check_prices(prices_at_t)
    return WeightVector(p / p.sum())


def estimate_covariance(log_increments, dt: float) -> CovarianceEstimate:
    """Realized covariance of log increments, annualized by ``dt`` (years)."""
    x = np.asarray(log_increments, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise InsufficientDataError("need at least 2 increments")
    if dt <= 0:
        raise InvalidInputError("dt must be positive")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("log increments must be finite")
    t = x.shape[0]
    sigma = x.T @ x / (t * dt)
    sigma = 0.5 * (sigma + sigma.T)
    return CovarianceEstimate(sigma=sigma, window=t)


def relative_covariance(mu_path, dt: float) -> CovarianceEstimate:
    """Realized covariance of log market-weight increments (the tau matrix)."""
    mu = np.asarray(mu_path, dtype=float)
    if mu.ndim != 2:
        raise InvalidInputError("mu_path must be a T x n matrix")
    if np.any(mu <= 0.0) or not np.all(np.isfinite(mu)):
        raise InvalidInputError("market weights must be finite and positive")
    if mu.shape[0] < 3:
        raise InsufficientDataError("need at least 3 weight observations")
    return estimate_covariance(np.diff(np.log(mu), axis=0), dt)


@dataclass
class PricePanel:
    """Dated, per-asset strictly positive price series on an aligned calendar.

    ``values`` is a T x n matrix; entries before an asset's first available
    date are NaN (ragged start), but no internal gaps are allowed after entry.
    ``dates`` are integer month indices (see :func:`month_index`) or plain
    step indices for simulated panels.  ``dt`` is the period length in years.
    """

    assets: list[str]
    dates: np.ndarray
    values: np.ndarray
    dt: float = 1.0 / 12.0

    def __post_init__(self):
        self.dates = np.asarray(self.dates, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        t, n = self.values.shape
        if len(self.assets) != n:
            raise InvalidInputError("asset list does not match value columns")
        if self.dates.size != t:
            raise InvalidInputError("dates do not match value rows")
        if t > 1 and np.any(np.diff(self.dates) <= 0):
            raise InvalidInputError("dates must be strictly increasing")
        if self.dt <= 0:
            raise InvalidInputError("dt must be positive")
        finite = np.isfinite(self.values)
        if np.any(self.values[finite] <= 0.0):
            raise InvalidInputError("prices must be strictly positive")
        # ragged start allowed, internal gaps are not
        for j in range(n):
            col = finite[:, j]
            if not col.any():
                raise InvalidInputError(f"asset {self.assets[j]!r} has no data")
            first = int(np.argmax(col))
            if not col[first:].all():
                raise InvalidInputError(f"asset {self.assets[j]!r} has an internal gap")

    @property
    def n_assets(self) -> int:
        return self.values.shape[1]

    @property
    def n_dates(self) -> int:
        return self.values.shape[0]

    def first_date_index(self) -> np.ndarray:
        """Row index of the first observation for each asset."""
        return np.argmax(np.isfinite(self.values), axis=0)

    def active_at(self, t: int) -> np.ndarray:
        """Indices of assets with a price at row ``t``."""
        return np.flatnonzero(np.isfinite(self.values[t]))

    def log_values(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.log(self.values)

    def window(self, start: int, stop: int) -> "PricePanel":
        """Sub-panel over rows [start, stop)."""
        return PricePanel(self.assets, self.dates[start:stop],
                          self.values[start:stop].copy(), self.dt)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for t in range(self.n_dates):
            for j in self.active_at(t):
                rows.append((month_str(self.dates[t]), self.assets[j], self.values[t, j]))
        return pd.DataFrame(rows, columns=["date", "asset", "price"])

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path, dt: float = 1.0 / 12.0) -> "PricePanel":
        df = pd.read_csv(path, dtype={"date": str, "asset": str})
        missing = {"date", "asset", "price"} - set(df.columns)
        if missing:
            raise InvalidInputError(f"panel CSV missing columns {sorted(missing)}")
        df["midx"] = df["date"].map(month_index)
        assets = sorted(df["asset"].unique())
        dates = np.array(sorted(df["midx"].unique()), dtype=int)
        date_pos = {d: i for i, d in enumerate(dates)}
        values = np.full((dates.size, len(assets)), np.nan)
        col = {a: j for j, a in enumerate(assets)}
        for _, row in df.iterrows():
            values[date_pos[row["midx"]], col[row["asset"]]] = row["price"]
        return cls(assets=assets, dates=dates, values=values, dt=dt)

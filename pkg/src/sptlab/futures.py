"""Commodity-futures ingestion and implied-price construction.

From a book of monthly futures quotes this module builds, per commodity:
the carry factor (log-price slope across the two nearest non-two-month
expiries), the implied two-month price, the contract actually held each
month and its carry, the entry-normalized price panel, and the eligibility
calendar (five-year seasoning, ten-commodity portfolio start).

All month arithmetic is integral; see :func:`sptlab.market.month_index`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import InvalidInputError, MissingCarryError
from .market import PricePanel, month_index, month_str


@dataclass(frozen=True)
class FuturesQuote:
    """One futures price observation."""

    commodity: str
    obs_month: int
    expiry_month: int
    price: float

    def __post_init__(self):
        if self.expiry_month < self.obs_month:
            raise InvalidInputError("expiry precedes observation")
        if not (np.isfinite(self.price) and self.price > 0.0):
            raise InvalidInputError("price must be finite and positive")


class QuoteBook:
    """Futures quotes indexed by (commodity, observation month, expiry)."""

    def __init__(self, quotes=()):
        self._data: dict[str, dict[int, dict[int, float]]] = {}
        for q in quotes:
            self.add(q)

    def add(self, q: FuturesQuote) -> None:
        self._data.setdefault(q.commodity, {}).setdefault(q.obs_month, {})[q.expiry_month] = q.price

    @property
    def commodities(self) -> list[str]:
        return sorted(self._data)

    def obs_months(self, commodity: str) -> list[int]:
        return sorted(self._data.get(commodity, {}))

    def expiries(self, commodity: str, t: int) -> dict[int, float]:
        return self._data.get(commodity, {}).get(t, {})

    def price(self, commodity: str, t: int, expiry: int) -> float | None:
        return self._data.get(commodity, {}).get(t, {}).get(expiry)

    @classmethod
    def from_csv(cls, path) -> "QuoteBook":
        df = pd.read_csv(path, dtype={"commodity": str, "obs_month": str,
                                      "expiry_month": str})
        missing = {"commodity", "obs_month", "expiry_month", "price"} - set(df.columns)
        if missing:
            raise InvalidInputError(f"quotes CSV missing columns {sorted(missing)}")
        book = cls()
        for row in df.itertuples(index=False):
            book.add(FuturesQuote(commodity=row.commodity,
                                  obs_month=month_index(row.obs_month),
                                  expiry_month=month_index(row.expiry_month),
                                  price=float(row.price)))
        return book

    def to_csv(self, path) -> None:
        rows = []
        for c in self.commodities:
            for t in self.obs_months(c):
                for tau in sorted(self._data[c][t]):
                    rows.append((c, month_str(t), month_str(tau), self._data[c][t][tau]))
        pd.DataFrame(rows, columns=["commodity", "obs_month", "expiry_month",
                                    "price"]).to_csv(path, index=False)


def _closest_to_two(horizons) -> list[int]:
    """Sort available horizons by closeness to two months, then by size."""
    return sorted(horizons, key=lambda nu: (abs(nu - 2), nu))


def carry_factor(book: QuoteBook, commodity: str, t: int) -> float:
    """Per-month log-price slope across the two nearest non-two-month expiries."""
    quotes = book.expiries(commodity, t)
    admissible = [tau - t for tau in quotes if tau - t != 2]
    if len(admissible) < 2:
        raise MissingCarryError(
            f"{commodity} {month_str(t)}: need two non-two-month contracts "
            f"for the carry factor")
    nu1, nu2 = sorted(_closest_to_two(admissible)[:2])
    f1 = quotes[t + nu1]
    f2 = quotes[t + nu2]
    return (np.log(f2) - np.log(f1)) / (nu2 - nu1)


def implied_two_month_price(book: QuoteBook, commodity: str, t: int) -> float:
    """Two-month futures price, extrapolated via the carry factor if absent.

    When an actual two-month contract trades the quote is returned exactly.
    """
    quotes = book.expiries(commodity, t)
    if not quotes:
        raise MissingCarryError(f"{commodity} {month_str(t)}: no contracts quoted")
    if t + 2 in quotes:
        return quotes[t + 2]
    nu = _closest_to_two([tau - t for tau in quotes])[0]
    delta = carry_factor(book, commodity, t)
    return float(np.exp((2 - nu) * delta) * quotes[t + nu])


@dataclass
class ImpliedSeries:
    """Monthly implied two-month prices for one commodity."""

    commodity: str
    months: np.ndarray
    implied: np.ndarray
    carry_factors: np.ndarray
    entry_month: int = 0
    normalized: bool = False

    def __post_init__(self):
        self.months = np.asarray(self.months, dtype=int)
        self.implied = np.asarray(self.implied, dtype=float)
        if self.months.size != self.implied.size or self.months.size == 0:
            raise InvalidInputError("months and implied prices must align")
        if np.any(np.diff(self.months) != 1):
            raise InvalidInputError("implied series must cover contiguous months")
        if np.any(~np.isfinite(self.implied)) or np.any(self.implied <= 0.0):
            raise InvalidInputError("implied prices must be positive")
        self.entry_month = int(self.months[0])

    def log_at(self, t: int) -> float:
        idx = t - self.entry_month
        if not 0 <= idx < self.months.size:
            raise InvalidInputError(f"{self.commodity}: month {month_str(t)} not covered")
        return float(np.log(self.implied[idx]))


def build_implied_series(book: QuoteBook, commodity: str) -> ImpliedSeries:
    """Implied two-month prices over the commodity's quoted months."""
    months = book.obs_months(commodity)
    if not months:
        raise InvalidInputError(f"no quotes for {commodity!r}")
    if months != list(range(months[0], months[-1] + 1)):
        raise InvalidInputError(f"{commodity!r} has gaps in its quote months")
    implied = np.array([implied_two_month_price(book, commodity, t) for t in months])
    deltas = np.empty(len(months))
    for k, t in enumerate(months):
        try:
            deltas[k] = carry_factor(book, commodity, t)
        except MissingCarryError:
            deltas[k] = np.nan
    return ImpliedSeries(commodity=commodity, months=np.array(months),
                         implied=implied, carry_factors=deltas)


def normalize_entries(series_list: list[ImpliedSeries],
                      dt: float = 1.0 / 12.0) -> PricePanel:
    """Level-normalize implied series into one comparable panel.

    The base cohort (earliest entrants) starts at price 1; each later
    entrant starts at the exponential of the average incumbent log price on
    its entry month.  Log increments are preserved exactly.
    """
    if not series_list:
        raise InvalidInputError("no implied series to normalize")
    series = sorted(series_list, key=lambda s: (s.entry_month, s.commodity))
    base_month = series[0].entry_month
    last_month = max(int(s.months[-1]) for s in series)
    dates = np.arange(base_month, last_month + 1)
    assets = [s.commodity for s in series]
    values = np.full((dates.size, len(series)), np.nan)

    levels: dict[str, float] = {}  # normalized log level at entry
    for s in series:
        if s.entry_month == base_month:
            levels[s.commodity] = 0.0
        else:
            incumbents = [o for o in series
                          if o.entry_month < s.entry_month
                          and o.months[-1] >= s.entry_month]
            if not incumbents:
                raise InvalidInputError(
                    f"{s.commodity}: no incumbent series on entry month "
                    f"{month_str(s.entry_month)}")
            levels[s.commodity] = float(np.mean(
                [levels[o.commodity] + o.log_at(s.entry_month) - o.log_at(o.entry_month)
                 for o in incumbents]))
        row0 = s.entry_month - base_month
        logp = np.log(s.implied)
        values[row0:row0 + logp.size, assets.index(s.commodity)] = np.exp(
            levels[s.commodity] + logp - logp[0])
    return PricePanel(assets=assets, dates=dates, values=values, dt=dt)


def held_contract(book: QuoteBook, commodity: str, t: int) -> int:
    """Expiry of the contract held over month t: the two-month contract when
    quoted, otherwise the next expiry beyond two months."""
    quotes = book.expiries(commodity, t)
    if t + 2 in quotes:
        return t + 2
    later = [tau for tau in quotes if tau > t + 2]
    if not later:
        raise MissingCarryError(
            f"{commodity} {month_str(t)}: no holdable contract (>= two months out)")
    return min(later)


def held_contract_and_carry(book: QuoteBook, implied: ImpliedSeries,
                            t: int) -> tuple[int, float]:
    """Held contract expiry and its one-month carry.

    Carry = held-contract log return minus implied-price log change over
    [t, t+1]; the expiry is fixed within the month and the position rolls at
    month end.
    """
    c = implied.commodity
    tau = held_contract(book, c, t)
    f0 = book.price(c, t, tau)
    f1 = book.price(c, t + 1, tau)
    if f1 is None:
        raise MissingCarryError(
            f"{c} {month_str(t)}: held contract {month_str(tau)} unquoted at "
            f"{month_str(t + 1)}")
    dlog_f = np.log(f1) - np.log(f0)
    dlog_x = implied.log_at(t + 1) - implied.log_at(t)
    return tau, float(dlog_f - dlog_x)


@dataclass(frozen=True)
class EligibilityCalendar:
    """Per-commodity inclusion months plus the portfolio start month."""

    inclusion: dict[str, int]
    portfolio_start: int | None

    def eligible(self, commodity: str, t: int) -> bool:
        m = self.inclusion.get(commodity)
        return m is not None and t >= m

    def eligible_set(self, t: int) -> list[str]:
        return sorted(c for c in self.inclusion if self.eligible(c, t))


def eligibility(start_months: dict[str, int], wait_months: int = 60,
                min_commodities: int = 10) -> EligibilityCalendar:
    """Seasoning rule: a commodity joins ``wait_months`` after its data start;
    the portfolio starts when at least ``min_commodities`` have joined."""
    inclusion = {c: int(m) + wait_months for c, m in start_months.items()}
    if len(inclusion) < min_commodities:
        return EligibilityCalendar(inclusion=inclusion, portfolio_start=None)
    start = sorted(inclusion.values())[min_commodities - 1]
    return EligibilityCalendar(inclusion=inclusion, portfolio_start=start)

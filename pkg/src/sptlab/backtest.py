"""Monthly-rebalance backtest over a (possibly futures-implied) price panel.

Wealth compounds exactly in factor form: the monthly log return of a policy
is log(sum_i pi_i exp(r_i)) with r_i the holding log return of asset i
(implied-price log change plus carry, i.e. the held contract's log return
when quotes are available).  Excess growth is recovered as the residual of
the log-return decomposition, and the portfolio carry is the weighted sum of
per-asset carries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import InvalidInputError, MissingCarryError, SptlabError
from .futures import EligibilityCalendar, ImpliedSeries, QuoteBook, held_contract_and_carry
from .market import PricePanel, month_str
from .policies import WeightPolicy

ANNUALIZATION = 12


class UndefinedSharpeError(SptlabError, ValueError):
    """Relative-return standard deviation is zero; the ratio is undefined."""


def sharpe_relative(policy_returns, market_returns) -> float:
    """Annualized mean over annualized std of monthly relative log-returns."""
    r = np.asarray(policy_returns, dtype=float) - np.asarray(market_returns, dtype=float)
    if r.size < 2:
        raise InvalidInputError("need at least two periods")
    std = r.std(ddof=1)
    if std == 0.0:
        raise UndefinedSharpeError("relative returns have zero standard deviation")
    return float(r.mean() * ANNUALIZATION / (std * np.sqrt(ANNUALIZATION)))


@dataclass
class BacktestReport:
    """Per-policy monthly series plus summary statistics.

    ``dates`` are the months on which each holding period ends.  All series
    are aligned to that calendar; cumulative series are running sums.
    """

    dates: np.ndarray
    policies: list[str]
    log_returns: dict[str, np.ndarray]
    gamma_star: dict[str, np.ndarray]     # per-month gamma* dt contributions
    carry: dict[str, np.ndarray]          # per-month weighted carry
    market_name: str = "market"

    def cumulative(self, name: str) -> np.ndarray:
        return np.cumsum(self.log_returns[name])

    def relative(self, name: str) -> np.ndarray:
        return self.cumulative(name) - self.cumulative(self.market_name)

    def annualized_mean(self, name: str) -> float:
        return float(self.log_returns[name].mean() * ANNUALIZATION)

    def annualized_std(self, name: str) -> float:
        return float(self.log_returns[name].std(ddof=1) * np.sqrt(ANNUALIZATION))

    def sharpe(self, name: str) -> float:
        return sharpe_relative(self.log_returns[name], self.log_returns[self.market_name])

    def summary(self) -> dict:
        out = {}
        for name in self.policies:
            entry = {
                "annualized_mean": self.annualized_mean(name),
                "annualized_std": self.annualized_std(name),
            }
            try:
                entry["relative_sharpe"] = self.sharpe(name)
            except (UndefinedSharpeError, InvalidInputError):
                entry["relative_sharpe"] = None
            out[name] = entry
        return out

    def _frame(self, series: dict[str, np.ndarray]) -> pd.DataFrame:
        data = {"date": [month_str(d) for d in self.dates]}
        for name in self.policies:
            data[name] = series[name]
        return pd.DataFrame(data)

    def write(self, outdir) -> None:
        """Emit the report CSVs and a JSON summary into ``outdir``."""
        import pathlib

        out = pathlib.Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        self._frame(self.log_returns).to_csv(out / "returns.csv", index=False)
        self._frame({n: self.cumulative(n) for n in self.policies}).to_csv(
            out / "cumulative.csv", index=False)
        self._frame({n: self.relative(n) for n in self.policies}).to_csv(
            out / "relative.csv", index=False)
        self._frame({n: np.cumsum(self.gamma_star[n]) for n in self.policies}).to_csv(
            out / "gamma_star.csv", index=False)
        self._frame({n: np.cumsum(self.carry[n]) for n in self.policies}).to_csv(
            out / "carry.csv", index=False)
        with open(out / "summary.json", "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _holding_returns(panel: PricePanel, book: QuoteBook | None,
                     implied: dict[str, ImpliedSeries] | None, t_row: int):
    """Per-asset holding log returns and carries over [t, t+1].

    Returns (indices, dlog_x, carry) for assets priced at both ends with a
    computable carry; assets with a missing carry are dropped for the month.
    """
    t = int(panel.dates[t_row])
    vals = panel.values
    ok = np.isfinite(vals[t_row]) & np.isfinite(vals[t_row + 1])
    idx, dlx, car = [], [], []
    for j in np.flatnonzero(ok):
        d = float(np.log(vals[t_row + 1, j]) - np.log(vals[t_row, j]))
        c = 0.0
        if book is not None:
            try:
                _, c = held_contract_and_carry(book, implied[panel.assets[j]], t)
            except MissingCarryError:
                continue
        idx.append(j)
        dlx.append(d)
        car.append(c)
    return np.array(idx, dtype=int), np.array(dlx), np.array(car)


def run_backtest(panel: PricePanel, policies: list[WeightPolicy],
                 book: QuoteBook | None = None,
                 implied: dict[str, ImpliedSeries] | None = None,
                 calendar: EligibilityCalendar | None = None,
                 start: int | None = None, end: int | None = None) -> BacktestReport:
    """Run a monthly-rebalance backtest of the given weight policies.

    ``panel`` holds the (normalized implied) prices used to set weights;
    holding returns add the per-contract carry when a quote book and implied
    series are supplied.  The market policy is always evaluated so that
    relative series are defined.
    """
    if book is not None and implied is None:
        raise InvalidInputError("quote book given without implied series")
    names = [p.name for p in policies]
    if len(set(names)) != len(names):
        raise InvalidInputError("duplicate policy names")
    run_policies = list(policies)
    if "market" not in names:
        run_policies.append(WeightPolicy(kind="market"))
    all_names = [p.name for p in run_policies]

    date_list = [int(d) for d in panel.dates]
    lo = start if start is not None else (
        calendar.portfolio_start if calendar is not None else date_list[0])
    if lo is None:
        raise InvalidInputError("eligibility calendar never reaches the minimum count")
    hi = end if end is not None else date_list[-1]
    rows = [r for r, d in enumerate(date_list)
            if lo <= d < hi and r + 1 < len(date_list)]
    if not rows:
        raise InvalidInputError("empty backtest window")

    series = {n: [] for n in all_names}
    gstars = {n: [] for n in all_names}
    carries = {n: [] for n in all_names}
    months = []
    for r in rows:
        t = date_list[r]
        idx, dlx, car = _holding_returns(panel, book, implied, r)
        if calendar is not None:
            keep = np.array([calendar.eligible(panel.assets[j], t) for j in idx],
                            dtype=bool)
            idx, dlx, car = idx[keep], dlx[keep], car[keep]
        if idx.size == 0:
            raise InvalidInputError(f"no active assets at {month_str(t)}")
        prices = panel.values[r, idx]
        assets = [panel.assets[j] for j in idx]
        hold = dlx + car
        for pol in run_policies:
            w = pol.weights(prices, assets).weights
            logret = float(np.log(np.sum(w * np.exp(hold))))
            series[pol.name].append(logret)
            gstars[pol.name].append(logret - float(w @ hold))
            carries[pol.name].append(float(w @ car))
        months.append(date_list[r + 1])

    return BacktestReport(
        dates=np.array(months, dtype=int),
        policies=all_names,
        log_returns={n: np.array(v) for n, v in series.items()},
        gamma_star={n: np.array(v) for n, v in gstars.items()},
        carry={n: np.array(v) for n, v in carries.items()},
    )


def gamma_star_series(report: BacktestReport, name: str) -> np.ndarray:
    """Cumulative excess growth recovered from the log-return decomposition."""
    return np.cumsum(report.gamma_star[name])


def summary_table(report: BacktestReport) -> str:
    """Format summary statistics in the usual rows-by-policy layout.

    The market column's Sharpe entry is left blank (it is its own benchmark).
    """
    summary = report.summary()
    cols = report.policies
    width = max([16] + [len(c) + 2 for c in cols])
    header = "".ljust(20) + "".join(c.rjust(width) for c in cols)
    lines = [header]
    rows = [("Average", "annualized_mean"), ("Std Deviation", "annualized_std"),
            ("Sharpe Ratio", "relative_sharpe")]
    for label, key in rows:
        cells = []
        for c in cols:
            v = summary[c][key]
            if v is None:
                cells.append("".rjust(width))
            elif key == "relative_sharpe":
                cells.append(f"{v:.2f}".rjust(width))
            else:
                cells.append(f"{100 * v:.2f}%".rjust(width))
        lines.append(label.ljust(20) + "".join(cells))
    return "\n".join(lines)

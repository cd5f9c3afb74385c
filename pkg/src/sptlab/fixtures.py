"""Synthetic futures-quote fixture for tests and demos.

Fourteen commodities with staggered start months.  Three are "constant
contango" books whose log prices are linear in the absolute expiry month at
slope 0.03/month: the carry factor is exactly 0.03 and the roll carry is
exactly -0.03 per month, which gives a hand-checkable pipeline case.  Most
quote one-, two-, and three-month contracts; one quotes spot, one- and
four-month contracts only, so it never has a holdable-contract quote at the
next month and exercises the missing-carry drop path.
"""

from __future__ import annotations

import numpy as np

from .futures import FuturesQuote, QuoteBook
from .market import month_index

FIXTURE_SEED = 20240801
FIXTURE_BASE = month_index("2000-01")
CONTANGO_SLOPE = 0.03

# name, start offset (months from base), monthly drift, monthly vol, term slope, pattern
_SPECS = [
    ("ALPHA",   0,  0.002, 0.050, CONTANGO_SLOPE, "contango"),
    ("BRONZE",  0, -0.001, 0.060, 0.010,          "normal"),
    ("COCOA",   0,  0.001, 0.055, -0.005,         "normal"),
    ("DURUM",   3,  0.000, 0.045, 0.015,          "normal"),
    ("EMBER",   6,  0.003, 0.065, CONTANGO_SLOPE, "contango"),
    ("FLAX",    9, -0.002, 0.050, 0.008,          "normal"),
    ("GRANITE", 12, 0.001, 0.040, -0.012,         "normal"),
    ("HELIUM",  15, 0.002, 0.070, 0.020,          "normal"),
    ("INDIGO",  18, -0.001, 0.055, 0.005,         "normal"),
    ("JUTE",    21, 0.000, 0.048, CONTANGO_SLOPE, "contango"),
    ("KAPOK",   24, 0.001, 0.052, -0.008,         "normal"),
    ("LIGNITE", 27, -0.002, 0.058, 0.012,         "normal"),
    ("MAIZE",   30, 0.002, 0.047, 0.006,          "normal"),
    ("NICKEL",  33, 0.000, 0.062, 0.018,          "wide"),
]

FIXTURE_MONTHS = 144  # base + 12 years of observations


def synthetic_quote_book(seed: int = FIXTURE_SEED) -> QuoteBook:
    """Deterministic quote book with staggered starts and known contango."""
    rng = np.random.default_rng(seed)
    book = QuoteBook()
    end = FIXTURE_BASE + FIXTURE_MONTHS
    for name, offset, drift, vol, slope, pattern in _SPECS:
        start = FIXTURE_BASE + offset
        months = np.arange(start, end)
        shocks = rng.standard_normal(months.size)
        logb = np.cumsum(drift + vol * shocks) + np.log(50.0 + 10.0 * (offset % 7))
        for k, t in enumerate(months):
            if pattern == "contango":
                # log F(t, tau) = log B(t) + slope * (tau - base): the carry
                # factor is exactly `slope` and the roll carry exactly -slope
                for nu in (1, 2, 3):
                    price = np.exp(logb[k] + slope * ((t - FIXTURE_BASE) + nu))
                    book.add(FuturesQuote(name, int(t), int(t + nu), float(price)))
            elif pattern == "wide":
                for nu in (0, 1, 4):
                    price = np.exp(logb[k] + slope * nu)
                    book.add(FuturesQuote(name, int(t), int(t + nu), float(price)))
            else:
                for nu in (1, 2, 3):
                    price = np.exp(logb[k] + slope * nu)
                    book.add(FuturesQuote(name, int(t), int(t + nu), float(price)))
    return book


def write_fixture_csv(path, seed: int = FIXTURE_SEED) -> None:
    synthetic_quote_book(seed).to_csv(path)

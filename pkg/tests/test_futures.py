import numpy as np
import pytest

from sptlab.errors import InvalidInputError, MissingCarryError
from sptlab.fixtures import (CONTANGO_SLOPE, FIXTURE_BASE, synthetic_quote_book)
from sptlab.futures import (EligibilityCalendar, FuturesQuote, ImpliedSeries,
                            QuoteBook, build_implied_series, carry_factor,
                            eligibility, held_contract,
                            held_contract_and_carry, implied_two_month_price,
                            normalize_entries)
from sptlab.market import month_index


def q(c, t, tau, price):
    return FuturesQuote(c, t, tau, price)


def small_book():
    """One commodity, one observation month, expiries 1/3/4 months out."""
    book = QuoteBook()
    t = 100
    for nu, price in [(1, 10.0), (3, 12.0), (4, 13.0)]:
        book.add(q("X", t, t + nu, price))
    return book, t


class TestQuoteBook:
    def test_add_and_lookup(self):
        book, t = small_book()
        assert book.price("X", t, t + 3) == 12.0
        assert book.price("X", t, t + 2) is None
        assert book.commodities == ["X"]

    def test_bad_quotes(self):
        with pytest.raises(InvalidInputError):
            q("X", 5, 4, 1.0)
        with pytest.raises(InvalidInputError):
            q("X", 5, 6, -1.0)

    def test_csv_round_trip(self, tmp_path):
        book = synthetic_quote_book()
        path = tmp_path / "quotes.csv"
        book.to_csv(path)
        loaded = QuoteBook.from_csv(path)
        assert loaded.commodities == book.commodities
        t = FIXTURE_BASE + 7
        assert loaded.expiries("ALPHA", t) == book.expiries("ALPHA", t)

    def test_csv_missing_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("commodity,obs_month,price\nX,2000-01,3\n")
        with pytest.raises(InvalidInputError):
            QuoteBook.from_csv(path)


class TestCarryFactor:
    def test_nearest_two_non_two_month(self):
        # candidates 1, 3, 4 -> closest to two months are 1 and 3
        book, t = small_book()
        want = (np.log(12.0) - np.log(10.0)) / 2
        assert carry_factor(book, "X", t) == pytest.approx(want)

    def test_two_month_contract_excluded(self):
        book, t = small_book()
        book.add(q("X", t, t + 2, 99.0))  # must not affect the slope
        want = (np.log(12.0) - np.log(10.0)) / 2
        assert carry_factor(book, "X", t) == pytest.approx(want)

    def test_tie_prefers_shorter(self):
        book = QuoteBook([q("X", 0, 1, 10.0), q("X", 0, 3, 11.0),
                          q("X", 0, 4, 12.0)])
        # |1-2| == |3-2|: both kept, 4 dropped
        want = (np.log(11.0) - np.log(10.0)) / 2
        assert carry_factor(book, "X", 0) == pytest.approx(want)

    def test_insufficient_contracts(self):
        book = QuoteBook([q("X", 0, 2, 10.0), q("X", 0, 3, 11.0)])
        with pytest.raises(MissingCarryError):
            carry_factor(book, "X", 0)


class TestImpliedTwoMonthPrice:
    def test_exact_quote_preferred(self):
        book, t = small_book()
        book.add(q("X", t, t + 2, 11.4))
        assert implied_two_month_price(book, "X", t) == 11.4

    def test_extrapolation_from_nearest(self):
        book, t = small_book()
        delta = (np.log(12.0) - np.log(10.0)) / 2
        # nearest horizon to two months is one month; scale by e^{(2-1) delta}
        want = np.exp(delta) * 10.0
        assert implied_two_month_price(book, "X", t) == pytest.approx(want, rel=1e-12)

    def test_no_quotes(self):
        book, t = small_book()
        with pytest.raises(MissingCarryError):
            implied_two_month_price(book, "X", t + 1)


class TestImpliedSeries:
    def test_contiguity_enforced(self):
        with pytest.raises(InvalidInputError):
            ImpliedSeries("X", months=[0, 2], implied=[1.0, 1.0],
                          carry_factors=np.zeros(2))

    def test_log_at(self):
        s = ImpliedSeries("X", months=[5, 6], implied=[2.0, 4.0],
                          carry_factors=np.zeros(2))
        assert s.log_at(6) == pytest.approx(np.log(4.0))
        with pytest.raises(InvalidInputError):
            s.log_at(7)

    def test_build_rejects_gaps(self):
        book = QuoteBook([q("X", 0, 1, 10.0), q("X", 0, 3, 11.0),
                          q("X", 2, 3, 10.0), q("X", 2, 5, 11.0)])
        with pytest.raises(InvalidInputError):
            build_implied_series(book, "X")

    def test_build_on_fixture_contango(self):
        book = synthetic_quote_book()
        s = build_implied_series(book, "ALPHA")
        np.testing.assert_allclose(s.carry_factors, CONTANGO_SLOPE, atol=1e-12)
        # log implied = log B + slope * (t_rel + 2): verify against raw quotes
        t = int(s.months[3])
        f1 = book.price("ALPHA", t, t + 1)
        assert s.log_at(t) == pytest.approx(np.log(f1) + CONTANGO_SLOPE, abs=1e-12)


class TestHeldContract:
    def test_prefers_two_month(self):
        book, t = small_book()
        book.add(q("X", t, t + 2, 11.0))
        assert held_contract(book, "X", t) == t + 2

    def test_falls_back_to_next_later(self):
        book, t = small_book()
        assert held_contract(book, "X", t) == t + 3

    def test_no_holdable(self):
        book = QuoteBook([q("X", 0, 1, 10.0)])
        with pytest.raises(MissingCarryError):
            held_contract(book, "X", 0)

    def test_roll_carry_constant_contango(self):
        book = synthetic_quote_book()
        s = build_implied_series(book, "EMBER")
        for t in s.months[:6]:
            tau, car = held_contract_and_carry(book, s, int(t))
            assert tau == t + 2
            assert car == pytest.approx(-CONTANGO_SLOPE, abs=1e-12)

    def test_wide_pattern_always_missing(self):
        # spot/one/four-month books never quote the held contract next month
        book = synthetic_quote_book()
        s = build_implied_series(book, "NICKEL")
        with pytest.raises(MissingCarryError):
            held_contract_and_carry(book, s, int(s.months[0]))


class TestNormalizeEntries:
    def make(self, name, start, implied):
        n = len(implied)
        return ImpliedSeries(name, months=np.arange(start, start + n),
                             implied=implied, carry_factors=np.zeros(n))

    def test_base_cohort_starts_at_one(self):
        panel = normalize_entries([self.make("A", 0, [5.0, 10.0])])
        np.testing.assert_allclose(panel.values[:, 0], [1.0, 2.0])

    def test_log_increments_preserved(self):
        a = self.make("A", 0, [5.0, 10.0, 5.0])
        b = self.make("B", 1, [7.0, 21.0])
        panel = normalize_entries([a, b])
        np.testing.assert_allclose(np.diff(np.log(panel.values[1:, 1])),
                                   [np.log(3.0)])

    def test_entrant_anchored_to_incumbent_mean(self):
        a = self.make("A", 0, [1.0, 2.0])       # normalized log at t=1: log 2
        b = self.make("B", 0, [1.0, 8.0])       # normalized log at t=1: log 8
        c = self.make("C", 1, [3.0])
        panel = normalize_entries([a, b, c])
        want = np.exp((np.log(2.0) + np.log(8.0)) / 2)  # geometric mean 4
        assert panel.values[1, 2] == pytest.approx(want)

    def test_no_incumbent_rejected(self):
        a = self.make("A", 0, [1.0, 2.0])
        late = self.make("Z", 5, [1.0])
        with pytest.raises(InvalidInputError):
            normalize_entries([a, late])

    def test_fixture_panel_shape(self):
        book = synthetic_quote_book()
        series = [build_implied_series(book, c) for c in book.commodities]
        panel = normalize_entries(series)
        assert panel.values.shape == (144, 14)
        base = [s.commodity for s in sorted(series, key=lambda s: (s.entry_month, s.commodity))]
        assert panel.assets == base
        # base cohort normalized to 1 on the first month
        for j, c in enumerate(panel.assets[:3]):
            assert panel.values[0, j] == pytest.approx(1.0)


class TestEligibility:
    def test_inclusion_offsets(self):
        cal = eligibility({"A": 10, "B": 12}, wait_months=60, min_commodities=2)
        assert cal.inclusion == {"A": 70, "B": 72}
        assert cal.portfolio_start == 72
        assert cal.eligible("A", 70) and not cal.eligible("A", 69)
        assert cal.eligible_set(71) == ["A"]

    def test_below_minimum_has_no_start(self):
        cal = eligibility({"A": 0}, min_commodities=10)
        assert cal.portfolio_start is None

    def test_historical_start_dates(self):
        # Table of commodity data starts; the tenth five-year anniversary
        # lands on November 1977
        starts = {
            "soybean meal": "1968-11", "soybean oil": "1968-11",
            "soybeans": "1968-11", "wheat": "1969-01", "corn": "1969-01",
            "live hogs": "1969-12", "cotton": "1972-10", "silver": "1972-10",
            "orange juice": "1972-11", "platinum": "1972-11",
            "sugar": "1973-01", "lumber": "1973-07", "coffee": "1973-10",
            "oats": "1974-10", "gold": "1975-01", "live cattle": "1976-04",
            "wheat kc": "1976-05", "feeder cattle": "1977-11",
            "heating oil": "1979-10", "cocoa": "1981-01",
            "wheat minn": "1981-01", "palladium": "1983-01",
            "crude oil": "1983-04", "rough rice": "1986-09",
            "copper": "1988-11", "natural gas": "1990-04",
        }
        cal = eligibility({c: month_index(m) for c, m in starts.items()})
        assert cal.portfolio_start == month_index("1977-11")

    def test_fixture_start(self):
        book = synthetic_quote_book()
        starts = {c: book.obs_months(c)[0] for c in book.commodities}
        cal = eligibility(starts)
        assert cal.portfolio_start == month_index("2006-10")

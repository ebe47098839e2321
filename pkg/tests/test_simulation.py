import numpy as np
import pytest

from maxmin_trade.core import RDA, ConfigurationError, EfficientOnSupport, Logarithmic, NeverTrade, evaluate
from maxmin_trade.distributions import (
    build_asymmetric_triangular,
    build_det_worst_case,
    build_symmetric_triangular,
    expectation,
)
from maxmin_trade.simulation import info_design_sweep, monte_carlo_profit, seed_streams, welfare_accounting


def test_never_trade_profit_is_exactly_zero():
    assert monte_carlo_profit(NeverTrade(), build_symmetric_triangular(0.5), 1000, 1) == (0.0, 0.0)


def test_logarithmic_under_its_worst_case():
    mean, se = monte_carlo_profit(Logarithmic(0.5, 0.3), build_asymmetric_triangular(0.5, 0.3), 200_000, 7)
    assert abs(mean - 0.35) < 4 * se


def test_reproducible():
    d = build_symmetric_triangular(0.5)
    assert monte_carlo_profit(RDA(0.5), d, 5000, 3) == monte_carlo_profit(RDA(0.5), d, 5000, 3)
    assert monte_carlo_profit(RDA(0.5), d, 5000, 3) != monte_carlo_profit(RDA(0.5), d, 5000, 4)


def test_stderr_is_calibrated_across_seeds():
    d = build_symmetric_triangular(0.5)
    hits = 0
    for child in seed_streams(123, 100):
        mean, se = monte_carlo_profit(RDA(0.5), d, 10_000, child)
        hits += abs(mean - 0.25) <= 4 * se
    assert hits >= 99


def test_discrete_distribution():
    mean, se = monte_carlo_profit(RDA(0.5), build_det_worst_case(7 / 8, 1 / 8), 1000, 0)
    assert np.isfinite(mean) and se >= 0


def test_rejects_non_positive_n():
    with pytest.raises(ConfigurationError):
        monte_carlo_profit(RDA(0.5), build_symmetric_triangular(0.5), 0)


class TestWelfare:
    def test_efficient_split(self):
        w = welfare_accounting(build_symmetric_triangular(0.5), EfficientOnSupport(0.5))
        assert w.intermediary == pytest.approx(0.25, abs=1e-9)
        assert w.buyer_surplus == pytest.approx(0.25, abs=1e-9)
        assert w.seller_surplus == pytest.approx(0.25, abs=1e-9)
        assert w.total_gain == pytest.approx(0.5, abs=1e-9)
        assert w.first_best == pytest.approx(0.75, abs=1e-9)

    @pytest.mark.parametrize(
        "dist, mech",
        [
            (build_symmetric_triangular(0.3), RDA(0.3)),
            (build_asymmetric_triangular(0.5, 0.3), Logarithmic(0.5, 0.3)),
            (build_symmetric_triangular(0.4), EfficientOnSupport(0.4)),
        ],
    )
    def test_accounting_identity(self, dist, mech):
        # the realised gain from trade is split three ways
        w = welfare_accounting(dist, mech)
        realised = expectation(dist, lambda b, s: (np.asarray(b) - np.asarray(s)) * evaluate(mech, b, s).q)
        assert w.intermediary + w.total_gain == pytest.approx(realised, abs=1e-8)
        assert w.total_gain == w.buyer_surplus + w.seller_surplus
        assert realised <= w.first_best + 1e-9
        assert set(w.as_dict()) == {"intermediary", "buyer_surplus", "seller_surplus", "total_gain", "first_best"}

    def test_randomised_auction_loses_surplus(self):
        w = welfare_accounting(build_symmetric_triangular(0.5), RDA(0.5))
        assert w.intermediary == pytest.approx(0.25, abs=1e-9)
        assert w.buyer_surplus == pytest.approx(w.seller_surplus, abs=1e-9)
        assert w.intermediary + w.total_gain < w.first_best - 0.1


class TestInfoDesign:
    def test_quarter(self):
        ((r, g),) = info_design_sweep([0.25])
        assert r == 0.25 and g == pytest.approx(0.375, abs=1e-9)

    def test_peak_at_half(self):
        rows = info_design_sweep([0.3, 0.5, 0.7])
        assert max(rows, key=lambda row: row[1])[0] == 0.5

    def test_vanishes_near_one(self):
        ((_, g),) = info_design_sweep([0.99])
        assert g == pytest.approx(2 * 0.99 * 0.01, abs=1e-8)

    @pytest.mark.parametrize("r", [0.0, 1.0, 1.5])
    def test_rejects(self, r):
        with pytest.raises(ConfigurationError):
            info_design_sweep([r])


def test_seed_streams_are_deterministic():
    a = [np.random.default_rng(s).random() for s in seed_streams(5, 3)]
    b = [np.random.default_rng(s).random() for s in seed_streams(5, 3)]
    assert a == b and len(set(a)) == 3

import numpy as np
import pytest

from sptlab.errors import EvaluationError, InvalidInputError
from sptlab.fgp import (DriftAccumulator, GeneratingFunction, constant_generator,
                        fgp_drift_increment, fgp_weights, geometric_mean_generator,
                        swap_drift_increment, swap_generator)
from sptlab.market import CovarianceEstimate, WeightVector
from sptlab.policies import swap_weights


def random_mu(rng, n):
    p = rng.uniform(0.5, 5.0, size=n)
    return p / p.sum()


def random_psd(rng, n, scale=0.1):
    a = rng.standard_normal((n, n)) * scale
    return CovarianceEstimate(sigma=a @ a.T, window=10)


class TestFgpWeights:
    def test_constant_generates_market(self):
        mu = np.array([0.5, 0.3, 0.2])
        np.testing.assert_allclose(fgp_weights(constant_generator(), mu).weights, mu)

    def test_swap_function_matches_closed_form(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            mu = random_mu(rng, 4)
            got = fgp_weights(swap_generator(1, 3), mu).weights
            want = swap_weights(mu, 1, 3).weights
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_geometric_mean_generates_equal(self):
        rng = np.random.default_rng(1)
        mu = random_mu(rng, 5)
        np.testing.assert_allclose(
            fgp_weights(geometric_mean_generator(), mu).weights, 0.2, atol=1e-12)

    def test_nonpositive_mu_rejected(self):
        with pytest.raises(InvalidInputError):
            fgp_weights(constant_generator(), np.array([1.2, -0.2]))

    def test_nonpositive_function_value(self):
        bad = GeneratingFunction(fn=lambda x: x[0] - x[1])
        with pytest.raises(EvaluationError):
            fgp_weights(bad, np.array([0.3, 0.7]))


class TestFiniteDifferences:
    def test_fd_weights_match_analytic_swap(self):
        # same fn without analytic derivatives; weights agree through the
        # constant-shift gauge of the gradient
        rng = np.random.default_rng(2)
        analytic = swap_generator(0, 2)
        fd = GeneratingFunction(fn=analytic.fn, name="swap-fd")
        for _ in range(5):
            mu = random_mu(rng, 4)
            np.testing.assert_allclose(fgp_weights(fd, mu).weights,
                                       fgp_weights(analytic, mu).weights, atol=1e-7)

    def test_fd_gradient_matches_projected_analytic(self):
        rng = np.random.default_rng(3)
        analytic = geometric_mean_generator()
        fd = GeneratingFunction(fn=analytic.fn)
        mu = random_mu(rng, 4)
        ga = analytic.grad_log_at(mu)
        gf = fd.grad_log_at(mu)
        # tangent-projected steps recover the gradient up to a constant shift
        np.testing.assert_allclose(gf - gf.mean(), ga - ga.mean(),
                                   rtol=1e-6, atol=1e-8)

    def test_fd_hessian_matches_analytic(self):
        rng = np.random.default_rng(4)
        analytic = swap_generator(0, 1)
        fd = GeneratingFunction(fn=analytic.fn)
        mu = random_mu(rng, 3)
        np.testing.assert_allclose(fd.hessian_at(mu), analytic.hessian_at(mu),
                                   atol=1e-6)


class TestDriftIncrements:
    def test_zero_tau_zero_increment(self):
        mu = np.array([0.4, 0.6])
        tau = CovarianceEstimate(sigma=np.zeros((2, 2)), window=1)
        assert fgp_drift_increment(swap_generator(0, 1), mu, tau, 1 / 12) == 0.0

    def test_constant_function_zero_increment(self):
        rng = np.random.default_rng(5)
        tau = random_psd(rng, 3)
        mu = random_mu(rng, 3)
        assert fgp_drift_increment(constant_generator(), mu, tau, 1 / 12) == pytest.approx(0.0, abs=1e-15)

    def test_swap_half_half_antithetic_tau(self):
        # mu = (1/2, 1/2), tau = [[v, -v], [-v, v]] gives exactly v * dt
        v, dt = 0.09, 1 / 52
        mu = np.array([0.5, 0.5])
        tau = CovarianceEstimate(sigma=np.array([[v, -v], [-v, v]]), window=1)
        want = v * dt
        assert swap_drift_increment(mu, 0, 1, tau, dt) == pytest.approx(want, rel=1e-12)
        assert fgp_drift_increment(swap_generator(0, 1), mu, tau, dt) == pytest.approx(want, rel=1e-12)

    def test_swap_perfectly_correlated_pair(self):
        v = 0.04
        tau = CovarianceEstimate(sigma=np.full((2, 2), v), window=1)
        assert swap_drift_increment(np.array([0.7, 0.3]), 0, 1, tau, 1.0) == 0.0

    def test_swap_equal_sub_weights_diagonal(self):
        v, dt = 0.05, 1 / 12
        mu = np.array([0.5, 0.5])
        tau = CovarianceEstimate(sigma=np.diag([v, v]), window=1)
        assert swap_drift_increment(mu, 0, 1, tau, dt) == pytest.approx(v * dt / 2)

    def test_generic_equivalence_oracle(self):
        # closed form equals the generic Hessian evaluation on random inputs
        rng = np.random.default_rng(6)
        for _ in range(20):
            n = rng.integers(2, 6)
            mu = random_mu(rng, n)
            tau = random_psd(rng, n)
            i, j = rng.choice(n, size=2, replace=False)
            a = swap_drift_increment(mu, i, j, tau, 1 / 12)
            b = fgp_drift_increment(swap_generator(i, j), mu, tau, 1 / 12)
            assert a == pytest.approx(b, abs=1e-12)

    def test_swap_increment_nonnegative_for_psd(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            tau = random_psd(rng, 3)
            mu = random_mu(rng, 3)
            assert swap_drift_increment(mu, 0, 2, tau, 1 / 12) >= 0.0

    def test_dimension_mismatch(self):
        tau = CovarianceEstimate(sigma=np.zeros((3, 3)), window=1)
        with pytest.raises(InvalidInputError):
            swap_drift_increment(np.array([0.5, 0.5]), 0, 1, tau, 1.0)


def test_drift_accumulator():
    acc = DriftAccumulator()
    acc.add(0.01, 1 / 12)
    acc.add(0.02, 1 / 12)
    assert acc.theta == pytest.approx(0.03)
    assert acc.t == pytest.approx(1 / 6)

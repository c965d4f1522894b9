import math

import numpy as np
import pytest
from scipy import integrate, stats

from copula_vb.divergence import (
    KLResult,
    Potential,
    bregman,
    bregman_variance,
    bregman_variance_about,
    kl_discrete,
    kl_gauss,
    mixture_is_minimizer_check,
    mixture_minimizer,
    posterior_mean_mse_check,
    three_point_residual,
)
from copula_vb.errors import DomainError
from copula_vb.models import BivariateGaussian, Gaussian1D, MixtureWeights


def _simplex(rng, n, d):
    return rng.dirichlet(np.ones(d), size=n)


class TestThreePointIdentity:
    def test_squared_norm(self, rng):
        for _ in range(1000):
            a, b, c = rng.normal(size=(3, 4))
            assert abs(three_point_residual(Potential.SQUARED_NORM, a, b, c)) < 1e-9

    def test_negative_entropy(self, rng):
        for _ in range(1000):
            a, b, c = rng.uniform(0.05, 3.0, size=(3, 5))
            assert abs(three_point_residual(Potential.NEGATIVE_ENTROPY, a, b, c)) < 1e-9

    def test_zero_coordinate_allowed_in_first_argument(self):
        a = np.array([0.0, 1.0])
        b = np.array([0.5, 0.5])
        c = np.array([0.2, 0.8])
        assert abs(three_point_residual(Potential.NEGATIVE_ENTROPY, a, b, c)) < 1e-12


class TestBregman:
    def test_squared_norm_is_squared_distance(self, rng):
        a, b = rng.normal(size=(2, 3))
        assert bregman(Potential.SQUARED_NORM, a, b) == pytest.approx(np.sum((a - b) ** 2), rel=1e-12)

    def test_negative_entropy_is_extended_kl(self, rng):
        a, b = rng.uniform(0.1, 2.0, size=(2, 6))
        expected = np.sum(a * np.log(a / b)) - a.sum() + b.sum()
        assert bregman(Potential.NEGATIVE_ENTROPY, a, b) == pytest.approx(expected, rel=1e-10)
        assert kl_discrete(a, b).value == pytest.approx(expected, rel=1e-10)

    def test_identity_of_indiscernibles(self):
        x = np.array([0.3, 0.7])
        assert bregman(Potential.NEGATIVE_ENTROPY, x, x) == 0.0

    def test_negative_coordinate_rejected(self):
        with pytest.raises(DomainError):
            bregman(Potential.NEGATIVE_ENTROPY, np.array([-0.1, 1.1]), np.array([0.5, 0.5]))

    def test_gradient_needs_positive_coordinates(self):
        with pytest.raises(DomainError):
            bregman(Potential.NEGATIVE_ENTROPY, np.array([0.5, 0.5]), np.array([0.0, 1.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            bregman(Potential.SQUARED_NORM, np.zeros(2), np.zeros(3))


class TestBregmanVariance:
    def test_squared_norm_is_variance(self):
        v = bregman_variance(Potential.SQUARED_NORM, [[0.0], [2.0]], MixtureWeights.uniform(2))
        assert v == pytest.approx(1.0)

    @pytest.mark.parametrize("phi", list(Potential))
    def test_independent_of_reference_point(self, rng, phi):
        for _ in range(50):
            points = _simplex(rng, 5, 4)
            weights = rng.dirichlet(np.ones(5))
            ref = _simplex(rng, 1, 4)[0]
            np.testing.assert_allclose(
                bregman_variance_about(phi, points, weights, ref),
                bregman_variance(phi, points, weights),
                atol=1e-9,
            )

    def test_clustering_weightings(self, rng):
        # soft label columns of a K=4, N=30 clustering
        for _ in range(20):
            labels = _simplex(rng, 30, 4)
            weights = np.full(30, 1.0 / 30)
            ref = labels.mean(axis=0)
            np.testing.assert_allclose(
                bregman_variance_about(Potential.NEGATIVE_ENTROPY, labels, weights, ref),
                bregman_variance(Potential.NEGATIVE_ENTROPY, labels, weights),
                atol=1e-9,
            )

    def test_empty_points(self):
        with pytest.raises(DomainError):
            bregman_variance(Potential.SQUARED_NORM, np.empty((0, 2)), np.empty(0))


class TestMixtureMinimizer:
    @pytest.mark.parametrize("phi", list(Potential))
    def test_mean_beats_random_candidates(self, rng, phi):
        points = _simplex(rng, 6, 3)
        weights = rng.dirichlet(np.ones(6))
        candidates = _simplex(rng, 40, 3)
        assert mixture_is_minimizer_check(phi, points, weights, candidates)

    def test_minimizer_picks_mean(self, rng):
        points = _simplex(rng, 6, 3)
        weights = rng.dirichlet(np.ones(6))
        mean = weights @ points
        candidates = np.vstack([_simplex(rng, 10, 3), mean[None, :]])
        idx, value = mixture_minimizer(Potential.NEGATIVE_ENTROPY, points, weights, candidates)
        assert idx == 10
        np.testing.assert_allclose(value, mean)

    def test_posterior_mean_has_least_squared_error(self):
        samples = [(0.0, 0.5), (2.0, 0.5)]
        assert posterior_mean_mse_check(samples, [[0.5], [1.5], [3.0]])
        assert posterior_mean_mse_check(samples, [[1.0]])


class TestKLDiscrete:
    def test_zero_log_zero(self):
        assert kl_discrete([1.0, 0.0], [0.5, 0.5]).value == pytest.approx(math.log(2.0))

    def test_support_violation_flagged(self):
        res = kl_discrete([0.5, 0.5], [1.0, 0.0])
        assert isinstance(res, KLResult)
        assert res.support_violation
        assert math.isinf(float(res))

    def test_nonnegative(self, rng):
        for p, q in zip(_simplex(rng, 100, 5), _simplex(rng, 100, 5)):
            assert kl_discrete(p, q).value >= 0.0


class TestKLGauss:
    def test_univariate_closed_form(self):
        expected = math.log(2.0) + (1.0 + 1.0) / 8.0 - 0.5
        assert kl_gauss(Gaussian1D(0.0, 1.0), Gaussian1D(1.0, 2.0)) == pytest.approx(expected, rel=1e-12)

    def test_univariate_matches_quadrature(self):
        p, q = Gaussian1D(0.3, 1.2), Gaussian1D(-0.5, 0.7)

        def integrand(x):
            lp = stats.norm.logpdf(x, p.mean, p.scale)
            return math.exp(lp) * (lp - stats.norm.logpdf(x, q.mean, q.scale))

        numeric, _ = integrate.quad(integrand, -20.0, 20.0, epsabs=1e-12, epsrel=1e-12, limit=200)
        assert kl_gauss(p, q) == pytest.approx(numeric, abs=1e-6)

    def test_bivariate_matches_quadrature(self):
        p = BivariateGaussian(1.5, 0.8, 0.4, mean1=0.5)
        q = BivariateGaussian(1.0, 1.2, -0.3, mean2=-0.2)

        def log_density(g):
            m, prec = g.mean_vector(), np.linalg.inv(g.covariance())
            const = -math.log(2.0 * math.pi) - 0.5 * np.linalg.slogdet(g.covariance())[1]

            def f(x, y):
                dx, dy = x - m[0], y - m[1]
                return const - 0.5 * (prec[0, 0] * dx * dx + 2.0 * prec[0, 1] * dx * dy + prec[1, 1] * dy * dy)

            return f

        log_p, log_q = log_density(p), log_density(q)

        def integrand(y, x):
            lp = log_p(x, y)
            return math.exp(lp) * (lp - log_q(x, y))

        numeric, _ = integrate.dblquad(integrand, -12.0, 12.0, -12.0, 12.0, epsabs=1e-9, epsrel=1e-9)
        assert kl_gauss(p, q) == pytest.approx(numeric, abs=1e-6)

    def test_mean_field_fixed_point(self):
        rho = 0.8
        f = BivariateGaussian(2.0, 1.0, rho)
        q = BivariateGaussian(2.0 * math.sqrt(1 - rho**2), math.sqrt(1 - rho**2), 0.0)
        assert kl_gauss(q, f) == pytest.approx(-0.5 * math.log(1 - rho**2), rel=1e-12)

    def test_self_divergence_zero(self):
        g = BivariateGaussian(1.5, 0.5, -0.3, mean1=1.0)
        assert kl_gauss(g, g) == pytest.approx(0.0, abs=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            kl_gauss(Gaussian1D(0.0, 1.0), BivariateGaussian(1.0, 1.0))

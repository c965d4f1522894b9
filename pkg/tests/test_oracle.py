import itertools
import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import logsumexp

from copula_vb.engine import StoppingRule, elbo_gap_bound_check
from copula_vb.errors import DomainError, InstanceTooLargeError
from copula_vb.gmm import DataSet, GmmModel, algorithm_names, generate_data, run_algorithms
from copula_vb.oracle import enumerate_posterior


def _log_joint_direct(points, idx, K, s):
    """Integrate the means out cluster by cluster via the marginal Gaussian of the assigned points."""
    total = 0.0
    for k in range(K):
        xk = points[idx == k]
        n = xk.shape[0]
        total += math.log(2.0 * math.pi * s * s)
        if n:
            cov = np.eye(n) + s * s * np.ones((n, n))
            for d in range(2):
                total += stats.multivariate_normal(np.zeros(n), cov).logpdf(xk[:, d])
    return total


@pytest.fixture
def tiny():
    data, truth, _ = generate_data(K=2, radius=2.0, N=5, seed=3)
    return data, truth


class TestEnumeration:
    def test_log_joint_matches_direct_integration(self, tiny):
        data, _ = tiny
        exact = enumerate_posterior(data, 2, prior_scale=3.0)
        for idx in ([0, 0, 0, 0, 0], [0, 1, 0, 1, 1], [1, 1, 0, 0, 1]):
            idx = np.array(idx)
            assert exact.log_joint(idx) == pytest.approx(_log_joint_direct(data.points, idx, 2, 3.0), abs=1e-9)

    def test_evidence_is_logsumexp_over_labellings(self, tiny):
        data, _ = tiny
        exact = enumerate_posterior(data, 2, prior_scale=3.0)
        values = [exact.log_joint(np.array(lab)) for lab in itertools.product(range(2), repeat=data.N)]
        assert exact.log_evidence == pytest.approx(logsumexp(values), abs=1e-9)
        assert exact.map_log_joint == pytest.approx(max(values), abs=1e-12)
        assert exact.log_joint(exact.map_labels) == pytest.approx(exact.map_log_joint, abs=1e-12)

    def test_posterior_summaries(self, tiny):
        data, _ = tiny
        exact = enumerate_posterior(data, 2)
        np.testing.assert_allclose(exact.label_marginals.sum(axis=0), 1.0)
        # the prior is exchangeable across labels
        np.testing.assert_allclose(exact.label_marginals, 0.5, atol=1e-12)
        np.testing.assert_allclose(exact.mean_posterior[0], exact.mean_posterior[1], atol=1e-12)
        co = exact.co_assignment
        np.testing.assert_allclose(np.diag(co), 1.0)
        np.testing.assert_allclose(co, co.T, atol=1e-12)
        assert np.all((co >= -1e-12) & (co <= 1.0 + 1e-12))
        assert exact.map_labels.shape == (2, data.N)

    def test_too_large(self):
        with pytest.raises(InstanceTooLargeError):
            enumerate_posterior(DataSet(np.zeros((21, 2)), K=2), 2)

    def test_flat_prior_rejected(self, tiny):
        data, _ = tiny
        with pytest.raises(DomainError):
            enumerate_posterior(data, 2, prior_scale=None)

    def test_accepts_raw_points(self, tiny):
        data, _ = tiny
        a = enumerate_posterior(data.points, 2)
        b = enumerate_posterior(data, 2)
        assert a.log_evidence == b.log_evidence


class TestBounds:
    @pytest.mark.parametrize("n", [4, 6, 8])
    def test_every_elbo_below_log_evidence(self, n):
        model = GmmModel(2, prior_scale=10.0)
        for seed in range(4):
            rng = np.random.default_rng(seed)
            data, _, _ = generate_data(2, float(rng.uniform(1.0, 4.0)), n, seed=rng)
            exact = enumerate_posterior(data, 2, prior_scale=10.0)
            results = run_algorithms(algorithm_names(), data, model, StoppingRule())
            for name, res in results.items():
                assert res.elbo_final <= exact.log_evidence + 1e-9, name
                for trace in [res.trace] if res.trace is not None else res.extras["structure_traces"]:
                    assert elbo_gap_bound_check(trace, exact.log_evidence), name
                assert exact.map_log_joint >= exact.log_joint(res.labels) - 1e-9

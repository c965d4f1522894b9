import math

import numpy as np
import pytest

from copula_vb.bivariate import (
    BivarTrueModel,
    CvbBivarState,
    cva_update_sigma1,
    default_rho_grid,
    kl_of_state,
    reverse_update,
    run_bivariate,
    sweep_rho_init,
)
from copula_vb.engine import StoppingRule
from copula_vb.errors import DomainError


class TestUpdates:
    @pytest.mark.parametrize("rho_t", [0.0, 0.3, -0.5, 0.9])
    def test_log_zeta_is_negative_kl_after_step(self, bivar_model, rho_t):
        state = CvbBivarState(1.0, 1.0, rho_t)
        sigma1_new, zeta = cva_update_sigma1(state, bivar_model)
        after = reverse_update(state, sigma1_new)
        assert kl_of_state(after, bivar_model) == pytest.approx(-math.log(zeta), abs=1e-10)

    def test_step_never_increases_kl(self, bivar_model):
        state = CvbBivarState(0.7, 1.4, 0.2)
        sigma1_new, _ = cva_update_sigma1(state, bivar_model)
        assert kl_of_state(reverse_update(state, sigma1_new), bivar_model) <= kl_of_state(state, bivar_model)

    @pytest.mark.parametrize("rho_t", [0.4, -0.6])
    def test_reverse_keeps_conditional(self, rho_t):
        state = CvbBivarState(1.3, 0.8, rho_t)
        after = reverse_update(state, 0.9)
        assert after.sigma1_t == 0.9
        assert after.beta21_t == pytest.approx(state.beta21_t, rel=1e-12)
        assert after.sigma21_t == pytest.approx(state.sigma21_t, rel=1e-12)
        assert math.copysign(1.0, after.rho_t) == math.copysign(1.0, rho_t)

    def test_mean_field_stays_uncorrelated(self):
        after = reverse_update(CvbBivarState(1.0, 1.0, 0.0), 1.2)
        assert after.rho_t == 0.0
        assert after.sigma2_t == 1.0

    def test_invalid_model(self):
        with pytest.raises(DomainError):
            BivarTrueModel(2.0, 1.0, 1.0)


class TestMeanField:
    def test_fixed_point(self, bivar_model):
        res = run_bivariate(bivar_model, CvbBivarState(1.0, 1.0, 0.0), StoppingRule(0.01))
        assert res.trace.model == "bivariate-vb"
        assert res.trace.converged
        assert res.trace.n_iterations == 4
        assert res.state.sigma1_t**2 == pytest.approx(1.44, abs=1e-4)
        assert res.state.sigma2_t**2 == pytest.approx(0.36, abs=1e-4)
        assert res.kl_final == pytest.approx(0.5108, abs=1e-3)
        assert res.kl_init == pytest.approx(0.9184, abs=1e-3)

    def test_fixed_point_formula(self, bivar_model):
        np.testing.assert_allclose(bivar_model.vb_fixed_point_variances(), (1.44, 0.36))


class TestCopulaVB:
    @pytest.mark.parametrize("rho0", [0.6, 0.65])
    def test_exact_window_default_rule(self, bivar_model, rho0):
        res = run_bivariate(bivar_model, CvbBivarState(1.0, 1.0, rho0), StoppingRule(0.01))
        assert res.trace.model == "bivariate-cvb"
        assert res.kl_final <= 0.01

    @pytest.mark.parametrize("rho0", [0.6, 0.65, 0.7])
    def test_exact_window_tight_rule(self, bivar_model, rho0):
        res = run_bivariate(bivar_model, CvbBivarState(1.0, 1.0, rho0), StoppingRule(1e-6, 500))
        assert res.kl_final <= 0.01

    @pytest.mark.parametrize(
        ("rho0", "kl_before", "kl_bound"),
        [(-0.1, 1.0338, 0.60), (0.9, 0.7480, 0.45), (0.95, 1.0249, 0.90)],
    )
    def test_slow_first_step_does_not_stop_the_run(self, bivar_model, rho0, kl_before, kl_bound):
        res = run_bivariate(bivar_model, CvbBivarState(1.0, 1.0, rho0), StoppingRule(0.01))
        # the first step alone barely moves the KL
        assert res.kl_trace[1] == pytest.approx(kl_before, abs=1e-3)
        assert res.trace.n_iterations >= 4
        assert res.kl_final < kl_bound

    def test_every_run_frees_both_marginals(self, bivar_model):
        runs = sweep_rho_init(bivar_model, rule=StoppingRule(0.01))
        assert min(r.trace.n_iterations for r in runs) >= 3
        assert {e.slot for e in runs[0].trace.entries[1:]} == {0, 1}
        assert np.mean([r.trace.n_iterations for r in runs]) == pytest.approx(7.64, abs=0.5)

    def test_bad_initialization_still_improves(self, bivar_model):
        res = run_bivariate(bivar_model, CvbBivarState(1.0, 1.0, -0.5), StoppingRule(0.01))
        assert res.kl_final <= res.kl_init

    def test_kl_trace_nonincreasing(self, bivar_model):
        for run in sweep_rho_init(bivar_model):
            kl = np.array(run.kl_trace)
            assert np.all(np.diff(kl) <= 1e-9)
            assert run.trace.is_monotone()

    def test_snapshots(self, bivar_model):
        res = run_bivariate(bivar_model, CvbBivarState(1.0, 1.0, 0.3), keep_snapshots=True)
        snap = res.trace.entries[-1].snapshot
        assert snap["rho_t"] == pytest.approx(res.state.rho_t)

    def test_row(self, bivar_model):
        row = run_bivariate(bivar_model, CvbBivarState(1.0, 1.0, 0.3)).to_row("cvb")
        assert list(row) == ["algorithm", "rho_init", "kl_init", "kl_final", "iters", "converged"]
        assert row["rho_init"] == 0.3


def test_default_grid():
    grid = default_rho_grid()
    assert grid.size == 39
    assert grid[0] == pytest.approx(-0.95)
    assert grid[-1] == pytest.approx(0.95)
    assert 0.0 in grid
    assert 0.65 in grid


def test_sweep_size(bivar_model):
    assert len(sweep_rho_init(bivar_model)) == 39

import json

import pytest

from copula_vb import experiments
from copula_vb.config import Settings, parse_config
from copula_vb.errors import MonotonicityError
from copula_vb.experiments import collect, run_experiment


def _gmm_cfg(**overrides):
    data = {
        "experiment": "gmm",
        "seeds": {"count": 2, "base": 5},
        "gmm": {"K": 2, "N": 12, "radii": [2.0, 4.0], "cvb_anchor_subsample": 3},
    }
    data.update(overrides)
    return parse_config(data)


class TestBivariateSuite:
    def test_grid_plus_mean_field_rows(self):
        res = collect(parse_config({"experiment": "bivariate", "seeds": {"count": 1}}))
        assert res.ok
        assert len(res.rows) == 40
        assert [r["algorithm"] for r in res.rows].count("cvb") == 39
        vb = res.rows[-1]
        assert vb["algorithm"] == "vb" and vb["rho_init"] == 0.0
        assert vb["iters"] == 4
        assert res.summary["vb"]["variances"] == pytest.approx([1.44, 0.36], abs=1e-4)
        assert {0.6, 0.65} <= set(res.summary["cvb"]["exact_window"])
        assert res.summary["cvb"]["iterations"]["mean"] == pytest.approx(7.64, abs=0.5)
        assert res.summary["cvb"]["truncated"] == 0

    def test_traces_on_request(self, tmp_path):
        cfg = parse_config({"experiment": "bivariate", "output": {"traces": True}})
        assert run_experiment(cfg, out_dir=tmp_path) == 0
        assert (tmp_path / "trace_cvb_rho_0p65.csv").exists()
        assert (tmp_path / "trace_cvb_rho_m0p50.csv").exists()
        assert (tmp_path / "trace_vb_rho_0p00.csv").exists()

    def test_monotonicity_violation_sets_exit_status(self, tmp_path, monkeypatch):
        def broken(model, init, rule=None, *, keep_snapshots=False):
            raise MonotonicityError("bivariate-cvb", 2, -1.0, -2.0)

        monkeypatch.setattr(experiments, "run_bivariate", broken)
        cfg = parse_config({"experiment": "bivariate"})
        assert run_experiment(cfg, out_dir=tmp_path) == 1
        summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        assert summary["ok"] is False
        assert len(summary["violations"]) == 40


    def test_settings_are_the_last_fallback(self, tmp_path):
        settings = Settings(out_dir=str(tmp_path / "settings"))
        assert run_experiment(parse_config({"experiment": "bivariate"}), settings=settings) == 0
        assert (tmp_path / "settings" / "runs.csv").exists()
        cfg = parse_config({"experiment": "bivariate", "output": {"out_dir": str(tmp_path / "file")}})
        assert run_experiment(cfg, settings=settings) == 0
        assert (tmp_path / "file" / "summary.json").exists()


class TestGmmSuite:
    def test_rows_sorted_and_complete(self):
        res = collect(_gmm_cfg())
        assert res.ok
        assert len(res.rows) == 2 * 2 * 7
        keys = [(r["radius"], r["seed"], r["algorithm"]) for r in res.rows]
        assert keys == sorted(keys)
        assert set(res.summary["by_radius"]) == {"2", "4"}
        assert res.summary["by_radius"]["4"]["vb"]["runs"] == 2

    def test_summary_carries_elbo_and_heuristic_flag(self):
        by_radius = collect(_gmm_cfg()).summary["by_radius"]
        for name in ("kmeans", "vb", "cvb1", "cvb2", "cvb3"):
            assert set(by_radius["2"][name]["elbo_final"]) == {"mean", "std"}
        assert by_radius["2"]["cvb1"]["heuristic_elbo"] is True
        assert by_radius["2"]["cvb3"]["heuristic_elbo"] is True
        assert by_radius["2"]["cvb2"]["heuristic_elbo"] is False
        assert by_radius["2"]["vb"]["heuristic_elbo"] is False

    def test_output_independent_of_thread_count(self, tmp_path):
        cfg = _gmm_cfg()
        assert run_experiment(cfg, out_dir=tmp_path / "one", threads=1) == 0
        assert run_experiment(cfg, out_dir=tmp_path / "four", threads=4) == 0
        for name in ("runs.csv", "summary.json"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "four" / name).read_bytes()

    def test_repeat_is_byte_identical(self, tmp_path):
        cfg = _gmm_cfg()
        run_experiment(cfg, out_dir=tmp_path / "a")
        run_experiment(cfg, out_dir=tmp_path / "b")
        assert (tmp_path / "a" / "runs.csv").read_bytes() == (tmp_path / "b" / "runs.csv").read_bytes()

    def test_structure_traces_written(self, tmp_path):
        cfg = _gmm_cfg(output={"traces": True}, seeds={"count": 1, "base": 5})
        run_experiment(cfg, out_dir=tmp_path)
        assert len(list(tmp_path.glob("trace_r_2p0_s_0_cvb_j*.csv"))) == 3
        assert (tmp_path / "trace_r_2p0_s_0_vb.csv").exists()


class TestOracleSuite:
    def test_bounds_hold(self):
        cfg = parse_config(
            {"experiment": "oracle-check", "seeds": {"count": 3}, "oracle": {"sizes": [4, 5]}}
        )
        res = collect(cfg)
        assert res.ok, res.violations
        assert len(res.rows) == 3 * 7
        assert all(r["bound_ok"] and r["map_ok"] for r in res.rows)
        assert [r["n"] for r in res.rows[::7]] == [4, 5, 4]

    def test_exact_purity_follows_the_data(self):
        # clusters eight standard deviations apart: the MAP labelling is the truth
        cfg = parse_config(
            {
                "experiment": "oracle-check",
                "seeds": {"count": 4},
                "oracle": {"sizes": [6], "radius_min": 3.9, "radius_max": 4.0, "algorithms": ["kmeans"]},
            }
        )
        res = collect(cfg)
        assert [r["exact_purity"] for r in res.rows] == [1.0] * 4
        assert res.summary["exact_purity"]["mean"] == 1.0


@pytest.mark.slow
def test_monotonicity_suite_desk_scale():
    cfg = parse_config(
        {
            "experiment": "gmm",
            "seeds": {"count": 100},
            "gmm": {"K": 4, "N": 100, "radii": [2.0, 4.0], "algorithms": ["kmeans", "em1", "em2", "vb", "cvb2"]},
        }
    )
    res = collect(cfg, threads=4)
    assert res.ok, res.violations[:5]


@pytest.mark.slow
def test_oracle_suite_desk_scale():
    res = collect(parse_config({"experiment": "oracle-check", "seeds": {"count": 200}}), threads=4)
    assert res.ok, res.violations[:5]
    assert len(res.rows) == 200 * 7
    assert all(r["bound_ok"] and r["map_ok"] for r in res.rows)
    assert 0.5 <= res.summary["exact_purity"]["mean"] <= 1.0


@pytest.mark.slow
def test_oracle_exact_purity_on_separated_instances():
    cfg = parse_config(
        {
            "experiment": "oracle-check",
            "seeds": {"count": 200},
            "oracle": {"radius_min": 3.0, "radius_max": 4.0},
        }
    )
    res = collect(cfg, threads=4)
    assert res.ok, res.violations[:5]
    exact = res.summary["exact_purity"]["mean"]
    assert exact >= 0.99
    for name, stats in res.summary["algorithms"].items():
        assert exact >= stats["purity"]["mean"] - 0.01, name


@pytest.mark.slow
def test_purity_ordering_desk_scale():
    cfg = parse_config(
        {
            "experiment": "gmm",
            "seeds": {"count": 200},
            "gmm": {"K": 4, "N": 100, "radii": [3.5, 4.0, 4.5, 5.0], "cvb_anchor_subsample": 20},
        }
    )
    res = collect(cfg, threads=4)
    assert res.ok, res.violations[:5]
    for radius, per_algo in res.summary["by_radius"].items():
        mean = {name: stats["purity"]["mean"] for name, stats in per_algo.items()}
        assert mean["cvb3"] >= mean["vb"] - 0.01, radius
        assert abs(mean["em1"] - mean["kmeans"]) <= 0.01, radius
        assert abs(mean["em2"] - mean["vb"]) <= 0.01, radius

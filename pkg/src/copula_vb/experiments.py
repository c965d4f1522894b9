"""Seeded Monte Carlo suites behind ``copula-vb run``.

Each suite turns an :class:`ExperimentConfig` into result rows, a JSON summary
and (optionally) per-run ELBO traces. Run ``r`` of a suite draws from its own
Philox stream keyed by ``(seeds.base, r)``, and rows are sorted before they
are written, so the output bytes do not depend on the thread count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence, TypeVar

import numpy as np
from tqdm import tqdm

from .bivariate import BivarTrueModel, CvbBivarState, default_rho_grid, run_bivariate
from .config import ExperimentConfig, Settings
from .engine import StoppingRule, Trace, elbo_gap_bound_check
from .errors import MonotonicityError
from .export import (
    BIVARIATE_COLUMNS,
    GMM_COLUMNS,
    ORACLE_COLUMNS,
    TRACE_COLUMNS,
    ensure_out_dir,
    write_csv,
    write_json,
)
from .gmm import (
    GmmModel,
    generate_data,
    make_rng,
    mse_means,
    purity,
    run_algorithms,
    select_anchors,
)
from .oracle import enumerate_posterior

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

MAP_SLACK = 1e-9


@dataclass
class ExperimentResult:
    experiment: str
    rows: list[dict[str, Any]]
    columns: list[str]
    summary: dict[str, Any]
    traces: dict[str, Trace] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _map_parallel(fn: Callable[[T], R], jobs: Sequence[T], threads: int, progress: bool, desc: str) -> list[R]:
    """Apply ``fn`` to every job; results come back in job order whatever the thread count."""
    if threads <= 1:
        it = tqdm(jobs, desc=desc, disable=not progress)
        return [fn(j) for j in it]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        futures = [executor.submit(fn, j) for j in jobs]
        return [f.result() for f in tqdm(futures, desc=desc, disable=not progress)]


def _rule(cfg: ExperimentConfig) -> StoppingRule:
    return StoppingRule(cfg.stopping.epsilon, cfg.stopping.max_iters)


def _mean_std(values: Sequence[float]) -> dict[str, float]:
    arr = np.asarray(values, dtype=float)
    return {"mean": float(arr.mean()), "std": float(arr.std())}


def _trace_id(*parts: Any) -> str:
    return "_".join(str(p) for p in parts).replace(".", "p").replace("-", "m")


# bivariate


def run_bivariate_suite(cfg: ExperimentConfig, threads: int = 1, progress: bool = False) -> ExperimentResult:
    b = cfg.bivariate
    model = BivarTrueModel(b.sigma1, b.sigma2, b.rho)
    rule = _rule(cfg)
    keep = cfg.output.traces
    grid = [float(r) for r in default_rho_grid(b.rho_step)]
    inits = [("cvb", CvbBivarState(b.sigma_init, b.sigma_init, r)) for r in grid]
    inits.append(("vb", CvbBivarState(b.sigma_init, b.sigma_init, 0.0)))

    def job(item: tuple[str, CvbBivarState]):
        algorithm, init = item
        try:
            return algorithm, run_bivariate(model, init, rule, keep_snapshots=keep), None
        except MonotonicityError as e:
            return algorithm, None, f"bivariate {algorithm} rho_init={init.rho_t:g}: {e}"

    rows: list[dict[str, Any]] = []
    traces: dict[str, Trace] = {}
    violations: list[str] = []
    cvb_runs = []
    vb_result = None
    for algorithm, res, err in _map_parallel(job, inits, threads, progress, "bivariate"):
        if err:
            violations.append(err)
            continue
        rows.append(res.to_row(algorithm))
        if keep:
            traces[_trace_id(algorithm, "rho", f"{res.rho_init:.2f}")] = res.trace
        if algorithm == "cvb":
            cvb_runs.append(res)
        else:
            vb_result = res

    summary: dict[str, Any] = {"model": b.model_dump(), "grid_size": len(grid)}
    if cvb_runs:
        summary["cvb"] = {
            "iterations": _mean_std([r.trace.n_iterations for r in cvb_runs]),
            "kl_final": _mean_std([r.kl_final for r in cvb_runs]),
            "exact_window": [r.rho_init for r in cvb_runs if r.kl_final <= 0.01],
            "truncated": sum(r.trace.truncated for r in cvb_runs),
        }
    if vb_result is not None:
        summary["vb"] = {
            "iterations": vb_result.trace.n_iterations,
            "kl_final": vb_result.kl_final,
            "variances": [vb_result.state.sigma1_t**2, vb_result.state.sigma2_t**2],
            "fixed_point": list(model.vb_fixed_point_variances()),
        }
    return ExperimentResult("bivariate", rows, BIVARIATE_COLUMNS, summary, traces, violations)


# gmm


def run_gmm_suite(cfg: ExperimentConfig, threads: int = 1, progress: bool = False) -> ExperimentResult:
    g = cfg.gmm
    rule = _rule(cfg)
    model = GmmModel(g.K, g.prior_scale)
    count = cfg.seeds.count
    keep = cfg.output.traces
    jobs = [(ri, radius, r) for ri, radius in enumerate(g.radii) for r in range(count)]

    def job(item: tuple[int, float, int]):
        ri, radius, r = item
        rng = make_rng(cfg.seeds.base, ri * count + r)
        data, truth, means = generate_data(g.K, radius, g.N, rng)
        anchors = select_anchors(g.N, g.cvb_anchor_subsample, rng)
        try:
            results = run_algorithms(g.algorithms, data, model, rule, anchors=anchors)
        except MonotonicityError as e:
            return [], {}, [f"gmm radius={radius:g} seed={r}: {e}"]
        rows = []
        traces: dict[str, Trace] = {}
        for name, res in results.items():
            rows.append(
                {
                    "seed": r,
                    "radius": radius,
                    "algorithm": name,
                    "purity": purity(res.labels, truth),
                    "mse": mse_means(res.means, means),
                    "elbo_final": res.elbo_final,
                    "iters": res.iterations,
                    "truncated": res.truncated,
                    "heuristic_elbo": res.heuristic_elbo,
                }
            )
            if keep and res.trace is not None:
                traces[_trace_id("r", radius, "s", r, name)] = res.trace
        if keep:
            shared = next((res.extras["structure_traces"] for res in results.values() if "structure_traces" in res.extras), [])
            for t in shared:
                traces[_trace_id("r", radius, "s", r, t.model.replace("[j=", "_j").rstrip("]"))] = t
        return rows, traces, []

    rows: list[dict[str, Any]] = []
    traces: dict[str, Trace] = {}
    violations: list[str] = []
    for part_rows, part_traces, part_violations in _map_parallel(job, jobs, threads, progress, "gmm"):
        rows.extend(part_rows)
        traces.update(part_traces)
        violations.extend(part_violations)
    rows.sort(key=lambda x: (x["radius"], x["seed"], x["algorithm"]))

    by_radius: dict[str, dict[str, Any]] = {}
    for radius in g.radii:
        per_algo: dict[str, Any] = {}
        for name in sorted({x["algorithm"] for x in rows}):
            sel = [x for x in rows if x["radius"] == radius and x["algorithm"] == name]
            if not sel:
                continue
            per_algo[name] = {
                "purity": _mean_std([x["purity"] for x in sel]),
                "mse": _mean_std([x["mse"] for x in sel]),
                "elbo_final": _mean_std([x["elbo_final"] for x in sel]),
                "heuristic_elbo": any(bool(x["heuristic_elbo"]) for x in sel),
                "iterations": _mean_std([x["iters"] for x in sel]),
                "truncated": sum(bool(x["truncated"]) for x in sel),
                "runs": len(sel),
            }
        by_radius[format(radius, "g")] = per_algo
    summary = {"K": g.K, "N": g.N, "runs_per_radius": count, "by_radius": by_radius}
    return ExperimentResult("gmm", rows, GMM_COLUMNS, summary, traces, violations)


# oracle


def run_oracle_suite(cfg: ExperimentConfig, threads: int = 1, progress: bool = False) -> ExperimentResult:
    o = cfg.oracle
    rule = _rule(cfg)
    model = GmmModel(o.K, o.prior_scale)

    def job(r: int):
        rng = make_rng(cfg.seeds.base, r)
        n = o.sizes[r % len(o.sizes)]
        radius = float(rng.uniform(o.radius_min, o.radius_max))
        data, truth, _ = generate_data(o.K, radius, n, rng)
        exact = enumerate_posterior(data, o.K, o.prior_scale)
        # label marginals are symmetric under relabelling; the MAP labelling is not
        exact_purity = purity(exact.map_labels, truth)
        try:
            results = run_algorithms(o.algorithms, data, model, rule)
        except MonotonicityError as e:
            return [], [f"oracle seed={r}: {e}"]
        rows = []
        violations = []
        for name, res in results.items():
            traces = [res.trace] if res.trace is not None else []
            traces += res.extras.get("structure_traces", [])
            bound_ok = res.elbo_final <= exact.log_evidence + 1e-9 and all(
                elbo_gap_bound_check(t, exact.log_evidence) for t in traces
            )
            algo_log_joint = exact.log_joint(res.labels)
            map_ok = exact.map_log_joint >= algo_log_joint - MAP_SLACK
            if not bound_ok:
                violations.append(f"oracle seed={r} {name}: ELBO {res.elbo_final:.6g} above log evidence {exact.log_evidence:.6g}")
            if not map_ok:
                violations.append(f"oracle seed={r} {name}: labelling beats the enumerated MAP")
            rows.append(
                {
                    "seed": r,
                    "n": n,
                    "radius": radius,
                    "algorithm": name,
                    "elbo_final": res.elbo_final,
                    "log_evidence": exact.log_evidence,
                    "bound_ok": bound_ok,
                    "map_log_joint": exact.map_log_joint,
                    "algo_log_joint": algo_log_joint,
                    "map_ok": map_ok,
                    "purity": purity(res.labels, truth),
                    "exact_purity": exact_purity,
                }
            )
        return rows, violations

    rows: list[dict[str, Any]] = []
    violations: list[str] = []
    for part_rows, part_violations in _map_parallel(job, range(cfg.seeds.count), threads, progress, "oracle"):
        rows.extend(part_rows)
        violations.extend(part_violations)
    rows.sort(key=lambda x: (x["seed"], x["algorithm"]))

    per_algo = {}
    for name in sorted({x["algorithm"] for x in rows}):
        sel = [x for x in rows if x["algorithm"] == name]
        per_algo[name] = {
            "purity": _mean_std([x["purity"] for x in sel]),
            "bound_failures": sum(not x["bound_ok"] for x in sel),
            "map_failures": sum(not x["map_ok"] for x in sel),
        }
    exact_purity = {x["seed"]: x["exact_purity"] for x in rows}
    summary = {
        "K": o.K,
        "instances": cfg.seeds.count,
        "prior_scale": o.prior_scale,
        "exact_purity": _mean_std(list(exact_purity.values())) if exact_purity else None,
        "algorithms": per_algo,
    }
    return ExperimentResult("oracle-check", rows, ORACLE_COLUMNS, summary, {}, violations)


_SUITES: dict[str, Callable[[ExperimentConfig, int, bool], ExperimentResult]] = {
    "bivariate": run_bivariate_suite,
    "gmm": run_gmm_suite,
    "oracle-check": run_oracle_suite,
}


def collect(cfg: ExperimentConfig, threads: int = 1, progress: bool = False) -> ExperimentResult:
    logger.info("running %s with %d thread(s)", cfg.experiment, threads)
    return _SUITES[cfg.experiment](cfg, threads, progress)


def write_result(result: ExperimentResult, out_dir: str | Path) -> list[str]:
    outp = ensure_out_dir(out_dir)
    written = [write_csv(outp / "runs.csv", result.rows, result.columns, result.experiment)]
    summary = {
        "experiment": result.experiment,
        "rows": len(result.rows),
        "ok": result.ok,
        "violations": result.violations,
        **result.summary,
    }
    written.append(write_json(outp / "summary.json", summary))
    for trace_id in sorted(result.traces):
        rows = result.traces[trace_id].to_rows()
        written.append(write_csv(outp / f"trace_{trace_id}.csv", rows, TRACE_COLUMNS, "trace"))
    return written


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: str | Path | None = None,
    threads: int | None = None,
    progress: bool = False,
    *,
    settings: Settings | None = None,
) -> int:
    """Run the configured suite, write its files and return the process exit status.

    Explicit arguments win over the config file, which wins over ``settings``.
    Raises :class:`ConfigError` before any work when the output directory is not
    writable.
    """
    settings = settings or Settings()
    out = out_dir or cfg.output.out_dir or settings.out_dir
    workers = threads or cfg.threads or settings.threads
    ensure_out_dir(out)
    logger.info("running %s (%d seeds, %d thread(s)) into %s", cfg.experiment, cfg.seeds.count, workers, out)
    result = collect(cfg, workers, progress)
    for path in write_result(result, out):
        logger.info("wrote %s", path)
    for v in result.violations:
        logger.error("violation: %s", v)
    if not result.ok:
        return 1
    logger.info("%s: %d rows, no violations", cfg.experiment, len(result.rows))
    return 0

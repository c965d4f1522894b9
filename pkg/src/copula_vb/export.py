from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import ConfigError

SCHEMA_VERSION = 1

BIVARIATE_COLUMNS = ["algorithm", "rho_init", "kl_init", "kl_final", "iters", "converged"]
GMM_COLUMNS = [
    "seed",
    "radius",
    "algorithm",
    "purity",
    "mse",
    "elbo_final",
    "iters",
    "truncated",
    "heuristic_elbo",
]
ORACLE_COLUMNS = [
    "seed",
    "n",
    "radius",
    "algorithm",
    "elbo_final",
    "log_evidence",
    "bound_ok",
    "map_log_joint",
    "algo_log_joint",
    "map_ok",
    "purity",
    "exact_purity",
]
TRACE_COLUMNS = ["iteration", "slot", "elbo", "delta", "flags"]


def format_value(v: Any) -> str:
    """Deterministic text for CSV cells."""
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    if v is None:
        return ""
    return str(v)


def ensure_out_dir(out_dir: str | Path) -> Path:
    outp = Path(out_dir)
    try:
        outp.mkdir(parents=True, exist_ok=True)
        marker = outp / ".write-test"
        marker.write_text("", encoding="utf-8")
        marker.unlink()
    except OSError as e:
        raise ConfigError(f"output directory is not writable: {outp} ({e})") from e
    return outp


def write_csv(path: str | Path, rows: Iterable[dict[str, Any]], columns: Sequence[str], kind: str) -> str:
    p = Path(path)
    with open(p, "w", encoding="utf-8", newline="") as f:
        f.write(f"# copula-vb {kind} schema v{SCHEMA_VERSION}: {','.join(columns)}\n")
        w = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: format_value(r.get(k)) for k in columns})
    return str(p)


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return format_value(v)
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return v


def write_json(path: str | Path, payload: dict[str, Any]) -> str:
    p = Path(path)
    p.write_text(json.dumps(_jsonable(payload), ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return str(p)

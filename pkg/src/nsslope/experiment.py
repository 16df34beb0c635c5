"""Monte Carlo sweeps over sample size, repetition and method."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .estimator import FitConfig, fit_mb_lasso, fit_nsslope
from .metrics import MetricsReport, aggregate, edge_metrics
from .synth import ExperimentConfig, make_model, sample_mvn

__all__ = [
    "METHODS",
    "ROW_FIELDS",
    "SweepRow",
    "aggregate_rows",
    "default_workers",
    "fit_method",
    "run_cell",
    "run_sweep",
    "write_rows_csv",
]

METHODS = ("nsslope", "mblasso")

ROW_FIELDS = (
    "method", "structure", "p", "n", "rep", "seed", "status",
    "fdr", "power", "mse_diag", "mse_offdiag",
    "true_positives", "false_positives", "total_rejections",
    "sweeps", "converged", "error",
)


@dataclass(frozen=True)
class SweepRow:
    method: str
    structure: str
    p: int
    n: int
    rep: int
    seed: int
    status: str
    report: MetricsReport | None = None
    sweeps: int = 0
    converged: bool = False
    error: str = ""

    def as_record(self) -> dict:
        rec = {
            "method": self.method, "structure": self.structure, "p": self.p, "n": self.n,
            "rep": self.rep, "seed": self.seed, "status": self.status,
            "sweeps": self.sweeps, "converged": int(self.converged), "error": self.error,
        }
        rep = self.report.to_dict() if self.report else {}
        for key in ("fdr", "power", "mse_diag", "mse_offdiag",
                    "true_positives", "false_positives", "total_rejections"):
            val = rep.get(key, "")
            rec[key] = f"{val:.17g}" if isinstance(val, float) else val
        return rec


def default_workers() -> int:
    env = os.environ.get("NSSLOPE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def fit_method(method: str, data, config: ExperimentConfig, fit_config: FitConfig):
    if method == "nsslope":
        return fit_nsslope(data, replace(fit_config, q=config.q))
    if method == "mblasso":
        return fit_mb_lasso(data, config.alpha, fit_config)
    raise ValueError(f"unknown method {method!r}")


def run_cell(config: ExperimentConfig, rep: int, methods=METHODS,
             fit_config: FitConfig | None = None) -> list[SweepRow]:
    """Simulate one repetition and score every method on the same sample."""
    fit_config = fit_config or FitConfig()
    seed = config.seed + rep
    base = dict(structure=config.structure, p=config.p, n=config.n, rep=rep, seed=seed)
    try:
        model = make_model(config)
        data = sample_mvn(model, config.n, seed)
    except Exception as exc:  # recorded, the sweep keeps going
        return [SweepRow(method=m, status="error", error=f"{type(exc).__name__}: {exc}", **base)
                for m in methods]
    rows = []
    for method in methods:
        try:
            est = fit_method(method, data, config, fit_config)
            rows.append(SweepRow(method=method, status="ok", report=edge_metrics(est, model),
                                 sweeps=est.sweep_count, converged=est.converged, **base))
        except Exception as exc:
            rows.append(SweepRow(method=method, status="error",
                                 error=f"{type(exc).__name__}: {exc}", **base))
    return rows


def _cell_job(args):
    return run_cell(*args)


def run_sweep(base: ExperimentConfig, ns, methods=METHODS, fit_config: FitConfig | None = None,
              workers: int | None = None) -> list[SweepRow]:
    """Run ``base.repetitions`` repetitions for each sample size in `ns`.

    Repetition `r` uses seed ``base.seed + r`` regardless of `n`. Rows come
    back sorted by (method, n, rep) so the output does not depend on
    scheduling.
    """
    fit_config = fit_config or FitConfig()
    jobs = [(replace(base, n=int(n)), r, tuple(methods), fit_config)
            for n in ns for r in range(base.repetitions)]
    workers = workers or default_workers()
    if workers <= 1 or len(jobs) <= 1:
        results = [_cell_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_job, jobs))
    order = {m: k for k, m in enumerate(methods)}
    rows = [row for cell in results for row in cell]
    rows.sort(key=lambda r: (order[r.method], r.n, r.rep))
    return rows


def aggregate_rows(rows) -> list[dict]:
    """Mean and standard error per (method, n) over successful rows."""
    cells: dict[tuple, list[SweepRow]] = {}
    for row in rows:
        cells.setdefault((row.method, row.n), []).append(row)
    out = []
    for (method, n), cell in cells.items():
        ok = [r.report for r in cell if r.status == "ok"]
        entry = {"method": method, "n": n, "repetitions": len(cell),
                 "failures": len(cell) - len(ok)}
        if ok:
            means, ses = aggregate(ok)
            entry["mean"], entry["se"] = means, ses
        out.append(entry)
    return out


def write_rows_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=ROW_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_record())

"""Command-line interface: simulate, fit, eval, sweep, lambda.

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
Options can also come from ``--config FILE``: either flat ``key=value``
lines or a ``manifest.json`` written by a previous run. Flags win over
the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import center_columns, read_matrix_csv, write_matrix_csv
from .estimator import FitConfig, fit_mb_lasso, fit_nsslope, lasso_threshold, write_edge_list
from .experiment import METHODS, aggregate_rows, default_workers, run_sweep, write_rows_csv
from .lambda_seq import adjusted_sequence, bh_sequence
from .metrics import edge_metrics
from .synth import ExperimentConfig, GroundTruthModel, make_model, sample_mvn

logger = logging.getLogger("nsslope")

# defaults applied after config file and flags
DEFAULTS = {
    "simulate": dict(structure="block", block_size=4, off_value=0.3, hub_value=0.2,
                     hub_layout="star", seed=0, out="."),
    "fit": dict(method="nsslope", q=0.05, alpha=0.05, outer_tol=1e-3, gap_tol=1e-7,
                max_sweeps=100, max_iter=20000, parallel=False, workers=None,
                no_adjust=False, no_normalize=False, header=False, strict=False, out="."),
    "eval": dict(zero_tol=1e-10, out=None),
    "sweep": dict(structure="block", p=40, ns="100,200,400", reps=25, methods="nsslope,mblasso",
                  block_size=4, off_value=0.3, hub_value=0.2, hub_layout="star", seed=0,
                  q=0.05, alpha=0.05, outer_tol=1e-3, gap_tol=1e-7, max_sweeps=100,
                  max_iter=20000, workers=None, out="."),
    "lambda": dict(kind="adjusted", q=0.05, n=None, alpha=0.05, out=None),
}
REQUIRED = {"simulate": ("p", "n"), "fit": ("input",), "eval": ("theta", "truth"),
            "sweep": (), "lambda": ("d",)}


class UsageError(Exception):
    pass


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    val = str(text).strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file or a previous manifest.json")
    p.add_argument("--out", help="output directory (or file for eval/lambda)")
    p.add_argument("-v", "--verbose", action="store_true", default=None)


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--structure", choices=("block", "hub"))
    p.add_argument("--p", type=int, help="number of variables")
    p.add_argument("--block-size", type=int)
    p.add_argument("--off-value", type=float, help="within-block precision entry")
    p.add_argument("--hub-value", type=float)
    p.add_argument("--hub-layout", choices=("star", "two_hub"))
    p.add_argument("--seed", type=int)


def _add_solver(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=float, help="target FDR level for nsSLOPE")
    p.add_argument("--alpha", type=float, help="FWER level for the l1 baseline")
    p.add_argument("--outer-tol", type=float)
    p.add_argument("--gap-tol", type=float)
    p.add_argument("--max-sweeps", type=int)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsslope", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a synthetic dataset")
    _add_common(p)
    _add_model(p)
    p.add_argument("--n", type=int, help="number of samples")

    p = sub.add_parser("fit", help="estimate a precision matrix from X.csv")
    _add_common(p)
    p.add_argument("input", nargs="?", help="CSV matrix, samples in rows")
    p.add_argument("--method", choices=METHODS)
    _add_solver(p)
    p.add_argument("--parallel", action="store_true", default=None,
                   help="Jacobi sweeps with concurrent sub-problems")
    p.add_argument("--no-adjust", action="store_true", default=None,
                   help="plain BH weights instead of the adjusted sequence")
    p.add_argument("--no-normalize", action="store_true", default=None)
    p.add_argument("--header", action="store_true", default=None,
                   help="input CSV has a header row")
    p.add_argument("--strict", action="store_true", default=None,
                   help="exit 1 when the fit does not converge")

    p = sub.add_parser("eval", help="score an estimate against truth.json")
    _add_common(p)
    p.add_argument("--theta", help="estimated precision matrix CSV")
    p.add_argument("--truth", help="truth.json written by simulate")
    p.add_argument("--zero-tol", type=float)

    p = sub.add_parser("sweep", help="Monte Carlo grid over n and repetitions")
    _add_common(p)
    _add_model(p)
    _add_solver(p)
    p.add_argument("--ns", help="comma-separated sample sizes")
    p.add_argument("--reps", type=int)
    p.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")

    p = sub.add_parser("lambda", help="print a weight sequence as CSV")
    _add_common(p)
    p.add_argument("--d", type=int, help="sequence length")
    p.add_argument("--kind", choices=("bh", "adjusted", "lasso"))
    p.add_argument("--q", type=float)
    p.add_argument("--n", type=int, help="sample count (adjusted kind)")
    p.add_argument("--alpha", type=float)
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _read_config(path: str, sub: argparse.ArgumentParser) -> dict:
    path = Path(path)
    if path.suffix == ".json":
        raw = json.loads(path.read_text(encoding="utf-8")).get("config", {})
    else:
        raw = {}
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, val = line.split("=", 1)
            raw[key.strip().replace("-", "_")] = val.strip()
    actions = {a.dest: a for a in sub._actions}
    conf = {}
    for key, val in raw.items():
        if key in ("command", "config"):
            continue
        action = actions.get(key)
        if action is None:
            raise UsageError(f"unknown config key {key!r}")
        if val is None or isinstance(val, (bool, int, float)) and action.type is None:
            conf[key] = val
        elif action.const is True:  # store_true flags
            conf[key] = _bool(val)
        elif action.type is not None and isinstance(val, str):
            conf[key] = action.type(val)
        else:
            conf[key] = val
    return conf


def resolve(parser: argparse.ArgumentParser, argv=None) -> dict:
    """Parse `argv` and merge defaults < config file < flags."""
    args = parser.parse_args(argv)
    cmd = args.command
    sub = _subparser(parser, cmd)
    merged = dict(DEFAULTS[cmd])
    if args.config:
        try:
            merged.update(_read_config(args.config, sub))
        except (OSError, ValueError) as exc:
            sub.error(f"cannot read config: {exc}")
        except UsageError as exc:
            sub.error(str(exc))
    merged.update({k: v for k, v in vars(args).items()
                   if v is not None and k not in ("command", "config")})
    missing = [k for k in REQUIRED[cmd] if merged.get(k) is None]
    if missing:
        sub.error("missing required option(s): " + ", ".join("--" + m.replace("_", "-")
                                                           for m in missing))
    merged["command"] = cmd
    return merged


def _experiment_config(c: dict, n: int, reps: int = 1) -> ExperimentConfig:
    return ExperimentConfig(structure=c["structure"], p=int(c["p"]), n=n,
                            block_size=int(c["block_size"]), off_diag_value=float(c["off_value"]),
                            hub_value=float(c["hub_value"]), hub_layout=c["hub_layout"],
                            repetitions=reps, seed=int(c["seed"]),
                            q=float(c.get("q", 0.05)), alpha=float(c.get("alpha", 0.05)))


def _fit_config(c: dict) -> FitConfig:
    return FitConfig(q=float(c["q"]), outer_tol=float(c["outer_tol"]), gap_tol=float(c["gap_tol"]),
                     max_sweeps=int(c["max_sweeps"]), max_iter=int(c["max_iter"]),
                     parallel=bool(c.get("parallel", False)), workers=c.get("workers"),
                     use_adjusted_lambda=not c.get("no_adjust", False),
                     normalize=not c.get("no_normalize", False))


def _manifest(c: dict, outputs: dict, seeds, started: float, **extra) -> dict:
    config = {k: v for k, v in c.items() if k not in ("command", "verbose")}
    return {
        "command": c["command"],
        "config": config,
        "seeds": list(seeds),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "outputs": outputs,
        "wall_clock_seconds": round(time.perf_counter() - started, 6),
        **extra,
    }


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _truth_payload(model: GroundTruthModel, config: ExperimentConfig) -> dict:
    return {
        "config": config.to_dict(),
        "edges": [list(e) for e in model.sorted_edges()],
        "hubs": list(model.hubs),
        "sigma": model.sigma.tolist(),
        "theta": model.theta.tolist(),
    }


def cmd_simulate(c: dict) -> int:
    started = time.perf_counter()
    out = Path(c["out"])
    out.mkdir(parents=True, exist_ok=True)
    config = _experiment_config(c, int(c["n"]))
    model = make_model(config)
    data = sample_mvn(model, config.n, config.seed)
    write_matrix_csv(out / "X.csv", data.X)
    _write_json(out / "truth.json", _truth_payload(model, config))
    outputs = {"X": str(out / "X.csv"), "truth": str(out / "truth.json")}
    _write_json(out / "manifest.json", _manifest(c, outputs, [config.seed], started))
    print(f"wrote {data.n}x{data.p} sample and {len(model.edge_set)} true edges to {out}")
    return 0


def cmd_fit(c: dict) -> int:
    started = time.perf_counter()
    out = Path(c["out"])
    out.mkdir(parents=True, exist_ok=True)
    X = read_matrix_csv(c["input"], header=bool(c["header"]))
    data = center_columns(X)
    fc = _fit_config(c)
    if c["method"] == "nsslope":
        est = fit_nsslope(data, fc)
    else:
        est = fit_mb_lasso(data, float(c["alpha"]), fc)
    write_matrix_csv(out / "theta.csv", est.theta)
    write_matrix_csv(out / "theta_raw.csv", est.theta_raw)
    n_edges = write_edge_list(out / "edges.csv", est.theta)
    outputs = {k: str(out / f"{k}.csv") for k in ("theta", "theta_raw", "edges")}
    status = {"converged": est.converged, "sweeps": est.sweep_count,
              "unconverged_subproblems": est.unconverged_subproblems, "edges": n_edges,
              "lambda": est.lam.values.tolist()}
    _write_json(out / "manifest.json", _manifest(c, outputs, [], started, result=status))
    print(f"{c['method']}: {n_edges} edges, {est.sweep_count} sweeps, converged={est.converged}")
    if not est.converged or est.unconverged_subproblems:
        logger.warning("fit did not fully converge (%d sub-problems at max_iter)",
                       est.unconverged_subproblems)
        if c["strict"]:
            return 1
    return 0


def _load_truth(path) -> GroundTruthModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    theta = np.array(payload["theta"], dtype=np.float64)
    sigma = np.array(payload.get("sigma", np.linalg.inv(theta)), dtype=np.float64)
    edges = frozenset(tuple(sorted(e)) for e in payload["edges"])
    return GroundTruthModel(sigma=sigma, theta=theta, edge_set=edges,
                            hubs=tuple(payload.get("hubs", ())))


def cmd_eval(c: dict) -> int:
    theta = read_matrix_csv(c["theta"])
    truth = _load_truth(c["truth"])
    report = edge_metrics(theta, truth, zero_tol=float(c["zero_tol"])).to_dict()
    text = json.dumps(report, indent=2, sort_keys=True)
    if c.get("out"):
        Path(c["out"]).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_sweep(c: dict) -> int:
    started = time.perf_counter()
    out = Path(c["out"])
    out.mkdir(parents=True, exist_ok=True)
    ns = [int(v) for v in str(c["ns"]).split(",") if v.strip()]
    methods = [m.strip() for m in str(c["methods"]).split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not ns:
        raise UsageError(f"bad --methods {bad} or empty --ns")
    reps = int(c["reps"])
    base = _experiment_config(c, ns[0], reps)
    fc = _fit_config({**c, "no_adjust": False, "no_normalize": False})
    workers = c.get("workers") or default_workers()
    rows = run_sweep(base, ns, methods, fc, workers=workers)
    write_rows_csv(out / "metrics.csv", rows)
    _write_json(out / "aggregate.json", aggregate_rows(rows))
    failures = sum(r.status != "ok" for r in rows)
    outputs = {"metrics": str(out / "metrics.csv"), "aggregate": str(out / "aggregate.json")}
    seeds = [base.seed + r for r in range(reps)]
    _write_json(out / "manifest.json",
                _manifest(c, outputs, seeds, started, workers=workers, failed_rows=failures))
    print(f"{len(rows)} rows ({failures} failed) written to {out}")
    return 0


def cmd_lambda(c: dict) -> int:
    d, kind = int(c["d"]), c["kind"]
    if kind == "bh":
        lam = bh_sequence(d, float(c["q"]))
    elif kind == "adjusted":
        if c.get("n") is None:
            raise UsageError("--kind adjusted needs --n")
        lam = adjusted_sequence(d, float(c["q"]), int(c["n"]))
    else:
        lam = np.full(d, lasso_threshold(float(c["alpha"]), d + 1))
    lines = ["index,lambda"] + [f"{i},{v:.17g}" for i, v in enumerate(np.asarray(lam), 1)]
    text = "\n".join(lines) + "\n"
    if c.get("out"):
        Path(c["out"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "eval": cmd_eval,
            "sweep": cmd_sweep, "lambda": cmd_lambda}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        c = resolve(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if c.get("verbose") else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[c["command"]](c)
    except UsageError as exc:
        print(f"nsslope {c['command']}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, ArithmeticError, KeyError, json.JSONDecodeError) as exc:
        print(f"nsslope {c['command']}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

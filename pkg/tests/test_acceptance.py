"""End-to-end acceptance checks, one test per criterion.

Each test logs a PASS/FAIL line through the `acceptance_log` fixture;
the lines are echoed in the terminal summary.
"""

import time

import numpy as np
import pytest

import oracles
from nsslope.estimator import FitConfig, fit_nsslope
from nsslope.experiment import run_sweep
from nsslope.lambda_seq import adjusted_sequence, bh_sequence
from nsslope.metrics import aggregate, edge_recall
from nsslope.slope_solver import SubproblemSpec, primal_objective, solve_slope
from nsslope.sorted_l1 import prox_sorted_l1
from nsslope.synth import ExperimentConfig, make_block_model, make_hub_model, sample_mvn

pytestmark = pytest.mark.slow

SWEEP_NS = (100, 200, 400)


def check(log, name, ok, detail):
    log(name, bool(ok), detail)
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def block_sweep():
    base = ExperimentConfig(structure="block", p=40, n=SWEEP_NS[0], block_size=4,
                            off_diag_value=0.3, repetitions=25, seed=2024, q=0.05, alpha=0.05)
    start = time.perf_counter()
    rows = run_sweep(base, SWEEP_NS, methods=("nsslope", "mblasso"))
    elapsed = time.perf_counter() - start
    summary = {}
    for method in ("nsslope", "mblasso"):
        for n in SWEEP_NS:
            reports = [r.report for r in rows if r.method == method and r.n == n]
            assert len(reports) == 25, f"{method} n={n}: failed cells"
            summary[method, n] = aggregate(reports)[0]
    return summary, elapsed


def test_c1_prox_correctness(acceptance_log):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    soft_exact = True
    for _ in range(1000):
        d = int(rng.integers(1, 9))
        z = rng.normal(0, 3, d)
        lam = np.sort(rng.uniform(0.01, 4.0, d))[::-1]
        worst = max(worst, float(np.max(np.abs(
            prox_sorted_l1(z, lam) - oracles.prox_sorted_l1_bruteforce(z, lam)))))
        c = float(rng.uniform(0.01, 4.0))
        soft = np.sign(z) * np.maximum(np.abs(z) - c, 0.0)
        soft_exact &= np.array_equal(prox_sorted_l1(z, np.full(d, c)), soft)
    elapsed = time.perf_counter() - start
    check(acceptance_log, "C1 prox correctness",
          worst <= 1e-8 and soft_exact and elapsed < 5.0,
          f"max err {worst:.2e}, soft-threshold exact={soft_exact}, {elapsed:.2f}s")


def test_c2_subsolver_certificate(acceptance_log):
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    worst_gap = worst_obj = 0.0
    for _ in range(100):
        A = rng.normal(size=(30, 10))
        truth = np.where(rng.random(10) < 0.3, rng.normal(0, 3, 10), 0.0)
        b = A @ truth + rng.normal(size=30)
        lam = np.sort(rng.uniform(0.5, 4.0, 10))[::-1]
        spec = SubproblemSpec(A, b, float(rng.uniform(0.5, 2.0)), lam)
        sol = solve_slope(spec, gap_tol=1e-7)
        _, f_star = oracles.slope_cvx(A, b, spec.weights)
        worst_gap = max(worst_gap, sol.gap)
        worst_obj = max(worst_obj, abs(primal_objective(spec, sol.beta) - f_star))
    elapsed = time.perf_counter() - start
    check(acceptance_log, "C2 sub-solver certificate",
          worst_gap <= 1e-7 and worst_obj <= 1e-6 and elapsed < 30.0,
          f"max gap {worst_gap:.2e}, max objective diff {worst_obj:.2e}, {elapsed:.2f}s")


def test_c3_lambda_sequences(acceptance_log):
    lam = bh_sequence(4, 0.05).values
    ref = [oracles.quantile(1 - i * 0.05 / 8) for i in range(1, 5)]
    err = float(np.max(np.abs(lam - ref)))
    grids = [(d, n) for d in (1, 2, 5, 19, 39, 99, 499) for n in (2, 3, 10, 25, 50, 100, 400, 1000)]
    bad = [(d, n) for d, n in grids for q in (0.01, 0.05, 0.2)
           if np.any(np.diff(adjusted_sequence(d, q, n).values) > 0)]
    below_d = sum(n < d for d, n in grids)
    check(acceptance_log, "C3 lambda sequences",
          err <= 1e-4 and abs(lam[3] - 1.9600) <= 1e-4 and not bad,
          f"bh max err {err:.1e}, lambda_4={lam[3]:.4f}, "
          f"{len(grids) * 3} adjusted grids ({below_d * 3} with n<d), increasing: {bad}")


def test_c4_fdr_control(block_sweep, acceptance_log):
    summary, elapsed = block_sweep
    fdr = {n: summary["nsslope", n]["fdr"] for n in SWEEP_NS}
    ok = all(v <= 0.10 for v in fdr.values()) and elapsed < 600
    detail = ", ".join(f"n={n}: {v:.3f}" for n, v in fdr.items())
    check(acceptance_log, "C4 FDR control", ok, f"mean FDR {detail}; sweep {elapsed:.1f}s")


def test_c5_power_dominance(block_sweep, acceptance_log):
    summary, _ = block_sweep
    pairs = {n: (summary["nsslope", n]["power"], summary["mblasso", n]["power"]) for n in SWEEP_NS}
    ok = all(a >= b for a, b in pairs.values())
    detail = ", ".join(f"n={n}: {a:.3f} vs {b:.3f}" for n, (a, b) in pairs.items())
    check(acceptance_log, "C5 power dominance", ok, f"nsSLOPE vs l1 {detail}")


def test_c6_mse_trend(block_sweep, acceptance_log):
    summary, _ = block_sweep
    lo, hi = summary["nsslope", 400]["mse_diag"], summary["nsslope", 100]["mse_diag"]
    check(acceptance_log, "C6 diagonal MSE trend", lo < hi,
          f"mse_diag n=400 {lo:.4f} < n=100 {hi:.4f}")


def test_c7_estimator_invariants(acceptance_log):
    problems = []
    for seed in (0, 1, 2):
        data = sample_mvn(make_block_model(40, 4, 1.0, 0.3), 200 + 100 * seed, seed=seed)
        est = fit_nsslope(data)
        if not all(np.all(h > 0) for h in est.diag_history):
            problems.append(f"seed {seed}: nonpositive diagonal")
        coupling = max(
            float(np.max(np.abs(np.delete(est.theta_raw[:, i], i)
                                + est.theta_raw[i, i] * est.betas[i])))
            for i in range(40))
        if coupling > 1e-12:
            problems.append(f"seed {seed}: coupling error {coupling:.1e}")
        if not np.array_equal(est.theta, est.theta.T):
            problems.append(f"seed {seed}: asymmetric output")
        again = fit_nsslope(sample_mvn(make_block_model(40, 4, 1.0, 0.3), 200 + 100 * seed,
                                       seed=seed))
        if again.theta.tobytes() != est.theta.tobytes():
            problems.append(f"seed {seed}: not reproducible")
        cfg = FitConfig(parallel=True, workers=4)
        par = fit_nsslope(data, cfg)
        diff = float(np.max(np.abs(np.diag(par.theta) - np.diag(est.theta))))
        if diff > 10 * cfg.outer_tol:
            problems.append(f"seed {seed}: parallel diagonal off by {diff:.1e}")
    check(acceptance_log, "C7 estimator invariants", not problems,
          "; ".join(problems) or "positivity, coupling, symmetry, reproducibility, parallel ok")


def test_c8_hub_discovery(acceptance_log):
    model = make_hub_model(20, 0.2)
    hub_edges = model.hub_edges()
    recalls = []
    for seed in range(10):
        est = fit_nsslope(sample_mvn(model, 500, seed=seed), FitConfig(q=0.05))
        recalls.append(edge_recall(est, hub_edges))
    mean = float(np.mean(recalls))
    check(acceptance_log, "C8 hub discovery", mean >= 0.5,
          f"mean hub-edge recall {mean:.3f} over 10 seeds ({len(hub_edges)} hub edges)")

"""Independent reference computations used by the tests.

None of these call into the package's solvers.
"""

from __future__ import annotations

import functools
import itertools

import cvxpy as cp
import mpmath
import numpy as np

mpmath.mp.dps = 40


def quantile(prob) -> float:
    """High-precision Phi^{-1} via erfinv."""
    p = mpmath.mpf(prob)
    return float(mpmath.sqrt(2) * mpmath.erfinv(2 * p - 1))


def cdf(z) -> float:
    return float(mpmath.ncdf(mpmath.mpf(z)))


def sorted_l1(x, lam) -> float:
    return float(np.dot(lam, np.sort(np.abs(x))[::-1]))


@functools.lru_cache(maxsize=None)
def _averaging_operators(d: int) -> np.ndarray:
    """Every way to split sorted positions into contiguous equal-value
    groups followed by a zero tail, as (K, d, d) averaging matrices."""
    ops = []
    for tail in range(d + 1):
        for cuts in itertools.product((0, 1), repeat=max(tail - 1, 0)):
            P = np.zeros((d, d))
            start = 0
            bounds = [k + 1 for k, c in enumerate(cuts) if c] + [tail]
            for end in bounds:
                if end > start:
                    P[start:end, start:end] = 1.0 / (end - start)
                start = end
            ops.append(P)
    return np.array(ops)


def prox_sorted_l1_bruteforce(z, lam) -> np.ndarray:
    """Exact prox of the sorted L1 norm by enumerating optimality faces.

    The minimizer, read in decreasing-|z| order, is nonincreasing with
    contiguous groups of equal value; each nonzero group equals the mean of
    ``|z| - lam`` over the group. Every candidate is a feasible point, so
    the best objective among them is the optimum.
    """
    z = np.asarray(z, dtype=float)
    lam = np.asarray(lam, dtype=float)
    d = z.size
    order = np.argsort(-np.abs(z), kind="stable")
    y = np.abs(z)[order]
    cands_sorted = _averaging_operators(d) @ (y - lam)
    cands = np.empty_like(cands_sorted)
    cands[:, order] = cands_sorted
    cands = np.maximum(cands, 0.0) * np.sign(z)
    penalty = np.sort(np.abs(cands), axis=1)[:, ::-1] @ lam
    obj = 0.5 * np.sum((cands - z) ** 2, axis=1) + penalty
    return cands[np.argmin(obj)]


def slope_cvx(A, b, weights):
    """Solve ``0.5||b - A beta||^2 + J_w(beta)`` with a conic solver.

    The sorted L1 norm is written as a nonnegative combination of
    sum-of-k-largest terms.
    """
    A = np.asarray(A, dtype=float)
    w = np.asarray(weights, dtype=float)
    d = A.shape[1]
    beta = cp.Variable(d)
    diffs = np.append(w[:-1] - w[1:], w[-1])
    pen = sum(diffs[k] * cp.sum_largest(cp.abs(beta), k + 1) for k in range(d) if diffs[k] > 0)
    prob = cp.Problem(cp.Minimize(0.5 * cp.sum_squares(b - A @ beta) + pen))
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    x = np.asarray(beta.value)
    obj = 0.5 * float(np.sum((b - A @ x) ** 2)) + sorted_l1(x, w)
    return x, obj


def rss_precision(X, beta, i) -> float:
    """``n / ||X_i - X_{-i} beta||^2`` from the raw data."""
    X = np.asarray(X, dtype=float)
    r = X[:, i] - np.delete(X, i, axis=1) @ beta
    return X.shape[0] / float(r @ r)

"""Accelerated proximal gradient for a single SLOPE regression.

Solves::

    minimize_beta  0.5 * ||b - A beta||^2 + sigma * J_lambda(beta)

with a monotone FISTA iteration and a duality-gap stopping rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DimensionError, NonFiniteError
from .sorted_l1 import LambdaSequence, _prox, dual_norm_ratio

__all__ = [
    "SubproblemSolution",
    "SubproblemSpec",
    "duality_gap",
    "lipschitz_constant",
    "primal_objective",
    "solve_slope",
]

# step is 1 / (SAFETY * L) to absorb the power-iteration underestimate
SAFETY = 1.05
CHECK_EVERY = 10


@dataclass(frozen=True)
class SubproblemSpec:
    """One sorted-L1 penalized least-squares problem.

    Attributes
    ----------
    A : ndarray, shape (n, d)
        Design matrix.
    b : ndarray, shape (n,)
        Response.
    sigma : float
        Positive multiplier on the penalty.
    lam : LambdaSequence
        Length-`d` weights.
    """

    A: np.ndarray
    b: np.ndarray
    sigma: float
    lam: LambdaSequence

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        lam = self.lam if isinstance(self.lam, LambdaSequence) else LambdaSequence(self.lam)
        if A.ndim != 2:
            raise DimensionError(f"A must be 2-d, got shape {A.shape}")
        if b.shape != (A.shape[0],):
            raise DimensionError(f"b has shape {b.shape}, expected ({A.shape[0]},)")
        if len(lam) != A.shape[1]:
            raise DimensionError(f"lambda has length {len(lam)}, A has {A.shape[1]} columns")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise NonFiniteError("A and b must be finite")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "lam", lam)

    @property
    def weights(self) -> np.ndarray:
        """Effective penalty weights ``sigma * lambda``."""
        return self.sigma * self.lam.values


@dataclass
class SubproblemSolution:
    beta: np.ndarray
    gap: float
    iterations: int
    converged: bool
    objective_trace: list[float] = field(default_factory=list)


def _check_beta(spec: SubproblemSpec, beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (spec.A.shape[1],):
        raise DimensionError(f"beta has shape {beta.shape}, expected ({spec.A.shape[1]},)")
    return beta


def _sorted_penalty(beta: np.ndarray, w: np.ndarray) -> float:
    return float(np.dot(w, np.sort(np.abs(beta))[::-1]))


def primal_objective(spec: SubproblemSpec, beta) -> float:
    """``0.5 * ||b - A beta||^2 + sigma * J_lambda(beta)``."""
    beta = _check_beta(spec, beta)
    r = spec.b - spec.A @ beta
    return 0.5 * float(r @ r) + _sorted_penalty(beta, spec.weights)


def _gap(A, b, w, cum_w, beta) -> float:
    r = b - A @ beta
    rr = float(r @ r)
    primal = 0.5 * rr + _sorted_penalty(beta, w)
    if rr == 0.0:
        return primal
    # dual candidate theta = t * r, feasible while t * dualnorm(A'r) <= 1
    ratio = dual_norm_ratio(A.T @ r, cum_w)
    br = float(b @ r)
    t = br / rr
    if ratio > 0.0:
        t = min(t, 1.0 / ratio)
    t = max(t, 0.0)
    # 0.5||b||^2 - 0.5||b - t r||^2
    dual = t * br - 0.5 * t * t * rr
    return primal - dual


def duality_gap(spec: SubproblemSpec, beta) -> float:
    """Primal minus dual objective at `beta`; an upper bound on suboptimality.

    The dual point is the residual ``r = b - A beta`` rescaled by the
    best factor ``t`` that keeps ``A' (t r)`` inside the dual ball of
    ``sigma * J_lambda``.
    """
    beta = _check_beta(spec, beta)
    w = spec.weights
    return _gap(spec.A, spec.b, w, np.cumsum(w), beta)


def lipschitz_constant(gram: np.ndarray, rtol: float = 1e-6, max_iter: int = 1000) -> float:
    """Largest eigenvalue of a PSD matrix by power iteration."""
    d = gram.shape[0]
    v = np.full(d, 1.0 / math.sqrt(d))
    est = 0.0
    for _ in range(max_iter):
        u = gram @ v
        norm = float(np.linalg.norm(u))
        if norm == 0.0:
            return 0.0
        v = u / norm
        if abs(norm - est) <= rtol * norm:
            return norm
        est = norm
    return est


def solve_slope(
    spec: SubproblemSpec,
    gap_tol: float = 1e-7,
    max_iter: int = 20000,
    beta0=None,
    record_objective: bool = False,
    gram=None,
) -> SubproblemSolution:
    """Minimize the SLOPE objective by monotone FISTA.

    Parameters
    ----------
    spec : SubproblemSpec
    gap_tol : float
        Stop once the duality gap falls to this value.
    max_iter : int
        Iteration cap. Hitting it returns ``converged=False``.
    beta0 : array_like, optional
        Warm start; zeros by default.
    record_objective : bool
        Keep the objective of every accepted iterate in
        ``objective_trace``.
    gram : ndarray, optional
        Precomputed ``A.T @ A``; saves an O(n d^2) product when the caller
        already has it.

    Returns
    -------
    SubproblemSolution
    """
    if not gap_tol > 0:
        raise ValueError("gap_tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be a positive integer")
    A, b = spec.A, spec.b
    d = A.shape[1]
    w = spec.weights
    cum_w = np.cumsum(w)
    x = np.zeros(d) if beta0 is None else _check_beta(spec, beta0).copy()

    if gram is None:
        gram = A.T @ A
    elif gram.shape != (d, d):
        raise DimensionError(f"gram has shape {gram.shape}, expected ({d}, {d})")
    c = A.T @ b
    bb = float(b @ b)

    def objective(v):
        return 0.5 * (bb - 2.0 * float(c @ v) + float(v @ (gram @ v))) + _sorted_penalty(v, w)

    trace: list[float] = []
    gap = _gap(A, b, w, cum_w, x)
    if gap <= gap_tol:
        if record_objective:
            trace.append(objective(x))
        return SubproblemSolution(x, gap, 0, True, trace)

    L = lipschitz_constant(gram)
    if L == 0.0:
        # A == 0: the penalty alone decides and the optimum is zero
        x = np.zeros(d)
        return SubproblemSolution(x, _gap(A, b, w, cum_w, x), 0, True, trace)
    step = 1.0 / (SAFETY * L)
    w_step = w * step

    f_x = objective(x)
    if record_objective:
        trace.append(f_x)
    y = x.copy()
    t = 1.0
    it = 0
    while it < max_iter:
        it += 1
        z = _prox(y - step * (gram @ y - c), w_step)
        f_z = objective(z)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        x_prev = x
        if f_z <= f_x:
            x, f_x = z, f_z
        y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev)
        t = t_next
        if record_objective:
            trace.append(f_x)
        if it % CHECK_EVERY == 0 or it == max_iter:
            gap = _gap(A, b, w, cum_w, x)
            if gap <= gap_tol:
                return SubproblemSolution(x, gap, it, True, trace)
    return SubproblemSolution(x, gap, it, False, trace)

"""Precision matrix estimation by per-variable SLOPE regressions.

Each variable is regressed on all the others with a sorted-L1 penalty
scaled by the current noise estimate ``Theta_ii^{-1/2}``; the fitted
coefficients give the column ``Theta_{-i,i} = -Theta_ii * beta^i`` and the
residual variance gives ``Theta_ii``. Sweeps repeat until the diagonal
settles. An l1 neighborhood-selection baseline reuses the same loop with
a constant weight sequence.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, DimensionError, normal_quantile, write_matrix_csv
from .lambda_seq import adjusted_sequence, bh_sequence
from .slope_solver import SubproblemSpec, solve_slope
from .sorted_l1 import LambdaSequence

__all__ = [
    "FitConfig",
    "PrecisionEstimate",
    "SingularResidualError",
    "fit_mb_lasso",
    "fit_nsslope",
    "lasso_threshold",
    "symmetrize",
    "update_diagonal",
    "write_edge_list",
]

logger = logging.getLogger(__name__)

RSS_FLOOR = 1e-15
SUPPORT_TOL = 1e-10


class SingularResidualError(ArithmeticError):
    """A regression fits its response (almost) perfectly, so Theta_ii diverges."""


@dataclass(frozen=True)
class FitConfig:
    """Settings for the outer loop.

    `parallel` switches from Gauss-Seidel sweeps (each regression sees the
    freshest diagonal) to Jacobi sweeps (all regressions read the previous
    sweep's diagonal and run concurrently on `workers` threads).
    `normalize` rescales design columns to unit length inside each
    regression and maps the coefficients back afterwards.
    """

    q: float = 0.05
    outer_tol: float = 1e-3
    gap_tol: float = 1e-7
    max_sweeps: int = 100
    max_iter: int = 20000
    parallel: bool = False
    workers: int | None = None
    use_adjusted_lambda: bool = True
    normalize: bool = True
    symmetrize_each_sweep: bool = True

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")
        if not (self.outer_tol > 0 and self.gap_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_sweeps < 1 or self.max_iter < 1:
            raise ValueError("max_sweeps and max_iter must be positive")


@dataclass
class PrecisionEstimate:
    """Fitted precision matrix and the regressions behind it.

    Attributes
    ----------
    theta : ndarray, shape (p, p)
        Symmetrized estimate.
    theta_raw : ndarray, shape (p, p)
        Column-wise estimate before symmetrization; column `i` holds
        ``Theta_ii`` and ``-Theta_ii * betas[i]``.
    betas : ndarray, shape (p, p - 1)
        Regression coefficients of each variable on the others.
    sweep_count : int
    converged : bool
        False if `max_sweeps` ran out before the diagonal settled.
    diag_history : list of ndarray
        Diagonal after initialization and after every sweep.
    unconverged_subproblems : int
        Regressions that hit the iteration cap without certifying the gap.
    """

    theta: np.ndarray
    theta_raw: np.ndarray
    betas: np.ndarray
    sweep_count: int
    converged: bool
    lam: LambdaSequence
    diag_history: list = field(default_factory=list)
    unconverged_subproblems: int = 0

    @property
    def p(self) -> int:
        return self.theta.shape[0]

    def support(self, i: int, zero_tol: float = SUPPORT_TOL) -> np.ndarray:
        """Indices (in 0..p-1) of the neighbors selected by regression `i`."""
        others = np.delete(np.arange(self.p), i)
        return others[np.abs(self.betas[i]) >= zero_tol]


def symmetrize(theta) -> np.ndarray:
    """Nearest symmetric matrix in Frobenius norm, ``(T + T') / 2``."""
    T = np.asarray(theta, dtype=np.float64)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {T.shape}")
    return (T + T.T) / 2


def update_diagonal(S, beta, i: int) -> float:
    """``1 / (S_ii - 2 beta' S_{-i,i} + beta' S_{-i,-i} beta)``.

    The denominator is the residual sum of squares of regression `i`
    divided by n.
    """
    S = np.asarray(S, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    p = S.shape[0]
    if beta.shape != (p - 1,):
        raise DimensionError(f"beta has shape {beta.shape}, expected ({p - 1},)")
    idx = np.delete(np.arange(p), i)
    s_col = S[idx, i]
    quad = S[i, i] - 2.0 * float(beta @ s_col) + float(beta @ (S[np.ix_(idx, idx)] @ beta))
    if not quad > RSS_FLOOR:
        raise SingularResidualError(
            f"residual variance of variable {i} is {quad:.3g}; its precision diverges")
    return 1.0 / quad


def lasso_threshold(alpha: float, p: int) -> float:
    """Per-coefficient l1 level ``Phi^{-1}(1 - alpha / 2p)``."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return normal_quantile(1.0 - alpha / (2.0 * p))


class _Problem:
    """Per-dataset quantities shared by all regressions."""

    def __init__(self, data: Dataset, normalize: bool):
        self.X = data.X
        self.S = data.S
        self.n, self.p = data.X.shape
        norms = np.sqrt(np.einsum("ij,ij->j", data.X, data.X))
        if normalize:
            self.scale = np.where(norms > 0, norms, 1.0)
        else:
            self.scale = np.ones(self.p)

    def others(self, i: int) -> np.ndarray:
        return np.delete(np.arange(self.p), i)

    def solve(self, i, theta_ii, beta_prev, lam, config):
        idx = self.others(i)
        scale = self.scale[idx]
        A = self.X[:, idx] / scale
        gram = (self.n * self.S[np.ix_(idx, idx)]) / np.outer(scale, scale)
        spec = SubproblemSpec(A, self.X[:, i], theta_ii ** -0.5, lam)
        sol = solve_slope(spec, gap_tol=config.gap_tol, max_iter=config.max_iter,
                          beta0=beta_prev * scale, gram=gram)
        return sol.beta / scale, sol.converged


def _fit(data: Dataset, lam: LambdaSequence, config: FitConfig) -> PrecisionEstimate:
    prob = _Problem(data, config.normalize)
    p = prob.p
    if len(lam) != p - 1:
        raise DimensionError(f"lambda has length {len(lam)}, expected {p - 1}")

    s_diag = np.diag(prob.S)
    if np.any(s_diag <= RSS_FLOOR):
        raise SingularResidualError("a variable has zero sample variance")
    diag = 1.0 / s_diag
    betas = np.zeros((p, p - 1))
    history = [diag.copy()]
    unconverged = 0
    theta = theta_raw = None
    converged = False
    sweeps = 0

    def column(i, theta_ii):
        beta, ok = prob.solve(i, theta_ii, betas[i], lam, config)
        return i, beta, update_diagonal(prob.S, beta, i), ok

    pool = ThreadPoolExecutor(max_workers=config.workers) if config.parallel else None
    try:
        while sweeps < config.max_sweeps:
            sweeps += 1
            old = diag.copy()
            if pool is not None:
                results = list(pool.map(lambda i: column(i, old[i]), range(p)))
            else:
                results = []
                for i in range(p):
                    res = column(i, diag[i])
                    diag[i] = res[2]
                    results.append(res)
            for i, beta, d_new, ok in results:
                betas[i] = beta
                diag[i] = d_new
                unconverged += not ok
            history.append(diag.copy())

            theta_raw = _assemble(diag, betas)
            # symmetrizing mid-loop leaves the diagonal untouched, so it
            # never feeds back into later sweeps
            if config.symmetrize_each_sweep:
                theta = symmetrize(theta_raw)
            change = float(np.max(np.abs(diag - old)))
            logger.debug("sweep %d: max diagonal change %.3g", sweeps, change)
            if change < config.outer_tol:
                converged = True
                break
    finally:
        if pool is not None:
            pool.shutdown()

    theta = symmetrize(theta_raw)
    if unconverged:
        logger.warning("%d sub-problems stopped at max_iter before reaching gap_tol", unconverged)
    return PrecisionEstimate(theta=theta, theta_raw=theta_raw, betas=betas, sweep_count=sweeps,
                             converged=converged, lam=lam, diag_history=history,
                             unconverged_subproblems=unconverged)


def _assemble(diag: np.ndarray, betas: np.ndarray) -> np.ndarray:
    p = diag.size
    T = np.empty((p, p))
    for i in range(p):
        idx = np.r_[0:i, i + 1:p]
        T[idx, i] = -diag[i] * betas[i]
        T[i, i] = diag[i]
    return T


def fit_nsslope(data: Dataset, config: FitConfig | None = None) -> PrecisionEstimate:
    """Estimate the precision matrix with SLOPE neighborhood regressions.

    Parameters
    ----------
    data : Dataset
        Centered samples and their covariance.
    config : FitConfig, optional
        Target FDR level `q` and solver settings.

    Returns
    -------
    PrecisionEstimate
    """
    config = config or FitConfig()
    d = data.p - 1
    if config.use_adjusted_lambda:
        lam = adjusted_sequence(d, config.q, data.n)
    else:
        lam = bh_sequence(d, config.q)
    return _fit(data, lam, config)


def fit_mb_lasso(data: Dataset, alpha: float = 0.05,
                 config: FitConfig | None = None) -> PrecisionEstimate:
    """l1 neighborhood selection with the FWER level ``Phi^{-1}(1 - alpha/2p)``.

    Identical to :func:`fit_nsslope` except every coefficient gets the same
    weight. `config.q` and `config.use_adjusted_lambda` are ignored.
    """
    config = config or FitConfig()
    lam = LambdaSequence.uniform(lasso_threshold(alpha, data.p), data.p - 1)
    return _fit(data, lam, config)


def write_edge_list(path, theta, zero_tol: float = 0.0) -> int:
    """Write ``i,j,value`` rows for ``j > i`` with ``|theta_ij| > zero_tol``.

    Returns the number of edges written.
    """
    T = np.asarray(theta, dtype=np.float64)
    i, j = np.nonzero(np.triu(np.abs(T) > zero_tol, k=1))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("i,j,value\n")
        for a, b in zip(i.tolist(), j.tolist()):
            fh.write(f"{a},{b},{T[a, b]:.17g}\n")
    return len(i)


def write_theta(path, estimate: PrecisionEstimate, raw: bool = False) -> None:
    write_matrix_csv(path, estimate.theta_raw if raw else estimate.theta)

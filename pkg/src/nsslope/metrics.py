"""FDR, power and MSE of a precision estimate against ground truth."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .core import DimensionError

__all__ = [
    "MetricsReport",
    "aggregate",
    "discovered_edges",
    "edge_metrics",
    "edge_recall",
    "mse_metrics",
]


@dataclass(frozen=True)
class MetricsReport:
    fdr: float
    power: float
    mse_diag: float
    mse_offdiag: float
    true_positives: int
    false_positives: int
    total_rejections: int

    def to_dict(self) -> dict:
        return asdict(self)


def _theta(est) -> np.ndarray:
    return np.asarray(getattr(est, "theta", est), dtype=np.float64)


def discovered_edges(theta, zero_tol: float = 1e-10) -> frozenset:
    """Unordered pairs ``(i, j)``, ``i < j``, with a nonzero entry on either side."""
    T = np.abs(_theta(theta)) > zero_tol
    T = T | T.T
    i, j = np.nonzero(np.triu(T, k=1))
    return frozenset(zip(i.tolist(), j.tolist()))


def _match(estimate, truth):
    est, true = _theta(estimate), _theta(truth)
    if est.ndim != 2 or est.shape != true.shape or est.shape[0] != est.shape[1]:
        raise DimensionError(f"estimate {est.shape} and truth {true.shape} do not match")
    return est, true


def mse_metrics(estimate, truth) -> tuple[float, float]:
    """Mean squared error over the diagonal and over all off-diagonal entries."""
    est, true = _match(estimate, truth)
    p = est.shape[0]
    sq = (est - true) ** 2
    diag = float(np.trace(sq)) / p
    off = float(sq.sum() - np.trace(sq)) / (p * (p - 1)) if p > 1 else 0.0
    return diag, off


def edge_metrics(estimate, truth, zero_tol: float = 1e-10) -> MetricsReport:
    """Edge-level FDR and power, plus the MSE pair.

    `truth` must carry an ``edge_set`` of ``(i, j)`` pairs with ``i < j``.
    """
    _match(estimate, truth)
    found = discovered_edges(estimate, zero_tol)
    true_edges = truth.edge_set
    tp = len(found & true_edges)
    fp = len(found) - tp
    r = len(found)
    mse_diag, mse_off = mse_metrics(estimate, truth)
    return MetricsReport(
        fdr=fp / max(r, 1),
        power=tp / max(len(true_edges), 1),
        mse_diag=mse_diag,
        mse_offdiag=mse_off,
        true_positives=tp,
        false_positives=fp,
        total_rejections=r,
    )


def edge_recall(estimate, edges, zero_tol: float = 1e-10) -> float:
    """Fraction of `edges` discovered by `estimate`."""
    edges = frozenset(edges)
    if not edges:
        return 0.0
    return len(discovered_edges(estimate, zero_tol) & edges) / len(edges)


def aggregate(reports) -> tuple[dict, dict]:
    """Mean and standard error of every field across `reports`.

    Returns two dicts keyed by field name: means and standard errors
    (sample standard deviation over sqrt(count); zero for one report).
    """
    reports = list(reports)
    if not reports:
        raise ValueError("cannot aggregate an empty list of reports")
    means, ses = {}, {}
    k = len(reports)
    for f in fields(MetricsReport):
        vals = np.array([getattr(r, f.name) for r in reports], dtype=np.float64)
        means[f.name] = float(vals.mean())
        ses[f.name] = float(vals.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0
    return means, ses

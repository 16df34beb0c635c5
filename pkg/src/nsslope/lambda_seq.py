"""Benjamini-Hochberg style weight sequences for the sorted L1 penalty."""

from __future__ import annotations

import math

import numpy as np

from .core import normal_quantile
from .sorted_l1 import LambdaSequence

__all__ = ["adjusted_sequence", "bh_sequence", "bh_values"]


def _check_level(q: float) -> None:
    if not 0.0 < q < 1.0:
        raise ValueError(f"target level q must lie in (0, 1), got {q}")


def bh_values(d: int, q: float) -> np.ndarray:
    """Raw ``Phi^{-1}(1 - i q / 2d)`` for ``i = 1..d`` as a plain array."""
    if d < 1:
        raise ValueError(f"d must be a positive integer, got {d}")
    _check_level(q)
    i = np.arange(1, d + 1, dtype=np.float64)
    probs = 1.0 - i * q / (2.0 * d)
    if np.any(probs <= 0.5):
        raise ValueError("a quantile argument fell to 0.5 or below; lambda would be <= 0")
    return np.asarray(normal_quantile(probs), dtype=np.float64)


def bh_sequence(d: int, q: float) -> LambdaSequence:
    """BH sequence ``lambda_i = Phi^{-1}(1 - i q / 2d)``, strictly decreasing."""
    return LambdaSequence(bh_values(d, q))


def adjusted_sequence(d: int, q: float, n: int) -> LambdaSequence:
    """BH sequence inflated for correlated (non-orthogonal) designs.

    Built left to right as::

        lambda_i = lambda_i^BH * sqrt(1 + sum_{j<i} lambda_j^2 / (n - i))

    where the sum runs over the already adjusted values. As soon as the
    sequence would increase (or the divisor ``n - i`` is no longer
    positive) the remaining entries are frozen at the last accepted value.

    Parameters
    ----------
    d : int
        Length of the sequence (number of predictors).
    q : float
        Target FDR level in (0, 1).
    n : int
        Number of samples.
    """
    raw = bh_values(d, q)
    lam = np.empty(d)
    lam[0] = raw[0]
    sum_sq = lam[0] ** 2
    stop = d
    for idx in range(1, d):
        # 0-based idx is 1-based i = idx + 1, so w(i-1) = 1 / (n - idx - 1)
        denom = n - idx - 1
        if denom <= 0:
            stop = idx
            break
        value = raw[idx] * math.sqrt(1.0 + sum_sq / denom)
        if value > lam[idx - 1]:
            stop = idx
            break
        lam[idx] = value
        sum_sq += value * value
    lam[stop:] = lam[stop - 1]
    return LambdaSequence(lam)

"""Sorted L1 norm and its proximal operator."""

from __future__ import annotations

import numpy as np
from numba import njit

from .core import DimensionError, NonFiniteError

__all__ = [
    "LambdaSequence",
    "dual_norm_ratio",
    "prox_sorted_l1",
    "sorted_l1_norm",
]


class LambdaSequence:
    """Positive, nonincreasing weights for the sorted L1 norm.

    Equal consecutive values are allowed. The stored array is read-only.
    """

    __slots__ = ("values",)

    def __init__(self, values):
        lam = np.array(values, dtype=np.float64, ndmin=1)
        if lam.ndim != 1 or lam.size == 0:
            raise DimensionError("lambda must be a non-empty vector")
        if not np.all(np.isfinite(lam)):
            raise NonFiniteError("lambda contains non-finite entries")
        if np.any(lam <= 0):
            raise ValueError("lambda values must be strictly positive")
        if np.any(np.diff(lam) > 0):
            raise ValueError("lambda values must be nonincreasing")
        lam.setflags(write=False)
        self.values = lam

    @classmethod
    def uniform(cls, value: float, d: int) -> "LambdaSequence":
        return cls(np.full(d, float(value)))

    def scaled(self, factor: float) -> "LambdaSequence":
        return LambdaSequence(factor * self.values)

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __eq__(self, other) -> bool:
        return isinstance(other, LambdaSequence) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def __repr__(self) -> str:
        return f"LambdaSequence({self.values.tolist()!r})"


def _weights(lam) -> np.ndarray:
    if isinstance(lam, LambdaSequence):
        return lam.values
    return LambdaSequence(lam).values


def sorted_l1_norm(beta, lam) -> float:
    """``sum_i lam_i * |beta|_(i)`` with magnitudes sorted in decreasing order."""
    beta = np.asarray(beta, dtype=np.float64)
    w = _weights(lam)
    if beta.shape != w.shape:
        raise DimensionError(f"beta has length {beta.size}, lambda has length {w.size}")
    mags = np.sort(np.abs(beta))[::-1]
    return float(np.dot(w, mags))


@njit(cache=True, nogil=True)
def _pava_nonincreasing(y, lam):
    """Stack-based pooling of ``y - lam`` into a nonincreasing, nonnegative fit.

    `y` must already be sorted in decreasing order.
    """
    d = y.size
    start = np.empty(d, np.int64)
    end = np.empty(d, np.int64)
    total = np.empty(d)
    avg = np.empty(d)
    k = 0
    for i in range(d):
        start[k] = i
        end[k] = i
        total[k] = y[i] - lam[i]
        avg[k] = total[k]
        # pool only on a strict violation; merging equal blocks adds rounding
        while k > 0 and avg[k - 1] < avg[k]:
            k -= 1
            end[k] = i
            total[k] += total[k + 1]
            avg[k] = total[k] / (i - start[k] + 1)
        k += 1

    x = np.empty(d)
    for j in range(k):
        v = avg[j] if avg[j] > 0.0 else 0.0
        for i in range(start[j], end[j] + 1):
            x[i] = v
    return x


def prox_sorted_l1(z, lam) -> np.ndarray:
    """Proximal operator of the sorted L1 norm.

    Returns ``argmin_x 0.5 * ||x - z||^2 + J_lam(x)`` in O(d log d).

    Parameters
    ----------
    z : array_like, shape (d,)
    lam : LambdaSequence or array_like, shape (d,)
        Nonincreasing positive weights.
    """
    z = np.asarray(z, dtype=np.float64)
    w = _weights(lam)
    if z.shape != w.shape:
        raise DimensionError(f"z has length {z.size}, lambda has length {w.size}")
    return _prox(z, w)


def _prox(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    # no validation; `w` is assumed positive and nonincreasing
    mags = np.abs(z)
    # stable sort on -|z| breaks ties by original index
    order = np.argsort(-mags, kind="stable")
    fitted = _pava_nonincreasing(mags[order], w)
    out = np.empty_like(z)
    out[order] = fitted
    return np.sign(z) * out


def dual_norm_ratio(v, cum_lam: np.ndarray) -> float:
    """Dual sorted L1 norm of `v`: ``max_k cumsum(|v| desc)_k / cum_lam_k``.

    `cum_lam` is the cumulative sum of the weights.
    """
    mags = np.sort(np.abs(v))[::-1]
    return float(np.max(np.cumsum(mags) / cum_lam))

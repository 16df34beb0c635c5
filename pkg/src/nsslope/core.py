"""Dense primitives shared by the rest of the package.

Column centering, the 1/n sample covariance, CSV matrix I/O and the
standard normal quantile function.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erfc

__all__ = [
    "Dataset",
    "DimensionError",
    "NonFiniteError",
    "center_columns",
    "normal_cdf",
    "normal_quantile",
    "read_matrix_csv",
    "write_matrix_csv",
]


class DimensionError(ValueError):
    """Array shapes are too small or do not agree."""


class NonFiniteError(ValueError):
    """Input contains NaN or infinite entries."""


def as_finite_array(a, ndim: int, name: str = "array") -> np.ndarray:
    """Return `a` as a read-only float64 array, rejecting NaN/Inf."""
    arr = np.array(a, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Centered sample matrix with its sample covariance.

    Attributes
    ----------
    X : ndarray, shape (n, p)
        Samples in rows, columns centered to mean zero.
    S : ndarray, shape (p, p)
        Sample covariance ``X.T @ X / n``.
    """

    X: np.ndarray
    S: np.ndarray

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def center_columns(X) -> Dataset:
    """Center the columns of `X` and compute ``S = X'X / n``.

    Parameters
    ----------
    X : array_like, shape (n, p)
        Raw data, ``n >= 2`` and ``p >= 2``.

    Returns
    -------
    Dataset
    """
    X = np.array(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"X must be a 2-d matrix, got shape {X.shape}")
    n, p = X.shape
    if n < 2 or p < 2:
        raise DimensionError(f"need n >= 2 and p >= 2, got n={n}, p={p}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteError("X contains non-finite entries")

    Xc = X - X.mean(axis=0)
    # a second pass removes the residual mean left by rounding
    Xc -= Xc.mean(axis=0)
    S = Xc.T @ Xc / n
    S = (S + S.T) / 2
    Xc.setflags(write=False)
    S.setflags(write=False)
    return Dataset(X=Xc, S=S)


# Acklam's rational approximation coefficients for the inverse normal CDF.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_cdf(z):
    """Standard normal CDF, accurate in both tails."""
    return 0.5 * erfc(-np.asarray(z, dtype=np.float64) / math.sqrt(2.0))


def _acklam(p: np.ndarray) -> np.ndarray:
    z = np.empty_like(p)
    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)

    q = p[mid] - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    z[mid] = num / den

    for mask, tail, sign in ((lo, p[lo], 1.0), (hi, 1.0 - p[hi], -1.0)):
        q = np.sqrt(-2.0 * np.log(tail))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        z[mask] = sign * num / den
    return z


def normal_quantile(prob):
    """Inverse of the standard normal CDF.

    A rational approximation (relative error ~1e-9) polished by Halley
    steps on the CDF. Accepts a scalar or an array; scalars give a float.

    Raises
    ------
    ValueError
        If any probability lies outside the open interval (0, 1).
    """
    scalar = np.ndim(prob) == 0
    p = np.atleast_1d(np.asarray(prob, dtype=np.float64))
    if not np.all((p > 0.0) & (p < 1.0)):
        raise ValueError("normal_quantile is defined only on (0, 1)")

    # Work in the lower half so the CDF residual is computed without cancellation.
    upper = p > 0.5
    tail = np.where(upper, 1.0 - p, p)
    z = _acklam(tail)
    for _ in range(2):
        e = normal_cdf(z) - tail
        u = e * math.sqrt(2.0 * math.pi) * np.exp(0.5 * z * z)
        z = z - u / (1.0 + 0.5 * z * u)
    z = np.where(upper, -z, z)
    # p == 0.5 maps to exactly 0
    z = np.where(p == 0.5, 0.0, z)
    if scalar:
        return float(z[0])
    return z


def read_matrix_csv(path, header: bool = False) -> np.ndarray:
    """Read a comma-separated numeric matrix (row-major, UTF-8)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        arr = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1 if header else 0,
                         dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise ValueError(f"could not parse {path}: {exc}") from None
    if arr.size == 0:
        raise ValueError(f"{path} holds no data")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{path} contains non-finite entries")
    return arr


def write_matrix_csv(path, M, header: list[str] | None = None) -> None:
    """Write a matrix with 17 significant digits so floats round-trip."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in M:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

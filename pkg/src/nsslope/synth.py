"""Ground-truth Gaussian graphical models and seeded sampling."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import combinations

import numpy as np

from .core import Dataset, center_columns, normal_quantile

__all__ = [
    "ExperimentConfig",
    "GroundTruthModel",
    "NotPositiveDefiniteError",
    "make_block_model",
    "make_hub_model",
    "make_model",
    "sample_mvn",
    "standard_normals",
]

EDGE_TOL = 1e-10


class NotPositiveDefiniteError(ValueError):
    pass


@dataclass(frozen=True)
class GroundTruthModel:
    """True covariance, its inverse, and the edges of the precision graph.

    `hubs` lists hub variables for hub structures (empty otherwise).
    """

    sigma: np.ndarray
    theta: np.ndarray
    edge_set: frozenset
    hubs: tuple = ()

    @property
    def p(self) -> int:
        return self.sigma.shape[0]

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edge_set)

    def hub_edges(self) -> frozenset:
        """True edges with at least one endpoint at a hub."""
        hubs = set(self.hubs)
        return frozenset(e for e in self.edge_set if e[0] in hubs or e[1] in hubs)


@dataclass(frozen=True)
class ExperimentConfig:
    structure: str = "block"
    p: int = 40
    n: int = 200
    block_size: int = 4
    off_diag_value: float = 0.3
    hub_value: float = 0.2
    hub_layout: str = "star"
    repetitions: int = 25
    seed: int = 0
    q: float = 0.05
    alpha: float = 0.05

    def __post_init__(self):
        if self.structure not in ("block", "hub"):
            raise ValueError(f"unknown structure {self.structure!r}")
        if self.p < 2 or self.n < 2 or self.repetitions < 1:
            raise ValueError("need p >= 2, n >= 2 and repetitions >= 1")
        if self.structure == "block" and (self.block_size < 1 or self.p % self.block_size):
            raise ValueError(f"p={self.p} is not divisible by block_size={self.block_size}")
        if not (0 < self.q < 1 and 0 < self.alpha < 1):
            raise ValueError("q and alpha must lie in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


def _support(theta: np.ndarray, tol: float = EDGE_TOL) -> frozenset:
    i, j = np.nonzero(np.triu(np.abs(theta) > tol, k=1))
    return frozenset(zip(i.tolist(), j.tolist()))


def _require_pd(M: np.ndarray, what: str) -> None:
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(f"{what} is not positive definite") from None


def make_block_model(p: int, block_size: int = 4, diag_value: float = 1.0,
                     off_value: float = 0.3) -> GroundTruthModel:
    """Block-diagonal precision with constant within-block off-diagonals.

    Each block is ``(diag - off) I + off 11'``, whose inverse is known in
    closed form, so the covariance is assembled block by block.
    """
    if block_size < 1 or p % block_size:
        raise ValueError(f"p={p} is not divisible by block_size={block_size}")
    k = block_size
    a, c = float(diag_value), float(off_value)
    # eigenvalues of the block: a - c (multiplicity k-1) and a + (k-1) c
    lo, hi = a - c, a + (k - 1) * c
    if (k > 1 and lo <= 0) or hi <= 0:
        raise NotPositiveDefiniteError(
            f"block with diag {a} and off-diagonal {c} (size {k}) is not positive definite")

    theta_block = np.full((k, k), c)
    np.fill_diagonal(theta_block, a)
    # (lo I + c 11')^{-1} = I/lo - c/(lo * hi) 11'
    if k == 1:
        sigma_block = np.array([[1.0 / a]])
    else:
        sigma_block = np.full((k, k), -c / (lo * hi))
        sigma_block[np.diag_indices(k)] += 1.0 / lo

    m = p // k
    theta = np.kron(np.eye(m), theta_block)
    sigma = np.kron(np.eye(m), sigma_block)
    _require_pd(sigma, "block covariance")
    if c == 0.0:
        edges = frozenset()
    else:
        edges = frozenset(
            (s + u, s + v) for s in range(0, p, k) for u, v in combinations(range(k), 2))
    return GroundTruthModel(sigma=sigma, theta=theta, edge_set=edges)


def make_hub_model(p: int, hub_value: float = 0.2, layout: str = "star") -> GroundTruthModel:
    """Unit-diagonal hub covariance.

    ``layout="star"`` puts `hub_value` in the first row and first column,
    linking variable 0 to every other variable. This is the pattern that
    shows up as "first column and last row" when the matrix is drawn with
    row 1 at the bottom.

    ``layout="two_hub"`` fills the first column and the last row of an
    identity matrix and averages it with its transpose, so variables 0 and
    ``p - 1`` both become hubs with strength ``hub_value / 2``.
    """
    if p < 2:
        raise ValueError("p must be at least 2")
    if layout == "star":
        sigma = np.eye(p)
        sigma[1:, 0] = hub_value
        sigma[0, 1:] = hub_value
        hubs = (0,)
    elif layout == "two_hub":
        M = np.eye(p)
        M[1:, 0] = hub_value
        M[p - 1, : p - 1] = hub_value
        sigma = (M + M.T) / 2
        hubs = (0, p - 1)
    else:
        raise ValueError(f"unknown hub layout {layout!r}")
    _require_pd(sigma, "hub covariance")
    theta = np.linalg.inv(sigma)
    theta = (theta + theta.T) / 2
    if hub_value == 0:
        hubs = ()
    return GroundTruthModel(sigma=sigma, theta=theta, edge_set=_support(theta), hubs=hubs)


def make_model(config: ExperimentConfig) -> GroundTruthModel:
    if config.structure == "block":
        return make_block_model(config.p, config.block_size, 1.0, config.off_diag_value)
    return make_hub_model(config.p, config.hub_value, config.hub_layout)


def standard_normals(shape, seed: int) -> np.ndarray:
    """Standard normal draws from a Philox stream via the inverse CDF.

    Uniforms are built from the top 53 bits of each raw 64-bit word,
    offset by half a unit so they never hit 0 or 1.
    """
    count = int(np.prod(shape))
    bits = np.random.Philox(seed).random_raw(count)
    u = ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return np.asarray(normal_quantile(u)).reshape(shape)


def sample_mvn(model: GroundTruthModel, n: int, seed: int) -> Dataset:
    """Draw `n` rows ``x = L z`` with ``L`` the Cholesky factor of Sigma."""
    if n < 2:
        raise ValueError("n must be at least 2")
    L = np.linalg.cholesky(model.sigma)
    Z = standard_normals((n, model.p), seed)
    return center_columns(Z @ L.T)

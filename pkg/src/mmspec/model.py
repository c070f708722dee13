"""Generative models: the undirected mixed membership stochastic blockmodel
(MMSBM), the random dot product graph (RDPG), and the map between them.

Graphs are stored as a sorted upper-triangle edge list with 0-based node
indices; the text format on disk is 1-based (see :mod:`mmspec.io`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import InvalidParameterError, NotNonnegativeDefiniteError

SYMMETRY_TOL = 1e-12
NND_TOL = 1e-10
RANK_RTOL = 1e-10
PROB_TOL = 1e-10
MAX_DENSE_N = 20_000

# largest number of node pairs handled per kernel call
_BLOCK_PAIRS = 1 << 22

# three-community example used throughout the simulation studies
DEFAULT_B = np.array([[0.9, 0.2, 0.3], [0.2, 0.9, 0.5], [0.3, 0.5, 0.9]])


def as_rng(rng=None) -> np.random.Generator:
    """Coerce a seed, ``None`` or a Generator into a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _eig_block_matrix(b):
    evals, evecs = np.linalg.eigh(b)
    order = np.argsort(evals)[::-1]
    return evals[order], evecs[:, order]


def detect_rank(b, rtol=RANK_RTOL) -> int:
    """Number of eigenvalues of ``b`` above ``rtol`` times the largest."""
    evals = np.linalg.eigvalsh(np.asarray(b, dtype=float))
    top = evals.max()
    if top <= 0:
        return 0
    return int(np.sum(evals > rtol * top))


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of an undirected MMSBM.

    Parameters
    ----------
    B : array_like, shape (k, k)
        Symmetric, non-negative definite block probability matrix.
    alpha : array_like, shape (k,)
        Dirichlet concentration, all entries positive.
    d : int, optional
        Rank of ``B``. Detected when omitted; validated when given.
    """

    B: np.ndarray
    alpha: np.ndarray
    d: Optional[int] = None
    k: int = field(init=False)

    def __post_init__(self):
        b = np.array(self.B, dtype=float, ndmin=2)
        alpha = np.array(self.alpha, dtype=float, ndmin=1)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise InvalidParameterError(f"B must be square, got shape {b.shape}")
        k = b.shape[0]
        if alpha.shape != (k,):
            raise InvalidParameterError(f"alpha must have length {k}, got shape {alpha.shape}")
        if not np.all(np.isfinite(b)):
            raise InvalidParameterError("B has non-finite entries")
        if np.max(np.abs(b - b.T)) > SYMMETRY_TOL:
            raise InvalidParameterError("B is not symmetric")
        if b.min() < 0 or b.max() > 1:
            raise InvalidParameterError("B entries must lie in [0, 1]")
        if not np.all(alpha > 0) or not np.all(np.isfinite(alpha)):
            raise InvalidParameterError("alpha components must be positive and finite")
        b = (b + b.T) / 2
        lam_min = np.linalg.eigvalsh(b).min()
        if lam_min < -NND_TOL:
            raise NotNonnegativeDefiniteError(lam_min, NND_TOL)
        rank = detect_rank(b)
        if self.d is not None and int(self.d) != rank:
            raise InvalidParameterError(f"d={self.d} but rank(B)={rank}")
        b.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "d", rank)
        object.__setattr__(self, "k", k)

    @classmethod
    def default(cls, alpha=(1.0, 1.0, 1.0)) -> "ModelSpec":
        """The full-rank three-community model used by the experiments."""
        return cls(DEFAULT_B, alpha)

    def to_dict(self) -> dict:
        return {"k": self.k, "d": self.d, "B": self.B.tolist(), "alpha": self.alpha.tolist()}


@dataclass(frozen=True)
class GroundTruth:
    pi: np.ndarray
    x: Optional[np.ndarray] = None


@dataclass
class GraphSample:
    """Undirected simple graph on ``n`` nodes.

    ``edges`` is an (m, 2) integer array of 0-based pairs with ``i < j``,
    sorted lexicographically.
    """

    n: int
    edges: np.ndarray
    truth: Optional[GroundTruth] = None

    def __post_init__(self):
        edges = np.asarray(self.edges)
        if edges.size == 0:
            edges = np.empty((0, 2), dtype=np.int32)
        if edges.ndim != 2 or edges.shape[1] != 2:
            raise InvalidParameterError("edges must have shape (m, 2)")
        self.edges = edges

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def density(self) -> float:
        return self.n_edges / (self.n * (self.n - 1) / 2)

    def to_dense(self, dtype=np.float64) -> np.ndarray:
        """Symmetric hollow adjacency matrix."""
        if self.n > MAX_DENSE_N:
            raise InvalidParameterError(f"refusing to densify n={self.n} > {MAX_DENSE_N}")
        a = np.zeros((self.n, self.n), dtype=dtype)
        i, j = self.edges[:, 0], self.edges[:, 1]
        a[i, j] = 1
        a[j, i] = 1
        return a

    def relabel(self, perm) -> "GraphSample":
        """Graph with node ``i`` renamed to ``perm[i]``; truth rows follow."""
        perm = np.asarray(perm)
        e = perm[self.edges]
        e.sort(axis=1)
        e = e[np.lexsort((e[:, 1], e[:, 0]))]
        truth = None
        if self.truth is not None:
            inv = np.argsort(perm)
            x = None if self.truth.x is None else self.truth.x[inv]
            truth = GroundTruth(self.truth.pi[inv], x)
        return GraphSample(self.n, e.astype(self.edges.dtype), truth)


def _row_blocks(n):
    """Split rows 0..n-2 into contiguous blocks of at most ``_BLOCK_PAIRS`` pairs."""
    i0 = 0
    while i0 < n - 1:
        pairs = 0
        i1 = i0
        while i1 < n - 1 and (pairs == 0 or pairs + (n - 1 - i1) <= _BLOCK_PAIRS):
            pairs += n - 1 - i1
            i1 += 1
        yield i0, i1, pairs
        i0 = i1


def _concat(blocks):
    if not blocks:
        return np.empty((0, 2), dtype=np.int32)
    return np.concatenate(blocks, axis=0)


def sample_dirichlet(alpha, n, rng=None) -> np.ndarray:
    """``n`` i.i.d. Dirichlet(alpha) rows, renormalized onto the simplex."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or not np.all(alpha > 0):
        raise InvalidParameterError("alpha components must be positive")
    if n < 1:
        raise InvalidParameterError("n must be at least 1")
    rng = as_rng(rng)
    if alpha.size == 1:
        return np.ones((n, 1))
    pi = rng.dirichlet(alpha, size=n)
    return pi / pi.sum(axis=1, keepdims=True)


def sample_mmsbm(spec: ModelSpec, n=None, rng=None, pi=None) -> GraphSample:
    """Draw ``(Pi, A) ~ MMSBM(B, alpha)``.

    Every pair ``i < j`` draws its two community indicators from the rows of
    ``Pi`` and then an edge from the corresponding entry of ``B``. Pass
    ``pi`` to condition on fixed memberships (``n`` is then taken from it).
    """
    rng = as_rng(rng)
    if pi is None:
        if n is None or n < 2:
            raise InvalidParameterError("n must be at least 2")
        pi = sample_dirichlet(spec.alpha, n, rng)
    else:
        pi = np.asarray(pi, dtype=float)
        if pi.ndim != 2 or pi.shape[1] != spec.k:
            raise InvalidParameterError(f"pi must have shape (n, {spec.k})")
        n = pi.shape[0]
    cum = np.cumsum(pi, axis=1)
    cum[:, -1] = 1.0
    blocks = []
    for i0, i1, pairs in _row_blocks(n):
        u = rng.random((3, pairs))
        blocks.append(kernels.mmsbm_block(cum, spec.B, i0, i1, u))
    truth = GroundTruth(pi, latent_positions(pi, spec))
    return GraphSample(n, _concat(blocks), truth)


def sample_rdpg(x, rng=None) -> GraphSample:
    """Draw ``A ~ RDPG`` given latent positions ``x`` (n, d)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < 2:
        raise InvalidParameterError("need at least two nodes")
    rng = as_rng(rng)
    blocks = []
    for i0, i1, pairs in _row_blocks(n):
        u = rng.random(pairs)
        blocks.append(kernels.rdpg_block(x, i0, i1, u))
    return GraphSample(n, _concat(blocks), GroundTruth(pi=None, x=x))


def latent_positions(pi, spec) -> np.ndarray:
    """Latent positions ``Pi U Sigma^{1/2}`` for ``B = U Sigma U^T``.

    Only the ``d`` eigenpairs above the rank tolerance are kept, in
    decreasing order. Each eigenvector is signed so that its largest
    magnitude entry is positive.

    Parameters
    ----------
    pi : array_like, shape (n, k)
    spec : ModelSpec or array_like
        A model or a bare ``B`` matrix.
    """
    b = spec.B if isinstance(spec, ModelSpec) else np.asarray(spec, dtype=float)
    pi = np.atleast_2d(np.asarray(pi, dtype=float))
    evals, evecs = _eig_block_matrix(b)
    if evals[-1] < -NND_TOL:
        raise NotNonnegativeDefiniteError(evals[-1], NND_TOL)
    d = int(np.sum(evals > RANK_RTOL * max(evals[0], 0.0))) if evals[0] > 0 else 0
    u = evecs[:, :d]
    idx = np.argmax(np.abs(u), axis=0)
    u = u * np.sign(u[idx, np.arange(d)])
    return pi @ (u * np.sqrt(evals[:d]))


def true_vertices(spec) -> np.ndarray:
    """Vertices of the latent support: rows of ``U Sigma^{1/2}`` (k, d)."""
    b = spec.B if isinstance(spec, ModelSpec) else np.asarray(spec, dtype=float)
    return latent_positions(np.eye(b.shape[0]), b)


def edge_probability(pi_i, pi_j, b) -> float:
    """Marginal edge probability ``pi_i^T B pi_j`` given memberships."""
    p = float(np.asarray(pi_i) @ np.asarray(b) @ np.asarray(pi_j))
    return min(max(p, 0.0), 1.0)

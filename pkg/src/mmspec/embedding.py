"""Adjacency spectral embedding, PCA projection/reconstruction, and
Procrustes alignment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import ConvergenceError, InvalidParameterError
from .model import GraphSample
from .polytope import Polytope

DENSE_MAX_N = 2000
MAX_ITER = 10_000
RESIDUAL_RTOL = 1e-8


@dataclass(frozen=True)
class Embedding:
    """Estimated latent positions.

    Attributes
    ----------
    xhat : ndarray, shape (n, d)
    eigenvalues : ndarray, shape (d,)
        Signed eigenvalues, decreasing in magnitude.
    residual : float
        Largest ``||A v - lambda v||`` over the retained pairs.
    """

    xhat: np.ndarray
    eigenvalues: np.ndarray
    residual: float = 0.0

    @property
    def n(self) -> int:
        return self.xhat.shape[0]

    @property
    def d(self) -> int:
        return self.xhat.shape[1]


@dataclass(frozen=True)
class PcaFrame:
    """Mean and principal directions of an embedding.

    ``basis`` is (d, d-1) with orthonormal columns; ``spectrum`` holds the
    retained covariance eigenvalues (non-increasing), ``dropped`` the rest.
    """

    mean: np.ndarray
    basis: np.ndarray
    spectrum: np.ndarray
    dropped: np.ndarray

    def project(self, points) -> np.ndarray:
        return (np.atleast_2d(points) - self.mean) @ self.basis

    def reconstruct(self, coords) -> np.ndarray:
        return np.atleast_2d(coords) @ self.basis.T + self.mean


def _magnitude_order(evals):
    # decreasing |lambda|; ties go to the algebraically larger eigenvalue
    return np.lexsort((-evals, -np.abs(evals)))


def _fix_signs(vecs):
    s = vecs.sum(axis=0)
    idx = np.argmax(np.abs(vecs), axis=0)
    peak = vecs[idx, np.arange(vecs.shape[1])]
    sign = np.where(np.abs(s) > 1e-8, np.sign(s), np.sign(peak))
    sign[sign == 0] = 1.0
    return vecs * sign


def _frobenius(op, evals):
    if isinstance(op, np.ndarray):
        return float(np.linalg.norm(op))
    if scipy.sparse.issparse(op):
        return float(scipy.sparse.linalg.norm(op))
    # unknown operator: the spectral radius bound is stricter than ||A||_F
    return float(np.max(np.abs(evals)))


def _dense_topk(a, d):
    n = a.shape[0]
    if scipy.sparse.issparse(a):
        a = a.toarray()
    if 2 * d >= n:
        evals, evecs = scipy.linalg.eigh(a)
    else:
        lo_vals, lo_vecs = scipy.linalg.eigh(a, subset_by_index=[0, d - 1])
        hi_vals, hi_vecs = scipy.linalg.eigh(a, subset_by_index=[n - d, n - 1])
        evals = np.concatenate([lo_vals, hi_vals])
        evecs = np.concatenate([lo_vecs, hi_vecs], axis=1)
    order = _magnitude_order(evals)[:d]
    return evals[order], evecs[:, order]


def _iterative_topk(op, d):
    n = op.shape[0]
    v0 = np.random.default_rng(0).standard_normal(n)
    try:
        evals, evecs = scipy.sparse.linalg.eigsh(
            op, k=d, which="LM", v0=v0, maxiter=MAX_ITER, tol=0
        )
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        raise ConvergenceError(
            f"eigensolver did not converge within {MAX_ITER} iterations "
            f"({len(exc.eigenvalues)} of {d} pairs converged)",
            residual=float("inf"),
            iterations=MAX_ITER,
        ) from exc
    order = _magnitude_order(evals)
    return evals[order], evecs[:, order]


def eigen_topk_by_magnitude(sym, d, method="auto", return_residual=False):
    """The ``d`` eigenpairs of a symmetric operator largest in magnitude.

    Parameters
    ----------
    sym : ndarray, sparse matrix or LinearOperator, shape (n, n)
    d : int
    method : {"auto", "dense", "iterative"}
        ``auto`` uses a dense solver up to n = 2000 and implicitly
        restarted Lanczos above that.

    Returns
    -------
    eigenvalues : ndarray, shape (d,)
        Signed, ordered by decreasing magnitude.
    eigenvectors : ndarray, shape (n, d)
    residual : float
        Only when ``return_residual`` is set.

    Raises
    ------
    ConvergenceError
        If the solver fails or any pair has
        ``||A v - lambda v|| > 1e-8 ||A||_F``.
    """
    n = sym.shape[0]
    if sym.shape != (n, n):
        raise InvalidParameterError("operator must be square")
    if not 1 <= d < n:
        raise InvalidParameterError(f"need 1 <= d < n, got d={d}, n={n}")
    is_matrix = isinstance(sym, np.ndarray) or scipy.sparse.issparse(sym)
    if method == "auto":
        method = "dense" if is_matrix and n <= DENSE_MAX_N else "iterative"
    if method == "dense":
        if not is_matrix:
            raise InvalidParameterError("dense method needs an explicit matrix")
        evals, evecs = _dense_topk(sym, d)
    elif method == "iterative":
        if d >= n - 1:
            evals, evecs = _dense_topk(sym, d)
        else:
            evals, evecs = _iterative_topk(sym, d)
    else:
        raise InvalidParameterError(f"unknown method {method!r}")
    evecs = _fix_signs(evecs)
    res = np.linalg.norm(sym @ evecs - evecs * evals, axis=0)
    worst = float(res.max())
    if worst > RESIDUAL_RTOL * _frobenius(sym, evals):
        raise ConvergenceError(
            f"eigen-residual {worst:.3g} exceeds tolerance", residual=worst
        )
    if return_residual:
        return evals, evecs, worst
    return evals, evecs


def spectral_embed(g, d, method="auto") -> Embedding:
    """Adjacency spectral embedding ``U_A |S_A|^{1/2}`` into R^d.

    ``g`` is a :class:`GraphSample` or an explicit symmetric matrix (useful
    for embedding a noiseless probability matrix).
    """
    if isinstance(g, GraphSample):
        if not 1 <= d < g.n:
            raise InvalidParameterError(f"need 1 <= d < n, got d={d}, n={g.n}")
        a = g.to_dense()
    else:
        a = g
    evals, evecs, res = eigen_topk_by_magnitude(a, d, method=method, return_residual=True)
    xhat = evecs * np.sqrt(np.abs(evals))
    return Embedding(xhat, evals, res)


def pca_project(e):
    """Project an embedding onto its ``d-1`` principal components.

    Uses the covariance with divisor ``n``. Returns ``(xtilde, frame)``
    where ``xtilde = (xhat - mean) @ frame.basis``.
    """
    xhat = e.xhat if isinstance(e, Embedding) else np.asarray(e, dtype=float)
    n, d = xhat.shape
    if d < 2:
        raise InvalidParameterError("PCA projection needs d >= 2")
    mean = xhat.mean(axis=0)
    centered = xhat - mean
    cov = centered.T @ centered / n
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    basis = evecs[:, : d - 1]
    idx = np.argmax(np.abs(basis), axis=0)
    basis = basis * np.sign(basis[idx, np.arange(d - 1)])
    frame = PcaFrame(mean, basis, np.maximum(evals[: d - 1], 0.0), evals[d - 1 :])
    return centered @ basis, frame


def pca_reconstruct(poly: Polytope, frame: PcaFrame) -> Polytope:
    """Map a polytope from principal coordinates back to R^d."""
    if poly.ambient_dim != frame.basis.shape[1]:
        raise InvalidParameterError(
            f"polytope lives in R^{poly.ambient_dim}, frame expects R^{frame.basis.shape[1]}"
        )
    return Polytope(frame.reconstruct(poly.vertices))


def procrustes_align(a, b):
    """Orthogonal ``w`` minimizing ``||a w - b||_F``.

    Returns ``(w, max_row_error)`` where the error is the largest row norm
    of ``a w - b``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidParameterError(f"shape mismatch {a.shape} vs {b.shape}")
    u, _, vt = np.linalg.svd(a.T @ b)
    w = u @ vt
    err = float(np.linalg.norm(a @ w - b, axis=1).max())
    return w, err

"""End-to-end spectral estimation of (B, memberships, alpha) and the
identifiability-aware error metrics used to evaluate it."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import digamma, gammaln, polygamma

from . import kernels
from .embedding import Embedding, PcaFrame, pca_project, pca_reconstruct, spectral_embed
from .errors import ConvergenceError, InvalidParameterError
from .polytope import (
    A_STAR,
    Polytope,
    barycentric,
    fit_interval,
    fit_mvecp,
    shrink,
    shrink_factor,
    symdiff_volume_mc,
)

EXHAUSTIVE_MAX_K = 8


@dataclass(frozen=True)
class ShrinkPolicy:
    """How far to contract the fitted polytope toward the cloud mean.

    ``kind`` is ``"none"`` (eta = 1), ``"fixed"`` (eta = value) or
    ``"rate"`` (eta = 1 - value * sqrt(log n / n)).
    """

    kind: str = "none"
    value: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("none", "fixed", "rate"):
            raise InvalidParameterError(f"unknown shrink policy {self.kind!r}")
        if self.kind == "fixed" and not (self.value is not None and 0.0 <= self.value <= 1.0):
            raise InvalidParameterError("fixed policy needs eta in [0, 1]")
        if self.kind == "rate":
            if self.value is None:
                object.__setattr__(self, "value", A_STAR)
            if self.value < 0:
                raise InvalidParameterError("rate constant must be non-negative")

    @classmethod
    def parse(cls, text) -> "ShrinkPolicy":
        """Parse ``none``, ``fixed:<eta>``, ``rate`` or ``rate:<a>``."""
        if isinstance(text, ShrinkPolicy):
            return text
        kind, _, value = str(text).strip().partition(":")
        kind = kind.lower()
        if kind == "none":
            if value:
                raise InvalidParameterError("policy 'none' takes no value")
            return cls("none")
        if kind in ("fixed", "rate"):
            if not value and kind == "fixed":
                raise InvalidParameterError("policy 'fixed' needs a value, e.g. fixed:0.9")
            try:
                num = float(value) if value else None
            except ValueError as exc:
                raise InvalidParameterError(f"bad policy value {value!r}") from exc
            return cls(kind, num)
        raise InvalidParameterError(f"unknown shrink policy {text!r}")

    def eta(self, n) -> float:
        if self.kind == "none":
            return 1.0
        if self.kind == "fixed":
            return float(self.value)
        return shrink_factor(n, self.value)

    def __str__(self):
        if self.kind == "none":
            return "none"
        return f"{self.kind}:{self.value!r}"


@dataclass
class EstimationResult:
    b_hat: np.ndarray
    pi_hat: Optional[np.ndarray]
    alpha_hat: Optional[np.ndarray]
    s_hat: Polytope
    s_hat_raw: Polytope
    frame: Optional[PcaFrame]
    eta: float
    policy: str
    xhat: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self, include_xhat=False) -> dict:
        out = {
            "policy": self.policy,
            "eta": self.eta,
            "b_hat": self.b_hat.tolist(),
            "pi_hat": None if self.pi_hat is None else self.pi_hat.tolist(),
            "alpha_hat": None if self.alpha_hat is None else self.alpha_hat.tolist(),
            "s_hat": self.s_hat.to_dict(),
            "s_hat_raw": self.s_hat_raw.to_dict(),
            "frame": None
            if self.frame is None
            else {
                "mean": self.frame.mean.tolist(),
                "basis": self.frame.basis.tolist(),
                "spectrum": self.frame.spectrum.tolist(),
            },
            "diagnostics": self.diagnostics,
        }
        if include_xhat and self.xhat is not None:
            out["xhat"] = self.xhat.tolist()
        return out


@dataclass
class GeometryFit:
    """Policy-independent part of the pipeline: embedding and raw polytope."""

    xhat: np.ndarray
    k: int
    d: int
    s_tilde: Polytope
    center: np.ndarray
    frame: Optional[PcaFrame]
    diagnostics: dict


# ----------------------------------------------------------------------------
# pipeline


def fit_geometry(xhat, k, d) -> GeometryFit:
    """Project the embedding and fit the enclosing polytope (no shrinkage)."""
    diag = {}
    if isinstance(xhat, Embedding):
        diag["eigen_residual"] = float(xhat.residual)
        diag["eigenvalues"] = xhat.eigenvalues.tolist()
        xhat = xhat.xhat
    xhat = np.asarray(xhat, dtype=float)
    if xhat.ndim == 1:
        xhat = xhat[:, None]
    if not (k >= d >= 1):
        raise InvalidParameterError(f"need k >= d >= 1, got k={k}, d={d}")
    if xhat.shape[1] != d:
        raise InvalidParameterError(f"embedding has {xhat.shape[1]} columns, expected d={d}")
    if d == 1:
        if k > 2:
            raise InvalidParameterError("d = 1 supports k <= 2 only")
        return GeometryFit(xhat, k, d, fit_interval(xhat), xhat.mean(axis=0), None, diag)
    xt, frame = pca_project(xhat)
    s_tilde, info = fit_mvecp(xt, k, return_info=True)
    diag["mvecp_passes"] = info["passes"]
    diag["mvecp_volume"] = info["volume"]
    return GeometryFit(xhat, k, d, s_tilde, xt.mean(axis=0), frame, diag)


def finish(geom: GeometryFit, policy="none") -> EstimationResult:
    """Apply a shrink policy to a fitted geometry and derive B, Pi, alpha."""
    policy = ShrinkPolicy.parse(policy)
    n = geom.xhat.shape[0]
    eta = policy.eta(n)
    diag = dict(geom.diagnostics)
    shrunk = shrink(geom.s_tilde, geom.center, eta)
    if geom.frame is None:
        s_hat, s_hat_raw = shrunk, geom.s_tilde
        verts = s_hat.vertices.mean(axis=0, keepdims=True) if geom.k == 1 else s_hat.vertices
    else:
        s_hat = pca_reconstruct(shrunk, geom.frame)
        s_hat_raw = pca_reconstruct(geom.s_tilde, geom.frame)
        verts = s_hat.vertices
    b_hat, raw = estimate_B(verts, return_raw=True)
    excess = np.maximum(raw - 1.0, 0.0) + np.maximum(-raw, 0.0)
    diag["b_clip_count"] = int(np.count_nonzero(excess))
    diag["b_clip_max"] = float(excess.max())

    pi_hat = alpha_hat = None
    if geom.k == geom.d == 1:
        pi_hat = np.ones((n, 1))
    elif geom.k == geom.d:
        pi_hat, info = estimate_memberships(geom.xhat, s_hat, return_info=True)
        diag["pi_clip_count"] = info["clip_count"]
        diag["pi_residual"] = info["residual"]
        alpha_hat, minfo = dirichlet_mle(pi_hat, full_output=True)
        diag["mle_iterations"] = minfo["iterations"]
        diag["mle_floor_count"] = minfo["floor_count"]
    return EstimationResult(
        b_hat=b_hat,
        pi_hat=pi_hat,
        alpha_hat=alpha_hat,
        s_hat=s_hat,
        s_hat_raw=s_hat_raw,
        frame=geom.frame,
        eta=eta,
        policy=str(policy),
        xhat=geom.xhat,
        diagnostics=diag,
    )


def estimate_from_embedding(xhat, k, d, policy="none") -> EstimationResult:
    """Pipeline from given latent positions, skipping the eigensolver."""
    return finish(fit_geometry(xhat, k, d), policy)


def estimate(g, k, d, policy="none", method="auto") -> EstimationResult:
    """Estimate ``B``, memberships and ``alpha`` from an observed graph.

    Embeds into R^d, projects on the d-1 principal components, fits the
    minimum-volume enclosing k-polytope, shrinks it toward the cloud mean
    according to ``policy``, and maps it back to R^d. Its vertices give
    ``B_hat``; memberships and ``alpha_hat`` are returned when ``d == k``.
    """
    if not (k >= d >= 1):
        raise InvalidParameterError(f"need k >= d >= 1, got k={k}, d={d}")
    if g.n < 2:
        raise InvalidParameterError("graph needs at least two nodes")
    return estimate_from_embedding(spectral_embed(g, d, method=method), k, d, policy)


# ----------------------------------------------------------------------------
# individual steps


def estimate_B(vertices, return_raw=False):
    """Gram matrix of the vertices, clipped to [0, 1]."""
    v = np.atleast_2d(np.asarray(vertices, dtype=float))
    raw = v @ v.T
    raw = (raw + raw.T) / 2
    b = np.clip(raw, 0.0, 1.0)
    return (b, raw) if return_raw else b


def estimate_memberships(xhat, s_hat, return_info=False):
    """Barycentric memberships of each row of ``xhat`` in ``s_hat``.

    Points are expressed in the affine hull of the k vertices; rows with a
    negative coordinate are replaced by their Euclidean projection onto the
    probability simplex.
    """
    v = s_hat.vertices if isinstance(s_hat, Polytope) else np.asarray(s_hat, dtype=float)
    x = np.atleast_2d(np.asarray(xhat, dtype=float))
    k = v.shape[0]
    if x.shape[1] != v.shape[1]:
        raise InvalidParameterError("xhat and vertices have different dimensions")
    if k < 2:
        raise InvalidParameterError("need at least two vertices")
    q, _ = np.linalg.qr((v[1:] - v[0]).T)
    lam = barycentric((v - v[0]) @ q, (x - v[0]) @ q)
    outside = (lam < 0).any(axis=1)
    pi = lam.copy()
    if outside.any():
        pi[outside] = kernels.project_simplex_rows(lam[outside])
    if not return_info:
        return pi
    in_plane = (x - v[0]) @ q @ q.T + v[0]
    info = {
        "clip_count": int(outside.sum()),
        "residual": float(np.abs(lam @ v - in_plane).max()),
    }
    return pi, info


def _dirichlet_loglik(alpha, mean_log):
    return float(gammaln(alpha.sum()) - gammaln(alpha).sum() + ((alpha - 1) * mean_log).sum())


def dirichlet_mle(pi_hat, max_iter=500, gtol=1e-10, alpha_max=1e6, floor=1e-10,
                  full_output=False):
    """Maximum likelihood Dirichlet concentration for simplex-valued rows.

    Damped Newton ascent on the mean log-likelihood, started from the
    method-of-moments estimate. The Hessian is diagonal plus rank one, so
    each step is solved in O(k).

    Parameters
    ----------
    pi_hat : array_like, shape (n, k)
    gtol : float
        Convergence threshold on the sup-norm of the mean gradient.
    alpha_max : float
        Ceiling; crossing it is reported as non-convergence.
    floor : float
        Entries are clipped below at this value (rows renormalized) before
        taking logarithms.

    Returns
    -------
    alpha : ndarray, shape (k,)
    info : dict
        Only with ``full_output``: ``iterations``, ``loglik`` (trace of the
        mean log-likelihood) and ``floor_count``.

    Raises
    ------
    ConvergenceError
        On hitting the iteration cap or the ceiling.
    """
    p = np.atleast_2d(np.asarray(pi_hat, dtype=float))
    n, k = p.shape
    if n < 2:
        raise InvalidParameterError("need at least two rows")
    if k < 2:
        raise InvalidParameterError("need at least two components")
    floor_count = int(np.count_nonzero(p < floor))
    p = np.maximum(p, floor)
    p = p / p.sum(axis=1, keepdims=True)
    mean_log = np.log(p).mean(axis=0)

    m1 = p.mean(axis=0)
    m2 = (p**2).mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (m1 - m2) / (m2 - m1**2)
    s = s[np.isfinite(s) & (s > 0)]
    total = float(np.median(s)) if s.size else alpha_max
    alpha = np.clip(total * m1, 1e-3, alpha_max)

    ll = _dirichlet_loglik(alpha, mean_log)
    trace = [ll]
    for it in range(max_iter):
        grad = digamma(alpha.sum()) - digamma(alpha) + mean_log
        if np.abs(grad).max() < gtol:
            info = {"iterations": it, "loglik": trace, "floor_count": floor_count}
            return (alpha, info) if full_output else alpha
        q = -polygamma(1, alpha)
        z = polygamma(1, alpha.sum())
        b = (grad / q).sum() / (1.0 / z + (1.0 / q).sum())
        step = (grad - b) / q
        t = 1.0
        slack = 4 * np.finfo(float).eps * (1.0 + abs(ll))
        for _ in range(60):
            cand = alpha - t * step
            if np.all(cand > 0):
                cll = _dirichlet_loglik(cand, mean_log)
                if cll >= ll - slack:
                    break
            t /= 2
        else:
            raise ConvergenceError(
                "line search failed in Dirichlet MLE", iterations=len(trace)
            )
        alpha, ll = cand, cll
        trace.append(ll)
        if alpha.max() > alpha_max:
            raise ConvergenceError(
                f"Dirichlet MLE exceeded the ceiling alpha_max={alpha_max:g}",
                residual=float(np.abs(grad).max()),
                iterations=len(trace),
            )
    raise ConvergenceError(
        f"Dirichlet MLE did not converge in {max_iter} iterations",
        residual=float(np.abs(grad).max()),
        iterations=len(trace),
    )


# ----------------------------------------------------------------------------
# error metrics


class PermutationMatch(NamedTuple):
    perm: tuple
    error: float
    exact: bool


def _all_perms(k):
    return np.array(list(itertools.permutations(range(k))), dtype=np.intp)


def match_permutation(b_hat, b) -> PermutationMatch:
    """Row-column permutation of ``b_hat`` closest to ``b`` in Frobenius norm.

    ``perm[i]`` is the row of ``b_hat`` mapped to row ``i`` of ``b``, i.e.
    the permuted matrix is ``b_hat[perm][:, perm]``. Exhaustive for
    k <= 8; above that an assignment heuristic (``exact=False``).
    """
    b_hat = np.asarray(b_hat, dtype=float)
    b = np.asarray(b, dtype=float)
    if b_hat.shape != b.shape or b.shape[0] != b.shape[1]:
        raise InvalidParameterError("matrices must be square and of equal size")
    k = b.shape[0]
    if k <= EXHAUSTIVE_MAX_K:
        perms = _all_perms(k)
        stacked = b_hat[perms[:, :, None], perms[:, None, :]]
        errs = np.sqrt(((stacked - b) ** 2).sum(axis=(1, 2)))
        best = int(np.argmin(errs))
        return PermutationMatch(tuple(int(i) for i in perms[best]), float(errs[best]), True)
    cost = (b_hat.diagonal()[:, None] - b.diagonal()[None, :]) ** 2
    cost += ((np.sort(b_hat, axis=1)[:, None, :] - np.sort(b, axis=1)[None, :, :]) ** 2).sum(axis=2)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(k, dtype=np.intp)
    perm[cols] = rows
    err = float(np.linalg.norm(b_hat[perm][:, perm] - b))
    return PermutationMatch(tuple(int(i) for i in perm), err, False)


def vertex_error(v_hat, v_true) -> float:
    """Smallest, over vertex matchings, largest matched vertex distance."""
    v_hat = np.atleast_2d(np.asarray(v_hat, dtype=float))
    v_true = np.atleast_2d(np.asarray(v_true, dtype=float))
    if v_hat.shape != v_true.shape:
        raise InvalidParameterError("vertex sets differ in shape")
    k = v_true.shape[0]
    dist = np.linalg.norm(v_hat[:, None, :] - v_true[None, :, :], axis=2)
    if k <= EXHAUSTIVE_MAX_K:
        perms = _all_perms(k)
        return float(dist[perms, np.arange(k)].max(axis=1).min())
    rows, cols = linear_sum_assignment(dist**2)
    return float(dist[rows, cols].max())


def alpha_error(alpha_hat, alpha) -> float:
    """Smallest Euclidean error over coordinate permutations."""
    alpha_hat = np.asarray(alpha_hat, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    perms = _all_perms(alpha.size)
    return float(np.linalg.norm(alpha_hat[perms] - alpha, axis=1).min())


def pi_max_error(pi_hat, pi) -> float:
    """Smallest, over column permutations, largest row error."""
    pi_hat = np.asarray(pi_hat, dtype=float)
    pi = np.asarray(pi, dtype=float)
    best = math.inf
    for perm in itertools.permutations(range(pi.shape[1])):
        err = np.linalg.norm(pi_hat[:, perm] - pi, axis=1).max()
        best = min(best, float(err))
    return best


def symdiff_diagnostic(s_hat, v_true, w=None, samples=100_000, rng=None):
    """Symmetric-difference volume between an aligned estimate and the truth.

    ``s_hat`` (k vertices in R^d, k = d) is rotated by ``w`` (right
    multiplication), both vertex sets are projected on the affine hull of
    ``v_true`` and the area is estimated there by Monte Carlo. Returns
    ``(estimate, standard_error)``.
    """
    v = s_hat.vertices if isinstance(s_hat, Polytope) else np.asarray(s_hat, dtype=float)
    v_true = np.asarray(v_true, dtype=float)
    if w is not None:
        v = v @ w
    q, _ = np.linalg.qr((v_true[1:] - v_true[0]).T)
    p_hat = Polytope((v - v_true[0]) @ q)
    p_true = Polytope((v_true - v_true[0]) @ q)
    return symdiff_volume_mc(p_hat, p_true, samples, rng)

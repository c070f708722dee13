"""Convex polytope geometry and the minimum-volume enclosing polytope fit.

A :class:`Polytope` is an ordered vertex list in R^m. Most operations
specialize to the simplex case (k = m + 1 vertices), which is what the
estimation pipeline uses when B has full rank.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateInputError, InvalidParameterError
from .model import as_rng

CONTAIN_TOL = 1e-9
DEGENERATE_RTOL = 1e-12

# shrink constant for which eta = 0.9 at n = 10 000
A_STAR = 0.1 * math.sqrt(10_000) / math.sqrt(math.log(10_000))


@dataclass(frozen=True)
class Polytope:
    """Convex hull of ``vertices`` (k, m)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1:
            raise InvalidParameterError("vertices must be a non-empty (k, m) array")
        if not np.all(np.isfinite(v)):
            raise InvalidParameterError("vertices must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def is_simplex(self) -> bool:
        return self.n_vertices == self.ambient_dim + 1

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    @property
    def volume(self) -> float:
        if self.is_simplex:
            return simplex_volume(self)
        try:
            return float(ConvexHull(self.vertices).volume)
        except (QhullError, ValueError):
            return 0.0

    def to_dict(self) -> dict:
        return {"vertices": self.vertices.tolist(), "ambient_dim": self.ambient_dim}

    @classmethod
    def from_dict(cls, data) -> "Polytope":
        p = cls(np.asarray(data["vertices"], dtype=float))
        if "ambient_dim" in data and int(data["ambient_dim"]) != p.ambient_dim:
            raise InvalidParameterError("ambient_dim does not match vertex coordinates")
        return p


def _vertices(poly):
    return poly.vertices if isinstance(poly, Polytope) else np.atleast_2d(np.asarray(poly, dtype=float))


def _is_degenerate_simplex(v):
    edges = v[1:] - v[0]
    s = np.linalg.svd(edges, compute_uv=False)
    return s.size == 0 or s[0] == 0 or s[-1] <= DEGENERATE_RTOL * s[0]


def _affine_system(v):
    # columns are [v_j; 1], so T @ lam = [x; 1]
    return np.vstack([v.T, np.ones(v.shape[0])])


def simplex_volume(poly) -> float:
    """Volume ``|det(v_1 - v_0, ..., v_m - v_0)| / m!`` of a simplex."""
    v = _vertices(poly)
    m = v.shape[1]
    if v.shape[0] != m + 1:
        raise InvalidParameterError(f"simplex in R^{m} needs {m + 1} vertices, got {v.shape[0]}")
    return float(abs(np.linalg.det(v[1:] - v[0])) / math.factorial(m))


def barycentric(poly, point) -> np.ndarray:
    """Affine coordinates of ``point`` (m,) or points (n, m) in a simplex.

    The coordinates sum to one and reproduce the point; they are negative
    for points outside the simplex.
    """
    v = _vertices(poly)
    if v.shape[0] != v.shape[1] + 1:
        raise InvalidParameterError("barycentric coordinates need a simplex")
    if _is_degenerate_simplex(v):
        raise DegenerateInputError("simplex is degenerate")
    x = np.asarray(point, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    rhs = np.vstack([x.T, np.ones(x.shape[0])])
    lam = np.linalg.solve(_affine_system(v), rhs).T
    return lam[0] if single else lam


def facet_halfspaces(poly):
    """Outward unit normals and offsets: inside iff ``normals @ x <= offsets``."""
    v = _vertices(poly)
    k, m = v.shape
    if k == m + 1:
        if _is_degenerate_simplex(v):
            raise DegenerateInputError("simplex is degenerate")
        tinv = np.linalg.inv(_affine_system(v))
        g, c = tinv[:, :m], tinv[:, m]
        norm = np.linalg.norm(g, axis=1)
        return -g / norm[:, None], c / norm
    if m == 1:
        return np.array([[1.0], [-1.0]]), np.array([v.max(), -v.min()])
    try:
        eq = ConvexHull(v).equations
    except (QhullError, ValueError) as exc:
        raise DegenerateInputError("polytope is not full-dimensional") from exc
    return eq[:, :m], -eq[:, m]


def contains(poly, point, tol=CONTAIN_TOL):
    """Whether each point is inside or within ``tol`` of every facet."""
    normals, offsets = facet_halfspaces(poly)
    x = np.asarray(point, dtype=float)
    single = x.ndim == 1
    dist = np.atleast_2d(x) @ normals.T - offsets
    inside = dist.max(axis=1) <= tol
    return bool(inside[0]) if single else inside


def shrink_factor(n, a) -> float:
    """``clip(1 - a n^{-1/2} log^{1/2} n, 0, 1)`` with the natural log."""
    if n < 2:
        raise InvalidParameterError("n must be at least 2")
    if a < 0:
        raise InvalidParameterError("shrink constant a must be non-negative")
    eta = 1.0 - a * math.sqrt(math.log(n)) / math.sqrt(n)
    return min(max(eta, 0.0), 1.0)


def shrink(poly, center, eta) -> Polytope:
    """Contract every vertex toward ``center`` by the factor ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidParameterError(f"eta must lie in [0, 1], got {eta}")
    v = _vertices(poly)
    center = np.asarray(center, dtype=float)
    return Polytope(center + eta * (v - center))


def symdiff_volume_mc(p1, p2, samples, rng=None, chunk=200_000):
    """Monte Carlo volume of the symmetric difference of two polytopes.

    Samples uniformly from the joint bounding box. Returns
    ``(estimate, standard_error)``.
    """
    if samples < 1:
        raise InvalidParameterError("samples must be positive")
    v1, v2 = _vertices(p1), _vertices(p2)
    if v1.shape[1] != v2.shape[1]:
        raise InvalidParameterError("ambient dimensions differ")
    rng = as_rng(rng)
    allv = np.vstack([v1, v2])
    lo, hi = allv.min(axis=0), allv.max(axis=0)
    box = float(np.prod(hi - lo))
    h1, h2 = facet_halfspaces(v1), facet_halfspaces(v2)
    hits = 0
    left = samples
    while left > 0:
        size = min(chunk, left)
        x = lo + (hi - lo) * rng.random((size, v1.shape[1]))
        in1 = (x @ h1[0].T - h1[1]).max(axis=1) <= 0
        in2 = (x @ h2[0].T - h2[1]).max(axis=1) <= 0
        hits += int(np.count_nonzero(in1 ^ in2))
        left -= size
    frac = hits / samples
    return box * frac, box * math.sqrt(frac * (1 - frac) / samples)


# ----------------------------------------------------------------------------
# minimum-volume enclosing polytope


class _SimplexState:
    """k = m + 1 half-spaces; vertex i is where all facets but i meet."""

    def __init__(self, m):
        self.m = m
        self._drop = [np.delete(np.arange(m + 1), i) for i in range(m + 1)]

    def vertices(self, normals, offsets):
        k = self.m + 1
        mats = np.stack([normals[idx] for idx in self._drop])
        rhs = np.stack([offsets[idx] for idx in self._drop])
        try:
            verts = np.linalg.solve(mats, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            return None
        # each vertex must sit strictly inside its opposite facet, otherwise
        # the half-space intersection is unbounded or inverted
        inner = np.einsum("ij,ij->i", normals, verts) - offsets
        if not np.all(inner < 0) or not np.all(np.isfinite(verts)):
            return None
        return verts if verts.shape[0] == k else None

    @staticmethod
    def volume(verts):
        return simplex_volume(verts)


class _PolygonState:
    """k lines in the plane, cyclically ordered by normal angle."""

    def __init__(self, k):
        self.k = k

    def vertices(self, normals, offsets):
        k = self.k
        ang = np.arctan2(normals[:, 1], normals[:, 0])
        gaps = np.mod(np.roll(ang, -1) - ang, 2 * np.pi)
        if not np.all((gaps > 1e-12) & (gaps < np.pi - 1e-12)):
            return None
        if abs(gaps.sum() - 2 * np.pi) > 1e-9:
            return None
        nxt = np.roll(np.arange(k), -1)
        mats = np.stack([normals, normals[nxt]], axis=1)
        rhs = np.stack([offsets, offsets[nxt]], axis=1)
        try:
            verts = np.linalg.solve(mats, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            return None
        # vertex i joins line i and i+1; every edge must keep positive length
        tangent = np.column_stack([-normals[:, 1], normals[:, 0]])
        seg = verts - np.roll(verts, 1, axis=0)
        if not np.all(np.einsum("ij,ij->i", tangent, seg) > 0):
            return None
        return verts

    @staticmethod
    def volume(verts):
        x, y = verts[:, 0], verts[:, 1]
        return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _hull_points(points):
    m = points.shape[1]
    if m == 1:
        return points[[points[:, 0].argmin(), points[:, 0].argmax()]]
    try:
        return points[ConvexHull(points).vertices]
    except (QhullError, ValueError):
        return points


def _greedy_simplex(pts):
    """Indices of a large inscribed simplex grown from a far-apart pair."""
    h, m = pts.shape
    if h <= 3000:
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        i, j = np.unravel_index(np.argmax(d2), d2.shape)
    else:
        i = int(np.argmax(((pts - pts.mean(axis=0)) ** 2).sum(axis=1)))
        j = int(np.argmax(((pts - pts[i]) ** 2).sum(axis=1)))
    chosen = [int(i), int(j)]
    while len(chosen) < m + 1:
        base = pts[chosen[0]]
        q, _ = np.linalg.qr((pts[chosen[1:]] - base).T)
        rel = pts - base
        resid = rel - (rel @ q) @ q.T
        dist = (resid**2).sum(axis=1)
        dist[chosen] = -1.0
        chosen.append(int(np.argmax(dist)))
    return chosen


def _init_simplex(pts):
    """Greedy inscribed simplex dilated about its centroid to enclose ``pts``."""
    k = pts.shape[1] + 1
    verts = pts[_greedy_simplex(pts)]
    if _is_degenerate_simplex(verts):
        raise DegenerateInputError("point cloud is not full-dimensional")
    lam = barycentric(verts, pts)
    t = max(1.0, 1.0 - k * lam.min()) * (1.0 + 1e-9)
    c = verts.mean(axis=0)
    return facet_halfspaces(c + t * (verts - c))


def _init_polygon(pts, k):
    """Enclosing k-gon from the hull polygon by greedy edge removal."""
    hull = ConvexHull(pts)
    ring = pts[hull.vertices]  # counter-clockwise in 2-D
    if ring.shape[0] < k:
        raise DegenerateInputError(f"hull has {ring.shape[0]} vertices, fewer than k={k}")
    edge = np.roll(ring, -1, axis=0) - ring
    normals = np.column_stack([edge[:, 1], -edge[:, 0]])
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    offsets = np.einsum("ij,ij->i", normals, ring)
    poly = _PolygonState(len(offsets))
    while len(offsets) > k:
        best, best_area = None, np.inf
        cur = poly.volume(poly.vertices(normals, offsets))
        for i in range(len(offsets)):
            nrm = np.delete(normals, i, axis=0)
            off = np.delete(offsets, i)
            verts = _PolygonState(len(off)).vertices(nrm, off)
            if verts is None:
                continue
            area = _PolygonState.volume(verts) - cur
            if area < best_area:
                best, best_area = i, area
        if best is None:
            raise DegenerateInputError("cannot reduce hull polygon to k edges")
        normals = np.delete(normals, best, axis=0)
        offsets = np.delete(offsets, best)
        poly = _PolygonState(len(offsets))
    return normals, offsets


def _complement_frame(a):
    """Orthonormal basis of the orthogonal complement of unit vector ``a``."""
    m = a.shape[0]
    q, _ = np.linalg.qr(np.column_stack([a, np.eye(m)]))
    return q[:, 1:m].T.copy()


def fit_mvecp(points, k, max_passes=500, rtol=1e-6, init_step=0.1, min_step=1e-9,
              return_info=False):
    """Approximate minimum-volume enclosing convex k-polytope.

    Facet-descent local search: starting from an enclosing simplex, every
    facet is pushed inward until it touches the cloud, then rotated by
    coordinate descent on its normal (step halving from ``init_step``
    radians) accepting only volume-reducing moves. Passes stop when the
    relative volume gain of a full pass drops below ``rtol``.

    Parameters
    ----------
    points : array_like, shape (n, m)
    k : int
        Vertex count; ``k = m + 1`` for a simplex. ``k > m + 1`` is
        supported in the plane (m = 2) only.

    Returns
    -------
    Polytope, or ``(Polytope, info)`` when ``return_info`` is set; ``info``
    reports passes, evaluations and the initial and final volumes.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n, m = pts.shape
    if m < 1:
        raise InvalidParameterError("points must have at least one coordinate")
    if k < m + 1:
        raise InvalidParameterError(f"k={k} vertices cannot enclose a cloud in R^{m}")
    if n < k:
        raise InvalidParameterError(f"need at least k={k} points, got {n}")
    if k > m + 1 and m != 2:
        raise InvalidParameterError("non-simplex polytopes are only supported for m = 2")
    if not np.all(np.isfinite(pts)):
        raise InvalidParameterError("points must be finite")
    shift = pts.mean(axis=0)
    pts = pts - shift
    cov_eig = np.linalg.eigvalsh(np.atleast_2d(pts.T @ pts / n))
    if cov_eig.max() <= 0 or cov_eig.min() <= DEGENERATE_RTOL * cov_eig.max():
        raise DegenerateInputError("point cloud does not span its ambient space")

    hp = _hull_points(pts)
    if k == m + 1:
        state = _SimplexState(m)
        normals, offsets = _init_simplex(hp)
    else:
        state = _PolygonState(k)
        normals, offsets = _init_polygon(hp, k)
    init_volume = state.volume(state.vertices(normals, offsets))
    offsets = (hp @ normals.T).max(axis=0)
    verts = state.vertices(normals, offsets)
    vol = state.volume(verts)
    evals = 0
    passes = 0
    for passes in range(1, max_passes + 1):
        start = vol
        for j in range(k):
            # coordinate directions in the tangent space of the normal, plus
            # their pairwise diagonals; the volume is only piecewise smooth,
            # so axis moves alone can stall at a kink
            base = _complement_frame(normals[j])
            dirs = list(base)
            for r in range(m - 1):
                for s_ in range(r + 1, m - 1):
                    dirs.append((base[r] + base[s_]) / math.sqrt(2.0))
                    dirs.append((base[r] - base[s_]) / math.sqrt(2.0))
            for d in dirs:
                step = init_step
                while step >= min_step:
                    moved = False
                    for sgn in (1.0, -1.0):
                        th = sgn * step
                        a = normals[j]
                        e = d - (d @ a) * a
                        e /= np.linalg.norm(e)
                        a_new = math.cos(th) * a + math.sin(th) * e
                        a_new /= np.linalg.norm(a_new)
                        cand_n = normals.copy()
                        cand_o = offsets.copy()
                        cand_n[j] = a_new
                        cand_o[j] = (hp @ a_new).max()
                        cv = state.vertices(cand_n, cand_o)
                        evals += 1
                        if cv is None:
                            continue
                        cvol = state.volume(cv)
                        if cvol < vol * (1.0 - 1e-14):
                            normals, offsets, verts, vol = cand_n, cand_o, cv, cvol
                            moved = True
                            break
                    if moved:
                        step = min(2 * step, init_step)
                    else:
                        step /= 2
        if start - vol <= rtol * start:
            break

    # final tightening against the full cloud guarantees enclosure
    offsets = (pts @ normals.T).max(axis=0)
    verts = state.vertices(normals, offsets)
    if verts is None:  # pragma: no cover - tightening never inverts a valid state
        raise DegenerateInputError("polytope fit collapsed")
    poly = Polytope(verts + shift)
    if return_info:
        info = {
            "passes": passes,
            "evaluations": evals,
            "initial_volume": float(init_volume),
            "volume": float(state.volume(verts)),
        }
        return poly, info
    return poly


def fit_interval(points) -> Polytope:
    """Two-vertex hull of a one-dimensional cloud."""
    x = np.asarray(points, dtype=float).reshape(-1)
    return Polytope(np.array([[x.min()], [x.max()]]))

"""Shared generators for tests (not fixtures, so hypothesis tests can use them)."""
import math

import numpy as np

from mmspec.polytope import facet_halfspaces, simplex_volume


def random_psd_block_matrix(k, rng, rank=None):
    """Random B = V V^T with entries in [0, 1]; rows of V in the unit ball's positive orthant."""
    rank = k if rank is None else rank
    v = rng.random((k, rank))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v *= rng.uniform(0.3, 1.0, size=(k, 1))
    b = v @ v.T
    return (b + b.T) / 2


def dirichlet_cov(alpha):
    alpha = np.asarray(alpha, dtype=float)
    a0 = alpha.sum()
    m = alpha / a0
    return (np.diag(m) - np.outer(m, m)) / (a0 + 1)


def local_minimality_gap(points, poly, angles=(1e-2, 1e-3, 1e-4)):
    """Largest relative volume drop from moving one facet of a fitted simplex.

    Tries inward translation and small rotations of each facet, each
    followed by re-tightening against the cloud.
    """
    normals, offsets = facet_halfspaces(poly)
    m = poly.ambient_dim
    vol = poly.volume
    best = 0.0

    def volume_of(nrm, off):
        verts = []
        for i in range(m + 1):
            idx = [j for j in range(m + 1) if j != i]
            verts.append(np.linalg.solve(nrm[idx], off[idx]))
        verts = np.array(verts)
        if not np.all(np.einsum("ij,ij->i", nrm, verts) < off):
            return None
        return simplex_volume(verts)

    for j in range(m + 1):
        # inward translation up to the nearest point
        off = offsets.copy()
        off[j] = (points @ normals[j]).max()
        v = volume_of(normals, off)
        if v is not None:
            best = max(best, (vol - v) / vol)
        basis = np.linalg.svd(np.eye(m) - np.outer(normals[j], normals[j]))[0][:, : m - 1]
        for r in range(m - 1):
            for th in angles:
                for sgn in (1, -1):
                    a = math.cos(sgn * th) * normals[j] + math.sin(sgn * th) * basis[:, r]
                    nrm = normals.copy()
                    off = offsets.copy()
                    nrm[j] = a
                    off[j] = (points @ a).max()
                    v = volume_of(nrm, off)
                    if v is not None:
                        best = max(best, (vol - v) / vol)
    return best

"""Numpy implementations of the compiled kernels in ``_kernels.pyx``.

Each function mirrors its compiled twin operation for operation so that both
backends produce bit-identical graphs from the same uniform draws.
"""
import numpy as np


def _pair_indices(n, i0, i1):
    rows = np.arange(i0, i1)
    counts = n - 1 - rows
    ii = np.repeat(rows, counts)
    starts = np.cumsum(counts) - counts
    jj = np.arange(counts.sum()) - np.repeat(starts, counts) + ii + 1
    return ii, jj


def _as_edges(ii, jj, keep):
    return np.column_stack([ii[keep], jj[keep]]).astype(np.int32)


def mmsbm_block(cum, b, i0, i1, u):
    n, k = cum.shape
    ii, jj = _pair_indices(n, i0, i1)
    head = cum[:, : k - 1]
    zi = (head[ii] <= u[0][:, None]).sum(axis=1)
    zj = (head[jj] <= u[1][:, None]).sum(axis=1)
    return _as_edges(ii, jj, u[2] < b[zi, zj])


def rdpg_block(x, i0, i1, u):
    n, d = x.shape
    ii, jj = _pair_indices(n, i0, i1)
    prob = x[ii, 0] * x[jj, 0]
    for c in range(1, d):
        prob = prob + x[ii, c] * x[jj, c]
    prob = np.clip(prob, 0.0, 1.0)
    return _as_edges(ii, jj, u < prob)


def project_simplex_rows(v):
    v = np.asarray(v, dtype=np.float64)
    n, k = v.shape
    s = -np.sort(-v, axis=1)
    css = np.cumsum(s, axis=1)
    t = (css - 1.0) / np.arange(1, k + 1)
    positive = s - t > 0.0
    # last index where the condition holds; index 0 always qualifies
    rho = k - 1 - np.argmax(positive[:, ::-1], axis=1)
    theta = t[np.arange(n), rho]
    return np.maximum(v - theta[:, None], 0.0)

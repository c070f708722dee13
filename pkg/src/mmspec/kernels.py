"""Backend selection for the hot loops.

The compiled extension is used when it imports cleanly; otherwise the numpy
fallback is used. Set ``MMSPEC_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np

from . import _fallback

BACKEND = "python"
_impl = _fallback

if not os.environ.get("MMSPEC_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def mmsbm_block(cum, b, i0, i1, u):
    return _impl.mmsbm_block(_c(cum), _c(b), int(i0), int(i1), _c(u))


def rdpg_block(x, i0, i1, u):
    return _impl.rdpg_block(_c(x), int(i0), int(i1), _c(u))


def project_simplex_rows(v):
    return _impl.project_simplex_rows(_c(v))


__all__ = ["BACKEND", "mmsbm_block", "rdpg_block", "project_simplex_rows"]

"""Text formats: edge lists, CSV matrices, JSON polytopes and results.

Edge list::

    # n=<n>
    1 2
    1 5
    ...

One pair per line, 1-indexed, ``i < j``, sorted lexicographically.
Floating point output uses 17 significant digits.
"""
from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .errors import ParseError
from .model import GraphSample
from .polytope import Polytope

FLOAT_FMT = "%.17g"
_HEADER = re.compile(r"^#\s*n\s*=\s*(\d+)\s*$")


def format_float(x) -> str:
    return FLOAT_FMT % x


def write_edge_list(path, g: GraphSample):
    path = Path(path)
    e = np.asarray(g.edges, dtype=np.int64) + 1
    with path.open("w") as fh:
        fh.write(f"# n={g.n}\n")
        step = 1 << 20
        for s in range(0, e.shape[0], step):
            blk = e[s : s + step]
            if blk.size:
                fh.write("\n".join(f"{i} {j}" for i, j in blk.tolist()))
                fh.write("\n")


def _parse_slow(lines, path, n, first):
    pairs = []
    for lineno, line in enumerate(lines, start=first):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if len(parts) != 2:
            raise ParseError(f"expected two node ids, got {text!r}", path, lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"node ids must be integers, got {text!r}", path, lineno) from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"node id out of range 1..{n}: {text!r}", path, lineno)
        if i == j:
            raise ParseError(f"self-loop {i} {j} not allowed", path, lineno)
        pairs.append((i, j))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def read_edge_list(path) -> GraphSample:
    """Parse an edge list; errors name the offending line."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ParseError("empty file, expected '# n=<n>' header", path, 1)
    m = _HEADER.match(lines[0].strip())
    if not m:
        raise ParseError(f"expected '# n=<n>' header, got {lines[0]!r}", path, 1)
    n = int(m.group(1))
    body = lines[1:]
    try:
        flat = np.array(" ".join(body).split(), dtype=np.int64)
        ok = flat.size % 2 == 0 and not any(ln.lstrip().startswith("#") for ln in body)
        if ok:
            pairs = flat.reshape(-1, 2)
            ok = bool(
                np.all(pairs >= 1)
                and np.all(pairs <= n)
                and np.all(pairs[:, 0] != pairs[:, 1])
                and all(len(ln.split()) in (0, 2) for ln in body)
            )
    except ValueError:
        ok = False
    if not ok:
        pairs = _parse_slow(body, path, n, first=2)
    pairs = np.sort(pairs, axis=1) - 1
    pairs = np.unique(pairs, axis=0) if pairs.size else pairs
    dtype = np.int32 if n < 2**31 else np.int64
    return GraphSample(n, pairs.astype(dtype))


def write_matrix_csv(path, a):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    np.savetxt(path, a, delimiter=",", fmt=FLOAT_FMT)


def read_matrix_csv(path) -> np.ndarray:
    try:
        return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))
    except ValueError as exc:
        raise ParseError(str(exc), Path(path)) from exc


def write_polytope_json(path, poly: Polytope):
    Path(path).write_text(json.dumps(poly.to_dict(), indent=2) + "\n")


def read_polytope_json(path) -> Polytope:
    return Polytope.from_dict(json.loads(Path(path).read_text()))


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, allow_nan=True) + "\n")

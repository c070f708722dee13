"""Compare the compiled kernels with the numpy fallback.

Each kernel is run on identical inputs under both backends; outputs are
checked for exact equality and the best of ``--repeat`` wall times is
reported. A final row times the full MMSBM sampler end to end.

    python benchmarks/bench_kernels.py --n 4000 --repeat 5
"""
import argparse
import time

import numpy as np

from mmspec import _fallback, kernels
from mmspec.model import DEFAULT_B, ModelSpec, sample_mmsbm

try:
    from mmspec import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, repeat):
    out, best = None, np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3000, help="nodes for the sampling kernels")
    ap.add_argument("--rows", type=int, default=200_000, help="rows for the simplex projection")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _kernels is None:
        raise SystemExit("compiled extension not available; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(args.seed)
    n = args.n
    spec = ModelSpec(DEFAULT_B, [1.0, 1.0, 1.0])
    pi = rng.dirichlet(spec.alpha, n)
    cum = np.ascontiguousarray(np.cumsum(pi, axis=1))
    npairs = n * (n - 1) // 2
    u = rng.random((3, npairs))
    x = np.ascontiguousarray(rng.dirichlet(spec.alpha, n) @ np.sqrt(np.diag([0.5, 0.3, 0.1])))
    v = rng.normal(size=(args.rows, 5))

    cases = [
        ("mmsbm_block", lambda m: m.mmsbm_block(cum, spec.B, 0, n, u)),
        ("rdpg_block", lambda m: m.rdpg_block(x, 0, n, u[0].copy())),
        ("project_simplex_rows", lambda m: m.project_simplex_rows(v)),
    ]
    print(f"{'kernel':<24}{'cython [s]':>12}{'numpy [s]':>12}{'speedup':>10}  equal")
    for name, call in cases:
        tc, oc = best_of(lambda: call(_kernels), args.repeat)
        tp, op = best_of(lambda: call(_fallback), args.repeat)
        print(f"{name:<24}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}  {same(oc, op)}")

    times = {}
    graphs = {}
    for label, impl in (("cython", _kernels), ("numpy", _fallback)):
        kernels._impl = impl
        times[label], graphs[label] = best_of(
            lambda: sample_mmsbm(spec, n, np.random.default_rng(args.seed)), args.repeat
        )
    eq = np.array_equal(graphs["cython"].edges, graphs["numpy"].edges)
    print(f"{'sample_mmsbm (end to end)':<24}{times['cython']:>12.4f}{times['numpy']:>12.4f}"
          f"{times['numpy'] / times['cython']:>10.1f}  {eq}")


if __name__ == "__main__":
    main()

"""Timing comparison of the compiled and numpy TV kernels.

The package picks the compiled extension at import when it is built and
silently falls back to the vectorized numpy twin otherwise; this script
times both implementations side by side, plus the epigraph projection
end-to-end under whichever backend the package selected.

    python3 benchmarks/bench_tv.py --sizes 32,64,128,256 --repeat 100
"""

import argparse
import time

import numpy as np

from pocsdeconv import _tvkernels_np
from pocsdeconv.tv import KERNEL_BACKEND, project_epigraph

try:
    from pocsdeconv import _tvkernels
except ImportError:
    _tvkernels = None


def best_of(fn, arg, repeat):
    fn(arg)  # warm up
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(arg)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="32,64,128,256,512")
    parser.add_argument("--repeat", type=int, default=100)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(0)

    print(f"package-selected backend: {KERNEL_BACKEND}")
    print(f"{'size':>6} {'numpy us':>12} {'compiled us':>12} {'speedup':>8}")
    for n in sizes:
        x = rng.random((n, n))
        t_np = best_of(_tvkernels_np.tv_and_subgradient, x, args.repeat)
        if _tvkernels is None:
            print(f"{n:>6} {t_np * 1e6:>12.1f} {'-':>12} {'-':>8}")
            continue
        t_c = best_of(_tvkernels.tv_and_subgradient, x, args.repeat)
        a = _tvkernels_np.tv_and_subgradient(x)
        b = _tvkernels.tv_and_subgradient(x)
        assert abs(a[0] - b[0]) <= 1e-9 * (1 + abs(a[0])) and np.array_equal(a[1], b[1])
        print(f"{n:>6} {t_np * 1e6:>12.1f} {t_c * 1e6:>12.1f} {t_np / t_c:>8.2f}")

    print()
    print(f"project_epigraph end-to-end ({KERNEL_BACKEND} backend)")
    print(f"{'size':>6} {'cuts=12 ms':>12} {'full ms':>10}")
    for n in (16, 32, 64):
        v = rng.random((n, n))
        t_trunc = best_of(lambda a: project_epigraph(a, max_iters=12), v, max(5, args.repeat // 10))
        t_full = best_of(project_epigraph, v, max(5, args.repeat // 10))
        print(f"{n:>6} {t_trunc * 1e3:>12.2f} {t_full * 1e3:>10.2f}")


if __name__ == "__main__":
    main()

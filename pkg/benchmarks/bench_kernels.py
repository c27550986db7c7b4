"""Time the numba and numpy paths of each hot kernel and check they agree.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The first numba call compiles (or loads the cache); it is timed separately
and excluded from the per-call figures.  With numba missing or disabled via
``SHELORA_DISABLE_NUMBA`` only the numpy column is filled.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from shelora import kernels


def _cases(rng):
    a = rng.normal(size=(64, 256))
    x = rng.normal(size=(2048, 1))
    xy = rng.normal(size=(2048, 2))
    g = rng.normal(size=(4, 1024))
    perms = rng.permuted(np.broadcast_to(np.arange(1024), (2000, 1024)), axis=1)
    return {
        "jacobi 256x64": lambda nb: kernels.jacobi_orthogonalize(a.T.copy(), use_numba=nb)[0],
        "kde 1-D 2048": lambda nb: kernels.kde_log_density(x, x, 0.2, use_numba=nb),
        "kde 2-D 2048": lambda nb: kernels.kde_log_density(xy, xy, 0.2, use_numba=nb),
        "perm stat 4x1024 x2000": lambda nb: kernels.permuted_inner_products(g, g, perms, use_numba=nb),
    }


def _best(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"numba available: {kernels.HAVE_NUMBA}")
    print(f"{'kernel':<26}{'numpy ms':>10}{'numba ms':>10}{'first ms':>12}{'speedup':>9}{'max diff':>11}")
    for name, fn in _cases(rng).items():
        t_np, ref = _best(lambda: fn(False), args.repeat)
        if kernels.HAVE_NUMBA:
            t0 = time.perf_counter()
            fn(True)
            compile_ms = 1e3 * (time.perf_counter() - t0)
            t_nb, got = _best(lambda: fn(True), args.repeat)
            diff = float(np.max(np.abs(np.asarray(got) - np.asarray(ref))))
            print(f"{name:<26}{1e3 * t_np:>10.2f}{1e3 * t_nb:>10.2f}{compile_ms:>12.0f}{t_np / t_nb:>8.1f}x{diff:>11.1e}")
        else:
            print(f"{name:<26}{1e3 * t_np:>10.2f}{'-':>10}{'-':>12}{'-':>9}{'-':>11}")


if __name__ == "__main__":
    main()

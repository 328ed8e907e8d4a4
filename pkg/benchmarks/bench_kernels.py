"""Time the numba kernels against their pure-numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat N]

Workloads are sized like one experiment step: Si/Ci over a long sweep,
16x16 loaded-coupling inversions, a kNN batch at L=400, M=15, and the
cyclic-shift Pearson scan over a 400 x 50 map. Each row reports the best
of ``--repeat`` runs after a warm-up call (which absorbs JIT compilation).
"""
import argparse
import time

import numpy as np

from risloc import kernels
from risloc._accel import NUMBA_AVAILABLE


def best_time(fn, repeat):
    fn()  # warm-up / compile
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(rng):
    x = np.logspace(-4, 4, 200_000)

    mats = rng.normal(size=(500, 16, 16)) + 1j * rng.normal(size=(500, 16, 16))
    mats = mats + mats.transpose(0, 2, 1) + 50 * np.eye(16)

    db = rng.normal(-60, 8, (400, 15))
    pts = np.column_stack([rng.uniform(0, 20, (400, 2)), np.full(400, 1.5)])
    queries = db[rng.integers(0, 400, 360)] + rng.normal(0, 3, (360, 15))

    pmap = rng.normal(-60, 8, (400, 50))
    q = rng.normal(-60, 8, 50)

    def lu(impl):
        return lambda: [impl(m, 1e-12) for m in mats]

    return [
        ("sici, 2e5 points", lambda: kernels.sici_numba(x), lambda: kernels.sici_numpy(x)),
        ("lu_inverse, 500 x 16x16", lu(kernels.lu_inverse_numba), lu(kernels.lu_inverse_numpy)),
        ("knn_batch, 360 q, L=400, M=15",
         lambda: kernels.knn_batch_numba(queries, db, pts, 5, 1e-9),
         lambda: kernels.knn_batch_numpy(queries, db, pts, 5, 1e-9)),
        ("shift_pearson, 400 x 50",
         lambda: kernels.shift_pearson_numba(q, pmap),
         lambda: kernels.shift_pearson_numpy(q, pmap)),
    ]


def check_parity(name, a, b):
    ra, rb = a(), b()
    if isinstance(ra, list):  # lu: list of (inv, flag)
        ra = np.array([r[0] for r in ra])
        rb = np.array([r[0] for r in rb])
    elif isinstance(ra, tuple):
        ra, rb = ra[0], rb[0]
    if not np.allclose(ra, rb, rtol=1e-10, atol=1e-12):
        raise SystemExit(f"backend mismatch in {name}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare (pip install numba)")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':32s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speed-up':>9s}")
    for name, fast, slow in workloads(rng):
        check_parity(name, fast, slow)
        tf = best_time(fast, args.repeat)
        ts = best_time(slow, args.repeat)
        print(f"{name:32s} {tf * 1e3:11.2f} {ts * 1e3:11.2f} {ts / tf:8.1f}x")


if __name__ == "__main__":
    main()

"""Head-to-head timing of the jit kernels against their numpy twins.

Both implementations are imported directly, so the LUCEWALKS_NUMBA flag is
irrelevant here; if numba is not installed the script still times the numpy
path and says so.

Run:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --rows 200000 --repeats 7
"""

import argparse
import statistics
import time

import numpy as np

from lucewalks.kernels import (
    apply_boolean_reverse_numba,
    apply_boolean_reverse_numpy,
    apply_braid_reverse_numba,
    apply_braid_reverse_numpy,
    weighted_order_many_numba,
    weighted_order_many_numpy,
)

HAVE_NUMBA = weighted_order_many_numba is not None


def make_workloads(rows, n, steps, seed):
    gen = np.random.default_rng(seed)
    weights = gen.uniform(0.5, 2.0, size=n)
    uniforms = gen.random((rows, n))

    # one-coordinate sign faces, as in the hypercube walk
    bool_faces = np.zeros((2 * n, n), dtype=np.int8)
    for i in range(n):
        bool_faces[2 * i, i] = 1
        bool_faces[2 * i + 1, i] = -1
    bool_orders = gen.integers(0, 2 * n, size=(rows, steps), dtype=np.int64)
    bool_ref = np.ones(n, dtype=np.int8)

    # move-to-front faces: card i alone in the leading block
    braid_faces = np.ones((n, n), dtype=np.int64)
    braid_faces[np.arange(n), np.arange(n)] = 0
    braid_orders = gen.integers(0, n, size=(rows, steps), dtype=np.int64)
    braid_ref = np.arange(n, dtype=np.int64)

    return {
        "weighted_order": (weights, uniforms),
        "boolean_project": (bool_faces, bool_orders, bool_ref),
        "braid_project": (braid_faces, braid_orders, braid_ref),
    }


def time_fn(fn, args, repeats):
    fn(*args)  # warm-up, excluded (triggers jit compilation on first call)
    durations = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        durations.append(time.perf_counter() - t0)
    mean = statistics.mean(durations)
    std = statistics.pstdev(durations) if len(durations) > 1 else 0.0
    return mean, std, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=50_000, help="sample rows per call")
    ap.add_argument("--n", type=int, default=16, help="items / dimensions")
    ap.add_argument("--steps", type=int, default=64, help="walk steps per row")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    pairs = {
        "weighted_order": (weighted_order_many_numpy, weighted_order_many_numba),
        "boolean_project": (apply_boolean_reverse_numpy, apply_boolean_reverse_numba),
        "braid_project": (apply_braid_reverse_numpy, apply_braid_reverse_numba),
    }
    workloads = make_workloads(args.rows, args.n, args.steps, args.seed)

    if not HAVE_NUMBA:
        print("numba not installed: timing the numpy path only")

    print(f"rows={args.rows} n={args.n} steps={args.steps} repeats={args.repeats}")
    header = f"{'kernel':<18}{'numpy ms':>14}{'numba ms':>14}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, (np_fn, nb_fn) in pairs.items():
        work = workloads[name]
        np_mean, np_std, np_out = time_fn(np_fn, work, args.repeats)
        if HAVE_NUMBA:
            nb_mean, nb_std, nb_out = time_fn(nb_fn, work, args.repeats)
            if not np.array_equal(np_out, nb_out):
                raise AssertionError(f"{name}: backends disagree")
            print(f"{name:<18}{np_mean * 1e3:>9.2f} ±{np_std * 1e3:>4.2f}"
                  f"{nb_mean * 1e3:>9.2f} ±{nb_std * 1e3:>4.2f}"
                  f"{np_mean / nb_mean:>9.1f}x")
        else:
            print(f"{name:<18}{np_mean * 1e3:>9.2f} ±{np_std * 1e3:>4.2f}"
                  f"{'-':>14}{'-':>10}")


if __name__ == "__main__":
    main()

"""Numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel is compiled (or cached) once before timing; the reported
figure is the best of ``--repeat`` runs. Results are checked for agreement
so a fast but wrong kernel cannot go unnoticed.
"""

import argparse
import json
import platform
import sys
import time

import numpy as np

from fractalvdc import kernels as K
from fractalvdc._jit import HAVE_NUMBA
from fractalvdc.dynamics import PerturbedMap

ARGS = PerturbedMap(0.01).args


def cases(rng):
    pts = rng.random(1 << 20)
    bits = rng.integers(0, 1 << 24, 1 << 18)
    starts = rng.random(1 << 18)
    vals = np.sort(1 + 0.04 * rng.random(1 << 18))
    a, b = 1 + 0.05 * rng.random(1 << 10), 1 + 0.05 * rng.random(1 << 12)
    rho = 0.5 + 0.001 * rng.random((18, 1 << 18))
    return {
        "branch_tree n=20": ("branch_tree", (20, 0.3, *ARGS)),
        "exp_sum 2^20 points": ("exp_sum", (12345.6, pts)),
        "branch_many 2^18 x 24 letters": ("branch_many", (bits, 24, starts, *ARGS)),
        "itinerary_value 2^18 x 30": ("itinerary_value", (starts, 30, *ARGS)),
        "count_close_pairs 2^18": ("count_close_pairs", (vals, 1e-3)),
        "product_phase_sum 2^22": ("product_phase_sum", (1e4, a, b)),
        "signed_sums n=18": ("signed_sums", (rho, 18)),
    }


def best_of(fn, args, repeat):
    out = fn(*args)
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best, out


def agree(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return all(np.allclose(u, v, rtol=1e-9, atol=1e-9) for u, v in zip(a, b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", default=None)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    rng = np.random.Generator(np.random.Philox(key=0))
    rows = []
    print(f"{'kernel':32s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speed-up':>9s}  agree")
    for label, (name, kargs) in cases(rng).items():
        t_np, r_np = best_of(getattr(K.NUMPY, name), kargs, args.repeat)
        t_nb, r_nb = best_of(getattr(K.NUMBA, name), kargs, args.repeat)
        ok = agree(r_np, r_nb)
        rows.append({"kernel": label, "numpy_s": t_np, "numba_s": t_nb, "speedup": t_np / t_nb, "agree": ok})
        print(f"{label:32s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}x  {ok}")
    if args.json:
        meta = {"python": sys.version.split()[0], "machine": platform.machine(), "numpy": np.__version__}
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"meta": meta, "results": rows}, fh, indent=2)
    return 0 if all(r["agree"] for r in rows) else 2


if __name__ == "__main__":
    sys.exit(main())

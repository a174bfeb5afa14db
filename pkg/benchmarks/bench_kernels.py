"""Compare the numba and numpy kernel paths (and scipy expm for reference).

    python benchmarks/bench_kernels.py [--repeat 5]

Prints best-of-N wall times.  End-to-end numbers are included because dense
LAPACK calls, not these kernels, dominate most workloads.
"""
import argparse
import time

import numpy as np
import scipy.linalg as sla

from dicke_hp import _kernels as k
from dicke_hp.experiments import convergence_in_N
from dicke_hp.hilbert import ModelParams
from dicke_hp.operators import ladder


def best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    r = args.repeat

    if k.HAVE_NUMBA:
        k._displacement_numba(1.0, 4, 4)  # compile outside the timing
        k._coherent_numba(1.0, 0.0, 4)
    a = ladder(400)
    rows = [
        ("displacement 400x400", lambda: k._displacement_numpy(6.0, 400, 400),
         (lambda: k._displacement_numba(6.0, 400, 400)) if k.HAVE_NUMBA else None,
         lambda: sla.expm(6.0 * (a.T - a))),
        ("coherent n_max=2000", lambda: k._coherent_numpy(3.0, 4.0, 2000),
         (lambda: k._coherent_numba(3.0, 4.0, 2000)) if k.HAVE_NUMBA else None, None),
    ]
    print(f"{'kernel':<24}{'numpy [ms]':>12}{'numba [ms]':>12}{'expm [ms]':>12}")
    for name, np_fn, nb_fn, ref_fn in rows:
        cells = [best(f, r) * 1e3 if f else float("nan") for f in (np_fn, nb_fn, ref_fn)]
        print(f"{name:<24}" + "".join(f"{c:>12.3f}" for c in cells))

    t = best(lambda: convergence_in_N(ModelParams(4, 0.2, 1.0, 1.0), [4, 8, 16, 32]), 1)
    print(f"\nend to end: convergence sweep N=4..32 {t:.2f} s "
          f"(kernels via {'numba' if k.USE_NUMBA else 'numpy'})")
    d1 = k._displacement_numpy(6.0, 400, 400)
    if k.HAVE_NUMBA:
        d2 = k._displacement_numba(6.0, 400, 400)
        print(f"max |numba - numpy| = {np.abs(d1 - d2).max():.1e}")


if __name__ == "__main__":
    main()

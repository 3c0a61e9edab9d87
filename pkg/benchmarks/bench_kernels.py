"""Time the numba kernels against the numpy fallback on the audit workloads.

    python3 benchmarks/bench_kernels.py [--repeat N]

The first numba call per kernel includes compilation (or cache load) and is
reported separately as "warm-up".
"""

import argparse
import time

import numpy as np

from topsa import _kernels
from topsa.scheme import build_prism, build_ring, prism6_f5_fixture, search_modulation
from topsa.topology import make_ring
from topsa.gf import field_make


def _field(s):
    return s.spec.p, s.spec.degree, s.spec.delta_code


def workloads():
    ex = prism6_f5_fixture()
    ring5 = build_ring(5)
    prism4 = build_prism(4)
    ptr, idx = ex.neighbor_csr()
    nb = lambda s: np.array(sorted(i - 1 for i in s.topology.neighbors(1)), dtype=np.int64)  # noqa: E731
    F3 = field_make(3)
    return {
        "recovery, prism F_5 fixture 5^9": (
            lambda: _kernels.recovery_failures(ex.H.codes, ex.alpha_codes, ptr, idx, *_field(ex))),
        "MI user 1, prism F_5 fixture 5^9": (
            lambda: _kernels.mi_counts(ex.H.codes, 0, nb(ex), *_field(ex))),
        "MI user 1, ring K=5 11^7": (
            lambda: _kernels.mi_counts(ring5.H.codes, 0, nb(ring5), *_field(ring5))),
        "MI user 1, prism M=4 5^11": (
            lambda: _kernels.mi_counts(prism4.H.codes, 0, nb(prism4), *_field(prism4))),
        "search exhaustive, ring K=8 F_3": (
            lambda: search_modulation(make_ring(8), F3, "exhaustive")),
    }


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2)
    args = ap.parse_args()
    print(f"{'workload':36s} {'warm-up':>9s} {'numba':>9s} {'numpy':>9s} {'speedup':>8s}")
    for name, fn in workloads().items():
        _kernels.set_backend("numba")
        t0 = time.perf_counter()
        fn()
        warm = time.perf_counter() - t0
        t_jit = timed(fn, args.repeat)
        _kernels.set_backend("numpy")
        t_np = timed(fn, args.repeat)
        print(f"{name:36s} {warm:9.3f} {t_jit:9.3f} {t_np:9.3f} {t_np / t_jit:7.1f}x")
    _kernels.set_backend("numba")


if __name__ == "__main__":
    main()

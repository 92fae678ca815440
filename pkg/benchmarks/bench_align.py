#!/usr/bin/env python3
"""Benchmark the CTC Viterbi trellis: numba kernel vs numpy fallback.

Usage: python3 benchmarks/bench_align.py [--frames 2000] [--vocab 64]
       [--targets 120] [--repeats 5]

The same kernels back force_align in production; PSP_EVAL_NO_NUMBA=1 selects
the numpy path there.
"""

import argparse
import time

import numpy as np

from psp_eval import _kernels
from psp_eval.ctc_align import _extended_sequence


def make_instance(rng, T, V, L):
    targets = rng.integers(1, V, size=L)
    logits = rng.normal(0, 2, size=(T, V))
    em = logits - np.logaddexp.reduce(logits, axis=1, keepdims=True)
    ext, allow_skip = _extended_sequence(list(targets), 0)
    return em[:, ext], allow_skip


def bench(fill, emis_ext, allow_skip, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fill(emis_ext, allow_skip)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--frames", type=int, default=2000)
    ap.add_argument("--vocab", type=int, default=64)
    ap.add_argument("--targets", type=int, default=120)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    emis_ext, allow_skip = make_instance(rng, args.frames, args.vocab, args.targets)
    print(
        f"trellis {args.frames} frames x {emis_ext.shape[1]} states "
        f"({args.targets} targets), best of {args.repeats}"
    )

    t_numpy = bench(_kernels.viterbi_fill_numpy, emis_ext, allow_skip, args.repeats)
    print(f"numpy fallback : {t_numpy * 1e3:8.2f} ms")

    if _kernels.HAVE_NUMBA:
        _kernels.viterbi_fill_numba(emis_ext[:2], allow_skip)  # compile outside timing
        t_numba = bench(_kernels.viterbi_fill_numba, emis_ext, allow_skip, args.repeats)
        print(f"numba kernel   : {t_numba * 1e3:8.2f} ms   ({t_numpy / t_numba:.1f}x)")
    else:
        print("numba unavailable; fallback only")

    a = _kernels.viterbi_fill_numpy(emis_ext, allow_skip)
    b = _kernels.viterbi_fill_numba(emis_ext, allow_skip)
    identical = np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    print(f"outputs identical: {identical}")


if __name__ == "__main__":
    main()

"""Benchmark the compiled CSR matvec kernel against the numpy fallback.

The matvec sits inside every CG iteration of every Lanczos step, so it
dominates the runtime of a spectral run; this script reports both kernels
on the reference-sized operator plus a few smaller grids.

Usage:  python bench/bench_matvec.py [--counts 16,24,32,48] [--repeats 30]
"""

import argparse
import time

import numpy as np

from heisenlab import kernels
from heisenlab.assembly import assemble_oscillator_sos
from heisenlab.grids import GridSpec


def time_kernel(fn, mat, x, out, repeats):
    fn(mat.indptr, mat.indices, mat.data, x, out)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(mat.indptr, mat.indices, mat.data, x, out)
    return (time.perf_counter() - t0) / repeats


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--counts", default="16,24,32,48")
    ap.add_argument("--repeats", type=int, default=30)
    args = ap.parse_args()

    print(f"compiled extension available: {kernels.HAVE_COMPILED}")
    header = f"{'grid':>8} {'N':>9} {'nnz':>10} {'numpy':>12} {'compiled':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    rng = np.random.default_rng(0)
    for m in (int(v) for v in args.counts.split(",")):
        grid = GridSpec(1, 6.0, m)
        mat = assemble_oscillator_sos(grid)
        x = rng.standard_normal(mat.shape[0])
        out = np.empty_like(x)
        t_numpy = time_kernel(kernels.csr_matvec_numpy, mat, x, out, args.repeats)
        if kernels.HAVE_COMPILED:
            t_comp = time_kernel(kernels.csr_matvec_compiled, mat, x, out,
                                 args.repeats)
            a = kernels.csr_matvec_numpy(mat.indptr, mat.indices, mat.data,
                                         x, np.empty_like(x))
            b = kernels.csr_matvec_compiled(mat.indptr, mat.indices, mat.data,
                                            x, np.empty_like(x))
            agree = np.max(np.abs(a - b))
            print(f"{m:>6}^3 {mat.shape[0]:>9} {mat.nnz:>10} "
                  f"{t_numpy * 1e3:>10.3f}ms {t_comp * 1e3:>10.3f}ms "
                  f"{t_numpy / t_comp:>7.1f}x   (max diff {agree:.1e})")
        else:
            print(f"{m:>6}^3 {mat.shape[0]:>9} {mat.nnz:>10} "
                  f"{t_numpy * 1e3:>10.3f}ms {'n/a':>12} {'n/a':>8}")


if __name__ == "__main__":
    main()

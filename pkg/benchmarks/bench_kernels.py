"""Compiled vs numpy kernel timings.

Usage: python benchmarks/bench_kernels.py [--repeat 20]
"""

import argparse
import timeit

import numpy as np

from blindofdm import kernels
from blindofdm.constellation import constellation_from_name, split_constellation


def cases(rng):
    # one trial's worth of work at the default operating point
    n_samples = 1001 * 66
    x = (rng.standard_normal(n_samples) + 1j * rng.standard_normal(n_samples)) / np.sqrt(2)
    h = np.array([1.0, 0.5 - 0.2j, 0.1j])
    part = split_constellation(constellation_from_name("qam64"), "quadrant")
    z = (rng.standard_normal(250 * 64) + 1j * rng.standard_normal(250 * 64)) / np.sqrt(2)
    reg = np.tile(part.subcarrier_regions(64), 250).astype(np.int64)
    state = np.zeros(2, complex)
    # the streaming channel is fed block by block in the bench, the worst case for overhead
    chunks = np.split(x, 1001)

    def fir(mod):
        def run():
            s = state
            for c in chunks:
                _, s = mod.fir_stream(c, h, s)
        return run

    def fir_whole(mod):
        return lambda: mod.fir_stream(x, h, state)

    def decide(mod):
        return lambda: mod.region_decide(z, reg, part.table)

    return {"fir_stream (per block)": fir, "fir_stream (whole stream)": fir_whole,
            "region_decide (qam64)": decide}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    backends = {"python": kernels.python_backend}
    if kernels.compiled_backend is not None:
        backends["cython"] = kernels.compiled_backend
    else:
        print("compiled backend not built; timing the numpy fallback only")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}" + "".join(f"{b:>12}" for b in backends) + "     speedup")
    for name, make in cases(rng).items():
        times = {}
        for b, mod in backends.items():
            fn = make(mod)
            fn()
            times[b] = min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3
        row = f"{name:<28}" + "".join(f"{times[b]:>10.3f}ms" for b in backends)
        if "cython" in times:
            row += f"  {times['python'] / times['cython']:>8.2f}x"
        print(row)


if __name__ == "__main__":
    main()

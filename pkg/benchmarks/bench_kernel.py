"""Time the donor-cell kernel: compiled extension vs numpy fallback.

    python benchmarks/bench_kernel.py [--dims 128x64x32] [--repeat 5]
"""

import argparse
import statistics
import time

import numpy as np

from malsim.kernel import GridDims, available_backends, get_backend, init_domain


def bench(backend, state, repeat):
    mod = get_backend(backend)
    h = 1
    pad = lambda a: np.pad(a, ((h, h), (0, 0), (0, 0)), mode="wrap")
    x, u1, u2, u3 = (pad(a) for a in (state.x, state.u1, state.u2, state.u3))
    c1, c2, c3 = state.courant_scale()
    mod.donor_cell_interior(x, u1, u2, u3, c1, c2, c3, h)  # warm up
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = mod.donor_cell_interior(x, u1, u2, u3, c1, c2, c3, h)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dims", default="128x64x32")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    dims = GridDims.parse(args.dims)
    state = init_domain(dims, seed=0)
    results = {b: bench(b, state, args.repeat) for b in available_backends()}
    cells = dims.cells
    print(f"grid {dims} ({cells} cells), median of {args.repeat}")
    for name, (t, _) in results.items():
        print(f"  {name:<7} {t * 1e3:9.2f} ms  {cells / t / 1e6:8.1f} Mcell/s")
    if "native" in results:
        (tn, a), (tp, b) = results["native"], results["python"]
        same = np.array_equal(a.view(np.uint64), b.view(np.uint64))
        print(f"  speedup {tp / tn:.2f}x, outputs bitwise equal: {same}")
    else:
        print("  compiled extension not built; only the numpy path was timed")


if __name__ == "__main__":
    main()

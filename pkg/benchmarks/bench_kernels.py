"""Time the compiled and pure-Python kernels on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from liminf import kernels


def cases():
    q, tau = 20011, 3.5
    ps = np.arange(9000, 11000, dtype=np.int64)
    q1s = np.arange(2, 200, dtype=np.int64)
    h1s = q1s.astype(np.float64) ** -tau
    yield "classify_axis", "classify_axis", (ps, q, q1s, float(q) ** -tau, h1s)

    horizon = 1 << 15
    n = np.arange(horizon + 1, dtype=np.float64)
    caps = np.floor(np.sqrt(n) / np.log(np.maximum(n, 2))).astype(np.int64)
    member = np.ones(2 * horizon + 1, dtype=np.uint8)
    member[0] = 0
    yield "shape_scan", "shape_scan", (member, caps, horizon)

    q = np.arange(1, 10**6 + 1, dtype=np.float64)
    yield "kahan_cumsum (1e6)", "kahan_cumsum", ((q + 1) / q**2.1,)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = kernels.backends()
    print(f"{'kernel':<22}" + "".join(f"{name:>12}" for name, _ in backends) + "     speedup")
    for label, fn, inputs in cases():
        times = []
        for _, mod in backends:
            func = getattr(mod, fn)

            def call():
                # shape_scan mutates its first argument
                fresh = tuple(a.copy() if isinstance(a, np.ndarray) else a for a in inputs)
                func(*fresh)

            times.append(min(timeit.repeat(call, number=1, repeat=args.repeat)))
        speed = f"{times[-1] / times[0]:10.1f}x" if len(times) > 1 else "         -"
        print(f"{label:<22}" + "".join(f"{t:11.4f}s" for t in times) + speed)


if __name__ == "__main__":
    main()

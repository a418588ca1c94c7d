"""Compiled vs pure-Python geodesic tracer.

    python benchmarks/bench_kernel.py [--shots N] [--length L]

Traces a fan of geodesics from (2, 0) on hyperboloid(1) and on the unit
sphere with both backends, checks that the two agree, and prints shots per
second.  Without the compiled extension only the Python row is printed.
"""

import argparse
import math
import time

import numpy as np

from obtuselab import kernel, revsurface as rs


def run(trace, surface, shots, length, radii):
    u0 = float(surface.u_hat(2.0))
    m0 = float(surface.m(2.0))
    finals = []
    t0 = time.perf_counter()
    for t in np.linspace(-math.pi, math.pi, shots, endpoint=False):
        y0 = [2.0, 0.0, math.cos(t), math.sin(t) / m0, u0]
        _, _, fin, _ = trace(surface.kind, surface.pa, surface.r_max_hat, y0, length, (), radii,
                             rtol=1e-10, atol=1e-10)
        finals.append(fin[:5])
    return time.perf_counter() - t0, np.array(finals)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--shots", type=int, default=200)
    ap.add_argument("--length", type=float, default=50.0)
    args = ap.parse_args()
    cases = [("hyperboloid(1)", rs.make_surface({"type": "hyperboloid", "a": 1.0}), args.length, [10.0, 30.0]),
             ("unit sphere", rs.make_surface({"type": "spheroid"}), args.length, [0.5, 2.5])]
    print(f"backend selected at import: {kernel.BACKEND}")
    for name, s, length, radii in cases:
        tp, fp = run(kernel.trace_python, s, args.shots, length, radii)
        line = f"{name:15s} python {args.shots / tp:9.1f} shots/s"
        if kernel.BACKEND == "cython":
            tc, fc_ = run(kernel.trace, s, args.shots, length, radii)
            diff = float(np.max(np.abs(fp - fc_)))
            line += f" | cython {args.shots / tc:9.1f} shots/s | speedup {tp / tc:6.1f}x | max diff {diff:.1e}"
        print(line)


if __name__ == "__main__":
    main()

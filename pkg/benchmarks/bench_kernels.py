"""Compare the compiled and pure-Python kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``; prints one line per
kernel and backend with the best of several timings.
"""
import argparse
import timeit

import numpy as np

from gats import kernels
from gats.datagen import RdConfig, random_initial_condition


def bench_rd(backend, nx, nt, repeat):
    cfg = RdConfig(nu=1e-3, rho=1.0, nx=nx, nt=nt)
    dt, n_sub = cfg.stepping()
    u0 = random_initial_condition(nx, seed=0)
    k = kernels.get_backend(backend)
    fn = lambda: k.rd_integrate(u0, cfg.nu, cfg.rho, cfg.dx, dt, n_sub, cfg.nt)
    return min(timeit.repeat(fn, number=1, repeat=repeat)), fn()


def bench_jacobi(backend, m, n, repeat):
    a = np.random.default_rng(0).standard_normal((m, n))
    k = kernels.get_backend(backend)
    fn = lambda: k.jacobi_svd(np.ascontiguousarray(a), 1e-15, 60)
    return min(timeit.repeat(fn, number=1, repeat=repeat)), fn()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nx", type=int, default=256)
    ap.add_argument("--nt", type=int, default=50)
    ap.add_argument("--svd", type=int, nargs=2, default=[200, 60])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)} (default {kernels.BACKEND})")
    for name, bench, shape in [("rd_integrate", bench_rd, (args.nx, args.nt)),
                               ("jacobi_svd", bench_jacobi, tuple(args.svd))]:
        results = {b: bench(b, *shape, args.repeat) for b in backends}
        ref = results[backends[0]][1]
        for b, (sec, out) in results.items():
            first = out[0] if isinstance(out, tuple) else out
            ref0 = ref[0] if isinstance(ref, tuple) else ref
            diff = float(np.max(np.abs(first - ref0)))
            speed = results["python"][0] / sec if "python" in results else float("nan")
            print(f"{name:13s} {str(shape):12s} {b:7s} {sec * 1e3:10.2f} ms  x{speed:6.1f}  max|diff|={diff:.1e}")


if __name__ == "__main__":
    main()

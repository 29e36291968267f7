"""Benchmark the compiled kernel backend against the pure-numpy fallback.

Run:  python benchmarks/bench_kernels.py [--rows 20000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from symcone import kernels, symops


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rows", type=int, default=20_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = kernels.available_backends()
    print(f"active backend: {kernels.BACKEND}; available: {', '.join(sorted(backends))}")
    rng = np.random.default_rng(1)

    rows = []
    for n in (4, 6, 10):
        lam = np.ascontiguousarray(rng.uniform(0.1, 3.0, (args.rows, n)))
        k = max(2, n // 2)
        for label, call in (
            (f"elem_sym(n={n})", lambda b, lam=lam, n=n: b.elem_sym(lam, n)),
            (f"partials(n={n},k={k})", lambda b, lam=lam, k=k: b.elem_sym_partials(lam, k)),
        ):
            timings = {
                name: best_of(lambda b=be: call(b), args.repeat)
                for name, be in backends.items()
            }
            rows.append((label, timings))

    op = symops.sigma_root(3, 6)
    lam6 = np.ascontiguousarray(rng.uniform(0.1, 3.0, (args.rows, 6)))
    import symcone.kernels as kmod

    orig = kmod._impl
    timings = {}
    for name, be in backends.items():
        kmod._impl = be
        timings[name] = best_of(lambda: (op.eval_batch(lam6), op.grad_batch(lam6)), args.repeat)
    kmod._impl = orig
    rows.append(("sigma_root(3,6) eval+grad", timings))

    width = max(len(r[0]) for r in rows)
    header = f"{'kernel':<{width}}  " + "".join(f"{name:>12}" for name in sorted(backends))
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    for label, timings in rows:
        line = f"{label:<{width}}  " + "".join(
            f"{timings[name] * 1e3:>10.2f}ms" for name in sorted(timings)
        )
        if len(timings) > 1:
            line += f"{timings['python'] / timings['cython']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()

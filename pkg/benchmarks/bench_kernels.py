"""Compiled vs pure-Python digit kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Kernel timings call both implementations directly. The end-to-end line runs
the same associativity suite in two subprocesses, one with SKEWSERIES_PURE=1.
"""
import argparse
import os
import subprocess
import sys
import timeit

from skewseries import _kernels_py as py
from skewseries.prng import SplitMix64

try:
    from skewseries import _kernels as cy
except ImportError:
    cy = None


def digits(rng, n, p):
    return tuple(rng.randrange(p) for _ in range(n))


def bench_kernels(repeat):
    rng = SplitMix64(11)
    p = 3
    rows = []
    for n in (8, 32, 128):
        a, b = digits(rng, n, p), digits(rng, n, p)
        a = (1,) + a[1:]
        cases = {
            "conv_trunc": lambda m: m.conv_trunc(a, b, n, p),
            "inv_trunc": lambda m: m.inv_trunc(a, n, p),
            "add_shifted": lambda m: m.add_shifted(a, b, 3, n, p),
        }
        for name, fn in cases.items():
            number = max(1, 20000 // n)
            t_py = min(timeit.repeat(lambda: fn(py), number=number, repeat=repeat)) / number
            t_cy = min(timeit.repeat(lambda: fn(cy), number=number, repeat=repeat)) / number if cy else float("nan")
            rows.append((name, n, t_py, t_cy))
    return rows


END_TO_END = (
    "import time;from skewseries.harness import load_fixture;from skewseries import suites, kernels;"
    "c=load_fixture('iwasawa');t=time.perf_counter();"
    "suites.suite_associativity(suites.Context(c,1),triples=30);"
    "print(kernels.BACKEND, time.perf_counter()-t)"
)


def end_to_end():
    out = []
    for pure in (False, True):
        env = dict(os.environ)
        env.pop("SKEWSERIES_PURE", None)
        if pure:
            env["SKEWSERIES_PURE"] = "1"
        res = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        backend, secs = res.stdout.split()
        out.append((backend, float(secs)))
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-e2e", action="store_true")
    args = ap.parse_args()
    print(f"{'kernel':12s} {'n':>4s} {'python us':>10s} {'cython us':>10s} {'speedup':>8s}")
    for name, n, t_py, t_cy in bench_kernels(args.repeat):
        print(f"{name:12s} {n:4d} {t_py * 1e6:10.2f} {t_cy * 1e6:10.2f} {t_py / t_cy:8.1f}x")
    if not args.no_e2e:
        for backend, secs in end_to_end():
            print(f"associativity suite (30 triples), {backend} kernels: {secs:.2f} s")


if __name__ == "__main__":
    main()

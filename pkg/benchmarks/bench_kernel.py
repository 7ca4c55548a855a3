"""Compare the compiled and numpy decoding kernels.

    python benchmarks/bench_kernel.py --n 110 200 --repeats 20
"""

import argparse

from idsrecon.perf import format_timings, time_kernels


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[110, 200])
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for N in args.n:
        print(format_timings(time_kernels(N, repeats=args.repeats, seed=args.seed)))
        print()


if __name__ == "__main__":
    main()

"""Compiled vs pure-Python RNG kernels.

    python benchmarks/bench_rng.py [--size N] [--repeat R]

Times the two fill kernels and one end-to-end empirical-risk cell under each
backend, and checks that both backends produced identical numbers.
"""
import argparse
import timeit

import numpy as np

from advlecam import rng
from advlecam.distributions import SpdMatrix
from advlecam.tasks import MeanEstimation, empirical_risk


def _cases(size):
    task = MeanEstimation(np.zeros(2), SpdMatrix([[1.0, 0.5], [0.5, 1.0]]))
    return {
        f"uniform({size})": lambda: rng.Stream(1).uniform(size),
        f"standard_normal({size})": lambda: rng.Stream(1).standard_normal(size),
        "empirical_risk(n=100, R=500)": lambda: empirical_risk(task, None, 100, 500, 1).empirical_risk,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = rng.available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; only the Python kernels are available")
    timings, outputs = {}, {}
    for name in backends:
        with rng.use_backend(name):
            for label, fn in _cases(args.size).items():
                outputs[name, label] = fn()
                timings[name, label] = min(timeit.repeat(fn, number=1, repeat=args.repeat))

    print(f"{'case':<32} " + " ".join(f"{b:>12}" for b in backends) + "     speedup  identical")
    for label in _cases(args.size):
        row = [timings[b, label] for b in backends]
        same = all(np.array_equal(outputs[backends[0], label], outputs[b, label]) for b in backends)
        speed = (timings["python", label] / timings["compiled", label]) if "compiled" in backends else 1.0
        print(f"{label:<32} " + " ".join(f"{t:>11.4f}s" for t in row) + f" {speed:>10.1f}x  {same}")


if __name__ == "__main__":
    main()

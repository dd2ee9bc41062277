"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is timed on identical inputs under both backends; the outputs are
checked for equality before any timing is reported.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from segrank._backend import available_backends, get_kernels


def instrument_frame(rng: np.random.Generator, shape=(540, 960)) -> np.ndarray:
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    angle = rng.uniform(0.2, 1.3)
    dist = np.abs((xx - rng.uniform(0.2, 0.8) * w) * np.cos(angle) - yy * np.sin(angle))
    return (dist < rng.uniform(25, 70)) & (yy < rng.uniform(0.4, 0.9) * h)


def workloads(seed: int):
    rng = np.random.default_rng(seed)
    frame = instrument_frame(rng)
    small = rng.random((32, 32)) < 0.3
    costs = [rng.random((n, n)) for n in (3, 6, 6, 8)]
    return [
        ("edt_sq 960x540 boundary source", "edt_sq", lambda k: k.edt_sq(k.boundary(frame))),
        ("edt_sq 32x32 random source", "edt_sq", lambda k: k.edt_sq(small)),
        ("boundary 960x540", "boundary", lambda k: k.boundary(frame)),
        ("linear_assignment 4 matrices <= 8x8", "linear_assignment",
         lambda k: [k.linear_assignment(c) for c in costs]),
    ]


def _same(a, b) -> bool:
    if isinstance(a, list):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = {name: get_kernels(name) for name in available_backends()}
    if "cython" not in backends:
        print("compiled extension not built; timing the numpy backend only")

    print(f"{'kernel':<40}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, _, fn in workloads(args.seed):
        outputs = {name: fn(mod) for name, mod in backends.items()}
        if len(outputs) == 2 and not _same(outputs["cython"], outputs["python"]):
            raise SystemExit(f"backends disagree on {label}")
        best = {}
        for name, mod in backends.items():
            number = 3 if "960" in label else 50
            runs = timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)
            best[name] = min(runs) / number
        cells = "".join(f"{best[n] * 1e3:>10.3f}ms" for n in backends)
        speed = f"{best['python'] / best['cython']:>9.1f}x" if len(best) == 2 else ""
        print(f"{label:<40}{cells}{speed}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Compare the compiled and pure-numpy kernel backends.

Times the two hot kernels (the iterative solver sweep and the map
smoothing convolution) against both implementations, plus a full
estimate_flow call under whichever backend is active.

Run:  python3 benchmarks/bench_backends.py [--height H --width W --repeats N]
"""

import argparse
import time

import numpy as np

from flowtraj import BACKEND
from flowtraj import _kernels_py
from flowtraj.flow import Frame, estimate_flow

try:
    from flowtraj import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def best_time(fn, repeats):
    times = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        times.append(time.perf_counter() - started)
    return min(times)


def bench_case(name, make_args, repeats):
    """Yield (backend, seconds) rows for one kernel under both backends."""
    rows = []
    for label, module in (("python", _kernels_py), ("cython", _kernels_c)):
        if module is None:
            continue
        fn = getattr(module, name)
        args = make_args()
        rows.append((label, best_time(lambda: fn(*args), repeats)))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--height", type=int, default=240)
    parser.add_argument("--width", type=int, default=320)
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--kernel-radius", type=int, default=4)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    shape = (args.height, args.width)
    ix = rng.normal(size=shape) * 50.0
    iy = rng.normal(size=shape) * 50.0
    it = rng.normal(size=shape) * 20.0
    den = 15.0**2 + ix * ix + iy * iy
    u = rng.normal(size=shape)
    v = rng.normal(size=shape)
    src = rng.normal(size=shape)
    k = 2 * args.kernel_radius + 1
    kernel = rng.random((k, k))
    kernel /= kernel.sum()

    cases = [
        ("hs_sweep", lambda: (ix, iy, it, den, u, v)),
        ("convolve2d", lambda: (src, kernel)),
    ]

    print(f"array {args.height}x{args.width}, kernel {k}x{k}, "
          f"best of {args.repeats} runs")
    print(f"{'kernel':<12} {'backend':<8} {'seconds':>10} {'speedup':>8}")
    for name, make_args in cases:
        rows = bench_case(name, make_args, args.repeats)
        baseline = dict(rows).get("python")
        for label, seconds in rows:
            speedup = f"{baseline / seconds:5.2f}x" if baseline else "n/a"
            print(f"{name:<12} {label:<8} {seconds:10.6f} {speedup:>8}")

    frames = [
        Frame(np.clip(0.5 + 0.2 * rng.normal(size=shape), 0.0, 1.0))
        for _ in range(2)
    ]
    seconds = best_time(
        lambda: estimate_flow(frames[0], frames[1]), max(3, args.repeats // 4)
    )
    print(f"{'estimate_flow':<12} {BACKEND:<8} {seconds:10.6f}")
    if _kernels_c is None:
        print("note: compiled extension unavailable; python backend only")


if __name__ == "__main__":
    main()

"""Timing comparison of the numpy and numba kernel backends.

Runs the availability sweep chain (elevations -> sector visibility -> DOP)
and the AR(1) drift recursion on both backends and reports best-of-N wall
times. The numba path is JIT-warmed before timing.

Usage: python3 benchmarks/bench_kernels.py [--epochs 8640] [--repeat 5]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from vanetsync._kernels import get_backend
from vanetsync.constellation import (
    ConstellationSet,
    build_nominal_constellation,
    elements_array,
    lla_to_ecef,
)
from vanetsync.errors import ConfigurationError
from vanetsync.visibility import street_canyon


def _sweep_inputs(n_epochs: int, step_s: float):
    elems = elements_array(
        build_nominal_constellation(ConstellationSet.GPS_PLUS_BDS)
    )
    times = np.arange(n_epochs, dtype=float) * step_s
    rx = np.tile(lla_to_ecef(-27.47, 153.03, 30.0), (n_epochs, 1))
    mask = street_canyon(0.0, math.radians(57.0), math.radians(24.0))
    return elems, times, rx, mask.sector_arrays()


def _availability_chain(impl, elems, times, rx, sectors):
    el, az = impl.sweep_elevations(elems, times, rx)
    vis = impl.sector_visible(el, az, *sectors)
    return impl.dop_accumulate(el, az, vis)


def _ar1_inputs(n: int):
    rng = np.random.default_rng(1)
    return 0.0, math.exp(-1.0 / 600.0), rng.normal(0.0, 1.0, n)


def _best_of(fn, repeat: int) -> float:
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epochs", type=int, default=8640,
                    help="availability epochs (default: 24 h at 10 s)")
    ap.add_argument("--step", type=float, default=10.0, help="epoch step, s")
    ap.add_argument("--ar1-n", type=int, default=2_000_000,
                    help="AR(1) series length")
    ap.add_argument("--repeat", type=int, default=5, help="timing repeats")
    args = ap.parse_args()

    backends = {"numpy": get_backend("numpy")}
    try:
        backends["numba"] = get_backend("numba")
    except ConfigurationError:
        print("numba backend unavailable; timing numpy only")

    sweep_in = _sweep_inputs(args.epochs, args.step)
    ar1_in = _ar1_inputs(args.ar1_n)

    cases = {
        "availability": lambda impl: _availability_chain(impl, *sweep_in),
        "ar1": lambda impl: impl.ar1_series(*ar1_in),
    }

    # warm JIT compilation outside the timed region
    if "numba" in backends:
        small = _sweep_inputs(4, args.step)
        _availability_chain(backends["numba"], *small)
        backends["numba"].ar1_series(0.0, 0.5, np.zeros(8))

    print(f"epochs={args.epochs} step={args.step:g}s ar1_n={args.ar1_n} "
          f"best of {args.repeat}")
    print(f"{'case':<14} {'backend':<8} {'seconds':>10} {'speedup':>9}")
    for case, runner in cases.items():
        base = None
        for name, impl in backends.items():
            sec = _best_of(lambda: runner(impl), args.repeat)
            if name == "numpy":
                base = sec
            rel = f"{base / sec:8.2f}x" if base else "      - "
            print(f"{case:<14} {name:<8} {sec:>10.4f} {rel:>9}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Throughput of the compiled walk kernels against the numpy fallback.

    python3 benchmarks/bench_walk.py [--walkers N] [--steps N]

Each backend runs the same workload; outputs are checked for bitwise
equality before timings are reported.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from boxtransport.model import EnclosureGeometry, MovementParams
from boxtransport.sim import SimConfig, walk_spec
from boxtransport.sim import _backend


def _timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--walkers", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=20000, help="steps per walker (reflecting run)")
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    params = MovementParams(args.p, 0.0, 0.5, 0.5)
    geom = EnclosureGeometry(4.0, 2.0, 1.0, 0.0)
    cfg = SimConfig(0.02, args.walkers, boundary="all_reflecting")
    spec = walk_spec(params, geom, cfg)
    print(f"uniform width {spec['bits']} bits, {64 // spec['bits']} steps per draw")

    runs = [("python", _backend.get("python"), {})]
    if _backend.compiled_available():
        comp = _backend.get("compiled")
        runs.append(("compiled scalar", comp, {"simd": False}))
        if comp.simd_available():
            runs.append(("compiled simd", comp, {"simd": True}))

    reference = None
    print(f"{'backend':<18}{'reflect Msteps/s':>18}{'absorb Msteps/s':>18}")
    for name, kern, kw in runs:
        n = args.walkers if name != "python" else max(8, args.walkers // 10)
        (xs, ys), dt_r = _timed(kern.reflect, spec, geom.x0, geom.y0, 7, 0, n, args.steps,
                                args.threads, **kw)
        times, dt_a = _timed(kern.absorb, spec, geom.x0, 7, 0, n, 10**9, args.threads, **kw)
        absorbed_steps = float(np.sum(times)) / spec["tau"]
        if reference is None:
            reference = (xs, ys, times)
        else:
            m = reference[0].size
            same = (np.array_equal(xs[:m], reference[0]) and np.array_equal(ys[:m], reference[1])
                    and np.array_equal(times[:m], reference[2]))
            if not same:
                raise SystemExit(f"{name} disagrees with the python backend")
        print(f"{name:<18}{n * args.steps / dt_r / 1e6:>18.1f}{absorbed_steps / dt_a / 1e6:>18.1f}")


if __name__ == "__main__":
    main()

"""Wall time of the compiled and numpy ensemble backends on the same workload.

    python3 benchmarks/bench_sde.py [--paths 2000] [--repeat 3]

Both backends produce bit-identical finals; the script checks that too.
"""

import argparse
import time

import numpy as np

from ibessel.dunkl import ModelParams
from ibessel.sde import Model, ParticleConfig, SimulationConfig, available_backends, run_ensemble

CASES = [
    ("besselB N=1", Model.BESSEL_B, 1, 2.0, 0.5),
    ("besselB N=3", Model.BESSEL_B, 3, 2.0, 0.5),
    ("besselB N=7", Model.BESSEL_B, 7, 64.0, 0.5),
    ("dysonA N=7", Model.DYSON_A, 7, 64.0, 0.5),
]


def best_time(cfg, backend, repeat):
    best = np.inf
    res = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = run_ensemble(cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, res


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--t", type=float, default=0.2)
    ap.add_argument("--dt", type=float, default=2e-4)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}; paths={args.paths}, steps={round(args.t / args.dt)}")
    print(f"{'case':<14}" + "".join(f"{b + ' [s]':>14}" for b in backends) + f"{'ns/path-step':>14}{'speedup':>10}")
    for name, model, N, beta, nu in CASES:
        init = 0.01 * np.arange(1, N + 1)
        cfg = SimulationConfig(model, ModelParams(beta, nu, N), args.dt, args.t, args.paths, 1, ParticleConfig(init))
        times, finals = {}, {}
        for b in backends:
            times[b], res = best_time(cfg, b, args.repeat)
            finals[b] = res.finals
        steps = args.paths * cfg.n_steps
        fast = min(times.values())
        line = f"{name:<14}" + "".join(f"{times[b]:>14.3f}" for b in backends) + f"{1e9 * fast / steps:>14.1f}"
        if len(backends) == 2:
            line += f"{times['python'] / times['cython']:>9.1f}x"
            if not np.array_equal(finals["cython"], finals["python"], equal_nan=True):
                line += "  MISMATCH"
        print(line)


if __name__ == "__main__":
    main()

"""Command-line entry point: ``ibessel {simulate,zeros,density,compare,kernel,rerun}``.

Exit codes: 0 success, 2 invalid input, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import math
import os
import shlex
import sys
import time
import warnings

import numpy as np

from . import __version__, stats
from .dunkl import (
    ModelParams,
    SeriesControl,
    gen_bessel_B,
    kernel_E_beta_limit,
    kernel_E_nu_limit,
)
from .errors import CapacityError, DomainError, InvalidInputError, NumericError, TruncationWarning
from .orthopoly import hermite_zeros, laguerre_zeros, sqrt_laguerre_zeros
from .sde import Model, ParticleConfig, SimulationConfig, run_ensemble

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERIC = 3

SCALES = ("sqrt-beta-t", "sqrt-nu-t", "sqrt-beta-nu-t", "none")
MANIFEST = "manifest.txt"


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidInputError(f"expected a comma-separated list of numbers, got {text!r}") from None


def scale_factor(name, beta, nu, t):
    if name == "none":
        return 1.0
    if name == "sqrt-beta-t":
        v = beta * t
    elif name == "sqrt-nu-t":
        v = nu * t
    elif name == "sqrt-beta-nu-t":
        v = beta * nu * t
    else:
        raise InvalidInputError(f"unknown scale {name!r}")
    if not v > 0:
        raise InvalidInputError(f"scale {name} needs a positive product, got {v}")
    return math.sqrt(v)


def parse_init(text, n):
    """Either a comma list of N positions or ``step:H`` meaning x_i = i*H."""
    if text.startswith("step:"):
        h = float(text[5:])
        return ParticleConfig(h * np.arange(1, n + 1))
    vals = _floats(text)
    if len(vals) != n:
        raise InvalidInputError(f"--init lists {len(vals)} positions but --n is {n}")
    return ParticleConfig(vals)


def parse_grid(text):
    """``START:STOP:COUNT`` -> COUNT cell centers of a uniform partition of [START, STOP]."""
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise InvalidInputError(f"grid must look like START:STOP:COUNT, got {text!r}") from None
    if not (b > a and n > 0):
        raise InvalidInputError(f"empty grid {text!r}")
    w = (b - a) / n
    return a + (np.arange(n) + 0.5) * w, w


def write_manifest(out_dir, command, argv, seed, wall_time, extra=None):
    entries = {
        "argv": shlex.join(argv),
        "command": command,
        "seed": str(seed),
        "tool_version": __version__,
        "wall_time": f"{wall_time:.3f}",
    }
    entries.update(extra or {})
    with open(os.path.join(out_dir, MANIFEST), "w", encoding="utf-8", newline="\n") as fh:
        for k in sorted(entries):
            fh.write(f"{k} = {entries[k]}\n")


def read_manifest(path):
    entries = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            k, sep, v = line.rstrip("\n").partition(" = ")
            if not sep:
                raise InvalidInputError(f"malformed manifest line {line!r}")
            entries[k] = v
    if "argv" not in entries:
        raise InvalidInputError(f"manifest {path} has no argv entry")
    return entries


def _with_out(argv, out_dir):
    """Replace (or append) the --out value in a recorded argv."""
    argv = list(argv)
    if "--out" in argv:
        argv[argv.index("--out") + 1] = out_dir
    else:
        argv += ["--out", out_dir]
    return argv


def cmd_simulate(args, argv):
    t0 = time.perf_counter()
    params = ModelParams(args.beta, args.nu, args.n)
    cfg = SimulationConfig(
        model=Model(args.model),
        params=params,
        dt=args.dt,
        t_final=args.t,
        n_paths=args.paths,
        seed=args.seed,
        initial=parse_init(args.init, args.n),
    )
    res = run_ensemble(cfg, backend=args.backend, workers=args.workers)
    scale = scale_factor(args.scale, args.beta, args.nu, args.t)
    os.makedirs(args.out, exist_ok=True)
    h = stats.histogram(res.finals, args.bin_width, scale)
    stats.write_histogram_csv(os.path.join(args.out, "hist.csv"), h)
    with open(os.path.join(args.out, "finals.csv"), "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(f"x{i + 1}" for i in range(args.n)) + "\n")
        for row in res.finals:
            fh.write(",".join(stats.format_float(float(v)) for v in row) + "\n")
    write_manifest(
        args.out, "simulate", argv, args.seed, time.perf_counter() - t0,
        {
            "accepted_steps": str(res.accepted_steps),
            "boundary_flag": str(res.boundary_flag).lower(),
            "dt_effective": repr(cfg.dt_effective),
            "n_steps": str(cfg.n_steps),
            "rejected_steps": str(res.rejected_steps),
            "scale": repr(scale),
            "stuck_paths": str(len(res.stuck_paths)),
        },
    )
    print(f"wrote {args.paths} paths to {args.out} (rejected steps: {res.rejected_steps}, stuck: {len(res.stuck_paths)})")
    if res.boundary_flag:
        print("WARN rejected steps exceed 1% of accepted steps; consider a smaller --dt")
    return EXIT_OK


def cmd_zeros(args, argv):
    if args.family == "laguerre":
        z = laguerre_zeros(args.n, args.alpha)
    elif args.family == "sqrt-laguerre":
        z = sqrt_laguerre_zeros(args.n, args.alpha)
    else:
        z = hermite_zeros(args.n)
    lines = [stats.format_float(float(v)) for v in z.values]
    if args.out:
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            fh.write("zero\n" + "".join(s + "\n" for s in lines))
    print("\n".join(lines))
    return EXIT_OK


def _marginal_from_samples(samples, centers, width, n_particles):
    edges0 = centers[0] - width / 2
    idx = np.floor((samples.ravel() - edges0) / width).astype(np.int64)
    keep = (idx >= 0) & (idx < centers.size)
    counts = np.bincount(idx[keep], minlength=centers.size)
    return counts / (samples.shape[0] * n_particles * width)


def density_on_grid(kind, params, t, scale_name, centers, width, samples=2000, seed=0):
    """Pooled one-particle density of position/scale at ``centers``."""
    beta, nu, N = params.beta, params.nu, params.n_particles
    if kind == "exact-beta2":
        if beta != 2:
            raise InvalidInputError("exact-beta2 requires --beta 2")
        s = scale_factor(scale_name, beta, nu, t)
        g = stats.pooled_density(lambda y: stats.exact_density_beta2(y, t, N, nu), s, N)
        if np.any(centers < 0):
            raise InvalidInputError("exact-beta2 grid must be nonnegative")
        return g(centers)
    if kind == "laguerre-ensemble":
        if scale_name != "none":
            raise InvalidInputError("laguerre-ensemble densities are in lambda; use --scale none")
        logf = lambda u: stats.log_laguerre_ensemble_density(u, params)  # noqa: E731
        mode = stats.laguerre_ensemble_argmax(params)
        ratio = 1.0
    elif kind == "steady-beta":
        logf = lambda u: stats.log_steady_density_beta(u, params)  # noqa: E731
        mode = stats.steady_beta_argmax(params)
        ratio = scale_factor(scale_name, beta, nu, t) / math.sqrt(beta * t)
    elif kind == "steady-nu":
        logf = lambda u: stats.log_steady_density_nu(u, params)  # noqa: E731
        mode = stats.steady_nu_argmax(params)
        ratio = scale_factor(scale_name, beta, nu, t) / math.sqrt(nu * t)
    else:
        raise InvalidInputError(f"unknown density kind {kind!r}")
    # native variable u = v * ratio, so g(v) = ratio * f(v * ratio)
    u_centers = centers * ratio
    if N == 1:
        z = stats.normalize_over_chamber(logf, 1, mode)
        out = np.zeros(centers.size)
        pos = u_centers > 0
        out[pos] = np.exp(logf(u_centers[pos][:, None]) - z.log_z)
        return ratio * out
    draws = stats.sample_chamber(logf, mode, n_chains=samples, seed=seed)
    return _marginal_from_samples(draws / ratio, centers, width, N)


def cmd_density(args, argv):
    t0 = time.perf_counter()
    params = ModelParams(args.beta, args.nu, args.n)
    centers, width = parse_grid(args.grid)
    dens = density_on_grid(args.kind, params, args.t, args.scale, centers, width, args.samples, args.seed)
    os.makedirs(args.out, exist_ok=True)
    stats.write_density_csv(os.path.join(args.out, "density.csv"), centers, dens, "y,density")
    write_manifest(args.out, "density", argv, args.seed, time.perf_counter() - t0)
    print(f"wrote {centers.size} grid points to {os.path.join(args.out, 'density.csv')}")
    return EXIT_OK


def align_grids(hx, hd, dx, dd, rel=1e-6):
    """Histogram and density values on the union of their (shared) bin centers.

    Density points must sit on the histogram's bin lattice and cover every
    histogram bin; bins outside the histogram's range have zero mass.
    """
    if hx.size == 0 or dx.size == 0:
        raise InvalidInputError("empty histogram or density file")
    width = float(np.median(np.diff(hx))) if hx.size > 1 else float(np.median(np.diff(dx)))
    if not width > 0 or (hx.size > 1 and np.max(np.abs(np.diff(hx) - width)) > rel * width):
        raise InvalidInputError("histogram bins are not uniform")
    kh = (hx - hx[0]) / width
    kd = (dx - hx[0]) / width
    if np.max(np.abs(kd - np.round(kd))) > rel:
        raise InvalidInputError("grid mismatch: density points are not histogram bin centers")
    kh = np.round(kh).astype(np.int64)
    kd = np.round(kd).astype(np.int64)
    missing = np.setdiff1d(kh, kd)
    if missing.size:
        raise InvalidInputError(f"grid mismatch: {missing.size} histogram bins have no density value")
    if np.unique(kd).size != kd.size:
        raise InvalidInputError("density grid has repeated points")
    h_on_d = np.zeros(dx.size)
    pos = {int(k): i for i, k in enumerate(kd)}
    for k, v in zip(kh, hd):
        h_on_d[pos[int(k)]] = v
    return h_on_d, dd, width


def cmd_compare(args, argv):
    hx, hd, hhead = stats.read_density_csv(args.hist)
    dx, dd, _ = stats.read_density_csv(args.density)
    if hhead != "bin_center,density":
        raise InvalidInputError(f"{args.hist} is not a histogram file")
    h, d, width = align_grids(hx, hd, dx, dd)
    if args.norm == "l1":
        dist = float(np.sum(np.abs(h - d)) * width)
    else:
        dist = float(np.max(np.abs(h - d)))
    ok = dist <= args.tol
    print(f"{args.norm} distance = {stats.format_float(dist)}")
    print(f"{'PASS' if ok else 'FAIL'} (tol {args.tol})")
    return EXIT_OK if ok else 1


def cmd_kernel(args, argv):
    x = np.array(_floats(args.x))
    y = np.array(_floats(args.y))
    params = ModelParams(args.beta, args.nu, args.n)
    ctrl = SeriesControl(max_degree=args.max_degree)
    norm = (2.0 ** args.n) * math.factorial(args.n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        if args.limit is None:
            value = gen_bessel_B(x, y, params, ctrl)
        elif args.limit == "beta":
            value = gen_bessel_B(math.sqrt(args.beta) * x, y, params, ctrl) / norm
        else:
            value = gen_bessel_B(math.sqrt(args.nu) * x, y, params, ctrl) / norm
    print(f"series = {stats.format_float(float(value))}")
    print(f"last_term_ratio = {stats.format_float(float(ctrl.last_term_ratio))}")
    print(f"degree_reached = {ctrl.degree_reached}")
    if args.limit is not None:
        if args.limit == "beta":
            lim = kernel_E_beta_limit(x, y, params)
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TruncationWarning)
                lim = kernel_E_nu_limit(x, y, args.beta, SeriesControl(max_degree=args.max_degree))
        gap = abs(float(value) - float(lim)) / abs(float(lim))
        print(f"limit = {stats.format_float(float(lim))}")
        print(f"relative_gap = {stats.format_float(gap)}")
    if not ctrl.converged:
        print(f"WARN series not converged at degree {ctrl.degree_reached}; value is a partial sum")
    return EXIT_OK


def cmd_rerun(args, argv):
    entries = read_manifest(args.manifest)
    recorded = shlex.split(entries["argv"])
    out_dir = args.out or os.path.dirname(os.path.abspath(args.manifest))
    return run(_with_out(recorded, out_dir))


def build_parser():
    p = argparse.ArgumentParser(prog="ibessel", description="Interacting Bessel processes: simulation and analysis.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def model_args(sp, n_default=None):
        sp.add_argument("--n", type=int, required=n_default is None, default=n_default, help="number of particles")
        sp.add_argument("--beta", type=float, default=2.0)
        sp.add_argument("--nu", type=float, default=0.5)

    s = sub.add_parser("simulate", help="run an ensemble and write hist.csv, finals.csv, manifest.txt")
    s.add_argument("--model", choices=[m.value for m in Model], default="besselB")
    model_args(s)
    s.add_argument("--dt", type=float, default=2e-4)
    s.add_argument("--t", type=float, required=True, help="final time")
    s.add_argument("--paths", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--init", default="step:0.01", help="comma list of N positions, or step:H for x_i = i*H")
    s.add_argument("--scale", choices=SCALES, default="none")
    s.add_argument("--bin-width", type=float, default=stats.DEFAULT_BIN_WIDTH)
    s.add_argument("--backend", choices=["cython", "python"], default=None)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    z = sub.add_parser("zeros", help="print polynomial zeros, ascending")
    z.add_argument("--family", choices=["laguerre", "hermite", "sqrt-laguerre"], required=True)
    z.add_argument("--n", type=int, required=True)
    z.add_argument("--alpha", type=float, default=0.0)
    z.add_argument("--out", default=None, help="optional CSV file")
    z.set_defaults(func=cmd_zeros)

    d = sub.add_parser("density", help="evaluate a pooled one-particle density on a grid")
    d.add_argument("--kind", choices=["exact-beta2", "steady-beta", "steady-nu", "laguerre-ensemble"], required=True)
    model_args(d)
    d.add_argument("--t", type=float, default=1.0)
    d.add_argument("--scale", choices=SCALES, default="none")
    d.add_argument("--grid", required=True, help="START:STOP:COUNT cell centers")
    d.add_argument("--samples", type=int, default=2000, help="Metropolis chains for N > 1 steady densities")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_density)

    c = sub.add_parser("compare", help="distance between hist.csv and density.csv")
    c.add_argument("--hist", required=True)
    c.add_argument("--density", required=True)
    c.add_argument("--norm", choices=["l1", "sup"], default="l1")
    c.add_argument("--tol", type=float, default=0.05)
    c.set_defaults(func=cmd_compare)

    k = sub.add_parser("kernel", help="series value of the type-B generalized Bessel function")
    k.add_argument("--x", required=True)
    k.add_argument("--y", required=True)
    model_args(k)
    k.add_argument("--max-degree", type=int, default=20)
    k.add_argument("--limit", choices=["beta", "nu"], default=None)
    k.set_defaults(func=cmd_kernel)

    r = sub.add_parser("rerun", help="re-run a command from its manifest")
    r.add_argument("manifest")
    r.add_argument("--out", default=None, help="output directory (default: the manifest's)")
    r.set_defaults(func=cmd_rerun)
    return p


def run(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, list(argv))
    except (InvalidInputError, DomainError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        return run(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

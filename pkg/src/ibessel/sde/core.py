"""Ensemble simulation of interacting Bessel processes and Dyson's model."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..dunkl import ModelParams
from ..errors import DomainError, InvalidInputError, StuckPathError
from . import _fallback
from .rng import ZIG_FI, ZIG_KI, ZIG_WI

MAX_HALVINGS = 20
HALVING_BITS = 20
STUCK_FRACTION = 1e-3
REJECT_FLAG_FRACTION = 1e-2


def _load_backend():
    if os.environ.get("IBESSEL_BACKEND", "").lower() == "python":
        return None
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_compiled = _load_backend()
BACKEND = "cython" if _compiled is not None else "python"


def available_backends():
    return ["cython", "python"] if _compiled is not None else ["python"]


class Model(enum.Enum):
    BESSEL_B = "besselB"
    DYSON_A = "dysonA"

    @property
    def code(self):
        return _fallback.BESSEL_B if self is Model.BESSEL_B else _fallback.DYSON_A


@dataclass(frozen=True)
class ParticleConfig:
    positions: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1)
        if pos.size == 0 or not np.all(np.isfinite(pos)):
            raise InvalidInputError("positions must be a nonempty finite vector")
        if np.any(np.diff(pos) <= 0):
            raise DomainError(f"positions must be strictly increasing: {pos}")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    def in_chamber(self, model):
        return Model(model) is Model.DYSON_A or self.positions[0] > 0


@dataclass(frozen=True)
class SimulationConfig:
    model: Model
    params: ModelParams
    dt: float
    t_final: float
    n_paths: int
    seed: int
    initial: ParticleConfig

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        if not isinstance(self.initial, ParticleConfig):
            object.__setattr__(self, "initial", ParticleConfig(self.initial))
        if not (self.dt > 0 and self.t_final > 0 and self.dt < self.t_final):
            raise InvalidInputError(f"need 0 < dt < t_final, got dt={self.dt}, t_final={self.t_final}")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise InvalidInputError(f"n_paths must be a positive integer, got {self.n_paths}")
        if int(self.seed) != self.seed or not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidInputError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "n_paths", int(self.n_paths))
        object.__setattr__(self, "seed", int(self.seed))
        if self.initial.positions.size != self.params.n_particles:
            raise InvalidInputError(
                f"initial configuration has {self.initial.positions.size} particles, expected {self.params.n_particles}"
            )
        if not self.initial.in_chamber(self.model):
            raise DomainError("BesselB initial configuration must satisfy 0 < x_1 < ... < x_N")

    @property
    def n_steps(self):
        return int(math.ceil(self.t_final / self.dt - 1e-12))

    @property
    def dt_effective(self):
        return self.t_final / self.n_steps


@dataclass(frozen=True)
class EnsembleResult:
    finals: np.ndarray
    rejected_steps: int
    config_echo: SimulationConfig
    accepted_steps: int = 0
    stuck_paths: tuple = field(default_factory=tuple)
    backend: str = BACKEND

    @property
    def boundary_flag(self):
        """True when rejections exceed 1% of accepted steps."""
        return self.rejected_steps > REJECT_FLAG_FRACTION * max(self.accepted_steps, 1)


def drift_bessel(x, params):
    """(beta/2) [(2 nu + 1)/(2 x_i) + sum_{j != i} 1/(x_i - x_j) + 1/(x_i + x_j)]."""
    x = np.asarray(getattr(x, "positions", x), dtype=float)
    if x[0] <= 0 or np.any(np.diff(x) <= 0):
        raise DomainError("x must lie strictly inside the type-B chamber")
    diff = x[:, None] - x[None, :]
    tot = x[:, None] + x[None, :]
    eye = np.eye(x.size, dtype=bool)
    pair = np.where(eye, 0.0, 1.0 / np.where(eye, 1.0, diff) + 1.0 / tot).sum(axis=1)
    return params.beta / 2 * ((2 * params.nu + 1) / (2 * x) + pair)


def drift_dyson(x, beta):
    """(beta/2) sum_{j != i} 1/(x_i - x_j)."""
    x = np.asarray(getattr(x, "positions", x), dtype=float)
    if np.any(np.diff(x) <= 0):
        raise DomainError("x must be strictly increasing")
    diff = x[:, None] - x[None, :]
    eye = np.eye(x.size, dtype=bool)
    return beta / 2 * np.where(eye, 0.0, 1.0 / np.where(eye, 1.0, diff)).sum(axis=1)


def step(state, dt, gaussians, model, params):
    """One Euler-Maruyama proposal; returns the new ParticleConfig or None if rejected."""
    model = Model(model)
    x = np.asarray(getattr(state, "positions", state), dtype=float)
    g = np.asarray(gaussians, dtype=float)
    if g.shape != x.shape:
        raise InvalidInputError(f"need {x.size} gaussians, got {g.size}")
    d = drift_bessel(x, params) if model is Model.BESSEL_B else drift_dyson(x, params.beta)
    y = x + d * dt + math.sqrt(dt) * g
    ok = _fallback.valid_batch(model.code, y[None, :])[0]
    return ParticleConfig(y) if ok else None


def _run_chunk(backend, config, start, stop):
    out = np.empty((stop - start, config.params.n_particles))
    args = (
        config.model.code,
        np.ascontiguousarray(config.initial.positions, dtype=float),
        config.params.beta,
        config.params.nu,
        config.dt_effective,
        config.n_steps,
        config.seed,
        start,
        out,
    )
    if backend == "cython":
        acc, rej, stuck = _compiled.run_paths(*args, ZIG_KI, ZIG_WI, ZIG_FI, MAX_HALVINGS, HALVING_BITS)
    else:
        acc, rej, stuck = _fallback.run_paths(*args, max_halvings=MAX_HALVINGS, halving_bits=HALVING_BITS)
    return start, out, acc, rej, stuck


def run_ensemble(config, backend=None, workers=1, chunk_size=None, chunk_order=None):
    """Integrate ``config.n_paths`` independent paths to ``config.t_final``.

    Path k draws its noise from the stream keyed by (seed, k), so the result
    does not depend on ``workers``, ``chunk_size`` or ``chunk_order``.
    Stuck paths appear as NaN rows; more than 0.1% stuck raises StuckPathError.
    """
    backend = BACKEND if backend is None else backend
    if backend not in available_backends():
        raise InvalidInputError(f"backend {backend!r} unavailable; have {available_backends()}")
    n = config.n_paths
    if chunk_size is None:
        chunk_size = 8192 if backend == "python" else max(1, -(-n // max(workers, 1)))
    bounds = [(s, min(s + chunk_size, n)) for s in range(0, n, chunk_size)]
    if chunk_order is not None:
        bounds = [bounds[i] for i in chunk_order]
    finals = np.empty((n, config.params.n_particles))
    acc_total = rej_total = 0
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda b: _run_chunk(backend, config, *b), bounds))
    else:
        results = [_run_chunk(backend, config, *b) for b in bounds]
    for start, out, acc, rej, _ in results:
        finals[start:start + out.shape[0]] = out
        acc_total += acc
        rej_total += rej
    stuck = tuple(int(i) for i in np.flatnonzero(np.isnan(finals).any(axis=1)))
    if len(stuck) > STUCK_FRACTION * n:
        raise StuckPathError(
            f"{len(stuck)} of {n} paths had more than {MAX_HALVINGS} consecutive rejections at the maximum halving depth (first: {stuck[:5]})",
            stuck,
        )
    finals.setflags(write=False)
    return EnsembleResult(
        finals=finals,
        rejected_steps=rej_total,
        config_echo=config,
        accepted_steps=acc_total,
        stuck_paths=stuck,
        backend=backend,
    )

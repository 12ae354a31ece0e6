"""One-step maps and simulation drivers.

Seven schemes: the Lie-Trotter (LT) and Strang (S) splitting methods, which
need a model with an exact nonlinear flow, and five Euler-Maruyama variants
(EM, tamed TEM, drift-and-diffusion tamed DTEM, truncated TrEM, drift-and-
diffusion truncated DTrEM), which only need the full drift.

All state arrays are shaped (..., d) so the same code advances a single
path or a whole batch of paths at once.  Ensembles assign one random
stream per path index; results are therefore byte-identical no matter how
many worker threads are used.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import PSDFactor, psd_factor
from .models import ModelSpec
from .noise import StreamKey, derive_stream

__all__ = [
    "METHOD_TAGS",
    "SPLITTING_METHODS",
    "EULER_METHODS",
    "normalize_method",
    "LinearPropagator",
    "StepContext",
    "make_step_context",
    "step_lie_trotter",
    "step_strang",
    "step_euler_family",
    "Trajectory",
    "Ensemble",
    "simulate_path",
    "simulate_ensemble",
]

METHOD_TAGS = ("LT", "S", "EM", "TEM", "DTEM", "TrEM", "DTrEM")
SPLITTING_METHODS = frozenset({"LT", "S"})
EULER_METHODS = frozenset({"EM", "TEM", "DTEM", "TrEM", "DTrEM"})

# default |x|_inf beyond which a path counts as numerically exploded; far
# above any meaningful scale for the models here, well below overflow
EXPLOSION_BOUND = 1e12

_CHUNK = 256  # fixed path chunk size; must not depend on the thread count


_METHOD_ALIASES = {"lie-trotter": "LT", "lietrotter": "LT", "strang": "S"}


def normalize_method(tag: str) -> str:
    low = tag.strip().lower()
    if low in _METHOD_ALIASES:
        return _METHOD_ALIASES[low]
    for known in METHOD_TAGS:
        if low == known.lower():
            return known
    raise ValueError(f"unknown method {tag!r} (expected one of {METHOD_TAGS})")


@dataclass(frozen=True)
class LinearPropagator:
    """Exact one-step data of the linear subequation for step size delta:
    e^{A delta}, C(delta) and a PSD factor of C(delta)."""

    delta: float
    exp_At: np.ndarray
    cov: np.ndarray
    factor: PSDFactor


@dataclass(frozen=True)
class StepContext:
    """Per-step-size precomputation shared by every iteration of a run."""

    delta: float
    propagator: Optional[LinearPropagator]


def make_propagator(model: ModelSpec, delta: float) -> LinearPropagator:
    E = model.exp_At(delta)
    C = model.cov(delta)
    return LinearPropagator(delta=delta, exp_At=E, cov=C, factor=psd_factor(C))


def make_step_context(model: ModelSpec, delta: float, method: str = "LT"):
    method = normalize_method(method)
    prop = make_propagator(model, delta) if method in SPLITTING_METHODS else None
    return StepContext(delta=delta, propagator=prop)


# ---------------------------------------------------------------------------
# one-step updates with the noise term supplied explicitly (batched)

def _lt_update(model, E, delta, x, xi):
    return model.flow(x, delta) @ E.T + xi


def _strang_update(model, E, delta, x, xi):
    half = 0.5 * delta
    return model.flow(model.flow(x, half) @ E.T + xi, half)


def _euler_update(variant, model, delta, x, sdw):
    """Advance one Euler-family step; sdw = Sigma sqrt(delta) psi, (..., d)."""
    F = model.full_drift(x)
    drift = F * delta
    if variant == "EM":
        return x + drift + sdw
    dn = np.linalg.norm(drift, axis=-1, keepdims=True)
    if variant == "TEM":
        return x + drift / (1.0 + dn) + sdw
    if variant == "TrEM":
        return x + drift / np.maximum(1.0, dn) + sdw
    if variant == "DTEM":
        nn = np.linalg.norm(sdw, axis=-1, keepdims=True)
        return x + (drift + sdw) / (1.0 + dn + nn)
    if variant == "DTrEM":
        incr = drift + sdw
        inorm = np.linalg.norm(incr, axis=-1, keepdims=True)
        return x + incr / np.maximum(1.0, delta * inorm)
    raise ValueError(f"unknown Euler-family variant {variant!r}")


def _make_update(model, method, delta, ctx):
    if method in SPLITTING_METHODS:
        E = ctx.propagator.exp_At
        if method == "LT":
            return lambda x, z: _lt_update(model, E, delta, x, z)
        return lambda x, z: _strang_update(model, E, delta, x, z)
    return lambda x, z: _euler_update(method, model, delta, x, z)


# ---------------------------------------------------------------------------
# public one-step maps drawing their own noise

def _draw_xi(factor: PSDFactor, rng, like):
    if like.ndim == 1:
        return factor.L @ rng.standard_normal(factor.L.shape[0])
    return rng.standard_normal((like.shape[0], factor.L.shape[0])) @ factor.L.T


def step_lie_trotter(ctx: StepContext, model: ModelSpec, x, rng):
    """x' = e^{A delta} f(x; delta) + xi with xi ~ N(0, C(delta))."""
    x = np.asarray(x, dtype=float)
    xi = _draw_xi(ctx.propagator.factor, rng, x)
    with np.errstate(over="ignore", invalid="ignore"):
        return _lt_update(model, ctx.propagator.exp_At, ctx.delta, x, xi)


def step_strang(ctx: StepContext, model: ModelSpec, x, rng):
    """x' = f( e^{A delta} f(x; delta/2) + xi ; delta/2 ), xi ~ N(0, C(delta))."""
    x = np.asarray(x, dtype=float)
    xi = _draw_xi(ctx.propagator.factor, rng, x)
    with np.errstate(over="ignore", invalid="ignore"):
        return _strang_update(model, ctx.propagator.exp_At, ctx.delta, x, xi)


def step_euler_family(variant: str, model: ModelSpec, x, delta: float, rng):
    """One step of an Euler-Maruyama variant with psi ~ N(0, I_m)."""
    variant = normalize_method(variant)
    if variant not in EULER_METHODS:
        raise ValueError(f"{variant} is not an Euler-family method")
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        psi = rng.standard_normal(model.m)
    else:
        psi = rng.standard_normal((x.shape[0], model.m))
    sdw = math.sqrt(delta) * psi @ model.Sigma.T
    with np.errstate(over="ignore", invalid="ignore"):
        return _euler_update(variant, model, delta, x, sdw)


# ---------------------------------------------------------------------------
# trajectories and ensembles

@dataclass(frozen=True)
class Trajectory:
    """One simulated path on the grid t_i = i * delta.

    If the path left the finite range (non-finite state or |x|_inf beyond
    the explosion bound), `exploded_at` is the index of the first offending
    state and the arrays are truncated there.
    """

    times: np.ndarray
    states: np.ndarray  # (n_kept, d)
    method: str
    key: StreamKey
    delta: float
    exploded_at: Optional[int] = None

    @property
    def exploded(self) -> bool:
        return self.exploded_at is not None


@dataclass(frozen=True)
class Ensemble:
    """Stacked paths with per-path stream indices 0..n_paths-1.

    states has shape (n_paths, n_steps + 1, d); entries after a path's
    explosion index are NaN.  exploded_at[l] is -1 for paths that stayed
    in range.
    """

    times: np.ndarray
    states: np.ndarray
    method: str
    master_seed: int
    delta: float
    exploded_at: np.ndarray  # (n_paths,), -1 = never

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    @property
    def n_exploded(self) -> int:
        return int(np.count_nonzero(self.exploded_at >= 0))

    def path(self, index: int) -> Trajectory:
        e = int(self.exploded_at[index])
        stop = self.states.shape[1] if e < 0 else e + 1
        return Trajectory(
            times=self.times[:stop].copy(),
            states=self.states[index, :stop].copy(),
            method=self.method,
            key=StreamKey(self.master_seed, index),
            delta=self.delta,
            exploded_at=None if e < 0 else e,
        )


def _pregenerate_noise(model, method, delta, n_steps, rngs, factor):
    """Per-path noise blocks, each drawn from that path's own stream."""
    c = len(rngs)
    if method in SPLITTING_METHODS:
        z = np.empty((c, n_steps, model.d))
        for i, rng in enumerate(rngs):
            z[i] = rng.standard_normal((n_steps, model.d))
        return z @ factor.L.T
    psi = np.empty((c, n_steps, model.m))
    for i, rng in enumerate(rngs):
        psi[i] = rng.standard_normal((n_steps, model.m))
    return math.sqrt(delta) * psi @ model.Sigma.T


def _in_range(x, explosion_bound):
    """Cheap scalar screen: True when every entry is finite and in range."""
    hi = float(x.max())
    lo = float(x.min())
    # NaN comparisons are False, so test the negation
    return hi <= explosion_bound and lo >= -explosion_bound


def _advance_block(update, x0, noise, out, exploded, explosion_bound):
    """Advance a block of paths, writing states into `out` (c, n+1, d)."""
    c, n_steps, _ = noise.shape
    x = np.tile(np.asarray(x0, dtype=float), (c, 1))
    out[:, 0] = x
    with np.errstate(all="ignore"):
        for i in range(n_steps):
            x = update(x, noise[:, i])
            out[:, i + 1] = x
            if _in_range(x, explosion_bound):
                continue
            bad = ~np.isfinite(x).all(axis=1) | (
                np.abs(x).max(axis=1) > explosion_bound
            )
            newly = bad & (exploded < 0)
            if newly.any():
                exploded[newly] = i + 1
            if bad.all():
                out[:, i + 2 :] = np.nan
                break
            x = np.where(bad[:, None], np.nan, x)


def _validate_sim_args(delta, n_steps, n_paths=1):
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")


def simulate_path(
    model: ModelSpec,
    method: str,
    delta: float,
    n_steps: int,
    x0,
    key: StreamKey,
    explosion_bound: float = EXPLOSION_BOUND,
) -> Trajectory:
    """Iterate one path of the chosen method; the step context (matrix
    exponential, covariance factor) is built once per call."""
    method = normalize_method(method)
    _validate_sim_args(delta, n_steps)
    ctx = make_step_context(model, delta, method)
    update = _make_update(model, method, delta, ctx)
    factor = ctx.propagator.factor if ctx.propagator else None
    rng = derive_stream(key)
    noise = _pregenerate_noise(model, method, delta, n_steps, [rng], factor)
    out = np.empty((1, n_steps + 1, model.d))
    exploded = np.full(1, -1, dtype=np.int64)
    _advance_block(update, x0, noise, out, exploded, explosion_bound)
    e = int(exploded[0])
    stop = n_steps + 1 if e < 0 else e + 1
    times = np.arange(stop) * delta
    return Trajectory(
        times=times,
        states=out[0, :stop],
        method=method,
        key=key,
        delta=delta,
        exploded_at=None if e < 0 else e,
    )


def simulate_ensemble(
    model: ModelSpec,
    method: str,
    delta: float,
    n_steps: int,
    x0,
    master_seed: int,
    n_paths: int,
    n_threads: Optional[int] = None,
    explosion_bound: float = EXPLOSION_BOUND,
) -> Ensemble:
    """Simulate n_paths independent paths (stream indices 0..n_paths-1).

    Paths are processed in fixed-size chunks; worker threads only change
    which chunk runs where, never the numbers, so output is identical for
    any thread count.  Exploded paths are kept (NaN past the explosion
    index) and counted, never dropped.
    """
    method = normalize_method(method)
    _validate_sim_args(delta, n_steps, n_paths)
    ctx = make_step_context(model, delta, method)
    update = _make_update(model, method, delta, ctx)
    factor = ctx.propagator.factor if ctx.propagator else None

    states = np.empty((n_paths, n_steps + 1, model.d))
    exploded = np.full(n_paths, -1, dtype=np.int64)
    starts = list(range(0, n_paths, _CHUNK))

    def run_chunk(start):
        stop = min(start + _CHUNK, n_paths)
        rngs = [
            derive_stream(StreamKey(master_seed, l)) for l in range(start, stop)
        ]
        noise = _pregenerate_noise(model, method, delta, n_steps, rngs, factor)
        _advance_block(
            update,
            x0,
            noise,
            states[start:stop],
            exploded[start:stop],
            explosion_bound,
        )

    if n_threads and n_threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=int(n_threads)) as pool:
            list(pool.map(run_chunk, starts))
    else:
        for start in starts:
            run_chunk(start)

    return Ensemble(
        times=np.arange(n_steps + 1) * delta,
        states=states,
        method=method,
        master_seed=master_seed,
        delta=delta,
        exploded_at=exploded,
    )

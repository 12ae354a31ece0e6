"""Reproducible random streams and Gaussian sampling.

Every path owns a stream derived from (master_seed, path_index), so
ensembles are reproducible regardless of how paths are distributed across
workers.  The module also provides the fine-grid approximation of the
stochastic convolution used to couple splitting methods and Euler-family
methods to one shared Brownian path in strong-convergence studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import PSDFactor, mat_exp

__all__ = [
    "StreamKey",
    "derive_stream",
    "sample_xi",
    "FineBrownianPath",
    "convolution_kernel",
    "xi_from_fine_path",
]


@dataclass(frozen=True)
class StreamKey:
    """Identifies one reproducible stream: a master seed plus path index."""

    master_seed: int
    path_index: int = 0


def derive_stream(key: StreamKey) -> np.random.Generator:
    """Deterministic, statistically independent stream for a path.

    (master_seed, path_index) is hashed through numpy's SeedSequence spawn
    mechanism, so distinct indices give independent streams and the same
    pair always reproduces the same sequence, independent of worker layout.
    """
    ss = np.random.SeedSequence(
        entropy=int(key.master_seed), spawn_key=(int(key.path_index),)
    )
    return np.random.Generator(np.random.PCG64(ss))


def sample_xi(factor: PSDFactor, rng: np.random.Generator, size=None):
    """Draw xi ~ N(0, C) where C = L L^T, as L z with z standard normal.

    With `size` = n, returns an (n, d) array of independent draws.
    """
    L = factor.L
    d = L.shape[0]
    if size is None:
        return L @ rng.standard_normal(d)
    return rng.standard_normal((int(size), d)) @ L.T


@dataclass(frozen=True)
class FineBrownianPath:
    """Brownian increments on a fine grid: increments[j] ~ N(0, delta_fine I_m)
    over [j delta_fine, (j+1) delta_fine]."""

    delta_fine: float
    increments: np.ndarray  # (n_fine, m)

    @classmethod
    def generate(cls, rng, n_fine: int, m: int, delta_fine: float):
        dW = math.sqrt(delta_fine) * rng.standard_normal((int(n_fine), int(m)))
        return cls(delta_fine=delta_fine, increments=dW)

    @property
    def total_time(self) -> float:
        return self.increments.shape[0] * self.delta_fine


def convolution_kernel(A, Sigma, delta_fine: float, n_sub: int) -> np.ndarray:
    """Left-point kernel for the stochastic convolution over one coarse step
    of length n_sub * delta_fine:  K[j] = e^{A (Delta - j delta_fine)} Sigma.

    Computed once per (step size, fine grid) and reused for every window.
    """
    A = np.asarray(A, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    delta = n_sub * delta_fine
    return np.stack(
        [mat_exp(A, delta - j * delta_fine) @ Sigma for j in range(n_sub)]
    )


def _window_indices(fine: FineBrownianPath, window):
    t0, t1 = window
    j0 = t0 / fine.delta_fine
    j1 = t1 / fine.delta_fine
    if (
        abs(j0 - round(j0)) > 1e-9
        or abs(j1 - round(j1)) > 1e-9
        or round(j1) <= round(j0)
        or round(j1) > fine.increments.shape[0]
        or round(j0) < 0
    ):
        raise ValueError(
            f"window {window} is not aligned to the fine grid "
            f"(delta_fine={fine.delta_fine})"
        )
    return int(round(j0)), int(round(j1))


def xi_from_fine_path(A, Sigma, fine: FineBrownianPath, window, kernel=None):
    """Approximate xi = int e^{A(Delta - s)} Sigma dW(s) over one coarse
    window by a left-point Riemann sum on the fine grid.

    The window endpoints must lie on the fine grid.  Passing a precomputed
    `kernel` (from `convolution_kernel`) skips the matrix exponentials.
    """
    j0, j1 = _window_indices(fine, window)
    n_sub = j1 - j0
    if kernel is None:
        kernel = convolution_kernel(A, Sigma, fine.delta_fine, n_sub)
    elif kernel.shape[0] != n_sub:
        raise ValueError(
            f"kernel covers {kernel.shape[0]} sub-steps, window has {n_sub}"
        )
    return np.einsum("jdm,jm->d", kernel, fine.increments[j0:j1])


def xi_all_windows(kernel: np.ndarray, increments: np.ndarray) -> np.ndarray:
    """Vectorised `xi_from_fine_path` over every consecutive coarse window.

    increments has shape (..., n_coarse * n_sub, m); returns (..., n_coarse, d).
    """
    n_sub, d, m = kernel.shape
    lead = increments.shape[:-2]
    n_fine = increments.shape[-2]
    if n_fine % n_sub:
        raise ValueError("increment count is not a multiple of the window size")
    blocks = increments.reshape(*lead, n_fine // n_sub, n_sub, m)
    return np.einsum("jdm,...cjm->...cd", kernel, blocks)

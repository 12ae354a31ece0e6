"""Model definitions.

The generic semi-linear SDE

    dX = (A X + N(X)) dt + Sigma dW

is described by a `ModelSpec`: the linear part A, the diffusion matrix
Sigma, the nonlinear drift N and the exact flow f(x; t) of dx/dt = N(x).
Two concrete models ship with the package: the cubic scalar toy problem
(A = -1, N(x) = x - x^3) and the FitzHugh-Nagumo neuron model, both with
closed-form propagators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import linalg
from .linalg import _cosh_sinhc

__all__ = [
    "ModelSpec",
    "ToyParams",
    "FhnParams",
    "toy_flow",
    "fhn_flow",
    "fhn_kappa",
    "fhn_mat_exp",
    "fhn_cov",
    "fhn_stationary_cov",
    "build_model",
]

# switch to the critically damped closed forms below this |kappa|; the
# general covariance formulas divide by kappa and lose precision there
_KAPPA_EPS = 1e-8


@dataclass(frozen=True)
class ToyParams:
    """Cubic toy SDE dX = -X^3 dt + sigma dW, split with A = -1."""

    sigma: float


@dataclass(frozen=True)
class FhnParams:
    """FitzHugh-Nagumo parameters.

    eps is the time-scale separation, gamma and beta shape the recovery
    variable, sigma1/sigma2 are the noise intensities on V and U.
    sigma1 = 0 is the hypoelliptic regime.
    """

    eps: float
    gamma: float
    beta: float = 0.0
    sigma1: float = 0.0
    sigma2: float = 1.0


def toy_flow(x, t):
    """Exact flow of dx/dt = x - x^3:

        f(x; t) = x / sqrt(e^{-2t} + x^2 (1 - e^{-2t})).

    Vectorised over x; stable for arbitrarily large |x| (the large-|x|
    branch divides through by x^2 before taking the square root).
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    x = np.asarray(x, dtype=float)
    if t == 0.0:
        return x.copy() if x.ndim else float(x)
    decay = math.exp(-2.0 * t)
    grow = -math.expm1(-2.0 * t)  # 1 - e^{-2t}, accurate for small t
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        small = np.abs(x) <= 1.0
        direct = x / np.sqrt(decay + x * x * grow)
        scaled = np.sign(x) / np.sqrt(decay / (x * x) + grow)
        out = np.where(small, direct, scaled)
    return out if x.ndim else float(out)


def fhn_kappa(p: FhnParams) -> float:
    """Damping discriminant 4*gamma/eps - 1 of the linear subequation."""
    return 4.0 * p.gamma / p.eps - 1.0


def fhn_drift_matrix(p: FhnParams) -> np.ndarray:
    """Linear part A = [[0, -1/eps], [gamma, -1]] of the splitting."""
    return np.array([[0.0, -1.0 / p.eps], [p.gamma, -1.0]])


def fhn_nonlinear(x, p: FhnParams):
    """N(x) = ((v - v^3)/eps, beta) for states shaped (..., 2)."""
    x = np.asarray(x, dtype=float)
    v = x[..., 0]
    out = np.empty_like(x)
    with np.errstate(over="ignore", invalid="ignore"):
        out[..., 0] = (v - v * v * v) / p.eps
    out[..., 1] = p.beta
    return out


def fhn_flow(x, t, p: FhnParams):
    """Exact flow of dx/dt = N(x): the V-part is the cubic flow run at rate
    1/eps, the U-part advances linearly by beta*t."""
    if t < 0:
        raise ValueError("t must be >= 0")
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    out[..., 0] = toy_flow(x[..., 0], t / p.eps)
    out[..., 1] = x[..., 1] + p.beta * t
    return out


def fhn_mat_exp(p: FhnParams, t: float) -> np.ndarray:
    """Closed-form e^{A t} of the damped-oscillator subequation.

    The shape follows the sign of kappa: trigonometric when weakly damped
    (kappa > 0), hyperbolic when over-damped (kappa < 0), and the
    polynomial-times-exponential critically damped form at kappa = 0; all
    three are produced by the same confluent evaluation.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    kappa = fhn_kappa(p)
    half = 0.5 * t
    c, sinc = _cosh_sinhc(-kappa * half * half)
    s = half * sinc  # = sin(sqrt(k) t/2)/sqrt(k), resp. sinh for k < 0
    damp = math.exp(-half)
    return damp * np.array(
        [
            [c + s, -2.0 * s / p.eps],
            [2.0 * p.gamma * s, c - s],
        ]
    )


def fhn_stationary_cov(p: FhnParams) -> np.ndarray:
    """Covariance of the invariant law of the linear subequation."""
    e, g = p.eps, p.gamma
    s1, s2 = p.sigma1**2, p.sigma2**2
    c11 = (e / (2.0 * g)) * (s1 + g * s1 / e + s2 / (e * e))
    c12 = 0.5 * e * s1
    c22 = 0.5 * (e * g * s1 + s2)
    return np.array([[c11, c12], [c12, c22]])


def _fhn_cov_critical(p: FhnParams, t: float) -> np.ndarray:
    # kappa = 0 closed forms, rearranged so that only e^{-t} appears
    e = p.eps
    s1, s2 = p.sigma1**2, p.sigma2**2
    emt = math.exp(-t)
    c11 = (
        4.0 * s2 * (2.0 - 2.0 * emt - emt * t * (2.0 + t))
        + e * e * s1 * (10.0 - 10.0 * emt - emt * t * (6.0 + t))
    ) / (4.0 * e * e)
    c12 = (
        -4.0 * s2 * t * t * emt + e * e * s1 * (4.0 - emt * (2.0 + t) ** 2)
    ) / (8.0 * e)
    c22 = (
        4.0 * s2 * (2.0 - 2.0 * emt - emt * (t - 2.0) * t)
        + e * e * s1 * (2.0 - 2.0 * emt - emt * t * (2.0 + t))
    ) / 16.0
    return np.array([[c11, c12], [c12, c22]])


def fhn_cov(p: FhnParams, t: float) -> np.ndarray:
    """Closed-form covariance C(t) of the stochastic convolution.

    Branches on the sign of kappa like `fhn_mat_exp`; within 1e-8 of the
    critical damping the kappa = 0 forms are used because the general
    expressions divide by kappa.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return np.zeros((2, 2))
    kappa = fhn_kappa(p)
    if abs(kappa) < _KAPPA_EPS:
        return _fhn_cov_critical(p, t)
    e, g = p.eps, p.gamma
    s1, s2 = p.sigma1**2, p.sigma2**2
    cc, sinc = _cosh_sinhc(-kappa * t * t)
    S = t * sinc  # sin(sqrt(k) t)/sqrt(k), resp. sinh for k < 0
    emt = math.exp(-t)
    inf_ = fhn_stationary_cov(p)
    c11 = inf_[0, 0] + (e * emt / (2.0 * g * kappa)) * (
        -(4.0 * g / (e * e)) * (s1 * g + s2 / e)
        + (s1 * (1.0 - 3.0 * g / e) + s2 / (e * e)) * cc
        - (s1 * (1.0 - g / e) + s2 / (e * e)) * kappa * S
    )
    c12 = inf_[0, 1] + (e * emt / (2.0 * kappa)) * (
        -(2.0 / e) * (s1 * g + s2 / e)
        + (s1 * (1.0 - 2.0 * g / e) + 2.0 * s2 / (e * e)) * cc
        - s1 * kappa * S
    )
    c22 = inf_[1, 1] + (e * emt / (2.0 * kappa)) * (
        (s2 / e + s1 * g) * (cc - 4.0 * g / e)
        + (s2 / e - s1 * g) * kappa * S
    )
    return np.array([[c11, c12], [c12, c22]])


@dataclass(frozen=True)
class ModelSpec:
    """A semi-linear SDE with additive noise and an exactly solvable
    nonlinear subequation.

    `nonlinear_drift`, `flow` and `full_drift` are vectorised over leading
    axes: they map (..., d) -> (..., d).  `exp_At` and `cov` return the
    propagator pieces e^{At} and C(t) of the linear subequation (closed
    forms for the built-in models, generic linalg otherwise).  `constants`
    carries the model's known assumption constants (c1, c2, chi, c4, ...)
    for the structural checks; absent entries mean "not established".
    """

    d: int
    m: int
    A: np.ndarray
    Sigma: np.ndarray
    nonlinear_drift: Callable[[np.ndarray], np.ndarray]
    flow: Callable[[np.ndarray, float], np.ndarray]
    label: str
    exp_At: Callable[[float], np.ndarray]
    cov: Callable[[float], np.ndarray]
    constants: dict = field(default_factory=dict)

    def full_drift(self, x):
        """F(x) = A x + N(x)."""
        x = np.asarray(x, dtype=float)
        return x @ self.A.T + self.nonlinear_drift(x)


def _validate(errors):
    if errors:
        raise ValueError("invalid model parameters: " + "; ".join(errors))


def _build_toy(sigma: float) -> ModelSpec:
    errors = []
    if not (sigma > 0):
        errors.append(f"sigma must be > 0, got {sigma}")
    _validate(errors)
    A = np.array([[-1.0]])
    Sigma = np.array([[float(sigma)]])

    def nonlinear(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            return x - x * x * x

    def flow(x, t):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        out[..., 0] = toy_flow(x[..., 0], t)
        return out

    def exp_At(t):
        return np.array([[math.exp(-t)]])

    def cov(t):
        return np.array([[0.5 * sigma * sigma * -math.expm1(-2.0 * t)]])

    return ModelSpec(
        d=1,
        m=1,
        A=A,
        Sigma=Sigma,
        nonlinear_drift=nonlinear,
        flow=flow,
        label=f"toy(sigma={sigma})",
        exp_At=exp_At,
        cov=cov,
        constants={
            "c1": 1.0,
            "c2": 16.0,
            "chi": 3.0,
            "c4": 0.5,
            "q": 2,
            "alpha": 2.0,
            "delta": 2.0,
        },
    )


def _build_fhn(p: FhnParams) -> ModelSpec:
    errors = []
    if not (p.eps > 0):
        errors.append(f"eps must be > 0, got {p.eps}")
    if not (p.gamma > 0):
        errors.append(f"gamma must be > 0, got {p.gamma}")
    if not (p.beta >= 0):
        errors.append(f"beta must be >= 0, got {p.beta}")
    if not (p.sigma1 >= 0):
        errors.append(f"sigma1 must be >= 0, got {p.sigma1}")
    if not (p.sigma2 > 0):
        errors.append(f"sigma2 must be > 0, got {p.sigma2}")
    _validate(errors)

    constants = {
        "c1": 1.0 / p.eps,
        "c2": 16.0 / p.eps**2,
        "chi": 3.0,
        "q": 2,
    }
    if p.beta == 0.0:
        # the quadratic growth bound on the flow needs beta = 0
        constants["c4"] = 0.5 / p.eps
    c = abs(p.gamma - 1.0 / p.eps)
    if 1.0 / p.eps > 0.5 * c and 1.0 - p.beta > 0.5 * c:
        constants["alpha"] = p.beta + 1.0 / p.eps
        constants["delta"] = min(1.0 / p.eps - 0.5 * c, 1.0 - p.beta - 0.5 * c)

    return ModelSpec(
        d=2,
        m=2,
        A=fhn_drift_matrix(p),
        Sigma=np.diag([p.sigma1, p.sigma2]).astype(float),
        nonlinear_drift=lambda x: fhn_nonlinear(x, p),
        flow=lambda x, t: fhn_flow(x, t, p),
        label=(
            f"fhn(eps={p.eps},gamma={p.gamma},beta={p.beta},"
            f"sigma1={p.sigma1},sigma2={p.sigma2})"
        ),
        exp_At=lambda t: fhn_mat_exp(p, t),
        cov=lambda t: fhn_cov(p, t),
        constants=constants,
    )


def _build_custom(
    A,
    Sigma,
    nonlinear_drift,
    flow,
    label="custom",
    constants=None,
    exp_At=None,
    cov=None,
) -> ModelSpec:
    A = np.asarray(A, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    errors = []
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        errors.append(f"A must be square, got shape {A.shape}")
    if Sigma.ndim != 2 or (not errors and Sigma.shape[0] != A.shape[0]):
        errors.append(f"Sigma must be d x m, got shape {Sigma.shape}")
    _validate(errors)
    d = A.shape[0]
    probe = np.full(d, 0.25)
    if not np.array_equal(np.asarray(flow(probe, 0.0), dtype=float), probe):
        raise ValueError("flow(x, 0) must return x exactly")
    spec = ModelSpec(
        d=d,
        m=Sigma.shape[1],
        A=A,
        Sigma=Sigma,
        nonlinear_drift=nonlinear_drift,
        flow=flow,
        label=label,
        exp_At=exp_At or (lambda t: linalg.mat_exp(A, t)),
        cov=cov or (lambda t: linalg.cov_quadrature(A, Sigma, t)),
        constants=dict(constants or {}),
    )
    return spec


def build_model(kind: str, **params) -> ModelSpec:
    """Assemble a ModelSpec.

    kind "toy" takes sigma; "fhn" takes eps, gamma, beta, sigma1, sigma2;
    "custom" takes A, Sigma, nonlinear_drift, flow and optional label,
    constants, exp_At, cov overrides.  Invalid parameters raise ValueError
    listing every violation.
    """
    if kind == "toy":
        return _build_toy(**params)
    if kind == "fhn":
        return _build_fhn(FhnParams(**params))
    if kind == "custom":
        return _build_custom(**params)
    raise ValueError(f"unknown model kind {kind!r} (expected toy|fhn|custom)")

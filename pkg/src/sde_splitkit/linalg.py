"""Dense small-matrix primitives.

Matrix exponential, spectral and logarithmic norms, the covariance integral
of the stochastic convolution, and PSD square roots.  Everything here works
on plain ndarrays and is pure, so it is safe to call from worker threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NotPSDError",
    "QuadratureError",
    "PSDFactor",
    "mat_exp",
    "log_norm",
    "spectral_norm",
    "cov_quadrature",
    "psd_factor",
]


class NotPSDError(ValueError):
    """A matrix that must be positive semidefinite has a genuinely negative
    eigenvalue (beyond roundoff scale)."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge within its node budget."""


def _as_square(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def _cosh_sinhc(s2):
    """Return (cosh(s), sinh(s)/s) as functions of s^2.

    s^2 may be negative, in which case the pair is (cos(w), sin(w)/w) with
    w = sqrt(-s^2).  The confluent limit s -> 0 is handled by a short series,
    which keeps the formula exact through the defective-eigenvalue case.
    """
    if abs(s2) < 1e-12:
        # |s| < 1e-6: truncation error below 1e-38
        return 1.0 + s2 / 2.0 + s2 * s2 / 24.0, 1.0 + s2 / 6.0 + s2 * s2 / 120.0
    if s2 > 0.0:
        s = math.sqrt(s2)
        return math.cosh(s), math.sinh(s) / s
    w = math.sqrt(-s2)
    return math.cos(w), math.sin(w) / w


def _expm_2x2(M):
    """Exact exponential of a real 2x2 matrix via its eigenstructure.

    Write M = m*I + B with trace(B) = 0; then B^2 = s^2 * I and
    e^M = e^m (cosh(s) I + sinh(s)/s B), valid for real, complex and
    coincident eigenvalue pairs alike.
    """
    m = 0.5 * (M[0, 0] + M[1, 1])
    B = M - m * np.eye(2)
    s2 = B[0, 0] * B[0, 0] + B[0, 1] * B[1, 0]  # B^2 = s2 * I
    c, sc = _cosh_sinhc(s2)
    em = math.exp(m)
    return em * c * np.eye(2) + em * sc * B


def mat_exp(A, t):
    """Matrix exponential e^{A t}.

    t may be negative.  Dimensions 1 and 2 use closed forms (the 2x2 formula
    is exact also in the defective case, which is the critically damped
    regime of the models in this package); larger matrices fall back to
    scipy's Pade scaling-and-squaring.
    """
    A = _as_square(A)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    d = A.shape[0]
    M = A * float(t)
    if d == 1:
        out = np.array([[math.exp(M[0, 0])]])  # math.exp raises OverflowError
    elif d == 2:
        out = _expm_2x2(M)
    else:
        from scipy.linalg import expm

        out = expm(M)
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"e^(A t) overflows for |At| ~ {np.abs(M).max():g}")
    return out


def log_norm(A):
    """Logarithmic norm mu(A) = lambda_max((A + A^T)/2) (Euclidean)."""
    A = _as_square(A)
    return float(np.linalg.eigvalsh(0.5 * (A + A.T)).max())


def spectral_norm(M):
    """Euclidean operator norm: the largest singular value of M."""
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    if M.ndim != 2:
        M = np.atleast_2d(M)
    return float(np.linalg.norm(M, 2))


# 16-point Gauss-Legendre rule on [-1, 1], mapped per panel
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def cov_quadrature(A, Sigma, t, tol=1e-10, max_nodes=2**20):
    """Covariance of the stochastic convolution over [0, t],

        C(t) = int_0^t e^{A(t-s)} Sigma Sigma^T (e^{A(t-s)})^T ds,

    by adaptive Gauss-Legendre panels: the panel count doubles until two
    successive estimates agree to relative tolerance `tol` (Frobenius).
    """
    A = _as_square(A)
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.ndim != 2 or Sigma.shape[0] != A.shape[0]:
        raise ValueError(
            f"Sigma must be {A.shape[0]} x m, got shape {Sigma.shape}"
        )
    if not (t >= 0.0):
        raise ValueError("t must be >= 0")
    if not (tol > 0.0):
        raise ValueError("tol must be > 0")
    d = A.shape[0]
    if t == 0.0:
        return np.zeros((d, d))
    Q = Sigma @ Sigma.T

    def estimate(n_panels):
        # substitute u = t - s:  C = int_0^t e^{Au} Q e^{A^T u} du
        edges = np.linspace(0.0, t, n_panels + 1)
        acc = np.zeros((d, d))
        for a, b in zip(edges[:-1], edges[1:]):
            half = 0.5 * (b - a)
            mid = 0.5 * (a + b)
            for x, w in zip(_GL_NODES, _GL_WEIGHTS):
                E = mat_exp(A, mid + half * x)
                acc += (w * half) * (E @ Q @ E.T)
        return acc

    n_panels = 1
    prev = estimate(n_panels)
    while True:
        n_panels *= 2
        if n_panels * len(_GL_NODES) > max_nodes:
            raise QuadratureError(
                f"covariance quadrature did not converge to tol={tol:g} "
                f"within {max_nodes} nodes (t={t:g}, last panel count "
                f"{n_panels // 2})"
            )
        cur = estimate(n_panels)
        scale = max(np.linalg.norm(cur), np.finfo(float).tiny)
        if np.linalg.norm(cur - prev) <= tol * scale:
            break
        prev = cur
    return 0.5 * (cur + cur.T)  # scrub roundoff asymmetry


@dataclass(frozen=True)
class PSDFactor:
    """Square root L of a PSD matrix, with L @ L.T reconstructing it.

    `clip_count` records how many (roundoff-scale) negative eigenvalues were
    clipped to zero by the eigendecomposition fallback.
    """

    L: np.ndarray
    original: np.ndarray
    clip_count: int


def psd_factor(C):
    """Factor a symmetric PSD matrix as L @ L.T.

    Uses a Cholesky factor when C is strictly positive definite; otherwise
    falls back to a symmetric eigendecomposition, clipping roundoff-negative
    eigenvalues.  An eigenvalue below -1e-9 * lambda_max signals a genuine
    covariance bug and raises NotPSDError.
    """
    C = _as_square(C, name="C")
    scale = np.abs(C).max()
    if scale > 0 and np.abs(C - C.T).max() > 1e-12 * scale:
        raise ValueError("C is not symmetric (beyond 1e-12 relative)")
    C = 0.5 * (C + C.T)
    try:
        L = np.linalg.cholesky(C)
        return PSDFactor(L=L, original=C, clip_count=0)
    except np.linalg.LinAlgError:
        pass
    w, V = np.linalg.eigh(C)
    lam_max = max(float(w.max()), 0.0)
    if float(w.min()) < -1e-9 * lam_max:
        raise NotPSDError(
            f"matrix has eigenvalue {w.min():g} < -1e-9 * lambda_max "
            f"({lam_max:g}); not a covariance roundoff artefact"
        )
    clip_count = int(np.count_nonzero(w < 0.0))
    w = np.clip(w, 0.0, None)
    L = V * np.sqrt(w)
    return PSDFactor(L=L, original=C, clip_count=clip_count)

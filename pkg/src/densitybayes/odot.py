"""
The commutative product ``S (.) T = exp(log S + log T)``
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
For strictly positive definite inputs the product is computed in the log
domain directly. When either input is singular the product lives on the
intersection of the two ranges::

    S (.) T = B exp(B^T (log+ S + log+ T) B) B^T

where the columns of ``B`` are an orthonormal basis of
``range(S) & range(T)``. The Lie-Trotter limit ``(S^(1/m) T^(1/m))^m`` is
provided as an independent reference implementation.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import DimensionMismatch
from .symmat import (
    REL_ZERO_TOL,
    SpectralMatrix,
    as_spectral,
    is_strictly_pd,
    jacobi_eigh,
    mat_exp,
    mat_log_plus,
    psd_eigenvalues,
    range_basis,
    zero_threshold,
)

INTERSECTION_EIG_TOL = 1e-8


@dataclass(frozen=True)
class OdotResult:
    matrix: SpectralMatrix
    common_range_dim: int
    used_limit_form: bool


@dataclass(frozen=True)
class LieLimit:
    """Symmetrized ``(S^(1/2^k) T^(1/2^k))^(2^k)`` and its asymmetry before symmetrization."""

    matrix: SpectralMatrix
    asymmetry: float
    depth: int


def _pair(s, t) -> tuple[SpectralMatrix, SpectralMatrix]:
    s = as_spectral(s)
    t = as_spectral(t)
    if s.n != t.n:
        raise DimensionMismatch(f"odot of {s.n}x{s.n} and {t.n}x{t.n} matrices")
    psd_eigenvalues(s, "S")
    psd_eigenvalues(t, "T")
    return s, t


def range_intersection_basis(s, t, rel_zero_tol: float = REL_ZERO_TOL) -> np.ndarray:
    """Orthonormal columns spanning ``range(S) & range(T)``.

    A unit vector lies in both ranges exactly when it is an eigenvector of
    ``(P_S + P_T) / 2`` with eigenvalue 1, where ``P_X`` is the orthogonal
    projector onto ``range(X)``.
    """
    s, t = _pair(s, t)
    bs = range_basis(s, rel_zero_tol)
    bt = range_basis(t, rel_zero_tol)
    n = s.n
    if bs.shape[1] == n:
        return bt
    if bt.shape[1] == n:
        return bs
    avg = 0.5 * (bs @ bs.T + bt @ bt.T)
    sp = jacobi_eigh(0.5 * (avg + avg.T))
    keep = sp.eigenvalues > 1.0 - INTERSECTION_EIG_TOL
    return sp.eigenvectors[:, keep]


def odot(s, t, rel_zero_tol: float = REL_ZERO_TOL) -> OdotResult:
    """Commutative, PSD-preserving product of two PSD matrices.

    Raises
    ------
    NotPSD
        If either input has a materially negative eigenvalue.
    DimensionMismatch
        If the inputs differ in size.
    """
    s, t = _pair(s, t)
    n = s.n
    if is_strictly_pd(s, rel_zero_tol) and is_strictly_pd(t, rel_zero_tol):
        total = mat_log_plus(s, rel_zero_tol).data + mat_log_plus(t, rel_zero_tol).data
        return OdotResult(mat_exp(SpectralMatrix(total, _trusted=True)), n, False)

    b = range_intersection_basis(s, t, rel_zero_tol)
    k = b.shape[1]
    if k == 0:
        return OdotResult(SpectralMatrix(np.zeros((n, n)), _trusted=True), 0, True)
    logs = mat_log_plus(s, rel_zero_tol).data + mat_log_plus(t, rel_zero_tol).data
    inner = mat_exp(SpectralMatrix(b.T @ logs @ b, _trusted=True))
    return OdotResult(SpectralMatrix(b @ inner.data @ b.T, _trusted=True), k, True)


def odot_all(*mats, rel_zero_tol: float = REL_ZERO_TOL) -> SpectralMatrix:
    """Left fold of :func:`odot` over two or more matrices."""
    if len(mats) < 2:
        raise ValueError("odot_all needs at least two matrices")
    return reduce(lambda a, b: odot(a, b, rel_zero_tol).matrix, mats)


def _power_minus_identity(m: SpectralMatrix, p: float) -> np.ndarray:
    # M^p - I with eigenvalues expm1(p log lambda); exact zeros map to -1
    lam = psd_eigenvalues(m)
    zero = lam <= zero_threshold(float(lam[0]))
    vals = np.expm1(p * np.log(np.where(zero, 1.0, lam)))
    vals[zero] = -1.0
    q = m.eigenvectors
    return (q * vals) @ q.T


def odot_lie_limit(s, t, k: int) -> LieLimit:
    """Reference value ``(S^(1/2^k) T^(1/2^k))^(2^k)`` by repeated squaring.

    Near-identity factors are carried as ``I + E`` and squared as
    ``E <- 2E + E^2`` so that the perturbation is not lost to rounding
    against the identity at large ``k``.
    """
    if k < 0:
        raise ValueError("halving depth k must be non-negative")
    s, t = _pair(s, t)
    p = 0.5 ** k
    es = _power_minus_identity(s, p)
    et = _power_minus_identity(t, p)
    e = es + et + es @ et
    for _ in range(k):
        e = 2.0 * e + e @ e
    x = np.eye(s.n) + e
    asym = float(np.linalg.norm(x - x.T))
    return LieLimit(SpectralMatrix(x, _trusted=True), asym, k)


def golden_thompson_gap(s, t) -> float:
    """``tr(S T) - tr(S (.) T)``, which is non-negative for PSD inputs."""
    s, t = _pair(s, t)
    return float(np.sum(s.data * t.data)) - odot(s, t).matrix.trace()

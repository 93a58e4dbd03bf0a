"""
Dense real symmetric matrices
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
The :class:`SpectralMatrix` value type, a cyclic Jacobi eigensolver, and the
spectral matrix functions (exp, log, log+, fractional powers, pseudo-inverse)
that every other module is built on.

Matrix functions are computed by transforming eigenvalues:
``f(M) = Q diag(f(lambda)) Q^T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    AsymmetricInput,
    BadRank,
    ConvergenceFailure,
    NonSquare,
    NotPSD,
    NotStrictlyPD,
)

REL_ZERO_TOL = 1e-10
ABS_ZERO_TOL = 1e-14
SMALL_LAMBDA_MAX = 1e-4
NEG_EIG_TOL = 1e-9
SYMMETRY_TOL = 1e-9

JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_TOL = 1e-14


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in non-increasing order with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        m = (q * self.eigenvalues) @ q.T
        return 0.5 * (m + m.T)


class SpectralMatrix:
    """Immutable dense symmetric matrix with a lazily cached eigendecomposition.

    Construction from raw values goes through :func:`symmetrize_build`
    semantics: the input must be square and symmetric to within
    ``1e-9 * max(1, max|raw|)``; it is then replaced by ``(raw + raw^T) / 2``.
    """

    __slots__ = ("_data", "_spectrum")
    __array_priority__ = 10

    def __init__(self, raw, *, _trusted: bool = False):
        if isinstance(raw, SpectralMatrix):
            self._data = raw._data
            self._spectrum = raw._spectrum
            return
        arr = np.array(raw, dtype=float)
        if not _trusted:
            _check_symmetric(arr)
        arr = 0.5 * (arr + arr.T)
        arr.flags.writeable = False
        self._data = arr
        self._spectrum = None

    @classmethod
    def _with_spectrum(cls, data: np.ndarray, spectrum: Spectrum | None):
        obj = SpectralMatrix.__new__(cls)
        data = 0.5 * (data + data.T)
        data.flags.writeable = False
        obj._data = data
        obj._spectrum = spectrum
        return obj

    @property
    def data(self) -> np.ndarray:
        """Read-only ``n x n`` array of entries."""
        return self._data

    @property
    def n(self) -> int:
        return self._data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data
        return self._data.astype(dtype)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        body = np.array2string(self._data, precision=6, suppress_small=True)
        return f"{type(self).__name__}(n={self.n},\n{body})"

    def spectrum(self) -> Spectrum:
        if self._spectrum is None:
            self._spectrum = jacobi_eigh(self._data)
        return self._spectrum

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum().eigenvalues

    @property
    def eigenvectors(self) -> np.ndarray:
        return self.spectrum().eigenvectors

    def trace(self) -> float:
        return float(np.trace(self._data))

    def frobenius(self) -> float:
        return float(np.linalg.norm(self._data))


def _check_symmetric(arr: np.ndarray) -> None:
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {arr.shape}")
    if arr.size == 0:
        raise NonSquare("empty matrix")
    scale = max(1.0, float(np.max(np.abs(arr))))
    asym = float(np.max(np.abs(arr - arr.T)))
    if not asym <= SYMMETRY_TOL * scale:
        raise AsymmetricInput(
            f"max |M - M^T| = {asym:.3e} exceeds {SYMMETRY_TOL * scale:.3e}"
        )


def symmetrize_build(raw) -> SpectralMatrix:
    """Validate near-symmetry of ``raw`` and return ``(raw + raw^T) / 2``.

    Raises
    ------
    NonSquare
        If ``raw`` is not a square 2-D array.
    AsymmetricInput
        If ``max|raw - raw^T|`` exceeds ``1e-9 * max(1, max|raw|)``.
    """
    return SpectralMatrix(raw)


def as_array(m) -> np.ndarray:
    if isinstance(m, SpectralMatrix):
        return m.data
    return np.asarray(m, dtype=float)


def as_spectral(m) -> SpectralMatrix:
    if isinstance(m, SpectralMatrix):
        return m
    return SpectralMatrix(m)


# ---------------------------------------------------------------------------
# Eigensolver
# ---------------------------------------------------------------------------


def jacobi_eigh(a, max_sweeps: int = JACOBI_MAX_SWEEPS) -> Spectrum:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps over all (p, q) pairs, annihilating each off-diagonal entry with a
    plane rotation, until the off-diagonal Frobenius norm drops below
    ``1e-14 * ||a||_F``. Eigenvalues are returned in non-increasing order;
    each eigenvector is signed so that its largest-magnitude component is
    positive, which makes the output deterministic.

    Raises
    ------
    ConvergenceFailure
        If the off-diagonal mass has not converged after ``max_sweeps`` sweeps.
    """
    work = np.array(a, dtype=float)
    n = work.shape[0]
    if n == 1:
        return Spectrum(work[0].copy(), np.ones((1, 1)))
    # Plain nested lists are much faster than numpy slicing at desk-scale n.
    A = work.tolist()
    V = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    fro = math.sqrt(sum(x * x for row in A for x in row))
    target = JACOBI_OFF_TOL * fro
    rng = range(n)

    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            row = A[p]
            for q in range(p + 1, n):
                off += row[q] * row[q]
        off = math.sqrt(2.0 * off)
        if off <= target:
            break
        if sweep == max_sweeps:
            raise ConvergenceFailure(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {off:.3e}, target {target:.3e})"
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p][q]
                if apq == 0.0:
                    continue
                app = A[p][p]
                aqq = A[q][q]
                # Entries below the diagonal's resolution are dropped outright.
                if sweep > 3 and abs(app) + 100.0 * abs(apq) == abs(app) and \
                        abs(aqq) + 100.0 * abs(apq) == abs(aqq):
                    A[p][q] = A[q][p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                if math.isinf(theta * theta):
                    t = 1.0 / (2.0 * theta)
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for r in rng:
                    Ar = A[r]
                    arp = Ar[p]
                    arq = Ar[q]
                    Ar[p] = c * arp - s * arq
                    Ar[q] = s * arp + c * arq
                Ap = A[p]
                Aq = A[q]
                for r in rng:
                    apr = Ap[r]
                    aqr = Aq[r]
                    Ap[r] = c * apr - s * aqr
                    Aq[r] = s * apr + c * aqr
                Ap[q] = 0.0
                Aq[p] = 0.0
                for r in rng:
                    Vr = V[r]
                    vrp = Vr[p]
                    vrq = Vr[q]
                    Vr[p] = c * vrp - s * vrq
                    Vr[q] = s * vrp + c * vrq

    evals = np.array([A[i][i] for i in rng])
    evecs = np.array(V)
    order = np.argsort(-evals, kind="stable")
    evals = evals[order]
    evecs = evecs[:, order]
    pivots = np.argmax(np.abs(evecs), axis=0)
    signs = np.where(evecs[pivots, np.arange(n)] < 0.0, -1.0, 1.0)
    return Spectrum(evals, evecs * signs)


def eigendecompose(m) -> Spectrum:
    """Eigendecomposition of a symmetric matrix (cached on SpectralMatrix)."""
    return as_spectral(m).spectrum()


# ---------------------------------------------------------------------------
# Tolerances
# ---------------------------------------------------------------------------


def zero_threshold(lambda_max: float, rel_zero_tol: float = REL_ZERO_TOL) -> float:
    """Eigenvalues at or below this value count as exact zeros."""
    if lambda_max <= SMALL_LAMBDA_MAX:
        return ABS_ZERO_TOL
    return rel_zero_tol * lambda_max


def psd_eigenvalues(m, what: str = "matrix") -> np.ndarray:
    """Eigenvalues of ``m`` clamped to be non-negative.

    Raises NotPSD when the smallest eigenvalue is below
    ``-1e-9 * max(1, lambda_max)``.
    """
    lam = as_spectral(m).eigenvalues
    lmax = float(lam[0])
    if lam[-1] < -NEG_EIG_TOL * max(1.0, lmax):
        raise NotPSD(f"{what} has eigenvalue {lam[-1]:.3e} (lambda_max {lmax:.3e})")
    return np.maximum(lam, 0.0)


def numerical_rank(m, rel_zero_tol: float = REL_ZERO_TOL) -> int:
    lam = psd_eigenvalues(m)
    return int(np.count_nonzero(lam > zero_threshold(float(lam[0]), rel_zero_tol)))


def is_strictly_pd(m, rel_zero_tol: float = REL_ZERO_TOL) -> bool:
    """True when every eigenvalue exceeds the zero threshold."""
    lam = as_spectral(m).eigenvalues
    if lam[0] <= 0.0:
        return False
    return bool(lam[-1] > zero_threshold(float(lam[0]), rel_zero_tol))


def require_strictly_pd(m, what: str = "matrix") -> SpectralMatrix:
    m = as_spectral(m)
    psd_eigenvalues(m, what)
    if not is_strictly_pd(m):
        raise NotStrictlyPD(f"{what} is singular (eigenvalues {m.eigenvalues})")
    return m


def range_basis(m, rel_zero_tol: float = REL_ZERO_TOL) -> np.ndarray:
    """Orthonormal columns spanning the range of a PSD matrix."""
    m = as_spectral(m)
    lam = psd_eigenvalues(m)
    keep = lam > zero_threshold(float(lam[0]), rel_zero_tol)
    return m.eigenvectors[:, keep]


def range_projector(m, rel_zero_tol: float = REL_ZERO_TOL) -> SpectralMatrix:
    b = range_basis(m, rel_zero_tol)
    return SpectralMatrix._with_spectrum(b @ b.T, None)


# ---------------------------------------------------------------------------
# Matrix functions
# ---------------------------------------------------------------------------


def spectral_apply(m, fn: Callable[[np.ndarray], np.ndarray]) -> SpectralMatrix:
    """Apply ``fn`` to the eigenvalues of ``m``; the result carries its spectrum."""
    sp = as_spectral(m).spectrum()
    return _from_eigenpairs(np.asarray(fn(sp.eigenvalues), dtype=float), sp.eigenvectors)


def _from_eigenpairs(values: np.ndarray, vectors: np.ndarray) -> SpectralMatrix:
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    return SpectralMatrix._with_spectrum(
        (vectors * values) @ vectors.T, Spectrum(values, vectors)
    )


def from_eigenpairs(values, vectors) -> SpectralMatrix:
    """Build ``Q diag(values) Q^T`` from orthonormal columns ``Q``."""
    return _from_eigenpairs(np.asarray(values, dtype=float), np.asarray(vectors, dtype=float))


def mat_exp(m) -> SpectralMatrix:
    return spectral_apply(m, np.exp)


def mat_log(m) -> SpectralMatrix:
    """Logarithm of a strictly positive definite matrix."""
    m = require_strictly_pd(m)
    return spectral_apply(m, np.log)


def mat_log_plus(m, rel_zero_tol: float = REL_ZERO_TOL) -> SpectralMatrix:
    """Logarithm of the non-zero eigenvalues; zero eigenvalues stay zero."""
    m = as_spectral(m)
    lam = psd_eigenvalues(m)
    zero = lam <= zero_threshold(float(lam[0]), rel_zero_tol)
    out = np.log(np.where(zero, 1.0, lam))
    out[zero] = 0.0
    return _from_eigenpairs(out, m.eigenvectors)


def mat_power(m, p: float, rel_zero_tol: float = REL_ZERO_TOL) -> SpectralMatrix:
    """``m**p`` for PSD ``m`` and ``p > 0``; negative roundoff is clamped to zero."""
    m = as_spectral(m)
    lam = psd_eigenvalues(m)
    zero = lam <= zero_threshold(float(lam[0]), rel_zero_tol)
    out = lam ** p
    out[zero] = 0.0
    return _from_eigenpairs(out, m.eigenvectors)


def pseudo_inverse(m, rel_zero_tol: float = REL_ZERO_TOL) -> SpectralMatrix:
    m = as_spectral(m)
    lam = psd_eigenvalues(m)
    zero = lam <= zero_threshold(float(lam[0]), rel_zero_tol)
    out = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, lam))
    return _from_eigenpairs(out, m.eigenvectors)


def inverse(m) -> SpectralMatrix:
    m = require_strictly_pd(m)
    return spectral_apply(m, np.reciprocal)


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_orthogonal(n: int, seed=None) -> np.ndarray:
    """Orthonormalized standard-Gaussian columns (Haar distributed)."""
    rng = _rng(seed)
    g = rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def random_psd(n: int, rank: int | None = None, seed=None) -> SpectralMatrix:
    """``Q diag(u) Q^T`` with Haar ``Q`` and ``u`` uniform on [0, 1].

    Exactly ``rank`` eigenvalues are non-zero; the remaining ones are
    exact zeros.
    """
    if rank is None:
        rank = n
    if not 1 <= rank <= n:
        raise BadRank(f"rank must be in [1, {n}], got {rank}")
    rng = _rng(seed)
    q = random_orthogonal(n, rng)
    u = rng.uniform(0.0, 1.0, size=rank)
    # redraw the (measure-zero in theory) spectra that look rank deficient
    while u.min() <= 1e-6 * u.max():
        u = rng.uniform(0.0, 1.0, size=rank)
    values = np.concatenate([u, np.zeros(n - rank)])
    return _from_eigenpairs(values, q)


def random_symmetric(n: int, scale: float = 1.0, seed=None) -> SpectralMatrix:
    """Symmetric matrix with standard-Gaussian entries, times ``scale``."""
    rng = _rng(seed)
    g = rng.standard_normal((n, n))
    return SpectralMatrix(scale * 0.5 * (g + g.T), _trusted=True)


def random_unit(n: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def random_spd(n: int, log_range: float = 3.0, seed=None) -> SpectralMatrix:
    """Strictly PD ``Q diag(exp(x)) Q^T`` with ``x`` uniform on ``[-log_range, log_range]``."""
    rng = _rng(seed)
    q = random_orthogonal(n, rng)
    return _from_eigenpairs(np.exp(rng.uniform(-log_range, log_range, size=n)), q)

"""
Densities, dyads, events and observables
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
A density matrix assigns the generalized probability ``u^T A u`` to every
unit vector ``u``. Events are orthogonal projectors and random variables
are arbitrary symmetric matrices; both are scored by ``tr(A S)``.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import BadWeights, DimensionMismatch, NotDensity, NotProjector, NotUnitVector
from .symmat import (
    NEG_EIG_TOL,
    SpectralMatrix,
    Spectrum,
    _rng,
    as_array,
    random_orthogonal,
    random_psd,
)

TRACE_REPAIR_TOL = 1e-8
UNIT_TOL = 1e-12
WEIGHT_SUM_TOL = 1e-12
PROJECTOR_EIG_TOL = 1e-9


class Density(SpectralMatrix):
    """Trace-one positive semidefinite matrix.

    Construction validates the input and repairs roundoff: eigenvalues are
    clamped to ``[0, 1]`` and the trace renormalized to one when the drift is
    at most ``1e-8``. Larger violations raise :class:`NotDensity`. Inputs that
    are already exact are stored unchanged.
    """

    __slots__ = ()

    def __init__(self, raw, *, _trusted: bool = False):
        super().__init__(raw, _trusted=_trusted)
        _repair_density(self)


def _repair_density(d: SpectralMatrix) -> None:
    tr = d.trace()
    if not abs(tr - 1.0) <= TRACE_REPAIR_TOL:
        raise NotDensity(f"trace {tr!r} differs from 1 by more than {TRACE_REPAIR_TOL}")
    lam = d.eigenvalues
    if lam[-1] < -NEG_EIG_TOL or lam[0] > 1.0 + NEG_EIG_TOL:
        raise NotDensity(f"eigenvalues outside [0, 1]: {lam}")
    if lam[-1] < 0.0 or lam[0] > 1.0:
        clamped = np.clip(lam, 0.0, 1.0)
        clamped = clamped / clamped.sum()
        q = d.eigenvectors
        data = (q * clamped) @ q.T
        data = 0.5 * (data + data.T)
        data.flags.writeable = False
        d._data = data
        d._spectrum = Spectrum(clamped, q)
    elif tr != 1.0:
        data = d.data / tr
        data.flags.writeable = False
        d._data = data
        d._spectrum = Spectrum(lam / tr, d.eigenvectors)


def as_density(m) -> Density:
    if isinstance(m, Density):
        return m
    if isinstance(m, SpectralMatrix):
        d = Density.__new__(Density)
        d._data = m.data
        d._spectrum = m._spectrum
        _repair_density(d)
        return d
    return Density(m)


def unit_vector(v) -> np.ndarray:
    """Validate a unit vector, ``| ||v||_2 - 1 | <= 1e-12``."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise NotUnitVector(f"expected a 1-D vector, got shape {v.shape}")
    norm = float(np.linalg.norm(v))
    if not abs(norm - 1.0) <= UNIT_TOL:
        raise NotUnitVector(f"norm {norm!r} is not 1")
    return v


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def dyad(u) -> SpectralMatrix:
    u = unit_vector(u)
    return SpectralMatrix(np.outer(u, u), _trusted=True)


def _check_dim(n: int, m: int, what: str) -> None:
    if n != m:
        raise DimensionMismatch(f"{what}: dimension {m} does not match {n}")


def mixture_density(weights: Sequence[float], directions: Sequence) -> Density:
    """``sum_i w_i a_i a_i^T`` for non-negative weights summing to one."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(w) != len(directions) or len(w) == 0:
        raise BadWeights("need one weight per direction")
    if np.any(w < 0.0) or not abs(w.sum() - 1.0) <= WEIGHT_SUM_TOL:
        raise BadWeights(f"weights must be non-negative and sum to 1, got {w}")
    dirs = [unit_vector(a) for a in directions]
    n = len(dirs[0])
    total = np.zeros((n, n))
    for wi, a in zip(w, dirs):
        _check_dim(n, len(a), "direction")
        total += wi * np.outer(a, a)
    return Density(total, _trusted=True)


def prob(d, u) -> float:
    """Generalized probability ``tr(A u u^T) = u^T A u``."""
    a = as_array(d)
    u = unit_vector(u)
    _check_dim(a.shape[0], len(u), "unit vector")
    return float(u @ a @ u)


class EventProjector(SpectralMatrix):
    """Orthogonal projector onto a subspace: eigenvalues in {0, 1}."""

    __slots__ = ()

    def __init__(self, raw):
        super().__init__(raw)
        lam = self.eigenvalues
        dist = np.minimum(np.abs(lam), np.abs(lam - 1.0))
        if np.any(dist > PROJECTOR_EIG_TOL):
            raise NotProjector(f"eigenvalues {lam} are not all 0 or 1")

    @classmethod
    def from_directions(cls, directions: Sequence) -> "EventProjector":
        """Projector ``sum_i s_i s_i^T`` over orthonormal directions."""
        dirs = np.array([unit_vector(s) for s in directions], dtype=float)
        return cls(dirs.T @ dirs)

    @classmethod
    def null(cls, n: int) -> "EventProjector":
        return cls(np.zeros((n, n)))

    @classmethod
    def certain(cls, n: int) -> "EventProjector":
        return cls(np.eye(n))


def event_prob(d, s) -> float:
    """Probability ``tr(A S)`` of the event with projector ``S``."""
    if not isinstance(s, EventProjector):
        s = EventProjector(s)
    a = as_array(d)
    _check_dim(a.shape[0], s.n, "event")
    return float(np.sum(a * s.data))


def expectation(d, obs) -> float:
    """Expectation ``tr(A S)`` of the random variable ``S``."""
    a = as_array(d)
    s = as_array(SpectralMatrix(obs) if not isinstance(obs, SpectralMatrix) else obs)
    _check_dim(a.shape[0], s.shape[0], "observable")
    return float(np.sum(a * s))


def sphere_average(d, samples: int, seed=None) -> tuple[float, float]:
    """Monte Carlo mean of ``u^T A u`` over uniform unit vectors.

    Returns ``(estimate, standard_error)``; the exact value is ``tr(A) / n``.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    a = as_array(d)
    n = a.shape[0]
    rng = _rng(seed)
    g = rng.standard_normal((samples, n))
    u = g / np.linalg.norm(g, axis=1, keepdims=True)
    vals = np.einsum("si,ij,sj->s", u, a, u)
    mean = float(vals.mean())
    if samples == 1:
        return mean, math.inf
    return mean, float(vals.std(ddof=1) / math.sqrt(samples))


def random_density(n: int, rank: int | None = None, seed=None) -> Density:
    p = random_psd(n, rank, seed)
    tr = p.trace()
    scaled = SpectralMatrix._with_spectrum(
        p.data / tr, Spectrum(p.eigenvalues / tr, p.eigenvectors)
    )
    return as_density(scaled)


def random_basis(n: int, seed=None) -> list[np.ndarray]:
    """Columns of a Haar-random orthogonal matrix."""
    q = random_orthogonal(n, seed)
    return [q[:, i].copy() for i in range(n)]


def figure1_mixture() -> tuple[list[float], list[np.ndarray]]:
    """Three-dyad mixture whose sum is ``[[0.35, 0.15], [0.15, 0.65]]``.

    The third summand is the dyad ``e2 e2^T``; the off-diagonal matrix
    ``[[0, 1], [1, 0]]`` is not a dyad and would not produce that sum.
    """
    h = math.sqrt(0.5)
    return [0.2, 0.3, 0.5], [np.array([1.0, 0.0]), np.array([h, h]), np.array([0.0, 1.0])]

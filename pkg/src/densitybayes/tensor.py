"""
Joint spaces: Kronecker products and partial traces
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
Joint indices are A-major: entry ``(i_A * n_B + i_B, j_A * n_B + j_B)``.
Written as an ``n_A x n_A`` grid of ``n_B x n_B`` blocks ``G_ij``, the
partial trace over A is the block sum ``sum_i G_ii`` and the partial trace
over B is the matrix of block traces ``[tr G_ij]``.
"""
from __future__ import annotations

from typing import Literal, Sequence

import numpy as np

from .errors import BadWeights, DimensionMismatch
from .gleason import (
    WEIGHT_SUM_TOL,
    Density,
    _repair_density,
    as_density,
    prob,
    unit_vector,
)
from .symmat import SpectralMatrix, _rng, as_array, random_psd

Side = Literal["A", "B"]


class JointDensity(Density):
    """Density on the tensor space of two factors with sizes ``dims = (n_A, n_B)``.

    ``separable`` is construction metadata: it is True only for joints built
    by :func:`separable_joint` and says nothing about other joints.
    """

    __slots__ = ("dims", "separable")

    def __init__(self, raw, dims: Sequence[int], *, separable: bool = False):
        super().__init__(raw)
        self.dims = _check_dims(self.n, dims)
        self.separable = separable

    @classmethod
    def from_density(cls, d, dims: Sequence[int], separable: bool = False) -> "JointDensity":
        d = as_density(d)
        j = cls.__new__(cls)
        j._data = d.data
        j._spectrum = d._spectrum
        j.dims = _check_dims(d.n, dims)
        j.separable = separable
        return j

    def __repr__(self) -> str:
        return super().__repr__().replace("JointDensity(", f"JointDensity(dims={self.dims}, ", 1)


def _check_dims(n: int, dims: Sequence[int]) -> tuple[int, int]:
    na, nb = (int(x) for x in dims)
    if na < 1 or nb < 1 or na * nb != n:
        raise DimensionMismatch(f"dims {dims} do not factor a {n}x{n} matrix")
    return na, nb


def _dims_of(g, dims) -> tuple[int, int]:
    if dims is None:
        dims = getattr(g, "dims", None)
        if dims is None:
            raise DimensionMismatch("factor dimensions are required")
    return _check_dims(as_array(g).shape[0], dims)


class Slice(SpectralMatrix):
    """Unnormalized matrix such as ``D(A, b)``; ``mass`` is its trace."""

    __slots__ = ()

    @property
    def mass(self) -> float:
        return self.trace()


def kron(e, f) -> SpectralMatrix:
    """Kronecker product ``E (x) F`` with blocks ``e_ij F``."""
    return SpectralMatrix(np.kron(as_array(e), as_array(f)), _trusted=True)


def partial_trace(g, dims=None, over: Side = "B") -> SpectralMatrix:
    """Trace out factor ``over`` of a matrix on the joint space.

    ``over="A"`` returns the ``n_B x n_B`` block sum; ``over="B"`` returns the
    ``n_A x n_A`` matrix of block traces.
    """
    na, nb = _dims_of(g, dims)
    t = as_array(g).reshape(na, nb, na, nb)
    if over == "A":
        out = np.einsum("ikil->kl", t)
    elif over == "B":
        out = np.einsum("ikjk->ij", t)
    else:
        raise ValueError(f"over must be 'A' or 'B', not {over!r}")
    return SpectralMatrix(out, _trusted=True)


def partial_trace_general(g, dims=None, over: Side = "B") -> np.ndarray:
    """Partial trace of a not necessarily symmetric joint-space matrix."""
    na, nb = _dims_of(g, dims)
    t = np.asarray(g, dtype=float).reshape(na, nb, na, nb)
    if over == "A":
        return np.einsum("ikil->kl", t)
    if over == "B":
        return np.einsum("ikjk->ij", t)
    raise ValueError(f"over must be 'A' or 'B', not {over!r}")


def joint_prob(j: JointDensity, a, b) -> float:
    """``D(a, b) = (a (x) b)^T D(A, B) (a (x) b)``."""
    na, nb = _dims_of(j, None)
    a = unit_vector(a)
    b = unit_vector(b)
    if len(a) != na or len(b) != nb:
        raise DimensionMismatch(f"vectors of size {len(a)}, {len(b)} for dims {(na, nb)}")
    ab = np.kron(a, b)
    return float(ab @ as_array(j) @ ab)


def slice_b(j: JointDensity, b) -> Slice:
    """``D(A, b) = tr_B(D(A, B) (I_A (x) b b^T))``."""
    na, nb = _dims_of(j, None)
    b = unit_vector(b)
    if len(b) != nb:
        raise DimensionMismatch(f"b has size {len(b)}, expected {nb}")
    t = as_array(j).reshape(na, nb, na, nb)
    return Slice(np.einsum("ikjl,k,l->ij", t, b, b), _trusted=True)


def slice_a(j: JointDensity, a) -> Slice:
    """``D(a, B) = tr_A(D(A, B) (a a^T (x) I_B))``."""
    na, nb = _dims_of(j, None)
    a = unit_vector(a)
    if len(a) != na:
        raise DimensionMismatch(f"a has size {len(a)}, expected {na}")
    t = as_array(j).reshape(na, nb, na, nb)
    return Slice(np.einsum("ikjl,i,j->kl", t, a, a), _trusted=True)


def marginal(j: JointDensity, keep: Side) -> Density:
    """``D(A) = tr_B D(A, B)`` for ``keep="A"``; ``D(B) = tr_A D(A, B)`` for ``keep="B"``."""
    over = {"A": "B", "B": "A"}.get(keep)
    if over is None:
        raise ValueError(f"keep must be 'A' or 'B', not {keep!r}")
    m = partial_trace(j, None, over=over)
    d = Density.__new__(Density)
    d._data = m.data
    d._spectrum = None
    _repair_density(d)
    return d


def product_joint(da, db) -> JointDensity:
    """Independent joint ``D(A) (x) D(B)``."""
    da = as_density(da)
    db = as_density(db)
    return JointDensity.from_density(
        Density(np.kron(da.data, db.data), _trusted=True), (da.n, db.n)
    )


def separable_joint(weights: Sequence[float], a_dirs: Sequence, b_dirs: Sequence) -> JointDensity:
    """``sum_k c_k (a_k (x) b_k)(a_k (x) b_k)^T``, flagged separable."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(w) == 0 or len(w) != len(a_dirs) or len(w) != len(b_dirs):
        raise BadWeights("need one weight per (a, b) pair")
    if np.any(w < 0.0) or not abs(w.sum() - 1.0) <= WEIGHT_SUM_TOL:
        raise BadWeights(f"weights must be non-negative and sum to 1, got {w}")
    a_list = [unit_vector(a) for a in a_dirs]
    b_list = [unit_vector(b) for b in b_dirs]
    na, nb = len(a_list[0]), len(b_list[0])
    total = np.zeros((na * nb, na * nb))
    for c, a, b in zip(w, a_list, b_list):
        if len(a) != na or len(b) != nb:
            raise DimensionMismatch("factor directions must share their dimension")
        ab = np.kron(a, b)
        total += c * np.outer(ab, ab)
    return JointDensity(total, (na, nb), separable=True)


def is_independent(j: JointDensity, tol: float = 1e-10) -> bool:
    return independence_residual(j) <= tol


def independence_residual(j: JointDensity) -> float:
    """``|| D(A, B) - D(A) (x) D(B) ||_F``."""
    da = marginal(j, "A")
    db = marginal(j, "B")
    return float(np.linalg.norm(as_array(j) - np.kron(da.data, db.data)))


def swap_factors(g, dims=None) -> np.ndarray:
    """Reorder a joint-space matrix from (A, B) to (B, A) index order."""
    na, nb = _dims_of(g, dims)
    t = as_array(g).reshape(na, nb, na, nb)
    return t.transpose(1, 0, 3, 2).reshape(na * nb, na * nb)


def bell_joint() -> JointDensity:
    """Pure joint ``psi psi^T`` with ``psi = (e1 (x) e1 + e2 (x) e2) / sqrt(2)``."""
    psi = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)
    return JointDensity(np.outer(psi, psi), (2, 2))


def diagonal_joint(table) -> JointDensity:
    """Conventional joint table ``P[a, b]`` as a diagonal joint density."""
    p = np.asarray(table, dtype=float)
    return JointDensity(np.diag(p.ravel()), p.shape)


def random_joint(na: int, nb: int, rank: int | None = None, seed=None) -> JointDensity:
    p = random_psd(na * nb, rank, _rng(seed))
    return JointDensity(p.data / p.trace(), (na, nb))


def random_separable_joint(na: int, nb: int, terms: int, seed=None) -> JointDensity:
    rng = _rng(seed)
    w = rng.dirichlet(np.ones(terms))
    w = w / w.sum()
    a_dirs = [_unit(rng, na) for _ in range(terms)]
    b_dirs = [_unit(rng, nb) for _ in range(terms)]
    return separable_joint(w, a_dirs, b_dirs)


def _unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def diagonal_table(j: JointDensity) -> np.ndarray:
    na, nb = _dims_of(j, None)
    return np.diag(as_array(j)).reshape(na, nb).copy()


def marginal_prob(j: JointDensity, keep: Side, v) -> float:
    return prob(marginal(j, keep), v)


def random_entangled_joint(na: int, nb: int, purity: float = 0.8, seed=None) -> JointDensity:
    """``purity * psi psi^T + (1 - purity) * R`` with random pure ``psi`` and full-rank density ``R``.

    For ``purity`` near one the joint is close to a generic pure state and is
    almost always non-separable; it stays strictly PD for ``purity < 1``.
    """
    if not 0.0 <= purity < 1.0:
        raise ValueError("purity must lie in [0, 1)")
    rng = _rng(seed)
    psi = _unit(rng, na * nb)
    r = random_psd(na * nb, None, rng)
    m = purity * np.outer(psi, psi) + (1.0 - purity) * r.data / r.trace()
    return JointDensity(m, (na, nb))

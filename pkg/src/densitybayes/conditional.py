"""
Conditional density matrices
~~~~~~~~~~~~~~~~~~~~~~~~~~~~
Four conditional forms derived from a joint ``D(A, B)``:

* ``D(A|B) = D(A, B) (.) (I_A (x) D(B))^-1``   (:func:`cond_full`)
* ``D(A|b) = D(A, b) / tr D(A, b)``             (:func:`cond_given_b`)
* ``D(a|B) = D(a, B) (.) D(B)^-1``              (:func:`cond_given_a`)
* ``D(a|b) = D(a, b) / D(b)``                   (:func:`cond_scalar`)

When the marginal to be inverted is singular the pseudo-inverse is used and
the odot product runs on the range intersection; the result is flagged and a
:class:`~densitybayes.errors.DegenerateMarginal` warning is issued.
"""
from __future__ import annotations

import warnings
from typing import Literal

import numpy as np

from .errors import DegenerateMarginal, ZeroConditioningMass
from .gleason import Density, prob
from .odot import odot
from .symmat import SpectralMatrix, is_strictly_pd, pseudo_inverse
from .tensor import (
    JointDensity,
    joint_prob,
    kron,
    marginal,
    partial_trace,
    slice_a,
    slice_b,
)

ZERO_MASS_TOL = 1e-12
WITNESS_TOL = 1e-8


class Conditional(SpectralMatrix):
    """PSD conditional matrix with unconstrained trace."""

    __slots__ = ("degenerate_marginal",)

    def __init__(self, raw, *, degenerate_marginal: bool = False):
        super().__init__(raw)
        self.degenerate_marginal = degenerate_marginal


class FullConditional(Conditional):
    """``D(A|B)`` (``given="B"``) or ``D(B|A)`` (``given="A"``) on the A-major joint space."""

    __slots__ = ("dims", "given")

    def __init__(self, raw, dims, *, given: Literal["A", "B"] = "B",
                 degenerate_marginal: bool = False):
        super().__init__(raw, degenerate_marginal=degenerate_marginal)
        na, nb = (int(x) for x in dims)
        self.dims = (na, nb)
        self.given = given


def _wrap(cls, m: SpectralMatrix, **attrs):
    obj = cls.__new__(cls)
    obj._data = m.data
    obj._spectrum = m._spectrum
    for k, v in attrs.items():
        setattr(obj, k, v)
    return obj


def _degenerate_inverse(m: Density, what: str) -> tuple[SpectralMatrix, bool]:
    if is_strictly_pd(m):
        return pseudo_inverse(m), False
    warnings.warn(
        f"{what} is singular; using the pseudo-inverse and range-intersection odot",
        DegenerateMarginal,
        stacklevel=3,
    )
    return pseudo_inverse(m), True


def cond_full(j: JointDensity) -> FullConditional:
    """``D(A|B) = D(A, B) (.) (I_A (x) D(B))^-1``."""
    na, nb = j.dims
    inv_b, degenerate = _degenerate_inverse(marginal(j, "B"), "D(B)")
    lifted = kron(np.eye(na), inv_b)
    c = odot(j, lifted).matrix
    return _wrap(FullConditional, c, dims=(na, nb), given="B", degenerate_marginal=degenerate)


def cond_given_b(j: JointDensity, b) -> Density:
    """``D(A|b)``: the slice ``D(A, b)`` normalized to trace one."""
    s = slice_b(j, b)
    mass = s.mass
    if not mass > ZERO_MASS_TOL:
        raise ZeroConditioningMass(f"tr D(A, b) = {mass:.3e}")
    return Density(s.data / mass, _trusted=True)


def cond_given_a(j: JointDensity, a) -> Conditional:
    """``D(a|B) = D(a, B) (.) D(B)^-1`` on the B space."""
    inv_b, degenerate = _degenerate_inverse(marginal(j, "B"), "D(B)")
    c = odot(slice_a(j, a), inv_b).matrix
    return _wrap(Conditional, c, degenerate_marginal=degenerate)


cond_given_A = cond_given_a


def cond_scalar(j: JointDensity, a, b) -> float:
    """``D(a|b) = D(a, b) / D(b)``."""
    pb = prob(marginal(j, "B"), b)
    if not pb > ZERO_MASS_TOL:
        raise ZeroConditioningMass(f"D(b) = {pb:.3e}")
    return joint_prob(j, a, b) / pb


def marginalize_cond(c, a) -> float:
    """``D(a|b) = tr(D(A|b) a a^T)`` from a conditional built by :func:`cond_given_b`."""
    return prob(c, a)


def separability_witness(j: JointDensity) -> float:
    """Largest eigenvalue of ``D(A|B)``.

    Separable joints satisfy ``D(A, B) <= I_A (x) D(B)``, so every eigenvalue
    of the conditional is at most one; a value above ``1 + 1e-8`` certifies
    that ``j`` is not separable. Values at or below that are inconclusive.
    """
    return float(cond_full(j).eigenvalues[0])


def certifies_entanglement(j: JointDensity) -> bool:
    return separability_witness(j) > 1.0 + WITNESS_TOL


def conditional_trace_residual(c: FullConditional) -> float:
    """``|| tr_A D(A|B) - I_B ||_F``, reported as a diagnostic only."""
    na, nb = c.dims
    over = "A" if c.given == "B" else "B"
    reduced = partial_trace(c, (na, nb), over=over)
    return float(np.linalg.norm(reduced.data - np.eye(reduced.n)))

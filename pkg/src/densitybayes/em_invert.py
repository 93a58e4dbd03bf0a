"""
Recovering a marginal from a full conditional
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
Given only ``C = D(A|B)`` the iteration

    W <- tr_A(C (.) (I_A (x) W)) / tr(C (.) (I_A (x) W))

has the true ``D(B)`` as a fixed point. Convergence and uniqueness are not
guaranteed; both are reported rather than assumed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conditional import FullConditional
from .errors import DimensionMismatch, ZeroMass
from .gleason import Density, as_density
from .odot import odot
from .symmat import (
    SpectralMatrix,
    as_spectral,
    is_strictly_pd,
    mat_exp,
    mat_log,
)
from .tensor import JointDensity, kron, partial_trace

MASS_FLOOR = 1e-300


@dataclass
class InversionResult:
    estimate: Density
    iterations: int
    final_step_norm: float
    converged: bool
    reconstructed_joint: JointDensity | None = None
    step_norms: list[float] = field(default_factory=list)
    evidence_traces: list[float] = field(default_factory=list)


def _dims(c) -> tuple[int, int]:
    dims = getattr(c, "dims", None)
    if dims is None:
        raise DimensionMismatch("the conditional needs factor dimensions")
    return dims


def _step(c: SpectralMatrix, log_c, w: Density, dims) -> tuple[Density, float]:
    na, nb = dims
    if log_c is not None and is_strictly_pd(w):
        total = log_c + np.kron(np.eye(na), mat_log(w).data)
        prod = mat_exp(SpectralMatrix(total, _trusted=True))
    else:
        prod = odot(c, kron(np.eye(na), w)).matrix
    mass = prod.trace()
    if not mass > MASS_FLOOR:
        raise ZeroMass(f"tr(C (.) (I (x) W)) = {mass:.3e}")
    reduced = partial_trace(prod, dims, over="A")
    return Density(reduced.data / mass, _trusted=True), mass


def em_step(c: FullConditional, w) -> Density:
    """One update ``W -> tr_A(C (.) (I_A (x) W)) / tr(C (.) (I_A (x) W))``."""
    dims = _dims(c)
    w = as_density(w)
    if w.n != dims[1]:
        raise DimensionMismatch(f"W must be {dims[1]}x{dims[1]}")
    return _step(as_spectral(c), None, w, dims)[0]


def em_invert(c: FullConditional, w0=None, tol: float = 1e-10,
              max_iter: int = 10000) -> InversionResult:
    """Iterate :func:`em_step` until ``||W_{t+1} - W_t||_F <= tol``.

    ``w0`` defaults to the uniform ``I / n_B``. On convergence the joint is
    rebuilt as ``C (.) (I_A (x) W)`` normalized to trace one.
    """
    dims = _dims(c)
    na, nb = dims
    c = as_spectral(c)
    w = as_density(np.eye(nb) / nb if w0 is None else w0)
    if w.n != nb:
        raise DimensionMismatch(f"W0 must be {nb}x{nb}")
    # log C is fixed across iterations
    log_c = mat_log(c).data if is_strictly_pd(c) else None

    norms: list[float] = []
    masses: list[float] = []
    converged = False
    step_norm = float("nan")
    it = 0
    while it < max_iter:
        nxt, mass = _step(c, log_c, w, dims)
        it += 1
        step_norm = float(np.linalg.norm(nxt.data - w.data))
        norms.append(step_norm)
        masses.append(mass)
        w = nxt
        if step_norm <= tol:
            converged = True
            break

    joint = None
    if converged:
        prod = odot(c, kron(np.eye(na), w)).matrix
        joint = JointDensity(prod.data / prod.trace(), dims)
    return InversionResult(w, it, step_norm, converged, joint, norms, masses)


def fixed_point_residual(c: FullConditional, w) -> float:
    """``||em_step(C, W) - W||_F``."""
    w = as_density(w)
    return float(np.linalg.norm(em_step(c, w).data - w.data))

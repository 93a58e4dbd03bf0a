"""
Continuous-time Bayes updates
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
The posterior after "time" ``t`` of evidence with likelihood ``L`` is

    D(t) = exp(log D(0) + t log L) / tr(...)

which solves ``d log D/dt = log L - tr(D log L) I``. For diagonal inputs this
is the conventional ``p_i(t) ~ p_i(0) l_i^t``. As a contrast, conjugation by
an orthogonal matrix (the real form of unitary evolution) moves eigenvectors
but never eigenvalues.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import BadDistribution, NotOrthogonal, NotSkew
from .gleason import Density, as_density
from .symmat import (
    SpectralMatrix,
    as_spectral,
    mat_exp,
    mat_log,
    require_strictly_pd,
)

SKEW_TOL = 1e-10
ORTHO_TOL = 1e-10


@dataclass
class FlowTrace:
    """Time-indexed sequence of states with per-step diagnostics.

    ``trace_drift[k]`` is ``|tr(states[k]) - 1|`` measured before any
    renormalization; ``overlap[k]`` is ``|<top eigvec(state), top eigvec(L)>|``
    when a reference matrix was supplied.
    """

    times: list[float] = field(default_factory=list)
    states: list[SpectralMatrix] = field(default_factory=list)
    trace_drift: list[float] = field(default_factory=list)
    overlap: list[float] = field(default_factory=list)

    def append(self, t: float, state, reference=None) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError("flow times must be strictly increasing")
        state = as_spectral(state)
        self.times.append(float(t))
        self.states.append(state)
        self.trace_drift.append(abs(state.trace() - 1.0))
        if reference is not None:
            self.overlap.append(top_overlap(state, reference))

    @property
    def final(self) -> SpectralMatrix:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.times)


def top_overlap(m, reference) -> float:
    """``|<v_1(m), v_1(reference)>|`` for the leading eigenvectors."""
    u = as_spectral(m).eigenvectors[:, 0]
    v = as_spectral(reference).eigenvectors[:, 0]
    return float(abs(u @ v))


def _normalized_exp(log_state: np.ndarray) -> Density:
    e = mat_exp(SpectralMatrix(log_state, _trusted=True))
    tr = e.trace()
    return as_density(SpectralMatrix(e.data / tr, _trusted=True))


def flow_generalized(prior, likelihood, t: float) -> Density:
    """``(prior (.) L^t) / tr(prior (.) L^t)`` for strictly PD prior and likelihood."""
    prior = require_strictly_pd(prior, "prior")
    likelihood = require_strictly_pd(likelihood, "likelihood")
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    if t == 0:
        return as_density(prior)
    return _normalized_exp(mat_log(prior).data + t * mat_log(likelihood).data)


def flow_conventional(p0, likelihood, t: float) -> np.ndarray:
    """``p_i(t) = p_i(0) l_i^t / sum_j p_j(0) l_j^t``, evaluated in log space."""
    p0 = np.asarray(p0, dtype=float)
    ell = np.asarray(likelihood, dtype=float)
    if p0.ndim != 1 or np.any(p0 < 0) or not abs(p0.sum() - 1.0) <= 1e-12:
        raise BadDistribution(f"p0 must be a probability vector, got {p0}")
    if ell.shape != p0.shape or np.any(ell <= 0):
        raise BadDistribution("likelihood must be positive and match p0")
    if t == 0:
        return p0.copy()
    with np.errstate(divide="ignore"):
        logits = np.log(p0) + t * np.log(ell)
    logits -= logits[np.isfinite(logits)].max()
    w = np.exp(logits)
    return w / w.sum()


def flow_closed_trace(prior, likelihood, times) -> FlowTrace:
    trace = FlowTrace()
    for t in times:
        trace.append(t, flow_generalized(prior, likelihood, t), likelihood)
    return trace


def integrate_log_ode(prior, likelihood, t_end: float, steps: int) -> FlowTrace:
    """Fixed-step RK4 on ``X = log D``: ``dX/dt = log L - tr(exp(X) log L) I``.

    States are the raw integrator values ``exp(X_k)`` without renormalization,
    so ``trace_drift`` measures the integration error of the normalizer.
    """
    prior = require_strictly_pd(prior, "prior")
    likelihood = require_strictly_pd(likelihood, "likelihood")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    log_l = mat_log(likelihood).data
    eye = np.eye(prior.n)

    def rhs(x: np.ndarray) -> np.ndarray:
        d = mat_exp(SpectralMatrix(x, _trusted=True)).data
        return log_l - float(np.sum(d * log_l)) * eye

    h = t_end / steps
    x = mat_log(prior).data.copy()
    carry = np.zeros_like(x)
    trace = FlowTrace()
    trace.append(0.0, mat_exp(SpectralMatrix(x, _trusted=True)), likelihood)
    for k in range(1, steps + 1):
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h * k2)
        k4 = rhs(x + h * k3)
        # compensated summation keeps the rounding floor below the O(h^4) error
        dx = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4) - carry
        nxt = x + dx
        carry = (nxt - x) - dx
        x = nxt
        trace.append(k * h, mat_exp(SpectralMatrix(x, _trusted=True)), likelihood)
    return trace


def integrate_conventional_ode(p0, likelihood, t_end: float, steps: int) -> np.ndarray:
    """RK4 on ``d log p_i/dt = log l_i - sum_j p_j log l_j``; returns p(t_end)."""
    log_l = np.log(np.asarray(likelihood, dtype=float))
    x = np.log(np.asarray(p0, dtype=float))
    h = t_end / steps

    def rhs(x):
        return log_l - float(np.exp(x) @ log_l)

    for _ in range(steps):
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h * k2)
        k4 = rhs(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return np.exp(x)


def conjugate(d0, q) -> Density:
    """``Q D Q^T`` for an orthogonal ``Q``."""
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    if q.shape != (n, n) or np.linalg.norm(q.T @ q - np.eye(n)) > ORTHO_TOL:
        raise NotOrthogonal("Q^T Q differs from the identity")
    d0 = as_density(d0)
    return as_density(SpectralMatrix(q @ d0.data @ q.T, _trusted=True))


def conjugate_flow(d0, k, t: float) -> Density:
    """``exp(tK) D exp(tK)^T`` for skew-symmetric ``K``."""
    k = np.asarray(k, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or np.max(np.abs(k + k.T)) > SKEW_TOL:
        raise NotSkew("K must satisfy K^T = -K")
    return conjugate(d0, expm(t * k))


def conjugate_trace(d0, k, times) -> FlowTrace:
    trace = FlowTrace()
    for t in times:
        trace.append(t, conjugate_flow(d0, k, t))
    return trace

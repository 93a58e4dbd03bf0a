"""
Bayes rules, total probability and likelihood bounds
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
The generalized Bayes rule replaces the matrix product with odot::

    D(M|y) = D(M) (.) D(y|M) / tr(D(M) (.) D(y|M))

and the normalizer ``tr(D(M) (.) D(y|M))`` is the evidence ``D(y)``. With a
diagonal prior and likelihood this is exactly the conventional rule.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .conditional import Conditional, FullConditional, _wrap, cond_full, cond_given_a, cond_scalar
from .dynamics import FlowTrace
from .errors import DegenerateMarginal, DimensionMismatch, NotStrictlyPD, ZeroEvidence
from .gleason import Density, as_density, prob, random_basis
from .odot import odot
from .symmat import (
    SpectralMatrix,
    Spectrum,
    _rng,
    as_spectral,
    is_strictly_pd,
    jacobi_eigh,
    mat_log,
    mat_log_plus,
    psd_eigenvalues,
    pseudo_inverse,
    range_basis,
    random_unit,
)
from .tensor import JointDensity, kron, marginal, partial_trace

EVIDENCE_FLOOR = 1e-300
ARGMAX_TIE_TOL = 1e-12


@dataclass(frozen=True)
class BayesUpdate:
    prior: Density
    likelihood: SpectralMatrix
    posterior: Density
    evidence: float


def bayes_main(prior, likelihood) -> BayesUpdate:
    """Generalized Bayes rule for a prior density and a PSD likelihood matrix.

    Raises
    ------
    ZeroEvidence
        If ``tr(prior (.) likelihood)`` is not above 1e-300, which happens when
        the two ranges do not intersect.
    """
    prior = as_density(prior)
    likelihood = as_spectral(likelihood)
    if prior.n != likelihood.n:
        raise DimensionMismatch(f"prior is {prior.n}x{prior.n}, likelihood {likelihood.n}x{likelihood.n}")
    joint = odot(prior, likelihood).matrix
    evidence = joint.trace()
    if not evidence > EVIDENCE_FLOOR:
        raise ZeroEvidence(f"tr(prior (.) likelihood) = {evidence:.3e}")
    spectrum = None
    if joint._spectrum is not None:
        spectrum = Spectrum(joint.eigenvalues / evidence, joint.eigenvectors)
    posterior = as_density(SpectralMatrix._with_spectrum(joint.data / evidence, spectrum))
    return BayesUpdate(prior, likelihood, posterior, evidence)


def bayes_iterate(prior, likelihood, steps: int) -> FlowTrace:
    """Repeat the Bayes update ``steps`` times with the same likelihood.

    The trace records the state at ``t = 0, 1, ..., steps`` and the overlap of
    each state's top eigenvector with the likelihood's top eigenvector.

    Since the likelihood is strictly PD, the range of every posterior equals
    the range of the prior, and ``t`` updates collapse to
    ``B exp(B^T (log+ P + t log L) B) B^T`` normalized. The log sum is carried
    forward instead of the posterior itself; otherwise a posterior whose
    eigenvalue ratio passes the rank cutoff would be truncated to rank one and
    the iteration would stall.
    """
    likelihood = as_spectral(likelihood)
    psd_eigenvalues(likelihood, "likelihood")
    if not is_strictly_pd(likelihood):
        raise NotStrictlyPD("likelihood must be strictly positive definite")
    lam = likelihood.eigenvalues
    if lam.size > 1 and not lam[0] - lam[1] > ARGMAX_TIE_TOL * lam[0]:
        raise ValueError("likelihood needs a unique largest eigenvalue")
    prior = as_density(prior)
    if prior.n != likelihood.n:
        raise DimensionMismatch("prior and likelihood differ in size")
    basis = range_basis(prior)
    log_prior = basis.T @ mat_log_plus(prior).data @ basis
    log_like = basis.T @ mat_log(likelihood).data @ basis
    trace = FlowTrace()
    trace.append(0, prior, likelihood)
    for t in range(1, steps + 1):
        trace.append(t, _normalized_exp_on(basis, log_prior + t * log_like), likelihood)
    return trace


def _normalized_exp_on(basis: np.ndarray, x: np.ndarray) -> Density:
    # shift by the top eigenvalue so neither overflow nor underflow occurs
    sp = jacobi_eigh(0.5 * (x + x.T))
    w = np.exp(sp.eigenvalues - sp.eigenvalues[0])
    w /= w.sum()
    vecs = basis @ sp.eigenvectors
    data = (vecs * w) @ vecs.T
    return as_density(SpectralMatrix._with_spectrum(0.5 * (data + data.T), None))


def _inverse_with_flag(m, what: str) -> SpectralMatrix:
    if not is_strictly_pd(m):
        warnings.warn(f"{what} is singular; using the pseudo-inverse", DegenerateMarginal, stacklevel=3)
    return pseudo_inverse(m)


def bayes_full(cond: FullConditional, prior) -> FullConditional:
    """Reverse a full conditional.

    Given ``D(A|B)`` and ``D(B)`` returns ``D(B|A)``::

        (I_A (x) D(B)) (.) D(A|B) (.) (tr_B((I_A (x) D(B)) (.) D(A|B)) (x) I_B)^-1

    Given ``D(B|A)`` (``cond.given == "A"``) and ``D(A)`` the roles swap and
    ``D(A|B)`` is returned, so applying this twice is a round trip.
    """
    na, nb = cond.dims
    prior = as_density(prior)
    if cond.given == "B":
        if prior.n != nb:
            raise DimensionMismatch(f"D(B) must be {nb}x{nb}")
        lifted = kron(np.eye(na), prior)
        joint = odot(lifted, cond).matrix
        other = partial_trace(joint, (na, nb), over="B")
        inv = _inverse_with_flag(other, "D(A)")
        denom = kron(inv, np.eye(nb))
        given = "A"
    else:
        if prior.n != na:
            raise DimensionMismatch(f"D(A) must be {na}x{na}")
        lifted = kron(prior, np.eye(nb))
        joint = odot(lifted, cond).matrix
        other = partial_trace(joint, (na, nb), over="A")
        inv = _inverse_with_flag(other, "D(B)")
        denom = kron(np.eye(na), inv)
        given = "B"
    out = odot(joint, denom).matrix
    return _wrap(FullConditional, out, dims=(na, nb), given=given,
                 degenerate_marginal=not is_strictly_pd(other))


bayes_B_given_A = bayes_full


def bayes_b_given_A(prob_b: float, cond_a_space_given_b, cond: FullConditional, prior_b) -> Conditional:
    """``D(b|A) = D(b) D(A|b) (.) (tr_B(D(A|B) (.) (I_A (x) D(B))))^-1``."""
    na, nb = cond.dims
    lifted = kron(np.eye(na), as_density(prior_b))
    d_a = partial_trace(odot(cond, lifted).matrix, (na, nb), over="B")
    numerator = SpectralMatrix(prob_b * np.asarray(cond_a_space_given_b, dtype=float), _trusted=True)
    out = odot(numerator, _inverse_with_flag(d_a, "D(A)")).matrix
    return _wrap(Conditional, out, degenerate_marginal=not is_strictly_pd(d_a))


def bayes_B_given_a(prior_b, cond_a_given_B) -> Density:
    """``D(B|a) = D(B) (.) D(a|B) / tr(D(B) (.) D(a|B))``."""
    return bayes_main(prior_b, cond_a_given_B).posterior


def bayes_scalar(j: JointDensity, a, b, basis) -> float:
    """``D(b|a) = D(b) D(a|b) / sum_i D(b_i) D(a|b_i)`` over an orthonormal basis of B."""
    d_b = marginal(j, "B")

    def weighted(v) -> float:
        return prob(d_b, v) * cond_scalar(j, a, v)

    normalizer = sum(weighted(v) for v in basis)
    if not normalizer > EVIDENCE_FLOOR:
        raise ZeroEvidence(f"normalizer {normalizer:.3e}")
    return weighted(b) / normalizer


@dataclass(frozen=True)
class TotalProbabilityReport:
    """Residuals of the four total-probability identities."""

    completeness: float
    basic: float
    fancy_scalar: float
    fancy_matrix: float
    degenerate_marginal: bool

    def worst(self) -> float:
        return max(self.completeness, self.basic, self.fancy_scalar, self.fancy_matrix)

    def as_dict(self) -> dict:
        return {
            "completeness": self.completeness,
            "basic": self.basic,
            "fancy_scalar": self.fancy_scalar,
            "fancy_matrix": self.fancy_matrix,
            "degenerate_marginal": self.degenerate_marginal,
        }


def total_probability_report(j: JointDensity, basis_seed=None) -> TotalProbabilityReport:
    """Check the total-probability identities on random bases and directions.

    * ``|1 - sum_i D(a_i)|`` over a random basis of A
    * ``|D(a) - sum_i D(a|b_i) D(b_i)|`` over a random basis of B
    * ``|D(a) - tr(D(a|B) (.) D(B))|``
    * ``||D(A) - tr_B(D(A|B) (.) (I_A (x) D(B)))||_F``
    """
    rng = _rng(basis_seed)
    na, nb = j.dims
    d_a = marginal(j, "A")
    d_b = marginal(j, "B")
    basis_a = random_basis(na, rng)
    basis_b = random_basis(nb, rng)
    a = random_unit(na, rng)
    pa = prob(d_a, a)

    completeness = abs(1.0 - sum(prob(d_a, v) for v in basis_a))
    basic = abs(pa - sum(cond_scalar(j, a, v) * prob(d_b, v) for v in basis_b))

    degenerate = not is_strictly_pd(d_b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateMarginal)
        c_a = cond_given_a(j, a)
        c_full = cond_full(j)
    if degenerate:
        warnings.warn("D(B) is singular; fancy identities use the pseudo-inverse",
                      DegenerateMarginal, stacklevel=2)
    fancy_scalar = abs(pa - odot(c_a, d_b).matrix.trace())
    rebuilt = partial_trace(odot(c_full, kron(np.eye(na), d_b)).matrix, (na, nb), over="B")
    fancy_matrix = float(np.linalg.norm(d_a.data - rebuilt.data))
    return TotalProbabilityReport(completeness, basic, fancy_scalar, fancy_matrix, degenerate)


@dataclass(frozen=True)
class BoundReport:
    """Both bound chains for the evidence ``D(y) = tr(L (.) P)``.

    Log domain::

        -log D(y) <= -log lambda_max(L (.) P) <= min_m -m^T (log L + log P) m

    Probability domain, with ``m_i`` the eigenvectors of the prior::

        D(y) <= tr(L P) <= max_i m_i^T L m_i
    """

    nll_evidence: float
    nll_rayleigh: float
    nll_map: float
    map_direction: np.ndarray
    prob_evidence: float
    trace_product: float
    prob_bound: float
    argmax_index: int

    def slacks(self) -> dict[str, float]:
        """Each link as ``right - left``; every value should be non-negative."""
        return {
            "nll_evidence<=nll_rayleigh": self.nll_rayleigh - self.nll_evidence,
            "nll_rayleigh<=nll_map": self.nll_map - self.nll_rayleigh,
            "evidence<=trace_product": self.trace_product - self.prob_evidence,
            "trace_product<=prob_bound": self.prob_bound - self.trace_product,
        }

    def chains_hold(self, tol: float = 1e-9) -> bool:
        return all(v >= -tol for v in self.slacks().values())


def bound_report(prior, likelihood) -> BoundReport:
    """Evaluate both bound chains.

    The minimizing ``m`` of the log chain is the top eigenvector of
    ``log L + log P``, so the minimum is computed exactly. A singular prior is
    accepted: ``log P`` is ``-inf`` off its range, so the minimum is taken over
    ``m`` in ``range(P)`` with ``log+``. The likelihood must be strictly PD.
    """
    prior = as_density(prior)
    likelihood = as_spectral(likelihood)
    if prior.n != likelihood.n:
        raise DimensionMismatch("prior and likelihood differ in size")
    psd_eigenvalues(likelihood, "likelihood")
    if not is_strictly_pd(likelihood):
        raise NotStrictlyPD("likelihood must be strictly positive definite")

    product = odot(likelihood, prior).matrix
    evidence = product.trace()
    nll_evidence = -math.log(evidence)
    nll_rayleigh = -math.log(float(product.eigenvalues[0]))

    basis = range_basis(prior)
    log_sum = mat_log(likelihood).data + mat_log_plus(prior).data
    inner = jacobi_eigh(basis.T @ log_sum @ basis)
    nll_map = -float(inner.eigenvalues[0])
    map_direction = basis @ inner.eigenvectors[:, 0]

    ell = likelihood.data
    trace_product = float(np.sum(ell * prior.data))
    m = prior.eigenvectors
    scores = np.einsum("ij,ik,kj->j", m, ell, m)
    best = float(scores.max())
    argmax = int(np.flatnonzero(scores >= best - ARGMAX_TIE_TOL)[0])
    return BoundReport(
        nll_evidence=nll_evidence,
        nll_rayleigh=nll_rayleigh,
        nll_map=nll_map,
        map_direction=map_direction,
        prob_evidence=evidence,
        trace_product=trace_product,
        prob_bound=float(scores[argmax]),
        argmax_index=argmax,
    )


__all__ = [
    "BayesUpdate",
    "BoundReport",
    "TotalProbabilityReport",
    "bayes_B_given_a",
    "bayes_b_given_A",
    "bayes_full",
    "bayes_iterate",
    "bayes_main",
    "bayes_scalar",
    "bayes_B_given_A",
    "bound_report",
    "total_probability_report",
]

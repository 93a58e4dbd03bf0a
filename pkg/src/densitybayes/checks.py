"""
Seeded property sweeps
~~~~~~~~~~~~~~~~~~~~~~
Every invariant is a named property that draws its randomness from its own
substream ``SeedSequence([seed, crc32(name)])``, so a report depends only on
the master seed and the trial count, never on which other properties ran.
"""
from __future__ import annotations

import json
import math
import warnings
import zlib
from dataclasses import asdict, dataclass
from typing import Callable, Iterable

import numpy as np

from . import bayes, conditional, dynamics, gleason, symmat, tensor
from .em_invert import em_step, fixed_point_residual
from .odot import golden_thompson_gap, odot as odot_fn
from .errors import DegenerateMarginal

PropertyFn = Callable[[np.random.Generator, int, bool], Iterable[float]]


@dataclass(frozen=True)
class Property:
    name: str
    threshold: float
    fn: PropertyFn
    cost: int = 1  # trials are divided by this for expensive sweeps

    @property
    def module(self) -> str:
        return self.name.split(".", 1)[0]


@dataclass(frozen=True)
class PropertyResult:
    name: str
    module: str
    trials: int
    worst_residual: float
    threshold: float
    passed: bool


REGISTRY: dict[str, Property] = {}


def prop(name: str, threshold: float, cost: int = 1):
    def deco(fn: PropertyFn) -> PropertyFn:
        REGISTRY[name] = Property(name, threshold, fn, cost)
        return fn
    return deco


def substream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())]))


def _size(rng, lo=2, hi=6) -> int:
    return int(rng.integers(lo, hi + 1))


def _fro(x) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float)))


def _commuting_pair(rng, n):
    q = symmat.random_orthogonal(n, rng)
    a = symmat.from_eigenpairs(np.exp(rng.uniform(-2, 2, n)), q)
    b = symmat.from_eigenpairs(np.exp(rng.uniform(-2, 2, n)), q)
    return a, b


# symmat

@prop("symmat.reconstruction", 1e-10)
def _p_reconstruction(rng, trials, inject_bad):
    for _ in range(trials):
        m = symmat.random_symmetric(_size(rng, 2, 8), seed=rng)
        yield _fro(m.spectrum().reconstruct() - m.data) / max(1.0, m.frobenius())


@prop("symmat.exp_log_roundtrip", 1e-9)
def _p_exp_log(rng, trials, inject_bad):
    for _ in range(trials):
        s = symmat.random_spd(_size(rng), log_range=4.0, seed=rng)
        yield _fro(symmat.mat_exp(symmat.mat_log_plus(s)).data - s.data) / max(1.0, s.frobenius())


@prop("symmat.exp_commuting_sum", 1e-10)
def _p_exp_sum(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng)
        q = symmat.random_orthogonal(n, rng)
        a = symmat.from_eigenpairs(rng.uniform(-1, 1, n), q)
        b = symmat.from_eigenpairs(rng.uniform(-1, 1, n), q)
        lhs = symmat.mat_exp(a.data + b.data).data
        rhs = symmat.mat_exp(a).data @ symmat.mat_exp(b).data
        yield _fro(lhs - rhs) / max(1.0, _fro(lhs))


# gleason

@prop("gleason.density_trace", 1e-12)
def _p_density_trace(rng, trials, inject_bad):
    for k in range(trials):
        d = gleason.random_density(_size(rng, 2, 8), seed=rng).data
        if inject_bad and k == 0:
            d = 1.1 * d
        yield abs(np.trace(d) - 1.0)


@prop("gleason.completeness", 1e-10)
def _p_completeness(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng, 2, 8)
        d = gleason.random_density(n, seed=rng)
        yield abs(1.0 - sum(gleason.prob(d, u) for u in gleason.random_basis(n, rng)))


@prop("gleason.prob_range", 1e-12)
def _p_prob_range(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng, 2, 8)
        p = gleason.prob(gleason.random_density(n, seed=rng), symmat.random_unit(n, rng))
        yield max(0.0, -p, p - 1.0)


@prop("gleason.representation_independence", 1e-12)
def _p_representation(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng, 2, 5)
        terms = int(rng.integers(n + 1, 2 * n + 2))
        dirs = [symmat.random_unit(n, rng) for _ in range(terms)]
        mix = gleason.mixture_density(rng.dirichlet(np.ones(terms)), dirs)
        # the eigen-mixture has the same matrix sum but different dyads
        eig = gleason.mixture_density(mix.eigenvalues.clip(0) / mix.eigenvalues.clip(0).sum(),
                                      list(mix.eigenvectors.T))
        yield max(abs(gleason.prob(eig, u) - gleason.prob(mix, u))
                  for u in (symmat.random_unit(n, rng) for _ in range(100)))


# odot

@prop("odot.commutative", 1e-9)
def _p_commutative(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng, 2, 4)
        s, t = symmat.random_spd(n, seed=rng), symmat.random_spd(n, seed=rng)
        yield _fro(odot_fn(s, t).matrix.data - odot_fn(t, s).matrix.data)


@prop("odot.associative", 1e-8)
def _p_associative(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng, 2, 4)
        s, t, r = (symmat.random_spd(n, log_range=1.5, seed=rng) for _ in range(3))
        left = odot_fn(odot_fn(s, t).matrix, r).matrix.data
        right = odot_fn(s, odot_fn(t, r).matrix).matrix.data
        yield _fro(left - right)


@prop("odot.commuting_reduction", 1e-9)
def _p_commuting(rng, trials, inject_bad):
    for _ in range(trials):
        s, t = _commuting_pair(rng, _size(rng, 2, 4))
        yield _fro(odot_fn(s, t).matrix.data - s.data @ t.data) / max(1.0, _fro(s.data @ t.data))


@prop("odot.golden_thompson", 1e-10)
def _p_golden_thompson(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng, 2, 5)
        s, t = symmat.random_spd(n, seed=rng), symmat.random_spd(n, seed=rng)
        gap = golden_thompson_gap(s, t)
        yield max(0.0, -gap) / max(1.0, float(np.sum(s.data * t.data)))


@prop("odot.determinant", 1e-8)
def _p_determinant(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng, 2, 5)
        s, t = symmat.random_spd(n, log_range=1.0, seed=rng), symmat.random_spd(n, log_range=1.0, seed=rng)
        want = float(np.prod(s.eigenvalues) * np.prod(t.eigenvalues))
        got = float(np.prod(odot_fn(s, t).matrix.eigenvalues))
        yield abs(got - want) / max(1.0, abs(want))


@prop("odot.rank_one_absorption", 1e-9)
def _p_absorption(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng, 2, 5)
        s = symmat.random_psd(n, int(rng.integers(1, n + 1)), rng)
        u = symmat.range_basis(s) @ symmat.random_unit(symmat.numerical_rank(s), rng)
        uu = np.outer(u, u)
        scale = math.exp(float(u @ symmat.mat_log_plus(s).data @ u))
        yield _fro(odot_fn(uu, s).matrix.data - scale * uu)


@prop("odot.inverse_cancellation", 1e-9)
def _p_inverse(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng, 2, 5)
        s = symmat.random_spd(n, seed=rng)
        yield _fro(odot_fn(s, symmat.inverse(s)).matrix.data - np.eye(n))


@prop("odot.figure_eight_containment", 1e-10, cost=20)
def _p_containment(rng, trials, inject_bad):
    from .figures import odot_dyad_form, quadratic_form
    for _ in range(trials):
        a = gleason.random_density(2, seed=rng)
        yield max(0.0, float(np.max(odot_dyad_form(a) - quadratic_form(a))))


# tensor

@prop("tensor.partial_trace_module", 1e-10)
def _p_pt_module(rng, trials, inject_bad):
    for _ in range(trials):
        na, nb = _size(rng, 2, 4), _size(rng, 2, 4)
        g = symmat.random_symmetric(na * nb, seed=rng).data
        f = symmat.random_symmetric(nb, seed=rng).data
        e = symmat.random_symmetric(na, seed=rng).data
        rt = tensor.partial_trace_general(g @ np.kron(np.eye(na), f), (na, nb), "A")
        lt = tensor.partial_trace_general(np.kron(np.eye(na), f) @ g, (na, nb), "A")
        base = tensor.partial_trace(g, (na, nb), "A").data
        rb = tensor.partial_trace_general(g @ np.kron(e, np.eye(nb)), (na, nb), "B")
        base_b = tensor.partial_trace(g, (na, nb), "B").data
        yield max(_fro(rt - base @ f), _fro(lt - f @ base), _fro(rb - base_b @ e))


@prop("tensor.partial_trace_pairing", 1e-10)
def _p_pt_pairing(rng, trials, inject_bad):
    for _ in range(trials):
        na, nb = _size(rng, 2, 4), _size(rng, 2, 4)
        g = symmat.random_symmetric(na * nb, seed=rng).data
        e = symmat.random_symmetric(na, seed=rng).data
        f = symmat.random_symmetric(nb, seed=rng).data
        lhs = np.trace(g @ np.kron(e, f))
        rhs = np.trace(tensor.partial_trace_general(g @ np.kron(np.eye(na), f), (na, nb), "B") @ e)
        yield abs(lhs - rhs)


@prop("tensor.mixed_product", 1e-10)
def _p_mixed(rng, trials, inject_bad):
    for _ in range(trials):
        na, nb = _size(rng, 2, 4), _size(rng, 2, 4)
        e, g = rng.standard_normal((2, na, na))
        f, h = rng.standard_normal((2, nb, nb))
        yield _fro(np.kron(e, f) @ np.kron(g, h) - np.kron(e @ g, f @ h))


# conditional

@prop("conditional.reconstruction", 1e-8)
def _p_cond_reconstruction(rng, trials, inject_bad):
    for _ in range(trials):
        na, nb = _size(rng, 2, 3), _size(rng, 2, 3)
        j = tensor.random_joint(na, nb, seed=rng)
        c = conditional.cond_full(j)
        rebuilt = odot_fn(c, tensor.kron(np.eye(na), tensor.marginal(j, "B"))).matrix
        yield _fro(rebuilt.data - j.data)


@prop("conditional.consistency_triangle", 1e-10)
def _p_triangle(rng, trials, inject_bad):
    for _ in range(trials):
        na, nb = _size(rng, 2, 3), _size(rng, 2, 3)
        j = tensor.random_joint(na, nb, seed=rng)
        a, b = symmat.random_unit(na, rng), symmat.random_unit(nb, rng)
        s = conditional.cond_scalar(j, a, b)
        via_slice = gleason.prob(conditional.cond_given_b(j, b), a)
        direct = tensor.joint_prob(j, a, b) / tensor.marginal_prob(j, "B", b)
        yield max(abs(s - via_slice), abs(s - direct), abs(via_slice - direct))


@prop("conditional.witness_soundness", 1e-8)
def _p_witness(rng, trials, inject_bad):
    for _ in range(trials):
        j = tensor.random_separable_joint(2, 2, int(rng.integers(1, 9)), rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateMarginal)
            yield max(0.0, conditional.separability_witness(j) - 1.0)


# bayes

@prop("bayes.posterior_normalization", 1e-12)
def _p_posterior(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng)
        u = bayes.bayes_main(gleason.random_density(n, seed=rng), symmat.random_spd(n, seed=rng))
        yield max(abs(u.posterior.trace() - 1.0), 0.0 if u.evidence > 0 else math.inf)


@prop("bayes.scale_invariance", 1e-12)
def _p_scale(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng)
        p, ell = gleason.random_density(n, seed=rng), symmat.random_spd(n, seed=rng)
        c = float(np.exp(rng.uniform(-3, 3)))
        a = bayes.bayes_main(p, ell).posterior.data
        b = bayes.bayes_main(p, c * ell.data).posterior.data
        yield _fro(a - b)


@prop("bayes.total_probability", 1e-8)
def _p_total(rng, trials, inject_bad):
    for _ in range(trials):
        j = tensor.random_joint(2, 2, seed=rng)
        yield bayes.total_probability_report(j, rng).worst()


@prop("bayes.bound_chains", 1e-9)
def _p_bounds(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng)
        r = bayes.bound_report(gleason.random_density(n, seed=rng), symmat.random_spd(n, seed=rng))
        yield max(0.0, -min(r.slacks().values()))


@prop("bayes.bound_tightness", 1e-9)
def _p_tightness(rng, trials, inject_bad):
    for _ in range(trials):
        ell = symmat.random_spd(_size(rng), seed=rng)
        v = ell.eigenvectors[:, 0]
        r = bayes.bound_report(np.outer(v, v), ell)
        yield abs(r.nll_evidence - r.nll_map)


# em_invert

@prop("em_invert.fixed_point", 1e-9)
def _p_fixed_point(rng, trials, inject_bad):
    for _ in range(trials):
        j = tensor.random_joint(_size(rng, 2, 3), _size(rng, 2, 3), seed=rng)
        c = conditional.cond_full(j)
        yield fixed_point_residual(c, tensor.marginal(j, "B"))


@prop("em_invert.trace_preservation", 1e-12)
def _p_em_trace(rng, trials, inject_bad):
    for _ in range(trials):
        na, nb = _size(rng, 2, 3), _size(rng, 2, 3)
        c = conditional.cond_full(tensor.random_joint(na, nb, seed=rng))
        w = gleason.random_density(nb, seed=rng)
        yield abs(em_step(c, w).trace() - 1.0)


# dynamics

@prop("dynamics.semigroup", 1e-9)
def _p_semigroup(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng, 2, 5)
        p, ell = gleason.random_density(n, seed=rng), symmat.random_spd(n, seed=rng)
        s, t = rng.uniform(0, 2, size=2)
        once = dynamics.flow_generalized(p, ell, s + t).data
        twice = dynamics.flow_generalized(dynamics.flow_generalized(p, ell, s), ell, t).data
        yield _fro(once - twice)


@prop("dynamics.trace_conservation", 1e-9)
def _p_flow_trace(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng, 2, 5)
        p, ell = gleason.random_density(n, seed=rng), symmat.random_spd(n, seed=rng)
        k = rng.standard_normal((n, n))
        k = k - k.T
        yield max(abs(dynamics.flow_generalized(p, ell, float(rng.uniform(0, 3))).trace() - 1.0),
                  abs(dynamics.conjugate_flow(p, k, float(rng.uniform(0, 3))).trace() - 1.0))


@prop("dynamics.spectrum_contrast", 1e-10)
def _p_contrast(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng, 2, 5)
        p, ell = gleason.random_density(n, seed=rng), symmat.random_spd(n, seed=rng)
        k = rng.standard_normal((n, n))
        k = k - k.T
        conj = dynamics.conjugate_flow(p, k, 1.0).eigenvalues
        moved = dynamics.flow_generalized(p, ell, 1.0).eigenvalues
        preserved = float(np.max(np.abs(conj - p.eigenvalues)))
        # a generic update must move the spectrum; report a failure otherwise
        yield preserved if np.max(np.abs(moved - p.eigenvalues)) > 1e-6 else math.inf


@prop("dynamics.diagonal_bridge", 1e-12)
def _p_bridge(rng, trials, inject_bad):
    for _ in range(trials):
        n = _size(rng, 2, 6)
        p = rng.dirichlet(np.ones(n))
        ell = rng.uniform(0.05, 1.0, n)
        t = float(rng.uniform(0, 4))
        d = dynamics.flow_generalized(np.diag(p), np.diag(ell), t).data
        yield float(np.max(np.abs(np.diag(d) - dynamics.flow_conventional(p, ell, t))))


def run_checks(seed: int = 0, trials: int = 100, suite: str = "all",
               inject_bad: bool = False, tol: float | None = None) -> dict:
    """Run the selected properties and return the JSON-ready report.

    ``tol`` replaces every property's own threshold when given.
    """
    chosen = [p for p in REGISTRY.values() if suite in ("all", p.module, p.name)]
    if not chosen:
        raise ValueError(f"no property matches suite {suite!r}")
    results = []
    for p in chosen:
        n = max(1, trials // p.cost)
        rng = substream(seed, p.name)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateMarginal)
            residuals = [float(r) for r in p.fn(rng, n, inject_bad)]
        worst = max(residuals) if residuals else 0.0
        threshold = p.threshold if tol is None else float(tol)
        passed = bool(worst <= threshold)
        results.append(PropertyResult(p.name, p.module, n, worst, threshold, passed))
    failures = [r.name for r in results if not r.passed]
    return {
        "seed": int(seed),
        "trials": int(trials),
        "suite": suite,
        "inject_bad": bool(inject_bad),
        "properties": [asdict(r) for r in results],
        "failures": failures,
        "passed": not failures,
    }


def report_json(report: dict) -> str:
    def clean(x):
        return x if not (isinstance(x, float) and not math.isfinite(x)) else repr(x)
    for row in report["properties"]:
        row["worst_residual"] = clean(row["worst_residual"])
    return json.dumps(report, indent=2, sort_keys=True) + "\n"

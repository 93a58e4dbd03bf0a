import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from densitybayes.bayes import (
    bayes_B_given_A,
    bayes_B_given_a,
    bayes_b_given_A,
    bayes_full,
    bayes_iterate,
    bayes_main,
    bayes_scalar,
    bound_report,
    total_probability_report,
)
from densitybayes.conditional import cond_full, cond_given_A, cond_given_b
from densitybayes.errors import DegenerateMarginal, NotStrictlyPD, ZeroEvidence
from densitybayes.gleason import Density, prob, random_basis, random_density
from densitybayes.symmat import random_orthogonal, random_spd
from densitybayes.tensor import (
    JointDensity,
    diagonal_joint,
    joint_prob,
    marginal,
    product_joint,
    random_joint,
    swap_factors,
)

from oracles import Table, bayes_table, odot_ref, random_unit_ref, sym_fn


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def fig5_pair():
    q = rotation(math.pi / 4)
    return np.diag([0.9, 0.1]), q @ np.diag([0.9, 0.1]) @ q.T


class TestBayesMain:
    def test_diagonal_reduces_to_table(self, rng):
        for _ in range(20):
            p = rng.dirichlet(np.ones(4))
            ell = rng.uniform(0.05, 1.0, 4)
            u = bayes_main(np.diag(p), np.diag(ell))
            post, ev = bayes_table(p, ell)
            np.testing.assert_allclose(u.posterior.data, np.diag(post), atol=1e-12)
            assert u.evidence == pytest.approx(ev, abs=1e-12)

    def test_uniform_prior(self, rng):
        ell = random_spd(3, seed=rng)
        u = bayes_main(np.eye(3) / 3, ell)
        np.testing.assert_allclose(u.posterior.data, ell.data / ell.trace(), atol=1e-12)

    def test_commuting(self, rng):
        q = random_orthogonal(4, rng)
        p = (q * rng.dirichlet(np.ones(4))) @ q.T
        ell = (q * rng.uniform(0.1, 2.0, 4)) @ q.T
        p, ell = 0.5 * (p + p.T), 0.5 * (ell + ell.T)
        prod = p @ ell
        np.testing.assert_allclose(bayes_main(p, ell).posterior.data, prod / np.trace(prod), atol=1e-10)

    def test_lapack_oracle(self, rng):
        for _ in range(10):
            p, ell = random_density(3, seed=rng), random_spd(3, seed=rng)
            raw = odot_ref(p.data, ell.data)
            u = bayes_main(p, ell)
            assert u.evidence == pytest.approx(np.trace(raw), rel=1e-10)
            np.testing.assert_allclose(u.posterior.data, raw / np.trace(raw), atol=1e-10)

    def test_scale_invariance(self, rng):
        for _ in range(20):
            p, ell = random_density(3, seed=rng), random_spd(3, seed=rng)
            c = float(rng.uniform(0.01, 100))
            a = bayes_main(p, ell).posterior.data
            b = bayes_main(p, c * ell.data).posterior.data
            assert np.linalg.norm(a - b) <= 1e-12

    def test_posterior_is_density(self, rng):
        for _ in range(30):
            u = bayes_main(random_density(4, seed=rng), random_spd(4, seed=rng))
            assert abs(u.posterior.trace() - 1) <= 1e-12 and u.evidence > 0

    def test_zero_evidence(self):
        with pytest.raises(ZeroEvidence):
            bayes_main(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))


class TestBayesIterate:
    def test_absorbing_dyad(self, rng):
        ell = random_spd(3, seed=rng)
        top = ell.eigenvectors[:, 0]
        tr = bayes_iterate(np.outer(top, top), ell, 10)
        for s in tr.states:
            np.testing.assert_allclose(s.data, np.outer(top, top), atol=1e-12)

    def test_tilted_likelihood_converges(self):
        prior, ell = fig5_pair()
        tr = bayes_iterate(prior, ell, 60)
        ov = np.asarray(tr.overlap)
        assert ov[-1] > 0.999
        assert np.all(np.diff(ov) >= -1e-12)

    def test_matches_repeated_update(self, rng):
        prior, ell = random_density(3, seed=rng), random_spd(3, seed=rng)
        tr = bayes_iterate(prior, ell, 5)
        state = prior
        for k in range(1, 6):
            state = bayes_main(state, ell).posterior
            np.testing.assert_allclose(tr.states[k].data, state.data, atol=1e-10)

    def test_diagonal_keeps_eigenvectors(self):
        tr = bayes_iterate(np.diag([0.2, 0.3, 0.5]), np.diag([0.9, 0.5, 0.1]), 8)
        for s in tr.states:
            np.testing.assert_allclose(s.data - np.diag(np.diag(s.data)), 0, atol=1e-15)

    def test_requires_unique_top(self):
        with pytest.raises(ValueError):
            bayes_iterate(np.eye(2) / 2, np.eye(2), 3)
        with pytest.raises(NotStrictlyPD):
            bayes_iterate(np.eye(2) / 2, np.diag([1.0, 0.0]), 3)


class TestConditionalRules:
    def test_full_swap_oracle(self, rng):
        for _ in range(10):
            j = random_joint(2, 3, seed=rng)
            got = bayes_B_given_A(cond_full(j), marginal(j, "B"))
            assert got.given == "A"
            swapped = JointDensity(swap_factors(j), (3, 2))
            want = swap_factors(cond_full(swapped).data, (3, 2))
            np.testing.assert_allclose(got.data, want, atol=1e-8)

    def test_full_round_trip(self, rng):
        for _ in range(10):
            j = random_joint(2, 2, seed=rng)
            c = cond_full(j)
            back = bayes_full(bayes_full(c, marginal(j, "B")), marginal(j, "A"))
            assert back.given == "B"
            assert np.linalg.norm(back.data - c.data) <= 1e-7

    def test_full_product_joint(self, rng):
        da, db = random_density(2, seed=rng), random_density(2, seed=rng)
        c = cond_full(product_joint(da, db))
        np.testing.assert_allclose(bayes_full(c, db).data, np.kron(np.eye(2), db.data), atol=1e-9)

    def test_item_two_diagonal(self, rng):
        p = rng.dirichlet(np.ones(6)).reshape(2, 3)
        t, j = Table(p), diagonal_joint(p)
        c = cond_full(j)
        for k in range(3):
            b = np.eye(3)[k]
            out = bayes_b_given_A(prob(marginal(j, "B"), b), cond_given_b(j, b).data, c, marginal(j, "B"))
            np.testing.assert_allclose(np.diag(out.data), t.b_given_a()[:, k], atol=1e-12)

    def test_item_three_is_bayes_main(self, rng):
        j = random_joint(2, 3, seed=rng)
        a = random_unit_ref(rng, 2)
        c = cond_given_A(j, a)
        got = bayes_B_given_a(marginal(j, "B"), c)
        np.testing.assert_allclose(got.data, bayes_main(marginal(j, "B"), c).posterior.data, atol=0)
        # and the slice route gives the same density
        np.testing.assert_allclose(got.data, odot_ref(marginal(j, "B").data, c.data) /
                                   np.trace(odot_ref(marginal(j, "B").data, c.data)), atol=1e-9)

    def test_item_three_diagonal(self, rng):
        p = rng.dirichlet(np.ones(6)).reshape(2, 3)
        t, j = Table(p), diagonal_joint(p)
        for i in range(2):
            got = bayes_B_given_a(marginal(j, "B"), cond_given_A(j, np.eye(2)[i]))
            np.testing.assert_allclose(np.diag(got.data), t.b_given_a()[i], atol=1e-12)

    def test_item_four_basis_invariance(self, rng):
        for _ in range(10):
            j = random_joint(2, 3, seed=rng)
            a, b = random_unit_ref(rng, 2), random_unit_ref(rng, 3)
            v1 = bayes_scalar(j, a, b, random_basis(3, rng))
            v2 = bayes_scalar(j, a, b, random_basis(3, rng))
            assert abs(v1 - v2) <= 1e-10
            pa = prob(marginal(j, "A"), a)
            assert v1 == pytest.approx(joint_prob(j, a, b) / pa, abs=1e-10)

    def test_item_four_diagonal(self, rng):
        p = rng.dirichlet(np.ones(4)).reshape(2, 2)
        t, j = Table(p), diagonal_joint(p)
        basis = list(np.eye(2))
        for i in range(2):
            for k in range(2):
                assert bayes_scalar(j, np.eye(2)[i], np.eye(2)[k], basis) == pytest.approx(t.b_given_a()[i, k],
                                                                                         abs=1e-12)


class TestTotalProbability:
    def test_diagonal(self, rng):
        p = rng.dirichlet(np.ones(6)).reshape(3, 2)
        r = total_probability_report(diagonal_joint(p), basis_seed=1)
        assert r.worst() <= 1e-12

    def test_random_joints(self):
        for seed in range(20):
            j = random_joint(2, 2, seed=seed)
            r = total_probability_report(j, basis_seed=seed)
            assert r.worst() <= 1e-8, r.as_dict()
            assert not r.degenerate_marginal

    def test_completeness(self, rng):
        for _ in range(50):
            d = random_density(int(rng.integers(2, 6)), seed=rng)
            assert abs(1 - sum(prob(d, v) for v in random_basis(d.n, rng))) <= 1e-10

    def test_degenerate_flagged(self):
        j = diagonal_joint(np.array([[0.3, 0.0], [0.7, 0.0]]))
        with pytest.warns(DegenerateMarginal):
            r = total_probability_report(j, basis_seed=0)
        assert r.degenerate_marginal


class TestBounds:
    def test_diagonal_map_bound(self, rng):
        p = rng.dirichlet(np.ones(4))
        ell = rng.uniform(0.05, 1.0, 4)
        r = bound_report(np.diag(p), np.diag(ell))
        assert r.nll_evidence == pytest.approx(-math.log(p @ ell), abs=1e-12)
        assert r.nll_map == pytest.approx(np.min(-np.log(ell) - np.log(p)), abs=1e-12)
        assert r.prob_bound == pytest.approx(ell.max(), abs=1e-12)
        assert r.chains_hold()

    def test_commuting_equality(self, rng):
        ell = random_spd(3, seed=rng)
        r = bound_report(ell.data / ell.trace(), ell)
        assert r.prob_evidence == pytest.approx(r.trace_product, abs=1e-10)
        assert r.chains_hold()

    def test_random_sweep(self, rng):
        for _ in range(500):
            n = int(rng.integers(2, 7))
            r = bound_report(random_density(n, seed=rng), random_spd(n, seed=rng))
            assert r.chains_hold(1e-9), r.slacks()

    def test_map_is_exact(self, rng):
        p, ell = random_density(3, seed=rng), random_spd(3, seed=rng)
        r = bound_report(p, ell)
        s = sym_fn(ell.data, np.log) + sym_fn(p.data, np.log)
        assert r.nll_map == pytest.approx(-np.linalg.eigvalsh(s).max(), abs=1e-10)
        m = r.map_direction
        assert -(m @ s @ m) == pytest.approx(r.nll_map, abs=1e-10)

    def test_tightness(self, rng):
        ell = random_spd(4, seed=rng)
        top = ell.eigenvectors[:, 0]
        r = bound_report(np.outer(top, top), ell)
        assert abs(r.nll_evidence - r.nll_map) <= 1e-9
        assert r.nll_evidence == pytest.approx(-math.log(ell.eigenvalues[0]), abs=1e-9)

    def test_argmax_tie_breaks_low(self):
        r = bound_report(np.eye(2) / 2, np.eye(2))
        assert r.argmax_index == 0

    def test_singular_likelihood_rejected(self):
        with pytest.raises(NotStrictlyPD):
            bound_report(np.eye(2) / 2, np.diag([1.0, 0.0]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 2**32 - 1))
    def test_chain_property(self, n, seed):
        r = np.random.default_rng(seed)
        assert bound_report(random_density(n, seed=r), random_spd(n, seed=r)).chains_hold(1e-9)

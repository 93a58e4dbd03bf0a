import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from densitybayes.errors import AsymmetricInput, BadRank, NonSquare, NotPSD, NotStrictlyPD
from densitybayes.symmat import (
    SpectralMatrix,
    eigendecompose,
    inverse,
    jacobi_eigh,
    mat_exp,
    mat_log,
    mat_log_plus,
    mat_power,
    numerical_rank,
    pseudo_inverse,
    random_orthogonal,
    random_psd,
    random_spd,
    random_symmetric,
    symmetrize_build,
    zero_threshold,
)

from oracles import eigh_desc, expm_taylor, sym_fn


class TestConstruction:
    def test_symmetric_input_kept(self):
        m = symmetrize_build([[1.0, 0.0], [0.0, 2.0]])
        np.testing.assert_array_equal(m.data, [[1.0, 0.0], [0.0, 2.0]])

    def test_tiny_asymmetry_averaged(self):
        m = symmetrize_build([[1.0, 1.0 + 1e-12], [1.0, 2.0]])
        np.testing.assert_allclose(m.data, [[1.0, 1.0 + 5e-13], [1.0 + 5e-13, 2.0]], rtol=0, atol=1e-15)
        assert m.data[0, 1] == m.data[1, 0]

    def test_asymmetric_rejected(self):
        with pytest.raises(AsymmetricInput):
            symmetrize_build([[0.0, 1.0], [0.0, 0.0]])

    def test_non_square_rejected(self):
        with pytest.raises(NonSquare):
            symmetrize_build(np.zeros((2, 3)))

    def test_data_is_read_only(self):
        m = SpectralMatrix(np.eye(2))
        with pytest.raises(ValueError):
            m.data[0, 0] = 5.0


class TestJacobi:
    def test_three_dyad_mixture_matrix(self):
        sp = eigendecompose(SpectralMatrix([[0.35, 0.15], [0.15, 0.65]]))
        np.testing.assert_allclose(sp.eigenvalues, [0.71, 0.29], atol=0.005)
        top = sp.eigenvectors[:, 0]
        np.testing.assert_allclose(np.abs(top), [0.38, 0.92], atol=0.01)

    def test_identity(self):
        sp = jacobi_eigh(np.eye(3))
        np.testing.assert_array_equal(sp.eigenvalues, [1.0, 1.0, 1.0])

    def test_diagonal_is_sorted_permutation(self):
        sp = jacobi_eigh(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_array_equal(sp.eigenvalues, [3.0, 2.0, 1.0])
        np.testing.assert_array_equal(np.abs(sp.eigenvectors), np.eye(3)[:, [0, 2, 1]])

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16])
    def test_matches_lapack(self, rng, n):
        for _ in range(5):
            m = random_symmetric(n, seed=rng)
            sp = m.spectrum()
            ref_w, ref_v = eigh_desc(m.data)
            np.testing.assert_allclose(sp.eigenvalues, ref_w, atol=1e-12 * max(1, abs(ref_w).max()))
            scale = max(1.0, m.frobenius())
            assert np.linalg.norm(sp.reconstruct() - m.data) <= 1e-10 * scale
            assert np.linalg.norm(sp.eigenvectors.T @ sp.eigenvectors - np.eye(n)) <= 1e-10

    def test_deterministic(self):
        m = random_symmetric(6, seed=3).data
        a, b = jacobi_eigh(m), jacobi_eigh(m.copy())
        np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)
        np.testing.assert_array_equal(a.eigenvectors, b.eigenvectors)

    def test_repeated_eigenvalues(self, rng):
        q = random_orthogonal(5, rng)
        m = (q * np.array([2.0, 2.0, 2.0, -1.0, -1.0])) @ q.T
        sp = jacobi_eigh(0.5 * (m + m.T))
        np.testing.assert_allclose(sp.eigenvalues, [2, 2, 2, -1, -1], atol=1e-13)
        assert np.linalg.norm(sp.reconstruct() - m) < 1e-12

    def test_size_64(self):
        m = random_symmetric(64, seed=0)
        sp = m.spectrum()
        assert np.linalg.norm(sp.reconstruct() - m.data) <= 1e-10 * m.frobenius()

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 7), st.integers(0, 2**32 - 1), st.floats(1e-6, 1e6))
    def test_reconstruction_property(self, n, seed, scale):
        m = random_symmetric(n, scale=scale, seed=seed)
        sp = m.spectrum()
        assert np.all(np.diff(sp.eigenvalues) <= 0)
        np.testing.assert_allclose(np.linalg.norm(sp.eigenvectors, axis=0), 1.0, atol=1e-12)
        assert np.linalg.norm(sp.reconstruct() - m.data) <= 1e-10 * max(1.0, m.frobenius())


class TestMatrixFunctions:
    def test_exp_of_zero(self):
        np.testing.assert_array_equal(mat_exp(np.zeros((3, 3))).data, np.eye(3))

    def test_exp_diagonal(self):
        np.testing.assert_allclose(mat_exp(np.diag([math.log(2), math.log(3)])).data, np.diag([2.0, 3.0]),
                                   rtol=1e-15, atol=1e-15)

    def test_exp_matches_power_series(self, rng):
        for _ in range(10):
            r = rng.standard_normal((4, 4))
            r = r + r.T
            r *= 2.0 / np.linalg.norm(r)
            np.testing.assert_allclose(mat_exp(r).data, expm_taylor(r), atol=1e-10)

    def test_log_plus_identity(self):
        np.testing.assert_array_equal(mat_log_plus(np.eye(3)).data, np.zeros((3, 3)))

    def test_log_plus_keeps_zero(self):
        np.testing.assert_allclose(mat_log_plus(np.diag([math.e, 0.0])).data, np.diag([1.0, 0.0]), atol=1e-15)

    def test_log_plus_rejects_negative(self):
        with pytest.raises(NotPSD):
            mat_log_plus(np.diag([1.0, -0.1]))

    def test_log_requires_strict(self):
        with pytest.raises(NotStrictlyPD):
            mat_log(np.diag([1.0, 0.0]))

    def test_roundtrip_log_exp(self, rng):
        for _ in range(20):
            q = random_orthogonal(4, rng)
            r = (q * rng.uniform(-3, 3, 4)) @ q.T
            r = 0.5 * (r + r.T)
            np.testing.assert_allclose(mat_log_plus(mat_exp(r)).data, r, atol=1e-12)

    def test_roundtrip_exp_log_wide_condition(self, rng):
        for _ in range(20):
            s = random_spd(5, log_range=0.5 * math.log(1e8), seed=rng)
            err = np.linalg.norm(mat_exp(mat_log_plus(s)).data - s.data)
            assert err <= 1e-9 * max(1.0, s.frobenius())

    def test_log_matches_lapack(self, rng):
        s = random_spd(4, seed=rng)
        np.testing.assert_allclose(mat_log(s).data, sym_fn(s.data, np.log), atol=1e-12)

    def test_exp_of_commuting_sum(self, rng):
        q = random_orthogonal(4, rng)
        a = (q * rng.uniform(-1, 1, 4)) @ q.T
        b = (q * rng.uniform(-1, 1, 4)) @ q.T
        a, b = 0.5 * (a + a.T), 0.5 * (b + b.T)
        np.testing.assert_allclose(mat_exp(a + b).data, mat_exp(a).data @ mat_exp(b).data, atol=1e-10)

    def test_power(self):
        np.testing.assert_allclose(mat_power(np.diag([4.0, 0.0]), 0.5).data, np.diag([2.0, 0.0]))

    def test_inverse(self, rng):
        s = random_spd(4, seed=rng)
        np.testing.assert_allclose(inverse(s).data @ s.data, np.eye(4), atol=1e-10)


class TestPseudoInverse:
    def test_diagonal(self):
        np.testing.assert_allclose(pseudo_inverse(np.diag([2.0, 4.0])).data, np.diag([0.5, 0.25]))

    def test_rank_deficient(self):
        np.testing.assert_allclose(pseudo_inverse(np.diag([2.0, 0.0])).data, np.diag([0.5, 0.0]))

    def test_moore_penrose(self, rng):
        for _ in range(10):
            m = random_psd(4, 2, rng)
            p = pseudo_inverse(m).data
            np.testing.assert_allclose(m.data @ p @ m.data, m.data, atol=1e-9)
            np.testing.assert_allclose(p, np.linalg.pinv(m.data, hermitian=True), atol=1e-8)


class TestRandom:
    def test_n_one(self):
        q = random_orthogonal(1, seed=0)
        assert q.shape == (1, 1) and abs(q[0, 0]) == 1.0

    def test_orthonormal(self):
        q = random_orthogonal(6, seed=42)
        assert np.linalg.norm(q.T @ q - np.eye(6)) <= 1e-10

    @pytest.mark.parametrize("rank", [1, 2, 3, 5])
    def test_psd_rank(self, rank):
        m = random_psd(5, rank, seed=rank)
        assert numerical_rank(m) == rank
        assert m.eigenvalues[-1] >= -1e-15

    def test_full_rank_positive(self):
        assert random_psd(4, seed=1).eigenvalues[-1] > 0

    def test_bad_rank(self):
        with pytest.raises(BadRank):
            random_psd(3, 4, seed=0)
        with pytest.raises(BadRank):
            random_psd(3, 0, seed=0)

    def test_bit_identical_per_seed(self):
        np.testing.assert_array_equal(random_psd(5, 3, seed=9).data, random_psd(5, 3, seed=9).data)
        np.testing.assert_array_equal(random_symmetric(4, seed=2).data, random_symmetric(4, seed=2).data)


def test_zero_threshold_switches_to_absolute():
    assert zero_threshold(1.0) == 1e-10
    assert zero_threshold(1e-5) == 1e-14

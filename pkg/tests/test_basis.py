"""Basis functions, polynomial sums, and the momentum ladder oracle."""

import numpy as np
import pytest
from scipy.special import eval_genlaguerre

from magnc.basis import (
    BasisIndex,
    MagneticLength,
    PhaseConventionError,
    QuadratureScheme,
    b_minus_matrix,
    b_plus_matrix,
    basis_with_gradient,
    default_radius,
    eval_basis_function,
    eval_generalized_laguerre,
    gram_matrix,
    momentum_matrix,
    momentum_quadrature,
    number_ladders,
    verify_ladder_phases,
)

SQRT2PI = np.sqrt(2.0 * np.pi)


def mpmath_laguerre(n, alpha, zeta):
    """Arbitrary-precision sum of the same finite series (independent oracle)."""
    import mpmath as mp

    mp.mp.dps = 50
    total = mp.mpf(0)
    for j in range(n + 1):
        num = mp.mpf(1)
        for i in range(j + 1, n + 1):
            num *= alpha + i
        num /= mp.factorial(j) * mp.factorial(n - j)
        total += num * (-mp.mpf(zeta)) ** j
    return float(total)


class TestLaguerre:
    def test_degree_zero_is_one(self):
        assert eval_generalized_laguerre(0, 3, 7.5) == 1.0

    def test_first_degree(self):
        # degree-1 sum: (alpha + 1) - zeta
        assert eval_generalized_laguerre(1, 0, 2.0) == pytest.approx(-1.0, abs=1e-14)

    def test_negative_alpha_at_zero(self):
        # alpha = -1 kills the constant coefficient
        assert eval_generalized_laguerre(2, -1, 0.0) == 0.0

    @pytest.mark.parametrize("n,alpha", [(0, 2), (3, 0), (5, 2), (4, -2), (7, -7), (6, 3)])
    def test_against_arbitrary_precision(self, n, alpha):
        for zeta in (0.0, 0.3, 2.7, 11.0):
            want = mpmath_laguerre(n, alpha, zeta)
            got = eval_generalized_laguerre(n, alpha, zeta)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("n,alpha", [(4, 1), (9, 3), (12, 0)])
    def test_against_scipy_for_nonnegative_alpha(self, n, alpha):
        # the explicit alternating sum carries ~1e-11 cancellation noise at
        # degree 12 and zeta = 20; well inside every downstream tolerance
        zeta = np.linspace(0.0, 20.0, 11)
        got = eval_generalized_laguerre(n, alpha, zeta)
        want = eval_genlaguerre(n, alpha, zeta)
        assert np.allclose(got, want, rtol=1e-9, atol=1e-12)

    def test_large_degree_stays_finite(self):
        val = eval_generalized_laguerre(120, 80, 37.5)
        assert np.isfinite(val)

    def test_rejects_negative_degree(self):
        with pytest.raises(ValueError):
            eval_generalized_laguerre(-1, 0, 1.0)


class TestBasisFunction:
    def test_origin_value_ground_state(self):
        for lb in (1.0, 0.5, 2.3):
            got = eval_basis_function((0, 0), (0.0, 0.0), lb)
            assert got == pytest.approx(1.0 / (SQRT2PI * lb), abs=1e-14)

    def test_origin_vanishes_off_diagonal(self):
        assert eval_basis_function((1, 3), (0.0, 0.0), 1.0) == 0.0
        assert eval_basis_function((3, 1), (0.0, 0.0), 1.0) == 0.0

    def test_origin_diagonal_all_equal(self):
        for k in range(5):
            got = eval_basis_function((k, k), (0.0, 0.0), 1.0)
            assert got == pytest.approx(1.0 / SQRT2PI, abs=1e-13)

    def test_finite_near_origin_mixed_indices(self):
        pts = np.array([[1e-9, -1e-9], [1e-5, 0.0], [0.0, 1e-4]])
        for idx in [(0, 2), (2, 0), (1, 4)]:
            vals = eval_basis_function(idx, pts, 1.0)
            assert np.all(np.isfinite(vals))
            assert np.abs(vals).max() < 1e-3

    def test_index_swap_conjugation_symmetry(self):
        pts = np.array([[0.7, -0.4], [1.2, 2.1]])
        for (n, m) in [(0, 1), (2, 5), (3, 1)]:
            a = eval_basis_function((n, m), pts, 1.0)
            b = eval_basis_function((m, n), pts, 1.0)
            sign = (-1.0) ** ((n - m) % 2)
            assert np.allclose(a, sign * np.conj(b), atol=1e-13)

    def test_orthonormality_under_quadrature(self):
        labels, gram = gram_matrix(8)
        dev = np.abs(gram - np.eye(len(labels))).max()
        assert dev < 1e-7

    def test_gradient_matches_finite_differences(self):
        h = 1e-6
        x = np.array([0.37, -1.21])
        for idx in [(0, 0), (2, 1), (1, 3)]:
            _, g1, g2 = basis_with_gradient(idx, x, 1.0)
            fd1 = (
                eval_basis_function(idx, x + [h, 0.0], 1.0)
                - eval_basis_function(idx, x - [h, 0.0], 1.0)
            ) / (2 * h)
            fd2 = (
                eval_basis_function(idx, x + [0.0, h], 1.0)
                - eval_basis_function(idx, x - [0.0, h], 1.0)
            ) / (2 * h)
            assert g1 == pytest.approx(fd1, rel=1e-6, abs=1e-8)
            assert g2 == pytest.approx(fd2, rel=1e-6, abs=1e-8)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            BasisIndex(-1, 0)
        with pytest.raises(ValueError):
            MagneticLength(0.0)
        with pytest.raises(ValueError):
            QuadratureScheme(radius=5.0, nodes_per_axis=4)


class TestMomentumMatrices:
    def test_ladder_structure_moves_one_index(self):
        n_max, m_max = 5, 4
        for which, moves_n in [("K1", True), ("K2", True), ("G1", False), ("G2", False)]:
            mat = momentum_matrix(which, n_max, m_max).tocoo()
            for r, c in zip(mat.row, mat.col):
                nr, mr = r % n_max, r // n_max
                nc, mc = c % n_max, c // n_max
                if moves_n:
                    assert abs(nr - nc) == 1 and mr == mc
                else:
                    assert abs(mr - mc) == 1 and nr == nc

    def test_hermitian(self):
        for which in ("K1", "K2", "G1", "G2"):
            mat = momentum_matrix(which, 6, 6).toarray()
            assert np.abs(mat - mat.conj().T).max() < 1e-15

    def test_oscillator_diagonal(self):
        n_max = m_max = 7
        q = sum(
            momentum_matrix(w, n_max, m_max).toarray() @ momentum_matrix(w, n_max, m_max).toarray()
            for w in ("K1", "K2", "G1", "G2")
        ) / 2.0
        for n in range(n_max - 1):
            for m in range(m_max - 1):
                i = m * n_max + n
                assert q[i, i] == pytest.approx(n + m + 1, abs=1e-12)

    def test_commutators_on_interior(self):
        n_max = m_max = 8
        k1 = momentum_matrix("K1", n_max, m_max).toarray()
        k2 = momentum_matrix("K2", n_max, m_max).toarray()
        g1 = momentum_matrix("G1", n_max, m_max).toarray()
        g2 = momentum_matrix("G2", n_max, m_max).toarray()
        interior = np.array(
            [m * n_max + n for m in range(m_max - 1) for n in range(n_max - 1)]
        )
        def on_int(x):
            return x[np.ix_(interior, interior)]

        assert np.abs(on_int(k1 @ g1 - g1 @ k1)).max() < 1e-12
        assert np.abs(on_int(k2 @ g2 - g2 @ k2)).max() < 1e-12
        assert np.abs(on_int(k1 @ k2 - k2 @ k1) - (-1j) * np.eye(len(interior))).max() < 1e-12
        assert np.abs(on_int(g1 @ g2 - g2 @ g1) - (-1j) * np.eye(len(interior))).max() < 1e-12

    def test_number_operator_from_degeneracy_ladders(self):
        size = 9
        bp, bm = b_plus_matrix(size).toarray(), b_minus_matrix(size).toarray()
        nb = bp @ bm
        want = np.diag(np.arange(size, dtype=float))
        # the last column of b+ leaks out of the truncation; check the interior
        assert np.abs((nb - want)[: size - 1, : size - 1]).max() < 1e-14

    def test_quadrature_oracle_agrees_with_ladder_rules(self):
        worst = verify_ladder_phases(lb=1.0, n_sub=3, m_sub=3)
        assert worst < 1e-6

    def test_oracle_at_other_magnetic_length(self):
        worst = verify_ladder_phases(lb=0.65, n_sub=2, m_sub=3)
        assert worst < 1e-6

    def test_wrong_phases_are_caught(self):
        # flipping a ladder phase must trip the oracle comparison
        got = momentum_quadrature("K1", (1, 0), (0, 0), 1.0)
        want = momentum_matrix("K1", 2, 2).toarray()[1, 0]
        assert abs(got - want) < 1e-7
        assert abs(got + want) > 0.5  # the sign matters

    def test_rejects_tiny_truncations(self):
        with pytest.raises(ValueError):
            momentum_matrix("K1", 1, 4)

    def test_default_radius_grows(self):
        assert default_radius(8, 8) > default_radius(2, 2) > 4.0

    def test_oracle_cache_roundtrip(self, tmp_path):
        from magnc.basis import load_oracle_cache, save_oracle_cache

        path = tmp_path / "oracle.txt"
        save_oracle_cache(path, 2, 2, 1.0)
        cache = load_oracle_cache(path)
        got = cache[("K1", 0, 0, 1, 0)]
        want = momentum_matrix("K1", 2, 2).toarray()[1, 0]
        assert abs(got - want) < 1e-7
        # every cached entry agrees with the ladder tables
        for (which, n, m, n2, m2), v in cache.items():
            closed = momentum_matrix(which, 2, 2).toarray()
            assert abs(v - closed[m2 * 2 + n2, m * 2 + n]) < 1e-6

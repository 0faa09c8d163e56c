"""The three 2-cocycles, the integer pairings, and the Hochschild machinery."""

import numpy as np
import pytest

from magnc.algebra import (
    MagneticElement,
    UnitalElement,
    compose,
    conjugated_projection,
    landau_projection,
    projection_sum,
    random_element,
    trace_int,
    upsilon,
    zero_element,
)
from magnc.cocycles import (
    Cochain,
    chern_number,
    ch_dix,
    ch_hat,
    delta0,
    delta1,
    gap_label,
    graded_one_form_product_trace,
    graded_trace,
    graded_two_form_trace,
    hochschild_b,
    hochschild_coboundary,
    nc_integral,
    physical_observables,
    psi,
    psi_cochain,
    tau2,
    trace_cochain,
    two_form_scale,
)
from magnc.dirac import DiracContext, QuartetOperator, dual_landau_projection

CTX = DiracContext(lb=1.0, eps=0.5, n_max=16, m_max=512, buffer=4)
LB = 1.0


def rand(seed, k=4):
    return random_element(seed, k, 1.0, LB)


class TestExactTier:
    def test_psi_on_lowest_projection(self):
        # inverting the Chern normalization: the pairing value is -i l^2
        for lb in (1.0, 1.7):
            p = landau_projection(0, lb)
            val = psi(p, p, p).value
            assert val == pytest.approx(-1j * lb**2, abs=1e-12)

    def test_psi_kills_unit_slots(self):
        phi = psi_cochain(LB)
        a = rand(1)
        one = UnitalElement.unit(LB)
        assert phi(a, one, a) == pytest.approx(0.0, abs=1e-14)
        assert phi(a, a, one) == pytest.approx(0.0, abs=1e-14)

    def test_psi_cyclic(self):
        for seed in range(50):
            a0, a1, a2 = rand(3 * seed), rand(3 * seed + 1), rand(3 * seed + 2)
            lhs = psi(a0, a1, a2).value
            rhs = psi(a2, a0, a1).value
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)

    def test_gap_label_landau_levels(self):
        for j in range(6):
            assert gap_label(landau_projection(j, LB)) == pytest.approx(1.0, abs=1e-9)

    def test_gap_label_zero_and_sums(self):
        assert gap_label(zero_element(LB)) == 0.0
        assert gap_label(projection_sum((0, 1), LB)) == pytest.approx(2.0, abs=1e-9)

    def test_gap_label_rejects_non_projection(self):
        with pytest.raises(ValueError):
            gap_label(rand(3))

    def test_chern_landau_levels(self):
        for j in range(6):
            assert chern_number(landau_projection(j, LB)) == pytest.approx(1.0, abs=1e-8)

    def test_chern_additive_on_orthogonal_sum(self):
        assert chern_number(projection_sum((0, 1), LB)) == pytest.approx(2.0, abs=1e-8)
        assert chern_number(zero_element(LB)) == 0.0

    def test_chern_on_conjugated_projections(self):
        for seed in range(10):
            p = conjugated_projection(seed, 6, LB)
            c = chern_number(p)
            assert c == pytest.approx(1.0, abs=1e-8)

    def test_streda_equality(self):
        for seed in range(10):
            p = conjugated_projection(seed + 50, 5, LB)
            assert chern_number(p) == pytest.approx(gap_label(p), abs=1e-8)

    def test_scale_covariance(self):
        # psi scales as l^2, so the Chern pairing is independent of l
        block = conjugated_projection(7, 5, 1.0).block
        for lb in (0.5, 2.0, 3.3):
            p = MagneticElement(block, lb)
            val = psi(p, p, p).value
            assert val == pytest.approx(-1j * lb**2 * 1.0, rel=1e-9)
            assert chern_number(p) == pytest.approx(1.0, abs=1e-8)


class TestNcIntegral:
    def test_landau_projection(self):
        v = nc_integral(landau_projection(0, LB), CTX)
        assert v.value == pytest.approx(1.0, rel=0.02)
        assert v.method.startswith("dixmier")

    def test_offdiagonal_vanishes(self):
        v = nc_integral(upsilon(0, 1, LB), CTX)
        assert abs(v.value) < 1e-3

    def test_zero(self):
        v = nc_integral(zero_element(LB), CTX)
        assert v.value == 0.0

    def test_matches_algebra_trace(self):
        for seed in range(5):
            a = rand(seed)
            v = nc_integral(a, CTX)
            assert v.value == pytest.approx(trace_int(a), rel=0.02, abs=1e-3)

    def test_rejects_oversized_support(self):
        with pytest.raises(ValueError):
            nc_integral(upsilon(0, CTX.n_max + 2, LB), CTX)


class TestDiracCharacter:
    def test_lowest_projection(self):
        p = landau_projection(0, LB)
        v = ch_dix(p, p, p, CTX)
        assert v.value == pytest.approx(1.0, rel=0.05)

    def test_unit_slot_vanishes(self):
        # a unit in a derivation slot kills the commutators; realized here by
        # the zero element (the unit itself is not finitely supported)
        a = rand(2)
        v = ch_dix(a, zero_element(LB), a, CTX)
        assert abs(v.value) < 1e-12

    def test_matches_exact_cocycle_on_corpus(self):
        for seed in range(15):
            a0, a1, a2 = rand(3 * seed), rand(3 * seed + 1), rand(3 * seed + 2)
            want = (1j / LB**2) * psi(a0, a1, a2).value
            got = ch_dix(a0, a1, a2, CTX)
            assert abs(got.value - want) / max(abs(want), 1e-6) < 0.05

    def test_error_bar_reported(self):
        a = rand(9)
        v = ch_dix(a, a, a, CTX)
        assert v.error > 0


class TestChiTwistedCharacter:
    def test_projection_vanishes_termwise(self):
        p = landau_projection(0, LB)
        v = ch_hat(p, p, p, CTX)
        assert v.value == 0j
        assert v.method == "spin-trace-factorized"

    def test_random_triples_vanish(self):
        for seed in range(10):
            v = ch_hat(rand(3 * seed), rand(3 * seed + 1), rand(3 * seed + 2), CTX)
            assert abs(v.value) < 1e-10

    def test_zero_input(self):
        z = zero_element(LB)
        assert ch_hat(z, z, z, CTX).value == 0j

    def test_block_resolved_route_agrees(self):
        a0, a1, a2 = rand(31), rand(32), rand(33)
        v = ch_hat(a0, a1, a2, CTX, block_resolved=True)
        scale = max(abs((1j / LB**2) * psi(a0, a1, a2).value), 1e-9)
        assert abs(v.value) <= 3 * v.error + 0.01 * scale


class TestGradedTrace:
    def test_trace_class_input_vanishes(self):
        # a finite-rank degeneracy-diagonal operator has zero graded trace
        op = dual_landau_projection(CTX, 2)
        v = graded_trace(op, CTX)
        assert abs(v.value) < 1e-4

    def test_two_form_closedness(self):
        for seed in range(5):
            a1, a2 = rand(2 * seed + 100), rand(2 * seed + 101)
            v = graded_two_form_trace(a1, a2, CTX)
            scale = two_form_scale(a1, a2, LB)
            assert abs(v.value) <= 0.05 * scale

    def test_graded_anticyclicity_on_one_forms(self):
        for seed in range(3):
            x0, x1 = rand(4 * seed + 200), rand(4 * seed + 201)
            y0, y1 = rand(4 * seed + 202), rand(4 * seed + 203)
            v12 = graded_one_form_product_trace(x0, x1, y0, y1, CTX)
            v21 = graded_one_form_product_trace(y0, y1, x0, x1, CTX)
            tol = 3 * (v12.error + v21.error) + 1e-6
            assert abs(v12.value + v21.value) <= tol

    def test_rejects_non_m_diagonal(self):
        from magnc.dirac import build_dirac

        d = build_dirac(CTX, check=False)
        with pytest.raises(ValueError):
            graded_trace(d, CTX)


class TestFredholmCharacter:
    def test_reduced_route_projection(self):
        p = landau_projection(0, LB)
        v = tau2(p, p, p, CTX, "reduced")
        assert v.value == pytest.approx(1.0, rel=0.05)

    def test_direct_route_projection(self):
        p = landau_projection(0, LB)
        v = tau2(p, p, p, CTX, "direct")
        assert v.value == pytest.approx(1.0, rel=0.10)

    def test_unit_derivation_slot(self):
        a = rand(41)
        v = tau2(a, zero_element(LB), a, CTX, "reduced")
        assert abs(v.value) < 1e-12

    def test_routes_agree_with_exact_cocycle(self):
        for seed in range(4):
            a0, a1, a2 = rand(3 * seed + 300), rand(3 * seed + 301), rand(3 * seed + 302)
            want = (1j / LB**2) * psi(a0, a1, a2).value
            v_i = tau2(a0, a1, a2, CTX, "reduced")
            v_ii = tau2(a0, a1, a2, CTX, "direct")
            assert abs(v_i.value - want) / abs(want) < 0.05
            assert abs(v_ii.value - want) / abs(want) < 0.10

    def test_both_routes_with_agreement_flag(self):
        p = landau_projection(0, LB)
        v = tau2(p, p, p, CTX, "both")
        assert v.value == pytest.approx(1.0, rel=0.05)
        assert "two-routes" in v.method
        assert "flagged" not in v.method

    def test_unknown_route_rejected(self):
        a = rand(1)
        with pytest.raises(ValueError):
            tau2(a, a, a, CTX, "sideways")


class TestHochschild:
    def test_trace_is_a_cocycle(self):
        tr = trace_cochain(LB)
        for seed in range(20):
            a0, a1 = rand(2 * seed), rand(2 * seed + 1)
            assert abs(hochschild_b(tr, (a0, a1))) < 1e-12

    def test_psi_is_a_cocycle(self):
        phi = psi_cochain(LB)
        for seed in range(100):
            args = [rand(4 * seed + s) for s in range(4)]
            assert abs(hochschild_b(phi, args)) < 1e-9

    def test_coboundary_squares_to_zero(self):
        phi1 = Cochain(
            1,
            lambda u0, u1: trace_int(compose(u0.element, u1.element))
            + 0.5 * u0.scalar * trace_int(u1.element),
        )
        bb = hochschild_coboundary(hochschild_coboundary(phi1))
        for seed in range(20):
            args = [rand(4 * seed + s, 3) for s in range(4)]
            assert abs(bb(*args)) < 1e-10

    def test_arity_enforced(self):
        phi = psi_cochain(LB)
        with pytest.raises(ValueError):
            hochschild_b(phi, (rand(0), rand(1)))

    def test_cochain_call_arity(self):
        phi = psi_cochain(LB)
        with pytest.raises(ValueError):
            phi(rand(0), rand(1))


class TestParameterIndependence:
    def test_magnetic_length_covariance_of_dixmier_tier(self):
        # the extrapolated character is scale covariant exactly like the
        # exact cocycle: relative agreement is identical across lengths
        rels = []
        for lb in (0.7, 2.0):
            ctx = DiracContext(lb=lb, eps=0.5, n_max=16, m_max=512, buffer=4)
            a0, a1, a2 = (alg_random(s, lb) for s in (10, 11, 12))
            want = (1j / lb**2) * psi(a0, a1, a2).value
            got = ch_dix(a0, a1, a2, ctx).value
            rels.append(abs(got - want) / abs(want))
            assert nc_integral(
                landau_projection(0, lb), ctx
            ).value == pytest.approx(1.0, rel=0.02)
        assert rels[0] == pytest.approx(rels[1], rel=1e-6)
        assert max(rels) < 0.05

    def test_regularization_independence_of_character(self):
        # any eps > 0 works; eps < 1 exercises the negatively shifted block
        for eps in (0.25, 1.5):
            ctx = DiracContext(lb=LB, eps=eps, n_max=16, m_max=512, buffer=4)
            a0, a1, a2 = (alg_random(s, LB) for s in (20, 21, 22))
            want = (1j / LB**2) * psi(a0, a1, a2).value
            got = ch_dix(a0, a1, a2, ctx).value
            assert abs(got - want) / abs(want) < 0.05


def alg_random(seed, lb):
    return random_element(seed, 4, 1.0, lb)


class TestObservables:
    def test_lowest_level(self):
        p = landau_projection(0, LB)
        obs = physical_observables(p)
        assert obs["idos"] == pytest.approx(1.0 / (2 * np.pi * LB**2), rel=1e-9)
        assert obs["hall_in_conductance_quanta"] == pytest.approx(1.0, abs=1e-8)

    def test_zero(self):
        obs = physical_observables(zero_element(LB))
        assert obs["idos"] == 0.0
        assert obs["hall_in_conductance_quanta"] == 0.0

    def test_additive(self):
        obs = physical_observables(projection_sum((0, 1), LB))
        assert obs["idos"] == pytest.approx(2.0 / (2 * np.pi * LB**2), rel=1e-9)
        assert obs["hall_in_conductance_quanta"] == pytest.approx(2.0, abs=1e-8)

    def test_scale_dependence(self):
        p0 = landau_projection(0, 2.0)
        obs = physical_observables(p0)
        assert obs["idos"] == pytest.approx(1.0 / (8 * np.pi), rel=1e-9)
        assert obs["hall_in_conductance_quanta"] == pytest.approx(1.0, abs=1e-8)

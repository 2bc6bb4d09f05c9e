from fractions import Fraction

import pytest

from deckmap.algebra import ComplexFloat, ComplexPoly, gr
from deckmap.detect import (
    all_critical_fiber,
    count_critical_in_fiber,
    cross_ratio,
    cross_ratio_certificate,
    detect_higher_degree,
    detect_quadratic,
    fiber_criterion_values,
    is_power_map,
    mobius_factor,
    shared_iterate_analysis,
)
from deckmap.errors import HypothesisViolation, InvalidArgument
from deckmap.mobius import scaling
from deckmap.ratmap import (
    INF,
    RationalMap,
    SpherePoint,
    critical_data,
    points_equal,
)

from conftest import (
    f_a,
    f_c,
    rand_bicritical,
    rand_coalescing_quadratic,
    rand_mobius,
    rand_quadratic,
)


def pt(x):
    return SpherePoint.of(x)


def poly(*coeffs):
    return ComplexPoly([c if hasattr(c, "re") else gr(c) for c in coeffs])


Z2 = RationalMap(poly(0, 0, 1), poly(1))
CUBIC = RationalMap(poly(-1, 0, 0, 1), poly(1, 0, 0, 1))
F_NOSHARE = RationalMap(poly(-2, 0, 2), poly(-1, 0, 16))
G_NOSHARE = RationalMap(poly(-16, 0, 1), poly(-8, 0, 8))


def assert_same_point_set(got, expected_strs):
    assert {str(p) for p in got} == expected_strs


def assert_matches_critical_data(report, f, tol=1e-9):
    cd = critical_data(f, mode="numeric")
    from deckmap.ratmap import chordal_distance, point_to_extended

    for kind, got, want in (
        ("points", report.critical_points, [p for p, _ in cd.points]),
        ("values", report.critical_values, list(cd.values)),
    ):
        assert len(got) == len(want) == 2, kind
        used = [False] * 2
        for p in got:
            u = point_to_extended(p)
            placed = False
            for j, q in enumerate(want):
                if not used[j] and chordal_distance(u, point_to_extended(q)) < tol:
                    used[j] = True
                    placed = True
                    break
            assert placed, (kind, p, want)


class TestHigherDegree:
    def test_worked_cubic(self):
        rep = detect_higher_degree(CUBIC.iterate(2), 3, 2)
        assert rep.case_label == "higher-degree"
        assert_same_point_set(rep.critical_points, {"0", "inf"})
        assert_same_point_set(rep.critical_values, {"-1", "1"})
        assert rep.exact

    def test_cubic_power_map(self):
        z9 = RationalMap(poly(*([0] * 9 + [1])), poly(1))
        rep = detect_higher_degree(z9, 3, 2)
        assert_same_point_set(rep.critical_points, {"0", "inf"})
        assert_same_point_set(rep.critical_values, {"0", "inf"})

    def test_round_trip_random_cubics(self, rng):
        for _ in range(4):
            f = rand_bicritical(rng, 3)
            rep = detect_higher_degree(f.iterate(2), 3, 2)
            assert_matches_critical_data(rep, f)

    def test_quadratic_input_rejected(self):
        with pytest.raises(InvalidArgument):
            detect_higher_degree(Z2.iterate(2), 2, 2)

    def test_wrong_structure_raises(self):
        # a quadratic iterate has no deck element of order >= 3 unless it is
        # a power map, so claiming degree 3 must fail structurally
        f = f_a(gr(2))
        with pytest.raises(HypothesisViolation):
            detect_higher_degree(f.iterate(2), 3, 2)


class TestQuadratic:
    def test_power_map(self):
        rep = detect_quadratic(Z2.iterate(3), 3)
        assert rep.case_label == "quadratic-power"
        assert_same_point_set(rep.critical_points, {"0", "inf"})
        assert_same_point_set(rep.critical_values, {"0", "inf"})

    def test_non_coalescing(self):
        f = RationalMap(poly(1, 0, 1), poly(1))  # z^2 + 1
        rep = detect_quadratic(f.iterate(2), 2)
        assert rep.case_label == "quadratic-cyclic"
        assert_matches_critical_data(rep, f)

    def test_family_no_fixed_point(self):
        f = f_a(gr(2))
        rep = detect_quadratic(f.iterate(2), 2)
        assert rep.case_label == "V4-no-fixed-point"
        assert_same_point_set(rep.critical_points, {"0", "inf"})
        assert_same_point_set(rep.critical_values, {"-1", "1"})
        assert rep.exact

    def test_exceptional_dihedral(self):
        f = f_a(gr(1))
        rep = detect_quadratic(f.iterate(3), 3)
        assert rep.case_label == "D8-power-like"
        assert_same_point_set(rep.critical_points, {"0", "inf"})
        assert_same_point_set(rep.critical_values, {"-1", "1"})

    def test_exceptional_member_at_second_iterate_is_v4(self):
        # at k = 2 the exceptional map still has a V4 deck group, and its
        # special-pair images only separate after a second application
        f = f_a(gr(1))
        rep = detect_quadratic(f.iterate(2), 2)
        assert rep.case_label == "V4-no-fixed-point"
        assert_same_point_set(rep.critical_points, {"0", "inf"})
        assert_same_point_set(rep.critical_values, {"-1", "1"})

    def test_lattes_cross_ratio_case(self):
        f = f_a(gr(0, 1))
        rep = detect_quadratic(f.iterate(2), 2)
        assert rep.case_label == "V4-fixed-point-m2-crossratio"
        assert rep.evidence["m"] == 2
        assert_same_point_set(rep.critical_points, {"0", "inf"})
        assert_same_point_set(rep.critical_values, {"-1", "1"})

    def test_k_must_exceed_one(self):
        with pytest.raises(InvalidArgument):
            detect_quadratic(Z2, 1)

    def test_round_trip_random_quadratics(self, rng):
        coalescing = 0
        plain = 0
        while coalescing < 3 or plain < 4:
            if coalescing < 3:
                f, _ = rand_coalescing_quadratic(rng)
                coalescing += 1
            else:
                f = rand_quadratic(rng)
                plain += 1
            rep = detect_quadratic(f.iterate(2), 2)
            assert_matches_critical_data(rep, f)


class TestFiberCriteria:
    def test_coalescing_three_point_set(self):
        # {x : fiber all critical} = V_f plus the common image f(v1)
        f = f_a(gr(2))
        got = fiber_criterion_values(f.iterate(2))
        assert_same_point_set(got, {"-1", "1", "-1/3"})

    def test_non_coalescing_two_point_set(self):
        f = RationalMap(poly(1, 0, 1), poly(1))
        got = fiber_criterion_values(f.iterate(2))
        assert_same_point_set(got, {"1", "inf"})

    def test_all_critical_fiber_exact(self):
        F = f_a(gr(2)).iterate(2)
        assert all_critical_fiber(F, pt(-1))
        assert all_critical_fiber(F, pt(Fraction(-1, 3)))
        assert not all_critical_fiber(F, pt(5))


class TestCountCritical:
    def test_power_map(self):
        z4 = Z2.iterate(2)
        assert count_critical_in_fiber(z4, pt(0)) == 1
        assert count_critical_in_fiber(z4, INF) == 1
        assert count_critical_in_fiber(z4, pt(1)) == 0

    def test_coalescing_counts(self):
        # critical values of a coalescing quadratic have 2^(k-1) critical
        # points over them; the total over all critical values is 2^(k+1)-2
        f = f_a(gr(2))
        for k in (2, 3):
            F = f.iterate(k)
            for v in (pt(-1), pt(1)):
                assert count_critical_in_fiber(F, v) == 2 ** (k - 1)
            values = fiber_criterion_values(F)
            triple_total = sum(count_critical_in_fiber(F, v) for v in values)
            assert triple_total == 3 * 2 ** (k - 1)
            total = sum(
                count_critical_in_fiber(F, v)
                for v in _all_critical_values(F)
            )
            assert total == 2 ** (k + 1) - 2

    def test_numeric_path_matches_exact(self):
        F = f_a(gr(2)).iterate(2)
        exact = count_critical_in_fiber(F, pt(-1))
        numeric = count_critical_in_fiber(F, ComplexFloat(-1.0, 0.0))
        assert exact == numeric == 2


def _all_critical_values(F):
    from deckmap.detect import _critical_values_of

    return _critical_values_of(F, 53)


class TestCrossRatio:
    def test_identity_chart(self):
        x = cross_ratio(pt(0), INF, pt(1), pt(-1))
        assert str(x) == "-1"

    def test_certificate_values(self):
        assert cross_ratio_certificate(pt(-1))
        # 3 + 2 sqrt 2 only approximately representable
        val = 3 + 2 * 2**0.5
        assert cross_ratio_certificate(ComplexFloat(val, 0.0))
        assert cross_ratio_certificate(ComplexFloat(3 - 2 * 2**0.5, 0.0))
        assert not cross_ratio_certificate(pt(2))
        assert not cross_ratio_certificate(ComplexFloat(2.5, 0.1))

    def test_exact_certificate_via_polynomial_relation(self):
        # x^2 - 6x + 1 = 0 is tested exactly for exact inputs
        assert not cross_ratio_certificate(pt(3))

    def test_anchors_must_differ(self):
        with pytest.raises(InvalidArgument):
            cross_ratio(pt(0), pt(0), pt(1), pt(2))

    def test_mobius_invariance(self, rng):
        for _ in range(50):
            pts = []
            while len(pts) < 4:
                cand = SpherePoint(gr(rng.randint(-6, 6), rng.randint(-2, 2)))
                if not any(points_equal(cand, q) for q in pts):
                    pts.append(cand)
            phi = rand_mobius(rng)
            base = cross_ratio(*pts)
            moved = cross_ratio(*(phi(p) for p in pts))
            assert points_equal(base, moved)


class TestMobiusFactor:
    def test_identity(self):
        f = f_a(gr(2))
        assert mobius_factor(f, f).is_identity()

    def test_symmetric_family_negation(self):
        c = gr(Fraction(3, 5))
        mu = mobius_factor(f_c(c), f_c(-c))
        assert mu == scaling(gr(-1))

    def test_worked_pair(self):
        mu = mobius_factor(F_NOSHARE, G_NOSHARE)
        t = mu.as_rational_map()
        assert t.compose(F_NOSHARE) == G_NOSHARE
        # mu maps the critical values of f onto those of g
        vf = critical_data(F_NOSHARE).values
        vg = critical_data(G_NOSHARE).values
        assert {str(mu(v)) for v in vf} == {str(v) for v in vg}

    def test_mismatched_critical_points_rejected(self):
        f = f_a(gr(2))
        g = RationalMap(poly(1, 0, 1), poly(1))
        shifted = g.compose(RationalMap(poly(1, 1), poly(1)))  # crit {-1, inf}
        with pytest.raises(InvalidArgument):
            mobius_factor(f, shifted)


class TestPowerMapPredicate:
    def test_examples(self):
        assert is_power_map(Z2)
        assert not is_power_map(f_a(gr(2)))


class TestSharedIterate:
    def test_odd_degree_pair(self):
        g = RationalMap(poly(1, 0, 0, -1), poly(1, 0, 0, 1))
        rep = shared_iterate_analysis(CUBIC, g, 4)
        assert rep.minimal_k == 4
        assert not rep.second_iterate_equal
        assert rep.cv_cp_agree
        assert rep.involution_mu is None  # -z does not commute with f here

    def test_worked_pair_never_shares(self):
        rep = shared_iterate_analysis(F_NOSHARE, G_NOSHARE, 4)
        assert rep.minimal_k is None
        assert rep.cv_cp_agree

    def test_symmetric_family(self):
        c = gr(Fraction(3, 5))
        rep = shared_iterate_analysis(f_c(c), f_c(-c), 3)
        assert rep.minimal_k == 2
        assert rep.second_iterate_equal
        assert rep.involution_mu == scaling(gr(-1))
        assert rep.symmetry_locus_member

    def test_even_degree_squares_and_transpositions(self, rng):
        # shared iterate for distinct non-power even-degree maps forces a
        # shared second iterate and a transposing involution
        for _ in range(4):
            c = gr(Fraction(rng.randint(1, 9), rng.randint(1, 9)))
            f, g = f_c(c), f_c(-c)
            rep = shared_iterate_analysis(f, g, 3)
            assert rep.minimal_k == 2 and rep.second_iterate_equal
            mu = rep.involution_mu
            assert mu is not None and mu.is_involution()
            cd = critical_data(f)
            pts = [p for p, _ in cd.points]
            assert {str(mu(p)) for p in pts} == {str(p) for p in pts}
            assert {str(mu(v)) for v in cd.values} == {str(v) for v in cd.values}
            # transposes rather than fixes (even degree)
            assert all(str(mu(p)) != str(p) for p in pts)
            assert all(str(mu(v)) != str(v) for v in cd.values)

    def test_shared_iterate_forces_equal_critical_data(self, rng):
        # whenever a shared iterate exists for distinct maps, the critical
        # data must agree (a violation raises)
        for _ in range(3):
            c = gr(Fraction(rng.randint(1, 7), rng.randint(1, 7)))
            rep = shared_iterate_analysis(f_c(c), f_c(-c), 2)
            assert rep.cv_cp_agree

    def test_ten_pairs_share_the_second_iterate(self, rng):
        # any shared iterate in this even-degree family is already the second
        seen = set()
        while len(seen) < 10:
            c = Fraction(rng.randint(1, 60), rng.randint(1, 20))
            if c in seen:
                continue
            seen.add(c)
            rep = shared_iterate_analysis(f_c(gr(c)), f_c(gr(-c)), 3)
            assert rep.minimal_k == 2
            assert rep.second_iterate_equal

    def test_cap_guard(self):
        with pytest.raises(InvalidArgument):
            shared_iterate_analysis(CUBIC, CUBIC, 6)

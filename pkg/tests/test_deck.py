from fractions import Fraction

import pytest

from deckmap.algebra import ComplexPoly, gr
from deckmap.deck import (
    aut_group,
    base_point_sequence,
    deck_group,
    special_pairs,
)
from deckmap.errors import InvalidArgument
from deckmap.mobius import IsoType, MobiusTransform, reciprocal_scaling, scaling
from deckmap.ratmap import (
    RationalMap,
    SpherePoint,
    chordal_distance,
    critical_data,
    fiber,
    local_degree,
    point_to_extended,
    points_equal,
)

from conftest import f_a, f_c, rand_bicritical, rand_mobius, rand_quadratic

Z2 = RationalMap(ComplexPoly([0, 0, 1]), ComplexPoly([1]))


def _primes_up_to(n):
    return [p for p in range(2, n + 1) if all(p % q for q in range(2, p))]


def assert_census_cyclic_or_dihedral(group, degree):
    """No polyhedral type; no element order is a prime not dividing degree."""
    assert group.iso_type.kind in {"cyclic", "dihedral", "V4"}
    for o in group.orders():
        for p in _primes_up_to(o):
            if o % p == 0:
                assert degree % p == 0, f"order {o} has prime {p} not dividing {degree}"


class TestBasePoints:
    def test_published_prefix(self):
        seq = base_point_sequence()
        first = [str(next(seq)) for _ in range(5)]
        assert first == ["2", "3", "1+i", "2+i", "5/2"]

    def test_deterministic_and_distinct(self):
        a = [str(x) for _, x in zip(range(40), base_point_sequence())]
        b = [str(x) for _, x in zip(range(40), base_point_sequence())]
        assert a == b and len(set(a)) == 40


class TestDeckGroup:
    def test_power_map_iterates(self):
        for k in (1, 2, 3):
            dr = deck_group(Z2, k)
            assert dr.group.iso_type == IsoType("cyclic", 2**k)
            # rotations with entries in Q(i) are certified, the rest numeric
            certified = dr.certified_elements()
            assert len(certified) == min(2**k, 4)
            assert not dr.iso_from_certified_only

    def test_family_is_v4_with_certified_elements(self):
        a = gr(2)
        dr = deck_group(f_a(a), 2)
        assert dr.group.iso_type == IsoType("V4", 4)
        assert all(dr.certified)
        # the defining identity holds exactly for every certified element
        F = f_a(a).iterate(2)
        for e in dr.certified_elements():
            assert F.compose(e.as_rational_map()) == F
        for e in (
            MobiusTransform.identity(),
            scaling(gr(-1)),
            reciprocal_scaling(a),
            reciprocal_scaling(-a),
        ):
            assert e in dr.group

    def test_exceptional_family_member_is_dihedral(self):
        dr = deck_group(f_a(gr(1)), 3)
        assert dr.group.iso_type == IsoType("dihedral", 8)
        assert all(dr.certified)

    def test_degree_one_rejected(self):
        with pytest.raises(InvalidArgument):
            deck_group(RationalMap(ComplexPoly([0, 1]), ComplexPoly([1])), 2)

    def test_elliptic_rotation_always_found(self, rng):
        # the deck group of a bicritical map contains the order-d rotation
        # around its critical points
        for d in (2, 3):
            f = rand_bicritical(rng, d)
            dr = deck_group(f, 1)
            orders = dr.group.orders()
            assert len(dr.group) % d == 0 and d in orders
            assert len(dr.group) <= f.degree


class TestDeckInvariants:
    def test_subgroup_chain(self):
        f = f_a(gr(2))
        base = deck_group(f, 1)
        for k in (2, 3):
            higher = deck_group(f, k)
            for e, cert in zip(base.group.elements, base.certified):
                if cert:
                    assert e in higher.group

    def test_cyclic_or_dihedral_and_prime_orders(self, rng):
        for d in (2, 3, 4):
            for k in (1, 2):
                if d**k > 16:
                    continue
                f = rand_bicritical(rng, d)
                dr = deck_group(f, k)
                assert_census_cyclic_or_dihedral(dr.group, d)
                if d % 2 == 1:
                    assert dr.group.iso_type.kind == "cyclic"

    def test_v4_iff_coalescing(self, rng):
        seen_coalescing = 0
        for _ in range(10):
            f = rand_quadratic(rng)
            cd = critical_data(f, mode="numeric")
            pts = [p for p, _ in cd.points]
            vals = list(cd.values)
            power = all(
                any(points_equal(p, v) for v in vals) for p in pts
            )
            if power:
                continue
            dr = deck_group(f, 2)
            is_v4 = dr.group.iso_type == IsoType("V4", 4)
            assert is_v4 == bool(cd.critically_coalescing)
            seen_coalescing += bool(cd.critically_coalescing)
        # make sure the sample covered the coalescing side as well
        from conftest import rand_coalescing_quadratic

        f, _ = rand_coalescing_quadratic(rng)
        cd = critical_data(f, mode="numeric")
        assert cd.critically_coalescing
        assert deck_group(f, 2).group.iso_type == IsoType("V4", 4)

    def test_minimal_k_for_v4_is_two(self, rng):
        from conftest import rand_coalescing_quadratic

        for _ in range(3):
            f, _ = rand_coalescing_quadratic(rng)
            for k in (2, 3):
                if f.degree**k > 16:
                    break
                dr = deck_group(f, k)
                if dr.group.iso_type == IsoType("V4", 4):
                    assert deck_group(f, 2).group.iso_type == IsoType("V4", 4)

    def test_family_v4_at_k_two_and_three(self, rng):
        tried = 0
        while tried < 5:
            a = gr(Fraction(rng.randint(-9, 9), rng.randint(1, 5)))
            if a.is_zero() or a == gr(1) or a == gr(-1):
                continue
            tried += 1
            for k in (2, 3):
                dr = deck_group(f_a(a), k)
                assert dr.group.iso_type == IsoType("V4", 4), (a, k)

    def test_conjugation_invariance(self, rng):
        for _ in range(3):
            f = rand_quadratic(rng)
            phi = rand_mobius(rng)
            conj = (
                phi.inverse()
                .as_rational_map()
                .compose(f)
                .compose(phi.as_rational_map())
            )
            a = deck_group(f, 2).group.iso_type
            b = deck_group(conj, 2).group.iso_type
            assert a == b

    def test_deck_elements_preserve_fibers_and_local_degrees(self, rng):
        f = f_a(gr(2))
        k = 2
        fk = f.iterate(k)
        dr = deck_group(f, k)
        for _ in range(5):
            z = SpherePoint(gr(rng.randint(2, 9), rng.randint(0, 2)))
            pts = fiber(fk, z, mode="numeric")
            ext = [point_to_extended(p) for p, _ in pts]
            for e, cert in zip(dr.group.elements, dr.certified):
                if not cert:
                    continue
                for u, (p, _) in zip(ext, pts):
                    image = e.apply_extended(u)
                    dists = [chordal_distance(image, v) for v in ext]
                    j = min(range(len(ext)), key=lambda i: dists[i])
                    assert dists[j] < 1e-7
                    # local degree is preserved along the match
                    if isinstance(p, SpherePoint):
                        assert local_degree(fk, p) == pts[j][1]


class TestAutGroup:
    def test_power_map(self):
        g = aut_group(Z2)
        assert reciprocal_scaling(gr(1)) in g
        assert g.iso_type == IsoType("cyclic", 2)

    def test_symmetric_family(self):
        g = aut_group(f_c(gr(Fraction(3, 5))))
        assert scaling(gr(-1)) in g

    def test_generic_map_is_trivial(self):
        g = aut_group(RationalMap(ComplexPoly([1, 0, 1]), ComplexPoly([1])))
        assert g.iso_type == IsoType("cyclic", 1)

    def test_members_commute(self, rng):
        f = f_c(gr(Fraction(3, 5)))
        for e in aut_group(f).elements:
            t = e.as_rational_map()
            assert f.compose(t) == t.compose(f)


class TestSpecialPairs:
    def test_family_labeling(self):
        f = f_a(gr(2))
        dr = deck_group(f, 2)
        sp = special_pairs(dr, f)
        assert {str(p) for p in sp.critical_pair} == {"0", "inf"}
        flattened = [
            sorted(round(point_to_extended(p).real, 6) for p in pair)
            for pair in sp.preimage_pairs
        ]
        # fibers over 0 and infinity are +-sqrt(2) and +-i sqrt(2)
        s = round(2**0.5, 6)
        assert [-s, s] in flattened
        assert [0.0, 0.0] in flattened  # the +-i sqrt 2 pair has real part 0

    def test_exceptional_member_pairs(self):
        f = f_a(gr(1))
        dr = deck_group(f, 2)
        sp = special_pairs(dr, f)
        assert {str(p) for p in sp.critical_pair} == {"0", "inf"}
        printable = [{str(p) for p in pair} for pair in sp.preimage_pairs]
        assert {"1", "-1"} in printable
        assert {"i", "-i"} in printable

    def test_always_contains_critical_pair(self, rng):
        from conftest import rand_coalescing_quadratic

        f, _ = rand_coalescing_quadratic(rng)
        dr = deck_group(f, 2)
        if dr.group.iso_type == IsoType("V4", 4):
            cd = critical_data(f, mode="numeric")
            crit = [point_to_extended(p) for p, _ in cd.points]
            hit = False
            for pair in dr.special_pairs:
                ext = [point_to_extended(p) for p in pair]
                if all(
                    any(chordal_distance(u, v) < 1e-7 for v in ext) for u in crit
                ):
                    hit = True
            assert hit

    def test_non_v4_rejected(self):
        dr = deck_group(Z2, 2)
        with pytest.raises(InvalidArgument):
            special_pairs(dr, Z2)

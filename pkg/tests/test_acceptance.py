"""Acceptance suite: each test pins one criterion at its stated tolerance
and time budget and prints one PASS line on success (run with -s to see
them live; a failure raises and pytest reports it as usual).
"""

import random
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest

from deckmap.algebra import ComplexFloat, ComplexPoly, gr, poly_roots_numeric
from deckmap.deck import deck_group
from deckmap.detect import (
    count_critical_in_fiber,
    cross_ratio,
    cross_ratio_certificate,
    fiber_criterion_values,
    mobius_factor,
    shared_iterate_analysis,
)
from deckmap.dynren import (
    ParamFaTarget,
    RenderSpec,
    Window,
    find_attracting_cycles,
    render,
)
from deckmap.mobius import IsoType, MobiusTransform, reciprocal_scaling, scaling
from deckmap.ratmap import (
    INF,
    RationalMap,
    SpherePoint,
    critical_data,
    point_to_extended,
    points_equal,
    postcritical_orbit,
)

from conftest import f_a, f_c, rand_bicritical, rand_quadratic

Z2 = RationalMap(ComplexPoly([0, 0, 1]), ComplexPoly([1]))


def poly(*coeffs):
    return ComplexPoly([c if hasattr(c, "re") else gr(c) for c in coeffs])


@contextmanager
def criterion(number: int, budget_seconds: float, summary: str):
    t0 = time.perf_counter()
    yield
    elapsed = time.perf_counter() - t0
    assert elapsed < budget_seconds, (
        f"criterion {number} exceeded its {budget_seconds}s budget ({elapsed:.1f}s)"
    )
    print(f"ACCEPTANCE {number} PASS ({elapsed:.2f}s): {summary}")


def test_criterion_1_exact_iterate_identities():
    with criterion(1, 1.0, "second iterates match the printed quartics exactly"):
        f = RationalMap(poly(-2, 0, 2), poly(-1, 0, 16))
        g = RationalMap(poly(-16, 0, 1), poly(-8, 0, 8))
        # 2(84z^4 - 8z^2 - 1) / (64z^4 + 32z^2 - 21)
        assert f.iterate(2) == RationalMap(
            poly(-2, 0, -16, 0, 168), poly(-21, 0, 32, 0, 64)
        )
        # (341z^4 - 672z^2 + 256) / (8(21z^4 - 32z^2 - 64))
        assert g.iterate(2) == RationalMap(
            poly(256, 0, -672, 0, 341), poly(-512, 0, -256, 0, 168)
        )


def test_criterion_2_no_shared_iterate():
    with criterion(2, 10.0, "pair shares no iterate up to k=4 yet has equal C and V"):
        f = RationalMap(poly(-2, 0, 2), poly(-1, 0, 16))
        g = RationalMap(poly(-16, 0, 1), poly(-8, 0, 8))
        rep = shared_iterate_analysis(f, g, 4)
        assert rep.minimal_k is None
        assert rep.cv_cp_agree
        cf, cg = critical_data(f), critical_data(g)
        assert {str(p) for p, _ in cf.points} == {"0", "inf"}
        assert {str(p) for p, _ in cg.points} == {"0", "inf"}
        # both maps evaluate to +2 at 0 (their printed second iterates pin
        # the maps down; the quoted value -2 mis-states the sign)
        assert {str(v) for v in cf.values} == {"1/8", "2"}
        assert {str(v) for v in cg.values} == {"1/8", "2"}


def test_criterion_3_odd_degree_shared_fourth_iterate():
    with criterion(3, 60.0, "cubic pair: f^2 != g^2 but f^4 = g^4 at degree 81"):
        f = RationalMap(poly(-1, 0, 0, 1), poly(1, 0, 0, 1))
        g = RationalMap(poly(1, 0, 0, -1), poly(1, 0, 0, 1))
        assert f.iterate(2) != g.iterate(2)
        f4 = f.iterate(4)
        g4 = g.iterate(4)
        assert f4.degree == 81
        assert f4 == g4


def test_criterion_4_symmetry_locus():
    with criterion(4, 5.0, "f_c^2 = f_(-c)^2 with commuting involution -z, 10 cases"):
        rng = random.Random(41)
        neg = scaling(gr(-1))
        for _ in range(10):
            c = gr(Fraction(rng.randint(1, 30), rng.randint(1, 12)) * rng.choice([1, -1]))
            f, g = f_c(c), f_c(-c)
            assert f.iterate(2) == g.iterate(2)
            mu = mobius_factor(f, g)
            assert mu == neg
            t = mu.as_rational_map()
            assert f.compose(t) == t.compose(f)


@pytest.fixture(scope="module")
def classification_groups():
    """The deck groups of criterion 5, shared with the census of criterion 6."""
    rng = random.Random(42)
    samples = []
    groups = []
    seen = 0
    while seen < 5:
        a = gr(Fraction(rng.randint(-12, 12), rng.randint(1, 6)))
        if a.is_zero() or a == gr(1) or a == gr(-1):
            continue
        seen += 1
        dr = deck_group(f_a(a), 2)
        samples.append((a, dr))
        groups.append((2, dr.group))
    dihedral = deck_group(f_a(gr(1)), 3)
    groups.append((2, dihedral.group))
    powers = []
    for k in (1, 2, 3):
        dr = deck_group(Z2, k)
        powers.append((k, dr))
        groups.append((2, dr.group))
    return samples, dihedral, powers, groups


def test_criterion_5_deck_classification(classification_groups):
    samples, dihedral, powers, _ = classification_groups
    with criterion(5, 120.0, "V4 certified for 5 random a; D8 exception; Z_(2^k) powers"):
        assert len(samples) == 5
        for a, dr in samples:
            assert dr.group.iso_type == IsoType("V4", 4), f"a={a}"
            assert all(dr.certified)
            for e in (
                MobiusTransform.identity(),
                scaling(gr(-1)),
                reciprocal_scaling(a),
                reciprocal_scaling(-a),
            ):
                assert e in dr.group
        assert dihedral.group.iso_type == IsoType("dihedral", 8)
        for k, dr in powers:
            assert dr.group.iso_type == IsoType("cyclic", 2**k)


def test_criterion_6_cyclic_or_dihedral_census(classification_groups):
    *_, base_groups = classification_groups
    with criterion(6, 600.0, "no polyhedral deck group, no stray prime orders"):
        rng = random.Random(43)
        groups = list(base_groups)
        for i in range(10):
            d = 2 if i < 5 else 3
            f = rand_quadratic(rng) if d == 2 else rand_bicritical(rng, 3)
            for k in (1, 2):
                if f.degree**k > 16:
                    continue
                dr = deck_group(f, k)
                groups.append((d, dr.group))
        assert len(groups) >= 19
        for d, group in groups:
            assert group.iso_type.kind in {"cyclic", "dihedral", "V4"}
            for o in group.orders():
                for p in range(2, o + 1):
                    if o % p == 0 and all(p % q for q in range(2, p)):
                        assert d % p == 0, (
                            f"element order {o} has prime factor {p} "
                            f"not dividing degree {d}"
                        )


def _points_match(got, want, tol=1e-9):
    from deckmap.ratmap import chordal_distance

    if len(got) != len(want):
        return False
    used = [False] * len(want)
    for p in got:
        u = point_to_extended(p)
        ok = False
        for j, q in enumerate(want):
            if not used[j] and chordal_distance(u, point_to_extended(q)) < tol:
                used[j] = ok = True
                break
        if not ok:
            return False
    return True


def test_criterion_7_detection_round_trip():
    from deckmap.detect import detect_higher_degree, detect_quadratic

    with criterion(7, 600.0, "detection from f^2 recovers C and V for 30 random maps"):
        rng = random.Random(44)
        from conftest import rand_coalescing_quadratic

        quadratics = []
        while len(quadratics) < 5:
            f, _ = rand_coalescing_quadratic(rng)
            quadratics.append(f)
        while len(quadratics) < 20:
            quadratics.append(rand_quadratic(rng))
        for f in quadratics:
            rep = detect_quadratic(f.iterate(2), 2)
            cd = critical_data(f, mode="numeric")
            assert _points_match(rep.critical_points, [p for p, _ in cd.points])
            assert _points_match(rep.critical_values, list(cd.values))
            if cd.exact:
                # rational critical data must be recovered exactly
                assert rep.exact
                assert {str(p) for p in rep.critical_points} == {
                    str(p) for p, _ in cd.points
                }
                assert {str(v) for v in rep.critical_values} == {
                    str(v) for v in cd.values
                }
        for _ in range(10):
            f = rand_bicritical(rng, 3)
            rep = detect_higher_degree(f.iterate(2), 3, 2)
            cd = critical_data(f, mode="numeric")
            assert _points_match(rep.critical_points, [p for p, _ in cd.points])
            assert _points_match(rep.critical_values, list(cd.values))


def test_criterion_8_cross_ratio_certificate():
    with criterion(8, 60.0, "bisected m=2 parameter satisfies the cross-ratio relation"):
        # independent oracle: bisection on the fixed-point condition
        # h(a) = f_a^3(-1) - f_a^2(-1) over real a
        def orbit_point(a: float, steps: int) -> float:
            w = -1.0
            for _ in range(steps):
                w = (w * w - a) / (w * w + a)
            return w

        def h(a: float) -> float:
            return orbit_point(a, 3) - orbit_point(a, 2)

        lo, hi = 0.3, 0.5
        assert h(lo) * h(hi) < 0, "bisection bracket must straddle the root"
        for _ in range(80):
            mid = (lo + hi) / 2
            if h(lo) * h(mid) <= 0:
                hi = mid
            else:
                lo = mid
        a = (lo + hi) / 2
        v1, v2 = -1.0 + 0j, 1.0 + 0j
        beta = (v1**2 - a) / (v1**2 + a)
        alpha = (beta**2 - a) / (beta**2 + a)
        assert abs((alpha**2 - a) / (alpha**2 + a) - alpha) < 1e-9  # alpha fixed
        assert abs(alpha - beta) > 1e-3  # genuinely m = 2, not m = 1
        x = cross_ratio(
            ComplexFloat.from_complex(v1),
            ComplexFloat.from_complex(v2),
            ComplexFloat.from_complex(alpha),
            ComplexFloat.from_complex(beta),
        )
        z = x.to_complex()
        assert abs(z + 1) < 1e-8 or abs(z * z - 6 * z + 1) < 1e-8
        assert cross_ratio_certificate(x)

        # the family also realizes the certificate exactly at a = i
        f = f_a(gr(0, 1))
        od = postcritical_orbit(f)
        assert od.m == 2
        exact_x = cross_ratio(
            SpherePoint.of(-1), SpherePoint.of(1), od.alpha, od.orbits[0][1]
        )
        assert str(exact_x) == "-1"


def _polynomial_orbit_condition(steps: int) -> ComplexPoly:
    """Numerator of f_a^steps(-1) - f_a^(steps-1)(-1) as a polynomial in a."""
    # orbit of -1 as a rational function N(a)/D(a)
    n, d = poly(-1), poly(1)
    orbit = [(n, d)]
    for _ in range(steps):
        n2 = n * n
        ad2 = ComplexPoly([gr(0)] + list((d * d).coeffs))  # a * D^2
        n, d = n2 - ad2, n2 + ad2
        orbit.append((n, d))
    n1, d1 = orbit[steps]
    n0, d0 = orbit[steps - 1]
    return n1 * d0 - n0 * d1


def test_criterion_9_critical_count_lemma():
    with criterion(9, 600.0, "per-fiber critical counts match 2^(k-1), 2^(k-j), 2^(k-m+1)-2"):
        # no small-height rational parameter realizes m = 3 (the condition
        # polynomial's rational roots are all degenerate), so work with a
        # numerically located parameter and verify the m-structure through
        # the orbit scan, as the fallback prescribes
        cond = _polynomial_orbit_condition(4)
        candidates = []
        for root, _ in poly_roots_numeric(cond, precision=80):
            z = root.to_complex()
            if abs(z.imag) > 1e-20 or abs(z) < 1e-6 or abs(abs(z) - 1) < 1e-6:
                continue
            # reject parameters that already satisfy the m = 2 condition
            w = -1.0
            pts = [w]
            for _ in range(4):
                w = (w * w - z.real) / (w * w + z.real)
                pts.append(w)
            if abs(pts[3] - pts[2]) < 1e-8:
                continue
            candidates.append(root)
        assert candidates, "no m=3 parameter found"

        root = candidates[0]
        a_frac = Fraction(float(root.re)).limit_denominator(10**13)
        f = f_a(gr(a_frac))
        od = postcritical_orbit(f, mode="numeric")
        assert od.finite_postcritical and od.m == 3

        k, m = 4, 3
        F = f.iterate(k)
        post = []
        for orbit in od.orbits:
            for p in orbit:
                u = point_to_extended(p)
                cf = INF if u is None else ComplexFloat.from_complex(u)
                if not any(points_equal(cf, q) for q in post):
                    post.append(cf)
        assert len(post) == m + 2  # v1, v2, beta_1, ..., beta_(m-1), alpha

        alpha = next(
            p
            for p in post
            if points_equal(
                ComplexFloat.from_complex(f.eval_extended(p.to_complex())), p
            )
        )
        counts = {id(p): count_critical_in_fiber(F, p) for p in post}
        count_of = lambda p: counts[id(p)]

        assert count_of(alpha) == 2 ** (k - (m - 1)) - 2
        triple = [p for p in post if count_of(p) == 2 ** (k - 1)]
        assert len(triple) == 3  # v1, v2 and beta_1
        betas = [
            p
            for p in post
            if p not in triple and not points_equal(p, alpha)
        ]
        assert sorted(count_of(b) for b in betas) == [
            2 ** (k - j) for j in range(m - 1, 1, -1)
        ]
        assert sum(counts.values()) == 2 ** (k + 1) - 2

        # exact identities on a coalescing non-PCF member, as the fallback
        f2 = f_a(gr(2))
        for k2 in (2, 3):
            F2 = f2.iterate(k2)
            values = fiber_criterion_values(F2)
            assert len(values) == 3
            for v in values:
                assert count_critical_in_fiber(F2, v) == 2 ** (k2 - 1)
            from deckmap.detect import _critical_values_of

            total = sum(
                count_critical_in_fiber(F2, v) for v in _critical_values_of(F2, 53)
            )
            assert total == 2 ** (k2 + 1) - 2


def test_criterion_10_renderer_determinism_and_cycles():
    with criterion(10, 120.0, "byte-identical 256x256 renders; rabbit periods 3 and 6"):
        spec = RenderSpec(
            ParamFaTarget(Window(0j, 4.0)), width=256, height=256, max_iter=96
        )
        first = render(spec, workers=1)
        second = render(spec, workers=1)
        quad = render(spec, workers=4)
        assert first.ppm == second.ppm == quad.ppm

        c = gr(
            Fraction(0.221274).limit_denominator(10**7),
            Fraction(0.48342).limit_denominator(10**7),
        )
        atlas = find_attracting_cycles(f_c(c), cycle_eps=1e-9)
        assert sorted(cyc.period for cyc in atlas.cycles) == [3, 3]
        atlas = find_attracting_cycles(f_c(-c), cycle_eps=1e-9)
        assert [cyc.period for cyc in atlas.cycles] == [6]

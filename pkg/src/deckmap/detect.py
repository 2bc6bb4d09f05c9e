"""Recovering critical data of a bicritical map from one of its iterates,
and shared-iterate analysis of map pairs.

The caller supplies F together with the claim F = f^k, deg f = d; the
functions recover C_f and V_f from F alone.  The critical points come from
fixed points of deck transformations of F; the critical values come from
the fiber criterion (every point of the fiber over a critical value is a
critical point of F), refined in the coalescing quadratic case by special
pairs, image comparison, the cross-ratio certificate, or per-fiber critical
counts, depending on the postcritical structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .algebra import (
    ComplexFloat,
    DEFAULT_PRECISION,
    GR_ONE,
    gr,
    poly_gcd,
    poly_roots_numeric,
    radical,
    snap_to_exact,
)
from .deck import DeckResult, base_point_sequence, deck_group
from .errors import HypothesisViolation, InvalidArgument
from .mobius import MobiusTransform, to_zero_inf_one
from .ratmap import (
    DEFAULT_DEGREE_CAP,
    DEFAULT_ORBIT_BOUND,
    INF,
    Point,
    RationalMap,
    SpherePoint,
    chordal_distance,
    critical_data,
    fiber_polynomial,
    point_to_extended,
    points_equal,
    wronskian,
)

_SNAP_MAX_DEN = 10**6
_IMG_TOL = 1e-8


@dataclass(frozen=True)
class DetectionReport:
    """Recovered critical data plus the structural case that produced it."""

    critical_points: tuple[Point, ...]
    critical_values: tuple[Point, ...]
    case_label: str
    exact: bool
    evidence: dict


@dataclass(frozen=True)
class SharedIterateReport:
    minimal_k: int | None
    cv_cp_agree: bool
    involution_mu: MobiusTransform | None
    symmetry_locus_member: bool
    second_iterate_equal: bool


# ---------------------------------------------------------------------------
# Fiber criteria
# ---------------------------------------------------------------------------


def _exact_all_critical_fiber(F: RationalMap, x: SpherePoint) -> bool:
    """Every point of F's fiber over x has multiplicity >= 2 (exact test)."""
    a, inf_mult = fiber_polynomial(F, x)
    if inf_mult == 1:
        return False
    if a.degree < 1:
        return True
    g = poly_gcd(a, a.derivative())
    if g.degree == 0:
        return False
    return (g % radical(a)).is_zero()


def _critical_points_numeric(F: RationalMap, precision: int):
    """Distinct critical points of F as (extended mpc, wronskian mult)."""
    w = wronskian(F)
    out = []
    if w.degree >= 1:
        for r, m in poly_roots_numeric(w, precision):
            out.append((r.to_mpc(), m))
    inf_mult = (2 * F.degree - 2) - (int(w.degree) if not w.is_zero() else 0)
    if inf_mult > 0:
        out.append((None, inf_mult))
    return out


def _chordal(u, v) -> float:
    if u is None and v is None:
        return 0.0
    if u is None:
        u, v = v, None
    nu = (1 + abs(u) ** 2) ** 0.5
    if v is None:
        return float(2 / nu)
    return float(2 * abs(u - v) / (nu * (1 + abs(v) ** 2) ** 0.5))


def _numeric_all_critical_fiber(F: RationalMap, x: Point, precision: int) -> bool:
    """Numeric fiber criterion: local degrees of critical points over x sum to deg F."""
    u = point_to_extended(x)
    total = 0
    for c, mult in _critical_points_numeric(F, precision):
        img = F.eval_mpc(c, precision)
        if _chordal(img, u) <= _IMG_TOL:
            total += 1 + mult
    return total == F.degree


def all_critical_fiber(
    F: RationalMap, x: Point, precision: int = DEFAULT_PRECISION
) -> bool:
    """Does the fiber of F over x consist only of critical points of F?"""
    if isinstance(x, SpherePoint):
        return _exact_all_critical_fiber(F, x)
    return _numeric_all_critical_fiber(F, x, precision)


def count_critical_in_fiber(
    F: RationalMap, x: Point, precision: int = DEFAULT_PRECISION
) -> int:
    """Number of distinct critical points of F lying in the fiber over x."""
    if isinstance(x, SpherePoint):
        a, inf_mult = fiber_polynomial(F, x)
        w = wronskian(F)
        count = 0
        if a.degree >= 1 and w.degree >= 1:
            g = poly_gcd(a, w)
            if g.degree >= 1:
                count += int(radical(g).degree)
        w_inf = (2 * F.degree - 2) - (int(w.degree) if not w.is_zero() else 0)
        if inf_mult >= 1 and w_inf >= 1:
            count += 1
        return count
    u = point_to_extended(x)
    count = 0
    for c, _m in _critical_points_numeric(F, precision):
        img = F.eval_mpc(c, precision)
        if _chordal(img, u) <= _IMG_TOL:
            count += 1
    return count


def _near(p: Point, q: Point, precision: int) -> bool:
    """Tolerant point comparison for dispatch decisions.

    Exact equality implies chordal distance zero, so exact instances behave
    identically; maps that only approximate a postcritically finite one
    (the m > 2 configurations have no Q(i) representative) still dispatch.
    """
    if isinstance(p, SpherePoint) and isinstance(q, SpherePoint):
        if p.is_infinity or q.is_infinity:
            return p.is_infinity and q.is_infinity
        if p.finite == q.finite:
            return True
    u = point_to_extended(p)
    v = point_to_extended(q)
    return chordal_distance(u, v) <= _IMG_TOL * 8


def _image_point(F: RationalMap, p: Point, precision: int = 53) -> Point:
    if isinstance(p, SpherePoint):
        return F.eval(p)
    out = F.eval_mpc(p.to_mpc(), precision)
    return INF if out is None else ComplexFloat(out.real, out.imag)


def _refine_critical_points(
    F: RationalMap, pts: list[Point], precision: int
) -> tuple[list[Point], bool]:
    """Snap numeric detected critical points to Q(i) when the exact value is
    certifiably a critical point of F (an exact root of the wronskian)."""
    w = wronskian(F)
    out: list[Point] = []
    exact = True
    for p in pts:
        if isinstance(p, SpherePoint):
            out.append(p)
            continue
        snapped = snap_to_exact(p, _SNAP_MAX_DEN, precision)
        if snapped is not None and w.eval(snapped).is_zero():
            out.append(SpherePoint(snapped))
        else:
            out.append(p)
            exact = False
    return out, exact


def _dedupe_points(points: list[Point], precision: int) -> list[Point]:
    out: list[Point] = []
    for p in points:
        if not any(points_equal(p, q, precision) for q in out):
            out.append(p)
    return out


def _critical_values_of(F: RationalMap, precision: int) -> list[Point]:
    """Distinct critical values of F, snapped to Q(i) where certifiable."""
    values: list[Point] = []
    for c, _m in _critical_points_numeric(F, precision):
        img = F.eval_mpc(c, precision)
        if img is None:
            values.append(INF)
            continue
        cf = ComplexFloat(img.real, img.imag)
        snapped = snap_to_exact(cf, _SNAP_MAX_DEN, precision)
        if snapped is not None and _is_critical_value_exact(F, SpherePoint(snapped)):
            values.append(SpherePoint(snapped))
        else:
            values.append(cf)
    return _dedupe_points(values, precision)


def _is_critical_value_exact(F: RationalMap, x: SpherePoint) -> bool:
    a, inf_mult = fiber_polynomial(F, x)
    if inf_mult >= 2:
        return True
    if a.degree < 1:
        return False
    return poly_gcd(a, a.derivative()).degree >= 1


def fiber_criterion_values(
    F: RationalMap, precision: int = DEFAULT_PRECISION
) -> list[Point]:
    """All x among F's critical values whose whole fiber is critical."""
    return [
        x
        for x in _critical_values_of(F, precision)
        if all_critical_fiber(F, x, precision)
    ]


# ---------------------------------------------------------------------------
# Cross-ratio machinery
# ---------------------------------------------------------------------------


def cross_ratio(v1: Point, v2: Point, a: Point, b: Point, precision: int = DEFAULT_PRECISION) -> Point:
    """Image of b under the Moebius map sending (v1, v2, a) to (0, inf, 1)."""
    pts = (v1, v2, a)
    for i in range(3):
        for j in range(i + 1, 3):
            if points_equal(pts[i], pts[j], precision):
                raise InvalidArgument("cross-ratio anchors must be pairwise distinct")
    if all(isinstance(p, SpherePoint) for p in (v1, v2, a, b)):
        chart = to_zero_inf_one(v1, v2, a)
        return chart(b)
    # numeric chart via the same 3-point construction
    from .mobius import to_zero_inf_one_numeric

    chart = to_zero_inf_one_numeric(
        point_to_extended(v1), point_to_extended(v2), point_to_extended(a)
    )
    out = chart.apply_extended(point_to_extended(b))
    return INF if out is None else ComplexFloat.from_complex(out)


_CR_POLY_TOL = 1e-8


def cross_ratio_certificate(x: Point) -> bool:
    """Membership of the cross-ratio in {-1, 3 +- 2 sqrt 2}.

    Exact values are tested through the defining relation t^2 - 6t + 1 = 0,
    numeric ones within 1e-8.
    """
    if isinstance(x, SpherePoint):
        if x.is_infinity:
            return False
        t = x.finite
        if t == gr(-1):
            return True
        return (t * t - gr(6) * t + GR_ONE).is_zero()
    z = x.to_complex()
    return abs(z + 1) <= _CR_POLY_TOL or abs(z * z - 6 * z + 1) <= _CR_POLY_TOL


# ---------------------------------------------------------------------------
# Detection for degree >= 3
# ---------------------------------------------------------------------------


def detect_higher_degree(
    F: RationalMap, d: int, k: int, precision: int = DEFAULT_PRECISION
) -> DetectionReport:
    """Recover C_f, V_f from F = f^k for bicritical f of degree d >= 3.

    C_f is the common fixed-point pair of every deck transformation of F of
    order >= 3; V_f is the set of x whose whole F-fiber is critical.
    """
    if d < 3:
        raise InvalidArgument("use detect_quadratic for degree 2")
    dr = deck_group(F, 1, precision=precision)
    bound = len(dr.group) + 1
    chosen = None
    for e in dr.group.elements:
        o = e.order(bound)
        if o is not None and o >= 3:
            chosen = e
            break
    if chosen is None:
        raise HypothesisViolation(
            "no deck transformation of order >= 3; F is not an iterate of a "
            "bicritical map of degree >= 3"
        )
    points, pts_exact = chosen.fixed_points(precision)
    if not pts_exact:
        points, pts_exact = _refine_critical_points(F, points, precision)
    values = fiber_criterion_values(F, precision)
    if len(points) != 2 or len(values) != 2:
        raise HypothesisViolation(
            f"detection produced {len(points)} critical points and "
            f"{len(values)} critical values"
        )
    exact = pts_exact and all(isinstance(v, SpherePoint) for v in values)
    return DetectionReport(
        tuple(points),
        tuple(values),
        "higher-degree",
        exact,
        {
            "deck_iso": str(dr.group.iso_type),
            "element_order": chosen.order(bound),
            "base_points": tuple(str(b) for b in dr.base_points),
        },
    )


# ---------------------------------------------------------------------------
# Detection for quadratics
# ---------------------------------------------------------------------------


def _pair_image(F: RationalMap, pair, precision: int) -> Point:
    imgs = [_image_point(F, p, precision) for p in pair]
    if len(imgs) == 2 and not _near(imgs[0], imgs[1], precision):
        raise HypothesisViolation("special pair does not have a common image")
    return imgs[0]


def _split_two_one(
    items: list[Point], precision: int
) -> tuple[list[int], int] | None:
    """Indices of the two equal items and the odd one, or None."""
    eq01 = _near(items[0], items[1], precision)
    eq02 = _near(items[0], items[2], precision)
    eq12 = _near(items[1], items[2], precision)
    if eq01 and not eq02 and not eq12:
        return [0, 1], 2
    if eq02 and not eq01 and not eq12:
        return [0, 2], 1
    if eq12 and not eq01 and not eq02:
        return [1, 2], 0
    return None


def _all_equal(items: list[Point], precision: int) -> bool:
    return all(_near(items[0], p, precision) for p in items[1:])


def _postcritical_set_of_iterate(
    F: RationalMap, precision: int, bound: int = DEFAULT_ORBIT_BOUND
) -> list[Point]:
    """Forward closure of F's critical values under F (finite in PCF cases)."""
    points = list(_critical_values_of(F, precision))
    frontier = list(points)
    for _ in range(bound):
        if not frontier:
            break
        new = []
        for p in frontier:
            q = _image_point(F, p, precision)
            if not any(_near(q, r, precision) for r in points):
                points.append(q)
                new.append(q)
        frontier = new
    if frontier:
        raise HypothesisViolation("postcritical set did not close within the bound")
    return points


def _element_swapping(
    dr: DeckResult, pair: tuple[Point, Point], precision: int
) -> MobiusTransform | None:
    """The deck involution exchanging the two points of the pair."""
    p, q = pair
    for e in dr.group.elements:
        if e.is_identity():
            continue
        if _moves_to(e, p, q, precision) and _moves_to(e, q, p, precision):
            return e
    return None


def _element_fixing_pair(dr: DeckResult, pair, precision: int) -> MobiusTransform | None:
    for e in dr.group.elements:
        if e.is_identity():
            continue
        if all(_moves_to(e, p, p, precision) for p in pair):
            return e
    return None


def _moves_to(e: MobiusTransform, p: Point, q: Point, precision: int) -> bool:
    if e.exact and isinstance(p, SpherePoint) and isinstance(q, SpherePoint):
        if e(p) == q:
            return True
    u = e.apply_extended(point_to_extended(p))
    return chordal_distance(u, point_to_extended(q)) <= _IMG_TOL * 8


def _v_from_triple(
    F: RationalMap,
    triple: list[Point],
    mu: MobiusTransform | None,
    precision: int,
) -> tuple[list[Point], Point]:
    """Split the all-critical-fiber triple {v1, v2, beta1} into V and beta1.

    The two critical values share their F-image (their common f-image is one
    step ahead); when that image collapses onto beta1's the deck involution
    fixing the critical points still swaps v1 and v2.
    """
    imgs = [_image_point(F, t, precision) for t in triple]
    split = _split_two_one(imgs, precision)
    if split is None and not _all_equal(imgs, precision):
        # one more application separates them (k = 2 configurations)
        imgs = [_image_point(F, t, precision) for t in imgs]
        split = _split_two_one(imgs, precision)
    if split is not None:
        (i, j), odd = split
        return [triple[i], triple[j]], triple[odd]
    if mu is not None:
        for i in range(3):
            for j in range(i + 1, 3):
                if _moves_to(mu, triple[i], triple[j], precision) and _moves_to(
                    mu, triple[j], triple[i], precision
                ):
                    odd = 3 - i - j
                    return [triple[i], triple[j]], triple[odd]
    raise HypothesisViolation("could not split critical values from their image")


def detect_quadratic(
    F: RationalMap, k: int, precision: int = DEFAULT_PRECISION
) -> DetectionReport:
    """Recover C_f, V_f from F = f^k for quadratic f, k >= 2.

    Dispatches on Deck(F): cyclic of order > 2 means a power map, cyclic of
    order 2 gives the involution's fixed points directly, D8 marks the one
    exceptional conjugacy class, and V4 triggers the special-pair analysis
    (image comparison without a postcritical fixed point; the cross-ratio
    certificate or per-fiber critical counts with one).
    """
    if k < 2:
        raise InvalidArgument("detection needs k >= 2")
    dr = deck_group(F, 1, precision=precision)
    iso = dr.group.iso_type
    evidence: dict = {
        "deck_iso": str(iso),
        "base_points": tuple(str(b) for b in dr.base_points),
    }
    bound = 2 * len(dr.group) + 1

    if iso.kind == "cyclic" and iso.order > 2:
        # every element of order >= 3 of a cyclic group shares the
        # generator's fixed points; prefer one with exact entries
        pool = sorted(
            (e for e in dr.group.elements if (e.order(bound) or 0) >= 3),
            key=lambda e: not e.exact,
        )
        points, pts_exact = pool[0].fixed_points(precision)
        if not pts_exact:
            points, pts_exact = _refine_critical_points(F, points, precision)
        return DetectionReport(
            tuple(points),
            tuple(points),
            "quadratic-power",
            pts_exact,
            evidence,
        )

    if iso.kind == "cyclic" and iso.order == 2:
        invol = next(e for e in dr.group.elements if not e.is_identity())
        points, pts_exact = invol.fixed_points(precision)
        if not pts_exact:
            points, pts_exact = _refine_critical_points(F, points, precision)
        values = fiber_criterion_values(F, precision)
        if len(values) != 2:
            raise HypothesisViolation(
                f"expected 2 all-critical fibers, found {len(values)}"
            )
        exact = pts_exact and all(isinstance(v, SpherePoint) for v in values)
        return DetectionReport(
            tuple(points), tuple(values), "quadratic-cyclic", exact, evidence
        )

    if iso.kind == "dihedral" and iso.order == 8:
        e4 = next(e for e in dr.group.elements if e.order(bound) == 4)
        points, pts_exact = e4.fixed_points(precision)
        if not pts_exact:
            points, pts_exact = _refine_critical_points(F, points, precision)
        triple = fiber_criterion_values(F, precision)
        if len(triple) != 3:
            raise HypothesisViolation(
                f"expected 3 all-critical fibers, found {len(triple)}"
            )
        mu = _element_fixing_pair(dr, points, precision)
        values, beta = _v_from_triple(F, triple, mu, precision)
        evidence["beta"] = str(beta)
        exact = pts_exact and all(isinstance(v, SpherePoint) for v in values)
        return DetectionReport(
            tuple(points), tuple(values), "D8-power-like", exact, evidence
        )

    if iso.kind == "V4":
        return _detect_quadratic_v4(F, k, dr, evidence, precision)

    raise HypothesisViolation(f"deck group {iso} is impossible for a quadratic iterate")


def _detect_quadratic_v4(
    F: RationalMap, k: int, dr: DeckResult, evidence: dict, precision: int
) -> DetectionReport:
    pairs = [tuple(p) for p in dr.special_pairs]
    imgs = [_pair_image(F, pair, precision) for pair in pairs]
    evidence["pair_images"] = tuple(str(i) for i in imgs)

    # Decide between the two postcritical regimes by pushing the pair
    # images forward: without a fixed point they separate two-against-one
    # (possibly after one extra application); with one they all collapse.
    odd = None
    if not _all_equal(imgs, precision):
        split = _split_two_one(imgs, precision)
        if split is None:
            imgs2 = [_image_point(F, i) for i in imgs]
            if not _all_equal(imgs2, precision):
                split = _split_two_one(imgs2, precision)
                if split is None:
                    raise HypothesisViolation("special pair images do not separate")
        if split is not None:
            _, odd = split

    if odd is not None:
        points = pairs[odd]
        triple = fiber_criterion_values(F, precision)
        if len(triple) != 3:
            raise HypothesisViolation(
                f"expected 3 all-critical fibers, found {len(triple)}"
            )
        mu = _element_fixing_pair(dr, points, precision)
        values, beta = _v_from_triple(F, triple, mu, precision)
        evidence["beta"] = str(beta)
        exact = all(isinstance(p, SpherePoint) for p in points) and all(
            isinstance(v, SpherePoint) for v in values
        )
        return DetectionReport(
            tuple(points), tuple(values), "V4-no-fixed-point", exact, evidence
        )

    # fixed-point case: the postcritical set is finite and contains the
    # unique fixed point alpha
    post = _postcritical_set_of_iterate(F, precision)
    fixed = [p for p in post if _near(_image_point(F, p, precision), p, precision)]
    if len(fixed) != 1:
        raise HypothesisViolation(
            f"expected a unique fixed postcritical point, found {len(fixed)}"
        )
    alpha = fixed[0]
    triple = fiber_criterion_values(F, precision)
    if len(triple) != 3:
        raise HypothesisViolation(
            f"expected 3 all-critical fibers, found {len(triple)}"
        )
    rest = [
        p
        for p in post
        if not _near(p, alpha, precision)
        and not any(_near(p, t, precision) for t in triple)
    ]
    evidence["alpha"] = str(alpha)

    if not rest:
        # m = 2: the cross-ratio certificate identifies beta within the triple
        valid = []
        for b_idx in range(3):
            beta = triple[b_idx]
            v_pair = [triple[i] for i in range(3) if i != b_idx]
            x = cross_ratio(v_pair[0], v_pair[1], alpha, beta, precision)
            if cross_ratio_certificate(x):
                valid.append((b_idx, x))
        if len(valid) != 1:
            raise HypothesisViolation(
                f"cross-ratio certificate matched {len(valid)} labelings"
            )
        b_idx, x = valid[0]
        beta = triple[b_idx]
        values = [triple[i] for i in range(3) if i != b_idx]
        mu = _element_swapping_points(dr, alpha, beta, precision)
        if mu is None:
            raise HypothesisViolation("no deck element sends alpha to beta")
        points, pts_exact = mu.fixed_points(precision)
        if not pts_exact:
            points, pts_exact = _refine_critical_points(F, points, precision)
        evidence.update({"m": 2, "beta": str(beta), "cross_ratio": str(x)})
        exact = pts_exact and all(isinstance(v, SpherePoint) for v in values)
        return DetectionReport(
            tuple(points),
            tuple(values),
            "V4-fixed-point-m2-crossratio",
            exact,
            evidence,
        )

    # m > 2: per-fiber critical counts identify beta_{m-1} next to alpha.
    # No Q(i) map realizes this configuration exactly, so the counting is
    # always numeric (exact instances would count identically).
    counts = {
        i: count_critical_in_fiber(F, _as_numeric_point(p), precision)
        for i, p in enumerate(post)
    }
    alpha_idx = next(i for i, p in enumerate(post) if _near(p, alpha, precision))
    alpha_count = counts[alpha_idx]
    m = k + 1 - int(math.log2(alpha_count + 2))
    if 2 ** (k - (m - 1)) - 2 != alpha_count or not (k > m > 2):
        raise HypothesisViolation(
            f"critical counts do not match a k > m > 2 configuration "
            f"(alpha count {alpha_count}, k {k})"
        )
    beta_candidates = [
        i
        for i, p in enumerate(post)
        if counts[i] == alpha_count + 2 and i != alpha_idx
    ]
    if len(beta_candidates) != 1:
        raise HypothesisViolation("beta_(m-1) is not unique by critical counts")
    beta_prev = post[beta_candidates[0]]
    mu = _element_swapping_points(dr, alpha, beta_prev, precision)
    if mu is None:
        raise HypothesisViolation("no deck element sends alpha to beta_(m-1)")
    points, pts_exact = mu.fixed_points(precision)
    if not pts_exact:
        points, pts_exact = _refine_critical_points(F, points, precision)
    values, beta1 = _v_from_triple(F, triple, mu, precision)
    evidence.update(
        {
            "m": m,
            "beta_m_minus_1": str(beta_prev),
            "fiber_counts": {str(post[i]): c for i, c in counts.items()},
            "beta1": str(beta1),
        }
    )
    exact = pts_exact and all(isinstance(v, SpherePoint) for v in values)
    return DetectionReport(
        tuple(points),
        tuple(values),
        "V4-fixed-point-m-gt-2-counts",
        exact,
        evidence,
    )


def _as_numeric_point(p: Point) -> Point:
    if isinstance(p, SpherePoint):
        if p.is_infinity:
            return p
        return ComplexFloat.from_complex(p.to_complex())
    return p


def _element_swapping_points(
    dr: DeckResult, a: Point, b: Point, precision: int
) -> MobiusTransform | None:
    for e in dr.group.elements:
        if e.is_identity():
            continue
        if _moves_to(e, a, b, precision):
            return e
    return None


# ---------------------------------------------------------------------------
# Shared iterates
# ---------------------------------------------------------------------------


def is_power_map(f: RationalMap, precision: int = DEFAULT_PRECISION) -> bool:
    """Critical points equal critical values as sets (conjugate to z^(+-d))."""
    cd = critical_data(f, precision=precision)
    pts = [p for p, _ in cd.points]
    vals = list(cd.values)
    return _sets_equal(pts, vals, precision)


def _sets_equal(a: list[Point], b: list[Point], precision: int) -> bool:
    if len(a) != len(b):
        return False
    used = [False] * len(b)
    for p in a:
        for j, q in enumerate(b):
            if not used[j] and points_equal(p, q, precision):
                used[j] = True
                break
        else:
            return False
    return True


def mobius_factor(
    f: RationalMap, g: RationalMap, precision: int = DEFAULT_PRECISION
) -> MobiusTransform:
    """The unique Moebius mu with g = mu o f, for maps sharing critical points.

    Built from charts through the images of the critical points and of one
    auxiliary regular point, then certified exactly.
    """
    cf = critical_data(f, precision=precision)
    cg = critical_data(g, precision=precision)
    if not (cf.bicritical and cg.bicritical) or f.degree != g.degree:
        raise InvalidArgument("mobius_factor needs bicritical maps of equal degree")
    if not _sets_equal([p for p, _ in cf.points], [p for p, _ in cg.points], precision):
        raise InvalidArgument("critical point sets differ")
    if not cf.exact or not all(isinstance(p, SpherePoint) for p, _ in cf.points):
        raise InvalidArgument("mobius_factor needs exact critical points")
    c1, c2 = (p for p, _ in cf.points)
    a = None
    for cand in base_point_sequence():
        p = SpherePoint(cand)
        if p == c1 or p == c2:
            continue
        fa, ga = f.eval(p), g.eval(p)
        if any(points_equal(fa, v, precision) for v in cf.values):
            continue
        if any(points_equal(ga, v, precision) for v in cg.values):
            continue
        a = p
        break
    if a is None:
        raise InvalidArgument("no auxiliary point found")
    z_chart = to_zero_inf_one(f.eval(c1), f.eval(c2), f.eval(a))
    w_chart = to_zero_inf_one(g.eval(c1), g.eval(c2), g.eval(a))
    mu = w_chart.inverse().compose(z_chart)
    if mu.as_rational_map().compose(f) != g:
        raise HypothesisViolation("mobius factor certification failed")
    return mu


def shared_iterate_analysis(
    f: RationalMap,
    g: RationalMap,
    max_k: int,
    precision: int = DEFAULT_PRECISION,
    cap: int = DEFAULT_DEGREE_CAP,
) -> SharedIterateReport:
    """Scan for f^k = g^k (k <= max_k) and verify the structural consequences.

    Whenever a shared iterate is found for distinct maps the critical data
    of f and g must already agree; a mismatch is raised as a violation since
    it indicates a bug rather than an unusual input.
    """
    cf = critical_data(f, precision=precision)
    cg = critical_data(g, precision=precision)
    if not (cf.bicritical and cg.bicritical) or f.degree != g.degree:
        raise InvalidArgument("analysis needs bicritical maps of equal degree")
    if f.degree**max_k > cap:
        raise InvalidArgument(f"max_k {max_k} exceeds the degree cap {cap}")

    cp_agree = _sets_equal(
        [p for p, _ in cf.points], [p for p, _ in cg.points], precision
    )
    cv_agree = _sets_equal(list(cf.values), list(cg.values), precision)
    cv_cp_agree = cp_agree and cv_agree

    minimal_k = None
    fk, gk = f, g
    second_equal = False
    for k in range(1, max_k + 1):
        if k > 1:
            fk = fk.compose(f, cap=cap)
            gk = gk.compose(g, cap=cap)
        equal = fk == gk
        if k == 2:
            second_equal = equal
        if equal and minimal_k is None:
            minimal_k = k
    if max_k < 2 and minimal_k == 1:
        second_equal = True

    if minimal_k is not None and f != g and not cv_cp_agree:
        raise HypothesisViolation(
            "maps share an iterate but critical data disagree; this "
            "contradicts a proved invariant and indicates a defect"
        )

    mu = None
    symmetry = False
    if f != g and cp_agree:
        try:
            cand = mobius_factor(f, g, precision)
        except (InvalidArgument, HypothesisViolation):
            cand = None
        if cand is not None and cand.is_involution():
            t = cand.as_rational_map()
            if f.compose(t) == t.compose(f):
                mu = cand
                symmetry = True
    return SharedIterateReport(minimal_k, cv_cp_agree, mu, symmetry, second_equal)

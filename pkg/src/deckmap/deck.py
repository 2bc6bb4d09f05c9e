"""Deck groups of iterates and automorphism groups of rational maps.

The search is classical covering-space reasoning made effective: a deck
transformation of F permutes every fiber, and a Moebius map is pinned down
by three points.  So we take one regular fiber, fix one source triple, try
every ordered target triple, filter the O(n^3) candidates cheaply (fiber
permutation, local degrees, a second independent fiber), snap survivors to
Q(i) and certify F o tau = F exactly.  Candidates that survive filtering
but resist exact certification are retained, flagged, and only trusted for
classification when the whole search repeats consistently at a second
precision.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

from .algebra import (
    ComplexFloat,
    ComplexPoly,
    DEFAULT_PRECISION,
    GaussianRational,
    gr,
    poly_gcd,
    poly_roots_numeric,
    snap_to_exact,
)
from .errors import (
    InvalidArgument,
    NumericFalsePositive,
    SearchFailure,
)
from .mobius import (
    IsoType,
    MobiusGroup,
    MobiusTransform,
    group_closure,
    through_points_numeric,
)
from .ratmap import (
    DEFAULT_DEGREE_CAP,
    Point,
    RationalMap,
    SpherePoint,
    chordal_distance,
    critical_data,
    point_to_extended,
    wronskian,
)

_SNAP_MAX_DEN = 10**6
_BASE_POINT_ATTEMPTS = 64
_SECOND_PRECISION = 113


def base_point_sequence():
    """Deterministic Gaussian-rational base points: 2, 3, 1+i, 2+i, 5/2, then
    all p/q + (r/s)i ordered by height max(|p|, q, |r|, s) and lexicographic
    (denominator, numerator) within a height."""
    seeds = [gr(2), gr(3), gr(1, 1), gr(2, 1), gr(Fraction(5, 2))]
    seen = {(g.re, g.im) for g in seeds}
    yield from seeds
    h = 1
    while True:
        rationals: set[Fraction] = set()
        for den in range(1, h + 1):
            for num in range(-h, h + 1):
                f = Fraction(num, den)
                if max(abs(f.numerator), f.denominator) <= h:
                    rationals.add(f)
        ordered = sorted(rationals, key=lambda f: (f.denominator, f.numerator))
        for re in ordered:
            for im in ordered:
                if (re, im) not in seen:
                    seen.add((re, im))
                    yield GaussianRational(re, im)
        h += 1


@dataclass(frozen=True)
class DeckResult:
    """Deck(f^k) with per-element certification and V4 structure data."""

    group: MobiusGroup
    certified: tuple[bool, ...]
    base_points: tuple[SpherePoint, SpherePoint]
    special_pairs: tuple[tuple[Point, ...], ...] | None
    precision: int
    iso_from_certified_only: bool

    def certified_elements(self) -> list[MobiusTransform]:
        return [e for e, c in zip(self.group.elements, self.certified) if c]


def _is_regular_base(F: RationalMap, w: GaussianRational) -> bool:
    """w has a full fiber of distinct finite points and is not a critical value."""
    a = F.num - F.den.scale(w)
    if a.is_zero() or a.degree != F.degree:
        return False
    g = poly_gcd(a, a.derivative())
    return g.degree == 0


def _regular_fibers(F: RationalMap, precision: int):
    """First two base points with regular fibers, and the sorted mpc fibers."""
    picked = []
    for i, w in enumerate(base_point_sequence()):
        if i >= _BASE_POINT_ATTEMPTS:
            break
        if not _is_regular_base(F, w):
            continue
        a = F.num - F.den.scale(w)
        roots = poly_roots_numeric(a, precision)
        pts = sorted(
            (r.to_mpc() for r, _ in roots),
            key=lambda z: (float(z.real), float(z.imag)),
        )
        picked.append((SpherePoint(w), pts))
        if len(picked) == 2:
            return picked
    raise SearchFailure(
        f"no regular fiber among the first {_BASE_POINT_ATTEMPTS} base points"
    )


def _critical_profile(F: RationalMap, precision: int):
    """Distinct critical points of F as extended mpc, with multiplicities."""
    w = wronskian(F)
    out = []
    if w.degree >= 1:
        for r, m in poly_roots_numeric(w, precision):
            out.append((r.to_mpc(), m))
    inf_mult = (2 * F.degree - 2) - (int(w.degree) if not w.is_zero() else 0)
    if inf_mult > 0:
        out.append((None, inf_mult))
    return out


def _chordal_mpc(u, v) -> float:
    """Chordal distance on extended mpc points (None = infinity)."""
    if u is None and v is None:
        return 0.0
    if u is None:
        u, v = v, None
    nu = mp.sqrt(1 + abs(u) ** 2)
    if v is None:
        return float(2 / nu)
    return float(2 * abs(u - v) / (nu * mp.sqrt(1 + abs(v) ** 2)))


def _mob_from_triples(src, dst):
    """Matrix (a, b, c, d) of the Moebius map with src[i] -> dst[i], in mpc.

    Both triples consist of finite points (regular fibers avoid infinity).
    """
    p1, p2, p3 = src
    q1, q2, q3 = dst
    # M_s sends src to (0, inf, 1); same for M_d; return M_d^-1 * M_s.
    u = p3 - p2
    v = p3 - p1
    ms = (u, -p1 * u, v, -p2 * v)
    x = q3 - q2
    y = q3 - q1
    md = (x, -q1 * x, y, -q2 * y)
    # inverse of md up to scalar: (d, -b, -c, a)
    mdi = (md[3], -md[1], -md[2], md[0])
    return (
        mdi[0] * ms[0] + mdi[1] * ms[2],
        mdi[0] * ms[1] + mdi[1] * ms[3],
        mdi[2] * ms[0] + mdi[3] * ms[2],
        mdi[2] * ms[1] + mdi[3] * ms[3],
    )


def _apply_mat(mat, z):
    a, b, c, d = mat
    if z is None:
        return None if c == 0 else a / c
    denom = c * z + d
    if denom == 0:
        return None
    return (a * z + b) / denom


def _mat_nonsingular(mat, tol: float) -> bool:
    a, b, c, d = mat
    scale = max(abs(a), abs(b), abs(c), abs(d))
    if scale == 0:
        return False
    return abs(a * d - b * c) > tol * scale * scale


def _permutes(mat, pts, tol: float) -> bool:
    """The matrix maps the point set bijectively to itself within chordal tol."""
    used = [False] * len(pts)
    for p in pts:
        q = _apply_mat(mat, p)
        for j, r in enumerate(pts):
            if not used[j] and _chordal_mpc(q, r) <= tol:
                used[j] = True
                break
        else:
            return False
    return True


def _preserves_critical_profile(mat, profile, tol: float) -> bool:
    used = [False] * len(profile)
    for p, m in profile:
        q = _apply_mat(mat, p)
        for j, (r, m2) in enumerate(profile):
            if not used[j] and m == m2 and _chordal_mpc(q, r) <= tol:
                used[j] = True
                break
        else:
            return False
    return True


def _try_certify(mat, F: RationalMap, precision: int, max_den: int) -> MobiusTransform | None:
    """Snap a numeric candidate matrix to Q(i) and certify F o tau = F exactly."""
    pivot = max(mat, key=abs)
    entries = []
    for e in mat:
        e = e / pivot
        snapped = snap_to_exact(ComplexFloat(e.real, e.imag), max_den, precision)
        if snapped is None:
            return None
        entries.append(snapped)
    try:
        exact = MobiusTransform(*entries)
    except InvalidArgument:
        return None
    if F.compose(exact.as_rational_map()) == F:
        return exact
    return None


def _candidate_triples(fibers):
    """Source triple and the iterator of target triples, fiber-size aware."""
    (_, fiber1), (_, fiber2) = fibers
    if len(fiber1) >= 3:
        src = tuple(fiber1[:3])
        targets = itertools.permutations(fiber1, 3)
    else:
        # degree-2 fibers cannot pin a Moebius map alone; borrow one point
        # from the second fiber (deck elements permute that fiber too)
        src = (fiber1[0], fiber1[1], fiber2[0])
        targets = (
            (p, q, r)
            for (p, q) in ((fiber1[0], fiber1[1]), (fiber1[1], fiber1[0]))
            for r in fiber2
        )
    return src, targets


def _search_elements(
    F: RationalMap, precision: int, max_den: int
) -> tuple[list[MobiusTransform], tuple[SpherePoint, SpherePoint]]:
    with mp.workprec(precision + 16):
        fibers = _regular_fibers(F, precision)
        (w1, fiber1), (w2, fiber2) = fibers
        profile = _critical_profile(F, precision)
        tol = 2.0 ** (-(precision // 2)) * 64
        src, targets = _candidate_triples(fibers)

        found: list[MobiusTransform] = []
        for dst in targets:
            mat = _mob_from_triples(src, dst)
            if not _mat_nonsingular(mat, tol):
                continue
            if not _permutes(mat, fiber1, tol):
                continue
            if not _preserves_critical_profile(mat, profile, tol):
                continue
            if not _permutes(mat, fiber2, tol):
                continue
            exact = _try_certify(mat, F, precision, max_den)
            elem = exact if exact is not None else MobiusTransform(
                *(complex(e) for e in mat)
            )
            if not any(elem == e for e in found):
                found.append(elem)
    return found, (w1, w2)


def _close_and_flag(
    found: list[MobiusTransform], F: RationalMap, precision: int, max_den: int
) -> tuple[MobiusGroup, list[bool]]:
    group = group_closure(found, cap=F.degree)
    certified = []
    for e in group.elements:
        ok = e.exact and F.compose(e.as_rational_map()) == F
        certified.append(ok)
    return group, certified


def deck_group(
    f: RationalMap,
    k: int,
    precision: int = DEFAULT_PRECISION,
    cap: int = DEFAULT_DEGREE_CAP,
    max_den: int = _SNAP_MAX_DEN,
) -> DeckResult:
    """All Moebius tau with f^k o tau = f^k, certified exactly where possible.

    The candidate search is complete: every deck transformation sends the
    source triple to some ordered triple of the fiber, so it appears among
    the O(n^3) candidates and survives every filter.  Consequently the
    order-d rotation fixing the critical points of a bicritical f is always
    found, and |group| <= d^k.  When numeric-only survivors exist, the whole
    search is repeated at 113 bits and the classification is only taken from
    the full element set if both rounds agree.
    """
    if f.degree < 2:
        raise InvalidArgument("deck_group needs degree >= 2")
    F = f.iterate(k, cap=cap) if k > 1 else f

    found, bases = _search_elements(F, precision, max_den)
    try:
        group, certified = _close_and_flag(found, F, precision, max_den)
    except SearchFailure:
        # a numeric false positive breaks closure: retry once, sharper
        if precision < _SECOND_PRECISION:
            found, bases = _search_elements(F, _SECOND_PRECISION, max_den)
            group, certified = _close_and_flag(found, F, _SECOND_PRECISION, max_den)
        else:
            raise NumericFalsePositive(
                "deck candidate set does not close; rerun at higher precision"
            )

    iso_from_certified_only = False
    if not all(certified):
        alt_prec = _SECOND_PRECISION if precision < _SECOND_PRECISION else precision * 2
        found2, _ = _search_elements(F, alt_prec, max_den)
        group2, _certified2 = _close_and_flag(found2, F, alt_prec, max_den)
        consistent = len(group2) == len(group) and sorted(
            group2.orders()
        ) == sorted(group.orders())
        if not consistent:
            iso_from_certified_only = True
            certified_elems = [
                e for e, c in zip(group.elements, certified) if c
            ]
            sub = group_closure(certified_elems, cap=F.degree)
            group = MobiusGroup(
                tuple(group.elements), sub.iso_type, sub.witness
            )

    special = None
    if group.iso_type == IsoType("V4", 4):
        special = tuple(
            tuple(e.fixed_points(precision)[0])
            for e in group.elements
            if not e.is_identity()
        )
    return DeckResult(
        group, tuple(certified), bases, special, precision, iso_from_certified_only
    )


# ---------------------------------------------------------------------------
# Automorphisms
# ---------------------------------------------------------------------------


def _fixed_points_of_map(f: RationalMap, precision: int) -> list[complex | None]:
    """Distinct fixed points of f as extended complex numbers."""
    shift = f.num - ComplexPoly.variable() * f.den
    out: list[complex | None] = []
    if shift.degree >= 1:
        out.extend(r.to_complex() for r, _ in poly_roots_numeric(shift, precision))
    if shift.degree < f.degree + 1:
        out.append(None)  # infinity is fixed when the degree drops
    return out


def aut_group(
    f: RationalMap,
    precision: int = DEFAULT_PRECISION,
    max_den: int = _SNAP_MAX_DEN,
) -> MobiusGroup:
    """All Moebius tau with tau^-1 o f o tau = f; membership is certified
    exactly, so automorphisms with entries outside Q(i) are not reported.

    Candidates come from the finite invariant sets: tau permutes the
    critical points, the critical values, and the fixed points of f.  Three
    anchor points from these sets pin each candidate down.
    """
    if f.degree < 2:
        raise InvalidArgument("aut_group needs degree >= 2")
    cdata = critical_data(f, mode="numeric", precision=precision)
    crit = [point_to_extended(p) for p, _ in cdata.points]
    vals: list[complex | None] = []
    for v in cdata.values:
        u = point_to_extended(v)
        if not any(chordal_distance(u, x) < 1e-9 for x in vals):
            vals.append(u)
    fixed = _fixed_points_of_map(f, precision)

    pools = []  # (anchor, candidate image pool)
    anchors: list[complex | None] = []

    def add_anchor(p, pool):
        if len(anchors) >= 3:
            return
        if any(chordal_distance(p, q) < 1e-9 for q in anchors):
            return
        anchors.append(p)
        pools.append(pool)

    for p in crit:
        add_anchor(p, crit)
    for p in fixed:
        add_anchor(p, fixed)
    for p in vals:
        add_anchor(p, vals)
    if len(anchors) < 3:
        raise SearchFailure("could not assemble three distinct anchor points")

    survivors: list[MobiusTransform] = []
    f_map = f
    for images in itertools.product(*pools):
        if (
            chordal_distance(images[0], images[1]) < 1e-9
            or chordal_distance(images[0], images[2]) < 1e-9
            or chordal_distance(images[1], images[2]) < 1e-9
        ):
            continue
        try:
            tau = through_points_numeric(tuple(anchors), images)
        except InvalidArgument:
            continue
        exact = _try_certify_aut(tau, f_map, precision, max_den)
        if exact is not None and not any(exact == e for e in survivors):
            survivors.append(exact)
    return group_closure(survivors, cap=max(4 * f.degree + 4, 60))


def _try_certify_aut(
    tau: MobiusTransform, f: RationalMap, precision: int, max_den: int
) -> MobiusTransform | None:
    entries = []
    for e in tau.complex_entries():
        snapped = snap_to_exact(ComplexFloat(e.real, e.imag), max_den, precision)
        if snapped is None:
            return None
        entries.append(snapped)
    try:
        exact = MobiusTransform(*entries)
    except InvalidArgument:
        return None
    t = exact.as_rational_map()
    if f.compose(t) == t.compose(f):
        return exact
    return None


# ---------------------------------------------------------------------------
# Special pairs of the V4 case
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabeledSpecialPairs:
    """The three involution fixed-point pairs, labeled against f's data."""

    critical_pair: tuple[Point, ...]
    preimage_pairs: tuple[tuple[Point, ...], ...]  # fibers over c1 and c2
    exact: bool


def special_pairs(dr: DeckResult, f: RationalMap, precision: int = DEFAULT_PRECISION) -> LabeledSpecialPairs:
    """Cross-label the V4 fixed-point pairs with C_f and the fibers over c1, c2."""
    from .errors import NotRepresentable
    from .ratmap import fiber

    if dr.group.iso_type != IsoType("V4", 4) or dr.special_pairs is None:
        raise InvalidArgument("special pairs need a V4 deck group")
    cdata = critical_data(f, precision=precision)
    if f.degree != 2 or not cdata.critically_coalescing:
        raise InvalidArgument("special pairs need a coalescing quadratic map")

    def as_ext(pair):
        return [point_to_extended(p) for p in pair]

    crit = [p for p, _ in cdata.points]
    targets = [tuple(crit)]
    for c in crit:
        if isinstance(c, SpherePoint):
            try:
                fib = fiber(f, c, mode="exact", precision=precision)
            except NotRepresentable:
                fib = fiber(f, c, mode="numeric", precision=precision)
        else:
            raise InvalidArgument("special pair labeling needs exact critical points")
        targets.append(tuple(p for p, _ in fib))

    matched: list[tuple[Point, ...] | None] = [None, None, None]
    for pair in dr.special_pairs:
        ep = as_ext(pair)
        for idx, tgt in enumerate(targets):
            et = as_ext(tgt)
            if len(ep) == len(et) and all(
                any(chordal_distance(u, v) < 1e-8 for v in et) for u in ep
            ):
                matched[idx] = tgt
                break
    if any(t is None for t in matched):
        raise InvalidArgument("special pairs do not match the expected point sets")
    exact = all(
        isinstance(p, SpherePoint) for t in matched for p in t
    )
    return LabeledSpecialPairs(matched[0], (matched[1], matched[2]), exact)

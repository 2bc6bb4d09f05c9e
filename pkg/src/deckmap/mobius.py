"""Moebius transformations, fixed points, orders, and finite group machinery.

A transformation is stored as a 2x2 matrix up to scalar.  Entries are either
all Gaussian rationals (exact, certifiable) or all python complex (numeric
candidates awaiting certification); the two kinds compose freely, degrading
to numeric.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .algebra import (
    ComplexFloat,
    DEFAULT_PRECISION,
    GR_ONE,
    GR_ZERO,
    GaussianRational,
    cluster_tolerance,
    gaussian_sqrt,
    gr,
)
from .errors import InvalidArgument, SearchFailure
from .ratmap import (
    INF,
    ComplexPoly,
    Point,
    RationalMap,
    SpherePoint,
    chordal_distance,
    point_to_extended,
)

_NUM_TOL = 1e-9


def _entries_exact(entries) -> bool:
    return all(isinstance(e, GaussianRational) for e in entries)


@dataclass(frozen=True)
class MobiusTransform:
    """z -> (az + b)/(cz + d) with ad - bc != 0, stored up to scalar."""

    a: object
    b: object
    c: object
    d: object
    exact: bool

    def __init__(self, a, b, c, d):
        entries = (a, b, c, d)
        exact = _entries_exact(entries)
        if exact:
            det = a * d - b * c
            if det.is_zero():
                raise InvalidArgument("Moebius matrix must have nonzero determinant")
            # canonical scaling: first nonzero entry becomes 1
            pivot = next(e for e in entries if not e.is_zero())
            inv = pivot.inverse()
            a, b, c, d = (inv * e for e in entries)
        else:
            entries = tuple(
                e.to_complex() if isinstance(e, GaussianRational) else complex(e)
                for e in entries
            )
            det = entries[0] * entries[3] - entries[1] * entries[2]
            scale = max(abs(e) for e in entries)
            if scale == 0 or abs(det) <= _NUM_TOL * scale * scale:
                raise InvalidArgument("numerically singular Moebius matrix")
            pivot = next(e for e in entries if abs(e) == scale)
            a, b, c, d = (e / pivot for e in entries)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "exact", exact)

    # -- identity and equality ------------------------------------------------

    @staticmethod
    def identity() -> "MobiusTransform":
        return MobiusTransform(GR_ONE, GR_ZERO, GR_ZERO, GR_ONE)

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def complex_entries(self) -> tuple[complex, complex, complex, complex]:
        if self.exact:
            return tuple(e.to_complex() for e in self.entries())
        return tuple(complex(e) for e in self.entries())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MobiusTransform):
            return NotImplemented
        if self.exact and other.exact:
            return self.entries() == other.entries()
        u = self.complex_entries()
        v = other.complex_entries()
        su = max(abs(x) for x in u)
        sv = max(abs(x) for x in v)
        return all(
            abs(u[i] * v[j] - u[j] * v[i]) <= _NUM_TOL * su * sv
            for i, j in itertools.combinations(range(4), 2)
        )

    def __hash__(self):
        return hash(self.entries()) if self.exact else 0

    def is_identity(self) -> bool:
        return self == MobiusTransform.identity()

    # -- group operations -------------------------------------------------------

    def compose(self, other: "MobiusTransform") -> "MobiusTransform":
        """Matrix product: (self o other)(z) = self(other(z))."""
        if self.exact and other.exact:
            a1, b1, c1, d1 = self.entries()
            a2, b2, c2, d2 = other.entries()
        else:
            a1, b1, c1, d1 = self.complex_entries()
            a2, b2, c2, d2 = other.complex_entries()
        return MobiusTransform(
            a1 * a2 + b1 * c2,
            a1 * b2 + b1 * d2,
            c1 * a2 + d1 * c2,
            c1 * b2 + d1 * d2,
        )

    def inverse(self) -> "MobiusTransform":
        a, b, c, d = self.entries()
        return MobiusTransform(d, -b, -c, a)

    def power(self, n: int) -> "MobiusTransform":
        if n < 0:
            return self.inverse().power(-n)
        out = MobiusTransform.identity()
        for _ in range(n):
            out = out.compose(self)
        return out

    # -- action on the sphere ----------------------------------------------------

    def __call__(self, p: SpherePoint) -> SpherePoint:
        if not self.exact:
            raise InvalidArgument("exact application needs exact entries")
        a, b, c, d = self.entries()
        if p.is_infinity:
            if c.is_zero():
                return INF
            return SpherePoint(a / c)
        denom = c * p.finite + d
        if denom.is_zero():
            return INF
        return SpherePoint((a * p.finite + b) / denom)

    def apply_extended(self, z: complex | None) -> complex | None:
        a, b, c, d = self.complex_entries()
        if z is None:
            return None if c == 0 else a / c
        # large |z|: evaluate in the 1/w chart to dodge overflow
        if abs(z) > 1.0:
            w = 1.0 / z
            denom = c + d * w
            if abs(denom) == 0.0:
                return None
            return (a + b * w) / denom
        denom = c * z + d
        if denom == 0:
            return None
        return (a * z + b) / denom

    def as_rational_map(self) -> RationalMap:
        if not self.exact:
            raise InvalidArgument("only exact transforms convert to RationalMap")
        return RationalMap(ComplexPoly((self.b, self.a)), ComplexPoly((self.d, self.c)))

    # -- structure -----------------------------------------------------------------

    def is_involution(self) -> bool:
        return not self.is_identity() and self.power(2).is_identity()

    def order(self, max_order: int) -> int | None:
        """Least n <= max_order with self^n projectively the identity."""
        if max_order < 1:
            raise InvalidArgument("max_order must be >= 1")
        acc = self
        for n in range(1, max_order + 1):
            if acc.is_identity():
                return n
            acc = acc.compose(self)
        return None

    def fixed_points(self, precision: int = DEFAULT_PRECISION) -> tuple[list[Point], bool]:
        """Fixed points on the sphere and an exactness flag.

        Solves cz^2 + (d - a)z - b = 0; infinity is fixed exactly when c = 0.
        Exact results need the discriminant to be a square in Q(i).
        """
        if self.is_identity():
            raise InvalidArgument("the identity fixes everything")
        if self.exact:
            a, b, c, d = self.entries()
            if c.is_zero():
                diff = d - a
                if diff.is_zero():
                    return [INF], True  # translation: parabolic
                return [INF, SpherePoint(b / diff)], True
            disc = (d - a) * (d - a) + gr(4) * b * c
            root = gaussian_sqrt(disc)
            two_c = gr(2) * c
            if root is not None:
                z1 = (a - d + root) / two_c
                z2 = (a - d - root) / two_c
                if z1 == z2:
                    return [SpherePoint(z1)], True
                return [SpherePoint(z1), SpherePoint(z2)], True
            # irrational pair, fall through to numeric with exact coefficients
        a, b, c, d = self.complex_entries()
        if abs(c) <= _NUM_TOL * max(abs(a), abs(d), 1.0):
            if abs(d - a) <= _NUM_TOL * max(abs(a), 1.0):
                return [INF], False
            return [INF, ComplexFloat.from_complex(b / (d - a))], False
        disc = (d - a) ** 2 + 4 * b * c
        root = disc**0.5
        z1 = (a - d + root) / (2 * c)
        z2 = (a - d - root) / (2 * c)
        if abs(z1 - z2) <= cluster_tolerance(precision) * (1 + abs(z1)):
            return [ComplexFloat.from_complex((z1 + z2) / 2)], False
        return [ComplexFloat.from_complex(z1), ComplexFloat.from_complex(z2)], False

    def __str__(self) -> str:
        kind = "exact" if self.exact else "numeric"
        return f"[{self.a}, {self.b}; {self.c}, {self.d}] ({kind})"

    __repr__ = __str__


def mobius_compose(s: MobiusTransform, t: MobiusTransform) -> MobiusTransform:
    return s.compose(t)


def mobius_fixed_points(t: MobiusTransform, precision: int = DEFAULT_PRECISION):
    return t.fixed_points(precision)


def mobius_order(t: MobiusTransform, max_order: int) -> int | None:
    return t.order(max_order)


def scaling(c: GaussianRational) -> MobiusTransform:
    """z -> c z"""
    return MobiusTransform(c, GR_ZERO, GR_ZERO, GR_ONE)


def reciprocal_scaling(c: GaussianRational) -> MobiusTransform:
    """z -> c / z"""
    return MobiusTransform(GR_ZERO, c, GR_ONE, GR_ZERO)


# ---------------------------------------------------------------------------
# Three-point interpolation
# ---------------------------------------------------------------------------


def to_zero_inf_one(p1: SpherePoint, p2: SpherePoint, p3: SpherePoint) -> MobiusTransform:
    """The unique exact Moebius map sending (p1, p2, p3) to (0, inf, 1)."""
    if len({str(p) for p in (p1, p2, p3)}) != 3:
        raise InvalidArgument("three-point interpolation needs distinct points")
    if p1.is_infinity:
        # z -> (p3 - p2)/(z - p2)
        return MobiusTransform(GR_ZERO, p3.finite - p2.finite, GR_ONE, -p2.finite)
    if p2.is_infinity:
        # z -> (z - p1)/(p3 - p1)
        return MobiusTransform(GR_ONE, -p1.finite, GR_ZERO, p3.finite - p1.finite)
    if p3.is_infinity:
        # z -> (z - p1)/(z - p2)
        return MobiusTransform(GR_ONE, -p1.finite, GR_ONE, -p2.finite)
    u = p3.finite - p2.finite
    v = p3.finite - p1.finite
    return MobiusTransform(u, -p1.finite * u, v, -p2.finite * v)


def through_points(
    src: tuple[SpherePoint, SpherePoint, SpherePoint],
    dst: tuple[SpherePoint, SpherePoint, SpherePoint],
) -> MobiusTransform:
    """The unique exact Moebius map with src[i] -> dst[i]."""
    return to_zero_inf_one(*dst).inverse().compose(to_zero_inf_one(*src))


def to_zero_inf_one_numeric(p1: complex | None, p2: complex | None, p3: complex | None) -> MobiusTransform:
    if p1 is None:
        return MobiusTransform(0j, p3 - p2, 1 + 0j, -p2)
    if p2 is None:
        return MobiusTransform(1 + 0j, -p1, 0j, p3 - p1)
    if p3 is None:
        return MobiusTransform(1 + 0j, -p1, 1 + 0j, -p2)
    u = p3 - p2
    v = p3 - p1
    return MobiusTransform(u, -p1 * u, v, -p2 * v)


def through_points_numeric(src, dst) -> MobiusTransform:
    return to_zero_inf_one_numeric(*dst).inverse().compose(to_zero_inf_one_numeric(*src))


# ---------------------------------------------------------------------------
# Finite groups of Moebius transformations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsoType:
    """Isomorphism type of a finite Moebius group."""

    kind: str  # cyclic | dihedral | V4 | A4 | S4 | A5
    order: int

    def __str__(self) -> str:
        if self.kind == "cyclic":
            return f"Cyclic({self.order})"
        if self.kind == "dihedral":
            return f"Dihedral({self.order})"
        return self.kind

    __repr__ = __str__


@dataclass(frozen=True)
class MobiusGroup:
    """A finite set of transforms closed under composition and inverse."""

    elements: tuple[MobiusTransform, ...]
    iso_type: IsoType
    witness: dict | None = None

    def __len__(self) -> int:
        return len(self.elements)

    def orders(self) -> list[int]:
        bound = 2 * len(self.elements)
        return [e.order(bound) for e in self.elements]

    def __contains__(self, t: MobiusTransform) -> bool:
        return any(e == t for e in self.elements)


_POLYHEDRAL_CENSUS = {
    12: ("A4", {1: 1, 2: 3, 3: 8}),
    24: ("S4", {1: 1, 2: 9, 3: 8, 4: 6}),
    60: ("A5", {1: 1, 2: 15, 3: 20, 5: 24}),
}


def classify_elements(elements: list[MobiusTransform]) -> tuple[IsoType, dict | None]:
    """Isomorphism type from the multiset of element orders.

    Dihedral recognition is constructive: the cyclic index-2 subgroup's
    generator and the inverting involution are returned as a witness.
    """
    n = len(elements)
    bound = 2 * n + 1
    orders = [e.order(bound) for e in elements]
    if any(o is None for o in orders):
        raise InvalidArgument("set contains an element of unbounded order")
    if n == 1:
        return IsoType("cyclic", 1), None
    max_order = max(orders)
    if max_order == n:
        gen = elements[orders.index(n)]
        return IsoType("cyclic", n), {"generator": gen}
    if n == 4 and max_order == 2:
        return IsoType("V4", 4), None
    # dihedral: a rotation of order n/2 inverted by an outside involution
    if n % 2 == 0 and n // 2 in orders:
        half = n // 2
        for r in (e for e, o in zip(elements, orders) if o == half):
            cyc = [r.power(j) for j in range(half)]
            for s, o in zip(elements, orders):
                if o == 2 and not any(s == c for c in cyc):
                    if s.compose(r).compose(s.inverse()) == r.inverse():
                        return IsoType("dihedral", n), {"rotation": r, "reflection": s}
    if n in _POLYHEDRAL_CENSUS:
        name, census = _POLYHEDRAL_CENSUS[n]
        got: dict[int, int] = {}
        for o in orders:
            got[o] = got.get(o, 0) + 1
        if got == census:
            return IsoType(name, n), None
    raise InvalidArgument(f"order census does not match any finite Moebius group (n={n})")


def group_closure(gens: list[MobiusTransform], cap: int) -> MobiusGroup:
    """Close a generating set under composition, then classify.

    Fails with SearchFailure if more than ``cap`` distinct elements appear,
    which signals an infinite group or a misconfigured cap.
    """
    if cap < 1:
        raise InvalidArgument("cap must be >= 1")
    elements: list[MobiusTransform] = [MobiusTransform.identity()]
    frontier = [g for g in gens if not any(g == e for e in elements)]
    elements.extend(frontier)
    while frontier:
        new: list[MobiusTransform] = []
        for g in frontier:
            for e in list(elements):
                for prod in (g.compose(e), e.compose(g)):
                    if not any(prod == x for x in elements + new):
                        new.append(prod)
                        if len(elements) + len(new) > cap:
                            raise SearchFailure(
                                f"group closure exceeded cap {cap}; "
                                "infinite group or cap misconfiguration"
                            )
        elements.extend(new)
        frontier = new
    iso, witness = classify_elements(elements)
    return MobiusGroup(tuple(elements), iso, witness)


# ---------------------------------------------------------------------------
# Commuting structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CommutingReport:
    commute: bool
    same_fixed_sets: bool | None
    three_involutions: bool | None
    fixed_s: tuple
    fixed_t: tuple


def _fixed_sets_equal(fs: list[Point], ft: list[Point]) -> bool:
    if len(fs) != len(ft):
        return False
    used = [False] * len(ft)
    for p in fs:
        u = point_to_extended(p)
        hit = False
        for j, q in enumerate(ft):
            if not used[j] and chordal_distance(u, point_to_extended(q)) < 1e-8:
                used[j] = True
                hit = True
                break
        if not hit:
            return False
    return True


def commuting_structure(s: MobiusTransform, t: MobiusTransform) -> CommutingReport:
    """Do s and t commute, and in which configuration?

    For commuting non-identity transforms either the fixed-point sets agree,
    or s, t and s*t are involutions with disjoint fixed sets.
    """
    if s.is_identity() or t.is_identity():
        raise InvalidArgument("commuting structure needs non-identity inputs")
    commute = s.compose(t) == t.compose(s)
    fs, _ = s.fixed_points()
    ft, _ = t.fixed_points()
    if not commute:
        return CommutingReport(False, None, None, tuple(fs), tuple(ft))
    same = _fixed_sets_equal(fs, ft)
    three = (
        not same
        and s.is_involution()
        and t.is_involution()
        and s.compose(t).is_involution()
    )
    return CommutingReport(True, same, three, tuple(fs), tuple(ft))

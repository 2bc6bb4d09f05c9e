"""Rational self-maps of the Riemann sphere over Q(i).

A map is a reduced pair P/Q of coprime polynomials with the denominator
monic (or the numerator, when the denominator vanishes).  The point at
infinity is handled by an explicit chart swap (reversed coefficients),
never by large finite surrogates, so critical points at infinity are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from .algebra import (
    ComplexFloat,
    ComplexPoly,
    DEFAULT_PRECISION,
    GR_ONE,
    GaussianRational,
    cluster_tolerance,
    gr,
    poly_gcd,
    poly_roots_numeric,
    snap_to_exact,
)
from .errors import DegreeOverflow, InvalidArgument, NotRepresentable

DEFAULT_DEGREE_CAP = 256
DEFAULT_ORBIT_BOUND = 64
_ORBIT_HEIGHT_BITS = 1 << 20  # exact orbits beyond this height are hopeless
_SNAP_MAX_DEN = 10**6


@dataclass(frozen=True)
class SpherePoint:
    """A point of the Riemann sphere: a Gaussian rational or infinity."""

    finite: GaussianRational | None = None

    @staticmethod
    def of(value) -> "SpherePoint":
        if not isinstance(value, GaussianRational):
            value = gr(value)
        return SpherePoint(value)

    @staticmethod
    def infinity() -> "SpherePoint":
        return SpherePoint(None)

    @property
    def is_infinity(self) -> bool:
        return self.finite is None

    def to_complex(self) -> complex:
        if self.is_infinity:
            raise InvalidArgument("infinity has no complex embedding")
        return self.finite.to_complex()

    def __str__(self) -> str:
        return "inf" if self.is_infinity else str(self.finite)

    __repr__ = __str__


INF = SpherePoint.infinity()

# Numeric sphere points are ComplexFloat for finite values and INF otherwise.
NumPoint = ComplexFloat | SpherePoint
Point = SpherePoint | ComplexFloat


def chordal_distance(u: complex | None, v: complex | None) -> float:
    """Distance in the spherical (chordal) metric; None stands for infinity."""
    if u is None and v is None:
        return 0.0
    if u is None:
        u, v = v, None
    if v is None:
        return 2.0 / (1.0 + abs(u) ** 2) ** 0.5
    return 2.0 * abs(u - v) / ((1.0 + abs(u) ** 2) ** 0.5 * (1.0 + abs(v) ** 2) ** 0.5)


def point_to_extended(p: Point) -> complex | None:
    """Embed an exact or numeric point as complex-or-None (None = infinity)."""
    if isinstance(p, SpherePoint):
        return None if p.is_infinity else p.to_complex()
    return p.to_complex()


@dataclass(frozen=True)
class RationalMap:
    """A reduced rational map P/Q with canonical scaling."""

    num: ComplexPoly
    den: ComplexPoly

    def __init__(self, num: ComplexPoly, den: ComplexPoly, *, reduce: bool = True):
        if num.is_zero() and den.is_zero():
            raise InvalidArgument("0/0 is not a rational map")
        if reduce and not num.is_zero() and not den.is_zero():
            g = poly_gcd(num, den)
            if g.degree > 0:
                num = num.exact_div(g)
                den = den.exact_div(g)
        # canonical scaling: monic denominator, else monic numerator
        if not den.is_zero():
            lead = den.leading().inverse()
        else:
            lead = num.leading().inverse()
        object.__setattr__(self, "num", num.scale(lead))
        object.__setattr__(self, "den", den.scale(lead))

    @property
    def degree(self) -> int:
        return int(max(self.num.degree, self.den.degree))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalMap):
            return NotImplemented
        return self.num.coeffs == other.num.coeffs and self.den.coeffs == other.den.coeffs

    def __hash__(self):
        return hash((self.num.coeffs, self.den.coeffs))

    # -- evaluation ----------------------------------------------------------

    def __call__(self, z: SpherePoint) -> SpherePoint:
        return self.eval(z)

    def eval(self, z: SpherePoint) -> SpherePoint:
        """Exact image of a sphere point; 0/0 cannot occur on a reduced map."""
        d = self.degree
        if z.is_infinity:
            # evaluate reversed-coefficient polynomials at 0
            n_inf = self.num.reciprocal(d).coeff(0)
            d_inf = self.den.reciprocal(d).coeff(0)
            if d_inf.is_zero():
                return INF
            return SpherePoint(n_inf / d_inf)
        n = self.num.eval(z.finite)
        d_ = self.den.eval(z.finite)
        if d_.is_zero():
            return INF
        return SpherePoint(n / d_)

    def eval_extended(self, z: complex | None) -> complex | None:
        """Numeric evaluation in the extended plane (None = infinity)."""
        d = self.degree
        if z is None:
            n_inf = self.num.reciprocal(d).coeff(0).to_complex()
            d_inf = self.den.reciprocal(d).coeff(0).to_complex()
            if d_inf == 0:
                return None
            return n_inf / d_inf
        if abs(z) > 1.0:
            # work in the 1/w chart for stability
            w = 1.0 / z
            n = self.num.reciprocal(d).eval_complex(w)
            dd = self.den.reciprocal(d).eval_complex(w)
        else:
            n = self.num.eval_complex(z)
            dd = self.den.eval_complex(z)
        if dd == 0:
            return None
        return n / dd

    def eval_mpc(self, z, precision: int = 53):
        """Like eval_extended but in mpmath arithmetic at ``precision`` bits.

        Iterates of modest maps already evaluate with catastrophic
        cancellation in float64; every numeric comparison that feeds a
        certification goes through here instead.
        """
        import mpmath as mp

        d = self.degree
        with mp.workprec(precision + 24):
            if z is None:
                n_inf = self.num.reciprocal(d).coeff(0).to_mpc()
                d_inf = self.den.reciprocal(d).coeff(0).to_mpc()
                if d_inf == 0:
                    return None
                return n_inf / d_inf
            z = mp.mpc(z)
            if abs(z) > 1:
                w = 1 / z
                n = self.num.reciprocal(d).eval_complex(w)
                dd = self.den.reciprocal(d).eval_complex(w)
            else:
                n = self.num.eval_complex(z)
                dd = self.den.eval_complex(z)
            if dd == 0:
                return None
            return n / dd

    # -- composition ---------------------------------------------------------

    def compose(self, inner: "RationalMap", cap: int = DEFAULT_DEGREE_CAP) -> "RationalMap":
        """self o inner, exact and already reduced.

        For reduced inputs the homogenized substitution is automatically
        coprime (a common root would force a common projective root of the
        homogenized numerator/denominator of self), so no gcd pass is needed.
        """
        if self.degree < 1 or inner.degree < 1:
            raise InvalidArgument("composition needs degree >= 1 on both sides")
        if self.degree * inner.degree > cap:
            raise DegreeOverflow(
                f"composition degree {self.degree * inner.degree} exceeds cap {cap}"
            )
        m = self.degree
        a, b = inner.num, inner.den
        num_h = _homogeneous_substitution(self.num, m, a, b)
        den_h = _homogeneous_substitution(self.den, m, a, b)
        return RationalMap(num_h, den_h, reduce=False)

    def iterate(self, k: int, cap: int = DEFAULT_DEGREE_CAP) -> "RationalMap":
        if k < 1:
            raise InvalidArgument("iterate needs k >= 1")
        if self.degree**k > cap:
            raise DegreeOverflow(f"degree {self.degree}^{k} exceeds cap {cap}")
        result = self
        for _ in range(k - 1):
            result = result.compose(self, cap=cap)
        return result

    def __str__(self) -> str:
        return f"({self.num}) / ({self.den})"

    __repr__ = __str__


def _homogeneous_substitution(p: ComplexPoly, m: int, a: ComplexPoly, b: ComplexPoly) -> ComplexPoly:
    """sum_k p_k a^k b^(m-k) for the fixed homogenization degree m >= deg p."""
    acc = ComplexPoly.zero()
    a_pow = ComplexPoly.one()
    b_pows = [ComplexPoly.one()]
    for _ in range(m):
        b_pows.append(b_pows[-1] * b)
    for k in range(int(p.degree) + 1 if not p.is_zero() else 0):
        c = p.coeff(k)
        if not c.is_zero():
            acc = acc + (a_pow * b_pows[m - k]).scale(c)
        a_pow = a_pow * a
    return acc


def ratmap_equal(f: RationalMap, g: RationalMap) -> bool:
    """Identical as maps: coefficient equality after canonical scaling."""
    return f == g


def mobius_as_map(a: GaussianRational, b: GaussianRational, c: GaussianRational, d: GaussianRational) -> RationalMap:
    return RationalMap(ComplexPoly((b, a)), ComplexPoly((d, c)))


# ---------------------------------------------------------------------------
# Critical structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalData:
    """Critical points/values of a map, with exactness bookkeeping."""

    points: tuple[tuple[Point, int], ...]
    values: tuple[Point, ...]
    bicritical: bool
    critically_coalescing: bool | None
    exact: bool

    def point_set(self) -> list[Point]:
        return [p for p, _ in self.points]


def wronskian(f: RationalMap) -> ComplexPoly:
    """P'Q - PQ', whose finite roots are the finite critical points."""
    return f.num.derivative() * f.den - f.num * f.den.derivative()


def _exact_roots(
    p: ComplexPoly, precision: int, max_den: int = _SNAP_MAX_DEN
) -> list[tuple[GaussianRational, int]] | None:
    """All roots of p if each lies in Q(i); None when any root resists.

    Numeric roots are snapped and certified by exact evaluation, then
    divided out, so a reported root is never a false positive.
    """
    if p.degree < 1:
        return []
    out: list[tuple[GaussianRational, int]] = []
    remaining = p
    for croot, mult in poly_roots_numeric(p, precision):
        cand = snap_to_exact(croot, max_den, precision)
        if cand is None or not p.eval(cand).is_zero():
            return None
        actual = 0
        z_minus = ComplexPoly((-cand, GR_ONE))
        while True:
            q, r = remaining.divmod(z_minus)
            if not r.is_zero():
                break
            remaining = q
            actual += 1
        if actual == 0:
            return None
        out.append((cand, actual))
    if remaining.degree > 0:
        return None
    return out


def critical_data(
    f: RationalMap,
    mode: Literal["exact", "numeric"] = "exact",
    precision: int = DEFAULT_PRECISION,
) -> CriticalData:
    """Critical points (with multiplicity) and critical values of f.

    Exact mode succeeds when the Wronskian splits over Q(i); otherwise the
    result silently falls back to numeric roots with ``exact=False``.
    Coalescing (the two critical values sharing an image) is only defined for
    quadratic maps; other degrees carry None.
    """
    if f.degree < 2:
        raise InvalidArgument("critical_data needs degree >= 2")
    w = wronskian(f)
    d = f.degree
    inf_mult = (2 * d - 2) - (int(w.degree) if not w.is_zero() else 0)

    points: list[tuple[Point, int]] = []
    exact = True
    if w.degree >= 1:
        exact_roots = _exact_roots(w, precision) if mode == "exact" else None
        if exact_roots is not None:
            points.extend((SpherePoint(r), m) for r, m in exact_roots)
        else:
            exact = False
            for croot, m in poly_roots_numeric(w, precision):
                snapped = snap_to_exact(croot, _SNAP_MAX_DEN, precision)
                if snapped is not None and w.eval(snapped).is_zero():
                    points.append((SpherePoint(snapped), m))
                else:
                    points.append((croot, m))
    if inf_mult > 0:
        points.append((INF, inf_mult))

    values: list[Point] = []
    for p, _ in points:
        values.append(_image(f, p, precision))

    bicritical = len(points) == 2
    coalescing: bool | None = None
    if d == 2:
        v1, v2 = values[0], values[1]
        w1 = _image(f, v1, precision)
        w2 = _image(f, v2, precision)
        coalescing = _points_equal(w1, w2, precision)
    return CriticalData(tuple(points), tuple(values), bicritical, coalescing, exact)


def _image(f: RationalMap, p: Point, precision: int) -> Point:
    if isinstance(p, SpherePoint):
        return f.eval(p)
    out = f.eval_extended(p.to_complex())
    return INF if out is None else ComplexFloat.from_complex(out)


def points_equal(p: Point, q: Point, precision: int = DEFAULT_PRECISION) -> bool:
    """Equality of sphere points: exact when both are exact, chordal otherwise."""
    if isinstance(p, SpherePoint) and isinstance(q, SpherePoint):
        if p.is_infinity or q.is_infinity:
            return p.is_infinity and q.is_infinity
        return p.finite == q.finite
    u = None if (isinstance(p, SpherePoint) and p.is_infinity) else point_to_extended(p)
    v = None if (isinstance(q, SpherePoint) and q.is_infinity) else point_to_extended(q)
    return chordal_distance(u, v) <= cluster_tolerance(precision)


_points_equal = points_equal


# ---------------------------------------------------------------------------
# Fibers and local degrees
# ---------------------------------------------------------------------------


def fiber_polynomial(f: RationalMap, w: SpherePoint) -> tuple[ComplexPoly, int]:
    """(A, inf_mult): A's roots are the finite fiber points of f over w,
    with multiplicity; inf_mult is the multiplicity of infinity in the fiber."""
    d = f.degree
    if w.is_infinity:
        a = f.den
    else:
        a = f.num - f.den.scale(w.finite)
    inf_mult = d - (int(a.degree) if not a.is_zero() else 0)
    if a.is_zero():
        raise InvalidArgument("fiber polynomial vanished; map is constant")
    return a, inf_mult


def fiber(
    f: RationalMap,
    w: SpherePoint,
    mode: Literal["exact", "numeric"] = "exact",
    precision: int = DEFAULT_PRECISION,
) -> list[tuple[Point, int]]:
    """Solutions of f(z) = w with multiplicity; total equals deg f."""
    a, inf_mult = fiber_polynomial(f, w)
    out: list[tuple[Point, int]] = []
    if a.degree >= 1:
        if mode == "exact":
            roots = _exact_roots(a, precision)
            if roots is None:
                raise NotRepresentable("fiber contains points outside Q(i)")
            out.extend((SpherePoint(r), m) for r, m in roots)
        else:
            out.extend(poly_roots_numeric(a, precision))
    if inf_mult > 0:
        out.append((INF, inf_mult))
    assert sum(m for _, m in out) == f.degree
    return out


def local_degree(f: RationalMap, z: SpherePoint) -> int:
    """1 + multiplicity of z in the critical divisor of f."""
    w = wronskian(f)
    if z.is_infinity:
        inf_mult = (2 * f.degree - 2) - (int(w.degree) if not w.is_zero() else 0)
        return 1 + inf_mult
    mult = 0
    z_minus = ComplexPoly((-z.finite, GR_ONE))
    while not w.is_zero() and w.degree >= 1:
        q, r = w.divmod(z_minus)
        if not r.is_zero():
            break
        w = q
        mult += 1
    return 1 + mult


@dataclass(frozen=True)
class DegreePartition:
    """Counts a_i of fiber points of f^k whose local degree is d^i."""

    counts: tuple[int, ...]

    def total(self, d: int, k: int) -> int:
        return sum(a * d**i for i, a in enumerate(self.counts))


def degree_partition(
    f: RationalMap,
    k: int,
    z: SpherePoint,
    precision: int = DEFAULT_PRECISION,
    cap: int = DEFAULT_DEGREE_CAP,
) -> DegreePartition:
    """Degree partition of the fiber of f^k over z.

    The local degree of f^k at a fiber point is the product of local degrees
    of f along its first k forward images; for a bicritical map each factor
    is d or 1 according to whether the image is a critical point.
    """
    cdata = critical_data(f, mode="numeric", precision=precision)
    if not cdata.bicritical:
        raise InvalidArgument("degree partition requires a bicritical map")
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    d = f.degree
    if d**k > cap:
        raise DegreeOverflow(f"degree {d}^{k} exceeds cap {cap}")
    fk = f.iterate(k, cap=cap)
    crit_ext = [point_to_extended(p) for p, _ in cdata.points]
    tol = cluster_tolerance(precision) * 8

    counts = [0] * (k + 1)
    for pt, _mult in fiber(fk, z, mode="numeric", precision=precision):
        u = point_to_extended(pt)
        hits = 0
        for _ in range(k):
            if any(chordal_distance(u, c) <= tol for c in crit_ext):
                hits += 1
            u = f.eval_extended(u)
        counts[hits] += 1
    return DegreePartition(tuple(counts))


# ---------------------------------------------------------------------------
# Postcritical orbits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrbitDescription:
    """Forward orbits of the critical values until a repeat or the bound."""

    orbits: tuple[tuple[Point, ...], ...]
    preperiods: tuple[int | None, ...]
    periods: tuple[int | None, ...]
    finite_postcritical: bool
    truncated: bool  # hit max_len or an exact orbit grew past the height guard
    alpha: Point | None  # the fixed point in the postcritical set, if any
    m: int | None  # minimal m with f^m(v1) = alpha
    exact: bool


def _orbit_of(
    f: RationalMap, start: Point, max_len: int, precision: int
) -> tuple[list[Point], int | None, int | None, bool]:
    pts: list[Point] = [start]
    exact = isinstance(start, SpherePoint)
    for _ in range(max_len):
        cur = pts[-1]
        if isinstance(cur, SpherePoint):
            if not cur.is_infinity and cur.finite.height() > _ORBIT_HEIGHT_BITS:
                return pts, None, None, False
            nxt: Point = f.eval(cur)
        else:
            out = f.eval_extended(cur.to_complex())
            nxt = INF if out is None else ComplexFloat.from_complex(out)
        for i, prev in enumerate(pts):
            if _points_equal(prev, nxt, precision):
                return pts, i, len(pts) - i, True
        pts.append(nxt)
    return pts, None, None, True


def postcritical_orbit(
    f: RationalMap,
    max_len: int = DEFAULT_ORBIT_BOUND,
    precision: int = DEFAULT_PRECISION,
    mode: Literal["exact", "numeric"] = "exact",
) -> OrbitDescription:
    """Forward orbits of both critical values, with PCF/fixed-point analysis.

    Numeric mode forces floating iteration; use it when the coefficients
    only approximate a postcritically finite map, where exact iteration
    would never see the repeat.
    """
    cdata = critical_data(f, precision=precision)
    if not cdata.bicritical:
        raise InvalidArgument("postcritical orbit requires a bicritical map")
    orbits = []
    preperiods = []
    periods = []
    starts = list(cdata.values)
    if mode == "numeric":
        converted = []
        for v in starts:
            u = point_to_extended(v)
            converted.append(INF if u is None else ComplexFloat.from_complex(u))
        starts = converted
    for v in starts:
        orbit, pre, per, _height_ok = _orbit_of(f, v, max_len, precision)
        orbits.append(tuple(orbit))
        preperiods.append(pre)
        periods.append(per)
    finite = all(p is not None for p in periods)
    truncated = not finite

    alpha: Point | None = None
    m: int | None = None
    if finite:
        for orbit, pre, per in zip(orbits, preperiods, periods):
            if per == 1:
                alpha = orbit[pre]
                break
        if alpha is not None:
            # orbits[0][i] = f^i(v1), so m is the index where alpha appears
            for i, p in enumerate(orbits[0]):
                if _points_equal(p, alpha, precision):
                    m = i
                    break
    exact = all(isinstance(p, SpherePoint) for orbit in orbits for p in orbit)
    return OrbitDescription(
        tuple(orbits),
        tuple(preperiods),
        tuple(periods),
        finite,
        truncated,
        alpha,
        m,
        exact,
    )

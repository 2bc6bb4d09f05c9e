"""Exact Gaussian-rational arithmetic, complex polynomials, and numeric roots.

Everything exact lives over Q(i): numbers are pairs of ``fractions.Fraction``
and polynomials are coefficient tuples (lowest degree first).  The numeric
side (root finding, snapping) runs on mpmath at a configurable binary
precision and is bridged back to Q(i) by ``snap_to_exact``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath as mp

from .errors import InvalidArgument, NumericFailure

NEG_INF = float("-inf")  # degree of the zero polynomial

try:  # GMP-backed rationals are far faster once numerators grow large
    from gmpy2 import mpq as _rational

    _RATIONAL_TYPES = (type(_rational(1)), Fraction, int)
except ImportError:  # pragma: no cover - gmpy2 is a hard dependency normally
    _rational = Fraction
    _RATIONAL_TYPES = (Fraction, int)

_FractionLike = int | Fraction


def _frac(x):
    if type(x) is _RATIONAL_TYPES[0]:
        return x
    return _rational(x)


@dataclass(frozen=True)
class GaussianRational:
    """An element re + im*i of Q(i), each part a rational in lowest terms."""

    re: object
    im: object

    def __init__(self, re: _FractionLike = 0, im: _FractionLike = 0):
        object.__setattr__(self, "re", _frac(re))
        object.__setattr__(self, "im", _frac(im))

    def __add__(self, other: "GaussianRational") -> "GaussianRational":
        return GaussianRational(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "GaussianRational") -> "GaussianRational":
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __neg__(self) -> "GaussianRational":
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other: "GaussianRational") -> "GaussianRational":
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def __truediv__(self, other: "GaussianRational") -> "GaussianRational":
        if other.is_zero():
            raise ZeroDivisionError("division by zero in Q(i)")
        n = other.norm()
        return GaussianRational(
            (self.re * other.re + self.im * other.im) / n,
            (self.im * other.re - self.re * other.im) / n,
        )

    def inverse(self) -> "GaussianRational":
        return GR_ONE / self

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def norm(self):
        """The field norm re^2 + im^2 (a nonnegative rational)."""
        return self.re * self.re + self.im * self.im

    def is_zero(self) -> bool:
        return not self.re and not self.im

    def is_real(self) -> bool:
        return not self.im

    def to_complex(self) -> complex:
        return complex(self.re) + 1j * complex(self.im)

    def to_mpc(self) -> mp.mpc:
        return mp.mpc(
            mp.mpf(int(self.re.numerator)) / int(self.re.denominator),
            mp.mpf(int(self.im.numerator)) / int(self.im.denominator),
        )

    def height(self) -> int:
        """Bit size of the largest numerator/denominator involved."""
        return max(
            int(abs(self.re.numerator)).bit_length(),
            int(self.re.denominator).bit_length(),
            int(abs(self.im.numerator)).bit_length(),
            int(self.im.denominator).bit_length(),
        )

    def __str__(self) -> str:
        if not self.im:
            return str(self.re)
        im_part = "i" if self.im == 1 else ("-i" if self.im == -1 else f"{self.im}i")
        if not self.re:
            return im_part
        sign = "+" if self.im > 0 else ""
        return f"{self.re}{sign}{im_part}"

    __repr__ = __str__


def gr(re: _FractionLike = 0, im: _FractionLike = 0) -> GaussianRational:
    """Shorthand constructor for GaussianRational."""
    return GaussianRational(re, im)


GR_ZERO = gr(0)
GR_ONE = gr(1)
GR_I = gr(0, 1)


def rational_sqrt(q):
    """Exact square root of a nonnegative rational, or None if irrational."""
    if q < 0:
        return None
    rn = math.isqrt(int(q.numerator))
    rd = math.isqrt(int(q.denominator))
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return _rational(rn, rd)
    return None


def gaussian_sqrt(g: GaussianRational) -> GaussianRational | None:
    """Exact square root in Q(i), or None if no such element exists.

    Solves (p + qi)^2 = g: requires |g| to be a rational square, and then
    each of (|g| +- re)/2 to be rational squares.
    """
    if g.is_zero():
        return GR_ZERO
    s = rational_sqrt(g.norm())
    if s is None:
        return None
    p2 = (s + g.re) / 2
    q2 = (s - g.re) / 2
    p = rational_sqrt(p2)
    q = rational_sqrt(q2)
    if p is None or q is None:
        return None
    # sign of q is fixed by 2pq = im
    if g.im < 0:
        q = -q
    root = GaussianRational(p, q)
    if (root * root) == g:
        return root
    return None


# ---------------------------------------------------------------------------
# Polynomials over Q(i)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComplexPoly:
    """Univariate polynomial over Q(i), coefficients lowest degree first.

    The coefficient tuple never carries trailing zeros; the zero polynomial
    is the empty tuple and has degree ``NEG_INF``.
    """

    coeffs: tuple[GaussianRational, ...]

    def __init__(self, coeffs: Iterable[GaussianRational | _FractionLike] = ()):
        cs = [c if isinstance(c, GaussianRational) else gr(c) for c in coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    # -- structure ---------------------------------------------------------

    @property
    def degree(self) -> int | float:
        return len(self.coeffs) - 1 if self.coeffs else NEG_INF

    def is_zero(self) -> bool:
        return not self.coeffs

    def leading(self) -> GaussianRational:
        if not self.coeffs:
            raise InvalidArgument("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def coeff(self, k: int) -> GaussianRational:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else GR_ZERO

    @staticmethod
    def zero() -> "ComplexPoly":
        return ComplexPoly(())

    @staticmethod
    def one() -> "ComplexPoly":
        return ComplexPoly((GR_ONE,))

    @staticmethod
    def variable() -> "ComplexPoly":
        return ComplexPoly((GR_ZERO, GR_ONE))

    @staticmethod
    def constant(c: GaussianRational | _FractionLike) -> "ComplexPoly":
        return ComplexPoly((c if isinstance(c, GaussianRational) else gr(c),))

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "ComplexPoly") -> "ComplexPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return ComplexPoly(self.coeff(k) + other.coeff(k) for k in range(n))

    def __sub__(self, other: "ComplexPoly") -> "ComplexPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return ComplexPoly(self.coeff(k) - other.coeff(k) for k in range(n))

    def __neg__(self) -> "ComplexPoly":
        return ComplexPoly(-c for c in self.coeffs)

    def __mul__(self, other: "ComplexPoly") -> "ComplexPoly":
        if self.is_zero() or other.is_zero():
            return ComplexPoly.zero()
        out = [GR_ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return ComplexPoly(out)

    def scale(self, c: GaussianRational) -> "ComplexPoly":
        return ComplexPoly(c * a for a in self.coeffs)

    def pow(self, n: int) -> "ComplexPoly":
        if n < 0:
            raise InvalidArgument("negative polynomial power")
        result = ComplexPoly.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def divmod(self, other: "ComplexPoly") -> tuple["ComplexPoly", "ComplexPoly"]:
        """Exact euclidean division over the field Q(i)."""
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dd, dv = len(rem) - 1, other.degree
        if dd < dv:
            return ComplexPoly.zero(), self
        lead_inv = other.leading().inverse()
        quo = [GR_ZERO] * (dd - dv + 1)
        for k in range(dd - dv, -1, -1):
            c = rem[k + dv] * lead_inv
            quo[k] = c
            if not c.is_zero():
                for j, b in enumerate(other.coeffs):
                    rem[k + j] = rem[k + j] - c * b
        return ComplexPoly(quo), ComplexPoly(rem[:dv])

    def __floordiv__(self, other: "ComplexPoly") -> "ComplexPoly":
        return self.divmod(other)[0]

    def __mod__(self, other: "ComplexPoly") -> "ComplexPoly":
        return self.divmod(other)[1]

    def exact_div(self, other: "ComplexPoly") -> "ComplexPoly":
        q, r = self.divmod(other)
        if not r.is_zero():
            raise InvalidArgument("exact_div called on non-divisible pair")
        return q

    def derivative(self) -> "ComplexPoly":
        return ComplexPoly(
            gr(k) * c for k, c in enumerate(self.coeffs) if k > 0
        )

    def monic(self) -> "ComplexPoly":
        if self.is_zero():
            return self
        inv = self.leading().inverse()
        return self.scale(inv)

    def reciprocal(self, at_degree: int | None = None) -> "ComplexPoly":
        """Coefficients in reverse order; pad to ``at_degree`` first.

        This is the z -> 1/z chart swap: p.reciprocal(d)(w) = w^d p(1/w).
        """
        d = self.degree if at_degree is None else at_degree
        if self.is_zero():
            return self
        if d < self.degree:
            raise InvalidArgument("reversal degree below polynomial degree")
        padded = list(self.coeffs) + [GR_ZERO] * (int(d) - int(self.degree))
        return ComplexPoly(reversed(padded))

    # -- evaluation ---------------------------------------------------------

    def eval(self, z: GaussianRational) -> GaussianRational:
        acc = GR_ZERO
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc

    def eval_complex(self, z):
        """Horner evaluation at a python/mpmath complex number."""
        acc = 0j if isinstance(z, complex) else mp.mpc(0)
        for c in reversed(self.coeffs):
            cz = c.to_complex() if isinstance(z, complex) else c.to_mpc()
            acc = acc * z + cz
        return acc

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        parts = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if c.is_zero():
                continue
            if k == 0:
                parts.append(f"({c})")
            elif k == 1:
                parts.append(f"({c})*z")
            else:
                parts.append(f"({c})*z^{k}")
        return " + ".join(parts)

    __repr__ = __str__


def poly_arith(a: ComplexPoly, b: ComplexPoly, op: str) -> ComplexPoly:
    """Dispatch form of +, -, * used by callers that select the op by name."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise InvalidArgument(f"unknown polynomial op {op!r}")


def poly_gcd(a: ComplexPoly, b: ComplexPoly) -> ComplexPoly:
    """Monic gcd over Q(i) by the euclidean algorithm."""
    if a.is_zero() and b.is_zero():
        raise InvalidArgument("gcd(0, 0) is undefined")
    while not b.is_zero():
        a, b = b, a % b
    return a.monic()


def poly_compose(outer: ComplexPoly, num: ComplexPoly, den: ComplexPoly) -> tuple[ComplexPoly, ComplexPoly]:
    """Homogenized substitution z <- num/den into ``outer``.

    Returns (A, B) with A = sum_k c_k num^k den^(d-k) and B = den^d where
    d = deg(outer), so A/B = outer(num/den) before any gcd reduction.
    """
    if den.is_zero():
        raise InvalidArgument("zero denominator in composition")
    if outer.is_zero():
        return ComplexPoly.zero(), ComplexPoly.one()
    d = int(outer.degree)
    # Horner in num with a running power of den:
    #   A_d = c_d; A_{k-1} = A_k * num + c_{k-1} * den^(d-k+1)
    acc = ComplexPoly.constant(outer.coeffs[d])
    den_pow = ComplexPoly.one()
    for k in range(d - 1, -1, -1):
        den_pow = den_pow * den
        acc = acc * num + den_pow.scale(outer.coeffs[k])
    return acc, den.pow(d)


# ---------------------------------------------------------------------------
# Square-free structure (exact), used to stabilize numeric root finding
# ---------------------------------------------------------------------------


def squarefree_decomposition(p: ComplexPoly) -> list[tuple[ComplexPoly, int]]:
    """Yun-style decomposition p = lc * prod q_i^i with q_i monic squarefree."""
    if p.is_zero():
        raise InvalidArgument("zero polynomial has no squarefree decomposition")
    p = p.monic()
    if p.degree == 0:
        return []
    out: list[tuple[ComplexPoly, int]] = []
    g = poly_gcd(p, p.derivative())
    w = p.exact_div(g)
    i = 1
    while w.degree > 0:
        y = poly_gcd(w, g)
        factor = w.exact_div(y)
        if factor.degree > 0:
            out.append((factor.monic(), i))
        w = y
        g = g.exact_div(y)
        i += 1
    return out


def radical(p: ComplexPoly) -> ComplexPoly:
    """Monic product of the distinct irreducible factors of p."""
    if p.is_zero():
        raise InvalidArgument("radical of zero polynomial")
    if p.degree == 0:
        return ComplexPoly.one()
    return p.exact_div(poly_gcd(p, p.derivative())).monic()


# ---------------------------------------------------------------------------
# Numeric layer
# ---------------------------------------------------------------------------


def _is_finite_number(x) -> bool:
    try:
        return bool(mp.isfinite(x))
    except TypeError:
        return False


@dataclass(frozen=True)
class ComplexFloat:
    """A finite complex floating value; parts may be float or mpmath mpf."""

    re: object
    im: object

    def __init__(self, re, im=0.0):
        if not (_is_finite_number(re) and _is_finite_number(im)):
            raise InvalidArgument("ComplexFloat parts must be finite")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @staticmethod
    def from_complex(z) -> "ComplexFloat":
        if isinstance(z, (int, float)):
            return ComplexFloat(float(z), 0.0)
        return ComplexFloat(z.real, z.imag)

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    def to_mpc(self) -> mp.mpc:
        return mp.mpc(self.re, self.im)

    def __str__(self) -> str:
        return f"{float(self.re):.12g}{float(self.im):+.12g}i"

    __repr__ = __str__


DEFAULT_PRECISION = 53
_ABERTH_MAX_ITER = 400


def cluster_tolerance(precision: int) -> float:
    return 2.0 ** (-precision / 3.0)


def snap_tolerance(precision: int) -> float:
    return 2.0 ** (-precision / 2.0)


def _aberth(coeffs: Sequence[mp.mpc], precision: int) -> list[mp.mpc]:
    """Aberth-Ehrlich simultaneous iteration on a squarefree monic polynomial.

    ``coeffs`` is lowest-first with leading coefficient 1.
    """
    n = len(coeffs) - 1
    if n == 1:
        return [-coeffs[0]]
    deriv = [k * coeffs[k] for k in range(1, n + 1)]

    def val(cs, z):
        acc = mp.mpc(0)
        for c in reversed(cs):
            acc = acc * z + c
        return acc

    # Cauchy-style initial radius, roots spread on a circle with a fixed
    # angular offset so symmetric configurations do not stall.
    radius = 1 + max(abs(c) for c in coeffs[:-1])
    two_pi = 2 * mp.pi
    zs = [
        radius * mp.exp(1j * (two_pi * k / n + mp.mpf(4) / 10))
        for k in range(n)
    ]
    stop = mp.mpf(2) ** (-(precision + 8))
    for _ in range(_ABERTH_MAX_ITER):
        max_move = mp.mpf(0)
        for j in range(n):
            pv = val(coeffs, zs[j])
            dv = val(deriv, zs[j])
            if pv == 0:
                continue
            if dv == 0:
                zs[j] = zs[j] + stop * (1 + abs(zs[j]))
                max_move = mp.inf
                continue
            newton = pv / dv
            rep = mp.mpc(0)
            for k in range(n):
                if k != j:
                    diff = zs[j] - zs[k]
                    if diff == 0:
                        diff = stop * (1 + abs(zs[j]))
                    rep += 1 / diff
            denom = 1 - newton * rep
            if denom == 0:
                step = newton
            else:
                step = newton / denom
            zs[j] = zs[j] - step
            move = abs(step) / (1 + abs(zs[j]))
            if move > max_move:
                max_move = move
        if max_move < stop:
            return zs
    # Accept anyway if residuals meet the documented bound; else fail loudly.
    scale = max(abs(c) for c in coeffs)
    bound = mp.mpf(2) ** (-precision // 2) * scale
    bad = [z for z in zs if abs(val(coeffs, z)) > bound * max(1, abs(z)) ** n]
    if bad:
        raise NumericFailure(
            "root iteration did not converge",
            degree=n,
            precision=precision,
            worst_residual=float(max(abs(val(coeffs, z)) for z in zs)),
        )
    return zs


def _cluster(points: list[tuple[mp.mpc, int]], tol: float) -> list[tuple[mp.mpc, int]]:
    """Greedy merge of points closer than tol; multiplicities add, centers average."""
    out: list[list] = []
    for z, m in points:
        for entry in out:
            if abs(z - entry[0]) <= tol * (1 + abs(z)):
                total = entry[1] + m
                entry[0] = (entry[0] * entry[1] + z * m) / total
                entry[1] = total
                break
        else:
            out.append([z, m])
    return [(z, m) for z, m in out]


_MAX_WORK_PRECISION = 4096


def _squarefree_roots(monic: ComplexPoly, work: int) -> list[mp.mpc]:
    if monic.degree == 1:
        return [-monic.coeff(0).to_mpc()]
    if monic.degree == 2:
        b = monic.coeff(1).to_mpc()
        c = monic.coeff(0).to_mpc()
        disc = mp.sqrt(b * b - 4 * c)
        return [(-b + disc) / 2, (-b - disc) / 2]
    return _aberth([c.to_mpc() for c in monic.coeffs], work)


def poly_roots_numeric(p: ComplexPoly, precision: int = DEFAULT_PRECISION) -> list[tuple[ComplexFloat, int]]:
    """All complex roots of p with multiplicities.

    The exact squarefree decomposition is taken first, so the simultaneous
    iteration only ever sees simple roots; clusters within
    ``cluster_tolerance(precision)`` are then merged as a guard.  Roots of
    badly conditioned factors are re-run at doubled working precision until
    their Newton corrections drop below 2^-(precision/2 + 12) relative, so
    the returned values really are accurate at the requested precision, not
    just small residuals.  The multiplicity-weighted count equals deg(p).
    """
    if p.is_zero() or p.degree < 1:
        raise InvalidArgument("root finding needs degree >= 1")
    found: list[tuple[mp.mpc, int]] = []
    target = mp.mpf(2) ** (-(precision // 2 + 12))
    for factor, mult in squarefree_decomposition(p):
        # roots at the origin come off exactly
        k = 0
        while factor.coeff(0).is_zero():
            factor = ComplexPoly(factor.coeffs[1:])
            k += 1
        if k:
            found.append((mp.mpc(0), k * mult))
        if factor.degree < 1:
            continue
        monic = factor.monic()
        deriv = monic.derivative()
        work = precision + 16
        while True:
            with mp.workprec(work):
                roots = _squarefree_roots(monic, work)
                worst = mp.mpf(0)
                for z in roots:
                    dv = deriv.eval_complex(z) if not deriv.is_zero() else mp.mpc(1)
                    if dv == 0:
                        worst = mp.inf
                        break
                    step = abs(monic.eval_complex(z) / dv) / (1 + abs(z))
                    if step > worst:
                        worst = step
            if worst <= target:
                break
            if work >= _MAX_WORK_PRECISION:
                raise NumericFailure(
                    "root accuracy target unreachable",
                    degree=int(monic.degree),
                    precision=precision,
                    worst_newton_step=float(worst),
                )
            work *= 2
        found.extend((z, mult) for z in roots)
    with mp.workprec(precision + 16):
        clustered = _cluster(found, cluster_tolerance(precision))
    out = [(ComplexFloat(z.real, z.imag), m) for z, m in clustered]
    assert sum(m for _, m in out) == p.degree
    return out


def _fraction_from_number(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    num, den = mp.libmp.to_rational(x._mpf_)
    return Fraction(int(num), int(den))


def snap_to_exact(
    x: ComplexFloat,
    max_den: int,
    precision: int = DEFAULT_PRECISION,
) -> GaussianRational | None:
    """Nearest Gaussian rational with denominators <= max_den, if close enough.

    Both parts are rounded by continued fractions; the candidate is returned
    only when it lies within ``snap_tolerance(precision)`` of x (scaled by
    magnitude), otherwise None.
    """
    if max_den < 1:
        raise InvalidArgument("max_den must be >= 1")
    re = _fraction_from_number(x.re).limit_denominator(max_den)
    im = _fraction_from_number(x.im).limit_denominator(max_den)
    cand = GaussianRational(re, im)
    err = abs(cand.to_mpc() - x.to_mpc())
    scale = 1 + abs(x.to_mpc())
    if err <= snap_tolerance(precision) * scale:
        return cand
    return None

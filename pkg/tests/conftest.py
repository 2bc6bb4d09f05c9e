"""Shared helpers: deterministic random samplers for maps and groups."""

import random
from fractions import Fraction

import pytest

from deckmap.algebra import ComplexPoly, GaussianRational, gr
from deckmap.mobius import MobiusTransform
from deckmap.ratmap import RationalMap


def rand_fraction(rng: random.Random, span: int = 6) -> Fraction:
    num = rng.randint(-span, span)
    den = rng.randint(1, span)
    return Fraction(num, den)


def rand_gaussian(rng: random.Random, span: int = 6, complex_ok: bool = True) -> GaussianRational:
    re = rand_fraction(rng, span)
    im = rand_fraction(rng, span) if complex_ok and rng.random() < 0.4 else Fraction(0)
    return GaussianRational(re, im)


def rand_poly(rng: random.Random, degree: int, span: int = 6) -> ComplexPoly:
    while True:
        coeffs = [rand_gaussian(rng, span) for _ in range(degree + 1)]
        p = ComplexPoly(coeffs)
        if p.degree == degree:
            return p


def rand_mobius(rng: random.Random, span: int = 4) -> MobiusTransform:
    while True:
        a, b, c, d = (rand_gaussian(rng, span) for _ in range(4))
        if not (a * d - b * c).is_zero():
            return MobiusTransform(a, b, c, d)


def rand_quadratic(rng: random.Random, span: int = 5) -> RationalMap:
    """A random quadratic rational map (all quadratics are bicritical)."""
    while True:
        num = rand_poly(rng, rng.choice([1, 2]), span)
        den = rand_poly(rng, rng.choice([0, 1, 2]), span)
        if den.is_zero():
            continue
        try:
            f = RationalMap(num, den)
        except Exception:
            continue
        if f.degree == 2:
            return f


def rand_bicritical(rng: random.Random, d: int) -> RationalMap:
    """post o z^d o pre for random exact Moebius maps: always bicritical."""
    pre = rand_mobius(rng)
    post = rand_mobius(rng)
    zd = RationalMap(ComplexPoly([0] * d + [1]), ComplexPoly([1]))
    return post.as_rational_map().compose(zd).compose(pre.as_rational_map())


def f_a(a: GaussianRational) -> RationalMap:
    """The coalescing family (z^2 - a)/(z^2 + a)."""
    return RationalMap(ComplexPoly([-a, gr(0), gr(1)]), ComplexPoly([a, gr(0), gr(1)]))


def f_c(c: GaussianRational) -> RationalMap:
    """The symmetric family c(z + 1/z)."""
    return RationalMap(ComplexPoly([c, gr(0), c]), ComplexPoly([0, 1]))


def rand_coalescing_quadratic(rng: random.Random) -> tuple[RationalMap, MobiusTransform]:
    """A random conjugate of a random f_a (coalescing is conjugacy invariant)."""
    while True:
        a = rand_gaussian(rng, 5)
        if a.is_zero() or a == gr(1) or a == gr(-1):
            continue
        break
    phi = rand_mobius(rng)
    f = phi.as_rational_map().compose(f_a(a)).compose(phi.inverse().as_rational_map())
    return f, phi


@pytest.fixture
def rng():
    return random.Random(20240817)

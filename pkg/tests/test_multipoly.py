from __future__ import annotations

from fractions import Fraction

import pytest
import sympy
from hypothesis import assume, given, settings, strategies as st

from phi4forms.multipoly import (ArityMismatch, DegreeTooHigh, DenominatorNotInvertible, MultiPoly, NotDivisible,
                                 disc_wrt, divides, exact_div, parse, poly_sqrt)
from phi4forms.pipeline import FixtureRegistry

x, y = MultiPoly.gens(2)


@st.composite
def polys(draw, arity=3, max_deg=3, max_terms=5, coeff=9):
    n = draw(st.integers(0, max_terms))
    items = [(draw(st.lists(st.integers(0, max_deg), min_size=arity, max_size=arity)),
              draw(st.integers(-coeff, coeff))) for _ in range(n)]
    return MultiPoly.from_terms(arity, items)


def to_sympy(f: MultiPoly):
    xs = sympy.symbols(f"x0:{f.arity}")
    return sum(sympy.Rational(c.numerator, c.denominator) * sympy.prod(v ** e for v, e in zip(xs, ex))
               for ex, c in f.items()), xs


def test_ring_examples():
    assert (x + y) * (x - y) == x * x - y * y
    assert x + MultiPoly.zero(2) == x
    assert (x * 3 - x * 3).is_zero()
    with pytest.raises(ArityMismatch):
        x + MultiPoly.var(3, 0)


@given(polys(), polys(), polys())
@settings(max_examples=60, deadline=None)
def test_distributive(f, g, h):
    assert (f + g) * h == f * h + g * h


@given(polys(), polys())
@settings(max_examples=60, deadline=None)
def test_product_matches_sympy(f, g):
    a, xs = to_sympy(f)
    b, _ = to_sympy(g)
    c, _ = to_sympy(f * g)
    assert sympy.expand(a * b - c) == 0


def test_normalization():
    f = MultiPoly.from_terms(1, [((1,), Fraction(2, 4)), ((0,), Fraction(-3, 2))])
    assert f.den == 2 and f.terms[max(f.terms)] == 1
    assert MultiPoly(1, {0: 0}).is_zero()


def test_exact_div_examples():
    assert exact_div(x * x - y * y, x + y) == x - y
    assert exact_div(x * y + y, MultiPoly.constant(2, 1)) == x * y + y
    with pytest.raises(NotDivisible):
        exact_div(x * x + y * y, x + y)
    with pytest.raises(ZeroDivisionError):
        exact_div(x, MultiPoly.zero(2))


@given(polys(max_terms=4), polys(max_terms=3))
@settings(max_examples=60, deadline=None)
def test_exact_div_inverts_product(f, g):
    assume(not g.is_zero())
    assert exact_div(f * g, g) == f
    assert divides(g, f * g)


def test_poly_sqrt_examples():
    assert poly_sqrt((x + y) * (x + y)) == x + y
    assert poly_sqrt(parse("4*x1^2 - 4*x1*x2 + x2^2", ["x0", "x1", "x2"])) == parse("2*x1 - x2", ["x0", "x1", "x2"])
    assert poly_sqrt(x * x + y * y) is None
    assert poly_sqrt(MultiPoly.constant(2, Fraction(9, 4))) == MultiPoly.constant(2, Fraction(3, 2))


@given(polys(max_terms=4))
@settings(max_examples=60, deadline=None)
def test_poly_sqrt_of_square(f):
    s = poly_sqrt(f * f)
    assert s is not None and s * s == f * f
    assert s == f or s == -f


@given(polys(max_terms=4))
@settings(max_examples=40, deadline=None)
def test_poly_sqrt_is_exact_when_found(f):
    s = poly_sqrt(f)
    if s is not None:
        assert s * s == f


def test_coeffs_in_var():
    w, z, yy, x0 = MultiPoly.gens(4)[::-1]
    f = x0 * x0 * yy + x0 * z + w
    assert f.coeffs_in_var(0) == [w, z, yy]
    assert MultiPoly.constant(3, 5).coeffs_in_var(1) == [MultiPoly.constant(3, 5)]


@given(polys(), st.integers(0, 2))
@settings(max_examples=50, deadline=None)
def test_coeffs_reassemble(f, v):
    xv = MultiPoly.var(f.arity, v)
    acc = MultiPoly.zero(f.arity)
    for i, c in enumerate(f.coeffs_in_var(v)):
        assert c.degree_in(v) <= 0
        acc = acc + c * xv ** i
    assert acc == f


def test_disc_examples():
    x0, x1, x2 = MultiPoly.gens(3)
    assert disc_wrt(x0 * x1 + x2, 0) == x1 * x1
    assert disc_wrt((x0 + x1) * (x0 * 2 + x2), 0) == (x1 * 2 - x2) ** 2
    with pytest.raises(DegreeTooHigh):
        disc_wrt(x0 ** 3, 0)


@given(st.lists(st.integers(-5, 5), min_size=6, max_size=6))
@settings(max_examples=60, deadline=None)
def test_disc_of_linear_pair_is_square_of_resultant(c):
    v, s, t = MultiPoly.gens(3)
    a1, b1 = s * c[0] + t * c[1], s * c[2] + t * c[3]
    a2, b2 = s * c[4] + t * c[5], t + s
    f = (a1 * v + b1) * (a2 * v + b2)
    assert disc_wrt(f, 0) == (a1 * b2 - a2 * b1) ** 2


def test_disc_of_q3_splits():
    q3 = FixtureRegistry.default().poly("Q3")
    D = disc_wrt(q3, 0)
    assert D.degree_in(0) == 0 and D.total_degree() == 8
    names = ["x0", "x1", "x2", "x3", "x4"]
    rest = D
    for lin in ("x1", "x3", "x4", "x1 + x2 + x4"):
        rest = exact_div(rest, parse(lin, names))
    assert rest.total_degree() == 4 and rest.is_homogeneous(4)
    assert poly_sqrt(D) is None


def test_substitute_zero():
    x0, x1, x2 = MultiPoly.gens(3)
    assert (x0 + x1 + x2).substitute_zero([0]) == x1 + x2
    f = x0 * x1 + x2 * x2
    assert f.substitute_zero([]) == f


@given(polys(max_terms=6), st.sets(st.integers(0, 2)))
@settings(max_examples=40, deadline=None)
def test_substitute_zero_keeps_homogeneity(f, vs):
    h = MultiPoly.from_terms(3, [(e, c) for e, c in f.items() if sum(e) == 3])
    g = h.substitute_zero(vs)
    assert g.is_zero() or g.is_homogeneous(3)
    assert all(g.degree_in(v) <= 0 for v in vs)


def test_reduce_mod_p():
    q1 = FixtureRegistry.default().poly("Q1")
    with pytest.raises(DenominatorNotInvertible):
        q1.reduce_mod_p(2)
    assert (MultiPoly.var(1, 0) - 5).reduce_mod_p(5) == {(1,): 1}
    half = MultiPoly.constant(1, Fraction(1, 2))
    assert half.reduce_mod_p(7) == {(0,): 4}


@given(polys(), polys(), st.sampled_from([3, 5, 7, 11]))
@settings(max_examples=40, deadline=None)
def test_reduce_mod_p_ignores_multiples_of_p(f, g, p):
    g = g.scale_to_integral()
    assert f.reduce_mod_p(p) == (f + g * p).reduce_mod_p(p)


def test_parse_format_roundtrip_fixtures():
    reg = FixtureRegistry.default()
    for name in reg.names():
        for f in reg.model(name).equations:
            names = [f"v{i}" for i in range(f.arity)]
            assert parse(f.format(names), names) == f
            assert MultiPoly.from_json(f.to_json()) == f


@given(polys(max_deg=4, max_terms=6))
@settings(max_examples=60, deadline=None)
def test_format_roundtrip_random(f):
    assert parse(f.format(), f.arity) == f


def test_fixture_homogeneity():
    reg = FixtureRegistry.default()
    for name in reg.names():
        m = reg.model(name)
        for eq in m.equations:
            assert m.multidegree(eq) is not None, name

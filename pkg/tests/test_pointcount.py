from __future__ import annotations

import json
import time
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st
from sympy import primerange

from naive import affine, chi, ev, model_count
from phi4forms.graphs import Graph, GraphError, load_graph_fixture, five_invariant
from phi4forms.models import MultiProj, Proj, VarietyModel, WeightedProj, double_cover, hypersurface
from phi4forms.multipoly import DenominatorNotInvertible, MultiPoly, parse
from phi4forms.pipeline import FixtureRegistry
from phi4forms.pointcount import (BudgetExceeded, CacheConflict, CountCache, CountRecord, InvalidPrime,
                                  RamifiedPrime, alpha_8, alpha_390, c2_bruteforce, cache_get, cache_put,
                                  cached_count, count_affine, count_model, count_multiprojective,
                                  count_projective, count_weighted_double_cover, cubic_frobenius, legendre,
                                  sqrt_mod)

PRIMES = list(primerange(3, 60))


@st.composite
def forms(draw, arity, degree, max_terms=6):
    items = []
    for _ in range(draw(st.integers(1, max_terms))):
        e = [0] * arity
        for _ in range(degree):
            e[draw(st.integers(0, arity - 1))] += 1
        items.append((e, draw(st.integers(-5, 5))))
    return MultiPoly.from_terms(arity, items)


def test_affine_examples():
    x1, x2, x3 = MultiPoly.gens(3)
    assert count_affine([x1 + x2 + x3], 5) == 25
    assert count_affine([], 5, arity=3) == 125
    psi = parse("x0*x1*x2 + x0*x1*x3", 4)
    assert count_affine([psi], 3) == affine([psi], 3)


def test_projective_examples():
    assert count_projective([], 5, n=3) == 156
    x0, x1, x2 = MultiPoly.gens(3)
    assert count_projective([x0 * x1 - x2 * x2], 7) == 8
    for p in (3, 5, 7, 11):
        assert count_projective([x0 + x1 * 2 - x2], p) == p + 1


def test_invalid_prime_and_denominator():
    x = MultiPoly.var(2, 0)
    with pytest.raises(InvalidPrime):
        count_projective([x], 2)
    with pytest.raises(InvalidPrime):
        count_projective([x], 9)
    q1 = FixtureRegistry.default().model("Q1")
    assert q1.invalid_prime(2)
    with pytest.raises(DenominatorNotInvertible):
        count_affine([x * MultiPoly.constant(2, 1) / 3], 3)


def test_budget():
    with pytest.raises(BudgetExceeded):
        count_affine([], 101, arity=5, budget=10 ** 6)


def test_multiprojective_examples():
    assert count_model(VarietyModel(MultiProj((1, 1)), ()), 5) == 36
    B = FixtureRegistry.default().model("B")
    assert count_model(B, 5) == 321
    u0, u1, x0, x1 = MultiPoly.gens(4)
    toy = VarietyModel(MultiProj((1, 1)), (u0 * x0 - u1 * x1,))
    for p in (3, 5, 7):
        assert count_multiprojective(toy, p, method="naive") == model_count(toy, p) == p + 1


@pytest.mark.parametrize("p", [3, 5])
def test_b_fiber_equals_naive(p):
    B = FixtureRegistry.default().model("B")
    assert count_multiprojective(B, p, method="fiber") == count_multiprojective(B, p, method="naive")


def test_weighted_cover_examples():
    x0, x1 = MultiPoly.gens(2)
    # t^2 = x0^2 over P^1: two lines t = +-x0 meeting over (0:1)
    assert count_model(double_cover(x0 * x0), 5) == 2 * 6 - 1 == model_count(double_cover(x0 * x0), 5)
    assert count_model(double_cover(x0 * x0 * 2), 5) == 1


@given(forms(3, 3, max_terms=5), forms(3, 6, max_terms=6), st.booleans(), st.sampled_from([5, 7]))
@settings(max_examples=20, deadline=None)
def test_weighted_cover_against_orbits(g, h, square, p):
    F = g * g if square else h
    if F.is_zero():
        return
    model = double_cover(F)
    res = F.reduce_mod_p(p)
    squares = [0] * p
    for t in range(p):
        squares[t * t % p] += 1
    orbit = (sum(squares[ev(res, x, p)] for x in product(range(p), repeat=3)) - 1) // (p - 1)
    assert count_weighted_double_cover(model, p) == orbit == model_count(model, p)


@given(forms(4, 3), st.sampled_from([3, 5, 7]))
@settings(max_examples=20, deadline=None)
def test_affine_projective_relation(f, p):
    if f.is_zero():
        return
    assert count_affine([f], p) == (p - 1) * count_projective([f], p) + 1


@given(forms(4, 3, max_terms=8), st.sampled_from([3, 5]))
@settings(max_examples=20, deadline=None)
def test_engine_matches_naive(f, p):
    if f.is_zero():
        return
    assert count_model(hypersurface(f), p) == model_count(hypersurface(f), p)


@given(forms(5, 4, max_terms=10), st.sampled_from([3, 5, 7]))
@settings(max_examples=10, deadline=None)
def test_thread_count_does_not_matter(f, p):
    if f.is_zero():
        return
    a = count_projective([f], p, threads=1)
    assert a == count_projective([f], p, threads=2) == count_projective([f], p, threads=4)


@given(st.integers(2, 4), st.data())
@settings(max_examples=15, deadline=None)
def test_multiprojective_toys_fiber_vs_naive(n, data):
    base = [data.draw(forms(n + 1, 1, max_terms=3).filter(lambda f: not f.is_zero())) for _ in range(2)]
    eqs = []
    arity = n + 1 + 2 * len(base)
    for i, (a, b) in enumerate(zip(base, base[1:] + base[:1])):
        u = MultiPoly.var(arity, n + 1 + 2 * i)
        v = MultiPoly.var(arity, n + 2 + 2 * i)
        eqs.append(a.extend(arity) * u - b.extend(arity) * v)
    model = VarietyModel(MultiProj((n, 1, 1)), tuple(eqs))
    p = data.draw(st.sampled_from([3, 5]))
    assert count_multiprojective(model, p, method="fiber") == count_multiprojective(model, p, method="naive")


def test_c2_examples():
    c3 = Graph.from_edges(3, [(1, 2), (2, 3), (1, 3)], "C3")
    v = c2_bruteforce(c3, 5)
    assert v.affine_count == 25 and v.value == 1
    with pytest.raises(GraphError):
        c2_bruteforce(Graph.from_edges(2, [(1, 2), (1, 2)]), 5)
    with pytest.raises(BudgetExceeded):
        c2_bruteforce(load_graph_fixture("K5"), 13, budget=10 ** 6)


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13])
def test_k4_c2_oracle(p):
    k4 = load_graph_fixture("K4")
    c2 = c2_bruteforce(k4, p)
    f = five_invariant(k4, (0, 1, 2, 3, 4))
    rest = f.select_vars([5])
    n = count_affine([rest], p)
    assert n == affine([rest], p)
    assert (n + c2.value) % p == 0


@pytest.mark.parametrize("name", ["C3", "K4"])
def test_c2_divisibility(name):
    g = Graph.from_edges(3, [(1, 2), (2, 3), (1, 3)], "C3") if name == "C3" else load_graph_fixture(name)
    for p in (3, 5, 7):
        assert c2_bruteforce(g, p).affine_count % (p * p) == 0


def test_legendre_examples():
    assert legendre(-1, 5) == 1
    assert legendre(5, 7) == -1
    assert legendre(14, 7) == 0


@given(st.integers(-500, 500), st.integers(-500, 500), st.sampled_from(PRIMES))
@settings(max_examples=100, deadline=None)
def test_legendre_multiplicative(a, b, p):
    assert legendre(a, p) * legendre(b, p) == legendre(a * b, p)
    assert legendre(a, p) == chi(a, p)


def test_sqrt_mod_examples():
    assert sqrt_mod(9, 13) == 3
    assert sqrt_mod(2, 5) is None


@given(st.integers(0, 10 ** 6), st.sampled_from(PRIMES))
@settings(max_examples=200, deadline=None)
def test_sqrt_mod_roundtrip(a, p):
    s = sqrt_mod(a, p)
    if s is None:
        assert legendre(a, p) == -1
    else:
        assert s * s % p == a % p and 0 <= s <= p - s


def test_alpha_8():
    assert [alpha_8(p) for p in (17, 7, 41)] == [1, 0, 1]


def test_alpha_390_examples():
    assert alpha_390(5) == 0
    assert alpha_390(7) == 0
    assert alpha_390(13) == 2


@pytest.mark.parametrize("p", [p for p in PRIMES if p > 3])
def test_alpha_390_brute(p):
    """Both square roots of 6 + 4 sqrt 3 exist in F_p exactly when alpha = 2."""
    if legendre(3, p) == -1 or legendre(-3, p) == -1:
        assert alpha_390(p) == 0
        return
    s = next(x for x in range(p) if x * x % p == 3)
    roots = [y for y in range(p) if (y * y - 6 - 4 * s) % p == 0]
    assert alpha_390(p) == (2 if roots else -2)


def test_cubic_frobenius():
    assert cubic_frobenius([1, 0, -1, 0], 5) == "split3"
    assert cubic_frobenius([1, 0, -1, -2], 17) == "inert3"
    for p in (19, 23, 29):
        assert cubic_frobenius([1, 0, -1, -2], p) != "inert3"
    with pytest.raises(RamifiedPrime):
        cubic_frobenius([1, 0, -1, -2], 13)


def test_cache_roundtrip(tmp_path):
    cache = CountCache(tmp_path / "c.jsonl")
    assert cache_get(cache, "abc", 5) is None
    rec = CountRecord("abc", 5, 31)
    assert cache_put(cache, rec) == rec
    assert cache_get(cache, "abc", 5) == rec
    assert CountCache(tmp_path / "c.jsonl").get("abc", 5) == rec
    cache_put(cache, rec)
    assert len(cache) == 1
    with pytest.raises(CacheConflict):
        cache_put(cache, CountRecord("abc", 5, 32))
    line = json.loads((tmp_path / "c.jsonl").read_text().splitlines()[0])
    assert line == {"model_hash": "abc", "p": 5, "count": 31, "mode": "projective"}


def test_cached_count_reuses(tmp_path):
    cache = CountCache(tmp_path / "c.jsonl")
    m = hypersurface(parse("x0*x1 - x2^2", 3), "conic")
    assert cached_count(m, 7, cache) == (8, False)
    renamed = hypersurface(parse("x0*x1 - x2^2", 3), "other name")
    assert cached_count(renamed, 7, cache) == (8, True)


def test_model_json_roundtrip():
    reg = FixtureRegistry.default()
    for name in ("B", "O5", "Q1", "K3_8"):
        m = reg.model(name)
        back = VarietyModel.from_json(m.to_json())
        assert back.content_hash() == m.content_hash()


@pytest.mark.parametrize("name", ["O5", "octic_78"])
def test_throughput_quaternary_octics(name):
    # engineering target: 1e7 point evaluations per second on one core, best of three runs
    f = FixtureRegistry.default().model(name).equations[0]
    p = 97
    points = (p ** f.arity - 1) // (p - 1)
    best = float("inf")
    for _ in range(3):
        start = time.perf_counter()
        count_projective([f], p)
        best = min(best, time.perf_counter() - start)
    assert points / best >= 1e7, f"{points / best:.3g} points/s"

from __future__ import annotations

import pytest
from hypothesis import assume, given, settings, strategies as st

from naive import model_count
from phi4forms.graphs import delete_vertex, edges_by_label, five_invariant, load_graph_fixture
from phi4forms.models import Proj, VarietyModel, WeightedProj, double_cover, hypersurface
from phi4forms.multipoly import MultiPoly, disc_wrt, exact_div, parse
from phi4forms.pipeline import FixtureRegistry
from phi4forms.pointcount import count_model
from phi4forms.reduction import (DegreeNotOne, HintDoesNotDivide, MembershipFailure, SimilarityChain,
                                 SimilarityStep, StepNotApplicable, WrongDegree, auto_split_search,
                                 denominator_chain, linear_factors, linear_reduce, match_up_to_scaling,
                                 normal_to_weighted_cover, resultant_reduce, subspace_reduce, to_hypersurface,
                                 verify_chain)


def similar(V: VarietyModel, W: VarietyModel, sign: int, p: int) -> bool:
    a, b = model_count(V, p), model_count(W, p)
    return ((a - 1) - sign * (b - 1)) % p == 0


@st.composite
def forms(draw, arity, degree, max_terms=6, skip=()):
    items = []
    for _ in range(draw(st.integers(1, max_terms))):
        e = [0] * arity
        for _ in range(degree):
            e[draw(st.sampled_from([i for i in range(arity) if i not in skip]))] += 1
        items.append((e, draw(st.integers(-4, 4))))
    return MultiPoly.from_terms(arity, items)


def test_linear_reduce_examples():
    x0, x1, x2, x3 = MultiPoly.gens(4)
    out, step = linear_reduce(x0 * x1 + x2 * x3, 0)
    assert out == x1
    assert step.kind == "linear" and step.sign_flip == -1
    with pytest.raises(DegreeNotOne):
        linear_reduce(x0 * x0 + x1 * x2, 0)


@given(forms(4, 2, skip=(0,)), forms(4, 3, skip=(0,)), st.sampled_from([5, 7]))
@settings(max_examples=12, deadline=None)
def test_linear_reduce_similarity(g, h, p):
    x0 = MultiPoly.var(4, 0)
    assume(not g.is_zero() and not h.is_zero())
    out, step = linear_reduce(x0 * g + h, 0)
    assert similar(step.input_model, step.output_model, step.sign_flip, p)


def test_resultant_reduce_examples():
    x0, x1, x2 = MultiPoly.gens(3)
    root, step = resultant_reduce((x0 + x1) * (x0 * 2 + x2), 0)
    assert root in (x2 - x1 * 2, x1 * 2 - x2)
    assert resultant_reduce(x0 * x0 + x1 * x2, 0) is None


@given(st.lists(st.integers(-4, 4), min_size=8, max_size=8))
@settings(max_examples=40, deadline=None)
def test_resultant_is_classical(c):
    v, s, t, u = MultiPoly.gens(4)
    a1, b1 = MultiPoly.constant(4, c[0]), s * c[1] + t * c[2] + u * c[3]
    a2, b2 = MultiPoly.constant(4, c[4]), s * c[5] + t * c[6] + u * c[7]
    f = (a1 * v + b1) * (a2 * v + b2)
    assume(f.degree_in(0) == 2)
    res = a1 * b2 - a2 * b1
    out = resultant_reduce(f, 0)
    assert out is not None
    assert out[0] in (res, -res)


def test_denominator_chain_empty_and_errors():
    x0, x1, x2 = MultiPoly.gens(3)
    f = x0 * x1 + x2 * x2
    out, chain = denominator_chain(f, [])
    assert out == f and len(chain) == 0 and chain.composite_sign == 1
    with pytest.raises(StepNotApplicable):
        denominator_chain(x0 * x0 + x1 * x2, [0])
    with pytest.raises(StepNotApplicable):
        denominator_chain(x0 ** 3 + x1 ** 3 + x2 ** 3, [0])


def test_k4_chain_is_short():
    g = load_graph_fixture("K4")
    f = five_invariant(g, (0, 1, 2, 3, 4))
    assert set(f.variables()) <= {5}
    out, chain = denominator_chain(f, [5] if f.degree_in(5) in (1, 2) else [])
    assert len(chain) <= 1
    assert out.is_constant() or set(out.variables()) <= {5}


def test_4_13_denominator_chain_degree():
    g = delete_vertex(load_graph_fixture("4_13"), 1)
    f = five_invariant(g, edges_by_label(g, [(2, 3), (2, 6), (2, 7), (3, 9), (6, 7)]))
    order = edges_by_label(g, [(3, 8), (4, 6), (5, 10), (4, 5), (4, 8), (5, 11), (9, 11)])
    out, chain = denominator_chain(f, order, [i for i in range(g.edge_count) if f.degree_in(i)])
    assert len(chain) == 7
    assert len(out.variables()) == 6 and out.is_homogeneous(6)
    assert chain.composite_sign == (-1) ** 7


def test_subspace_example():
    x0, x1, x2 = MultiPoly.gens(3)
    f = x0 * x0 * x2 + x0 * x1 * x2 + x1 * x1 * x2
    W, step = subspace_reduce(f, [0, 1])
    assert W.ambient.dims == (0, 1)
    z, y0, y1 = MultiPoly.gens(3)
    assert W.equations[0] == z * (y0 * y0 + y0 * y1 + y1 * y1)
    assert W.degrees == [(1, 2)]
    for p in (3, 5):
        assert similar(step.input_model, W, step.sign_flip, p)
    with pytest.raises(MembershipFailure):
        subspace_reduce(x0 * x2 * x2 + x1 * x1 * x2, [0, 1])


@given(forms(4, 2, max_terms=4), forms(4, 2, max_terms=4), st.sampled_from([3, 5]))
@settings(max_examples=10, deadline=None)
def test_subspace_bidegree_and_similarity(a, b, p):
    x0, x1, x2, x3 = MultiPoly.gens(4)
    f = x0 * x0 * a + x0 * x1 * b + x1 * x1 * (x2 + x3) * x3
    assume(f.is_homogeneous(4))
    W, step = subspace_reduce(f, [0, 1])
    assert W.degrees == [(4 - 2 + 1 - 1, 2)] or W.degrees == [(2, 2)]
    assert similar(step.input_model, W, step.sign_flip, p)


def test_normal_cover_split():
    x0, x1, x2, x3 = MultiPoly.gens(4)
    g = x2 * x2 + x3 * x2 + x3 * x3
    W, step = normal_to_weighted_cover(x0 * x1 * g, 0, 1)
    assert isinstance(W.ambient, WeightedProj)
    assert W.equations[0] == (g * g).select_vars([2, 3])
    with pytest.raises(MembershipFailure):
        normal_to_weighted_cover(x0 * x2 ** 3 + x1 ** 2 * x3 ** 2, 0, 1)


@pytest.mark.parametrize("p", [5, 7])
def test_normal_cover_similarity_toy_quartic(p):
    x0, x1, x2, x3 = MultiPoly.gens(4)
    f = x0 * x0 * x2 * x3 + x0 * x1 * (x2 * x2 - x3 * x3) + x1 * x1 * x2 * (x2 + x3) * 2
    W, step = normal_to_weighted_cover(f, 0, 1)
    assert similar(step.input_model, W, step.sign_flip, p)
    assert count_model(W, p) == model_count(W, p)


def test_to_hypersurface_errors():
    y0, y1, y2 = MultiPoly.gens(3)
    model = double_cover(y0 * y1 * (y0 + y2) * (y1 - y2) * (y0 * y0 + y2 * y2), "toy")
    with pytest.raises(WrongDegree):
        to_hypersurface(model, y0)
    with pytest.raises(HintDoesNotDivide):
        to_hypersurface(model, y2 * y2)
    with pytest.raises(WrongDegree):
        to_hypersurface(model, MultiPoly.var(4, 0) * MultiPoly.var(4, 1))
    with pytest.raises(WrongDegree):
        to_hypersurface(double_cover(y0 * y1 * (y0 + y2) * (y1 - y2), "quartic"), y0 * y1)


TOY_H = "y0^4 + y1^3*y2 - y2^4 + y0*y1*y2^2"


@pytest.mark.parametrize("p", [5, 7])
def test_to_hypersurface_toy_cover(p):
    y0, y1, y2 = MultiPoly.gens(3)
    D = y0 * y1 * parse(TOY_H, ["y0", "y1", "y2"])
    model = double_cover(D, "toy")
    W, step = to_hypersurface(model, y0 * y1)
    assert W.ambient == Proj(3) and W.equations[0].is_homogeneous(4)
    assert similar(model, W, step.sign_flip, p)
    # reading the hypersurface back as a cover over its v0-discriminant gives the same counts
    back = double_cover(disc_wrt(W.equations[0], 0).drop_vars([0]), "back")
    assert count_model(back, p) == count_model(model, p)


def test_h3_hypersurface_fixture():
    reg = FixtureRegistry.default()
    q3 = reg.poly("Q3")
    D = disc_wrt(q3, 0).drop_vars([0])
    g = auto_split_search(D, 3)
    W, _ = to_hypersurface(double_cover(D, "H3"), g)
    assert W.equations[0].is_homogeneous(5)
    assert match_up_to_scaling(W.equations[0], reg.model("H3_hyp").equations[0]) is not None


def test_auto_split_examples():
    x1, x2, x3 = MultiPoly.gens(3)
    q = x1 * x1 + x1 * x3 + x3 * x3 * 2
    D = x2 * x2 * (x1 + x2) ** 2 * q
    got = auto_split_search(D, 2)
    assert got is not None and got.total_degree() == 2
    exact_div(D, got)
    assert got in (x2 * (x1 + x2), -(x2 * (x1 + x2)))
    assert auto_split_search(x1 * x1 + x2 * x2 + x3 * x3, 1) is None


def test_linear_factors_of_q3_discriminant():
    q3 = FixtureRegistry.default().poly("Q3")
    names = ["x0", "x1", "x2", "x3", "x4"]
    found = {f for f, _ in linear_factors(disc_wrt(q3, 0))}
    for lin in ("x1", "x3", "x4", "x1 + x2 + x4"):
        assert parse(lin, names) in found


def test_match_up_to_scaling():
    x0, x1, x2 = MultiPoly.gens(3)
    f = x0 * x0 * x1 - x1 * x2 * x2 * 3
    g = (x2 * x2 * x1 * 4 - x1 * x0 * x0 * 12) * 5
    m = match_up_to_scaling(f, g)
    assert m is not None
    assert match_up_to_scaling(f, x0 * x0 * x1 + x1 * x2 * x2 + x0 ** 3) is None


def test_verify_chain_trivial_and_budget(tmp_path):
    rep = verify_chain(SimilarityChain(), [3, 5])
    assert rep.ok and not rep.checks
    x0, x1, x2, x3 = MultiPoly.gens(4)
    _, chain = denominator_chain(x0 * (x1 * x1 + x2 * x3) + x1 ** 3 - x3 ** 3, [0])
    rep = verify_chain(chain, [5, 7])
    assert rep.ok and rep.verified_steps() == [0]
    assert chain.steps[0].verified_primes == {5, 7}
    tiny = verify_chain(chain, [5], budget=1)
    assert not tiny.verified_steps()
    assert all(c.status == "skipped:budget" for c in tiny.checks)


def test_verify_chain_reports_failure():
    x0, x1, x2 = MultiPoly.gens(3)
    V = hypersurface(x0 * x1 - x2 * x2, "conic")
    W = hypersurface(x0 * x1 * x2, "triangle")
    bad = SimilarityStep("fixture_substitution", "conic", "triangle", -1, input_model=V, output_model=W)
    rep = verify_chain(SimilarityChain([bad]), [5])
    assert not rep.ok and rep.failures[0].p == 5


def test_step_validation():
    with pytest.raises(Exception):
        SimilarityStep("linear", "a", "b", 0)
    with pytest.raises(Exception):
        SimilarityStep("magic", "a", "b", 1)


@given(st.integers(2, 4), st.data())
@settings(max_examples=12, deadline=None)
def test_chevalley_warning_guard(n, data):
    d = data.draw(st.integers(1, n))
    f = data.draw(forms(n + 1, d))
    assume(not f.is_zero())
    p = data.draw(st.sampled_from([3, 5]))
    assert count_model(hypersurface(f, "cw"), p) % p == 1

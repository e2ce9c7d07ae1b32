from __future__ import annotations

import io
import json
import urllib.error

import pytest
from hypothesis import given, settings, strategies as st
from sympy import primerange

from phi4forms.modforms import (ETA_QUOTIENTS, BoundViolation, CountFormula, EmptyOverlap, EtaQuotient, MissingAp,
                                NetworkUnavailable, NewformTable, NonIntegralShift, ParseError, PrecisionExceeded,
                                Term, Twist, ap_from_eta, calibrate_congruence, congruence_match, eta_expand,
                                euler_product, extract_ap, fetch_newform, formula_eval, leg, load_newform_table,
                                parity_check, pentagonal_terms, save_newform_table, shipped_labels, shipped_table,
                                weil_bound)
from phi4forms.pipeline import FixtureRegistry
from phi4forms.pointcount import RamifiedPrime, count_model

CUBIC = (1, 0, -1, -2)
H3_FORMULA = CountFormula.poly({3: 1, 2: 6, 1: -15, 0: 1}, -1)


def product_by_convolution(factors, N):
    """prod (1 - q^(dn))^e by multiplying truncated binomials one n at a time."""
    series = [1] + [0] * N
    for d, e in factors:
        for n in range(1, N // d + 1):
            step = d * n
            for _ in range(abs(e)):
                if e > 0:
                    series = [series[i] - (series[i - step] if i >= step else 0) for i in range(N + 1)]
                else:
                    out = series[:]
                    for i in range(step, N + 1):
                        out[i] += out[i - step]
                    series = out
    return series


def test_pentagonal_and_jacobi_prefixes():
    assert euler_product([(1, 1)], 7) == [1, -1, -1, 0, 0, 1, 0, 1]
    cube = euler_product([(1, 3)], 6)
    assert cube == [1, -3, 0, 5, 0, 0, -7]
    assert pentagonal_terms(7) == [(0, 1), (1, -1), (2, -1), (5, 1), (7, 1)]


@pytest.mark.parametrize("name", sorted(ETA_QUOTIENTS))
def test_eta_against_convolution(name):
    q = ETA_QUOTIENTS[name]
    assert q.q_shift == 1
    N = 80
    series = eta_expand(q, N)
    body = product_by_convolution(q.factors, N - 1)
    assert list(series.coeffs) == [0] + body


def test_negative_exponents_against_convolution():
    factors = ((1, -2), (2, 5))
    assert euler_product(factors, 40) == product_by_convolution(factors, 40)


def test_weight_three_level_seven_values():
    q = ETA_QUOTIENTS["7.3.eta"]
    assert q.weight == 3 and q.level == 7
    s = eta_expand(q, 10)
    assert (s[2], s[3], s[5]) == (-3, 0, 0)
    assert ap_from_eta(q, 3) == 0
    assert ap_from_eta(ETA_QUOTIENTS["12.3.eta"], 5) == 0


def test_truncation_consistency():
    q = ETA_QUOTIENTS["5.4.eta"]
    assert ap_from_eta(q, 2, precision=10) == ap_from_eta(q, 2, precision=100)
    for name, q in ETA_QUOTIENTS.items():
        short, long = eta_expand(q, 30), eta_expand(q, 300)
        assert long.coeffs[:31] == short.coeffs


def test_eta_errors():
    with pytest.raises(NonIntegralShift):
        eta_expand(EtaQuotient(((1, 1),)), 10)
    with pytest.raises(PrecisionExceeded):
        eta_expand(ETA_QUOTIENTS["5.4.eta"], 10 ** 5 + 1)
    with pytest.raises(PrecisionExceeded):
        eta_expand(ETA_QUOTIENTS["5.4.eta"], 10)[11]
    with pytest.raises(PrecisionExceeded):
        ap_from_eta(ETA_QUOTIENTS["5.4.eta"], 13, precision=10)


@pytest.mark.parametrize("label", shipped_labels() + sorted(ETA_QUOTIENTS))
def test_shipped_tables_respect_weil(label):
    t = shipped_table(label)
    assert t.ap
    for p, a in t.ap.items():
        assert abs(a) <= weil_bound(p, t.weight)


def test_eta_tables_agree_with_ingested():
    for eta, label in (("5.4.eta", "5.4.a.a"), ("6.4.eta", "6.4.a.a")):
        if label not in shipped_labels():
            pytest.skip(f"{label} not shipped")
        a, b = shipped_table(eta), shipped_table(label)
        common = set(a.ap) & set(b.ap)
        assert common and all(a[p] == b[p] for p in common)


def test_table_roundtrip(tmp_path):
    t = shipped_table("13.4.a.a")
    path = save_newform_table(t, tmp_path / "t.json")
    back = load_newform_table(path)
    assert (back.label, back.level, back.weight, back.ap) == (t.label, t.level, t.weight, t.ap)


def test_table_errors(tmp_path):
    with pytest.raises(BoundViolation):
        NewformTable("x", 13, 4, {5: 23})
    (tmp_path / "bad.json").write_text(json.dumps({"label": "x", "level": 13, "weight": 4, "ap": {"5": "30"}}))
    with pytest.raises(BoundViolation):
        load_newform_table(tmp_path / "bad.json")
    (tmp_path / "broken.json").write_text("{not json")
    with pytest.raises(ParseError):
        load_newform_table(tmp_path / "broken.json")
    with pytest.raises(ParseError):
        shipped_table("999.4.z.z")


def test_formula_eval_examples():
    assert formula_eval(CountFormula.poly({2: 43, 1: 64}), 5) == 1395
    assert formula_eval(CountFormula.poly({3: 1, 2: 7, 1: 4, 0: 1}), 5) == 321
    f = CountFormula((Term(1, 1, leg(-15)),))
    assert formula_eval(f, 7) == -7
    with pytest.raises(MissingAp):
        formula_eval(H3_FORMULA, 5)


def test_formula_algebra_and_json():
    a = CountFormula.poly({3: 1, 2: 49, 1: 49, 0: 1}, -1)
    assert a - H3_FORMULA == CountFormula.poly({2: 43, 1: 64})
    twisted = CountFormula((Term(2, 1, Twist("alpha390")), Term(-1, 1, leg(-15)), Term(1, 0)), 1)
    assert CountFormula.from_json(twisted.to_json()) == twisted
    assert str(H3_FORMULA) == "p^3 + 6*p^2 - 15*p + 1 - a_p"


@given(st.sampled_from(list(primerange(5, 200))), st.integers(-10 ** 4, 10 ** 4), st.sampled_from([1, -1]))
@settings(max_examples=80, deadline=None)
def test_extract_inverts_eval(p, ap, sign):
    f = CountFormula.poly({3: 1, 2: 6, 1: -15, 0: 1}, sign)
    if abs(ap) > weil_bound(p, 4):
        with pytest.raises(BoundViolation):
            extract_ap(formula_eval(f, p, ap), f, p)
    else:
        assert extract_ap(formula_eval(f, p, ap), f, p) == ap


def test_h3_extraction_at_5():
    H3 = FixtureRegistry.default().model("H3")
    a5 = extract_ap(count_model(H3, 5), H3_FORMULA, 5)
    assert a5 % 2 == 1 and abs(a5) <= 22
    assert a5 == shipped_table("13.4.a.a")[5]
    with pytest.raises(BoundViolation):
        extract_ap(formula_eval(H3_FORMULA, 5, 0) + 500, H3_FORMULA, 5)


def test_parity_examples():
    t = shipped_table("13.4.a.a")
    assert parity_check(t[17], 17, CUBIC)
    assert t[17] % 2 == 1
    for p in (19, 23, 29):
        assert t[p] % 2 == 0 and parity_check(t[p], p, CUBIC)
    assert not parity_check(3, 7, (1, 0, -1, 0))
    with pytest.raises(RamifiedPrime):
        parity_check(0, 13, CUBIC)


def test_congruence_match_and_calibration():
    table = shipped_table("7.3.eta")
    counts = {p: 1 + table[p] + 3 * p for p in primerange(3, 50)}
    sign, offset, p0 = calibrate_congruence(counts, table, bad=[7])
    assert (sign, offset) == (1, 1)
    rep = congruence_match(counts, table, sign, offset, bad=[7])
    assert rep.ok and 7 in rep.skipped
    wrong = congruence_match(counts, table, -sign, offset, bad=[7])
    assert not wrong.ok
    # a CM form vanishes at inert primes, where the sign is invisible
    assert wrong.failures == [p for p in primerange(3, 50) if p != 7 and table[p] % p]
    with pytest.raises(EmptyOverlap):
        congruence_match({1009: 0}, table, 1, 1)


class _Resp(io.BytesIO):
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def test_fetch_offline(monkeypatch, tmp_path):
    def refuse(url, timeout=None):
        raise urllib.error.URLError("no route")

    monkeypatch.setattr("urllib.request.urlopen", refuse)
    with pytest.raises(NetworkUnavailable):
        fetch_newform("13.4.a.a", tmp_path)


def test_fetch_materializes_table(monkeypatch, tmp_path):
    local = shipped_table("13.4.a.a")
    traces = [0] * 60
    for p in primerange(2, 61):
        traces[p - 1] = local[p]
    body = {"data": [{"label": "13.4.a.a", "level": 13, "weight": 4, "dim": 1, "traces": traces}]}
    seen = []

    def fake(url, timeout=None):
        seen.append(url)
        return _Resp(json.dumps(body).encode())

    monkeypatch.setattr("urllib.request.urlopen", fake)
    t = fetch_newform("13.4.a.a", tmp_path, endpoint="http://example.invalid")
    assert "label=13.4.a.a" in seen[0] and seen[0].startswith("http://example.invalid/api/mf_newforms/")
    assert t[59] == local[59]
    assert load_newform_table(tmp_path / "13.4.a.a.json").ap == t.ap


def test_fetch_unknown_label(monkeypatch, tmp_path):
    monkeypatch.setattr("urllib.request.urlopen", lambda url, timeout=None: _Resp(b'{"data": []}'))
    with pytest.raises(ParseError):
        fetch_newform("1.4.z.z", tmp_path)

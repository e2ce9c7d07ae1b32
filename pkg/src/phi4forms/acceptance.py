"""The acceptance suite: one function per criterion, shared by the CLI and the tests."""

from __future__ import annotations

import dataclasses
import itertools
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .graphs import delete_vertex, graph_matrix, kirchhoff_polynomial, load_graph_fixture
from .models import VarietyModel, WeightedProj
from .modforms import CountFormula, formula_eval, shipped_table
from .multipoly import MultiPoly
from .pipeline import FixtureRegistry, PipelineConfig, Report, ledger_total, run_pipeline
from .pointcount import CountCache, count_affine, count_model, count_multiprojective, count_projective


@dataclass
class CriterionResult:
    number: int
    title: str
    ok: bool
    seconds: float = 0.0
    limit: float | None = None
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        lim = f" (limit {self.limit:.0f} s)" if self.limit else ""
        return f"criterion {self.number:>2} {status}: {self.title} [{self.seconds:.1f} s{lim}]"


def _subconfig(name: str, **keep) -> PipelineConfig:
    cfg = PipelineConfig.load(name)
    fields = {f.name for f in dataclasses.fields(PipelineConfig)}
    drop = {k: [] if isinstance(getattr(cfg, k), list) else None for k in fields
            if k not in keep and k not in ("name", "description")}
    out = dataclasses.replace(cfg, **drop)
    for k, v in keep.items():
        if v is not True:
            setattr(out, k, v)
    return out


def _rows_ok(report: Report, check: str | None = None) -> tuple[bool, int]:
    rows = [r for r in report.rows if check is None or r.check == check]
    checked = [r for r in rows if r.status in ("pass", "fail")]
    return bool(checked) and all(r.status == "pass" for r in checked), len(checked)


# ---------------------------------------------------------------------- criteria

def criterion_1(cache: CountCache | None = None) -> CriterionResult:
    cases = {"C3": None, "K4": None, "3_7": 3, "4_13": 1}
    detail = {}
    for name, v in cases.items():
        g = load_graph_fixture(name)
        if v is not None:
            g = delete_vertex(g, v)
        det = graph_matrix(g).determinant()
        psi = kirchhoff_polynomial(g)
        sign = 1 if det == psi else (-1 if det == -psi else 0)
        detail[f"{name}-{v}" if v else name] = {"sign": sign, "terms": len(psi)}
    ok = all(d["sign"] != 0 for d in detail.values())
    return CriterionResult(1, "matrix-tree identity det(M_G) = +-Psi_G", ok, limit=10, detail=detail)


def criterion_2(cache: CountCache) -> CriterionResult:
    rep = run_pipeline(PipelineConfig.load("K4-oracle"), cache=cache)
    ok = bool(rep.oracle) and all(o["ok"] for o in rep.oracle) and {o["p"] for o in rep.oracle} == {3, 5, 7, 11, 13}
    return CriterionResult(2, "K4: affine count of the five-invariant = -c2 mod p", ok, limit=30,
                           detail={"oracle": rep.oracle})


def criterion_3(cache: CountCache) -> CriterionResult:
    cfg = _subconfig("4_13", graph=True, five_invariant=True, steps=True, verify=True)
    rep = run_pipeline(cfg, cache=cache)
    chain = rep.chain
    required = [c for c in chain["checks"]
                if c["status"] in ("pass", "fail")]
    ok = (chain["ok"] and not chain["unchecked_required"] and bool(required)
          and all(a["ok"] for a in rep.assertions) and len(chain["intermediate_vars"]) == 6)
    return CriterionResult(3, "(4,13) chain: small steps prime-similar at p = 3, 5; terminal = Q1 up to scaling",
                           ok, limit=600, detail={"assertions": rep.assertions,
                                                  "verified": sorted({c["step"] for c in required}),
                                                  "intermediate_vars": chain["intermediate_vars"]})


def criterion_4(cache: CountCache) -> CriterionResult:
    rep = run_pipeline(PipelineConfig.load("octic_B"), cache=cache)
    res = rep.links["results"]
    ok = rep.links["ok"] and sum(r["status"] == "pass" for r in res) == 8
    return CriterionResult(4, "[B]_p = p^3+7p^2+4p+1 and [D_B]_p - [H3]_p = 12p^2-3p", ok, limit=300,
                           detail={"links": res})


def _formula_criterion(number: int, title: str, config: str, limit: float, cache: CountCache,
                       extended: bool = False) -> CriterionResult:
    cfg = _subconfig(config, checks=[ck for ck in PipelineConfig.load(config).checks if ck["type"] == "formula"])
    rep = run_pipeline(cfg, cache=cache, extended=extended)
    offline = run_pipeline(cfg, cache=cache, extended=extended, use_tables=False)
    ok_t, n_t = _rows_ok(rep)
    ok_o, n_o = _rows_ok(offline)
    detail = {"table_rows": n_t, "offline_rows": n_o, "offline_ok": ok_o,
              "failures": [r.__dict__ for r in rep.rows + offline.rows if r.status == "fail"]}
    return CriterionResult(number, title, ok_t and ok_o, limit=limit, detail=detail)


def criterion_5(cache: CountCache, extended: bool = False) -> CriterionResult:
    return _formula_criterion(5, "[H3]_p = p^3+6p^2-15p+1-a_p (level 13); parity fallback", "4_13", 600, cache,
                              extended)


def criterion_6(cache: CountCache, extended: bool = False) -> CriterionResult:
    return _formula_criterion(6, "level 78 double octic formula; evenness fallback", "level_78", 600, cache,
                              extended)


def criterion_7(cache: CountCache, extended: bool = False) -> CriterionResult:
    return _formula_criterion(7, "level 390 double octic formula; evenness fallback", "level_390", 900, cache,
                              extended)


def criterion_8(cache: CountCache, extended: bool = False) -> CriterionResult:
    return _formula_criterion(8, "O5, O6 (eta), O7, O17 (tables) count formulas", "weight4", 900, cache,
                              extended)


def criterion_9(cache: CountCache) -> CriterionResult:
    detail = {}
    ok = True
    for name in ("w3_7", "w3_8", "w3_12"):
        rep = run_pipeline(PipelineConfig.load(name), cache=cache)
        good, n = _rows_ok(rep)
        detail[name] = {"ok": rep.ok, "rows": n, "calibrations": rep.calibrations}
        ok = ok and rep.ok and good
    return CriterionResult(9, "weight 3 congruences (levels 7, 8, 12) with calibrated sign", ok, limit=600,
                           detail=detail)


def criterion_10(cache: CountCache | None = None) -> CriterionResult:
    detail = {}
    ok = True
    for name in ("4_13", "level_78", "level_390"):
        led = PipelineConfig.load(name).ledger
        total = ledger_total(led["events"])
        detail[name] = str(total)
        ok = ok and total == CountFormula.from_json(led["expected"])
    cy = CountFormula.poly({3: 1, 2: 49, 1: 49, 0: 1}, -1)
    h3 = CountFormula.poly({3: 1, 2: 6, 1: -15, 0: 1}, -1)
    target = CountFormula.poly({2: 43, 1: 64})
    ok = ok and (cy - h3) == target
    table = shipped_table("13.4.a.a")
    for p in (5, 7, 11):
        diff = formula_eval(cy, p, table[p]) - formula_eval(h3, p, table[p])
        ok = ok and diff == formula_eval(target, p)
    return CriterionResult(10, "ledger totals and CY13 - H3 = 43p^2 + 64p", ok, limit=1, detail=detail)


# ---------------------------------------------------------------------- engine properties

def _random_form(rng: np.random.Generator, arity: int, degree: int, terms: int) -> MultiPoly:
    out = []
    for _ in range(terms):
        cuts = np.sort(rng.integers(0, degree + 1, size=arity - 1))
        exps = np.diff(np.concatenate([[0], cuts, [degree]])).tolist()
        out.append((exps, int(rng.integers(-3, 4))))
    return MultiPoly.from_terms(arity, out)


def _naive_weighted(F: MultiPoly, p: int) -> int:
    """(#{(t, x) in A^(n+1) : t^2 = F(x)} - 1) / (p - 1), with plain Python loops."""
    res = F.reduce_mod_p(p)
    total = 0
    squares = [0] * p
    for t in range(p):
        squares[t * t % p] += 1
    for x in itertools.product(range(p), repeat=F.arity):
        v = 0
        for e, c in res.items():
            term = c
            for xi, ei in zip(x, e):
                term = term * pow(xi, ei, p)
            v += term
        total += squares[v % p]
    return (total - 1) // (p - 1)


def engine_properties(seed: int = 20240601) -> dict[str, bool]:
    rng = np.random.default_rng(seed)
    out = {}
    # affine cone over a projective hypersurface: A = 1 + (p - 1) [X]
    ok = True
    for _ in range(4):
        f = _random_form(rng, 4, 3, 6)
        if f.is_zero():
            continue
        for p in (3, 5, 7):
            ok &= count_affine([f], p) == 1 + (p - 1) * count_projective([f], p)
    out["affine_projective"] = ok
    # Chevalley-Warning: total degree < number of variables => p | affine count
    ok = True
    made = 0
    while made < 10:
        n = int(rng.integers(3, 6))
        d = int(rng.integers(1, n))
        f = _random_form(rng, n, d, 5)
        if f.is_zero():
            continue
        made += 1
        for p in (3, 5):
            ok &= count_affine([f], p) % p == 0
    out["chevalley_warning"] = ok and made == 10
    # weighted double cover against the orbit count of the affine cone
    ok = True
    made = 0
    while made < 20:
        F = _random_form(rng, 3, 4, 6)
        if F.is_zero():
            continue
        made += 1
        model = VarietyModel(WeightedProj(2, 3), (F,), "w")
        for p in (3, 5):
            ok &= count_model(model, p) == _naive_weighted(F, p)
    out["double_cover_orbits"] = ok
    # fibered and naive enumeration of a bilinear system
    reg = FixtureRegistry.default()
    B = reg.model("B")
    ok = all(count_multiprojective(B, p, method="fiber") == count_multiprojective(B, p, method="naive")
             for p in (3, 5))
    K = reg.model("K3_8")
    ok &= all(count_model(K, p) == count_model(reg.model("K3_8_P5"), p) for p in (3, 5))
    out["multiprojective_dual"] = ok
    # thread count does not change the answer
    f = _random_form(rng, 5, 4, 10)
    out["thread_determinism"] = all(len({count_projective([f], p, threads=t) for t in (1, 2, 4)}) == 1
                                    for p in (5, 7))
    return out


def criterion_11(cache: CountCache | None = None) -> CriterionResult:
    props = engine_properties()
    return CriterionResult(11, "engine property suite", all(props.values()), limit=300, detail=props)


def criterion_12(cache: CountCache) -> CriterionResult:
    parts = [criterion_5(cache, True), criterion_6(cache, True), criterion_7(cache, True), criterion_8(cache, True)]
    return CriterionResult(12, "criteria 5-8 over the extended window up to 200", all(r.ok for r in parts),
                           limit=7200, detail={f"criterion_{r.number}": r.detail for r in parts})


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11, 12: criterion_12,
}
CORE = tuple(range(1, 12))


def run_criterion(n: int, cache: CountCache) -> CriterionResult:
    start = time.perf_counter()
    try:
        res = CRITERIA[n](cache)
    except Exception as exc:  # a crash is a failed criterion, reported like any other
        res = CriterionResult(n, CRITERIA[n].__name__, False, detail={"error": f"{type(exc).__name__}: {exc}"})
    res.seconds = time.perf_counter() - start
    if res.limit is not None and res.seconds > res.limit:
        res.ok = False
        res.detail["timeout"] = f"took {res.seconds:.1f} s, limit {res.limit} s"
    return res


def run_suite(cache: CountCache, numbers=CORE) -> list[CriterionResult]:
    return [run_criterion(n, cache) for n in numbers]


__all__ = ["CORE", "CRITERIA", "CriterionResult", "engine_properties", "run_criterion", "run_suite"]

"""Declarative pipelines: graph -> reductions -> models -> counts -> modular forms."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from sympy import primerange

from .graphs import delete_vertex, edges_by_label, five_invariant, load_graph_fixture
from .models import ModelError, MultiProj, VarietyModel, ambient_from_json, double_cover, hypersurface
from .modforms import (CountFormula, ModFormError, NewformTable, Term, Twist, calibrate_congruence,
                       congruence_match, extract_ap, formula_eval, leg, parity_check, shipped_table,
                       weil_bound)
from .multipoly import MultiPoly, PolyError, disc_wrt, parse
from .pointcount import CountCache, CountRecord, c2_bruteforce, cached_count, count_affine
from .pointcount.arith import RamifiedPrime
from .reduction import (ChainReport, ReductionError, SimilarityChain, auto_split_search, denominator_chain,
                        fixture_step, match_up_to_scaling, normal_to_weighted_cover, subspace_reduce,
                        to_hypersurface, verify_chain)


class PipelineError(ValueError):
    pass


class ConfigError(PipelineError):
    pass


class FixtureError(PipelineError):
    pass


class LinkFailure(PipelineError):
    def __init__(self, link: str, p: int, detail: str = ""):
        super().__init__(f"link {link} fails at p = {p}{': ' + detail if detail else ''}")
        self.link = link
        self.p = p


class StepFailure(PipelineError):
    """A reduction step raised; carries the step index and the chain built so far."""

    def __init__(self, index: int, step: Mapping, cause: Exception, chain: SimilarityChain | None):
        super().__init__(f"step {index} ({step.get('op')}): {cause}")
        self.index = index
        self.step = dict(step)
        self.cause = cause
        self.chain = chain


# ---------------------------------------------------------------------- fixtures

@dataclass(frozen=True)
class Fixture:
    name: str
    kind: str
    vars: tuple[str, ...]
    exprs: tuple[str, ...]
    degree: Any
    anchor: str
    ambient: dict | None = None
    provenance: str = "fixture"

    def polys(self) -> list[MultiPoly]:
        return [parse(e, self.vars) for e in self.exprs]


def _d0_from_q3(reg: "FixtureRegistry") -> MultiPoly:
    return disc_wrt(reg.poly("Q3"), 0).drop_vars([0])


def db_cover(D: MultiPoly) -> MultiPoly:
    """Pull the octic D on P^3 back to the blowup B of the three lines {x1+x2 = x_i = 0}.

    In the coordinates (x0, x1, l = x1+x2, x3) a monomial x0^e0 x1^e1 l^el x3^e3 maps to
    l^(el - sum(2 - k_i)) * prod x_i^(e_i - k_i) * y_i0^(2 - k_i) y_i1^k_i with k_i = min(2, e_i),
    where (y_i0 : y_i1) = (l : x_i) on the P^1 factor attached to line i.  This removes the
    exceptional divisors twice and leaves a cover function of multidegree (2, 2, 2, 2).
    """
    if D.arity != 4 or not D.is_homogeneous(8):
        raise PipelineError("expected an octic in four variables")
    z = MultiPoly.gens(4)
    Dl = D.substitute([z[0], z[1], z[2] - z[1], z[3]])
    g = MultiPoly.gens(10)
    ell = g[1] + g[2]
    blocks = {0: (4, 5), 1: (6, 7), 3: (8, 9)}
    out = MultiPoly.zero(10)
    for e, c in Dl.items():
        ks = {i: min(2, e[i]) for i in blocks}
        need = sum(2 - k for k in ks.values())
        if need > e[2]:
            raise PipelineError(f"octic does not vanish to order 2 along the lines (monomial {e})")
        m = MultiPoly.constant(10, c) * ell ** (e[2] - need)
        for i, (a, b) in blocks.items():
            m = m * g[i] ** (e[i] - ks[i]) * g[a] ** (2 - ks[i]) * g[b] ** ks[i]
        out = out + m
    return out


def _derived(reg: "FixtureRegistry") -> dict[str, tuple[str, Any]]:
    def h3():
        return double_cover(_d0_from_q3(reg), "H3", ("x1", "x2", "x3", "x4"))

    def hy():
        D0 = _d0_from_q3(reg)
        g = auto_split_search(D0, 3)
        if g is None:
            raise FixtureError("no cubic split of the H3 branch octic")
        W, _ = to_hypersurface(h3(), g, "H3/hyp")
        return W

    def db():
        B = reg.model("B")
        return VarietyModel(B.ambient, B.equations, "D_B", B.names, cover=db_cover(_d0_from_q3(reg)))

    return {
        "H3": ("x0-discriminant of Q3: t^2 = disc(Q3)", h3),
        "H3_hyp": ("quintic obtained from H3 by the linear split of its branch octic", hy),
        "D_B": ("double cover of B branched along the lift of the H3 octic", db),
    }


class FixtureRegistry:
    """Named polynomials and models.  Derived entries are computed from shipped ones."""

    def __init__(self, fixtures: Mapping[str, Mapping]):
        self._raw = dict(fixtures)
        self._fixtures: dict[str, Fixture] = {}
        for name, obj in self._raw.items():
            try:
                exprs = tuple(obj["exprs"]) if "exprs" in obj else (obj["expr"],)
                self._fixtures[name] = Fixture(name, obj["kind"], tuple(obj["vars"]), exprs, obj.get("degree"),
                                               obj.get("anchor", ""), obj.get("ambient"))
            except (KeyError, TypeError) as exc:
                raise FixtureError(f"fixture {name!r} is malformed: {exc}") from exc
        self._models: dict[str, VarietyModel] = {}
        self._derived = _derived(self)

    @classmethod
    def default(cls) -> "FixtureRegistry":
        res = resources.files("phi4forms") / "data" / "fixtures.json"
        return cls(json.loads(res.read_text())["fixtures"])

    @classmethod
    def from_path(cls, path: str | Path) -> "FixtureRegistry":
        return cls(json.loads(Path(path).read_text())["fixtures"])

    def names(self) -> list[str]:
        return sorted(self._fixtures) + sorted(self._derived)

    def __contains__(self, name: str) -> bool:
        return name in self._fixtures or name in self._derived

    def get(self, name: str) -> Fixture:
        if name not in self._fixtures:
            raise FixtureError(f"unknown fixture {name!r}")
        return self._fixtures[name]

    def provenance(self, name: str) -> str:
        if name in self._derived:
            return "derived: " + self._derived[name][0]
        return "fixture: " + self.get(name).anchor

    def poly(self, name: str) -> MultiPoly:
        fx = self.get(name)
        if len(fx.exprs) != 1:
            raise FixtureError(f"fixture {name!r} is a system, not a single polynomial")
        return fx.polys()[0]

    def model(self, name: str) -> VarietyModel:
        if name in self._models:
            return self._models[name]
        if name in self._derived:
            m = self._derived[name][1]()
        else:
            fx = self.get(name)
            polys = fx.polys()
            if fx.kind == "double_cover":
                m = double_cover(polys[0], name, fx.vars)
            elif fx.kind == "polynomial":
                m = hypersurface(polys[0], name, fx.vars)
            elif fx.kind == "system":
                from .models import Proj
                amb = ambient_from_json(fx.ambient) if fx.ambient else Proj(len(fx.vars) - 1)
                m = VarietyModel(amb, tuple(polys), name, fx.vars)
            else:
                raise FixtureError(f"fixture {name!r} has unknown kind {fx.kind!r}")
        self._models[name] = m
        return m

    def validate(self) -> dict[str, list[str]]:
        """Problems per fixture: parse errors, inhomogeneity, wrong declared degree, missing anchor."""
        out: dict[str, list[str]] = {}
        for name, fx in self._fixtures.items():
            problems = []
            if not fx.anchor:
                problems.append("no anchor")
            try:
                polys = fx.polys()
            except PolyError as exc:
                out[name] = [f"parse: {exc}"]
                continue
            degs = fx.degree if isinstance(fx.degree, list) else [fx.degree] * len(polys)
            for f, d in zip(polys, degs):
                if fx.ambient and fx.ambient.get("type") == "multiproj":
                    m = self.model(name)
                    if list(m.multidegree(f) or ()) != list(d):
                        problems.append(f"multidegree {m.multidegree(f)} != declared {d}")
                elif not f.is_homogeneous(d):
                    problems.append(f"not homogeneous of degree {d}")
            try:
                self.model(name)
            except ModelError as exc:
                problems.append(f"model: {exc}")
            out[name] = problems
        return out


# ---------------------------------------------------------------------- configs

STEP_OPS = ("denominator", "subspace", "normal", "to_hypersurface", "fixture", "expect_fixture")
RELATIONS = ("equal", "congruence", "similar", "difference", "formula")


def _prime_window(spec: Sequence[int]) -> list[int]:
    lo, hi = spec
    return [p for p in primerange(max(3, lo), hi + 1)]


@dataclass
class PipelineConfig:
    name: str
    graph: dict | None = None
    five_invariant: list[list[int]] = field(default_factory=list)
    steps: list[dict] = field(default_factory=list)
    verify: dict = field(default_factory=dict)
    links: list[dict] = field(default_factory=list)
    checks: list[dict] = field(default_factory=list)
    c2_oracle: dict | None = None
    ledger: dict | None = None
    description: str = ""

    @classmethod
    def from_json(cls, obj: Mapping, registry: FixtureRegistry | None = None) -> "PipelineConfig":
        if not isinstance(obj, Mapping) or "name" not in obj:
            raise ConfigError("config must be an object with a name")
        known = set(cls.__dataclass_fields__)
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**{k: obj[k] for k in obj})
        cfg.validate(registry or FixtureRegistry.default())
        return cfg

    @classmethod
    def load(cls, path_or_name: str | Path, registry: FixtureRegistry | None = None) -> "PipelineConfig":
        path = Path(path_or_name)
        if not path.exists():
            res = resources.files("phi4forms") / "data" / "configs" / f"{path_or_name}.json"
            if not res.is_file():
                raise ConfigError(f"no config file or shipped config named {str(path_or_name)!r}")
            text = res.read_text()
        else:
            text = path.read_text()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_json(obj, registry)

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__ if getattr(self, k) not in (None, [], {}, "")}

    def validate(self, registry: FixtureRegistry) -> None:
        if self.steps and self.graph is None and self.steps[0].get("op") != "fixture":
            raise ConfigError("a pipeline without a graph must start from a fixture step")
        for i, st in enumerate(self.steps):
            op = st.get("op")
            if op not in STEP_OPS:
                raise ConfigError(f"step {i}: unknown op {op!r}")
            for key in ("fixture", "hint"):
                if key in st and st[key] not in registry:
                    raise ConfigError(f"step {i} ({op}): unknown fixture {st[key]!r}")
        for i, ln in enumerate(self.links):
            if ln.get("relation") not in RELATIONS:
                raise ConfigError(f"link {i}: unknown relation {ln.get('relation')!r}")
            for key in ("from", "to"):
                if key in ln and ln[key] not in registry:
                    raise ConfigError(f"link {i}: unknown fixture {ln[key]!r}")
            self._check_primes(ln.get("primes", []), f"link {i}")
        for i, ck in enumerate(self.checks):
            if ck.get("type") not in ("formula", "congruence"):
                raise ConfigError(f"check {i}: unknown type {ck.get('type')!r}")
            if ck.get("model") == "terminal" and not self.steps:
                raise ConfigError(f"check {i}: the terminal model needs reduction steps")
            if ck.get("model") != "terminal" and ck.get("model") not in registry:
                raise ConfigError(f"check {i}: unknown model {ck.get('model')!r}")
            for key in ("primes", "extended"):
                if key in ck:
                    if len(ck[key]) != 2 or ck[key][0] > ck[key][1]:
                        raise ConfigError(f"check {i}: {key} must be [lo, hi]")
                    if ck[key][0] <= 2:
                        raise ConfigError(f"check {i}: prime windows must exclude 2")
            if ck["type"] == "formula":
                try:
                    CountFormula.from_json(ck["formula"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise ConfigError(f"check {i}: bad formula: {exc}") from exc
        if self.verify:
            self._check_primes(self.verify.get("primes", []), "verify")

    @staticmethod
    def _check_primes(primes: Iterable[int], where: str) -> None:
        for p in primes:
            if p == 2:
                raise ConfigError(f"{where}: prime sets must exclude 2")


# ---------------------------------------------------------------------- chain building

@dataclass
class ChainBuild:
    chain: SimilarityChain
    terminal: VarietyModel | None
    five_invariant: MultiPoly | None
    names: tuple[str, ...]
    assertions: list[dict]
    intermediate_vars: list[str] = field(default_factory=list)


def _edge_names(g) -> tuple[str, ...]:
    return tuple(f"e{u}_{v}" for u, v in g.edges)


def build_chain(cfg: PipelineConfig, registry: FixtureRegistry | None = None) -> ChainBuild:
    registry = registry or FixtureRegistry.default()
    chain = SimilarityChain()
    assertions: list[dict] = []
    f = None
    names: tuple[str, ...] = ()
    amb: tuple[int, ...] = ()
    current: VarietyModel | None = None
    fiveinv = None
    g = None
    inter: list[str] = []
    if cfg.graph is not None:
        g = load_graph_fixture(cfg.graph["fixture"])
        if cfg.graph.get("delete_vertex") is not None:
            g = delete_vertex(g, cfg.graph["delete_vertex"])
        names = _edge_names(g)
        if cfg.five_invariant:
            E = edges_by_label(g, cfg.five_invariant)
            f = five_invariant(g, E)
            fiveinv = f
            amb = tuple(i for i in range(g.edge_count) if i not in E)
    label = "5inv"
    for i, st in enumerate(cfg.steps):
        op = st["op"]
        try:
            if op == "denominator":
                order = edges_by_label(g, st["edges"])
                f, sub = denominator_chain(f, order, amb, names, label)
                chain.extend(sub)
                amb = sub.ambient
                label = sub.steps[-1].output_label if sub.steps else label
                inter = [names[j] for j in amb]
                current = None
            elif op == "subspace":
                vs = edges_by_label(g, st["edges"])
                current, step = subspace_reduce(f, vs, amb, names, label)
                chain.append(step)
                f = None
            elif op == "normal":
                a, b = edges_by_label(g, st["edges"])
                current, step = normal_to_weighted_cover(f, a, b, amb, names, label)
                chain.append(step)
                f = None
            elif op == "to_hypersurface":
                hint_fx = registry.get(st["hint"])
                if current is None or current.names is None:
                    raise PipelineError("to_hypersurface needs a weighted cover")
                pos = {n: j for j, n in enumerate(current.names)}
                try:
                    hint = parse(hint_fx.exprs[0], hint_fx.vars)
                    hint = hint.permute([pos[v] for v in hint_fx.vars], len(current.names))
                except KeyError as exc:
                    raise PipelineError(f"hint variable {exc} is not a cover coordinate") from exc
                current, step = to_hypersurface(current, hint)
                chain.append(step)
            elif op == "fixture":
                target = registry.model(st["fixture"])
                if current is None and f is not None:
                    from .reduction import hypersurface_on
                    current = hypersurface_on(f, amb, label, names)
                    f = None
                if current is not None:
                    chain.append(fixture_step(current, target, st.get("relation", "similar"),
                                              {"fixture": st["fixture"]}))
                current = target
            elif op == "expect_fixture":
                target = registry.model(st["fixture"])
                model = current
                if model is None and f is not None:
                    from .reduction import hypersurface_on
                    model = hypersurface_on(f, amb, label, names)
                if model is None or len(model.equations) != 1 or len(target.equations) != 1:
                    raise PipelineError("expect_fixture compares single equations")
                m = match_up_to_scaling(model.equations[0], target.equations[0], permute=True)
                assertions.append({"step": i, "fixture": st["fixture"], "ok": m is not None,
                                   "match": None if m is None else {
                                       "perm": list(m.perm), "scales": [str(s) for s in m.scales],
                                       "factor": str(m.factor)}})
        except (ReductionError, PipelineError, PolyError, ModelError) as exc:
            raise StepFailure(i, st, exc, chain) from exc
    if current is None and f is not None:
        from .reduction import hypersurface_on
        current = hypersurface_on(f, amb, label, names)
    return ChainBuild(chain, current, fiveinv, names, assertions, inter)


# ---------------------------------------------------------------------- counting helpers

@dataclass
class CountLog:
    """Every count used by a run, with the cache key that backs it."""

    cache: CountCache
    threads: int = 1
    fresh: int = 0
    used: dict[tuple[str, int, str], int] = field(default_factory=dict)

    def count(self, model: VarietyModel, p: int) -> int:
        n, cached = cached_count(model, p, self.cache, self.threads)
        if not cached:
            self.fresh += 1
        self.used[(model.content_hash(), p, "projective")] = n
        return n

    def affine(self, f: MultiPoly, p: int) -> int:
        h = poly_hash(f)
        rec = self.cache.get(h, p, "affine")
        if rec is None:
            n = count_affine([f], p, threads=self.threads)
            self.fresh += 1
            self.cache.put(CountRecord(h, p, n, "affine"))
        else:
            n = rec.count
        self.used[(h, p, "affine")] = n
        return n

    def absorb_chain(self, chain: SimilarityChain, report: ChainReport) -> None:
        for c in report.checks:
            if c.status in ("pass", "fail"):
                st = chain.steps[c.step]
                self.used[(st.input_model.content_hash(), c.p, "projective")] = c.lhs
                self.used[(st.output_model.content_hash(), c.p, "projective")] = c.rhs
        for c in report.composite:
            if c.status in ("pass", "fail"):
                self.used[(chain.steps[0].input_model.content_hash(), c.p, "projective")] = c.lhs
                self.used[(chain.steps[-1].output_model.content_hash(), c.p, "projective")] = c.rhs


def poly_hash(f: MultiPoly) -> str:
    return hashlib.sha256(json.dumps({"affine": f.canonical_key()}, sort_keys=True).encode()).hexdigest()


def default_cache_path() -> Path:
    env = os.environ.get("PHI4FORMS_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "phi4forms" / "counts.jsonl"


# ---------------------------------------------------------------------- links

@dataclass
class LinkResult:
    name: str
    relation: str
    p: int
    status: str
    lhs: int | None = None
    rhs: int | None = None
    expected: int | None = None


@dataclass
class LinksReport:
    results: list[LinkResult]

    @property
    def ok(self) -> bool:
        return all(r.status != "fail" for r in self.results)

    def failures(self) -> list[LinkResult]:
        return [r for r in self.results if r.status == "fail"]

    def to_json(self) -> dict:
        return {"ok": self.ok, "results": [r.__dict__ for r in self.results]}


def _link_name(ln: Mapping) -> str:
    return ln.get("name") or (f"{ln['from']}->{ln['to']}" if "to" in ln else ln["from"])


def check_link(ln: Mapping, registry: FixtureRegistry, log: CountLog) -> list[LinkResult]:
    rel = ln["relation"]
    V = registry.model(ln["from"])
    W = registry.model(ln["to"]) if "to" in ln else None
    formula = CountFormula.from_json(ln["formula"]) if "formula" in ln else None
    sign = 1
    if rel == "similar":
        from .reduction import dimension_sign
        sign = dimension_sign(V, W)
    out = []
    name = _link_name(ln)
    for p in ln["primes"]:
        if V.invalid_prime(p) or (W is not None and W.invalid_prime(p)) or p in ln.get("bad", ()):
            out.append(LinkResult(name, rel, p, "skipped:invalid-prime"))
            continue
        a = log.count(V, p)
        b = log.count(W, p) if W is not None else None
        expected = formula_eval(formula, p) if formula is not None else None
        if rel == "equal":
            ok = a == b
        elif rel == "congruence":
            ok = (a - b) % p == 0
        elif rel == "similar":
            ok = ((a - 1) - sign * (b - 1)) % p == 0
        elif rel == "difference":
            ok = a - b == expected
        else:
            ok = a == expected
        out.append(LinkResult(name, rel, p, "pass" if ok else "fail", a, b, expected))
    return out


def verify_fixture_links(cfg: PipelineConfig, registry: FixtureRegistry | None = None,
                         cache: CountCache | None = None, strict: bool = False, threads: int = 1,
                         log: CountLog | None = None) -> LinksReport:
    registry = registry or FixtureRegistry.default()
    if log is None:
        log = CountLog(cache if cache is not None else CountCache(default_cache_path()), threads)
    results = []
    for ln in cfg.links:
        rs = check_link(ln, registry, log)
        if strict:
            for r in rs:
                if r.status == "fail":
                    raise LinkFailure(r.name, r.p, f"{r.lhs} vs {r.rhs if r.rhs is not None else r.expected}")
        results.extend(rs)
    return LinksReport(results)


# ---------------------------------------------------------------------- ledger

EVENT_KINDS = ("fourfold_point", "curve_blowup", "meet_adjustment", "small_resolution",
               "twisted_meet", "point_cover", "character", "cover_correction", "unitemized")


def _twist(obj) -> Twist | None:
    if obj is None:
        return None
    if isinstance(obj, (list, tuple)):
        return Twist(obj[0], int(obj[1]) if len(obj) > 1 else 0)
    return Twist(obj["kind"], int(obj.get("d", 0)))


def event_formula(ev: Mapping) -> CountFormula:
    """Correction to the point count contributed by one ledger event (times its multiplicity)."""
    kind = ev.get("kind")
    n = int(ev.get("count", 1))
    if kind == "fourfold_point":
        # blowing up a point where four branch sheets meet
        f = CountFormula.poly({2: 1, 1: 2})
    elif kind == "curve_blowup":
        # n rational curves whose exceptional double covers have p^2 + (2 + d_i)p + 1 points;
        # d is summed over the group, twists are [discriminant, multiplicity] pairs
        terms = [Term(n, 2), Term(n + int(ev.get("d", 0)), 1)]
        terms += [Term(int(m), 1, leg(int(d))) for d, m in ev.get("twists", [])]
        return CountFormula(tuple(terms)).normalized()
    elif kind == "meet_adjustment":
        f = CountFormula.poly({1: -1})
    elif kind == "small_resolution":
        f = CountFormula.poly({1: 1})
    elif kind == "twisted_meet":
        f = CountFormula((Term(-1, 1, leg(int(ev["d"]))),))
    elif kind == "point_cover":
        # a point replaced by the double cover of its exceptional divisor: p^2 + (a + sum of twists) p
        terms = [Term(1, 2), Term(int(ev.get("a", 0)), 1)]
        terms += [Term(1, 1, leg(int(d))) for d in ev.get("twists", [])]
        f = CountFormula(tuple(terms))
    elif kind in ("character", "unitemized"):
        if kind == "unitemized" and not ev.get("reason"):
            raise PipelineError("an unitemized correction must state its reason")
        f = CountFormula((Term(int(ev.get("coeff", 1)), int(ev.get("p_power", 1)), _twist(ev.get("twist"))),))
    elif kind == "cover_correction":
        f = CountFormula.from_json(ev["formula"])
    else:
        raise PipelineError(f"unknown ledger event {kind!r}")
    return CountFormula(tuple(Term(t.coeff * n, t.p_power, t.twist) for t in f.terms)).normalized()


def ledger_total(events: Iterable[Mapping]) -> CountFormula:
    total = CountFormula(())
    for ev in events:
        total = total + event_formula(ev)
    return total.normalized()


# ---------------------------------------------------------------------- reports

@dataclass
class Row:
    check: str
    model: str
    p: int
    status: str
    count: int | None = None
    model_hash: str | None = None
    formula_value: int | None = None
    ap: int | None = None
    extracted_ap: int | None = None
    note: str = ""


@dataclass
class Report:
    name: str
    rows: list[Row] = field(default_factory=list)
    chain: dict | None = None
    assertions: list[dict] = field(default_factory=list)
    links: dict | None = None
    ledger: dict | None = None
    oracle: list[dict] = field(default_factory=list)
    calibrations: list[dict] = field(default_factory=list)
    counts: list[dict] = field(default_factory=list)
    fresh_counts: int = 0
    provenance: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        if any(r.status == "fail" for r in self.rows):
            return False
        if self.chain is not None and not self.chain.get("ok", True):
            return False
        if any(not a["ok"] for a in self.assertions):
            return False
        if self.links is not None and not self.links["ok"]:
            return False
        if self.ledger is not None and not self.ledger["ok"]:
            return False
        return all(o["ok"] for o in self.oracle)

    def to_json(self) -> dict:
        return {"name": self.name, "ok": self.ok, "rows": [r.__dict__ for r in self.rows], "chain": self.chain,
                "assertions": self.assertions, "links": self.links, "ledger": self.ledger,
                "oracle": self.oracle, "calibrations": self.calibrations, "counts": self.counts,
                "provenance": self.provenance}

    def render(self, fmt: str = "json") -> str:
        if fmt == "json":
            return json.dumps(self.to_json(), indent=1, sort_keys=True)
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf)
            cols = list(Row.__dataclass_fields__)
            w.writerow(cols)
            for r in self.rows:
                w.writerow([getattr(r, c) if getattr(r, c) is not None else "" for c in cols])
            return buf.getvalue()
        if fmt == "md":
            return self._markdown()
        raise PipelineError(f"unknown report format {fmt!r}")

    def _markdown(self) -> str:
        out = [f"# {self.name}: {'PASS' if self.ok else 'FAIL'}", ""]
        if self.assertions:
            out.append("## Fixture assertions")
            for a in self.assertions:
                out.append(f"- {a['fixture']}: {'matches' if a['ok'] else 'does not match'} "
                           f"{a.get('match') or ''}")
            out.append("")
        if self.chain is not None:
            checks = self.chain["checks"] + self.chain["composite"]
            n_pass = sum(c["status"] == "pass" for c in checks)
            n_skip = sum(c["status"].startswith("skipped") for c in checks)
            out += ["## Chain", f"{len(self.chain['steps'])} steps, composite sign "
                    f"{self.chain['composite_sign']}; {n_pass} checks passed, {n_skip} skipped, "
                    f"{len(checks) - n_pass - n_skip} failed", ""]
        if self.links is not None:
            out.append("## Links")
            for r in self.links["results"]:
                out.append(f"- {r['name']} ({r['relation']}) p={r['p']}: {r['status']}")
            out.append("")
        if self.oracle:
            out.append("## Oracle")
            for o in self.oracle:
                out.append(f"- p={o['p']}: affine count {o['affine_count']}, c2 {o['c2']}: "
                           f"{'pass' if o['ok'] else 'fail'}")
            out.append("")
        if self.ledger is not None:
            out += ["## Ledger", f"total {self.ledger['total']}; expected {self.ledger.get('expected')}: "
                    f"{'pass' if self.ledger['ok'] else 'fail'}", ""]
        if self.rows:
            out += ["## Counts", "", "| check | model | p | count | formula | a_p | extracted | status |",
                    "|---|---|---|---|---|---|---|---|"]
            for r in self.rows:
                cells = [r.check, r.model, r.p, r.count, r.formula_value, r.ap, r.extracted_ap, r.status]
                out.append("| " + " | ".join("" if c is None else str(c) for c in cells) + " |")
        return "\n".join(out) + "\n"


# ---------------------------------------------------------------------- running

def _table_or_none(label: str | None) -> NewformTable | None:
    if label is None:
        return None
    try:
        return shipped_table(label)
    except ModFormError:
        return None


def _run_formula_check(ck: Mapping, model: VarietyModel, primes: list[int], log: CountLog,
                       use_tables: bool) -> list[Row]:
    f = CountFormula.from_json(ck["formula"])
    weight = int(ck.get("weight", 4))
    table = _table_or_none(ck.get("table")) if use_tables else None
    fb = ck.get("fallback", {})
    rows = []
    name = ck.get("name", model.label)
    for p in primes:
        if model.invalid_prime(p) or p in ck.get("bad", ()):
            rows.append(Row(name, model.label, p, "skipped:bad-prime"))
            continue
        n = log.count(model, p)
        h = model.content_hash()
        try:
            ext = extract_ap(n, f, p, weight)
            ext_note = ""
        except ModFormError as exc:
            ext, ext_note = None, str(exc)
        if table is not None and p in table.ap:
            val = formula_eval(f, p, table[p])
            status = "pass" if val == n else "fail"
            rows.append(Row(name, model.label, p, status, n, h, val, table[p], ext, ext_note))
            continue
        # offline: properties of the extracted eigenvalue
        notes = []
        ok = ext is not None
        if ok and "parity_cubic" in fb:
            try:
                if not parity_check(ext, p, fb["parity_cubic"]):
                    ok = False
                    notes.append("parity")
            except RamifiedPrime:
                notes.append("ramified")
        if ok and fb.get("even") and p not in fb.get("even_exclude", ()):
            if ext % 2:
                ok = False
                notes.append("odd")
        rows.append(Row(name, model.label, p, "pass" if ok else "fail", n, h, None, None, ext,
                        "; ".join([ext_note] + notes).strip("; ") or "extraction"))
    return rows


def _run_congruence_check(ck: Mapping, model: VarietyModel, primes: list[int], log: CountLog,
                          calibrations: list[dict]) -> list[Row]:
    table = shipped_table(ck["table"])
    bad = set(ck.get("bad", ()))
    good = [p for p in primes if not model.invalid_prime(p) and p not in bad and p in table.ap]
    counts = {p: log.count(model, p) for p in good}
    name = ck.get("name", model.label)
    if "sign" in ck:
        sign, offset, at = int(ck["sign"]), int(ck.get("offset", 1)), None
    else:
        sign, offset, at = calibrate_congruence(counts, table)
    calibrations.append({"check": name, "sign": sign, "offset": offset, "calibrated_at": at})
    rep = congruence_match(counts, table, sign, offset)
    rows = []
    h = model.content_hash()
    for p in primes:
        if p not in counts:
            rows.append(Row(name, model.label, p, "skipped:bad-prime"))
            continue
        status = "pass" if p in rep.passes else "fail"
        rows.append(Row(name, model.label, p, status, counts[p], h, None, table[p], None,
                        f"count = {offset} {'+' if sign > 0 else '-'} a_p mod p"))
    return rows


def run_pipeline(cfg: PipelineConfig, cache: CountCache | None = None, registry: FixtureRegistry | None = None,
                 threads: int = 1, extended: bool = False, use_tables: bool = True,
                 build: ChainBuild | None = None) -> Report:
    registry = registry or FixtureRegistry.default()
    log = CountLog(cache if cache is not None else CountCache(default_cache_path()), threads)
    report = Report(cfg.name)
    report.provenance = {"fixtures": {}, "note": "fixture substitutions are asserted, not derived; "
                                                 "their relations are verified numerically"}
    if cfg.graph is not None or cfg.steps:
        if build is None:
            build = build_chain(cfg, registry)
        report.assertions = build.assertions
        if build.chain.steps:
            v = cfg.verify or {}
            primes = v.get("primes", [3, 5])
            rep = verify_chain(build.chain, primes, int(float(v.get("budget", 1e8))), log.cache, threads)
            log.absorb_chain(build.chain, rep)
            report.chain = {**build.chain.to_json(), **rep.to_json(), "intermediate_vars": build.intermediate_vars}
            req = v.get("require_dimension")
            if req is not None:
                # every step whose input lives in P^n with n <= req must actually be checked
                missing = [c.__dict__ for c in rep.checks if c.status.startswith("skipped:budget")
                           and build.chain.steps[c.step].input_model.ambient.dimension <= req]
                report.chain["unchecked_required"] = missing
                if missing:
                    report.chain["ok"] = False
    for st in cfg.steps:
        if "fixture" in st:
            report.provenance["fixtures"][st["fixture"]] = registry.provenance(st["fixture"])
    if cfg.c2_oracle is not None:
        if build is None or build.five_invariant is None:
            raise ConfigError("the c2 oracle needs a graph and a five-invariant")
        g = load_graph_fixture(cfg.graph["fixture"])
        if cfg.graph.get("delete_vertex") is not None:
            g = delete_vertex(g, cfg.graph["delete_vertex"])
        E = edges_by_label(g, cfg.five_invariant)
        rest = [i for i in range(g.edge_count) if i not in E]
        f5 = build.five_invariant.select_vars(rest)
        for p in cfg.c2_oracle.get("primes", [3, 5, 7, 11, 13]):
            a = log.affine(f5, p)
            c2 = c2_bruteforce(g, p, threads=threads)
            log.used[(poly_hash(c2_poly(g)), p, "affine")] = c2.affine_count
            log.cache.put(CountRecord(poly_hash(c2_poly(g)), p, c2.affine_count, "affine"))
            report.oracle.append({"p": p, "affine_count": a, "c2": c2.value, "ok": (a + c2.value) % p == 0})
    if cfg.links:
        report.links = verify_fixture_links(cfg, registry, log=log).to_json()
    for ck in cfg.checks:
        model = build.terminal if ck["model"] == "terminal" else registry.model(ck["model"])
        if ck["model"] != "terminal":
            report.provenance["fixtures"][ck["model"]] = registry.provenance(ck["model"])
        window = ck.get("extended") if extended and ck.get("extended") else ck.get("primes", [5, 50])
        primes = _prime_window(window)
        if ck["type"] == "formula":
            report.rows += _run_formula_check(ck, model, primes, log, use_tables)
        else:
            report.rows += _run_congruence_check(ck, model, primes, log, report.calibrations)
    if cfg.ledger is not None:
        total = ledger_total(cfg.ledger["events"])
        exp = CountFormula.from_json(cfg.ledger["expected"]) if "expected" in cfg.ledger else None
        report.ledger = {"total": str(total), "expected": None if exp is None else str(exp),
                         "ok": exp is None or total == exp, "formula": total.to_json()}
    report.counts = [{"model_hash": h, "p": p, "mode": m, "count": n}
                     for (h, p, m), n in sorted(log.used.items(), key=lambda kv: (kv[0][0], kv[0][1]))]
    report.fresh_counts = log.fresh
    return report


def c2_poly(g) -> MultiPoly:
    from .graphs import kirchhoff_polynomial
    return kirchhoff_polynomial(g)


def shipped_configs() -> list[str]:
    root = resources.files("phi4forms") / "data" / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


__all__ = [
    "ChainBuild", "ConfigError", "CountLog", "EVENT_KINDS", "Fixture", "FixtureError", "FixtureRegistry",
    "LinkFailure", "LinkResult", "LinksReport", "PipelineConfig", "PipelineError", "Report", "Row",
    "StepFailure", "build_chain", "check_link", "db_cover", "default_cache_path", "event_formula",
    "ledger_total", "poly_hash", "run_pipeline", "shipped_configs", "verify_fixture_links", "weil_bound",
]

"""Reductions that preserve point counts mod p up to sign, and the bookkeeping around them.

A projective variety is tracked together with its ambient coordinates, because a
variable that no longer occurs still contributes a cone direction.  Each step
records the sign (-1)^(dim W - dim V) of the congruence

    [V]_p - 1 = sign * ([W]_p - 1)  (mod p).
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

import numpy as np
import sympy

from .models import MultiProj, Proj, VarietyModel, WeightedProj
from .multipoly import (DegreeTooHigh, MultiPoly, NotDivisible, default_names, disc_wrt, exact_div,
                        poly_sqrt)
from .pointcount import cached_count, evaluation_cost
from .pointcount.cache import CountCache
from .pointcount.engine import check_prime, evaluate_at

STEP_KINDS = ("linear", "resultant", "subspace", "to_weighted_cover", "complete_square",
              "to_hypersurface", "fixture_substitution")


class ReductionError(ValueError):
    pass


class DegreeNotOne(ReductionError):
    pass


class StepNotApplicable(ReductionError):
    def __init__(self, variable: str, poly: MultiPoly, reason: str):
        super().__init__(f"cannot reduce {variable}: {reason}")
        self.variable = variable
        self.poly = poly


class MembershipFailure(ReductionError):
    pass


class HintDoesNotDivide(ReductionError):
    pass


class WrongDegree(ReductionError):
    pass


@dataclass
class SimilarityStep:
    kind: str
    input_label: str
    output_label: str
    sign_flip: int
    verified_primes: set[int] = field(default_factory=set)
    input_model: VarietyModel | None = None
    output_model: VarietyModel | None = None
    detail: dict = field(default_factory=dict)
    min_prime: int = 3

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise ReductionError(f"unknown step kind {self.kind!r}")
        if self.sign_flip not in (1, -1):
            raise ReductionError("sign_flip must be +1 or -1")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "input": self.input_label,
            "output": self.output_label,
            "sign_flip": self.sign_flip,
            "verified_primes": sorted(self.verified_primes),
            "detail": self.detail,
        }


@dataclass
class SimilarityChain:
    steps: list[SimilarityStep] = field(default_factory=list)
    ambient: tuple[int, ...] = ()

    @property
    def composite_sign(self) -> int:
        s = 1
        for st in self.steps:
            s *= st.sign_flip
        return s

    def append(self, step: SimilarityStep) -> None:
        self.steps.append(step)

    def extend(self, other: "SimilarityChain") -> None:
        self.steps.extend(other.steps)
        if other.ambient:
            self.ambient = other.ambient

    def __len__(self) -> int:
        return len(self.steps)

    def to_json(self) -> dict:
        return {"composite_sign": self.composite_sign, "steps": [s.to_json() for s in self.steps]}


def dimension_sign(v: VarietyModel, w: VarietyModel) -> int:
    return -1 if (w.dimension - v.dimension) % 2 else 1


def _names(arity: int, names: Sequence[str] | None) -> tuple[str, ...]:
    return tuple(names) if names is not None else default_names(arity)


def hypersurface_on(f: MultiPoly, ambient: Sequence[int], label: str = "",
                    names: Sequence[str] | None = None) -> VarietyModel:
    """The hypersurface f = 0 in the projective space on the given coordinates."""
    ambient = list(ambient)
    nm = _names(f.arity, names)
    return VarietyModel(Proj(len(ambient) - 1), (f.select_vars(ambient),), label,
                        tuple(nm[i] for i in ambient))


def _ambient(f: MultiPoly, ambient: Sequence[int] | None) -> tuple[int, ...]:
    if ambient is None:
        return tuple(range(f.arity))
    amb = tuple(ambient)
    missing = set(f.variables()) - set(amb)
    if missing:
        raise ReductionError(f"variables {sorted(missing)} occur outside the declared ambient space")
    return amb


def linear_reduce(f: MultiPoly, v: int, ambient: Sequence[int] | None = None,
                  names: Sequence[str] | None = None, label: str = "f") -> tuple[MultiPoly, SimilarityStep]:
    """Coefficient of x_v in f = a x_v + b; the variable leaves the ambient space."""
    amb = _ambient(f, ambient)
    if f.degree_in(v) != 1:
        raise DegreeNotOne(f"degree of {_names(f.arity, names)[v]} is {f.degree_in(v)}, not 1")
    out = f.coeffs_in_var(v)[1]
    new_amb = tuple(i for i in amb if i != v)
    nm = _names(f.arity, names)
    out_label = f"{label}/lin[{nm[v]}]"
    V = hypersurface_on(f, amb, label, names)
    W = hypersurface_on(out, new_amb, out_label, names)
    step = SimilarityStep("linear", label, out_label, dimension_sign(V, W), input_model=V,
                          output_model=W, detail={"variable": nm[v], "ambient": [nm[i] for i in new_amb]})
    return out, step


def resultant_reduce(f: MultiPoly, v: int, ambient: Sequence[int] | None = None,
                     names: Sequence[str] | None = None,
                     label: str = "f") -> tuple[MultiPoly, SimilarityStep] | None:
    """Square root of the x_v-discriminant, or None when it is not a square.

    When f = (a x_v + b)(c x_v + d) the discriminant is (ad - bc)^2, so the root is
    the resultant of the two factors up to sign; the factors are never formed.
    """
    amb = _ambient(f, ambient)
    if f.degree_in(v) != 2:
        raise ReductionError(f"resultant reduction needs degree 2 in x{v}")
    root = poly_sqrt(disc_wrt(f, v))
    if root is None:
        return None
    new_amb = tuple(i for i in amb if i != v)
    nm = _names(f.arity, names)
    out_label = f"{label}/res[{nm[v]}]"
    V = hypersurface_on(f, amb, label, names)
    W = hypersurface_on(root, new_amb, out_label, names)
    step = SimilarityStep("resultant", label, out_label, dimension_sign(V, W), input_model=V,
                          output_model=W, detail={"variable": nm[v], "ambient": [nm[i] for i in new_amb]})
    return root, step


def denominator_chain(f: MultiPoly, order: Iterable[int], ambient: Sequence[int] | None = None,
                      names: Sequence[str] | None = None,
                      label: str = "f") -> tuple[MultiPoly, SimilarityChain]:
    """Apply linear or resultant reduction to each variable of ``order`` in turn."""
    amb = _ambient(f, ambient)
    chain = SimilarityChain(ambient=amb)
    nm = _names(f.arity, names)
    for v in order:
        d = f.degree_in(v)
        if d == 1:
            f, step = linear_reduce(f, v, amb, names, label)
        elif d == 2:
            res = resultant_reduce(f, v, amb, names, label)
            if res is None:
                raise StepNotApplicable(nm[v], f, "discriminant is not a perfect square")
            f, step = res
        else:
            raise StepNotApplicable(nm[v], f, f"degree {d} is not 1 or 2")
        chain.append(step)
        amb = tuple(i for i in amb if i != v)
        label = step.output_label
    chain.ambient = amb
    return f, chain


def _degree_in_set(exps: Sequence[int], vars: Sequence[int]) -> int:
    return sum(exps[i] for i in vars)


def subspace_reduce(f: MultiPoly, vars: Sequence[int], ambient: Sequence[int] | None = None,
                    names: Sequence[str] | None = None,
                    label: str = "f") -> tuple[VarietyModel, SimilarityStep]:
    """Exceptional equation of the blowup along the linear space {x_i = 0 : i in vars}.

    Requires f in the k-th power of the ideal (vars), k = len(vars).  The terms of
    degree exactly k in vars, with x_{i_j} renamed y_j, give a hypersurface of
    bidegree (n - k + 1, k) in P^(n-k) x P^(k-1).
    """
    amb = _ambient(f, ambient)
    vars = list(vars)
    k = len(vars)
    if not set(vars) <= set(amb) or len(set(vars)) != k or k < 1:
        raise ReductionError("subspace variables must be distinct ambient coordinates")
    if not f.is_homogeneous(len(amb)):
        raise ReductionError(f"expected a form of degree {len(amb)} on P^{len(amb) - 1}")
    low = [e for e in f.exponents() if _degree_in_set(e, vars) < k]
    if low:
        raise MembershipFailure(f"{len(low)} monomials have degree < {k} in the chosen variables, "
                                f"e.g. {low[0]}")
    others = [i for i in amb if i not in vars]
    if not others:
        raise MembershipFailure("no coordinates remain outside the chosen variables")
    nm = _names(f.arity, names)
    new_vars = others + vars
    index = {v: j for j, v in enumerate(new_vars)}
    terms = []
    for e, c in f.items():
        if _degree_in_set(e, vars) == k:
            ne = [0] * len(new_vars)
            for i, x in enumerate(e):
                if x:
                    ne[index[i]] = x
            terms.append((ne, c))
    if not terms:
        raise MembershipFailure(f"f lies in the {k + 1}-th power of the ideal; degenerate")
    eq = MultiPoly.from_terms(len(new_vars), terms)
    if all(sum(e[:len(others)]) == 0 for e in eq.exponents()):
        raise MembershipFailure("exceptional equation does not involve the base coordinates")
    out_label = f"{label}/sub[{','.join(nm[v] for v in vars)}]"
    W = VarietyModel(MultiProj((len(others) - 1, k - 1)), (eq,), out_label,
                     tuple(nm[i] for i in others) + tuple(f"y_{nm[v]}" for v in vars))
    V = hypersurface_on(f, amb, label, names)
    step = SimilarityStep("subspace", label, out_label, dimension_sign(V, W), input_model=V,
                          output_model=W, detail={"variables": [nm[v] for v in vars], "k": k})
    return W, step


def pair_coefficients(f: MultiPoly, a: int, b: int) -> tuple[MultiPoly, MultiPoly, MultiPoly]:
    """c0, c1, c2 with the (a, b)-degree-2 part of f equal to c0 x_a^2 + c1 x_a x_b + c2 x_b^2."""
    cs = {(2, 0): [], (1, 1): [], (0, 2): []}
    for e, c in f.items():
        key = (e[a], e[b])
        if key in cs:
            ne = list(e)
            ne[a] = ne[b] = 0
            cs[key].append((ne, c))
    return tuple(MultiPoly.from_terms(f.arity, cs[k]) for k in ((2, 0), (1, 1), (0, 2)))


def normal_to_weighted_cover(f: MultiPoly, a: int, b: int, ambient: Sequence[int] | None = None,
                             names: Sequence[str] | None = None,
                             label: str = "f") -> tuple[VarietyModel, SimilarityStep]:
    """Normal reduction along x_a = x_b = 0, read as t^2 = c1^2 - 4 c0 c2 (valid for p > 2)."""
    amb = _ambient(f, ambient)
    if a == b or a not in amb or b not in amb:
        raise ReductionError("need two distinct ambient coordinates")
    low = [e for e in f.exponents() if e[a] + e[b] < 2]
    if low:
        raise MembershipFailure(f"{len(low)} monomials have degree < 2 in the pair, e.g. {low[0]}")
    c0, c1, c2 = pair_coefficients(f, a, b)
    D = c1 * c1 - c0 * c2 * 4
    base = [i for i in amb if i not in (a, b)]
    m = len(base)
    if D.is_zero():
        raise MembershipFailure("discriminant vanishes identically")
    nm = _names(f.arity, names)
    out_label = f"{label}/normal[{nm[a]},{nm[b]}]"
    W = VarietyModel(WeightedProj(m, m), (D.select_vars(base),), out_label, tuple(nm[i] for i in base))
    V = hypersurface_on(f, amb, label, names)
    step = SimilarityStep("to_weighted_cover", label, out_label, dimension_sign(V, W), input_model=V,
                          output_model=W, detail={"pair": [nm[a], nm[b]], "base": [nm[i] for i in base]})
    return W, step


def to_hypersurface(model: VarietyModel, g_hint: MultiPoly,
                    label: str | None = None) -> tuple[VarietyModel, SimilarityStep]:
    """t^2 = g h  ->  v0^2 g - h = 0 in the projective space with one more coordinate."""
    if not isinstance(model.ambient, WeightedProj):
        raise ReductionError("expected a weighted double cover")
    D = model.equations[0]
    m = model.ambient.units
    if model.ambient.weight != m:
        raise WrongDegree(f"need weight equal to the number of base coordinates ({m}), got {model.ambient.weight}")
    if g_hint.arity != D.arity:
        raise WrongDegree("hint lives in a different ring")
    if g_hint.total_degree() != m - 1 or not g_hint.is_homogeneous():
        raise WrongDegree(f"hint must be a form of degree {m - 1}, got {g_hint.total_degree()}")
    try:
        h = exact_div(D, g_hint)
    except NotDivisible as exc:
        raise HintDoesNotDivide(str(exc)) from exc
    v0 = MultiPoly.var(m + 1, 0)
    out = v0 * v0 * g_hint.extend(m + 1, 1) - h.extend(m + 1, 1)
    names = ("v0",) + tuple(model.names or default_names(m))
    out_label = label or f"{model.label}/hyp"
    W = VarietyModel(Proj(m), (out,), out_label, names)
    step = SimilarityStep("to_hypersurface", model.label, out_label, dimension_sign(model, W),
                          input_model=model, output_model=W,
                          detail={"g_degree": g_hint.total_degree(), "h_degree": h.total_degree()})
    return W, step


def fixture_step(V: VarietyModel, W: VarietyModel, relation: str = "congruence",
                 detail: dict | None = None) -> SimilarityStep:
    """A link between two models whose relation is checked numerically, not derived."""
    return SimilarityStep("fixture_substitution", V.label, W.label, dimension_sign(V, W),
                          input_model=V, output_model=W, detail={"relation": relation, **(detail or {})})


# ---------------------------------------------------------------------- splitting

_PRIME = 32749


def _linear_candidates(n: int, bound: int, max_support: int) -> np.ndarray:
    rows = []
    for size in range(1, min(n, max_support) + 1):
        for supp in itertools.combinations(range(n), size):
            for vals in itertools.product(range(1, bound + 1), *[[c for c in range(-bound, bound + 1) if c]
                                                               for _ in range(size - 1)]):
                g = 0
                for x in vals:
                    g = gcd(g, x)
                if g != 1:
                    continue
                row = [0] * n
                for i, x in zip(supp, vals):
                    row[i] = x
                rows.append(row)
    rows.sort(key=lambda r: (sum(1 for x in r if x), sum(abs(x) for x in r),
                             [-abs(x) for x in r], [-x for x in r]))
    return np.array(rows, dtype=np.int64).reshape(len(rows), n)


def linear_factors(D: MultiPoly, bound: int = 8, max_support: int | None = None) -> list[tuple[MultiPoly, int]]:
    """Linear forms with coefficients in [-bound, bound] dividing D, with multiplicity."""
    occ = list(D.variables())
    n = len(occ)
    if n == 0:
        return []
    if max_support is None:
        max_support = n if n <= 4 else 3
    cands = _linear_candidates(n, bound, max_support)
    res = {tuple(e[i] for i in occ): c for e, c in D.reduce_mod_p(_PRIME).items()}
    rng = np.random.default_rng(12345)
    keep = np.ones(cands.shape[0], dtype=bool)
    pivots = np.argmax(cands != 0, axis=1)
    inv = np.array([pow(int(c), -1, _PRIME) for c in cands[np.arange(len(cands)), pivots] % _PRIME],
                   dtype=np.int64)
    for _ in range(3):
        pts = rng.integers(0, _PRIME, size=cands.shape, dtype=np.int64)
        pts[np.arange(len(cands)), pivots] = 0
        s = (cands * pts % _PRIME).sum(axis=1) % _PRIME
        pts[np.arange(len(cands)), pivots] = (-s * inv) % _PRIME
        keep &= evaluate_at(res, pts, _PRIME) == 0
    found = []
    for row in cands[keep]:
        ell = MultiPoly.from_terms(D.arity, [(_unit(D.arity, occ[j]), int(row[j]))
                                             for j in range(n) if row[j]])
        mult, rest = 0, D
        while True:
            try:
                rest = exact_div(rest, ell)
            except NotDivisible:
                break
            mult += 1
        if mult:
            found.append((ell, mult))
    return found


def _unit(arity: int, i: int) -> list[int]:
    e = [0] * arity
    e[i] = 1
    return e


def auto_split_search(D: MultiPoly, target_degree: int, bound: int = 8) -> MultiPoly | None:
    """A product of linear factors of D of the given degree (distinct factors preferred)."""
    if not D.is_homogeneous():
        raise ReductionError("expected a homogeneous polynomial")
    if target_degree < 1:
        return None
    facs = linear_factors(D, bound)
    pool = [f for f, _ in facs]
    for combo in itertools.combinations(range(len(pool)), target_degree):
        return _product([pool[i] for i in combo], D.arity)
    expanded = [i for i, (_, m) in enumerate(facs) for _ in range(m)]
    for combo in itertools.combinations(expanded, target_degree):
        return _product([pool[i] for i in combo], D.arity)
    return None


def _product(fs: Sequence[MultiPoly], arity: int) -> MultiPoly:
    out = MultiPoly.constant(arity, 1)
    for f in fs:
        out = out * f
    return out


# ---------------------------------------------------------------------- matching

@dataclass(frozen=True)
class ScalingMatch:
    """g(x) = factor * f(scales * x permuted): variable i of f is variable perm[i] of g."""

    perm: tuple[int, ...]
    scales: tuple[Fraction, ...]
    factor: Fraction


def _support(f: MultiPoly) -> frozenset:
    return frozenset(f.exponents())


def match_up_to_scaling(f: MultiPoly, g: MultiPoly, permute: bool = True) -> ScalingMatch | None:
    """Find a permutation and diagonal rescaling of the variables of f, and an overall
    constant, turning f into g exactly.  Returns None when none exists over Q."""
    if f.arity != g.arity or len(f) != len(g) or f.total_degree() != g.total_degree():
        return None
    n = f.arity
    gsupp = _support(g)
    perms = itertools.permutations(range(n)) if permute else [tuple(range(n))]
    for perm in perms:
        fp = f.permute(perm)
        if _support(fp) != gsupp:
            continue
        sol = _solve_scaling(fp, g)
        if sol is not None:
            scales_g, factor = sol
            # scales refer to g's variables; map back to f's variable order
            scales = tuple(scales_g[perm[i]] for i in range(n))
            return ScalingMatch(tuple(perm), scales, factor)
    return None


def _solve_scaling(f: MultiPoly, g: MultiPoly) -> tuple[tuple[Fraction, ...], Fraction] | None:
    """lambda, c with f(lambda * x) = c * g(x), f and g sharing their support."""
    n = f.arity
    items = f.items()
    e0, c0 = items[0]
    ratios = []
    rows = []
    for e, c in items[1:]:
        r = (g.coeff(e) / c) / (g.coeff(e0) / c0)
        ratios.append(r)
        rows.append([x - y for x, y in zip(e, e0)])
    primes = set()
    for r in ratios:
        for part in (abs(r.numerator), r.denominator):
            primes.update(sympy.factorint(part).keys())
    A = sympy.Matrix(rows) if rows else sympy.zeros(0, n)
    exps = {}
    for q in sorted(primes):
        b = sympy.Matrix([_valuation(r, q) for r in ratios])
        try:
            sol, params = A.gauss_jordan_solve(b)
        except ValueError:
            return None
        sol = sol.subs({t: 0 for t in params})
        if any(not x.is_integer for x in sol):
            return None
        exps[q] = [int(x) for x in sol]
    signs = [1 if r < 0 else 0 for r in ratios]
    sign_vec = None
    for bits in itertools.product((0, 1), repeat=n):
        if all(sum(a * s for a, s in zip(row, bits)) % 2 == sv for row, sv in zip(rows, signs)):
            sign_vec = bits
            break
    if sign_vec is None:
        return None
    lam = []
    for i in range(n):
        v = Fraction(-1 if sign_vec[i] else 1)
        for q, ex in exps.items():
            v *= Fraction(q) ** ex[i]
        lam.append(v)
    scaled = f.substitute([MultiPoly.var(n, i) * lam[i] for i in range(n)])
    c = scaled.coeff(e0) / g.coeff(e0)
    if scaled != g * c:
        return None
    return tuple(lam), c


def _valuation(r: Fraction, q: int) -> int:
    v = 0
    num, den = abs(r.numerator), r.denominator
    while num % q == 0:
        num //= q
        v += 1
    while den % q == 0:
        den //= q
        v -= 1
    return v


# ---------------------------------------------------------------------- verification

@dataclass
class StepCheck:
    step: int
    kind: str
    p: int
    status: str
    lhs: int | None = None
    rhs: int | None = None

    def to_json(self) -> dict:
        return self.__dict__.copy()


@dataclass
class ChainReport:
    checks: list[StepCheck]
    composite: list[StepCheck]

    @property
    def failures(self) -> list[StepCheck]:
        return [c for c in self.checks + self.composite if c.status == "fail"]

    @property
    def skipped(self) -> list[StepCheck]:
        return [c for c in self.checks + self.composite if c.status.startswith("skipped")]

    @property
    def ok(self) -> bool:
        return not self.failures

    def verified_steps(self) -> list[int]:
        return sorted({c.step for c in self.checks if c.status == "pass"})

    def to_json(self) -> dict:
        return {"ok": self.ok, "checks": [c.to_json() for c in self.checks],
                "composite": [c.to_json() for c in self.composite]}


def _check_pair(V: VarietyModel, W: VarietyModel, sign: int, p: int, budget: int,
                cache: CountCache | None, threads: int) -> tuple[str, int | None, int | None]:
    if V.invalid_prime(p) or W.invalid_prime(p):
        return "skipped:invalid-prime", None, None
    if max(evaluation_cost(V, p), evaluation_cost(W, p)) > budget:
        return "skipped:budget", None, None
    nv, _ = cached_count(V, p, cache, threads)
    nw, _ = cached_count(W, p, cache, threads)
    ok = ((nv - 1) - sign * (nw - 1)) % p == 0
    return ("pass" if ok else "fail"), nv, nw


def verify_chain(chain: SimilarityChain, primes: Iterable[int], budget: int = 10 ** 8,
                 cache: CountCache | None = None, threads: int = 1) -> ChainReport:
    """Check the signed congruence for each step and for the chain end to end.

    ``budget`` bounds points times terms for each model; steps over it are reported as
    skipped, never as passes.
    """
    primes = list(primes)
    for p in primes:
        check_prime(p)
    jobs = []
    for i, st in enumerate(chain.steps):
        for p in primes:
            if p < st.min_prime:
                jobs.append((i, st, p, None))
            else:
                jobs.append((i, st, p, st))

    def run(job):
        i, st, p, live = job
        if live is None or st.input_model is None or st.output_model is None:
            reason = "skipped:invalid-prime" if live is None else "skipped:no-model"
            return StepCheck(i, st.kind, p, reason)
        status, a, b = _check_pair(st.input_model, st.output_model, st.sign_flip, p, budget, cache, 1)
        return StepCheck(i, st.kind, p, status, a, b)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            checks = list(pool.map(run, jobs))
    else:
        checks = [run(j) for j in jobs]
    for c in checks:
        if c.status == "pass":
            chain.steps[c.step].verified_primes.add(c.p)
    composite = []
    if chain.steps and chain.steps[0].input_model is not None and chain.steps[-1].output_model is not None:
        V, W = chain.steps[0].input_model, chain.steps[-1].output_model
        lo = max(st.min_prime for st in chain.steps)
        for p in primes:
            if p < lo:
                composite.append(StepCheck(-1, "composite", p, "skipped:invalid-prime"))
                continue
            status, a, b = _check_pair(V, W, chain.composite_sign, p, budget, cache, threads)
            composite.append(StepCheck(-1, "composite", p, status, a, b))
    return ChainReport(checks, composite)


__all__ = [
    "ChainReport", "DegreeNotOne", "DegreeTooHigh", "HintDoesNotDivide", "MembershipFailure",
    "ReductionError", "ScalingMatch", "SimilarityChain", "SimilarityStep", "StepCheck",
    "StepNotApplicable", "WrongDegree", "auto_split_search", "denominator_chain", "dimension_sign",
    "fixture_step", "hypersurface_on", "linear_factors", "linear_reduce", "match_up_to_scaling",
    "normal_to_weighted_cover", "pair_coefficients", "resultant_reduce", "subspace_reduce",
    "to_hypersurface", "verify_chain",
]

"""Hecke eigenvalue sources and closed-form point-count formulas."""

from __future__ import annotations

import json
import math
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from sympy import primerange

from .pointcount.arith import alpha_8, alpha_390, cubic_frobenius, legendre


class ModFormError(ValueError):
    pass


class NonIntegralShift(ModFormError):
    pass


class PrecisionExceeded(ModFormError):
    pass


class ParseError(ModFormError):
    pass


class BoundViolation(ModFormError):
    pass


class NetworkUnavailable(ModFormError):
    pass


class MissingAp(ModFormError):
    pass


class EmptyOverlap(ModFormError):
    pass


# ---------------------------------------------------------------------- eta quotients

@dataclass(frozen=True)
class EtaQuotient:
    """prod_d eta(d tau)^e_d."""

    factors: tuple[tuple[int, int], ...]
    name: str = ""

    def __post_init__(self):
        if not self.factors or any(d < 1 for d, _ in self.factors):
            raise ModFormError("dilations must be positive")

    @property
    def weight(self) -> Fraction:
        return Fraction(sum(e for _, e in self.factors), 2)

    @property
    def q_shift(self) -> Fraction:
        return Fraction(sum(d * e for d, e in self.factors), 24)

    @property
    def level(self) -> int:
        return math.lcm(*[d for d, _ in self.factors])


@dataclass(frozen=True)
class QSeries:
    """Coefficients a_0..a_N of a q-expansion."""

    precision: int
    coeffs: tuple[int, ...]

    def __getitem__(self, n: int) -> int:
        if n > self.precision:
            raise PrecisionExceeded(f"coefficient {n} beyond precision {self.precision}")
        return self.coeffs[n]


def pentagonal_terms(N: int) -> list[tuple[int, int]]:
    """(exponent, sign) of prod (1 - q^n) up to q^N (Euler's pentagonal number theorem)."""
    out = [(0, 1)]
    k = 1
    while True:
        g1, g2 = k * (3 * k - 1) // 2, k * (3 * k + 1) // 2
        if g1 > N:
            break
        s = -1 if k % 2 else 1
        out.append((g1, s))
        if g2 <= N:
            out.append((g2, s))
        k += 1
    return out


def euler_product(factors: Sequence[tuple[int, int]], N: int) -> list[int]:
    """Coefficients of prod_d prod_n (1 - q^(dn))^e_d up to q^N."""
    series = np.zeros(N + 1, dtype=object if any(e < 0 for _, e in factors) else np.int64)
    series[0] = 1
    for d, e in factors:
        terms = [(g * d, s) for g, s in pentagonal_terms(N // d)]
        for _ in range(abs(e)):
            if e > 0:
                out = np.zeros_like(series)
                for g, s in terms:
                    if s > 0:
                        out[g:] += series[:N + 1 - g]
                    else:
                        out[g:] -= series[:N + 1 - g]
                series = out
                if series.dtype != object and np.abs(series).max() > (1 << 52):
                    series = series.astype(object)
            else:
                # divide by the pentagonal series, whose constant term is 1
                out = series.astype(object).copy()
                for n in range(1, N + 1):
                    acc = out[n]
                    for g, s in terms[1:]:
                        if g > n:
                            break
                        acc -= s * out[n - g]
                    out[n] = acc
                series = out
    return [int(x) for x in series]


def eta_expand(q: EtaQuotient, N: int) -> QSeries:
    if N > 10 ** 5:
        raise PrecisionExceeded("precision above 10^5")
    shift = q.q_shift
    if shift.denominator != 1 or shift < 0:
        raise NonIntegralShift(f"q-shift {shift} is not a non-negative integer")
    s = int(shift)
    body = euler_product(q.factors, max(0, N - s))
    coeffs = [0] * s + body
    return QSeries(N, tuple(coeffs[:N + 1]))


def ap_from_eta(q: EtaQuotient, p: int, precision: int | None = None) -> int:
    N = p if precision is None else precision
    if p > N:
        raise PrecisionExceeded(f"p = {p} beyond precision {N}")
    return eta_expand(q, N)[p]


ETA_QUOTIENTS: dict[str, EtaQuotient] = {
    "5.4.eta": EtaQuotient(((1, 4), (5, 4)), "5.4.eta"),
    "6.4.eta": EtaQuotient(((1, 2), (2, 2), (3, 2), (6, 2)), "6.4.eta"),
    "7.3.eta": EtaQuotient(((1, 3), (7, 3)), "7.3.eta"),
    "8.3.eta": EtaQuotient(((1, 2), (2, 1), (4, 1), (8, 2)), "8.3.eta"),
    "12.3.eta": EtaQuotient(((2, 3), (6, 3)), "12.3.eta"),
}


# ---------------------------------------------------------------------- tables

def weil_bound(p: int, weight: int) -> float:
    return 2 * p ** ((weight - 1) / 2)


@dataclass
class NewformTable:
    label: str
    level: int
    weight: int
    ap: dict[int, int]
    provenance: str = "ingested"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ap = {int(p): int(a) for p, a in self.ap.items()}
        for p, a in self.ap.items():
            if abs(a) > weil_bound(p, self.weight):
                raise BoundViolation(f"{self.label}: |a_{p}| = {abs(a)} exceeds 2p^{(self.weight - 1) / 2}")

    def __getitem__(self, p: int) -> int:
        return self.ap[p]

    def primes(self) -> list[int]:
        return sorted(self.ap)

    def to_json(self) -> dict:
        return {"label": self.label, "level": self.level, "weight": self.weight,
                "ap": {str(p): str(a) for p, a in sorted(self.ap.items())},
                "provenance": self.provenance, **self.metadata}

    @classmethod
    def from_json(cls, obj: Mapping) -> "NewformTable":
        try:
            meta = {k: v for k, v in obj.items() if k not in ("label", "level", "weight", "ap", "provenance")}
            return cls(str(obj["label"]), int(obj["level"]), int(obj["weight"]),
                       {int(p): int(a) for p, a in obj["ap"].items()},
                       obj.get("provenance", "ingested"), meta)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, BoundViolation):
                raise
            raise ParseError(f"malformed newform table: {exc}") from exc


def load_newform_table(path: str | Path) -> NewformTable:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read newform table {path}: {exc}") from exc
    return NewformTable.from_json(obj)


def save_newform_table(table: NewformTable, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(table.to_json(), indent=1) + "\n")
    return path


def shipped_labels() -> list[str]:
    root = resources.files("phi4forms") / "data" / "newforms"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def shipped_table(label: str) -> NewformTable:
    if label in ETA_QUOTIENTS:
        return eta_table(ETA_QUOTIENTS[label])
    res = resources.files("phi4forms") / "data" / "newforms" / f"{label}.json"
    if not res.is_file():
        raise ParseError(f"no shipped newform table {label!r}")
    return NewformTable.from_json(json.loads(res.read_text()))


def eta_table(q: EtaQuotient, bound: int = 400) -> NewformTable:
    series = eta_expand(q, bound)
    ap = {p: series[p] for p in primerange(2, bound + 1)}
    w = q.weight
    return NewformTable(q.name or repr(q.factors), q.level, int(w), ap, "eta",
                        {"factors": [list(f) for f in q.factors]})


DEFAULT_ENDPOINT = "https://www.lmfdb.org"


def fetch_newform(label: str, dest: str | Path | None = None, endpoint: str = DEFAULT_ENDPOINT,
                  timeout: float = 20.0, bound: int = 400) -> NewformTable:
    """GET a newform by label from an LMFDB-style API and write it as a local table."""
    query = urllib.parse.urlencode({"label": label, "_format": "json",
                                    "_fields": "label,level,weight,dim,traces"})
    url = f"{endpoint.rstrip('/')}/api/mf_newforms/?{query}"
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            payload = json.loads(resp.read().decode())
    except (urllib.error.URLError, OSError, TimeoutError) as exc:
        raise NetworkUnavailable(f"cannot reach {endpoint}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"endpoint returned non-JSON: {exc}") from exc
    rows = payload.get("data") if isinstance(payload, dict) else None
    if not rows:
        raise ParseError(f"label {label!r} not found")
    row = rows[0]
    if int(row.get("dim", 1)) != 1:
        raise ParseError(f"{label} has dimension {row.get('dim')}; only rational forms are supported")
    traces = row["traces"]
    ap = {p: int(traces[p - 1]) for p in primerange(2, min(bound, len(traces)) + 1)}
    table = NewformTable(row["label"], int(row["level"]), int(row["weight"]), ap, "ingested",
                         {"source": url})
    if dest is not None:
        save_newform_table(table, Path(dest) / f"{label}.json" if Path(dest).suffix != ".json" else dest)
    return table


# ---------------------------------------------------------------------- count formulas

TWIST_KINDS = ("legendre", "alpha8", "alpha390")


@dataclass(frozen=True, order=True)
class Twist:
    kind: str
    d: int = 0

    def __post_init__(self):
        if self.kind not in TWIST_KINDS:
            raise ModFormError(f"unknown twist {self.kind!r}")

    def value(self, p: int) -> int:
        if self.kind == "legendre":
            return legendre(self.d, p)
        if self.kind == "alpha8":
            return alpha_8(p)
        return alpha_390(p)

    def __str__(self) -> str:
        if self.kind == "legendre":
            return f"({self.d}/p)"
        return "alpha8(p)" if self.kind == "alpha8" else "alpha390(p)"


def leg(d: int) -> Twist:
    return Twist("legendre", d)


@dataclass(frozen=True)
class Term:
    coeff: int
    p_power: int
    twist: Twist | None = None


@dataclass(frozen=True)
class CountFormula:
    """sum coeff * twist(p) * p^k  +  ap_sign * a_p."""

    terms: tuple[Term, ...]
    ap_sign: int = 0

    def __post_init__(self):
        if self.ap_sign not in (-1, 0, 1):
            raise ModFormError("ap_sign must be -1, 0 or 1")
        object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def poly(cls, coeffs: Mapping[int, int], ap_sign: int = 0) -> "CountFormula":
        """From {p_power: coefficient}."""
        return cls(tuple(Term(c, k) for k, c in coeffs.items()), ap_sign)

    def normalized(self) -> "CountFormula":
        acc: dict[tuple[int, Twist | None], int] = {}
        for t in self.terms:
            key = (t.p_power, t.twist)
            acc[key] = acc.get(key, 0) + t.coeff
        keys = sorted((k for k, c in acc.items() if c),
                      key=lambda k: (-k[0], k[1] is not None, k[1] or Twist("legendre", 0)))
        return CountFormula(tuple(Term(acc[k], k[0], k[1]) for k in keys), self.ap_sign)

    def __add__(self, other: "CountFormula") -> "CountFormula":
        return CountFormula(self.terms + other.terms, _combine_sign(self.ap_sign, other.ap_sign)).normalized()

    def __neg__(self) -> "CountFormula":
        return CountFormula(tuple(Term(-t.coeff, t.p_power, t.twist) for t in self.terms), -self.ap_sign)

    def __sub__(self, other: "CountFormula") -> "CountFormula":
        return self + (-other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CountFormula):
            return NotImplemented
        a, b = self.normalized(), other.normalized()
        return a.terms == b.terms and a.ap_sign == b.ap_sign

    def __hash__(self) -> int:
        n = self.normalized()
        return hash((n.terms, n.ap_sign))

    def __str__(self) -> str:
        n = self.normalized()
        parts = []
        for t in n.terms:
            mono = {0: "", 1: "p"}.get(t.p_power, f"p^{t.p_power}")
            tw = str(t.twist) if t.twist else ""
            body = "*".join(x for x in (tw, mono) if x)
            c = abs(t.coeff)
            body = (str(c) if not body else (body if c == 1 else f"{c}*{body}"))
            parts.append(("-" if t.coeff < 0 else "+", body))
        if n.ap_sign:
            parts.append(("-" if n.ap_sign < 0 else "+", "a_p"))
        if not parts:
            return "0"
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def to_json(self) -> dict:
        return {"terms": [[t.coeff, t.p_power, None if t.twist is None else [t.twist.kind, t.twist.d]]
                          for t in self.normalized().terms], "ap_sign": self.ap_sign, "text": str(self)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "CountFormula":
        terms = []
        for c, k, tw in obj["terms"]:
            terms.append(Term(int(c), int(k), None if tw is None else Twist(tw[0], int(tw[1]))))
        return cls(tuple(terms), int(obj.get("ap_sign", 0)))


def _combine_sign(a: int, b: int) -> int:
    if a and b and a + b == 0:
        return 0
    if a and b:
        raise ModFormError("cannot add two formulas that both carry the a_p slot")
    return a or b


def formula_eval(f: CountFormula, p: int, ap: int | None = None) -> int:
    total = 0
    for t in f.terms:
        v = t.coeff * p ** t.p_power
        if t.twist is not None:
            v *= t.twist.value(p)
        total += v
    if f.ap_sign:
        if ap is None:
            raise MissingAp(f"formula {f} needs a_{p}")
        total += f.ap_sign * ap
    return total


def extract_ap(count: int, f: CountFormula, p: int, weight: int = 4) -> int:
    """The a_p making ``f`` evaluate to ``count``; the Weil bound is checked, not enforced."""
    if not f.ap_sign:
        raise ModFormError("formula has no a_p slot")
    ap = (count - formula_eval(f, p, 0)) * f.ap_sign
    if abs(ap) > weil_bound(p, weight):
        raise BoundViolation(f"extracted a_{p} = {ap} violates the weight-{weight} Weil bound")
    return ap


def parity_check(ap: int, p: int, cubic: Sequence[int]) -> bool:
    """a_p odd exactly when p is inert in the cubic field (Frobenius of order 3)."""
    return (ap % 2 == 1) == (cubic_frobenius(cubic, p) == "inert3")


@dataclass
class CongruenceReport:
    sign: int
    offset: int
    passes: list[int]
    failures: list[int]
    skipped: list[int]

    @property
    def ok(self) -> bool:
        return not self.failures and bool(self.passes)

    def to_json(self) -> dict:
        return self.__dict__ | {"ok": self.ok}


def congruence_match(counts: Mapping[int, int], table: NewformTable, sign: int, offset: int,
                     bad: Iterable[int] = ()) -> CongruenceReport:
    """Check count = offset + sign * a_p (mod p) prime by prime."""
    bad = set(bad)
    common = sorted(set(counts) & set(table.ap))
    if not common:
        raise EmptyOverlap("no prime has both a count and a table entry")
    passes, failures, skipped = [], [], []
    for p in common:
        if p in bad:
            skipped.append(p)
        elif (counts[p] - offset - sign * table[p]) % p == 0:
            passes.append(p)
        else:
            failures.append(p)
    return CongruenceReport(sign, offset, passes, failures, skipped)


def calibrate_congruence(counts: Mapping[int, int], table: NewformTable,
                         bad: Iterable[int] = ()) -> tuple[int, int, int]:
    """(sign, offset, prime) fixed at the smallest good prime where exactly one choice fits."""
    bad = set(bad)
    for p in sorted(set(counts) & set(table.ap)):
        if p in bad:
            continue
        fits = [(s, o) for s in (1, -1) for o in (0, 1) if (counts[p] - o - s * table[p]) % p == 0]
        if len(fits) == 1:
            return fits[0][0], fits[0][1], p
        if not fits:
            raise ModFormError(f"no sign/offset fits at p = {p}")
    raise ModFormError("no prime determines the sign and offset")


__all__ = [
    "BoundViolation", "CongruenceReport", "CountFormula", "ETA_QUOTIENTS", "EmptyOverlap", "EtaQuotient",
    "MissingAp", "NetworkUnavailable", "NewformTable", "NonIntegralShift", "ParseError", "PrecisionExceeded",
    "QSeries", "Term", "Twist", "ap_from_eta", "calibrate_congruence", "congruence_match", "eta_expand",
    "eta_table", "euler_product", "extract_ap", "fetch_newform", "formula_eval", "leg", "load_newform_table",
    "parity_check", "pentagonal_terms", "save_newform_table", "shipped_labels", "shipped_table", "weil_bound",
]

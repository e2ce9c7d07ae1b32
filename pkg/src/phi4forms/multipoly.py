"""Sparse multivariate polynomials with exact rational coefficients.

Monomials are packed into Python integers, eight bits per variable, with
variable 0 in the most significant field.  Integer comparison of packed
monomials is therefore lexicographic order with x0 > x1 > ... and monomial
multiplication is integer addition.

Coefficients are stored as integers over one positive global denominator,
kept content-normalized.
"""

from __future__ import annotations

import ast
import heapq
import json
from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_ARITY = 32
MAX_EXPONENT = 255
_BITS = 8
_MASK = (1 << _BITS) - 1
_NUMPY_MUL_THRESHOLD = 40_000
_CHUNK_PAIRS = 1 << 22
_VARS_PER_WORD = 7


class PolyError(ValueError):
    pass


class ArityMismatch(PolyError):
    pass


class NotDivisible(PolyError):
    pass


class DegreeTooHigh(PolyError):
    pass


class DenominatorNotInvertible(PolyError):
    """Raised when reducing modulo a prime dividing the denominator."""

    def __init__(self, p: int, den: int):
        super().__init__(f"denominator {den} is not invertible modulo {p}")
        self.p = p
        self.den = den


def pack(exps: Sequence[int]) -> int:
    m = 0
    for e in exps:
        if e < 0 or e > MAX_EXPONENT:
            raise PolyError(f"exponent {e} out of range")
        m = (m << _BITS) | e
    return m


def unpack(m: int, arity: int) -> tuple[int, ...]:
    out = [0] * arity
    for i in range(arity - 1, -1, -1):
        out[i] = m & _MASK
        m >>= _BITS
    return tuple(out)


def _lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


def default_names(arity: int) -> tuple[str, ...]:
    return tuple(f"x{i}" for i in range(arity))


class MultiPoly:
    """Immutable polynomial in ``arity`` variables over Q."""

    __slots__ = ("arity", "terms", "den", "_hash")

    def __init__(self, arity: int, terms: Mapping[int, int] | None = None, den: int = 1,
                 *, _normalized: bool = False):
        if not 0 <= arity <= MAX_ARITY:
            raise PolyError(f"arity {arity} out of range")
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        self.arity = arity
        if _normalized:
            self.terms = dict(terms or {})
            self.den = den
        else:
            t = {m: c for m, c in (terms or {}).items() if c}
            if den < 0:
                den = -den
                t = {m: -c for m, c in t.items()}
            g = den
            for c in t.values():
                g = gcd(g, c)
                if g == 1:
                    break
            if g > 1:
                t = {m: c // g for m, c in t.items()}
                den //= g
            if not t:
                den = 1
            self.terms = t
            self.den = den
        self._hash = None

    # ------------------------------------------------------------------ builders
    @classmethod
    def zero(cls, arity: int) -> "MultiPoly":
        return cls(arity, {}, 1, _normalized=True)

    @classmethod
    def constant(cls, arity: int, c: int | Fraction) -> "MultiPoly":
        c = Fraction(c)
        return cls(arity, {0: c.numerator}, c.denominator)

    @classmethod
    def var(cls, arity: int, i: int) -> "MultiPoly":
        if not 0 <= i < arity:
            raise PolyError(f"variable index {i} out of range for arity {arity}")
        e = [0] * arity
        e[i] = 1
        return cls(arity, {pack(e): 1}, 1, _normalized=True)

    @classmethod
    def gens(cls, arity: int) -> list["MultiPoly"]:
        return [cls.var(arity, i) for i in range(arity)]

    @classmethod
    def from_terms(cls, arity: int, items: Iterable[tuple[Sequence[int], int | Fraction]]) -> "MultiPoly":
        acc: dict[int, Fraction] = {}
        for exps, c in items:
            if len(exps) != arity:
                raise PolyError("exponent vector length differs from arity")
            m = pack(exps)
            acc[m] = acc.get(m, Fraction(0)) + Fraction(c)
        return cls._from_fractions(arity, acc)

    @classmethod
    def _from_fractions(cls, arity: int, acc: Mapping[int, Fraction]) -> "MultiPoly":
        den = 1
        for c in acc.values():
            den = _lcm(den, c.denominator)
        terms = {m: (c.numerator * (den // c.denominator)) for m, c in acc.items() if c}
        return cls(arity, terms, den)

    # ------------------------------------------------------------------ basics
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = MultiPoly.constant(self.arity, other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.arity == other.arity and self.den == other.den and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.arity, self.den, frozenset(self.terms.items())))
        return self._hash

    def coeff(self, exps: Sequence[int]) -> Fraction:
        return Fraction(self.terms.get(pack(exps), 0), self.den)

    def items(self) -> list[tuple[tuple[int, ...], Fraction]]:
        """(exponent vector, coefficient) pairs in decreasing lex order."""
        return [(unpack(m, self.arity), Fraction(c, self.den))
                for m, c in sorted(self.terms.items(), reverse=True)]

    def exponents(self) -> list[tuple[int, ...]]:
        return [unpack(m, self.arity) for m in sorted(self.terms, reverse=True)]

    def leading(self) -> tuple[int, Fraction]:
        m = max(self.terms)
        return m, Fraction(self.terms[m], self.den)

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and 0 in self.terms)

    def constant_value(self) -> Fraction:
        return Fraction(self.terms.get(0, 0), self.den)

    def total_degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(unpack(m, self.arity)) for m in self.terms)

    def degrees(self) -> tuple[int, ...]:
        """Maximum exponent of each variable."""
        out = [0] * self.arity
        for m in self.terms:
            for i, e in enumerate(unpack(m, self.arity)):
                if e > out[i]:
                    out[i] = e
        return tuple(out)

    def degree_in(self, v: int) -> int:
        if not self.terms:
            return -1
        shift = _BITS * (self.arity - 1 - v)
        return max((m >> shift) & _MASK for m in self.terms)

    def variables(self) -> tuple[int, ...]:
        """Indices of variables that actually occur."""
        return tuple(i for i, d in enumerate(self.degrees()) if d > 0)

    def is_homogeneous(self, degree: int | None = None) -> bool:
        if not self.terms:
            return True
        ds = {sum(unpack(m, self.arity)) for m in self.terms}
        if len(ds) != 1:
            return False
        return degree is None or ds.pop() == degree

    def is_multihomogeneous(self, blocks: Sequence[Sequence[int]], degrees: Sequence[int]) -> bool:
        for m in self.terms:
            e = unpack(m, self.arity)
            for block, d in zip(blocks, degrees):
                if sum(e[i] for i in block) != d:
                    return False
        return True

    def is_multilinear(self) -> bool:
        return all(d <= 1 for d in self.degrees())

    # ------------------------------------------------------------------ arithmetic
    def _check(self, other: "MultiPoly") -> None:
        if self.arity != other.arity:
            raise ArityMismatch(f"arity {self.arity} vs {other.arity}")

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return MultiPoly.constant(self.arity, other)
        raise TypeError(f"cannot combine MultiPoly with {type(other).__name__}")

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.arity, {m: -c for m, c in self.terms.items()}, self.den, _normalized=True)

    def _addsub(self, other, sign: int) -> "MultiPoly":
        other = self._coerce(other)
        den = _lcm(self.den, other.den)
        a, b = den // self.den, den // other.den
        t = {m: c * a for m, c in self.terms.items()}
        for m, c in other.terms.items():
            v = t.get(m, 0) + sign * c * b
            if v:
                t[m] = v
            else:
                t.pop(m, None)
        return MultiPoly(self.arity, t, den)

    def __add__(self, other) -> "MultiPoly":
        return self._addsub(other, 1)

    __radd__ = __add__

    def __sub__(self, other) -> "MultiPoly":
        return self._addsub(other, -1)

    def __rsub__(self, other) -> "MultiPoly":
        return (-self)._addsub(other, 1)

    def __mul__(self, other) -> "MultiPoly":
        if isinstance(other, (int, Fraction)):
            other = Fraction(other)
            return MultiPoly(self.arity, {m: c * other.numerator for m, c in self.terms.items()},
                             self.den * other.denominator)
        other = self._coerce(other)
        if not self.terms or not other.terms:
            return MultiPoly.zero(self.arity)
        da, db = self.degrees(), other.degrees()
        if any(x + y > MAX_EXPONENT for x, y in zip(da, db)):
            raise PolyError("exponent overflow in product")
        if len(self.terms) < len(other.terms):
            small, big = self.terms, other.terms
        else:
            small, big = other.terms, self.terms
        if len(small) * len(big) >= _NUMPY_MUL_THRESHOLD:
            t = _mul_numpy(self.arity, small, big, da, db)
            if t is not None:
                return MultiPoly(self.arity, t, self.den * other.den)
        t = {}
        get = t.get
        for m1, c1 in small.items():
            for m2, c2 in big.items():
                m = m1 + m2
                t[m] = get(m, 0) + c1 * c2
        return MultiPoly(self.arity, t, self.den * other.den)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "MultiPoly":
        if n < 0:
            raise PolyError("negative power")
        result = MultiPoly.constant(self.arity, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __truediv__(self, other) -> "MultiPoly":
        if isinstance(other, (int, Fraction)):
            other = Fraction(other)
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return self * (1 / other)
        return exact_div(self, other)

    def scale_to_integral(self) -> "MultiPoly":
        """Primitive integer polynomial with positive leading coefficient."""
        if not self.terms:
            return self
        g = 0
        for c in self.terms.values():
            g = gcd(g, c)
        m = max(self.terms)
        if self.terms[m] < 0:
            g = -g
        return MultiPoly(self.arity, {k: c // g for k, c in self.terms.items()}, 1)

    def monic_sign(self) -> "MultiPoly":
        """Flip the sign so the lex-leading coefficient is positive."""
        if self.terms and self.terms[max(self.terms)] < 0:
            return -self
        return self

    # ------------------------------------------------------------------ structure
    def coeffs_in_var(self, v: int) -> list["MultiPoly"]:
        """[c0, c1, ...] with self = sum c_i x_v^i; c_i do not involve x_v."""
        if not 0 <= v < self.arity:
            raise PolyError(f"variable index {v} out of range")
        shift = _BITS * (self.arity - 1 - v)
        buckets: dict[int, dict[int, int]] = {}
        for m, c in self.terms.items():
            e = (m >> shift) & _MASK
            buckets.setdefault(e, {})[m - (e << shift)] = c
        if not buckets:
            return [MultiPoly.zero(self.arity)]
        top = max(buckets)
        return [MultiPoly(self.arity, buckets.get(i, {}), self.den) for i in range(top + 1)]

    def substitute_zero(self, vars: Iterable[int]) -> "MultiPoly":
        mask = 0
        for v in vars:
            mask |= _MASK << (_BITS * (self.arity - 1 - v))
        if not mask:
            return self
        return MultiPoly(self.arity, {m: c for m, c in self.terms.items() if not m & mask}, self.den)

    def drop_vars(self, vars: Iterable[int]) -> "MultiPoly":
        """Remove variables that do not occur, lowering the arity."""
        vars = set(vars)
        degs = self.degrees()
        for v in vars:
            if degs[v]:
                raise PolyError(f"variable x{v} occurs; cannot drop it")
        keep = [i for i in range(self.arity) if i not in vars]
        return self.select_vars(keep)

    def select_vars(self, keep: Sequence[int]) -> "MultiPoly":
        """Re-index so that new variable j is old variable keep[j]; others must be absent."""
        n = len(keep)
        out = {}
        for m, c in self.terms.items():
            e = unpack(m, self.arity)
            if sum(e) != sum(e[k] for k in keep):
                raise PolyError("dropped variable occurs in polynomial")
            out[pack([e[k] for k in keep])] = c
        return MultiPoly(n, out, self.den, _normalized=True)

    def permute(self, perm: Sequence[int], arity: int | None = None) -> "MultiPoly":
        """Variable i becomes variable perm[i] in a ring of the given arity."""
        n = self.arity if arity is None else arity
        out = {}
        for m, c in self.terms.items():
            e = unpack(m, self.arity)
            f = [0] * n
            for i, x in enumerate(e):
                if x:
                    f[perm[i]] += x
            k = pack(f)
            out[k] = out.get(k, 0) + c
        return MultiPoly(n, out, self.den)

    def extend(self, new_arity: int, offset: int = 0) -> "MultiPoly":
        """Embed into a larger ring, variable i -> i + offset."""
        return self.permute([i + offset for i in range(self.arity)], new_arity)

    def substitute(self, images: Sequence["MultiPoly | int | Fraction"]) -> "MultiPoly":
        """Compose: replace x_i by images[i] (all in one common ring)."""
        if len(images) != self.arity:
            raise PolyError("need one image per variable")
        target = next((im.arity for im in images if isinstance(im, MultiPoly)), None)
        if target is None:
            target = 0
        ims = [im if isinstance(im, MultiPoly) else MultiPoly.constant(target, im) for im in images]
        degs = self.degrees()
        powers = [[MultiPoly.constant(target, 1)] for _ in range(self.arity)]
        for i, d in enumerate(degs):
            for _ in range(d):
                powers[i].append(powers[i][-1] * ims[i])
        acc: dict[int, Fraction] = {}
        for m, c in self.terms.items():
            e = unpack(m, self.arity)
            term = MultiPoly(target, {0: c}, 1)
            for i, x in enumerate(e):
                if x:
                    term = term * powers[i][x]
            for k, v in term.terms.items():
                acc[k] = acc.get(k, 0) + Fraction(v, term.den)
        return MultiPoly._from_fractions(target, acc) * Fraction(1, self.den)

    def evaluate(self, point: Sequence[int | Fraction]) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            v = Fraction(c)
            for x, e in zip(point, unpack(m, self.arity)):
                if e:
                    v *= Fraction(x) ** e
            total += v
        return total / self.den

    def derivative(self, v: int) -> "MultiPoly":
        shift = _BITS * (self.arity - 1 - v)
        out = {}
        for m, c in self.terms.items():
            e = (m >> shift) & _MASK
            if e:
                out[m - (1 << shift)] = c * e
        return MultiPoly(self.arity, out, self.den)

    # ------------------------------------------------------------------ modular
    def reduce_mod_p(self, p: int) -> dict[tuple[int, ...], int]:
        """Coefficients in F_p keyed by exponent vector (zero residues dropped)."""
        if self.den % p == 0:
            raise DenominatorNotInvertible(p, self.den)
        inv = pow(self.den, -1, p)
        out = {}
        for m, c in self.terms.items():
            r = c * inv % p
            if r:
                out[unpack(m, self.arity)] = r
        return out

    # ------------------------------------------------------------------ text / json
    def format(self, names: Sequence[str] | None = None) -> str:
        names = names or default_names(self.arity)
        if not self.terms:
            return "0"
        parts = []
        for exps, c in self.items():
            mono = "*".join(n if e == 1 else f"{n}^{e}" for n, e in zip(names, exps) if e)
            num, den = abs(c.numerator), c.denominator
            if mono:
                body = mono if num == 1 else f"{num}*{mono}"
            else:
                body = str(num)
            if den != 1:
                body = f"{body}/{den}"
            parts.append(("-" if c < 0 else "+", body))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __repr__(self) -> str:
        return f"MultiPoly({self.format()!r}, arity={self.arity})"

    __str__ = format

    def to_json(self, names: Sequence[str] | None = None) -> dict:
        names = list(names or default_names(self.arity))
        return {
            "vars": names,
            "den": str(self.den),
            "terms": [{"e": list(unpack(m, self.arity)), "c": str(c)}
                      for m, c in sorted(self.terms.items(), reverse=True)],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "MultiPoly":
        try:
            arity = len(obj["vars"])
            den = int(obj.get("den", "1"))
            terms: dict[int, int] = {}
            for t in obj["terms"]:
                e = t["e"]
                if len(e) != arity:
                    raise PolyError("exponent vector length differs from vars")
                m = pack(e)
                terms[m] = terms.get(m, 0) + int(t["c"])
        except (KeyError, TypeError) as exc:
            raise PolyError(f"malformed polynomial JSON: {exc}") from exc
        return cls(arity, terms, den)

    def dumps(self, names: Sequence[str] | None = None) -> str:
        return json.dumps(self.to_json(names), sort_keys=True)

    def canonical_key(self) -> str:
        return json.dumps([self.arity, self.den, sorted(self.terms.items())])


def _split_words(keys: Sequence[int], n: int) -> list[np.ndarray]:
    """Packed monomials as uint64 words of up to seven variables each, most significant first."""
    words = []
    hi = n
    while hi > 0:
        lo = max(0, hi - _VARS_PER_WORD)
        shift = _BITS * (n - hi)
        mask = (1 << (_BITS * (hi - lo))) - 1
        words.append((lo, hi, np.array([(m >> shift) & mask for m in keys], dtype=np.uint64)))
        hi = lo
    words.reverse()
    return words


def _exponent_matrix(keys: Sequence[int], n: int) -> np.ndarray:
    out = np.zeros((len(keys), n), dtype=np.int64)
    for lo, hi, w in _split_words(keys, n):
        for i in range(lo, hi):
            out[:, i] = ((w >> np.uint64(_BITS * (hi - 1 - i))) & np.uint64(_MASK)).astype(np.int64)
    return out


def _pack_matrix(exps: np.ndarray) -> list[int]:
    n = exps.shape[1]
    cols = []
    hi = n
    while hi > 0:
        lo = max(0, hi - _VARS_PER_WORD)
        w = np.zeros(exps.shape[0], dtype=np.uint64)
        for i in range(lo, hi):
            w = (w << np.uint64(_BITS)) | exps[:, i].astype(np.uint64)
        cols.append((_BITS * (n - hi), w.tolist()))
        hi = lo
    out = [0] * exps.shape[0]
    for shift, vals in cols:
        out = [o | (v << shift) for o, v in zip(out, vals)]
    return out


def _mul_numpy(n: int, a: Mapping[int, int], b: Mapping[int, int],
               da: Sequence[int], db: Sequence[int]) -> dict[int, int] | None:
    """Vectorized product via a mixed-radix monomial code; None when int64 could overflow."""
    radix = [x + y + 1 for x, y in zip(da, db)]
    total = 1
    for r in radix:
        total *= r
    if total >= 1 << 62:
        return None
    ma = max(abs(c) for c in a.values())
    mb = max(abs(c) for c in b.values())
    if ma * mb * min(len(a), len(b)) >= 1 << 62:
        return None
    weights = np.ones(n, dtype=np.int64)
    for i in range(n - 2, -1, -1):
        weights[i] = weights[i + 1] * radix[i + 1]
    ka, kb = list(a), list(b)
    code_a = _exponent_matrix(ka, n) @ weights
    code_b = _exponent_matrix(kb, n) @ weights
    coef_a = np.array([a[m] for m in ka], dtype=np.int64)
    coef_b = np.array([b[m] for m in kb], dtype=np.int64)
    step = max(1, _CHUNK_PAIRS // len(kb))
    codes_parts, coef_parts = [], []
    for i in range(0, len(ka), step):
        codes = (code_a[i:i + step, None] + code_b[None, :]).ravel()
        coefs = (coef_a[i:i + step, None] * coef_b[None, :]).ravel()
        codes_parts.append(codes)
        coef_parts.append(coefs)
        if len(codes_parts) > 1 and sum(len(c) for c in codes_parts) > 4 * _CHUNK_PAIRS:
            c, v = _combine(np.concatenate(codes_parts), np.concatenate(coef_parts))
            codes_parts, coef_parts = [c], [v]
    codes, coefs = _combine(np.concatenate(codes_parts), np.concatenate(coef_parts))
    keep = coefs != 0
    codes, coefs = codes[keep], coefs[keep]
    exps = np.zeros((len(codes), n), dtype=np.int64)
    rest = codes.copy()
    for i in range(n):
        exps[:, i], rest = np.divmod(rest, weights[i])
    return dict(zip(_pack_matrix(exps), coefs.tolist()))


def _combine(codes: np.ndarray, coefs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(codes)
    codes, coefs = codes[order], coefs[order]
    starts = np.flatnonzero(np.concatenate(([True], codes[1:] != codes[:-1])))
    return codes[starts], np.add.reduceat(coefs, starts)


def parse(text: str, names: Sequence[str] | int) -> MultiPoly:
    """Parse an expression with + - * / ^ (or **), integers, parentheses and names."""
    if isinstance(names, int):
        names = default_names(names)
    names = list(names)
    arity = len(names)
    index = {n: i for i, n in enumerate(names)}
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise PolyError(f"cannot parse polynomial: {exc}") from exc

    def ev(node) -> MultiPoly | Fraction:
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return Fraction(node.value)
        if isinstance(node, ast.Name):
            if node.id not in index:
                raise PolyError(f"unknown variable {node.id!r}")
            return MultiPoly.var(arity, index[node.id])
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                if isinstance(b, MultiPoly):
                    if not b.is_constant():
                        raise PolyError("division by a non-constant")
                    b = b.constant_value()
                return a * (1 / b)
            if isinstance(node.op, ast.Pow):
                if isinstance(b, MultiPoly) or b.denominator != 1:
                    raise PolyError("exponent must be an integer")
                return a ** int(b)
        raise PolyError(f"unsupported syntax in polynomial: {ast.dump(node)}")

    result = ev(tree)
    if not isinstance(result, MultiPoly):
        result = MultiPoly.constant(arity, result)
    return result


def exact_div(f: MultiPoly, g: MultiPoly) -> MultiPoly:
    """Return q with f = q*g, raising NotDivisible otherwise."""
    f._check(g)
    if g.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    n = f.arity
    lm_g = max(g.terms)
    lc_g = Fraction(g.terms[lm_g], g.den)
    ge = unpack(lm_g, n)
    rem = {m: Fraction(c, f.den) for m, c in f.terms.items()}
    gterms = [(m, Fraction(c, g.den)) for m, c in g.terms.items()]
    quot: dict[int, Fraction] = {}
    while rem:
        m = max(rem)
        fe = unpack(m, n)
        if any(a < b for a, b in zip(fe, ge)):
            raise NotDivisible("leading monomial not divisible")
        qm = m - lm_g
        qc = rem[m] / lc_g
        quot[qm] = qc
        for gm, gc in gterms:
            k = gm + qm
            v = rem.get(k, 0) - qc * gc
            if v:
                rem[k] = v
            else:
                rem.pop(k, None)
    return MultiPoly._from_fractions(n, quot)


def divides(g: MultiPoly, f: MultiPoly) -> bool:
    try:
        exact_div(f, g)
    except NotDivisible:
        return False
    return True


def _rational_sqrt(c: Fraction) -> Fraction | None:
    if c < 0:
        return None
    a, b = isqrt(c.numerator), isqrt(c.denominator)
    if a * a == c.numerator and b * b == c.denominator:
        return Fraction(a, b)
    return None


def poly_sqrt(f: MultiPoly) -> MultiPoly | None:
    """Square root with positive lex-leading coefficient, or None."""
    if f.is_zero():
        return f
    n = f.arity
    # f = N/den, so sqrt(f) = sqrt(N*den)/den.  Write N*den = k*P with P primitive;
    # by Gauss's lemma a rational root exists iff k is a square and P = s^2 with s integral.
    terms = {m: c * f.den for m, c in f.terms.items()}
    k = 0
    for c in terms.values():
        k = gcd(k, c)
    lm = max(terms)
    if terms[lm] < 0:
        return None
    rk = isqrt(k)
    if rk * rk != k:
        return None
    rem = {m: c // k for m, c in terms.items()}
    e = unpack(lm, n)
    if any(x % 2 for x in e):
        return None
    c0 = isqrt(rem[lm])
    if c0 * c0 != rem[lm]:
        return None
    s0 = pack([x // 2 for x in e])
    half = s0
    root: dict[int, int] = {s0: c0}
    heap = [-m for m in rem]
    heapq.heapify(heap)

    def subtract(key: int, amount: int) -> None:
        v = rem.get(key, 0) - amount
        if v:
            if key not in rem:
                heapq.heappush(heap, -key)
            rem[key] = v
        else:
            rem.pop(key, None)

    subtract(s0 + s0, c0 * c0)
    two_lead = 2 * c0
    last = s0
    limit = len(f.terms) + 1
    while True:
        while heap and -heap[0] not in rem:
            heapq.heappop(heap)
        if not heap:
            break
        m = -heap[0]
        # next root term is lt(rem) / (2 lt(root)), strictly below the previous one
        if not _monomial_le(half, m, n):
            return None
        tm = m - half
        if tm >= last:
            return None
        q, r = divmod(rem[m], two_lead)
        if r:
            return None
        for rm, rc in root.items():
            subtract(rm + tm, 2 * q * rc)
        subtract(tm + tm, q * q)
        root[tm] = q
        last = tm
        if len(root) > limit:
            return None
    return MultiPoly(n, root, 1) * Fraction(rk, f.den)


def _monomial_le(a: int, b: int, n: int) -> bool:
    """True when monomial a divides monomial b."""
    return all(x <= y for x, y in zip(unpack(a, n), unpack(b, n)))


def disc_wrt(f: MultiPoly, v: int) -> MultiPoly:
    """B^2 - 4AC for f = A x_v^2 + B x_v + C."""
    cs = f.coeffs_in_var(v)
    if len(cs) > 3:
        raise DegreeTooHigh(f"degree {len(cs) - 1} in x{v} exceeds 2")
    while len(cs) < 3:
        cs.append(MultiPoly.zero(f.arity))
    c, b, a = cs
    return b * b - a * c * 4

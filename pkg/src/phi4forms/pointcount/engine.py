"""Exact F_p point counting by vectorised enumeration.

Free coordinates are split into an inner block (the last two) and an outer block.
For a chunk of outer points the polynomial is evaluated as ``(O @ S) @ W`` where
O holds outer monomial values, S the coefficients and W the inner monomial values
over the whole inner grid.  Both products stay below 2^53, so float64 is exact.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Mapping, Sequence

import numpy as np
from sympy import isprime

from ..multipoly import MultiPoly
from ..models import MultiProj, Proj, VarietyModel, WeightedProj

Residues = Mapping[tuple[int, ...], int]

CHUNK_ELEMENTS = 1 << 20
MATRIX_ELEMENTS = 1 << 22
DEFAULT_BUDGET = 10 ** 8


class BudgetExceeded(RuntimeError):
    pass


class InvalidPrime(ValueError):
    pass


def check_prime(p: int) -> None:
    if p == 2:
        raise InvalidPrime("p = 2 is excluded")
    if p < 2 or not isprime(p):
        raise InvalidPrime(f"{p} is not prime")


def chi_table(p: int) -> np.ndarray:
    chi = -np.ones(p, dtype=np.int64)
    chi[0] = 0
    chi[np.unique((np.arange(1, p, dtype=np.int64) ** 2) % p)] = 1
    return chi


def restrict(res: Residues, ones: Iterable[int], zeros: Iterable[int],
             free: Sequence[int], p: int) -> dict[tuple[int, ...], int]:
    """Set coordinates in ``zeros`` to 0 and ``ones`` to 1; re-index the rest by ``free``."""
    zeros = list(zeros)
    out: dict[tuple[int, ...], int] = {}
    for e, c in res.items():
        if any(e[i] for i in zeros):
            continue
        key = tuple(e[i] for i in free)
        out[key] = (out.get(key, 0) + c) % p
    return {k: c for k, c in out.items() if c}


class _GridPoly:
    """A polynomial in k variables prepared for evaluation over F_p^k."""

    def __init__(self, res: Mapping[tuple[int, ...], int], k: int, p: int):
        self.p = p
        self.k = k
        self.n_in = min(k, 2)
        self.n_out = k - self.n_in
        self.zero = not res
        if self.zero:
            return
        outs = sorted({e[:self.n_out] for e in res})
        ins = sorted({e[self.n_out:] for e in res})
        oi = {e: i for i, e in enumerate(outs)}
        ii = {e: i for i, e in enumerate(ins)}
        self.S = np.zeros((len(outs), len(ins)))
        for e, c in res.items():
            self.S[oi[e[:self.n_out]], ii[e[self.n_out:]]] = c % p
        self.out_exps = np.array(outs, dtype=np.int64).reshape(len(outs), self.n_out)
        in_exps = np.array(ins, dtype=np.int64).reshape(len(ins), self.n_in)
        grid = _grid_points(self.n_in, p)
        W = np.ones((len(ins), grid.shape[0]), dtype=np.int64)
        for j in range(self.n_in):
            tab = _power_table(grid[:, j], int(in_exps[:, j].max()), p)
            W = W * tab[:, in_exps[:, j]].T % p
        self.W = W.astype(np.float64)

    def evaluate(self, outer: np.ndarray) -> np.ndarray:
        """Values at every (outer row, inner grid point); shape (rows, p^n_in)."""
        rows = outer.shape[0]
        if self.zero:
            return np.zeros((rows, self.p ** self.n_in), dtype=np.int64)
        p = self.p
        O = np.ones((rows, self.out_exps.shape[0]), dtype=np.int64)
        for j in range(self.n_out):
            tab = _power_table(outer[:, j], int(self.out_exps[:, j].max()), p)
            O = O * tab[:, self.out_exps[:, j]] % p
        A = np.fmod(O.astype(np.float64) @ self.S, p)
        return np.fmod(A @ self.W, p).astype(np.int64)


def _power_table(x: np.ndarray, d: int, p: int) -> np.ndarray:
    tab = np.ones((x.shape[0], d + 1), dtype=np.int64)
    for e in range(1, d + 1):
        tab[:, e] = tab[:, e - 1] * x % p
    return tab


def _grid_points(k: int, p: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows of F_p^k in odometer order (first coordinate most significant)."""
    stop = p ** k if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.shape[0], k), dtype=np.int64)
    for j in range(k - 1, -1, -1):
        out[:, j] = idx % p
        idx //= p
    return out


def grid_sum(eqs: Sequence[Residues], cover: Residues | None, k: int, p: int,
             threads: int = 1) -> int:
    """Sum over F_p^k of [all eqs vanish] * (1 + chi(cover) if cover else 1)."""
    if k == 0:
        if any(res.get((), 0) % p for res in eqs):
            return 0
        if cover is None:
            return 1
        return 1 + int(chi_table(p)[cover.get((), 0) % p])
    grid = [_GridPoly(r, k, p) for r in eqs]
    cov = _GridPoly(cover, k, p) if cover is not None else None
    chi = chi_table(p) if cover is not None else None
    n_out = k - min(k, 2)
    total_outer = p ** n_out
    inner = p ** min(k, 2)
    widest = max([g.out_exps.shape[0] for g in grid + ([cov] if cov else []) if not g.zero] or [1])
    rows = max(1, min(CHUNK_ELEMENTS // inner, MATRIX_ELEMENTS // widest))
    bounds = [(s, min(s + rows, total_outer)) for s in range(0, total_outer, rows)]

    def work(span: tuple[int, int]) -> int:
        outer = _grid_points(n_out, p, *span)
        mask = None
        for g in grid:
            z = g.evaluate(outer) == 0
            mask = z if mask is None else mask & z
        if cov is None:
            return int(mask.sum()) if mask is not None else outer.shape[0] * inner
        w = 1 + chi[cov.evaluate(outer)]
        return int(w[mask].sum()) if mask is not None else int(w.sum())

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return sum(pool.map(work, bounds))
    return sum(work(b) for b in bounds)


def evaluate_at(res: Residues, pts: np.ndarray, p: int) -> np.ndarray:
    """Evaluate at explicit points (rows of ``pts``) mod p."""
    out = np.zeros(pts.shape[0], dtype=np.int64)
    if not res:
        return out
    exps = np.array(list(res.keys()), dtype=np.int64)
    tabs = [_power_table(pts[:, j], int(exps[:, j].max()), p) for j in range(pts.shape[1])]
    for e, c in res.items():
        term = np.full(pts.shape[0], c % p, dtype=np.int64)
        for j, ej in enumerate(e):
            if ej:
                term = term * tabs[j][:, ej] % p
        out = (out + term) % p
    return out


def _residues(fs: Sequence[MultiPoly], p: int) -> list[dict]:
    return [f.reduce_mod_p(p) for f in fs]


def _charts(n: int) -> list[tuple[list[int], int, list[int]]]:
    """Charts of P^n: (coordinates set to zero, the coordinate set to one, free coordinates)."""
    return [(list(range(i)), i, list(range(i + 1, n + 1))) for i in range(n + 1)]


def _size_projective(dims: Sequence[int], p: int) -> int:
    size = 1
    for d in dims:
        size *= (p ** (d + 1) - 1) // (p - 1)
    return size


def count_affine(eqs: Sequence[MultiPoly], p: int, arity: int | None = None,
                 threads: int = 1, budget: int = DEFAULT_BUDGET) -> int:
    """Common zeros in A^n(F_p), origin included."""
    check_prime(p)
    if arity is None:
        if not eqs:
            raise ValueError("arity is required for an empty system")
        arity = eqs[0].arity
    if p ** arity > budget:
        raise BudgetExceeded(f"{p}^{arity} points exceeds budget {budget}")
    return grid_sum(_residues(eqs, p), None, arity, p, threads)


def _projective_sum(eqs: Sequence[Residues], cover: Residues | None, n: int, p: int,
                    threads: int) -> int:
    total = 0
    for zeros, one, free in _charts(n):
        r_eqs = [restrict(r, [one], zeros, free, p) for r in eqs]
        r_cov = restrict(cover, [one], zeros, free, p) if cover is not None else None
        total += grid_sum(r_eqs, r_cov, len(free), p, threads)
    return total


def count_projective(eqs: Sequence[MultiPoly], p: int, n: int | None = None,
                     cover: MultiPoly | None = None, threads: int = 1,
                     budget: int = DEFAULT_BUDGET) -> int:
    """Points of P^n (normalised: first nonzero coordinate 1) on the common zero set.

    With ``cover`` the count is of the double cover w^2 = cover, i.e. each point
    has weight 1 + chi(cover).
    """
    check_prime(p)
    if n is None:
        src = list(eqs) + ([cover] if cover is not None else [])
        if not src:
            raise ValueError("n is required for an empty system")
        n = src[0].arity - 1
    if _size_projective([n], p) > budget:
        raise BudgetExceeded(f"P^{n} over F_{p} exceeds budget {budget}")
    cov = cover.reduce_mod_p(p) if cover is not None else None
    return _projective_sum(_residues(eqs, p), cov, n, p, threads)


def count_weighted_double_cover(model: VarietyModel, p: int, threads: int = 1,
                                budget: int = DEFAULT_BUDGET) -> int:
    """Points of t^2 = F in P(m, 1, ..., 1): sum over the base of 1 + chi(F)."""
    if not isinstance(model.ambient, WeightedProj):
        raise TypeError("expected a weighted double cover")
    return count_projective([], p, model.ambient.units - 1, model.equations[0], threads, budget)


def _fiber_shape(model: VarietyModel) -> list[tuple[int, MultiPoly]] | None:
    """For B-shaped models, the equation owning each P^1 factor (or None)."""
    dims = model.ambient.dims
    if len(dims) < 2 or any(d != 1 for d in dims[1:]):
        return None
    owners: list[tuple[int, MultiPoly] | None] = [None] * (len(dims) - 1)
    for f in model.equations:
        md = model.multidegree(f)
        hits = [i for i, d in enumerate(md[1:]) if d]
        if not hits:
            continue
        if len(hits) != 1 or md[1 + hits[0]] != 1 or owners[hits[0]] is not None:
            return None
        owners[hits[0]] = (hits[0], f)
    if any(o is None for o in owners):
        return None
    return owners


def _projective_points(n: int, p: int) -> np.ndarray:
    blocks = []
    for zeros, one, free in _charts(n):
        g = _grid_points(len(free), p)
        pts = np.zeros((g.shape[0], n + 1), dtype=np.int64)
        pts[:, one] = 1
        pts[:, free] = g
        blocks.append(pts)
    return np.concatenate(blocks)


def _count_fibered(model: VarietyModel, p: int, owners, budget: int) -> int:
    dims = model.ambient.dims
    blocks = model.ambient.blocks()
    base = blocks[0]
    if _size_projective([dims[0]], p) > budget:
        raise BudgetExceeded("base enumeration exceeds budget")
    X = _projective_points(dims[0], p)
    N = model.ambient.arity
    full = np.zeros((X.shape[0], N), dtype=np.int64)
    full[:, base] = X
    keep = np.ones(X.shape[0], dtype=bool)
    for f in model.equations:
        if all(d == 0 for d in model.multidegree(f)[1:]):
            keep &= evaluate_at(f.reduce_mod_p(p), full, p) == 0
    X, full = X[keep], full[keep]
    # a, b with equation a*y0 + b*y1 on each P^1 factor
    ab = []
    for i, f in owners:
        y0, y1 = blocks[1 + i]
        res = f.reduce_mod_p(p)
        a = {e[:y0] + (0, 0) + e[y1 + 1:]: c for e, c in res.items() if e[y0]}
        b = {e[:y0] + (0, 0) + e[y1 + 1:]: c for e, c in res.items() if e[y1]}
        ab.append((evaluate_at(a, full, p), evaluate_at(b, full, p)))
    degenerate = np.zeros(X.shape[0], dtype=bool)
    for a, b in ab:
        degenerate |= (a == 0) & (b == 0)
    chi = chi_table(p) if model.cover is not None else None
    cov = model.cover.reduce_mod_p(p) if model.cover is not None else None
    gen = ~degenerate
    if cov is None:
        total = int(gen.sum())
    else:
        pts = full[gen].copy()
        for (i, _), (a, b) in zip(owners, ab):
            y0, y1 = blocks[1 + i]
            pts[:, y0] = b[gen]
            pts[:, y1] = (-a[gen]) % p
        total = int((1 + chi[evaluate_at(cov, pts, p)]).sum())
    line = np.array([[1, t] for t in range(p)] + [[0, 1]], dtype=np.int64)
    for r in np.nonzero(degenerate)[0]:
        choices = []
        for (i, _), (a, b) in zip(owners, ab):
            if a[r] == 0 and b[r] == 0:
                choices.append(line)
            else:
                choices.append(np.array([[b[r], (-a[r]) % p]], dtype=np.int64))
        if cov is None:
            size = 1
            for c in choices:
                size *= c.shape[0]
            total += size
            continue
        for combo in itertools.product(*choices):
            pt = full[r].copy()
            for (i, _), y in zip(owners, combo):
                pt[blocks[1 + i]] = y
            total += 1 + int(chi[evaluate_at(cov, pt[None, :], p)[0]])
    return total


def count_multiprojective(model: VarietyModel, p: int, threads: int = 1,
                          budget: int = DEFAULT_BUDGET, method: str = "auto") -> int:
    """Points of a multiprojective model (tuples of normalised representatives).

    ``method`` is "auto", "fiber" (solve each P^1 factor over the first factor)
    or "naive" (enumerate the product of charts).
    """
    check_prime(p)
    if not isinstance(model.ambient, MultiProj):
        raise TypeError("expected a multiprojective model")
    owners = _fiber_shape(model) if method in ("auto", "fiber") else None
    if method == "fiber" and owners is None:
        raise ValueError("model is not fibred over its first factor by P^1 equations")
    if owners is not None:
        return _count_fibered(model, p, owners, budget)
    if _size_projective(model.ambient.dims, p) > budget:
        raise BudgetExceeded("product enumeration exceeds budget")
    eqs = _residues(model.equations, p)
    cov = model.cover.reduce_mod_p(p) if model.cover is not None else None
    total = 0
    for charts in itertools.product(*[_charts(d) for d in model.ambient.dims]):
        offs = [b[0] for b in model.ambient.blocks()]
        zeros = [o + z for o, (zs, _, _) in zip(offs, charts) for z in zs]
        ones = [o + one for o, (_, one, _) in zip(offs, charts)]
        free = [o + f for o, (_, _, fs) in zip(offs, charts) for f in fs]
        r_eqs = [restrict(r, ones, zeros, free, p) for r in eqs]
        r_cov = restrict(cov, ones, zeros, free, p) if cov is not None else None
        total += grid_sum(r_eqs, r_cov, len(free), p, threads)
    return total


def count_model(model: VarietyModel, p: int, threads: int = 1,
                budget: int = DEFAULT_BUDGET) -> int:
    """Projective count of any model (double covers weighted by 1 + chi)."""
    if isinstance(model.ambient, WeightedProj):
        return count_weighted_double_cover(model, p, threads, budget)
    if isinstance(model.ambient, MultiProj):
        return count_multiprojective(model, p, threads, budget)
    return count_projective(model.equations, p, model.ambient.n, model.cover, threads, budget)


def evaluation_cost(model: VarietyModel, p: int) -> int:
    """Points times terms: a proxy for the work of counting ``model``."""
    terms = sum(len(f) for f in model.equations) + (len(model.cover) if model.cover is not None else 0)
    return enumeration_size(model, p) * max(1, terms)


def enumeration_size(model: VarietyModel, p: int) -> int:
    if isinstance(model.ambient, WeightedProj):
        return _size_projective([model.ambient.units - 1], p)
    if isinstance(model.ambient, MultiProj):
        if _fiber_shape(model) is not None:
            return _size_projective(model.ambient.dims[:1], p)
        return _size_projective(model.ambient.dims, p)
    return _size_projective([model.ambient.n], p)

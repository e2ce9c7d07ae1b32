"""Slow reference counters written with plain loops; used as oracles for the engine."""

from __future__ import annotations

import itertools
from typing import Sequence

from phi4forms.models import MultiProj, Proj, VarietyModel, WeightedProj
from phi4forms.multipoly import MultiPoly


def ev(res: dict, x: Sequence[int], p: int) -> int:
    s = 0
    for e, c in res.items():
        t = c
        for xi, ei in zip(x, e):
            if ei:
                t = t * pow(xi, ei, p)
        s += t
    return s % p


def chi(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def proj_points(n: int, p: int):
    """Normalized representatives of P^n(F_p): first nonzero coordinate equal to 1."""
    for lead in range(n + 1):
        for tail in itertools.product(range(p), repeat=n - lead):
            yield (0,) * lead + (1,) + tail


def affine(eqs: Sequence[MultiPoly], p: int, arity: int | None = None) -> int:
    arity = arity if arity is not None else eqs[0].arity
    res = [f.reduce_mod_p(p) for f in eqs]
    return sum(all(ev(r, x, p) == 0 for r in res) for x in itertools.product(range(p), repeat=arity))


def model_count(m: VarietyModel, p: int) -> int:
    res = [f.reduce_mod_p(p) for f in m.equations]
    if isinstance(m.ambient, WeightedProj):
        (F,) = res
        return sum(1 + chi(ev(F, x, p), p) for x in proj_points(m.ambient.units - 1, p))
    if isinstance(m.ambient, Proj):
        pts = proj_points(m.ambient.dimension, p)
    else:
        assert isinstance(m.ambient, MultiProj)
        pts = (sum(parts, ()) for parts in itertools.product(*[list(proj_points(d, p)) for d in m.ambient.dims]))
    cover = m.cover.reduce_mod_p(p) if m.cover is not None else None
    total = 0
    for x in pts:
        if all(ev(r, x, p) == 0 for r in res):
            total += 1 if cover is None else 1 + chi(ev(cover, x, p), p)
    return total

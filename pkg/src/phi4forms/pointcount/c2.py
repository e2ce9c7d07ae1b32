"""The c2 invariant by direct enumeration of the graph hypersurface."""

from __future__ import annotations

from dataclasses import dataclass

from ..graphs import Graph, GraphError, kirchhoff_polynomial
from .engine import DEFAULT_BUDGET, BudgetExceeded, check_prime, count_affine


class DivisibilityFailure(ArithmeticError):
    pass


@dataclass(frozen=True)
class C2Value:
    graph: str
    p: int
    value: int
    affine_count: int


def c2_bruteforce(g: Graph, p: int, threads: int = 1, budget: int = DEFAULT_BUDGET) -> C2Value:
    if g.vertex_count < 3:
        raise GraphError("c2 needs a graph with at least 3 vertices")
    check_prime(p)
    psi = kirchhoff_polynomial(g)
    if p ** psi.arity > budget:
        raise BudgetExceeded(f"{p}^{psi.arity} affine points exceeds budget {budget}")
    n = count_affine([psi], p, threads=threads, budget=budget)
    if n % (p * p):
        raise DivisibilityFailure(f"affine count {n} of {g.name} not divisible by {p}^2")
    return C2Value(g.name or "", p, n // (p * p) % p, n)

"""Small number-theoretic helpers used by the count formulas."""

from __future__ import annotations

from typing import Sequence

from sympy import isprime
from sympy.ntheory.residue_ntheory import sqrt_mod as _sympy_sqrt_mod


class RamifiedPrime(ValueError):
    pass


def _check_odd_prime(p: int) -> None:
    if p == 2 or not isprime(p):
        raise ValueError(f"{p} is not an odd prime")


def legendre(a: int, p: int) -> int:
    _check_odd_prime(p)
    r = pow(a % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def sqrt_mod(a: int, p: int) -> int | None:
    """Smallest s in [0, p) with s^2 = a mod p, or None."""
    _check_odd_prime(p)
    roots = _sympy_sqrt_mod(a % p, p, all_roots=True)
    return min(roots) if roots else None


def alpha_8(p: int) -> int:
    """1 if p = 1 mod 8 else 0."""
    if p <= 3:
        raise ValueError("alpha_8 is defined for p > 3")
    return 1 if p % 8 == 1 else 0


def alpha_390(p: int) -> int:
    """Splitting indicator for Q(sqrt 3, sqrt(6 +- 4 sqrt 3)): 0, 2 or -2."""
    if p <= 3:
        raise ValueError("alpha_390 is defined for p > 3")
    if legendre(3, p) == -1 or legendre(-3, p) == -1:
        return 0
    s = sqrt_mod(3, p)
    plus, minus = legendre(6 + 4 * s, p), legendre(6 - 4 * s, p)
    # (6+4s)(6-4s) = -12, a square when (-3/p) = 1, so both tests agree
    assert plus == minus, (p, plus, minus)
    return 2 if plus == 1 else -2


def cubic_discriminant(c: Sequence[int]) -> int:
    """Discriminant of c[0] x^3 + c[1] x^2 + c[2] x + c[3]."""
    a, b, cc, d = c
    return b * b * cc * cc - 4 * a * cc ** 3 - 4 * b ** 3 * d - 27 * a * a * d * d + 18 * a * b * cc * d


def cubic_frobenius(c: Sequence[int], p: int) -> str:
    """'split3', 'partial' or 'inert3' according to the roots of the cubic mod p."""
    _check_odd_prime(p)
    if len(c) != 4 or c[0] % p == 0:
        raise ValueError("expected a cubic with leading coefficient prime to p")
    if cubic_discriminant(c) % p == 0:
        raise RamifiedPrime(f"p={p} divides the discriminant of {list(c)}")
    roots = sum(1 for x in range(p) if (((c[0] * x + c[1]) * x + c[2]) * x + c[3]) % p == 0)
    return {3: "split3", 1: "partial", 0: "inert3"}[roots]

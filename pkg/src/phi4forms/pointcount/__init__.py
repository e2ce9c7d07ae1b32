"""Point counting over prime fields."""

from __future__ import annotations

from ..models import VarietyModel
from .arith import RamifiedPrime, alpha_8, alpha_390, cubic_frobenius, legendre, sqrt_mod
from .c2 import C2Value, DivisibilityFailure, c2_bruteforce
from .cache import CacheConflict, CountCache, CountRecord, cache_get, cache_put
from .engine import (BudgetExceeded, InvalidPrime, count_affine, count_model,
                     count_multiprojective, count_projective, count_weighted_double_cover,
                     enumeration_size, evaluation_cost)


def cached_count(model: VarietyModel, p: int, cache: CountCache | None = None,
                 threads: int = 1, budget: int | None = None) -> tuple[int, bool]:
    """Projective count, served from ``cache`` when present.  Returns (count, was_cached)."""
    h = model.content_hash()
    if cache is not None:
        rec = cache.get(h, p)
        if rec is not None:
            return rec.count, True
    kw = {"budget": budget} if budget is not None else {}
    n = count_model(model, p, threads=threads, **kw)
    if cache is not None:
        cache.put(CountRecord(h, p, n))
    return n, False


__all__ = [
    "BudgetExceeded", "C2Value", "CacheConflict", "CountCache", "CountRecord", "DivisibilityFailure",
    "InvalidPrime", "RamifiedPrime", "alpha_8", "alpha_390", "c2_bruteforce", "cache_get", "cache_put",
    "cached_count", "count_affine", "count_model", "count_multiprojective", "count_projective",
    "count_weighted_double_cover", "cubic_frobenius", "enumeration_size", "evaluation_cost", "legendre", "sqrt_mod",
]

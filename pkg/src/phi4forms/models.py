"""Varieties that can be counted: hypersurfaces, weighted double covers, multiprojective systems."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence, Union

from .multipoly import MultiPoly, PolyError


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Proj:
    """P^n with coordinates x0..xn."""

    n: int

    @property
    def arity(self) -> int:
        return self.n + 1

    @property
    def dimension(self) -> int:
        return self.n

    def to_json(self) -> dict:
        return {"type": "proj", "n": self.n}


@dataclass(frozen=True)
class WeightedProj:
    """P(weight, 1, ..., 1) with ``units`` weight-one coordinates; t is implicit."""

    weight: int
    units: int

    @property
    def arity(self) -> int:
        return self.units

    @property
    def dimension(self) -> int:
        return self.units

    def to_json(self) -> dict:
        return {"type": "weighted", "weight": self.weight, "units": self.units}


@dataclass(frozen=True)
class MultiProj:
    """P^{d_1} x ... x P^{d_r}; coordinates of the factors are consecutive."""

    dims: tuple[int, ...]

    def __post_init__(self):
        if not self.dims or any(d < 0 for d in self.dims):
            raise ModelError("factor dimensions must be non-negative")

    @property
    def arity(self) -> int:
        return sum(d + 1 for d in self.dims)

    @property
    def dimension(self) -> int:
        return sum(self.dims)

    def blocks(self) -> list[list[int]]:
        out, start = [], 0
        for d in self.dims:
            out.append(list(range(start, start + d + 1)))
            start += d + 1
        return out

    def to_json(self) -> dict:
        return {"type": "multiproj", "dims": list(self.dims)}


Ambient = Union[Proj, WeightedProj, MultiProj]


def ambient_from_json(obj: dict) -> Ambient:
    kind = obj.get("type")
    if kind == "proj":
        return Proj(int(obj["n"]))
    if kind == "weighted":
        return WeightedProj(int(obj["weight"]), int(obj["units"]))
    if kind == "multiproj":
        return MultiProj(tuple(int(d) for d in obj["dims"]))
    raise ModelError(f"unknown ambient type {kind!r}")


@dataclass(frozen=True)
class VarietyModel:
    """Equations in an ambient space.

    For ``WeightedProj`` the single equation F stands for t^2 = F.  For the other
    ambients, ``cover`` (if set) turns the model into the double cover w^2 = cover
    of the variety cut out by ``equations``.
    """

    ambient: Ambient
    equations: tuple[MultiPoly, ...]
    label: str = ""
    names: tuple[str, ...] | None = None
    cover: MultiPoly | None = None
    bad_primes: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(self.equations))
        object.__setattr__(self, "bad_primes", frozenset(self.bad_primes))
        n = self.ambient.arity
        for f in self.equations + ((self.cover,) if self.cover is not None else ()):
            if f.arity != n:
                raise ModelError(f"{self.label}: equation arity {f.arity} differs from ambient arity {n}")
        if isinstance(self.ambient, WeightedProj):
            if len(self.equations) != 1:
                raise ModelError("a weighted double cover has exactly one branch equation")
            if self.cover is not None:
                raise ModelError("weighted models carry their branch function as the equation")
            if not self.equations[0].is_homogeneous(2 * self.ambient.weight):
                raise ModelError(f"{self.label}: branch function is not homogeneous of degree "
                                 f"{2 * self.ambient.weight}")
        elif isinstance(self.ambient, Proj):
            for f in self.equations + ((self.cover,) if self.cover is not None else ()):
                if not f.is_homogeneous():
                    raise ModelError(f"{self.label}: equation is not homogeneous")
            if self.cover is not None and self.cover.total_degree() % 2:
                raise ModelError("cover function must have even degree")
        else:
            blocks = self.ambient.blocks()
            for f in self.equations + ((self.cover,) if self.cover is not None else ()):
                if self.multidegree(f) is None:
                    raise ModelError(f"{self.label}: equation is not multihomogeneous")
            if self.cover is not None and any(d % 2 for d in self.multidegree(self.cover)):
                raise ModelError("cover function must have even multidegree")
            del blocks
        if self.names is not None and len(self.names) != n:
            raise ModelError("one name per coordinate required")

    def multidegree(self, f: MultiPoly) -> tuple[int, ...] | None:
        if not isinstance(self.ambient, MultiProj):
            return (f.total_degree(),) if f.is_homogeneous() else None
        blocks = self.ambient.blocks()
        degs = None
        for e in f.exponents():
            d = tuple(sum(e[i] for i in b) for b in blocks)
            if degs is None:
                degs = d
            elif d != degs:
                return None
        return degs if degs is not None else tuple(0 for _ in blocks)

    @property
    def degrees(self) -> list[tuple[int, ...]]:
        return [self.multidegree(f) for f in self.equations]

    @property
    def dimension(self) -> int:
        """Expected dimension (ambient dimension minus number of equations)."""
        if isinstance(self.ambient, WeightedProj):
            return self.ambient.units - 1
        return self.ambient.dimension - len(self.equations)

    @property
    def kind(self) -> str:
        if isinstance(self.ambient, WeightedProj):
            return "weighted"
        if isinstance(self.ambient, MultiProj):
            return "multiproj"
        return "proj"

    def denominators(self) -> list[int]:
        extra = [self.cover] if self.cover is not None else []
        return [f.den for f in list(self.equations) + extra]

    def invalid_prime(self, p: int) -> bool:
        return p == 2 or p in self.bad_primes or any(d % p == 0 for d in self.denominators())

    def to_json(self) -> dict:
        out = {
            "label": self.label,
            "ambient": self.ambient.to_json(),
            "equations": [f.to_json(self.names) for f in self.equations],
        }
        if self.cover is not None:
            out["cover"] = self.cover.to_json(self.names)
        if self.bad_primes:
            out["bad_primes"] = sorted(self.bad_primes)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "VarietyModel":
        try:
            ambient = ambient_from_json(obj["ambient"])
            eqs = tuple(MultiPoly.from_json(e) for e in obj["equations"])
            cover = MultiPoly.from_json(obj["cover"]) if obj.get("cover") else None
            names = None
            if obj["equations"] and "vars" in obj["equations"][0]:
                names = tuple(obj["equations"][0]["vars"])
            return cls(ambient, eqs, obj.get("label", ""), names, cover,
                       frozenset(obj.get("bad_primes", ())))
        except (KeyError, TypeError, PolyError) as exc:
            raise ModelError(f"malformed model JSON: {exc}") from exc

    def content_hash(self) -> str:
        """Hash of the mathematical content only (labels and names excluded)."""
        payload = {
            "ambient": self.ambient.to_json(),
            "equations": [f.canonical_key() for f in self.equations],
            "cover": self.cover.canonical_key() if self.cover is not None else None,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def hypersurface(f: MultiPoly, label: str = "", names: Sequence[str] | None = None) -> VarietyModel:
    return VarietyModel(Proj(f.arity - 1), (f,), label, tuple(names) if names else None)


def double_cover(f: MultiPoly, label: str = "", names: Sequence[str] | None = None) -> VarietyModel:
    d = f.total_degree()
    if d % 2:
        raise ModelError("branch function must have even degree")
    return VarietyModel(WeightedProj(d // 2, f.arity), (f,), label, tuple(names) if names else None)

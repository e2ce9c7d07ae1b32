"""Graphs, Kirchhoff polynomials, the graph matrix and Dodgson polynomials."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .multipoly import MultiPoly, pack

MAX_EXPANSION_EDGES = 24
MAX_ELIGIBILITY_EDGES = 24


class GraphError(ValueError):
    pass


class UnknownFixture(GraphError):
    pass


class DisconnectedGraph(GraphError):
    pass


@dataclass(frozen=True)
class Graph:
    """Labeled multigraph; edge i is oriented u -> v and carries variable x_i."""

    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    name: str | None = None
    regular: int | None = field(default=None, compare=False)

    def __post_init__(self):
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise GraphError("duplicate vertex labels")
        for u, v in self.edges:
            if u not in vs or v not in vs:
                raise GraphError(f"edge ({u},{v}) has an endpoint outside the vertex set")
        if self.regular is not None:
            bad = {v: d for v, d in self.degrees().items() if d != self.regular}
            if bad:
                raise GraphError(f"graph {self.name} is not {self.regular}-regular: {bad}")

    @classmethod
    def from_edges(cls, vertex_count: int, edges: Iterable[Sequence[int]], name: str | None = None,
                   regular: int | None = None) -> "Graph":
        if vertex_count < 1:
            raise GraphError("vertex_count must be positive")
        return cls(tuple(range(1, vertex_count + 1)), tuple((int(u), int(v)) for u, v in edges),
                   name, regular)

    @classmethod
    def from_json(cls, obj: dict) -> "Graph":
        try:
            return cls.from_edges(obj["vertices"], obj["edges"], obj.get("name"), obj.get("regular"))
        except (KeyError, TypeError) as exc:
            raise GraphError(f"malformed graph JSON: {exc}") from exc

    def to_json(self) -> dict:
        if self.vertices != tuple(range(1, len(self.vertices) + 1)):
            raise GraphError("only graphs with vertices 1..m can be serialized")
        return {"name": self.name, "vertices": len(self.vertices), "edges": [list(e) for e in self.edges]}

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degrees(self) -> dict[int, int]:
        d = {v: 0 for v in self.vertices}
        for u, v in self.edges:
            d[u] += 1
            d[v] += 1
        return d

    def edge_index(self, u: int, v: int) -> int:
        for i, e in enumerate(self.edges):
            if e == (u, v) or e == (v, u):
                return i
        raise GraphError(f"no edge ({u},{v}) in {self.name or 'graph'}")

    def edge_label(self, i: int) -> str:
        u, v = self.edges[i]
        return f"({u},{v})"

    def components(self, edge_subset: Iterable[int] | None = None) -> int:
        parent = {v: v for v in self.vertices}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        count = len(self.vertices)
        for i in (range(self.edge_count) if edge_subset is None else edge_subset):
            u, v = self.edges[i]
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                count -= 1
        return count

    def is_connected(self) -> bool:
        return self.components() == 1

    @cached_property
    def _signature(self) -> str:
        return json.dumps([self.vertices, self.edges])


def _fixture_names() -> list[str]:
    root = resources.files("phi4forms") / "data" / "graphs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_graph_fixture(name: str) -> Graph:
    root = resources.files("phi4forms") / "data" / "graphs"
    path = root / f"{name}.json"
    if not path.is_file():
        raise UnknownFixture(f"unknown graph fixture {name!r}; known: {', '.join(_fixture_names())}")
    return Graph.from_json(json.loads(path.read_text()))


def delete_vertex(g: Graph, v: int) -> Graph:
    if v not in g.vertices:
        raise GraphError(f"vertex {v} not in graph")
    name = f"{g.name}-v{v}" if g.name else None
    return Graph(tuple(x for x in g.vertices if x != v),
                 tuple(e for e in g.edges if v not in e), name)


def betti_h(g: Graph) -> int:
    return g.edge_count - g.vertex_count + g.components()


def _subgraph_betti(g: Graph, subset: Sequence[int]) -> int:
    verts = {x for i in subset for x in g.edges[i]}
    parent = {v: v for v in verts}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    comps = len(verts)
    for i in subset:
        u, v = g.edges[i]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            comps -= 1
    return len(subset) - len(verts) + comps


def is_phi4_eligible(g: Graph) -> bool:
    """N = 2h and N_gamma > 2 h_gamma for every nonempty strict edge subset."""
    n = g.edge_count
    if n > MAX_ELIGIBILITY_EDGES:
        raise GraphError(f"{n} edges: exhaustive subgraph check limited to {MAX_ELIGIBILITY_EDGES}")
    if n != 2 * betti_h(g):
        return False
    for k in range(1, n):
        for subset in combinations(range(n), k):
            if k <= 2 * _subgraph_betti(g, subset):
                return False
    return True


def spanning_trees(g: Graph) -> list[tuple[int, ...]]:
    """All spanning trees as sorted tuples of edge indices."""
    if not g.is_connected():
        raise DisconnectedGraph("graph is disconnected")
    k = g.vertex_count - 1
    return [s for s in combinations(range(g.edge_count), k) if g.components(s) == 1]


def spanning_tree_count(g: Graph) -> int:
    """Count by the matrix-tree theorem on the Laplacian (exact integer determinant)."""
    if not g.is_connected():
        raise DisconnectedGraph("graph is disconnected")
    idx = {v: i for i, v in enumerate(g.vertices)}
    m = g.vertex_count
    lap = [[0] * m for _ in range(m)]
    for u, v in g.edges:
        if u == v:
            continue
        a, b = idx[u], idx[v]
        lap[a][a] += 1
        lap[b][b] += 1
        lap[a][b] -= 1
        lap[b][a] -= 1
    return bareiss_det([row[1:] for row in lap[1:]])


def kirchhoff_polynomial(g: Graph) -> MultiPoly:
    """Sum over spanning trees T of the product of variables of edges not in T."""
    n = g.edge_count
    terms = {}
    for tree in spanning_trees(g):
        e = [1] * n
        for i in tree:
            e[i] = 0
        terms[pack(e)] = 1
    return MultiPoly(n, terms, 1)


def bareiss_det(rows: Sequence[Sequence[int]]) -> int:
    """Exact fraction-free determinant of a square integer matrix."""
    a = [list(r) for r in rows]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k]:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * a[-1][-1]


@dataclass(frozen=True)
class GraphMatrix:
    """M_G: edge variables on the first n diagonal entries, oriented incidence blocks.

    Rows and columns 0..n-1 are edges, n.. are the vertices other than ``dropped_vertex``.
    """

    edge_count: int
    row_vertices: tuple[int, ...]
    dropped_vertex: int
    incidence: np.ndarray  # n x (m-1), entries in {-1, 0, 1}

    @property
    def size(self) -> int:
        return self.edge_count + len(self.row_vertices)

    def integer_part(self) -> np.ndarray:
        n, k = self.edge_count, len(self.row_vertices)
        out = np.zeros((n + k, n + k), dtype=np.int64)
        out[:n, n:] = self.incidence
        out[n:, :n] = self.incidence.T
        return out

    def entries(self) -> list[list[MultiPoly | int]]:
        """Symbolic entries (MultiPoly on the diagonal, ints elsewhere)."""
        n = self.edge_count
        base = self.integer_part().tolist()
        for i in range(n):
            base[i][i] = MultiPoly.var(n, i)
        return base

    def determinant(self) -> MultiPoly:
        return self.minor((), (), ())

    def minor(self, rows_removed: Iterable[int], cols_removed: Iterable[int],
              zeroed: Iterable[int]) -> MultiPoly:
        """det of the matrix with edge rows/cols removed and some variables set to zero.

        Expands along the diagonal variables: for every subset S of surviving diagonal
        variables the coefficient of prod_{S} x_i is a signed complementary integer minor.
        Only |S| = (n - (m-1)) - |rows_removed| can contribute, since the remaining
        matrix has zero diagonal blocks and is square only for that size.
        """
        n = self.edge_count
        k = len(self.row_vertices)
        I, J, K = sorted(set(rows_removed)), sorted(set(cols_removed)), set(zeroed)
        if len(I) != len(J):
            raise GraphError("|I| must equal |J|")
        for s in (I, J, K):
            for i in s:
                if not 0 <= i < n:
                    raise GraphError(f"edge index {i} out of range")
        if n > MAX_EXPANSION_EDGES:
            raise GraphError(f"diagonal-subset expansion limited to {MAX_EXPANSION_EDGES} edges")
        row_edges = [e for e in range(n) if e not in set(I)]
        col_edges = [e for e in range(n) if e not in set(J)]
        row_pos = {e: i for i, e in enumerate(row_edges)}
        col_pos = {e: i for i, e in enumerate(col_edges)}
        avail = [e for e in range(n) if e not in set(I) and e not in set(J) and e not in K]
        size = len(row_edges) - k
        if size < 0 or size > len(avail):
            return MultiPoly.zero(n)
        subsets = list(combinations(avail, size))
        if not subsets:
            return MultiPoly.zero(n)
        inc = self.incidence
        # remaining matrix is [[0, A], [B, 0]] with A, B square of order k
        sign_block = -1 if k % 2 else 1
        terms: dict[int, int] = {}
        chunk = 4096
        for start in range(0, len(subsets), chunk):
            batch = subsets[start:start + chunk]
            a_rows = np.array([[e for e in row_edges if e not in s] for s in batch])
            b_cols = np.array([[e for e in col_edges if e not in s] for s in batch])
            if k == 0:
                da = np.ones(len(batch))
                db = np.ones(len(batch))
            else:
                da = np.linalg.det(inc[a_rows].astype(float))
                db = np.linalg.det(inc[b_cols].astype(float))
            da_i = np.rint(da).astype(np.int64)
            db_i = np.rint(db).astype(np.int64)
            if np.max(np.abs(da - da_i), initial=0) > 1e-6 or np.max(np.abs(db - db_i), initial=0) > 1e-6:
                raise ArithmeticError("non-integral incidence minor")
            prod = da_i * db_i
            for s, v in zip(batch, prod.tolist()):
                if not v:
                    continue
                sgn = sum(row_pos[e] + col_pos[e] for e in s)
                val = v * sign_block * (-1 if sgn % 2 else 1)
                exps = [0] * n
                for e in s:
                    exps[e] = 1
                terms[pack(exps)] = val
        return MultiPoly(n, terms, 1)


def graph_matrix(g: Graph, drop: int | None = None) -> GraphMatrix:
    """Build M_G, deleting the row/column of vertex ``drop`` (default: the last vertex)."""
    if drop is None:
        drop = g.vertices[-1]
    if drop not in g.vertices:
        raise GraphError(f"vertex {drop} not in graph")
    rv = tuple(v for v in g.vertices if v != drop)
    col = {v: j for j, v in enumerate(rv)}
    inc = np.zeros((g.edge_count, len(rv)), dtype=np.int64)
    for i, (u, v) in enumerate(g.edges):
        if u == v:
            continue
        if u in col:
            inc[i, col[u]] += 1
        if v in col:
            inc[i, col[v]] -= 1
    return GraphMatrix(g.edge_count, rv, drop, inc)


@dataclass(frozen=True)
class DodgsonSpec:
    I: tuple[int, ...]
    J: tuple[int, ...]
    K: tuple[int, ...] = ()

    def __post_init__(self):
        if len(set(self.I)) != len(set(self.J)):
            raise GraphError("|I| must equal |J|")


def dodgson(g: Graph, spec: DodgsonSpec, drop: int | None = None) -> MultiPoly:
    for s in (spec.I, spec.J, spec.K):
        for i in s:
            if not 0 <= i < g.edge_count:
                raise GraphError(f"edge index {i} out of range")
    return graph_matrix(g, drop).minor(spec.I, spec.J, spec.K)


def five_invariant(g: Graph, edges: Sequence[int], drop: int | None = None) -> MultiPoly:
    """det [[Psi^{ij,kl}_m, Psi^{ik,jl}_m], [Psi^{ijm,klm}, Psi^{ikm,jlm}]]."""
    if len(edges) != 5 or len(set(edges)) != 5:
        raise GraphError("five distinct edges required")
    for e in edges:
        if not 0 <= e < g.edge_count:
            raise GraphError(f"edge index {e} out of range")
    i, j, k, l, m = edges
    mat = graph_matrix(g, drop)
    a = mat.minor((i, j), (k, l), (m,))
    b = mat.minor((i, k), (j, l), (m,))
    c = mat.minor((i, j, m), (k, l, m), ())
    d = mat.minor((i, k, m), (j, l, m), ())
    return a * d - b * c


def edges_by_label(g: Graph, labels: Iterable[Sequence[int]]) -> list[int]:
    return [g.edge_index(u, v) for u, v in labels]

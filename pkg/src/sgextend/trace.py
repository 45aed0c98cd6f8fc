"""Kron reduction of conductance networks.

Eliminating a vertex v of a network with conductances c replaces it by the
couplings c_xy + c_xv c_yv / sum_z c_zv between its neighbours; iterating
yields the traced quadratic form of the energy minimizer on the kept set.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Hashable, Iterable, Mapping, Sequence

from .core import LevelGraph, VertexId, build_level_graph, graph_distance_avoiding
from .linalg import min_degree_order


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class Network:
    """Symmetric nonnegative conductances on an ordered label list.

    Only positive couplings are stored; ``net[x, y]`` returns 0 otherwise.
    """

    labels: tuple
    couplings: Mapping[Hashable, Mapping[Hashable, Fraction]]

    @classmethod
    def from_pairs(cls, labels: Iterable, pairs: Iterable[tuple]) -> Network:
        labels = tuple(labels)
        adj: dict = {x: {} for x in labels}
        if len(adj) != len(labels):
            raise NetworkError("duplicate labels")
        for x, y, c in pairs:
            if x == y:
                raise NetworkError(f"self-loop at {x!r}")
            if c < 0:
                raise NetworkError(f"negative conductance {c} on {x!r}-{y!r}")
            if c == 0:
                continue
            c = adj[x].get(y, 0) + c
            adj[x][y] = c
            adj[y][x] = c
        return cls(labels, adj)

    @classmethod
    def from_matrix(cls, labels: Sequence, matrix: Sequence[Sequence]) -> Network:
        n = len(labels)
        pairs = []
        for i in range(n):
            for j in range(n):
                if matrix[i][j] != matrix[j][i]:
                    raise NetworkError("conductance matrix is not symmetric")
                if i < j:
                    pairs.append((labels[i], labels[j], matrix[i][j]))
            if matrix[i][i] != 0:
                raise NetworkError("diagonal must be zero")
        return cls.from_pairs(labels, pairs)

    @classmethod
    def from_level_graph(cls, g: LevelGraph) -> Network:
        verts = g.vertices
        return cls.from_pairs(verts, ((verts[a], verts[b], g.conductance) for a, b in g.edges))

    def __getitem__(self, pair: tuple) -> Fraction:
        x, y = pair
        if x not in self.couplings or y not in self.couplings:
            raise NetworkError(f"unknown label in {pair!r}")
        return self.couplings[x].get(y, Fraction(0))

    def __contains__(self, label: object) -> bool:
        return label in self.couplings

    def __len__(self) -> int:
        return len(self.labels)

    def pairs(self) -> list[tuple]:
        """Upper-triangular (x, y, c) in label order, zeros included."""
        out = []
        for i, x in enumerate(self.labels):
            row = self.couplings[x]
            for y in self.labels[i + 1 :]:
                out.append((x, y, row.get(y, Fraction(0))))
        return out

    def matrix(self) -> list[list[Fraction]]:
        return [[self[x, y] for y in self.labels] for x in self.labels]

    def laplacian(self) -> list[list[Fraction]]:
        """Matrix of the quadratic form sum c_xy (u_x - u_y)^2."""
        rows = []
        for x in self.labels:
            row = [-self[x, y] for y in self.labels]
            row[self.labels.index(x)] = sum(self.couplings[x].values(), Fraction(0))
            rows.append(row)
        return rows

    def energy(self, u: Mapping) -> Fraction:
        total = Fraction(0)
        for x, y, c in self.pairs():
            if c:
                total += c * (u[x] - u[y]) ** 2
        return total

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        if set(self.labels) != set(other.labels):
            return False
        return all(self.couplings[x] == other.couplings[x] for x in self.labels)

    __hash__ = None


def _eliminate_inplace(adj: dict, v) -> None:
    row = adj.pop(v)
    for x in row:
        del adj[x][v]
    total = sum(row.values())
    if total == 0:
        return
    items = list(row.items())
    for i, (x, cx) in enumerate(items):
        ax = adj[x]
        for y, cy in items[i + 1 :]:
            c = ax.get(y, 0) + cx * cy / total
            ax[y] = c
            adj[y][x] = c


def eliminate_vertex(net: Network, v) -> Network:
    if v not in net:
        raise NetworkError(f"{v!r} is not in the network")
    adj = {x: dict(row) for x, row in net.couplings.items()}
    _eliminate_inplace(adj, v)
    return Network(tuple(x for x in net.labels if x != v), adj)


def trace_to(net: Network, keep: Iterable, order: Sequence | None = None) -> Network:
    """Eliminate every label outside ``keep``.

    Uses a minimum-degree order unless ``order`` lists the labels to remove.
    """
    keep = set(keep)
    missing = keep - set(net.labels)
    if missing:
        raise NetworkError(f"labels not in network: {sorted(map(repr, missing))}")
    if len(keep) < 2:
        raise NetworkError("keep at least two labels")
    drop = [x for x in net.labels if x not in keep]
    if order is None:
        order = min_degree_order(net.couplings, drop)
    elif sorted(map(repr, order)) != sorted(map(repr, drop)):
        raise NetworkError("order must list exactly the eliminated labels")
    adj = {x: dict(row) for x, row in net.couplings.items()}
    for v in order:
        _eliminate_inplace(adj, v)
    return Network(tuple(x for x in net.labels if x in keep), adj)


@lru_cache(maxsize=64)
def _effective_form_cached(m: int, keep: frozenset) -> Network:
    g = build_level_graph(m)
    return trace_to(Network.from_level_graph(g), keep)


def effective_form(m: int, points: Iterable[VertexId]) -> Network:
    """Trace of the V_m energy onto ``points`` (lifted to level m)."""
    pts = []
    for p in points:
        if p.level > m:
            raise NetworkError(f"{p} is not a point of V_{m}")
        pts.append(p.lift(m))
    g = build_level_graph(m)
    for p in pts:
        g.idx(p)
    net = _effective_form_cached(m, frozenset(pts))
    return Network(tuple(dict.fromkeys(pts)), net.couplings)


def effective_conductance(m: int, x: VertexId, y: VertexId) -> Fraction:
    """R(x, y)^-1 computed on V_m."""
    return effective_form(m, [x, y])[x.lift(m), y.lift(m)]


def is_zero_coefficient(m: int, points: Iterable[VertexId], x: VertexId, y: VertexId) -> bool:
    """True iff every V_m path from x to y meets another point of the set."""
    pts = {p.lift(m) for p in points}
    x, y = x.lift(m), y.lift(m)
    if x not in pts or y not in pts:
        raise NetworkError("x and y must belong to the point set")
    return graph_distance_avoiding(build_level_graph(m), x, y, pts) is None


def lower_bound_sequences(n: int) -> tuple[list[Fraction], list[Fraction]]:
    """First n terms of the sequences (a_i), (b_i) with a_1 = b_1 = 1."""
    if n < 1:
        raise ValueError("need at least one term")
    a, b = [Fraction(1)], [Fraction(1)]
    for i in range(1, n):
        a.append(a[-1] / ((i + 3) * b[-1]))
        b.append(4 * (1 + b[-1] / a[-2]))
    return a, b


def lower_bound_value(n: int) -> Fraction:
    """a_N with c^A_{x,y} >= a_N (5/3)^m when the avoiding distance is N."""
    return lower_bound_sequences(n)[0][-1]

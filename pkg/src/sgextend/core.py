"""Level-m graph approximations V_m of the Sierpinski gasket.

A point of V_m is addressed by a word w of length m over {0, 1, 2} and a
corner index i, standing for F_w q_i.  Junction points carry two such
addresses; the canonical one is the lexicographically smallest pair.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable

Word = tuple[int, ...]

ENERGY_RENORMALIZATION = Fraction(5, 3)


class AddressError(ValueError):
    """Raised for malformed words, corners or point addresses."""


@dataclass(frozen=True, order=True)
class VertexId:
    """Canonical address (word, corner) of a point of V_m, m = len(word).

    Build instances through :func:`canonicalize` or :func:`parse_address`;
    the constructor itself does not canonicalize.
    """

    word: Word
    corner: int

    @property
    def level(self) -> int:
        return len(self.word)

    def lift(self, m: int) -> VertexId:
        """The same point addressed at level ``m >= self.level``."""
        if m < self.level:
            raise AddressError(f"cannot lift level-{self.level} vertex to level {m}")
        return canonicalize(self.word + (self.corner,) * (m - self.level), self.corner)

    def coords(self) -> tuple[Fraction, Fraction, Fraction]:
        """Barycentric coordinates with respect to (q_0, q_1, q_2)."""
        m = self.level
        scaled = [0, 0, 0]
        scaled[self.corner] += 1
        for k, d in enumerate(self.word, start=1):
            scaled[d] += 2 ** (m - k)
        return tuple(Fraction(s, 2**m) for s in scaled)

    def is_boundary(self) -> bool:
        return all(d == self.corner for d in self.word)

    def __str__(self) -> str:
        return format_address(self)


def _check(word: Iterable[int], corner: int) -> Word:
    word = tuple(word)
    if corner not in (0, 1, 2):
        raise AddressError(f"corner must be 0, 1 or 2, got {corner!r}")
    for d in word:
        if d not in (0, 1, 2):
            raise AddressError(f"invalid digit {d!r} in word {word!r}")
    return word


def alternate_address(word: Word, corner: int) -> tuple[Word, int] | None:
    """The other address of a junction point, or None for boundary points."""
    k = len(word)
    while k > 0 and word[k - 1] == corner:
        k -= 1
    if k == 0:
        return None
    # word = v j i^r with j != i, and F_v F_j q_i = F_v F_i q_j
    j = word[k - 1]
    r = len(word) - k
    return word[: k - 1] + (corner,) + (j,) * r, j


def canonicalize(word: Iterable[int], corner: int) -> VertexId:
    word = _check(word, corner)
    other = alternate_address(word, corner)
    if other is not None and other < (word, corner):
        return VertexId(*other)
    return VertexId(word, corner)


def boundary_point(i: int, m: int = 0) -> VertexId:
    return VertexId((i,) * m, i)


def format_address(v: VertexId) -> str:
    return "".join(map(str, v.word)) + f":q{v.corner}"


def parse_address(text: str, level: int | None = None) -> VertexId:
    """Parse ``"<digits>:q<i>"``; lift to ``level`` when given."""
    text = text.strip()
    digits, sep, tail = text.partition(":")
    if not sep or not tail.startswith("q") or len(tail) != 2 or not tail[1].isdigit():
        raise AddressError(f"malformed address {text!r}")
    if digits and not digits.isdigit():
        raise AddressError(f"malformed address {text!r}")
    v = canonicalize((int(c) for c in digits), int(tail[1]))
    if level is not None:
        v = v.lift(level)
    return v


@dataclass(frozen=True)
class LevelGraph:
    """The graph V_m with uniform edge conductance (5/3)^m.

    ``cells`` lists the m-cells in lexicographic word order together with the
    vertex indices of their corners F_w q_0, F_w q_1, F_w q_2.
    """

    level: int
    vertices: tuple[VertexId, ...]
    index: dict
    edges: tuple[tuple[int, int], ...]
    cells: tuple[tuple[Word, tuple[int, int, int]], ...]
    neighbors: tuple[tuple[int, ...], ...]
    conductance: Fraction
    boundary: tuple[int, int, int]

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v: object) -> bool:
        return v in self.index

    def idx(self, v: VertexId) -> int:
        try:
            return self.index[v]
        except KeyError:
            raise AddressError(f"{v} is not a vertex of V_{self.level}") from None

    def cell_count(self, i: int) -> int:
        """Number of m-cells containing vertex i (1 on V_0, 2 elsewhere)."""
        return 1 if i in self.boundary else 2


@lru_cache(maxsize=None)
def build_level_graph(m: int) -> LevelGraph:
    if m < 0:
        raise ValueError("level must be non-negative")
    cell_corners = []
    seen: dict[VertexId, None] = {}
    for w in product((0, 1, 2), repeat=m):
        corners = tuple(canonicalize(w, i) for i in range(3))
        cell_corners.append((w, corners))
        for v in corners:
            seen.setdefault(v)
    vertices = tuple(sorted(seen))
    index = {v: k for k, v in enumerate(vertices)}
    cells = tuple((w, tuple(index[v] for v in cs)) for w, cs in cell_corners)
    edges = []
    adj: list[list[int]] = [[] for _ in vertices]
    for _, (a, b, c) in cells:
        for x, y in ((a, b), (b, c), (a, c)):
            edges.append((min(x, y), max(x, y)))
            adj[x].append(y)
            adj[y].append(x)
    boundary = tuple(index[boundary_point(i, m)] for i in range(3))
    return LevelGraph(
        level=m,
        vertices=vertices,
        index=index,
        edges=tuple(edges),
        cells=cells,
        neighbors=tuple(tuple(sorted(a)) for a in adj),
        conductance=ENERGY_RENORMALIZATION**m,
        boundary=boundary,
    )


def vertex_count(m: int) -> int:
    return (3 ** (m + 1) + 3) // 2


def graph_distance_avoiding(
    g: LevelGraph, x: VertexId, y: VertexId, avoid: Iterable[VertexId] = ()
) -> int | None:
    """Shortest edge-path length from x to y whose interior misses ``avoid``.

    Returns None when every path from x to y meets ``avoid - {x, y}``.
    """
    s, t = g.idx(x), g.idx(y)
    if s == t:
        raise ValueError("x and y must differ")
    blocked = {g.idx(a) for a in avoid if a in g.index} - {s, t}
    dist = {s: 0}
    queue = deque([s])
    while queue:
        v = queue.popleft()
        for nb in g.neighbors[v]:
            if nb in dist or nb in blocked:
                continue
            dist[nb] = dist[v] + 1
            if nb == t:
                return dist[nb]
            queue.append(nb)
    return None


def bottom_row(m: int) -> list[VertexId]:
    """Points x_0 = q_1, ..., x_{2^m} = q_2 on the side opposite q_0."""
    if m < 0:
        raise ValueError("level must be non-negative")
    # x_j has barycentric coordinates (0, 1 - j/2^m, j/2^m)
    row = []
    for j in range(2**m + 1):
        if j == 2**m:
            row.append(boundary_point(2, m))
            continue
        # F_w q_1 with w the binary digits of j over {1, 2}
        bits = format(j, f"0{m}b") if m else ""
        word = tuple(2 if b == "1" else 1 for b in bits)
        row.append(canonicalize(word, 1))
    return row


def measure_weights(m: int) -> dict[VertexId, Fraction]:
    """Vertex weights approximating the standard self-similar measure.

    Each m-cell spreads its mass 3^-m equally over its three corners.
    """
    g = build_level_graph(m)
    share = Fraction(1, 3 ** (m + 1))
    weights = dict.fromkeys(g.vertices, Fraction(0))
    for _, corners in g.cells:
        for i in corners:
            weights[g.vertices[i]] += share
    return weights

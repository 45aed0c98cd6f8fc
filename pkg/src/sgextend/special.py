"""Expected conductances for three families of junction sets.

* beta sets: six points of V_2 and their self-similar copies;
* new-level sets V_n minus V_{n-1};
* the bottom row of V_n, with or without the top point q_0.

Each family has closed forms or recurrences that are checked against the
Kron-reduction oracle :func:`sgextend.trace.effective_form`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .core import (
    VertexId,
    boundary_point,
    bottom_row,
    build_level_graph,
    canonicalize,
    graph_distance_avoiding,
)

FIVE_THIRDS = Fraction(5, 3)


class PointSetError(ValueError):
    pass


# --- beta sets ---------------------------------------------------------------

def _beta0_labeled() -> dict[VertexId, str]:
    return {
        boundary_point(0, 2): "q0",
        boundary_point(1, 2): "q1",
        boundary_point(2, 2): "q2",
        canonicalize((0, 2), 1): "p0",
        canonicalize((1, 0), 2): "p1",
        canonicalize((2, 1), 0): "p2",
    }


BETA0_TABLE = {
    "qp_same": Fraction(410, 159),
    "qq": Fraction(5, 53),
    "qp_other": Fraction(20, 53),
    "pp": Fraction(80, 53),
}


def _beta0_value(s: str, t: str) -> Fraction:
    if s[0] == t[0]:
        return BETA0_TABLE["qq"] if s[0] == "q" else BETA0_TABLE["pp"]
    return BETA0_TABLE["qp_same"] if s[1] == t[1] else BETA0_TABLE["qp_other"]


def _apply_word(w: tuple, v: VertexId) -> VertexId:
    return canonicalize(tuple(w) + v.word, v.corner)


@lru_cache(maxsize=None)
def _beta_copies(m: int) -> dict[tuple, dict[VertexId, str]]:
    """Map each word w of length m to {F_w p: label of p} for p in beta_0."""
    from itertools import product

    base = _beta0_labeled()
    return {w: {_apply_word(w, p): s for p, s in base.items()} for w in product((0, 1, 2), repeat=m)}


def beta_points(m: int) -> list[VertexId]:
    """beta_m as canonical ids of V_{m+2}, sorted."""
    if m < 0:
        raise ValueError("level must be non-negative")
    pts = set()
    for copy in _beta_copies(m).values():
        pts.update(copy)
    return sorted(pts)


def beta_expected(m: int, x: VertexId, y: VertexId) -> Fraction:
    """(5/3)^m times the beta_0 value when x, y share an m-cell copy, else 0."""
    x, y = x.lift(m + 2), y.lift(m + 2)
    for copy in _beta_copies(m).values():
        if x in copy and y in copy:
            return FIVE_THIRDS**m * _beta0_value(copy[x], copy[y])
    members = set(beta_points(m))
    if x not in members or y not in members:
        raise PointSetError("points are not in beta_m")
    return Fraction(0)


# --- new-level sets ----------------------------------------------------------

def new_level_points(n: int) -> list[VertexId]:
    if n < 1:
        raise ValueError("n must be at least 1")
    old = {v.lift(n) for v in build_level_graph(n - 1).vertices}
    return [v for v in build_level_graph(n).vertices if v not in old]


# Conventional numbering 1..9 of the level-2 new points, chosen so that the
# three published coefficient classes read
#   25/6:   (1,4) (2,8) (6,9)
#   125/36: (4,7) (1,7) (3,9) (3,6) (5,8) (5,2)
#   25/36:  (3,4) (3,7) (3,5) (3,8) (5,7) (5,1) (5,9) (7,6) (7,2) (4,6) (1,2) (8,9)
# Labels 7, 3, 5 are the inner points of the cells F_0, F_1, F_2.
NEW_LEVEL_2_LABELS = {
    canonicalize((0, 0), 2): 1,
    canonicalize((2, 2), 0): 2,
    canonicalize((1, 0), 2): 3,
    canonicalize((0, 0), 1): 4,
    canonicalize((2, 0), 1): 5,
    canonicalize((1, 1), 0): 6,
    canonicalize((0, 1), 2): 7,
    canonicalize((2, 2), 1): 8,
    canonicalize((1, 1), 2): 9,
}

_NEW_LEVEL_2_CLASSES = {
    Fraction(25, 6): [(1, 4), (2, 8), (6, 9)],
    Fraction(125, 36): [(4, 7), (1, 7), (3, 9), (3, 6), (5, 8), (5, 2)],
    Fraction(25, 36): [
        (3, 4), (3, 7), (3, 5), (3, 8), (5, 7), (5, 1),
        (5, 9), (7, 6), (7, 2), (4, 6), (1, 2), (8, 9),
    ],
}

NEW_LEVEL_2_TABLE = {
    frozenset(pair): value for value, pairs in _NEW_LEVEL_2_CLASSES.items() for pair in pairs
}


def junction_neighbors(i: int, n: int) -> set[VertexId]:
    """D^i_n: the four V_n neighbours of x_i = F_{i-1} q_{i+1}."""
    g = build_level_graph(n)
    x = canonicalize(((i - 1) % 3,), (i + 1) % 3).lift(n)
    return {g.vertices[k] for k in g.neighbors[g.idx(x)]}


def _trimmed_level(v: VertexId) -> int:
    """Smallest level at which v is a vertex."""
    w = list(v.word)
    while w and w[-1] == v.corner:
        w.pop()
    return len(w)


def new_level_expected(n: int, x: VertexId, y: VertexId) -> Fraction | None:
    """Coefficient c^n_{x,y} on V_n minus V_{n-1}, or None when no rule applies."""
    if n < 1:
        raise ValueError("n must be at least 1")
    for v in (x, y):
        if v.level > n or _trimmed_level(v) != n:
            raise PointSetError(f"{v} is not a level-{n} new point")
    x, y = x.lift(n), y.lift(n)
    if x == y:
        raise PointSetError("points must differ")
    if n == 1:
        return Fraction(5, 2)
    if n == 2:
        return NEW_LEVEL_2_TABLE.get(frozenset((NEW_LEVEL_2_LABELS[x], NEW_LEVEL_2_LABELS[y])), Fraction(0))
    g = build_level_graph(n)
    d = graph_distance_avoiding(g, x, y)
    if d is None or d >= 3:
        return Fraction(0)
    scale = FIVE_THIRDS**n
    for i in range(3):
        nb = junction_neighbors(i, n)
        if x in nb and y in nb:
            return scale * (Fraction(5, 4) if d == 1 else Fraction(1, 4))
    for i in range(3):
        if x.word[0] == i and y.word[0] == i:
            excluded = junction_neighbors((i + 1) % 3, n) | junction_neighbors((i - 1) % 3, n)
            if x in excluded or y in excluded:
                return None
            inner = new_level_expected(n - 1, canonicalize(x.word[1:], x.corner), canonicalize(y.word[1:], y.corner))
            return None if inner is None else FIVE_THIRDS * inner
    return None


# --- bottom row --------------------------------------------------------------

def top_a(n: int) -> Fraction:
    """a_n = c^n_{q_0, x_0}."""
    return Fraction(7 * 5**n, 3**n + 6 * 10**n)


def cross_b(n: int) -> Fraction:
    """b_n = c^n_{x_0, x_{2^n}} with the top point kept."""
    return Fraction(49 * 25**n, (5 * 3**n + 16 * 10**n) * (3**n + 6 * 10**n))


def tilde_b(n: int) -> Fraction:
    """c^n_{x_0, x_{2^n}} once the top point is eliminated."""
    return Fraction(35 * 5**n, 10 * 6**n + 32 * 20**n)


def _triple(k: int) -> tuple[int, int, int]:
    return 3**k + 6 * 10**k, 5 * 3**k + 16 * 10**k, 5 * 3**k + 9 * 10**k


def interior_increment(n: int) -> Fraction:
    """Additive term in c^{n+1}_{i,j} = (5/3) c^n_{i,j} + term, 0 < i < j < 2^n."""
    k = n + 1
    p, q, r = _triple(k)
    return Fraction(196 * 25**k * (10 * 3**k + 39 * 10**k), p * q * r)


def end_pair_l(n: int) -> Fraction:
    """l_n = c^n_{0,1}."""
    if n < 1:
        raise ValueError("n must be at least 1")
    val = Fraction(20, 9)
    for k in range(1, n):
        kk = k + 1
        p, q, r = _triple(kk)
        val = FIVE_THIRDS * val + Fraction(98 * 25**kk * (10 * 3**kk + 39 * 10**kk), p * q * r)
    return val


def middle_pair_m(n: int) -> Fraction:
    """m_n = c^n_{2^{n-1}-1, 2^{n-1}}."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n == 1:
        return Fraction(20, 9)
    k = n
    p, _, r = _triple(k)
    return FIVE_THIRDS * end_pair_l(n - 1) + Fraction(294 * 25**k, p * r)


@dataclass(frozen=True)
class BottomRowCoeffs:
    n: int
    a: Fraction
    b: Fraction
    l: Fraction
    m: Fraction
    tilde_b: Fraction


def bottom_row_constants(n: int) -> BottomRowCoeffs:
    if n < 1:
        raise ValueError("n must be at least 1")
    return BottomRowCoeffs(n, top_a(n), cross_b(n), end_pair_l(n), middle_pair_m(n), tilde_b(n))


TOP = "top"


@lru_cache(maxsize=None)
def _with_top_indexed(n: int) -> dict:
    """Covered pairs keyed by bottom indices, ``TOP`` for q_0."""
    N, h = 2**n, 2 ** (n - 1)
    a, b = top_a(n), cross_b(n)
    out: dict = {}

    def put(key, value):
        if key in out and out[key] != value:
            raise AssertionError(f"conflicting rules at {key}: {out[key]} vs {value}")
        out[key] = value

    for j in range(N + 1):
        put((TOP, j), a if j in (0, N) else 2 * a)
    for i in range(0, h):
        for j in range(h + 1, N + 1):
            put((i, j), b * (1 if i == 0 else 2) * (1 if j == N else 2))
    l = end_pair_l(n)
    put((0, 1), l)
    put((N - 1, N), l)
    mm = middle_pair_m(n)
    put((h - 1, h), mm)
    put((h, h + 1), mm)
    if n >= 2:
        inc = interior_increment(n - 1)
        for (i, j), c in _with_top_indexed(n - 1).items():
            if i == TOP or not (0 < i < j < h):
                continue
            v = FIVE_THIRDS * c + inc
            put((i, j), v)
            put((N - j, N - i), v)
    return out


@lru_cache(maxsize=None)
def _without_top_indexed(n: int) -> dict:
    N = 2**n
    a = top_a(n)
    out = {}
    for (i, j), c in _with_top_indexed(n).items():
        if i == TOP:
            continue
        ends = (i in (0, N)) + (j in (0, N))
        out[(i, j)] = c + a / 2 ** (n - 1 + ends)
    return out


def bottom_row_coeffs(n: int, with_top: bool = True) -> dict[tuple[VertexId, VertexId], Fraction]:
    """Expected traced coefficients for every pair covered by the closed forms.

    Keys are (x, y) with x before y in the order q_0, x_0, ..., x_{2^n}.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    row = bottom_row(n)
    top = boundary_point(0, n)
    table = _with_top_indexed(n) if with_top else _without_top_indexed(n)
    return {(top if i == TOP else row[i], row[j]): c for (i, j), c in table.items()}

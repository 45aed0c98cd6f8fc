"""Graph energy, harmonic extension and constrained E_lambda minimization.

On V_m the energy is E_m(u) = (5/3)^m sum_{x~y} (u(x) - u(y))^2 and the
integral of u^2 is discretized with :func:`sgextend.core.measure_weights`.
Rational data with lambda = 0 (or any rational lambda on request) is solved
exactly; otherwise the float backend is used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse

from .core import LevelGraph, VertexId, build_level_graph, measure_weights
from .linalg import SingularSystemError, solve_exact, solve_float

# interior midpoint rule of harmonic extension: (2a_i + 2a_j + a_k) / 5
_NEAR = Fraction(2, 5)
_FAR = Fraction(1, 5)


@dataclass(frozen=True)
class NodeFunction:
    """Values on the vertices of V_m, aligned with ``build_level_graph(m).vertices``."""

    level: int
    values: tuple

    def __post_init__(self):
        if len(self.values) != len(self.graph):
            raise ValueError(f"expected {len(self.graph)} values, got {len(self.values)}")

    @classmethod
    def from_mapping(cls, level: int, data: Mapping[VertexId, object]) -> NodeFunction:
        g = build_level_graph(level)
        vals = [None] * len(g)
        for v, x in data.items():
            vals[g.idx(v.lift(level))] = x
        if any(x is None for x in vals):
            raise ValueError("mapping does not cover every vertex")
        return cls(level, tuple(vals))

    @property
    def graph(self) -> LevelGraph:
        return build_level_graph(self.level)

    @property
    def exact(self) -> bool:
        return all(isinstance(x, Rational) for x in self.values)

    def __getitem__(self, v: VertexId):
        return self.values[self.graph.idx(v.lift(self.level))]

    def as_dict(self) -> dict[VertexId, object]:
        return dict(zip(self.graph.vertices, self.values))

    def array(self) -> np.ndarray:
        return np.array([float(x) for x in self.values])


def _is_rational(x) -> bool:
    return isinstance(x, Rational)


def energy_matrix(g: LevelGraph, lam: float = 0.0) -> scipy.sparse.csr_matrix:
    """Sparse matrix of u -> E_m(u) + lam * sum_v w_v u(v)^2."""
    n = len(g)
    rows, cols = zip(*g.edges) if g.edges else ((), ())
    c = float(g.conductance)
    adj = scipy.sparse.coo_matrix((np.full(len(rows), c), (rows, cols)), shape=(n, n))
    adj = adj + adj.T
    diag = np.asarray(adj.sum(axis=1)).ravel()
    if lam:
        w = measure_weights(g.level)
        diag = diag + lam * np.array([float(w[v]) for v in g.vertices])
    return (scipy.sparse.diags(diag) - adj).tocsr()


def graph_energy(g: LevelGraph, u: NodeFunction):
    if u.level != g.level:
        raise ValueError(f"level mismatch: function on V_{u.level}, graph V_{g.level}")
    return bilinear_energy(g, u, u)


def bilinear_energy(g: LevelGraph, u: NodeFunction, v: NodeFunction):
    """E_m(u, v) = (5/3)^m sum over edges of (u_x - u_y)(v_x - v_y)."""
    if u.level != g.level or v.level != g.level:
        raise ValueError("level mismatch")
    if u.exact and v.exact:
        uu, vv = u.values, v.values
        total = sum(((uu[a] - uu[b]) * (vv[a] - vv[b]) for a, b in g.edges), Fraction(0))
        return g.conductance * total
    e = np.array(g.edges)
    ua, va = u.array(), v.array()
    return float(g.conductance) * float(np.dot(ua[e[:, 0]] - ua[e[:, 1]], va[e[:, 0]] - va[e[:, 1]]))


def harmonic_extend(u: NodeFunction, m: int) -> NodeFunction:
    """Energy-minimizing extension of ``u`` (given on V_k) to V_m, m >= k."""
    if m < u.level:
        raise ValueError("target level below source level")
    vals = list(u.values)
    exact = u.exact
    near, far = (_NEAR, _FAR) if exact else (0.4, 0.2)
    for j in range(u.level, m):
        coarse, fine = build_level_graph(j), build_level_graph(j + 1)
        new = [None] * len(fine)
        for c, (_, corners) in enumerate(coarse.cells):
            a = [vals[i] for i in corners]
            for i in range(3):
                child = fine.cells[3 * c + i][1]
                for l in range(3):
                    if l == i:
                        new[child[l]] = a[i]
                    else:
                        k = 3 - i - l
                        new[child[l]] = near * (a[i] + a[l]) + far * a[k]
        vals = new
    return NodeFunction(m, tuple(vals))


@dataclass(frozen=True)
class ExtensionProblem:
    """Prescribed values on a set E of V_m for the E_lambda minimization."""

    level: int
    constraints: Mapping[VertexId, object]
    lam: object = 0
    dirichlet: bool = False
    _lifted: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.constraints:
            raise ValueError("constraint set E must be nonempty")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        g = build_level_graph(self.level)
        lifted: dict[int, object] = {}
        for v, a in self.constraints.items():
            i = g.idx(v.lift(self.level))
            if i in lifted:
                raise ValueError(f"duplicate constraint at {v}")
            lifted[i] = a
        if self.dirichlet:
            for i in g.boundary:
                if i in lifted and lifted[i] != 0:
                    raise ValueError("Dirichlet mode forces zero boundary values")
                lifted[i] = lifted.get(i, 0)
        object.__setattr__(self, "_lifted", lifted)

    @property
    def fixed(self) -> dict[int, object]:
        """Vertex index -> prescribed value, boundary zeros included."""
        return self._lifted

    def is_exact(self) -> bool:
        return _is_rational(self.lam) and all(_is_rational(a) for a in self._lifted.values())


def _solve_constrained(g: LevelGraph, fixed: Mapping[int, object], lam, exact: bool) -> tuple:
    n = len(g)
    free = [i for i in range(n) if i not in fixed]
    if exact:
        c = g.conductance
        w = measure_weights(g.level) if lam else None
        free_set = set(free)
        mat: dict = {}
        rhs: dict = {}
        for i in free:
            row = {i: len(g.neighbors[i]) * c + (lam * w[g.vertices[i]] if lam else 0)}
            b = Fraction(0)
            for nb in g.neighbors[i]:
                if nb in free_set:
                    row[nb] = row.get(nb, 0) - c
                else:
                    b += c * fixed[nb]
            mat[i] = row
            rhs[i] = [b]
        sol = solve_exact(mat, rhs, 1) if free else {}
        vals = [Fraction(fixed[i]) if i in fixed else sol[i][0] for i in range(n)]
        return tuple(vals)
    q = energy_matrix(g, float(lam))
    fixed_idx = np.array(sorted(fixed), dtype=int)
    free_idx = np.array(free, dtype=int)
    a = np.array([float(fixed[i]) for i in fixed_idx])
    u = np.zeros(n)
    u[fixed_idx] = a
    if len(free_idx):
        rhs = -(q[free_idx][:, fixed_idx] @ a)
        u[free_idx] = solve_float(q[free_idx][:, free_idx], rhs)
    return tuple(u.tolist())


def minimize_energy_lambda(p: ExtensionProblem, exact: bool | None = None) -> NodeFunction:
    """Unique minimizer of E_m(u) + lam sum_v w_v u(v)^2 subject to the constraints."""
    if exact is None:
        exact = p.is_exact() and p.lam == 0
    elif exact and not p.is_exact():
        raise ValueError("exact solve needs rational data and lambda")
    g = build_level_graph(p.level)
    return NodeFunction(p.level, _solve_constrained(g, p.fixed, p.lam, exact))


def minimize_energy(p: ExtensionProblem, exact: bool | None = None) -> NodeFunction:
    if p.lam != 0:
        raise ValueError("minimize_energy is the lambda = 0 problem")
    return minimize_energy_lambda(p, exact)


def objective(p: ExtensionProblem, u: NodeFunction):
    """E_m(u) + lam * sum_v w_v u(v)^2."""
    g = build_level_graph(p.level)
    value = graph_energy(g, u)
    if p.lam:
        w = measure_weights(p.level)
        if u.exact and _is_rational(p.lam):
            value += p.lam * sum(w[v] * x * x for v, x in u.as_dict().items())
        else:
            value += float(p.lam) * sum(float(w[v]) * float(x) ** 2 for v, x in u.as_dict().items())
    return value


def weighted_inner(u: NodeFunction, v: NodeFunction):
    """sum_v w_v u(v) v(v) with the level's measure weights."""
    w = measure_weights(u.level)
    verts = u.graph.vertices
    if u.exact and v.exact:
        return sum((w[x] * a * b for x, a, b in zip(verts, u.values, v.values)), Fraction(0))
    return float(sum(float(w[x]) * float(a) * float(b) for x, a, b in zip(verts, u.values, v.values)))


def _interior(g: LevelGraph) -> list[int]:
    bnd = set(g.boundary)
    return [i for i in range(len(g)) if i not in bnd]


def resolvent_columns(m: int, lam, points: Sequence[VertexId], exact: bool | None = None) -> list[NodeFunction]:
    """Discrete Dirichlet resolvent kernels G_lam(., x) for each point x.

    Column x solves (L + lam W) g = e_x on V_m minus V_0 with g = 0 on V_0, so
    E_m(g, v) + lam sum w g v = v(x) for every v vanishing on V_0.
    """
    g = build_level_graph(m)
    if exact is None:
        exact = _is_rational(lam)
    pts = [g.idx(p.lift(m)) for p in points]
    for i, p in zip(pts, points):
        if i in g.boundary:
            raise ValueError(f"{p} lies on the Dirichlet boundary V_0")
    inner = _interior(g)
    k = len(pts)
    if exact:
        c = g.conductance
        w = measure_weights(m) if lam else None
        inner_set = set(inner)
        mat = {}
        for i in inner:
            row = {i: len(g.neighbors[i]) * c + (lam * w[g.vertices[i]] if lam else 0)}
            for nb in g.neighbors[i]:
                if nb in inner_set:
                    row[nb] = row.get(nb, 0) - c
            mat[i] = row
        rhs = {}
        for col, i in enumerate(pts):
            rhs.setdefault(i, [Fraction(0)] * k)[col] = Fraction(1)
        sol = solve_exact(mat, rhs, k)
        zero = [Fraction(0)] * k
        cols = [sol.get(i, zero) for i in range(len(g))]
        return [NodeFunction(m, tuple(r[j] for r in cols)) for j in range(k)]
    q = energy_matrix(g, float(lam))
    idx = np.array(inner)
    b = np.zeros((len(inner), k))
    pos = {v: r for r, v in enumerate(inner)}
    for col, i in enumerate(pts):
        b[pos[i], col] = 1.0
    x = solve_float(q[idx][:, idx], b)
    full = np.zeros((len(g), k))
    full[idx] = x
    return [NodeFunction(m, tuple(full[:, j].tolist())) for j in range(k)]


def discrete_resolvent_column(g: LevelGraph, lam, x: VertexId, exact: bool | None = None) -> NodeFunction:
    return resolvent_columns(g.level, lam, [x], exact)[0]


@dataclass(frozen=True)
class ResolventSolution:
    points: tuple
    kernel: tuple  # G[i][j] = G_lam(x_j, x_i)
    coefficients: tuple
    u: NodeFunction
    value: object


def resolvent_construct(
    points: Sequence[VertexId], values: Sequence, lam, m: int, exact: bool | None = None
) -> ResolventSolution:
    """E_lam minimizer (Dirichlet) as sum_i c_i G_lam(., x_i) with G c = a."""
    if len(set(p.lift(m) for p in points)) != len(points):
        raise ValueError("points must be distinct")
    if len(values) != len(points):
        raise ValueError("one value per point")
    if exact is None:
        exact = _is_rational(lam) and all(_is_rational(a) for a in values)
    cols = resolvent_columns(m, lam, points, exact)
    g = build_level_graph(m)
    idx = [g.idx(p.lift(m)) for p in points]
    n = len(points)
    kernel = [[cols[j].values[idx[i]] for j in range(n)] for i in range(n)]
    if exact:
        mat = {i: {j: kernel[i][j] for j in range(n) if kernel[i][j]} for i in range(n)}
        sol = solve_exact(mat, {i: [Fraction(values[i])] for i in range(n)}, 1)
        coef = [sol[i][0] for i in range(n)]
        u = [sum((coef[j] * cols[j].values[v] for j in range(n)), Fraction(0)) for v in range(len(g))]
        value = sum((Fraction(a) * c for a, c in zip(values, coef)), Fraction(0))
    else:
        kmat = np.array(kernel, dtype=float)
        coef = solve_float(kmat, np.array(values, dtype=float)).tolist()
        colmat = np.array([c.array() for c in cols]).T
        u = (colmat @ np.array(coef)).tolist()
        value = float(np.dot(values, coef))
    return ResolventSolution(
        points=tuple(points),
        kernel=tuple(map(tuple, kernel)),
        coefficients=tuple(coef),
        u=NodeFunction(m, tuple(u)),
        value=value,
    )


HARMONIC_MASS = (
    (Fraction(7, 45), Fraction(4, 45), Fraction(4, 45)),
    (Fraction(4, 45), Fraction(7, 45), Fraction(4, 45)),
    (Fraction(4, 45), Fraction(4, 45), Fraction(7, 45)),
)


def integrate_piecewise_harmonic(u: NodeFunction) -> tuple:
    """(int u dmu, int u^2 dmu) for u harmonic inside every m-cell."""
    g = u.graph
    mass = Fraction(1, 3**u.level)
    exact = u.exact
    first = Fraction(0) if exact else 0.0
    second = Fraction(0) if exact else 0.0
    M = HARMONIC_MASS if exact else tuple(tuple(float(x) for x in r) for r in HARMONIC_MASS)
    for _, corners in g.cells:
        a = [u.values[i] for i in corners]
        first += sum(a) / 3 if exact else sum(a) / 3.0
        second += sum(a[i] * M[i][j] * a[j] for i in range(3) for j in range(3))
    if exact:
        return first * mass, second * mass
    return first * float(mass), second * float(mass)


def constant(m: int, value) -> NodeFunction:
    return NodeFunction(m, (value,) * len(build_level_graph(m)))


def from_boundary(values: Iterable, m: int = 0) -> NodeFunction:
    """Harmonic function with boundary values (u(q_0), u(q_1), u(q_2)) on V_m."""
    return harmonic_extend(NodeFunction(0, tuple(values)), m)

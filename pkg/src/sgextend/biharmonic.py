"""Biharmonic splines: minimizers of T(u) = int |Delta u|^2 dmu.

Cell algebra works on the unit cell with boundary values a, normal
derivatives b and Laplacian values c, related by G a - b = -M c where G is
the graph difference matrix and M the harmonic mass matrix.

Scaling conventions between a level-m cell F_w and the unit cell:

* Delta(u o F_w) = 5^-m (Delta u) o F_w
* d_n(u o F_w)(q_i) = (3/5)^m d_n u(F_w q_i), the one-sided global derivative

so T = (25/3)^m sum_w Theta(local a, local b) = sum_w 3^-m c_w^T M c_w with
c_w the global Laplacian values at the corners of F_w.

Global normal derivatives at a junction x are oriented: the value stored
for x is the derivative seen from the cell whose address is the canonical
address of x; the other cell sees its negative.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .core import VertexId, build_level_graph, measure_weights
from .energy import HARMONIC_MASS, NodeFunction, energy_matrix, from_boundary, harmonic_extend
from .linalg import SingularSystemError, solve_exact, solve_float

GRAPH_DIFF = ((2, -1, -1), (-1, 2, -1), (-1, -1, 2))
# inverse of the harmonic mass matrix: 15 I - 4 J
MASS_INVERSE = ((11, -4, -4), (-4, 11, -4), (-4, -4, 11))


class AssumptionHWarning(UserWarning):
    pass


def _mat_vec(m, v):
    return tuple(sum(m[i][j] * v[j] for j in range(3)) for i in range(3))


def _as_fraction3(v) -> tuple:
    if len(v) != 3:
        raise ValueError("cell data needs three entries")
    return tuple(x if isinstance(x, Fraction) else Fraction(x) for x in v)


@dataclass(frozen=True)
class CellBoundaryData:
    """Values a, normal derivatives b and Laplacian values c on a unit cell."""

    a: tuple
    b: tuple
    c: tuple

    @classmethod
    def from_ab(cls, a: Sequence, b: Sequence) -> CellBoundaryData:
        a, b = _as_fraction3(a), _as_fraction3(b)
        return cls(a, b, solve_cell(a, b))

    @property
    def d(self) -> tuple:
        """d_i = 2a_i - a_{i+1} - a_{i-1} - b_i; zero iff the cell function is harmonic."""
        ga = _mat_vec(GRAPH_DIFF, self.a)
        return tuple(x - y for x, y in zip(ga, self.b))

    def residual(self) -> tuple:
        """G a - b + M c, zero when the three vectors are consistent."""
        mc = _mat_vec(HARMONIC_MASS, self.c)
        return tuple(x + y for x, y in zip(self.d, mc))


def solve_cell(a: Sequence, b: Sequence) -> tuple:
    """Laplacian corner values of the biharmonic function with data (a, b)."""
    a, b = _as_fraction3(a), _as_fraction3(b)
    ga = _mat_vec(GRAPH_DIFF, a)
    return _mat_vec(MASS_INVERSE, tuple(y - x for x, y in zip(ga, b)))


def solve_cell_explicit(a: Sequence, b: Sequence) -> tuple:
    """Same map written out corner by corner: -15 (G a)_i + 11 b_i - 4 b_{i+1} - 4 b_{i-1}."""
    a, b = _as_fraction3(a), _as_fraction3(b)
    return tuple(
        -15 * (2 * a[i] - a[(i + 1) % 3] - a[(i - 1) % 3])
        + 11 * b[i]
        - 4 * b[(i + 1) % 3]
        - 4 * b[(i - 1) % 3]
        for i in range(3)
    )


def normals_from_laplacian(a: Sequence, c: Sequence) -> tuple:
    """d_n u(q_i) = (G a)_i + (1/45)(7 c_i + 4 c_{i+1} + 4 c_{i-1})."""
    a, c = _as_fraction3(a), _as_fraction3(c)
    return tuple(x + y for x, y in zip(_mat_vec(GRAPH_DIFF, a), _mat_vec(HARMONIC_MASS, c)))


def theta(a: Sequence, b: Sequence) -> Fraction:
    """int |Delta u|^2 over the unit cell, as c^T M c."""
    c = solve_cell(a, b)
    return sum(c[i] * HARMONIC_MASS[i][j] * c[j] for i in range(3) for j in range(3))


def theta_d_form(a: Sequence, b: Sequence) -> Fraction:
    d = CellBoundaryData(_as_fraction3(a), _as_fraction3(b), (0, 0, 0)).d
    return 11 * sum(x * x for x in d) - 8 * sum(d[i] * d[j] for i, j in combinations(range(3), 2))


def theta_expanded(a: Sequence, b: Sequence) -> Fraction:
    """The same quantity expanded in the raw data a, b."""
    a, b = _as_fraction3(a), _as_fraction3(b)
    pairs = list(combinations(range(3), 2))
    return (
        90 * sum(x * x for x in a)
        + 30 * sum(a[i] * b[j] for i in range(3) for j in range(3) if i != j)
        + 11 * sum(x * x for x in b)
        - 90 * sum(a[i] * a[j] for i, j in pairs)
        - 60 * sum(a[i] * b[i] for i in range(3))
        - 8 * sum(b[i] * b[j] for i, j in pairs)
    )


def total_T(m: int, cells: Mapping[tuple, CellBoundaryData]) -> Fraction:
    """(25/3)^m sum of Theta over m-cells given in unit-cell coordinates."""
    _check_cells(m, cells)
    return Fraction(25, 3) ** m * sum((theta(d.a, d.b) for d in cells.values()), Fraction(0))


def total_T_mass(m: int, laplacian: Mapping[tuple, Sequence]) -> Fraction:
    """sum_w 3^-m c_w^T M c_w with c_w the global Laplacian corner values of cell w."""
    _check_cells(m, laplacian)
    total = Fraction(0)
    for c in laplacian.values():
        c = _as_fraction3(c)
        total += sum(c[i] * HARMONIC_MASS[i][j] * c[j] for i in range(3) for j in range(3))
    return total / 3**m


def _check_cells(m: int, cells: Mapping) -> None:
    if len(cells) != 3**m or any(len(w) != m for w in cells):
        raise ValueError(f"need data on all {3**m} cells of level {m}")


# --- globally consistent piecewise-biharmonic functions ----------------------

def _graph_laplacian(g, values: Sequence) -> list:
    """Unnormalized Delta_m u(z) = sum_{y ~ z} (u(y) - u(z))."""
    return [sum(values[y] for y in g.neighbors[z]) - len(g.neighbors[z]) * values[z] for z in range(len(g))]


def _laplacian_rhs(g, lap: Sequence) -> list:
    """(14 Delta u(z) + 4 sum_{y ~ z} Delta u(y)) / (45 5^m)."""
    scale = Fraction(1, 45 * 5**g.level)
    return [scale * (14 * lap[z] + 4 * sum(lap[y] for y in g.neighbors[z])) for z in range(len(g))]


def biharmonic_values(boundary: Sequence, laplacian: NodeFunction, level: int | None = None) -> NodeFunction:
    """Values on V_level of the function with given V_0 values and Delta u.

    ``laplacian`` holds Delta u on V_m and is extended harmonically inside
    m-cells; the result is exact on every V_level with level >= m.
    """
    level = laplacian.level if level is None else level
    lap = harmonic_extend(laplacian, level)
    g = build_level_graph(level)
    rhs = _laplacian_rhs(g, lap.values)
    bvals = {g.boundary[i]: Fraction(boundary[i]) for i in range(3)}
    interior = [z for z in range(len(g)) if z not in bvals]
    inner = set(interior)
    mat, vec = {}, {}
    for z in interior:
        row = {z: Fraction(-len(g.neighbors[z]))}
        b = rhs[z]
        for y in g.neighbors[z]:
            if y in inner:
                row[y] = row.get(y, 0) + 1
            else:
                b -= bvals[y]
        # negate so the system is positive definite
        mat[z] = {k: -v for k, v in row.items()}
        vec[z] = [-b]
    sol = solve_exact(mat, vec, 1) if interior else {}
    return NodeFunction(level, tuple(bvals[z] if z in bvals else sol[z][0] for z in range(len(g))))


def _sign(v: VertexId, word: tuple, corner: int) -> int:
    return 1 if (v.word, v.corner) == (word, corner) else -1


def cells_from_global(values: NodeFunction, laplacian: NodeFunction) -> dict[tuple, CellBoundaryData]:
    """Unit-cell data of each m-cell for a piecewise-biharmonic function."""
    m = values.level
    g = values.graph
    scale = Fraction(1, 5**m)
    out = {}
    for word, corners in g.cells:
        a = tuple(values.values[i] for i in corners)
        c = tuple(scale * laplacian.values[i] for i in corners)
        out[word] = CellBoundaryData(a, normals_from_laplacian(a, c), c)
    return out


def global_normals(m: int, cells: Mapping[tuple, CellBoundaryData]) -> dict[tuple, Fraction]:
    """(word, corner) -> one-sided global normal derivative (5/3)^m b_local."""
    scale = Fraction(5, 3) ** m
    return {(w, i): scale * d.b[i] for w, d in cells.items() for i in range(3)}


# --- spline problems ---------------------------------------------------------

@dataclass(frozen=True)
class SplineProblem:
    """Values on E and oriented normal derivatives on F, both subsets of V_m."""

    level: int
    values: Mapping[VertexId, object]
    normals: Mapping[VertexId, object] = None
    values_only: bool = False

    def __post_init__(self):
        if self.normals is None:
            object.__setattr__(self, "normals", {})
        if self.values_only and self.normals:
            raise ValueError("values-only problems take no normal data")
        g = build_level_graph(self.level)
        for v in (*self.values, *self.normals):
            g.idx(v.lift(self.level))


@dataclass(frozen=True)
class SplineSolution:
    level: int
    values: NodeFunction
    normals: NodeFunction  # oriented global normal derivative per vertex
    cells: dict  # word -> CellBoundaryData in unit-cell coordinates
    laplacian: dict  # (word, corner) -> global Delta u
    T: Fraction


@dataclass(frozen=True)
class HCheck:
    ok: bool
    witness: tuple | None
    reason: str

    def __bool__(self) -> bool:
        return self.ok


def harmonic_basis_values(points: Sequence[VertexId]) -> list[tuple]:
    """(h_0(x), h_1(x), h_2(x)) for each point, exact."""
    if not points:
        return []
    m = max(p.level for p in points)
    basis = [harmonic_extend(from_boundary([int(i == j) for j in range(3)]), m) for i in range(3)]
    return [tuple(h[p.lift(m)] for h in basis) for p in points]


def _det3(r) -> Fraction:
    return (
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
        - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    )


def check_assumption_H(points: Sequence[VertexId]) -> HCheck:
    """Whether some triple of points has an invertible harmonic basis matrix."""
    pts = list(dict.fromkeys(points))
    if len(pts) < 3:
        return HCheck(False, None, "need at least three distinct points")
    rows = harmonic_basis_values(pts)
    # greedy row selection finds a witness whenever the rank is 3
    chosen: list[int] = []
    basis: list[list[Fraction]] = []
    for k, r in enumerate(rows):
        v = list(r)
        for piv, b in basis:
            if v[piv]:
                f = v[piv] / b[piv]
                v = [x - f * y for x, y in zip(v, b)]
        nz = next((i for i, x in enumerate(v) if x), None)
        if nz is not None:
            basis.append((nz, v))
            chosen.append(k)
            if len(chosen) == 3:
                triple = tuple(pts[i] for i in chosen)
                assert _det3([rows[i] for i in chosen]) != 0
                return HCheck(True, triple, "invertible triple found")
    return HCheck(False, None, f"harmonic basis matrix has rank {len(chosen)}")


def _spline_hessian(g, m: int) -> dict:
    """Matrix H with T = z^T H z over z = (values, oriented normals)."""
    n = len(g)
    r = Fraction(3, 5) ** m
    weight = Fraction(25, 3) ** m
    hess: dict = {}
    for word, corners in g.cells:
        # d_i = sum_j G_ij u_{x_j} - r s_i nu_{x_i} as sparse linear forms
        forms = []
        for i in range(3):
            f = {corners[j]: Fraction(GRAPH_DIFF[i][j]) for j in range(3)}
            f[n + corners[i]] = -r * _sign(g.vertices[corners[i]], word, i)
            forms.append(f)
        for i in range(3):
            for j in range(3):
                k = weight * MASS_INVERSE[i][j]
                for p, x in forms[i].items():
                    row = hess.setdefault(p, {})
                    for q, y in forms[j].items():
                        row[q] = row.get(q, 0) + k * x * y
    return hess


def _minimize_quadratic(hess: dict, size: int, fixed: Mapping[int, Fraction]) -> list:
    free = [p for p in range(size) if p not in fixed]
    free_set = set(free)
    mat, rhs = {}, {}
    for p in free:
        row = hess.get(p, {})
        mat[p] = {q: v for q, v in row.items() if q in free_set and v}
        rhs[p] = [-sum((v * fixed[q] for q, v in row.items() if q in fixed), Fraction(0))]
    sol = solve_exact(mat, rhs, 1) if free else {}
    return [fixed[p] if p in fixed else sol[p][0] for p in range(size)]


def spline_solve(p: SplineProblem) -> SplineSolution:
    """Minimizer of T with the given values and normal derivatives, exact."""
    m = p.level
    g = build_level_graph(m)
    n = len(g)
    pts = [v.lift(m) for v in p.values]
    h = check_assumption_H(pts)
    if not h:
        warnings.warn(f"assumption H fails ({h.reason}); the minimizer may not be unique", AssumptionHWarning)
    fixed = {g.idx(v.lift(m)): Fraction(a) for v, a in p.values.items()}
    fixed.update({n + g.idx(v.lift(m)): Fraction(b) for v, b in p.normals.items()})
    z = _minimize_quadratic(_spline_hessian(g, m), 2 * n, fixed)
    return _spline_solution(g, z)


def _spline_solution(g, z: Sequence[Fraction]) -> SplineSolution:
    m, n = g.level, len(g)
    r = Fraction(3, 5) ** m
    cells, lap = {}, {}
    for word, corners in g.cells:
        a = tuple(z[k] for k in corners)
        b = tuple(r * _sign(g.vertices[k], word, i) * z[n + k] for i, k in enumerate(corners))
        data = CellBoundaryData.from_ab(a, b)
        cells[word] = data
        for i in range(3):
            lap[(word, i)] = 5**m * data.c[i]
    return SplineSolution(
        m,
        NodeFunction(m, tuple(z[:n])),
        NodeFunction(m, tuple(z[n:])),
        cells,
        lap,
        total_T(m, cells),
    )


def spline_T(m: int, values: NodeFunction, normals: NodeFunction) -> Fraction:
    """T of the piecewise-biharmonic function with all values and normals given."""
    g = build_level_graph(m)
    return _spline_solution(g, list(values.values) + list(normals.values)).T


@dataclass(frozen=True)
class ConditionReport:
    laplacian_jumps: dict  # vertex -> jump of Delta u across the junction
    laplacian_flux: dict  # vertex -> sum of one-sided normal derivatives of Delta u
    boundary_laplacian: dict  # q_i -> Delta u(q_i)
    boundary_flux: dict  # q_i -> d_n Delta u(q_i)

    def ok(self, continuity_off: set, flux_off: set) -> bool:
        """Continuity at junctions outside ``continuity_off``, zero flux outside ``flux_off``."""
        for v, jump in self.laplacian_jumps.items():
            if v not in continuity_off and jump != 0:
                return False
        for v, val in self.boundary_laplacian.items():
            if v not in continuity_off and val != 0:
                return False
        for table in (self.laplacian_flux, self.boundary_flux):
            for v, flux in table.items():
                if v not in flux_off and flux != 0:
                    return False
        return True


def spline_conditions(sol: SplineSolution) -> ConditionReport:
    """Continuity and matching normal derivatives of Delta u at each vertex."""
    m = sol.level
    g = build_level_graph(m)
    scale = Fraction(5, 3) ** m
    seen: dict = {}
    for word, corners in g.cells:
        c = [sol.laplacian[(word, i)] for i in range(3)]
        for i, k in enumerate(corners):
            # Delta u is harmonic on the cell: one-sided derivative (5/3)^m (G c)_i
            flux = scale * (2 * c[i] - c[(i + 1) % 3] - c[(i - 1) % 3])
            seen.setdefault(g.vertices[k], []).append((c[i], flux))
    jumps, fluxes, bval, bflux = {}, {}, {}, {}
    for v, sides in seen.items():
        if len(sides) == 2:
            jumps[v] = sides[0][0] - sides[1][0]
            fluxes[v] = sides[0][1] + sides[1][1]
        else:
            bval[v] = sides[0][0]
            bflux[v] = sides[0][1]
    return ConditionReport(jumps, fluxes, bval, bflux)


# --- values-only problems on V_m ---------------------------------------------

@dataclass(frozen=True)
class ValuesOnlySolution:
    laplacian: NodeFunction  # Delta u on V_m, zero on V_0
    graph_laplacian: NodeFunction  # unnormalized Delta_m u
    T: Fraction


def values_only_solve(values: NodeFunction) -> ValuesOnlySolution:
    """Minimize T given u on all of V_m.

    Delta u vanishes on V_0 and solves (14 I + 4 Adj) Delta u = 45 5^m Delta_m u
    on V_m minus V_0, with Delta_m the unnormalized graph Laplacian; then
    T = (5/3)^m sum Delta u Delta_m u.
    """
    if not values.exact:
        values = NodeFunction(values.level, tuple(Fraction(x) for x in values.values))
    m = values.level
    g = values.graph
    dm = _graph_laplacian(g, values.values)
    bnd = set(g.boundary)
    interior = [z for z in range(len(g)) if z not in bnd]
    mat = {
        z: {z: Fraction(14), **{y: Fraction(4) for y in g.neighbors[z] if y not in bnd}}
        for z in interior
    }
    rhs = {z: [45 * 5**m * dm[z]] for z in interior}
    sol = solve_exact(mat, rhs, 1) if interior else {}
    lap = tuple(sol[z][0] if z in sol else Fraction(0) for z in range(len(g)))
    T = Fraction(5, 3) ** m * sum((lap[z] * dm[z] for z in interior), Fraction(0))
    return ValuesOnlySolution(NodeFunction(m, lap), NodeFunction(m, tuple(dm)), T)


# --- Green-kernel construction -------------------------------------------------

@dataclass(frozen=True)
class GreenSolution:
    level: int
    points: tuple
    kernel: object  # [G]_ij = sum_y w_y G(x_i, y) G(x_j, y)
    coefficients: tuple
    u: NodeFunction
    laplacian: NodeFunction  # discrete Delta u = -W^-1 L u, zero on V_0
    T: object
    interpolation_error: object


def _green_setup(points: Sequence[VertexId], m: int):
    g = build_level_graph(m)
    pts = tuple(p.lift(m) for p in points)
    if len(set(pts)) != len(pts):
        raise ValueError("points must be distinct")
    if any(p.is_boundary() for p in pts):
        raise ValueError("points must avoid V_0")
    bnd = set(g.boundary)
    interior = [z for z in range(len(g)) if z not in bnd]
    return g, pts, interior


def green_extend(
    points: Sequence[VertexId], values: Sequence, m: int, exact: bool = False
) -> GreenSolution:
    """Dirichlet T-minimizer through the data, from the discrete Green kernel on V_m.

    G is the inverse of the Dirichlet energy matrix, so that -Delta G(., y)
    is the unit point mass against the measure weights w.  With ``exact``
    every step is rational and the data is interpolated exactly.
    """
    if exact:
        return _green_extend_exact(points, values, m)
    g, pts, interior = _green_setup(points, m)
    pos = {z: k for k, z in enumerate(interior)}
    lmat = energy_matrix(g)[interior][:, interior]
    w = measure_weights(m)
    wvec = np.array([float(w[g.vertices[z]]) for z in interior])
    cols = [pos[g.idx(p)] for p in pts]
    eye = np.zeros((len(interior), len(cols)))
    eye[cols, range(len(cols))] = 1.0
    green = solve_float(lmat, eye)  # columns G(., x_i)
    kcols = solve_float(lmat, wvec[:, None] * green)  # columns sum_y G(., y) w_y G(y, x_i)
    kernel = kcols[cols]
    kernel = (kernel + kernel.T) / 2
    a = np.asarray(values, dtype=float)
    try:
        coef = np.linalg.solve(kernel, a)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    # one step of iterative refinement on the small system
    coef = coef + np.linalg.solve(kernel, a - kernel @ coef)
    u_int = kcols @ coef
    lap_int = -(green @ coef)
    u = np.zeros(len(g))
    lap = np.zeros(len(g))
    u[interior] = u_int
    lap[interior] = lap_int
    return GreenSolution(
        level=m,
        points=pts,
        kernel=kernel,
        coefficients=tuple(coef.tolist()),
        u=NodeFunction(m, tuple(u.tolist())),
        laplacian=NodeFunction(m, tuple(lap.tolist())),
        T=float(np.dot(wvec, lap_int**2)),
        interpolation_error=float(np.max(np.abs(u_int[cols] - a))) if len(a) else 0.0,
    )


def _green_extend_exact(points, values, m) -> GreenSolution:
    g, pts, interior = _green_setup(points, m)
    inner = set(interior)
    c = g.conductance
    lmat = {
        z: {z: c * len(g.neighbors[z]), **{y: -c for y in g.neighbors[z] if y in inner}}
        for z in interior
    }
    w = measure_weights(m)
    wv = {z: w[g.vertices[z]] for z in interior}
    idx = [g.idx(p) for p in pts]
    k = len(idx)
    unit = {z: [Fraction(int(z == x)) for x in idx] for z in interior}
    green = solve_exact(lmat, unit, k) if k else {}
    kcols = solve_exact(lmat, {z: [wv[z] * x for x in green[z]] for z in interior}, k) if k else {}
    kernel = [[kcols[x][j] for j in range(k)] for x in idx]
    a = [Fraction(v) for v in values]
    sol = solve_exact({i: {j: kernel[i][j] for j in range(k)} for i in range(k)}, {i: [a[i]] for i in range(k)}, 1)
    coef = [sol[i][0] for i in range(k)]
    u = [Fraction(0)] * len(g)
    lap = [Fraction(0)] * len(g)
    for z in interior:
        u[z] = sum((kcols[z][j] * coef[j] for j in range(k)), Fraction(0))
        lap[z] = -sum((green[z][j] * coef[j] for j in range(k)), Fraction(0))
    return GreenSolution(
        level=m,
        points=pts,
        kernel=tuple(tuple(r) for r in kernel),
        coefficients=tuple(coef),
        u=NodeFunction(m, tuple(u)),
        laplacian=NodeFunction(m, tuple(lap)),
        T=sum((wv[z] * lap[z] ** 2 for z in interior), Fraction(0)),
        interpolation_error=max((abs(u[x] - ai) for x, ai in zip(idx, a)), default=Fraction(0)),
    )

import random
from fractions import Fraction

import numpy as np
import pytest

from oracles import dense_minimizer
from sgextend.core import boundary_point, build_level_graph, canonicalize, measure_weights
from sgextend.energy import (
    ExtensionProblem,
    NodeFunction,
    bilinear_energy,
    constant,
    discrete_resolvent_column,
    from_boundary,
    graph_energy,
    harmonic_extend,
    integrate_piecewise_harmonic,
    minimize_energy,
    minimize_energy_lambda,
    objective,
    resolvent_columns,
    resolvent_construct,
    weighted_inner,
)
from sgextend.trace import effective_conductance, effective_form

F = Fraction


def test_energy_basics():
    g0 = build_level_graph(0)
    assert graph_energy(g0, NodeFunction(0, (F(1), F(0), F(0)))) == 2
    assert graph_energy(build_level_graph(2), constant(2, F(3))) == 0


def test_harmonic_extend_against_direct_minimization():
    u = harmonic_extend(NodeFunction(0, (F(1), F(0), F(0))), 1)
    g = build_level_graph(1)
    fixed = {i: F(int(i == g.boundary[0])) for i in g.boundary}
    assert list(u.values) == dense_minimizer(len(g), g.edges, g.conductance, fixed)
    assert [u[canonicalize((0,), 1)], u[canonicalize((0,), 2)], u[canonicalize((1,), 2)]] == [
        F(2, 5), F(2, 5), F(1, 5)]
    assert graph_energy(g, u) == 2


def test_energy_preserved_across_levels():
    base = NodeFunction(0, (F(3), F(-1), F(2, 7)))
    e0 = graph_energy(build_level_graph(0), base)
    for m in range(1, 5):
        assert graph_energy(build_level_graph(m), harmonic_extend(base, m)) == e0


def test_minimize_matches_extension():
    cons = {boundary_point(i): F(int(i == 0)) for i in range(3)}
    u = minimize_energy(ExtensionProblem(3, cons))
    assert u.values == harmonic_extend(from_boundary([F(1), F(0), F(0)]), 3).values


def test_two_point_energy_is_conductance():
    for m in (1, 2, 3):
        cons = {boundary_point(1): F(0), boundary_point(2): F(1)}
        u = minimize_energy(ExtensionProblem(m, cons))
        assert graph_energy(u.graph, u) == effective_conductance(m, boundary_point(1), boundary_point(2))


def test_single_constraint_gives_constant():
    u = minimize_energy(ExtensionProblem(2, {canonicalize((0,), 1): F(4)}))
    assert set(u.values) == {F(4)}


def test_exact_minimizer_against_dense_oracle():
    rng = random.Random(1)
    g = build_level_graph(2)
    pts = rng.sample(range(len(g)), 4)
    fixed = {i: F(rng.randint(-5, 5), 3) for i in pts}
    u = minimize_energy(ExtensionProblem(2, {g.vertices[i]: a for i, a in fixed.items()}))
    assert list(u.values) == dense_minimizer(len(g), g.edges, g.conductance, fixed)


def test_maximum_principle():
    rng = random.Random(2)
    g = build_level_graph(3)
    cons = {v: F(rng.randint(-9, 9)) for v in rng.sample(g.vertices, 6)}
    u = minimize_energy(ExtensionProblem(3, cons))
    assert min(cons.values()) <= min(u.values) and max(u.values) <= max(cons.values())


def test_traced_form_is_minimal_energy():
    rng = random.Random(4)
    g = build_level_graph(3)
    pts = rng.sample(g.vertices, 5)
    vals = {p: F(rng.randint(-4, 4)) for p in pts}
    u = minimize_energy(ExtensionProblem(3, vals))
    assert graph_energy(g, u) == effective_form(3, pts).energy(vals)


def test_lambda_zero_agrees():
    cons = {canonicalize((0,), 1): F(1), canonicalize((1,), 2): F(-2)}
    p = ExtensionProblem(3, cons)
    assert minimize_energy_lambda(p).values == minimize_energy(p).values


def test_lambda_monotone_mass():
    x = canonicalize((0,), 1)
    masses = []
    for lam in (1.0, 10.0, 100.0):
        u = minimize_energy_lambda(ExtensionProblem(3, {x: 1.0}, lam=lam, dirichlet=True))
        assert u[x.lift(3)] == 1.0
        masses.append(weighted_inner(u, u))
    assert masses[0] > masses[1] > masses[2]


def test_zero_data_zero_solution():
    u = minimize_energy_lambda(ExtensionProblem(2, {canonicalize((0,), 1): 0.0}, lam=5.0, dirichlet=True))
    assert not np.any(u.array())


def test_euler_lagrange_identity():
    rng = np.random.default_rng(5)
    m, lam = 3, 7.0
    g = build_level_graph(m)
    pts = [canonicalize((0,), 1), canonicalize((1, 2), 0), canonicalize((2,), 1)]
    p = ExtensionProblem(m, {v: float(rng.normal()) for v in pts}, lam=lam, dirichlet=True)
    u = minimize_energy_lambda(p)
    w = measure_weights(m)
    mask = np.ones(len(g))
    mask[list(p.fixed)] = 0
    for _ in range(100):
        v = NodeFunction(m, tuple((rng.normal(size=len(g)) * mask).tolist()))
        lhs = bilinear_energy(g, u, v) + lam * sum(float(w[x]) * a * b for x, a, b in zip(g.vertices, u.values, v.values))
        assert abs(lhs) < 1e-10


def test_resolvent_column_properties():
    g = build_level_graph(3)
    x, y = canonicalize((0,), 1), canonicalize((1, 2), 0)
    cx, cy = resolvent_columns(3, 2.0, [x, y])
    assert abs(cx[y.lift(3)] - cy[x.lift(3)]) < 1e-14
    for i in g.boundary:
        assert cx.values[i] == 0
    with pytest.raises(ValueError):
        discrete_resolvent_column(g, 1.0, boundary_point(0))


def test_resolvent_at_lambda_zero_is_resistance():
    x = canonicalize((0,), 1)
    g = build_level_graph(1)
    col = discrete_resolvent_column(g, 0, x, exact=True)
    net = effective_form(1, [x, *[g.vertices[i] for i in g.boundary]])
    resistance = 1 / sum(net[x, g.vertices[i]] for i in g.boundary)
    assert col[x] == resistance == F(9, 50)


def test_resolvent_construct_small_cases():
    x = canonicalize((0,), 1)
    sol = resolvent_construct([x], [F(0)], F(0), 2)
    assert sol.coefficients == (0,) and set(sol.u.values) == {0}
    sol = resolvent_construct([x], [F(3)], F(0), 2)
    assert sol.value == F(9) / sol.kernel[0][0]


@pytest.mark.parametrize("m, lam", [(2, 1.0), (3, 10.0), (4, 0.5)])
def test_resolvent_matches_direct(m, lam):
    rng = random.Random(m)
    g = build_level_graph(m)
    inner = [v for i, v in enumerate(g.vertices) if i not in g.boundary]
    pts = rng.sample(inner, 3)
    vals = [rng.uniform(-2, 2) for _ in pts]
    sol = resolvent_construct(pts, vals, lam, m)
    p = ExtensionProblem(m, dict(zip(pts, vals)), lam=lam, dirichlet=True)
    u = minimize_energy_lambda(p)
    assert np.max(np.abs(sol.u.array() - u.array())) < 1e-10
    assert abs(objective(p, u) - sol.value) < 1e-10


def test_quadrature():
    assert integrate_piecewise_harmonic(constant(2, F(1))) == (1, 1)
    for m in (1, 2, 3):
        h0 = from_boundary([F(1), F(0), F(0)], m)
        assert integrate_piecewise_harmonic(h0)[1] == F(7, 45)
        total = from_boundary([F(1), F(1), F(1)], m)
        assert integrate_piecewise_harmonic(total)[1] == 1


def test_vertex_quadrature_converges():
    u = from_boundary([F(1), F(-2), F(3)], 1)
    exact = integrate_piecewise_harmonic(u)[1]
    errs = []
    for m in range(1, 6):
        v = harmonic_extend(u, m)
        w = measure_weights(m)
        approx = sum(w[x] * a * a for x, a in zip(v.graph.vertices, v.values))
        errs.append(abs(approx - exact))
    assert all(a > b for a, b in zip(errs, errs[1:]))

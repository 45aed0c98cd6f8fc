"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
Exact criteria compare rationals with zero tolerance.
"""

import random
import sys
import time
from collections import Counter
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import random_network, schur_traced  # noqa: E402
from sgextend.biharmonic import (  # noqa: E402
    CellBoundaryData,
    biharmonic_values,
    cells_from_global,
    green_extend,
    normals_from_laplacian,
    solve_cell,
    spline_T,
    theta,
    theta_d_form,
    theta_expanded,
    total_T,
    total_T_mass,
    values_only_solve,
)
from sgextend.core import boundary_point, bottom_row, build_level_graph, graph_distance_avoiding  # noqa: E402
from sgextend.energy import (  # noqa: E402
    ExtensionProblem,
    NodeFunction,
    from_boundary,
    harmonic_extend,
    minimize_energy,
    minimize_energy_lambda,
    objective,
    resolvent_construct,
)
from sgextend.haar import (  # noqa: E402
    BottomData,
    gamma_decomposition,
    harmonic_away_from_bottom,
    phi_b_closed,
    phi_bump,
    phi_c_closed,
)
from sgextend.special import (  # noqa: E402
    _beta_copies,
    beta_points,
    bottom_row_coeffs,
    junction_neighbors,
    new_level_expected,
    new_level_points,
)
from sgextend.trace import (  # noqa: E402
    Network,
    effective_form,
    is_zero_coefficient,
    lower_bound_value,
    trace_to,
)

F = Fraction
FIVE_THIRDS = F(5, 3)

RESOLVENT_TOL = 1e-10
PHI_FLOAT_TOL = 1e-12
GREEN_TOL = 1e-8


def _rand_frac(rng, k=9, d=6):
    return F(rng.randint(-k, k), rng.randint(1, d))


# --- criterion checks; each returns (ok, detail) ------------------------------

def check_beta():
    base = effective_form(2, beta_points(0))
    counts = Counter(c for *_, c in base.pairs())
    want = {F(410, 159): 3, F(5, 53): 3, F(20, 53): 6, F(80, 53): 3}
    ok = counts == want
    # beta_1 against the beta_0 oracle, pulled back through each copy map
    net = effective_form(3, beta_points(1))
    base_by_label = {}
    for p, s in _beta_copies(0)[()].items():
        base_by_label[s] = p
    bad = 0
    copies = _beta_copies(1)
    for x, y, c in net.pairs():
        shared = [w for w, cp in copies.items() if x in cp and y in cp]
        if shared:
            cp = copies[shared[0]]
            expected = FIVE_THIRDS * base[base_by_label[cp[x]], base_by_label[cp[y]]]
        else:
            expected = 0
        bad += c != expected
    ok = ok and bad == 0
    return ok, f"beta_0 classes {dict(sorted((str(k), v) for k, v in counts.items()))}; beta_1 mismatches {bad}"


def check_new_level():
    n1 = effective_form(1, new_level_points(1))
    ok1 = all(c == F(5, 2) for *_, c in n1.pairs()) and len(n1.pairs()) == 3
    n2 = effective_form(2, new_level_points(2))
    counts = Counter(c for *_, c in n2.pairs() if c)
    ok2 = counts == {F(25, 6): 3, F(125, 36): 6, F(25, 36): 12}
    ok2 = ok2 and all(new_level_expected(2, x, y) in (c, None) for x, y, c in n2.pairs())
    n3 = effective_form(3, new_level_points(3))
    allowed = {FIVE_THIRDS**3 * F(5, 4), FIVE_THIRDS**3 * F(1, 4)}
    seen = Counter()
    ok3 = True
    for i in range(3):
        for x, y in combinations(sorted(junction_neighbors(i, 3)), 2):
            c = n3[x, y]
            seen[c] += 1
            ok3 = ok3 and c in allowed and new_level_expected(3, x, y) == c
    ok3 = ok3 and set(seen) == allowed
    return ok1 and ok2 and ok3, f"n=1 {ok1}; n=2 classes {ok2}; n=3 D-pairs {dict((str(k), v) for k, v in seen.items())}"


def check_bottom():
    checked = 0
    for n in range(1, 7):
        a = F(7 * 5**n, 3**n + 6 * 10**n)
        b = F(49 * 25**n, (5 * 3**n + 16 * 10**n) * (3**n + 6 * 10**n))
        bt = F(35 * 5**n, 10 * 6**n + 32 * 20**n)
        row = bottom_row(n)
        top = boundary_point(0, n)
        N = 2**n
        for with_top in (True, False):
            pts = ([top] if with_top else []) + row
            net = effective_form(n, pts)
            for (x, y), e in bottom_row_coeffs(n, with_top).items():
                if net[x, y] != e:
                    return False, f"n={n} with_top={with_top}: {x},{y} oracle {net[x, y]} expected {e}"
                checked += 1
            if with_top:
                named = [net[top, row[0]] == a, net[top, row[1]] == 2 * a, net[row[0], row[N]] == b]
                if n >= 2:
                    named += [net[row[0], row[N - 1]] == 2 * b, net[row[1], row[N - 1]] == 4 * b]
            else:
                named = [net[row[0], row[N]] == bt]
            if not all(named):
                return False, f"n={n} named closed form failed (with_top={with_top})"
    return True, f"{checked} coefficients exact for n=1..6"


def check_haar():
    prev = None
    gaps = []
    for m in range(1, 7):
        g = gamma_decomposition(m).gamma  # raises unless exactly diagonal
        if g[0] != F(70 * 10**m, 5 * 3**m + 16 * 10**m):
            return False, f"m={m} coarsest {g[0]}"
        if prev is not None and any(g[n] != F(10, 3) * prev[n - 1] for n in range(1, m + 1)):
            return False, f"m={m} recursion fails"
        gaps.append(abs(g[0] - F(35, 8)))
        prev = g
    mono = all(x > y for x, y in zip(gaps, gaps[1:]))
    return mono, f"diagonal m=1..6, gamma_coarsest(6)={float(prev[0]):.12g}, monotone toward 35/8: {mono}"


def check_phi():
    for m in range(1, 11):
        p = phi_bump(m)
        b_closed, c_closed = phi_b_closed(m), phi_c_closed(m)
        if p.b != b_closed or p.c != c_closed or p.b_from_c != b_closed:
            return False, f"m={m}: b={p.b} c={p.c}"
    worst = 0.0
    for m in range(1, 7):
        e, f = phi_bump(m), phi_bump(m, exact=False)
        worst = max(worst, abs(f.b - float(e.b)), abs(f.c - float(e.c)))
    return worst < PHI_FLOAT_TOL, f"exact m=1..10; float vs exact m<=6 max diff {worst:.3g}"


def check_harmonic_bottom():
    rng = random.Random(2026)
    count = 0
    for m in range(0, 6):
        for _ in range(20):
            t = tuple(_rand_frac(rng) for _ in range(2**m + 1))
            h = harmonic_away_from_bottom(BottomData(m, t))
            if h.normal_derivative_top != 0 or not (h.top_value == h.weighted_average == h.integral):
                return False, f"m={m} data {t}"
            count += 1
    return True, f"{count} instances exact"


def _components_criterion(g, A):
    """Pairs of A joined by a path whose interior avoids A, via components of V minus A."""
    inA = set(A)
    comp = {}
    for s in range(len(g)):
        if s in inA or s in comp:
            continue
        stack, comp[s] = [s], s
        while stack:
            v = stack.pop()
            for u in g.neighbors[v]:
                if u not in inA and u not in comp:
                    comp[u] = s
                    stack.append(u)
    touching = {}
    linked = set()
    for a in A:
        for u in g.neighbors[a]:
            if u in inA:
                linked.add(frozenset((a, u)))
            else:
                touching.setdefault(comp[u], set()).add(a)
    for group in touching.values():
        for x, y in combinations(sorted(group), 2):
            linked.add(frozenset((x, y)))
    return linked


def check_conductance_calculus():
    rng = random.Random(7)
    notes = []
    # order independence and brute-force oracle, 100 random networks with n <= 6
    for _ in range(100):
        labels, pairs = random_network(rng, rng.randint(2, 6))
        net = Network.from_pairs(labels, pairs)
        keep = rng.sample(labels, rng.randint(2, len(labels)))
        drop = [x for x in labels if x not in keep]
        ref = trace_to(net, keep)
        rng.shuffle(drop)
        if trace_to(net, keep, order=drop) != ref:
            return False, "elimination order changed the result"
        for (x, y), c in schur_traced(labels, pairs, keep).items():
            if ref[x, y] != c:
                return False, "Kron reduction disagrees with the symbolic oracle"
    notes.append("order+oracle 100")
    # monotonicity under restriction
    for _ in range(40):
        m = rng.randint(1, 4)
        verts = build_level_graph(m).vertices
        big = rng.sample(verts, rng.randint(3, min(20, len(verts))))
        small = rng.sample(big, rng.randint(2, len(big)))
        nb, ns = effective_form(m, big), effective_form(m, small)
        if any(c < nb[x, y] for x, y, c in ns.pairs()):
            return False, "monotonicity fails"
    notes.append("monotone 40")
    # neighbour bounds
    for m in range(0, 6):
        g = build_level_graph(m)
        s = FIVE_THIRDS**m
        for _ in range(50):
            i, j = g.edges[rng.randrange(len(g.edges))]
            x, y = g.vertices[i], g.vertices[j]
            A = set(rng.sample(g.vertices, rng.randint(0, min(30, len(g))))) | {x, y}
            c = effective_form(m, A)[x, y]
            if not s <= c <= 4 * s:
                return False, f"neighbour bound fails at m={m}"
    notes.append("bounds 6x50")
    # zero coefficients: exhaustive over every subset at m <= 2, sampled at m = 3
    subsets = 0
    for m in (1, 2):
        g = build_level_graph(m)
        net = Network.from_level_graph(g)
        n = len(g)
        for mask in range(1, 2**n):
            A = [k for k in range(n) if mask >> k & 1]
            if len(A) < 2:
                continue
            tr = trace_to(net, [g.vertices[k] for k in A])
            linked = _components_criterion(g, A)
            for a, b in combinations(A, 2):
                if (tr[g.vertices[a], g.vertices[b]] == 0) == (frozenset((a, b)) in linked):
                    return False, f"zero-coefficient criterion fails at m={m}"
            subsets += 1
    g = build_level_graph(3)
    for _ in range(300):
        A = rng.sample(range(len(g)), rng.randint(2, len(g)))
        pts = [g.vertices[k] for k in A]
        tr = effective_form(3, pts)
        for a, b in combinations(A, 2):
            x, y = g.vertices[a], g.vertices[b]
            if (tr[x, y] == 0) != is_zero_coefficient(3, pts, x, y):
                return False, "zero-coefficient criterion fails at m=3"
        subsets += 1
    notes.append(f"zero-coef {subsets} sets")
    # lower bound a_N (5/3)^m
    found = 0
    while found < 100:
        m = rng.randint(1, 4)
        g = build_level_graph(m)
        A = rng.sample(g.vertices, rng.randint(2, min(25, len(g))))
        x, y = rng.sample(A, 2)
        d = graph_distance_avoiding(g, x, y, A)
        if d is None:
            continue
        found += 1
        if effective_form(m, A)[x, y] < lower_bound_value(d) * FIVE_THIRDS**m:
            return False, "lower bound fails"
    notes.append("lower bound 100")
    return True, "; ".join(notes)


def check_resolvent():
    rng = random.Random(11)
    worst_u = worst_obj = worst_res = 0.0
    for m in range(1, 6):
        g = build_level_graph(m)
        inner = [v for i, v in enumerate(g.vertices) if i not in g.boundary]
        for lam in (0, 1, 10):
            for _ in range(3):
                pts = rng.sample(inner, rng.randint(1, min(5, len(inner))))
                vals = [rng.uniform(-2, 2) for _ in pts]
                sol = resolvent_construct(pts, vals, float(lam), m)
                kmat = np.array(sol.kernel, dtype=float)
                worst_res = max(worst_res, float(np.max(np.abs(kmat @ np.array(sol.coefficients) - vals))))
                p = ExtensionProblem(m, dict(zip(pts, vals)), lam=float(lam), dirichlet=True)
                u = minimize_energy_lambda(p, exact=False)
                worst_u = max(worst_u, float(np.max(np.abs(sol.u.array() - u.array()))))
                worst_obj = max(worst_obj, abs(objective(p, u) - sol.value))
            # rational lambda = 0 path
            if lam == 0:
                pts = rng.sample(inner, rng.randint(1, min(4, len(inner))))
                vals = [_rand_frac(rng) for _ in pts]
                sol = resolvent_construct(pts, vals, 0, m)
                p = ExtensionProblem(m, dict(zip(pts, vals)), dirichlet=True)
                u = minimize_energy(p, exact=True)
                if sol.u.values != u.values or objective(p, u) != sol.value:
                    return False, f"exact lambda=0 mismatch at m={m}"
    ok = worst_u < RESOLVENT_TOL and worst_obj < RESOLVENT_TOL and worst_res < RESOLVENT_TOL
    return ok, f"sup|u diff| {worst_u:.3g}, |objective - a.c| {worst_obj:.3g}, |Gc - a| {worst_res:.3g}; exact lambda=0 equal"


def check_cell_algebra():
    rng = random.Random(3)
    for _ in range(200):
        a = tuple(_rand_frac(rng) for _ in range(3))
        b = tuple(_rand_frac(rng) for _ in range(3))
        c = solve_cell(a, b)
        cmc = theta(a, b)
        if not (cmc == theta_d_form(a, b) == theta_expanded(a, b)):
            return False, f"Theta forms disagree at {a}, {b}"
        if normals_from_laplacian(a, c) != b:
            return False, "round trip fails"
        d = CellBoundaryData(a, b, c).d
        if (cmc == 0) != (d == (0, 0, 0)):
            return False, "Theta = 0 does not match harmonic data"
        harm = tuple(2 * a[i] - a[(i + 1) % 3] - a[(i - 1) % 3] for i in range(3))
        if theta(a, harm) != 0:
            return False, "harmonic data gives nonzero Theta"
    return True, "200 inputs: three forms equal, round trip exact, Theta=0 iff harmonic"


def check_values_only():
    rng = random.Random(5)
    checked = 0
    for m in range(1, 5):
        g = build_level_graph(m)
        for _ in range(20):
            vals = NodeFunction(m, tuple(_rand_frac(rng) for _ in g.vertices))
            vo = values_only_solve(vals)
            if any(vo.laplacian.values[i] != 0 for i in g.boundary):
                return False, "Delta u nonzero on V_0"
            cells = cells_from_global(vals, vo.laplacian)
            # one global Delta u; the cell functions glue into dom Delta iff normals cancel
            sums = {}
            for word, corners in g.cells:
                for i, k in enumerate(corners):
                    sums.setdefault(k, []).append(cells[word].b[i])
            if any(sum(s) != 0 for s in sums.values() if len(s) == 2):
                return False, f"junction mismatch at m={m}"
            if total_T(m, cells) != vo.T:
                return False, "T disagrees with the cell sum"
            for _ in range(20):
                nrm = NodeFunction(m, tuple(_rand_frac(rng) for _ in g.vertices))
                if spline_T(m, vals, nrm) < vo.T:
                    return False, "random normals beat the values-only minimizer"
            checked += 1
        h = values_only_solve(harmonic_extend(from_boundary([_rand_frac(rng) for _ in range(3)]), m))
        if h.T != 0:
            return False, "harmonic input gives nonzero T"
    return True, f"{checked} value sets x 20 perturbations; harmonic T=0"


def check_total_T():
    rng = random.Random(13)
    count = 0
    for m in range(0, 4):
        g = build_level_graph(m)
        for _ in range(5):
            lap = NodeFunction(m, tuple(_rand_frac(rng) for _ in g.vertices))
            vals = biharmonic_values([_rand_frac(rng) for _ in range(3)], lap)
            cells = cells_from_global(vals, lap)
            glob = {w: tuple(lap.values[k] for k in cs) for w, cs in g.cells}
            if total_T(m, cells) != total_T_mass(m, glob):
                return False, f"m={m} scaling identity fails"
            count += 1
    return True, f"{count} consistent functions, m=0..3"


def check_green():
    rng = random.Random(17)
    g1 = build_level_graph(1)
    inner = [v for i, v in enumerate(g1.vertices) if i not in g1.boundary]
    worst = 0.0
    series = []
    for _ in range(5):
        pts = rng.sample(inner, rng.randint(1, 3))
        vals = [_rand_frac(rng) for _ in pts]
        worst = max(worst, green_extend(pts, [float(v) for v in vals], 5).interpolation_error)
        errs = [green_extend(pts, vals, m, exact=True).interpolation_error for m in (3, 4, 5)]
        series.append(errs)
        if any(b > a for a, b in zip(errs, errs[1:])):
            return False, f"exact error increased: {errs}"
    return worst < GREEN_TOL, f"float error at m=5 {worst:.3g}; exact errors m=3,4,5 {[list(map(str, s)) for s in series[:1]]}"


CRITERIA = [
    (1, "beta table", check_beta),
    (2, "new-level coefficients", check_new_level),
    (3, "bottom row closed forms", check_bottom),
    (4, "Haar structure", check_haar),
    (5, "Phi bump", check_phi),
    (6, "harmonic-bottom identity", check_harmonic_bottom),
    (7, "conductance calculus", check_conductance_calculus),
    (8, "resolvent construction", check_resolvent),
    (9, "biharmonic cell algebra", check_cell_algebra),
    (10, "values-only solver", check_values_only),
    (11, "total_T scaling", check_total_T),
    (12, "green_extend consistency", check_green),
]


def _line(num, name, ok, detail, seconds):
    return f"{'PASS' if ok else 'FAIL'} criterion {num:2d} ({name}): {detail} [{seconds:.1f}s]"


@pytest.mark.parametrize("num, name, check", CRITERIA, ids=[f"criterion_{n}" for n, *_ in CRITERIA])
def test_criterion(num, name, check, capsys):
    start = time.perf_counter()
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(num, name, ok, detail, time.perf_counter() - start))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for num, name, check in CRITERIA:
        start = time.perf_counter()
        try:
            ok, detail = check()
        except Exception as exc:  # report and keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failed += not ok
        print(_line(num, name, ok, detail, time.perf_counter() - start), flush=True)
    sys.exit(1 if failed else 0)

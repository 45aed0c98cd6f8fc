"""Haar analysis of the bottom-row energy form.

Bottom data t_0, ..., t_{2^m} is read as the step function f_m on [0, 1]
that equals t_0 on [0, 2^-(m+1)], t_i on the interval of length 2^-m centred
at i 2^-m, and t_{2^m} on the last half-interval.  Its Haar coefficients are
D_{n,k} = <Psi_{n,k}, f_m>, with Psi_{n,k} = +-2^(n/2) on the two halves of
[k 2^-n, (k+1) 2^-n].  Since D_{n,k} = 2^(n/2) r_{n,k} with r_{n,k} rational,
exact work uses r and D^2 = 2^n r^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .core import VertexId, boundary_point, bottom_row
from .energy import (
    ExtensionProblem,
    NodeFunction,
    integrate_piecewise_harmonic,
    minimize_energy,
)
from .linalg import solve_exact
from .trace import effective_form

TEN_THIRDS = Fraction(10, 3)


class HaarStructureError(ArithmeticError):
    """The bottom-row form is not a per-level diagonal Haar form."""


@dataclass(frozen=True)
class BottomData:
    m: int
    t: tuple

    def __post_init__(self):
        if len(self.t) != 2**self.m + 1:
            raise ValueError(f"bottom data on level {self.m} needs {2**self.m + 1} values")


@lru_cache(maxsize=None)
def haar_weights(m: int, n: int, k: int) -> tuple[Fraction, ...]:
    """Rational r with D^m_{n,k} = 2^(n/2) sum_i r_i t_i."""
    if not (0 <= n <= m and 0 <= k < 2**n):
        raise IndexError(f"Haar index (n={n}, k={k}) out of range for level {m}")
    # half-cells of width 2^-(m+1); half-cell s carries t_{(s+1)//2}
    span = 2 ** (m - n)
    start = k * 2 * span
    w = [Fraction(0)] * (2**m + 1)
    unit = Fraction(1, 2 ** (m + 1))
    for s in range(start, start + span):
        w[(s + 1) // 2] += unit
    for s in range(start + span, start + 2 * span):
        w[(s + 1) // 2] -= unit
    return tuple(w)


def _rational_part(t: Sequence, m: int, n: int, k: int):
    return sum(wi * ti for wi, ti in zip(haar_weights(m, n, k), t) if wi)


def haar_coefficient(data: BottomData, n: int, k: int) -> float:
    r = _rational_part(data.t, data.m, n, k)
    return 2 ** (n / 2) * float(r)


def haar_coefficient_squared(data: BottomData, n: int, k: int):
    """D_{n,k}^2, exact for rational data."""
    r = _rational_part(data.t, data.m, n, k)
    return 2**n * r * r


def haar_coefficients(data: BottomData) -> dict[tuple[int, int], float]:
    return {
        (n, k): haar_coefficient(data, n, k)
        for n in range(data.m + 1)
        for k in range(2**n)
    }


def bottom_form_matrix(m: int) -> list[list[Fraction]]:
    """Matrix Q of the traced bottom-row energy t -> t^T Q t (top point free)."""
    return effective_form(m, bottom_row(m)).laplacian()


def _level_gram(m: int, n: int) -> list[list[Fraction]]:
    """Matrix of t -> sum_k D_{n,k}^2."""
    size = 2**m + 1
    out = [[Fraction(0)] * size for _ in range(size)]
    scale = 2**n
    for k in range(2**n):
        w = haar_weights(m, n, k)
        nz = [(i, x) for i, x in enumerate(w) if x]
        for i, x in nz:
            row = out[i]
            for j, y in nz:
                row[j] += scale * x * y
    return out


@dataclass(frozen=True)
class GammaDecomposition:
    m: int
    gamma: dict  # Haar level n -> coefficient


def gamma_decomposition(m: int) -> GammaDecomposition:
    """Per-level coefficients with E(t) = sum_n gamma_n sum_k D_{n,k}^2 exactly.

    The coefficients are the exact least-squares fit over all matrix
    entries; any nonzero residual raises :class:`HaarStructureError`.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    q = bottom_form_matrix(m)
    size = len(q)
    grams = [_level_gram(m, n) for n in range(m + 1)]
    entries = [(i, j) for i in range(size) for j in range(i, size)]
    cols = [[gm[i][j] for i, j in entries] for gm in grams]
    target = [q[i][j] for i, j in entries]
    normal = {
        a: {b: sum(x * y for x, y in zip(cols[a], cols[b]) if x and y) for b in range(m + 1)}
        for a in range(m + 1)
    }
    rhs = {a: [sum(x * y for x, y in zip(cols[a], target) if x and y)] for a in range(m + 1)}
    sol = solve_exact(normal, rhs, 1)
    gamma = {n: sol[n][0] for n in range(m + 1)}
    for e, (i, j) in enumerate(entries):
        fitted = sum(gamma[n] * cols[n][e] for n in range(m + 1))
        if fitted != target[e]:
            raise HaarStructureError(
                f"level {m}: entry ({i}, {j}) is {target[e]}, per-level Haar form gives {fitted}"
            )
    return GammaDecomposition(m, gamma)


def gamma_coarsest(m: int) -> Fraction:
    """Closed form of the coefficient of D_{0,0}^2 on level m >= 1."""
    return Fraction(70 * 10**m, 5 * 3**m + 16 * 10**m)


def gamma_expected(m: int, n: int) -> Fraction:
    """Coefficient of Haar level n on data level m from the 10/3 recursion."""
    if not 0 <= n <= m:
        raise IndexError("Haar level out of range")
    if m < 1:
        raise ValueError("m must be at least 1")
    if n == m:
        # finest level descends to data level 0, where E = (3/2)(t_0 - t_1)^2 = 6 D_{0,0}^2
        return 6 * TEN_THIRDS**m
    return TEN_THIRDS**n * gamma_coarsest(m - n)


# --- bump function and harmonic-bottom identity -----------------------------

def phi_b_closed(m: int) -> Fraction:
    return Fraction(14 * 10**m, 3**m + 6 * 10**m)


def phi_c_closed(m: int) -> Fraction:
    return Fraction(5 * 3**m + 9 * 10**m, 5 * 3**m + 30 * 10**m)


def normal_derivative(u: NodeFunction, i: int):
    """(5/3)^m (2u(q_i) - sum of the two level-m neighbours)."""
    g = u.graph
    q = g.boundary[i]
    nb = g.neighbors[q]
    scale = g.conductance if u.exact else float(g.conductance)
    return scale * (2 * u.values[q] - sum(u.values[y] for y in nb))


@dataclass(frozen=True)
class PhiBump:
    m: int
    phi: NodeFunction
    b: object  # normal derivative at q_0
    c: object  # value at the midpoints of the sides through q_0
    b_from_c: object  # (5/3)(2 - 2c)


def phi_bump(m: int, exact: bool = True) -> PhiBump:
    """Harmonic off the bottom row and q_0, zero on the bottom row, 1 at q_0."""
    if m < 1:
        raise ValueError("m must be at least 1")
    one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
    cons = {v: zero for v in bottom_row(m)}
    cons[boundary_point(0, m)] = one
    phi = minimize_energy(ExtensionProblem(m, cons), exact=exact)
    mid1 = phi[VertexId((0,), 1)]
    mid2 = phi[VertexId((0,), 2)]
    if (mid1 != mid2) if exact else abs(mid1 - mid2) > 1e-12:
        raise ArithmeticError("bump is not symmetric")
    five_thirds = Fraction(5, 3) if exact else 5 / 3
    return PhiBump(m, phi, normal_derivative(phi, 0), mid1, five_thirds * (2 - 2 * mid1))


@dataclass(frozen=True)
class HarmonicBottom:
    u: NodeFunction
    normal_derivative_top: object
    top_value: object
    weighted_average: object
    integral: object


def bottom_weighted_average(t: Sequence):
    """(t_0 + 2 t_1 + ... + 2 t_{N-1} + t_N) / (2N)."""
    n = len(t) - 1
    total = t[0] + t[-1] + 2 * sum(t[1:-1])
    return Fraction(total, 2 * n) if isinstance(total, int) else total / (2 * n)


def harmonic_away_from_bottom(data: BottomData, exact: bool | None = None) -> HarmonicBottom:
    """Energy minimizer with the bottom row prescribed and q_0 free."""
    m = data.m
    cons = dict(zip(bottom_row(m), data.t))
    u = minimize_energy(ExtensionProblem(m, cons), exact=exact)
    integral, _ = integrate_piecewise_harmonic(u)
    return HarmonicBottom(
        u=u,
        normal_derivative_top=normal_derivative(u, 0),
        top_value=u[boundary_point(0)],
        weighted_average=bottom_weighted_average(list(data.t)),
        integral=integral,
    )


def bottom_energy(data: BottomData):
    """Energy of the harmonic-away-from-bottom extension, t^T Q t."""
    q = bottom_form_matrix(data.m)
    t = data.t
    return sum(q[i][j] * t[i] * t[j] for i in range(len(t)) for j in range(len(t)))


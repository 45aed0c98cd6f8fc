"""Symmetric positive-definite solves: exact sparse elimination and float."""

from __future__ import annotations

import heapq
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

import gmpy2
import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

# dense Cholesky below this size, sparse LU above
DENSE_LIMIT = 3000


class SingularSystemError(ArithmeticError):
    """A linear system that should be positive definite is singular."""


def min_degree_order(adj: Mapping[Hashable, Mapping[Hashable, object]], nodes) -> list:
    """Greedy minimum-degree ordering of ``nodes`` simulated on ``adj``.

    Fill-in is tracked symbolically; only the sparsity pattern is used.
    """
    pattern = {v: set(adj[v]) for v in adj}
    todo = set(nodes)
    heap = [(len(pattern[v]), i, v) for i, v in enumerate(sorted(todo, key=repr))]
    heapq.heapify(heap)
    tiebreak = len(heap)
    order = []
    while heap:
        deg, _, v = heapq.heappop(heap)
        if v not in todo:
            continue
        if deg != len(pattern[v]):
            tiebreak += 1
            heapq.heappush(heap, (len(pattern[v]), tiebreak, v))
            continue
        todo.discard(v)
        order.append(v)
        nbrs = pattern.pop(v)
        for x in nbrs:
            px = pattern[x]
            px.discard(v)
            px.update(nbrs)
            px.discard(x)
        for x in nbrs:
            if x in todo:
                tiebreak += 1
                heapq.heappush(heap, (len(pattern[x]), tiebreak, x))
    return order


def solve_exact(
    matrix: Mapping[Hashable, Mapping[Hashable, Fraction]],
    rhs: Mapping[Hashable, Sequence[Fraction]],
    ncols: int,
) -> dict:
    """Solve A X = B exactly for symmetric positive-definite sparse A.

    ``matrix[i][j]`` holds the nonzero entries (diagonal included);
    ``rhs[i]`` is row i of B with ``ncols`` entries (missing rows are zero).
    Returns a dict mapping each unknown to its row of X as Fractions.
    Arithmetic runs on gmpy2 rationals, which are much faster than Fraction.
    """
    mpq = gmpy2.mpq
    zero = [mpq(0)] * ncols
    a = {i: {j: mpq(x) for j, x in row.items()} for i, row in matrix.items()}
    b = {i: [mpq(x) for x in rhs.get(i, zero)] for i in a}
    offdiag = {i: {j: 1 for j in row if j != i} for i, row in a.items()}
    order = min_degree_order(offdiag, a.keys())
    steps = []
    for p in order:
        row = a.pop(p)
        pivot = row.pop(p, 0)
        if pivot == 0:
            raise SingularSystemError(f"zero pivot at unknown {p!r}")
        bp = b[p]
        for i, aip in row.items():
            ri = a[i]
            del ri[p]
            f = aip / pivot
            for j, apj in row.items():
                ri[j] = ri.get(j, 0) - f * apj
            bi = b[i]
            for k in range(ncols):
                if bp[k]:
                    bi[k] -= f * bp[k]
        steps.append((p, pivot, row))
    x: dict = {}
    for p, pivot, row in reversed(steps):
        vals = list(b[p])
        for j, apj in row.items():
            xj = x[j]
            for k in range(ncols):
                vals[k] -= apj * xj[k]
        x[p] = [v / pivot for v in vals]
    return {p: [Fraction(int(v.numerator), int(v.denominator)) for v in row] for p, row in x.items()}


def solve_float(matrix, rhs: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive-definite system in floating point.

    ``matrix`` may be dense or scipy sparse.
    """
    n = matrix.shape[0]
    if n == 0:
        return np.zeros_like(rhs, dtype=float)
    if scipy.sparse.issparse(matrix) and n > DENSE_LIMIT:
        try:
            lu = scipy.sparse.linalg.splu(matrix.tocsc())
        except RuntimeError as exc:
            raise SingularSystemError(str(exc)) from exc
        return lu.solve(np.asarray(rhs, dtype=float))
    dense = matrix.toarray() if scipy.sparse.issparse(matrix) else np.asarray(matrix, dtype=float)
    try:
        factor = scipy.linalg.cho_factor(dense)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    return scipy.linalg.cho_solve(factor, np.asarray(rhs, dtype=float))

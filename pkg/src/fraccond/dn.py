"""Partial exterior Dirichlet-to-Neumann data on window hat bases.

For a source hat ``phi_i`` supported in ``W1`` the solution ``u_i`` of the
homogeneous exterior-value problem has ``u_i = phi_i`` off the domain; the
entry ``M[j, i] = B(u_i, phi_j)`` pairs it with test hats ``phi_j`` supported
in ``W2``.  Eliminating the interior unknowns gives the Schur complement

    M = A[T, S] - A[T, I] A[I, I]^-1 A[I, S].
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .assembly import ConductivityField, StiffnessMatrix, assemble_stiffness, classify_dofs
from .errors import GridTooCoarse, InvalidArgument, PreconditionViolation
from .fracops import FracParams
from .geometry import IntervalSet, WindowConfig
from .grid import UniformGrid
from .solver import InteriorFactorization

# columns are solved in fixed blocks so the result never depends on `workers`
_COLUMN_BLOCK = 16


def window_nodes(grid: UniformGrid, window: IntervalSet) -> np.ndarray:
    """Nodes whose hat support ``[x-h, x+h]`` lies inside an open component of ``window``."""
    x, h = grid.x, grid.h
    ok = np.zeros(grid.n_nodes, dtype=bool)
    for lo, hi in window:
        ok |= (x - h > lo) & (x + h < hi)
    return np.flatnonzero(ok)


def _require_nodes(grid, window, name):
    nodes = window_nodes(grid, window)
    if nodes.size == 0:
        shortest = min(hi - lo for lo, hi in window)
        raise GridTooCoarse(
            f"no hat fits inside {name} {window}; need h < {shortest / 3:.4g} "
            f"(current h = {grid.h:.4g})", min_h=shortest / 3)
    return nodes


@dataclass
class DNMatrix:
    source_nodes: np.ndarray
    test_nodes: np.ndarray
    entries: np.ndarray = field(repr=False)
    grid: UniformGrid
    s: float
    gamma_hash: str
    w1: IntervalSet
    w2: IntervalSet

    @property
    def shape(self):
        return self.entries.shape

    def same_layout(self, other: "DNMatrix") -> Tuple[bool, str]:
        if self.entries.shape != other.entries.shape:
            return False, f"shape {self.entries.shape} vs {other.entries.shape}"
        if not self.grid.same_as(other.grid):
            return False, "different grids"
        if self.s != other.s:
            return False, f"s = {self.s} vs {other.s}"
        if self.w1 != other.w1 or self.w2 != other.w2:
            return False, "different windows"
        if not (np.array_equal(self.source_nodes, other.source_nodes)
                and np.array_equal(self.test_nodes, other.test_nodes)):
            return False, "different window node sets"
        return True, ""


def dn_matrix(cond: ConductivityField, cfg: WindowConfig, params: FracParams,
              grid: Optional[UniformGrid] = None, *, A: Optional[StiffnessMatrix] = None,
              workers: int = 1) -> DNMatrix:
    grid = cond.grid if grid is None else grid
    if not cond.grid.same_as(grid):
        raise InvalidArgument("conductivity lives on a different grid", module="dn")
    if not cond.is_window_clean(cfg.windows):
        raise PreconditionViolation("conductivity is not identically one on the windows",
                                    module="dn")
    src = _require_nodes(grid, cfg.w1, "w1")
    tst = _require_nodes(grid, cfg.w2, "w2")
    if A is None:
        A = assemble_stiffness(grid, cond, params)
    elif not A.grid.same_as(grid) or A.s != params.s:
        raise InvalidArgument("stiffness matrix does not match grid or exponent", module="dn")
    M = A.matrix
    interior, _ = classify_dofs(grid, cfg.omega_dom)
    out = M[np.ix_(tst, src)].copy()
    if interior.size:
        fac = InteriorFactorization(A, interior)
        A_is = M[np.ix_(interior, src)]
        A_ti = M[np.ix_(tst, interior)]
        blocks = [slice(k, min(k + _COLUMN_BLOCK, src.size))
                  for k in range(0, src.size, _COLUMN_BLOCK)]

        def column_block(sl):
            return sl, A_ti @ fac.solve(A_is[:, sl])

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(column_block, blocks))
        else:
            results = [column_block(sl) for sl in blocks]
        for sl, corr in results:  # disjoint columns
            out[:, sl] -= corr
    if not np.all(np.isfinite(out)):
        raise InvalidArgument("non-finite DN entries", module="dn")
    return DNMatrix(src, tst, out, grid, params.s, cond.digest(), cfg.w1, cfg.w2)


@dataclass
class DNComparison:
    max_abs: float
    argmax: Tuple[int, int]
    rel_frobenius: float
    difference: np.ndarray = field(repr=False)

    def lines(self):
        return [("max_abs_difference", f"{self.max_abs:.17g}"),
                ("argmax_test_source", f"{self.argmax[0]},{self.argmax[1]}"),
                ("relative_frobenius", f"{self.rel_frobenius:.17g}")]

    def __str__(self):
        return "\n".join(f"{k}: {v}" for k, v in self.lines())


def _relative(d, a, b):
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return float(np.linalg.norm(d) / scale) if scale > 0 else 0.0


def compare_dn(m1: DNMatrix, m2: DNMatrix) -> DNComparison:
    ok, why = m1.same_layout(m2)
    if not ok:
        raise InvalidArgument(f"DN matrices are not comparable: {why}", module="dn")
    d = m1.entries - m2.entries
    k = int(np.argmax(np.abs(d))) if d.size else 0
    arg = tuple(int(v) for v in np.unravel_index(k, d.shape))
    return DNComparison(float(np.abs(d).max()), arg, _relative(d, m1.entries, m2.entries), d)


def probe_functions(grid: UniformGrid, window: IntervalSet, nodes: np.ndarray,
                    count: int = 3) -> np.ndarray:
    """Smooth test functions on each window component sampled at ``nodes``.

    Column ``k`` of a component is ``t^k exp(1 - 1/(1 - t^2))`` with ``t``
    the affine map of the component onto ``(-1, 1)``.  The columns are the
    coefficient vectors (in the hat basis) of the interpolants.
    """
    x = grid.x[nodes]
    cols = []
    for lo, hi in window:
        t = (2.0 * x - lo - hi) / (hi - lo)
        inside = np.abs(t) < 1.0
        bump = np.zeros_like(t)
        bump[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
        cols.extend(bump * t**k for k in range(count))
    return np.stack(cols, axis=1)


def probe_pairing(M: DNMatrix, count: int = 3) -> np.ndarray:
    """``<Lambda f_a, g_b>`` for smooth probes ``f_a`` in W1 and ``g_b`` in W2."""
    F = probe_functions(M.grid, M.w1, M.source_nodes, count)
    G = probe_functions(M.grid, M.w2, M.test_nodes, count)
    return G.T @ M.entries @ F


def probe_difference(m1: DNMatrix, m2: DNMatrix, count: int = 3) -> float:
    """Relative Frobenius difference of the probe pairings."""
    ok, why = m1.same_layout(m2)
    if not ok:
        raise InvalidArgument(f"DN matrices are not comparable: {why}", module="dn")
    p1, p2 = probe_pairing(m1, count), probe_pairing(m2, count)
    return _relative(p1 - p2, p1, p2)

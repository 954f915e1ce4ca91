"""Cross-validation of the independent operator realizations.

Each check returns an :class:`OracleRow`; :func:`run_oracle_suite` collects
them into the table printed by ``oracle-check``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .assembly import ConductivityField, assemble_stiffness
from .fracops import (FracParams, MollifierSpec, fourier_energy, frac_laplacian_fourier,
                      frac_laplacian_quadrature, mollify, normalization_constant,
                      normalization_constant_quadrature)
from .grid import GridFunction, UniformGrid

DEFAULT_S = (0.1, 0.25, 0.4)


@dataclass
class OracleRow:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)

    def __str__(self):
        return f"{self.name:<40s} {self.value:11.3e} {self.tolerance:9.1e}  " + \
            ("PASS" if self.passed else "FAIL")


def smooth_bump(grid: UniformGrid, center: float = 0.0, radius: float = 1.0) -> GridFunction:
    t = (grid.x - center) / radius
    v = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    v[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return grid.zeros().with_values(v)


def check_constant(s: float, tol: float = 1e-6) -> OracleRow:
    exact = normalization_constant(1, s)
    quad = normalization_constant_quadrature(1, s)
    return OracleRow(f"C_(1,s) closed form vs integral, s={s:g}", abs(quad - exact) / exact, tol)


def check_parseval(s: float, n_nodes: int = 1024, tol: float = 1e-2) -> OracleRow:
    """Galerkin energy ``u^T A u`` against the Fourier energy of a bump."""
    grid = UniformGrid(-4.0, 4.0, n_nodes)
    u = smooth_bump(grid)
    A = assemble_stiffness(grid, ConductivityField.constant(grid), FracParams(s))
    lhs = float(u.values @ A.matrix @ u.values)
    rhs = fourier_energy(u, s)
    return OracleRow(f"Parseval energy identity, s={s:g}", abs(lhs - rhs) / rhs, tol)


def check_laplacian(s: float, n_nodes: int = 1024, tol: float = 1e-4) -> OracleRow:
    """Singular-integral quadrature against the Fourier realization on
    the nodes of ``[-1.5, 1.5]``."""
    grid = UniformGrid(-4.0, 4.0, n_nodes)
    u = smooth_bump(grid)
    nodes = np.flatnonzero(np.abs(grid.x) <= 1.5)
    quad = frac_laplacian_quadrature(u, nodes, s)
    four = frac_laplacian_fourier(u, s, pad=2, whole_line=True).values[nodes]
    return OracleRow(f"quadrature vs Fourier Laplacian, s={s:g}",
                     float(np.max(np.abs(quad - four)) / np.max(np.abs(four))), tol)


def check_commutation(s: float, n_nodes: int = 1024, eps: float = 0.2,
                      tol: float = 1e-6) -> OracleRow:
    """``(-Delta)^(s/2) (rho * u)`` against ``rho * (-Delta)^(s/2) u``,
    scaled by ``|u|_inf``, on nodes at distance ``> 1 + eps`` from the box edge."""
    grid = UniformGrid(-4.0, 4.0, n_nodes)
    u = smooth_bump(grid)
    rho = MollifierSpec(eps)
    a = frac_laplacian_fourier(mollify(u, rho), s / 2, pad=2, whole_line=True).values
    b = mollify(frac_laplacian_fourier(u, s / 2, pad=2, whole_line=True), rho,
                check_support=False).values
    keep = np.abs(grid.x) < 3.0 - eps
    return OracleRow(f"mollifier commutation, s={s:g}",
                     float(np.max(np.abs(a - b)[keep]) / u.sup()), tol)


def run_oracle_suite(s_values: Sequence[float] = DEFAULT_S, n_nodes: int = 1024) -> List[OracleRow]:
    rows = [check_constant(s) for s in s_values]
    rows += [check_parseval(s, n_nodes) for s in s_values]
    rows += [check_laplacian(s, n_nodes) for s in s_values]
    rows += [check_commutation(s, n_nodes) for s in s_values]
    return rows


def format_table(rows: List[OracleRow]) -> str:
    head = f"{'check':<40s} {'value':>11s} {'tol':>9s}  result"
    return "\n".join([head] + [str(r) for r in rows])

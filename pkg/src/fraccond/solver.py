"""Exterior-value problems for the discrete conductivity form.

The unknowns are the nodal values on the interior index set; every other node
carries prescribed exterior data.  The interior block is factorized once by
Cholesky and the factor can be reused for many right-hand sides.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from ._blas import serial_blas
from .assembly import StiffnessMatrix
from .errors import AssemblyError, InvalidArgument, NumericalBreakdown
from .grid import GridFunction

RESIDUAL_TOL = 1e-10


def _as_array(A) -> np.ndarray:
    return A.matrix if isinstance(A, StiffnessMatrix) else np.asarray(A, dtype=float)


class InteriorFactorization:
    """Cholesky factor of ``A[I, I]``; read-only after construction."""

    def __init__(self, A: Union[StiffnessMatrix, np.ndarray], interior):
        M = _as_array(A)
        self.interior = np.asarray(interior, dtype=int)
        self.size = self.interior.size
        self.norm = float(np.max(np.sum(np.abs(M), axis=1))) if M.size else 0.0
        self.cond_estimate = 1.0
        if self.size == 0:
            self._factor = None
            return
        block = M[np.ix_(self.interior, self.interior)]
        with serial_blas():
            try:
                self._factor = linalg.cho_factor(block, lower=True, check_finite=True)
            except linalg.LinAlgError:
                lam = linalg.eigvalsh(block)
                scale = max(abs(lam[-1]), np.finfo(float).tiny)
                if lam[0] < -1e-13 * scale:
                    raise AssemblyError(
                        f"interior block is indefinite (smallest eigenvalue {lam[0]:.3e})",
                        min_eigenvalue=float(lam[0])) from None
                raise NumericalBreakdown(
                    f"Cholesky failed; condition estimate {scale / max(lam[0], 1e-300):.3e}",
                    cond_estimate=float(scale / max(lam[0], 1e-300))) from None
            anorm = float(np.max(np.sum(np.abs(block), axis=0)))
            rcond, info = lapack.dpocon(self._factor[0], anorm, uplo="L")
        self.cond_estimate = float(1.0 / rcond) if rcond > 0 else np.inf

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._factor is None:
            return np.zeros_like(rhs)
        with serial_blas():
            return linalg.cho_solve(self._factor, rhs, check_finite=False)


@dataclass
class ExteriorValueProblem:
    """``u = g`` off the interior set and ``(A u)_I = F_I`` on it.

    ``A`` may be a :class:`StiffnessMatrix` or any dense symmetric matrix
    (for instance a stiffness matrix minus a potential mass matrix).  Values
    of ``g`` on interior nodes are ignored.  ``F`` defaults to zero.
    """

    A: Union[StiffnessMatrix, np.ndarray]
    interior: np.ndarray
    g: GridFunction
    F: Optional[GridFunction] = None
    exterior: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.g.grid.n_nodes
        M = _as_array(self.A)
        if M.shape != (n, n):
            raise InvalidArgument(f"matrix shape {M.shape} does not match {n} grid nodes",
                                  module="solver")
        if isinstance(self.A, StiffnessMatrix) and not self.A.grid.same_as(self.g.grid):
            raise InvalidArgument("stiffness matrix and data live on different grids",
                                  module="solver")
        self.interior = np.unique(np.asarray(self.interior, dtype=int))
        full = np.setdiff1d(np.arange(n), self.interior)
        if self.exterior is None:
            self.exterior = full
        else:
            ext = np.unique(np.asarray(self.exterior, dtype=int))
            if not np.array_equal(ext, full):
                raise InvalidArgument("interior and exterior indices must partition the nodes",
                                      module="solver")
            self.exterior = ext
        if self.interior.size and (self.interior[0] < 0 or self.interior[-1] >= n):
            raise InvalidArgument("interior index out of range", module="solver")


def solve_exterior_value(p: ExteriorValueProblem, *,
                         factor: Optional[InteriorFactorization] = None) -> GridFunction:
    M = _as_array(p.A)
    I, E = p.interior, p.exterior
    u = np.zeros(p.g.grid.n_nodes)
    u[E] = p.g.values[E]
    if I.size == 0:
        return p.g.with_values(u)
    if factor is None:
        factor = InteriorFactorization(M, I)
    elif not np.array_equal(factor.interior, I):
        raise InvalidArgument("factorization was built for another interior set", module="solver")
    b = -M[np.ix_(I, E)] @ u[E]
    if p.F is not None:
        b = b + p.F.values[I]
    u[I] = factor.solve(b)
    res = M[np.ix_(I, I)] @ u[I] - b
    bound = RESIDUAL_TOL * factor.norm * np.max(np.abs(u))
    if np.max(np.abs(res)) > bound:
        raise NumericalBreakdown(
            f"interior residual {np.max(np.abs(res)):.3e} exceeds {bound:.3e} "
            f"(condition estimate {factor.cond_estimate:.3e})",
            cond_estimate=factor.cond_estimate)
    return p.g.with_values(u)


@dataclass
class MaxPrincipleReport:
    passed: bool
    min_value: float
    argmin: int
    x_min: float
    threshold: float
    data_nonnegative: bool

    def __str__(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (f"max principle {verdict}: min u = {self.min_value:.3e} at node {self.argmin} "
                f"(x = {self.x_min:.6g}), threshold {self.threshold:.3e}")


def check_max_principle(u: GridFunction, g: GridFunction, tol: float = 1e-8,
                        exterior=None) -> MaxPrincipleReport:
    """Pass iff ``min u >= -tol * max(1, |g|_inf)``.

    ``exterior`` restricts the nonnegativity check of the data; it defaults
    to all nodes.  A violated data precondition is recorded, not raised.
    """
    gv = g.values if exterior is None else g.values[np.asarray(exterior, dtype=int)]
    threshold = -tol * max(1.0, float(np.max(np.abs(g.values))))
    k = int(np.argmin(u.values))
    umin = float(u.values[k])
    return MaxPrincipleReport(passed=umin >= threshold, min_value=umin, argmin=k,
                              x_min=float(u.grid.x[k]), threshold=threshold,
                              data_nonnegative=bool(np.all(gv >= 0.0)))

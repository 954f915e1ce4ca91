"""Galerkin discretization of the conductivity form on a uniform P1 grid.

The bilinear form is

    B(u, v) = C/2 ∬ G(x) G(y) (u(x)-u(y)) (v(x)-v(y)) / |x-y|^(1+2s) dx dy

with ``G`` the square root of the conductivity.  Hats at every grid node
form the basis; the two hats at the box ends reach one cell beyond the box
("ghost" cells).  ``G`` is the piecewise-linear interpolant of its nodal
values and equals one on the ghost cells and beyond.

Element pairs are split by their index distance ``d``:

* ``d = 0`` and ``d = 1`` are integrated after a singularity-removing change
  of variables (closed form for ``d = 0``; Duffy splitting with
  Gauss-Jacobi in the radial variable for ``d = 1``);
* ``d = 2`` uses a tensor Gauss rule of doubled order;
* ``d >= 3`` uses a tensor Gauss rule; the uniform grid makes the kernel
  block Toeplitz, so one small kernel matrix per offset is enough.

The part of the double integral with one variable outside the ghost-extended
box is integrated analytically in that variable.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import hashlib
import struct
from typing import Optional

import numpy as np
from scipy import special

from ._blas import serial_blas
from .errors import InvalidArgument, UnsupportedConfiguration
from .fracops import FracParams
from .geometry import IntervalSet
from .grid import GridFunction, UniformGrid

DEFAULT_ORDER = 8


@dataclass
class ConductivityField:
    """Square root of a conductivity, ``G = gamma^(1/2)``, on a grid."""

    gamma_sqrt: GridFunction
    alpha: Optional[float] = None

    def __post_init__(self):
        g = self.gamma_sqrt.values
        lowest = float(np.min(g))
        if self.alpha is None:
            self.alpha = lowest
        if not self.alpha > 0:
            raise InvalidArgument(f"conductivity lower bound must be positive, got {self.alpha}",
                                  module="assembly")
        if lowest < self.alpha:
            raise InvalidArgument(f"gamma^(1/2) drops to {lowest} below alpha = {self.alpha}",
                                  module="assembly")

    @classmethod
    def constant(cls, grid: UniformGrid) -> "ConductivityField":
        return cls(grid.ones(), alpha=1.0)

    @classmethod
    def from_deviation(cls, m: GridFunction, alpha: Optional[float] = None) -> "ConductivityField":
        return cls(m.with_values(1.0 + m.values), alpha=alpha)

    @property
    def grid(self) -> UniformGrid:
        return self.gamma_sqrt.grid

    @property
    def deviation(self) -> GridFunction:
        return self.gamma_sqrt.with_values(self.gamma_sqrt.values - 1.0)

    @property
    def gamma(self) -> GridFunction:
        return self.gamma_sqrt.with_values(self.gamma_sqrt.values ** 2)

    def is_window_clean(self, windows: IntervalSet) -> bool:
        x = self.grid.x
        inside = windows.contains(x, strict=False)
        return bool(np.all(self.gamma_sqrt.values[inside] == 1.0))

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.gamma_sqrt.values).tobytes()).hexdigest()[:16]


@dataclass
class StiffnessMatrix:
    matrix: np.ndarray = field(repr=False)
    grid: UniformGrid
    s: float
    order: int = DEFAULT_ORDER
    near_radius: int = 2

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def block(self, rows, cols) -> np.ndarray:
        return self.matrix[np.ix_(rows, cols)]

    # binary layout: b"FRACSTF1" | uint64 n | float64 s | float64 h | n*n float64, row-major, LE
    MAGIC = b"FRACSTF1"

    def to_bytes(self) -> bytes:
        head = self.MAGIC + struct.pack("<Qdd", self.n, self.s, self.grid.h)
        return head + np.ascontiguousarray(self.matrix, dtype="<f8").tobytes()

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @staticmethod
    def read_binary(path):
        """Return ``(matrix, s, h)`` from a file written by :meth:`save`."""
        with open(path, "rb") as fh:
            raw = fh.read()
        if raw[:8] != StiffnessMatrix.MAGIC:
            raise InvalidArgument(f"{path}: not a stiffness matrix file", module="assembly")
        n, s, h = struct.unpack("<Qdd", raw[8:32])
        mat = np.frombuffer(raw[32:], dtype="<f8")
        if mat.size != n * n:
            raise InvalidArgument(f"{path}: truncated matrix payload", module="assembly")
        return mat.reshape(n, n).copy(), s, h

    def save_csv(self, path) -> None:
        x = self.grid.x
        with open(path, "w") as fh:
            fh.write(f"# s={self.s!r} h={self.grid.h!r} box=({self.grid.lo!r},{self.grid.hi!r})\n")
            fh.write("node," + ",".join(f"{v:.17g}" for v in x) + "\n")
            for xi, row in zip(x, self.matrix):
                fh.write(f"{xi:.17g}," + ",".join(f"{v:.17g}" for v in row) + "\n")


# --------------------------------------------------------------------------
# quadrature helpers

def _gauss01(q):
    t, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (t + 1.0), 0.5 * w


def _jacobi01(q, power):
    """Nodes/weights on [0, 1] for the weight ``t**power``."""
    x, w = special.roots_jacobi(q, 0.0, power)
    return 0.5 * (x + 1.0), w * 0.5 ** (power + 1.0)


def _extended_gamma(cond: ConductivityField, g_inf: float) -> np.ndarray:
    """Nodal G on nodes -1..N; the ghost nodes carry the exterior value."""
    return np.concatenate(([g_inf], cond.gamma_sqrt.values, [g_inf]))


def _element_fields(gext, t, w, h):
    """Per-element quadrature data: ``gw[e, q] = h w_q G(x_eq)`` and
    ``G[e, q, a] = gw[e, q] psi_a(t_q)`` for the two local hats."""
    gl, gr = gext[:-1], gext[1:]
    gq = gl[:, None] * (1.0 - t)[None, :] + gr[:, None] * t[None, :]
    gw = h * w[None, :] * gq
    psi = np.stack([1.0 - t, t], axis=1)  # (q, 2)
    return gw, gw[:, :, None] * psi[None, :, :], psi


class _Scatter:
    """Accumulator indexed by extended node number (node + 1); ghost rows are dropped at the end."""

    def __init__(self, n_nodes):
        self.a = np.zeros((n_nodes + 2, n_nodes + 2))

    def add_pairs(self, e, f, block, *, transpose=True):
        # element e has nodes e-1, e  -> extended indices e, e+1
        for a in range(2):
            for b in range(2):
                self.a[e + a, f + b] += block[:, a, b]
                if transpose:
                    self.a[f + b, e + a] += block[:, a, b]

    def result(self):
        return self.a[1:-1, 1:-1]


def _offset_terms(d, tq, G, gw, h, s):
    """Contributions of all element pairs (e, e-d) for a fixed offset d > 0."""
    r = (d + tq[:, None] - tq[None, :]) * h
    kern = np.abs(r) ** (-1.0 - 2.0 * s)
    e_sl = slice(d, G.shape[0])
    f_sl = slice(0, G.shape[0] - d)
    tmp = np.matmul(kern, G[f_sl])  # (m, q, 2)
    cross = np.einsum("eqa,eqb->eab", G[e_sl], tmp)
    s_e = gw[f_sl] @ kern.T  # weights seen from e
    s_f = gw[e_sl] @ kern  # weights seen from f
    return cross, s_e, s_f


def _separated(gext, h, s, offsets, q, workers):
    """Mass-like and cross terms for element pairs with the given offsets."""
    tq, wq = _gauss01(q)
    gw, G, psi = _element_fields(gext, tq, wq, h)
    n_el = gw.shape[0]
    acc = _Scatter(n_el - 1)
    S = np.zeros_like(gw)
    offsets = [d for d in offsets if d < n_el]

    def job(d):
        return d, _offset_terms(d, tq, G, gw, h, s)

    if workers and workers > 1:
        chunk = max(1, len(offsets) // (4 * workers))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = pool.map(job, offsets, chunksize=chunk)
            for d, (cross, s_e, s_f) in results:  # merged in offset order
                _merge(acc, S, d, cross, s_e, s_f, n_el)
    else:
        for d in offsets:
            _merge(acc, S, d, *_offset_terms(d, tq, G, gw, h, s), n_el)
    # separated pairs: C [ int G psi_a psi_b S  -  sum cross ]
    mass = np.einsum("eqa,qb,eq->eab", G, psi, S)
    return acc, mass


def _merge(acc, S, d, cross, s_e, s_f, n_el):
    e = np.arange(d, n_el)
    f = e - d
    acc.add_pairs(e, f, -cross)
    S[d:] += s_e
    S[: n_el - d] += s_f


def _diag_blocks(scatter, mass):
    e = np.arange(mass.shape[0])
    for a in range(2):
        for b in range(2):
            scatter.a[e + a, e + b] += mass[:, a, b]


def _identical(gext, h, s):
    """Local 2x2 blocks of each element with itself (closed form, G linear)."""
    p = 1.0 - 2.0 * s
    al = gext[:-1]
    be = gext[1:] - gext[:-1]
    B = special.beta
    J = 2.0 * (al**2 * B(p + 1, 2) + al * be * B(p + 1, 3) + be**2 / 3 * B(p + 1, 4)
               + al * be * B(p + 2, 2) + be**2 / 2 * B(p + 2, 3))
    sig = np.array([-1.0, 1.0])
    return 0.5 * h ** (1.0 - 2.0 * s) * J[:, None, None] * np.outer(sig, sig)[None]


def _adjacent(gext, h, s, q):
    """3x3 blocks for element pairs sharing node k (both orders), on nodes k-1, k, k+1."""
    rho, wr = _jacobi01(4, 2.0 - 2.0 * s)
    t, wt = _gauss01(q)
    k = np.arange(0, gext.size - 2)  # shared node index, extended numbering k+1
    g_m, g_0, g_p = gext[k], gext[k + 1], gext[k + 2]
    out = np.zeros((k.size, 3, 3))
    R, T = np.meshgrid(rho, t, indexing="ij")
    W = (wr[:, None] * wt[None, :]) * (1.0 + T) ** (-1.0 - 2.0 * s)
    for P, Q, dvec in (
        (R, R * T, np.stack([np.ones_like(T), T - 1.0, -T])),  # P >= Q
        (R * T, R, np.stack([T, 1.0 - T, -np.ones_like(T)])),  # Q > P
    ):
        gx = g_0[:, None, None] + (g_m - g_0)[:, None, None] * P[None]
        gy = g_0[:, None, None] + (g_p - g_0)[:, None, None] * Q[None]
        weight = gx * gy * W[None]
        out += np.einsum("krt,art,brt->kab", weight, dvec, dvec)
    return h ** (1.0 - 2.0 * s) * out


def _tail(gext, h, s, a, b, q):
    """``G_inf int G psi_a psi_b w`` with ``w`` the exterior kernel mass beyond ``[a, b]``."""
    g_inf = gext[0]
    tq, wq = _gauss01(q)
    gw, G, psi = _element_fields(gext, tq, wq, h)
    n_el = gw.shape[0]
    x = a + h * (np.arange(n_el)[:, None] + tq[None, :])
    wl = (x - a) ** (-2.0 * s) / (2.0 * s)
    wr = (b - x) ** (-2.0 * s) / (2.0 * s)
    # the singular factor on the ghost cells is done exactly; G = G_inf there
    wl[0] = 0.0
    wr[-1] = 0.0
    mass = g_inf * np.einsum("eqa,qb,eq->eab", G, psi, wl + wr)
    ghost = g_inf**2 * h ** (1.0 - 2.0 * s) / (2.0 * s * (3.0 - 2.0 * s))
    mass[0, 1, 1] += ghost
    mass[-1, 0, 0] += ghost
    return mass


def assemble_stiffness(grid: UniformGrid, cond: ConductivityField, params: FracParams, *,
                       order: int = DEFAULT_ORDER, workers: int = 1) -> StiffnessMatrix:
    """Dense matrix ``A_ij = B(phi_i, phi_j)`` over all node hats.

    ``G`` must be constant on the margin band; that constant (one for the
    conductivities built here) is its value on the whole exterior of the box.
    ``workers > 1`` evaluates the far-field offsets in a thread pool; the
    merge happens in offset order so the result does not depend on it.
    """
    if not cond.grid.same_as(grid):
        raise InvalidArgument("conductivity lives on a different grid", module="assembly")
    if params.n != 1:
        raise InvalidArgument("only the one-dimensional realization is implemented",
                              module="assembly")
    gvals = cond.gamma_sqrt.values
    g_inf = gvals[0]
    if np.any(gvals[grid.margin_mask()] != g_inf):
        raise UnsupportedConfiguration(
            "gamma^(1/2) must be constant (normally one) on the margin band; "
            "the exterior tail formula assumes it")
    s, h, C = params.s, grid.h, params.c_ns
    gext = _extended_gamma(cond, g_inf)
    n = grid.n_nodes
    n_el = n + 1
    a, b = grid.lo - h, grid.hi + h

    with serial_blas():
        far, far_mass = _separated(gext, h, s, range(3, n_el), order, workers)
        gap, gap_mass = _separated(gext, h, s, [2], 2 * order, 1)
    acc = _Scatter(n)
    acc.a += far.a + gap.a
    _diag_blocks(acc, far_mass + gap_mass + _tail(gext, h, s, a, b, order))
    A = C * acc.a

    ident = _identical(gext, h, s)
    e = np.arange(n_el)
    for i in range(2):
        for j in range(2):
            A[e + i, e + j] += C * ident[:, i, j]
    adj = _adjacent(gext, h, s, 2 * order)
    k = np.arange(adj.shape[0]) + 1  # extended index of the shared node
    for i in range(3):
        for j in range(3):
            A[k - 1 + i, k - 1 + j] += C * adj[:, i, j]

    A = A[1:-1, 1:-1]
    A = 0.5 * (A + A.T)
    return StiffnessMatrix(A, grid, s, order=order)


def classify_dofs(grid: UniformGrid, omega_dom: IntervalSet):
    """Split node indices into those whose hat support lies strictly inside
    the domain and all the others."""
    x = grid.x
    h = grid.h
    inside = np.zeros(grid.n_nodes, dtype=bool)
    for lo, hi in omega_dom:
        inside |= (x - h > lo) & (x + h < hi)
    return np.flatnonzero(inside), np.flatnonzero(~inside)


def assemble_potential_mass(grid: UniformGrid, q: GridFunction) -> np.ndarray:
    """Tridiagonal ``M_ij = int q phi_i phi_j dx`` with ``q`` piecewise linear,
    two-point Gauss per cell (exact for this integrand)."""
    t, w = _gauss01(2)
    qv = q.values
    h = grid.h
    n = grid.n_nodes
    M = np.zeros((n, n))
    ql, qr = qv[:-1], qv[1:]
    psi = np.stack([1.0 - t, t], axis=1)
    qq = ql[:, None] * (1 - t)[None] + qr[:, None] * t[None]  # (cells, 2)
    loc = h * np.einsum("cq,q,qa,qb->cab", qq, w, psi, psi)
    c = np.arange(n - 1)
    for a in range(2):
        for b in range(2):
            M[c + a, c + b] += loc[:, a, b]
    return M


def energy(A: StiffnessMatrix, u: GridFunction, v: GridFunction) -> float:
    if not (u.grid.same_as(A.grid) and v.grid.same_as(A.grid)):
        raise InvalidArgument("grid mismatch between matrix and functions", module="assembly")
    return float(v.values @ (A.matrix @ u.values))

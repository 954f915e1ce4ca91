"""Counterexample conductivities with invariant partial exterior data.

The bounded-domain recipe:

1. pick an auxiliary interval ``omega`` away from the domain and windows and
   a radius ``eps`` that keeps all ``5 eps`` neighbourhoods apart;
2. build a smooth cutoff ``eta`` equal to one near ``omega``;
3. solve ``(-Delta)^s mt = 0`` in ``Omega' = Omega_{2.5 eps}`` with ``mt = eta``
   outside (Gamma = 1);
4. mollify, ``m2 = rho_eps * mt``, and set ``Gamma2 = 1 + m2``.

On the uniform grid with ``Gamma = 1`` the stiffness matrix is Toeplitz, so
the discrete convolution in step 4 commutes with it: ``m2`` is discretely
s-harmonic on every interior node of ``Omega`` whose stencil stays in
``Omega'``.  The scaled recipe solves in ``Omega_{2 eps}`` and multiplies by
``C_eps`` so that ``|m2| <= 1/2``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from .assembly import (ConductivityField, StiffnessMatrix, assemble_potential_mass,
                       assemble_stiffness, classify_dofs)
from .dn import DNComparison, compare_dn, dn_matrix, probe_difference
from .errors import (AssemblyError, ConstructionFailed, ConstructionInfeasible, FamilyInfeasible,
                     InvalidArgument, PreconditionViolation, StudyFailed)
from .fracops import FracParams, MollifierSpec, bessel_diagnostic_norm, frac_laplacian_fourier, mollify
from .geometry import IntervalSet, WindowConfig, choose_omega, dilate, select_epsilon
from .grid import GridFunction, UniformGrid
from .solver import ExteriorValueProblem, check_max_principle, solve_exterior_value

POSITIVITY_TOL = 1e-8
SCALED_TOL = 1e-12
IDENTITY_PAD = 2


@dataclass
class CutoffSpec:
    eta: GridFunction
    inner_set: IntervalSet
    outer_set: IntervalSet
    radius: float = 0.0


def _inside_box(grid: UniformGrid, S: IntervalSet) -> bool:
    return not S or (S.lo > grid.lo + grid.margin_band and S.hi < grid.hi - grid.margin_band)


def build_cutoff(omega: IntervalSet, epsilon: float, grid: UniformGrid,
                 rho: Optional[MollifierSpec] = None) -> CutoffSpec:
    """``eta = rho_{eps/2} * 1[omega_{2.5 eps}]`` with exact ones and zeros.

    Nodes whose whole stencil lies in the indicator get exactly one; nodes
    whose stencil misses it get exactly zero.
    """
    if not epsilon > 0:
        raise InvalidArgument("epsilon must be positive", module="counterexample")
    if not omega:
        return CutoffSpec(grid.zeros(), IntervalSet.empty(), IntervalSet.empty())
    rho = MollifierSpec(epsilon / 2) if rho is None else rho
    if rho.epsilon > epsilon / 2 * (1 + 1e-12):
        raise InvalidArgument("cutoff mollifier radius must not exceed eps/2", module="counterexample")
    inner, outer = dilate(omega, 2 * epsilon), dilate(omega, 3 * epsilon)
    if not _inside_box(grid, outer):
        raise ConstructionInfeasible(f"omega_3eps = {outer} leaves the box minus its margin band")
    chi = dilate(omega, 2.5 * epsilon).contains(grid.x).astype(float)
    w = rho.samples(grid.h)
    eta = np.convolve(chi, w, mode="same")
    reach = np.convolve(1.0 - chi, (w > 0).astype(float), mode="same")
    eta[reach == 0.0] = 1.0
    np.clip(eta, 0.0, 1.0, out=eta)
    return CutoffSpec(grid.zeros().with_values(eta), inner, outer, rho.epsilon)


# --------------------------------------------------------------------------
# reports

@dataclass
class ScalingRecord:
    epsilon: float
    n: int
    ball_measure: float
    rho_sup: float
    mt_l2: float
    c_eps: float
    m2_sup: float
    truncation_delta: Optional[float] = None

    @staticmethod
    def formula(epsilon, n, ball_measure, rho_sup, mt_l2):
        return epsilon ** (n / 2) / (2.0 * math.sqrt(ball_measure) * math.sqrt(rho_sup) * mt_l2)


@dataclass
class IdentityReport:
    residual_inf: float
    reference_inf: float
    relative: float
    worst_node: int


@dataclass
class CounterexampleReport:
    mode: str
    gamma2: ConductivityField
    m2: GridFunction = field(repr=False)
    m_tilde: GridFunction = field(repr=False)
    epsilon: float
    omega: IntervalSet
    omega_source: str
    solve_set: IntervalSet
    cutoff: CutoffSpec = field(repr=False)
    flags: Dict[str, bool]
    m2_min: float
    m2_sup: float
    m_tilde_min: float
    bessel_norm: float
    tolerance: float
    dn_invariance: Optional[DNComparison] = None
    dn_probe_difference: Optional[float] = None
    identity: Optional[IdentityReport] = None
    scaling: Optional[ScalingRecord] = None

    @property
    def degenerate(self) -> bool:
        return not np.any(self.m2.values != 0.0)

    @property
    def status(self) -> str:
        if not all(self.flags.values()):
            return "INVALID"
        return "DEGENERATE" if self.degenerate else "VALID"

    @property
    def valid(self) -> bool:
        return all(self.flags.values())

    def lines(self):
        g = self.gamma2.grid
        out = [("status", self.status),
               ("mode", self.mode),
               ("grid", f"[{g.lo!r}, {g.hi!r}] n_nodes={g.n_nodes} h={g.h!r}"),
               ("epsilon", f"{self.epsilon!r}"),
               ("omega", repr(self.omega)),
               ("omega_source", self.omega_source),
               ("solve_set", repr(self.solve_set)),
               ("cutoff_inner", repr(self.cutoff.inner_set)),
               ("cutoff_outer", repr(self.cutoff.outer_set))]
        out += [(f"flag_{k}", "PASS" if v else "FAIL") for k, v in self.flags.items()]
        out += [("tolerance", f"{self.tolerance!r}"),
                ("m_tilde_min", f"{self.m_tilde_min:.17g}"),
                ("m2_min", f"{self.m2_min:.17g}"),
                ("m2_sup", f"{self.m2_sup:.17g}"),
                ("bessel_norm", f"{self.bessel_norm:.17g}"),
                ("gamma2_digest", self.gamma2.digest())]
        if self.dn_invariance is not None:
            out += [(f"dn_{k}", v) for k, v in self.dn_invariance.lines()]
        if self.dn_probe_difference is not None:
            out.append(("dn_probe_relative_difference", f"{self.dn_probe_difference:.17g}"))
        if self.identity is not None:
            out += [("identity_residual_relative", f"{self.identity.relative:.17g}"),
                    ("identity_residual_inf", f"{self.identity.residual_inf:.17g}")]
        if self.scaling is not None:
            sc = self.scaling
            out += [("scaling_c_eps", f"{sc.c_eps:.17g}"),
                    ("scaling_rho_sup", f"{sc.rho_sup:.17g}"),
                    ("scaling_ball_measure", f"{sc.ball_measure!r}"),
                    ("scaling_mt_l2", f"{sc.mt_l2:.17g}"),
                    ("scaling_m2_sup", f"{sc.m2_sup:.17g}")]
            if sc.truncation_delta is not None:
                out.append(("scaling_truncation_delta", f"{sc.truncation_delta:.17g}"))
        return out

    def to_text(self) -> str:
        return "".join(f"{k}: {v}\n" for k, v in self.lines())


# --------------------------------------------------------------------------
# pipelines

def _omega_and_eps(cfg, omega):
    if omega is None:
        omega, source = choose_omega(cfg), "middle third of the largest gap"
    else:
        source = "override" if omega else "override (empty)"
    return omega, source, select_epsilon(cfg, omega)


def _common_flags(cfg, grid, m2, omega, eps, eta_sup, tol, bessel):
    x = grid.x
    vals = m2.values
    keep = dilate(cfg.omega_dom, 5 * eps) if cfg.omega_dom else IntervalSet.empty()
    if omega:
        keep = keep | dilate(omega, 5 * eps)
    outside = ~keep.contains(x)
    on_windows = cfg.windows.contains(x, strict=False)
    return {
        "nonneg": bool(vals.min() >= -tol * eta_sup),
        "bounded": bool(np.isfinite(m2.sup())),
        "sobolev_diag": bool(np.isfinite(bessel)),
        "support": bool(np.all(vals[on_windows] == 0.0) and np.all(vals[outside] == 0.0)),
    }


def _constant_stiffness(grid, params, stiffness, workers):
    if stiffness is None:
        return assemble_stiffness(grid, ConductivityField.constant(grid), params, workers=workers)
    if not stiffness.grid.same_as(grid) or stiffness.s != params.s:
        raise InvalidArgument("stiffness matrix does not match grid or exponent",
                              module="counterexample")
    return stiffness


def _harmonic_extension(A0, grid, solve_set, eta, tol):
    interior, _ = classify_dofs(grid, solve_set)
    mt = solve_exterior_value(ExteriorValueProblem(A0, interior, eta))
    mp = check_max_principle(mt, eta, tol)
    if not mp.passed:
        raise ConstructionFailed(f"discrete maximum principle violated: {mp}", report=mp)
    return mt


def _attach_checks(report, cfg, params, grid, A0, with_dn, workers):
    one = ConductivityField.constant(grid)
    report.identity = verify_identity(one, report.gamma2, cfg.omega_dom, params, grid)
    if with_dn:
        d1 = dn_matrix(one, cfg, params, A=A0, workers=workers)
        d2 = dn_matrix(report.gamma2, cfg, params, workers=workers)
        report.dn_invariance = compare_dn(d1, d2)
        report.dn_probe_difference = probe_difference(d1, d2)
    return report


def build_bounded(cfg: WindowConfig, params: FracParams, grid: UniformGrid, *,
                  omega: Optional[IntervalSet] = None, eta_scale: float = 1.0,
                  tol: float = POSITIVITY_TOL, with_dn: bool = True,
                  stiffness: Optional[StiffnessMatrix] = None,
                  workers: int = 1) -> CounterexampleReport:
    """Bounded-domain construction.  ``omega`` overrides the automatic choice
    (an empty set gives the degenerate ``Gamma2 = 1``); ``eta_scale`` in
    ``(0, 1]`` multiplies the cutoff."""
    if not 0.0 < eta_scale <= 1.0:
        raise InvalidArgument("eta_scale must lie in (0, 1]", module="counterexample")
    omega, source, eps = _omega_and_eps(cfg, omega)
    solve_set = dilate(cfg.omega_dom, 2.5 * eps)
    reach = dilate(cfg.omega_dom, 5 * eps) | (dilate(omega, 5 * eps) if omega else IntervalSet.empty())
    if not _inside_box(grid, reach):
        raise ConstructionInfeasible(f"5-eps neighbourhoods {reach} leave the box minus its margin")
    cut = build_cutoff(omega, eps, grid)
    eta = cut.eta.with_values(eta_scale * cut.eta.values)
    A0 = _constant_stiffness(grid, params, stiffness, workers)
    mt = _harmonic_extension(A0, grid, solve_set, eta, tol)
    m2 = mollify(mt, MollifierSpec(eps))
    gamma2 = ConductivityField.from_deviation(m2)
    bessel = bessel_diagnostic_norm(m2, params)
    flags = _common_flags(cfg, grid, m2, omega, eps, eta.sup(), tol, bessel)
    flags["gamma_lower"] = bool(gamma2.gamma.values.min() >= 1.0 - tol)
    report = CounterexampleReport(
        "bounded", gamma2, m2, mt, eps, omega, source, solve_set, cut, flags,
        float(m2.values.min()), m2.sup(), float(mt.values.min()), bessel, tol)
    return _attach_checks(report, cfg, params, grid, A0, with_dn, workers)


def _scaled_core(cfg, params, grid, omega, eps, tol, stiffness, workers):
    solve_set = dilate(cfg.omega_dom, 2 * eps)
    cut = build_cutoff(omega, eps, grid)
    A0 = _constant_stiffness(grid, params, stiffness, workers)
    mt = _harmonic_extension(A0, grid, solve_set, cut.eta, tol)
    rho = MollifierSpec(eps)
    l2 = mt.l2_norm()
    rec = ScalingRecord(eps, params.n, 2.0, rho.sup_norm, l2, 0.0, 0.0)
    if l2 > 0:
        rec.c_eps = ScalingRecord.formula(eps, params.n, rec.ball_measure, rho.sup_norm, l2)
    m2 = mollify(mt, rho)
    m2 = m2.with_values(rec.c_eps * m2.values)
    rec.m2_sup = m2.sup()
    return solve_set, cut, A0, mt, m2, rec


def build_scaled(cfg: WindowConfig, params: FracParams, grid: UniformGrid, *,
                 omega: Optional[IntervalSet] = None, tol: float = POSITIVITY_TOL,
                 with_dn: bool = True, truncation_check: bool = False,
                 stiffness: Optional[StiffnessMatrix] = None,
                 workers: int = 1) -> CounterexampleReport:
    """Scaled construction for long domains: solve in ``Omega_{2 eps}`` and
    multiply the mollified solution by ``C_eps``.

    ``truncation_check`` repeats the construction on a box three times as
    long (same ``h``) and records the largest change of ``m2``.
    """
    omega, source, eps = _omega_and_eps(cfg, omega)
    reach = dilate(cfg.omega_dom, 5 * eps) | (dilate(omega, 5 * eps) if omega else IntervalSet.empty())
    if not _inside_box(grid, reach):
        raise ConstructionInfeasible(f"5-eps neighbourhoods {reach} leave the box minus its margin")
    solve_set, cut, A0, mt, m2, rec = _scaled_core(cfg, params, grid, omega, eps, tol,
                                                   stiffness, workers)
    gamma2 = ConductivityField.from_deviation(m2)
    G = gamma2.gamma_sqrt.values
    if rec.m2_sup > 0.5 + SCALED_TOL or G.min() < 0.5 - SCALED_TOL:
        raise ConstructionFailed(f"scaled deviation {rec.m2_sup!r} exceeds 1/2", record=rec)
    bessel = bessel_diagnostic_norm(m2, params)
    flags = _common_flags(cfg, grid, m2, omega, eps, cut.eta.sup(), tol, bessel)
    flags["gamma_bounds"] = bool(G.min() >= 0.5 - SCALED_TOL and G.max() <= 1.5 + SCALED_TOL)
    if truncation_check:
        L = grid.length
        big = UniformGrid(grid.lo - L, grid.hi + L, 3 * grid.n_nodes - 2)
        big_cfg = WindowConfig(cfg.omega_dom, cfg.w1, cfg.w2, (big.lo, big.hi), cfg.allow_overlap)
        m2_big = _scaled_core(big_cfg, params, big, omega, eps, tol, None, workers)[4]
        k = grid.n_nodes - 1
        rec.truncation_delta = float(np.max(np.abs(m2_big.values[k:k + grid.n_nodes] - m2.values)))
    report = CounterexampleReport(
        "scaled", gamma2, m2, mt, eps, omega, source, solve_set, cut, flags,
        float(m2.values.min()), rec.m2_sup, float(mt.values.min()), bessel, tol, scaling=rec)
    return _attach_checks(report, cfg, params, grid, A0, with_dn, workers)


# --------------------------------------------------------------------------
# invariance family and the algebraic identity

def _potential(gamma1: ConductivityField, omega_dom: IntervalSet, params: FracParams):
    """``q = (-Delta)^s m1 / Gamma1`` on the closed domain, zero elsewhere."""
    m1 = gamma1.deviation
    grid = m1.grid
    if not np.any(m1.values):
        return grid.zeros(), grid.zeros()
    lap = frac_laplacian_fourier(m1, params.s, pad=IDENTITY_PAD, whole_line=True)
    q = lap.values / gamma1.gamma_sqrt.values
    q[~omega_dom.contains(grid.x, strict=False)] = 0.0
    return grid.zeros().with_values(q), lap


@dataclass
class FamilyFlags:
    positivity: bool
    window_clean: bool
    bounded: bool
    alpha: float
    gamma_sqrt: GridFunction = field(repr=False)
    solution: GridFunction = field(repr=False)

    @property
    def member(self) -> bool:
        return self.positivity and self.window_clean and self.bounded


def family_generate(gamma1: ConductivityField, m0: GridFunction, cfg: WindowConfig,
                    params: FracParams, grid: UniformGrid, *, alpha: Optional[float] = None,
                    stiffness: Optional[StiffnessMatrix] = None):
    """``Gamma2 = m1 - m + 1`` with ``m`` solving the Schroedinger-type
    exterior problem with data ``m0``.

    Returns ``(ConductivityField or None, FamilyFlags)``; the field is None
    when ``Gamma2`` is not positive.  ``alpha`` is the required lower bound
    (default: any positive bound).
    """
    if not gamma1.grid.same_as(grid) or not m0.grid.same_as(grid):
        raise InvalidArgument("inputs live on different grids", module="counterexample")
    if np.any(m0.values[cfg.windows.contains(grid.x, strict=False)] != 0.0):
        raise PreconditionViolation("m0 must vanish on the window nodes", module="counterexample")
    q, _ = _potential(gamma1, cfg.omega_dom, params)
    A0 = _constant_stiffness(grid, params, stiffness, 1)
    A = A0 if not np.any(q.values) else A0.matrix - assemble_potential_mass(grid, q)
    interior, _ = classify_dofs(grid, cfg.omega_dom)
    try:
        m = solve_exterior_value(ExteriorValueProblem(A, interior, m0))
    except AssemblyError as err:
        lam = err.details.get("min_eigenvalue")
        raise FamilyInfeasible(f"potential too large, interior operator not positive "
                               f"(smallest eigenvalue {lam:.3e})", min_eigenvalue=lam) from None
    G2 = gamma1.deviation.values - m.values + 1.0
    low = float(G2.min())
    positive = low >= alpha if alpha is not None else low > 0.0
    on_w = cfg.windows.contains(grid.x, strict=False)
    flags = FamilyFlags(positivity=bool(positive),
                        window_clean=bool(np.all(G2[on_w] == 1.0)),
                        bounded=bool(np.all(np.isfinite(G2))),
                        alpha=low if alpha is None else alpha,
                        gamma_sqrt=grid.zeros().with_values(G2), solution=m)
    cond = ConductivityField(flags.gamma_sqrt, alpha=min(low, flags.alpha)) if low > 0 else None
    return cond, flags


def verify_identity(gamma1: ConductivityField, gamma2: ConductivityField, omega_dom: IntervalSet,
                    params: FracParams, grid: Optional[UniformGrid] = None) -> IdentityReport:
    """Residual of ``(-Delta)^s m2 - q m2 - q`` on the interior nodes of the domain,
    relative to ``|(-Delta)^s m2|_inf``."""
    grid = gamma2.grid if grid is None else grid
    if not (gamma1.grid.same_as(grid) and gamma2.grid.same_as(grid)):
        raise InvalidArgument("conductivities live on different grids", module="counterexample")
    m2 = gamma2.deviation
    q, _ = _potential(gamma1, omega_dom, params)
    if np.any(m2.values):
        lap2 = frac_laplacian_fourier(m2, params.s, pad=IDENTITY_PAD, whole_line=True).values
    else:
        lap2 = np.zeros(grid.n_nodes)
    r = lap2 - q.values * m2.values - q.values
    interior, _ = classify_dofs(grid, omega_dom)
    if interior.size == 0:
        return IdentityReport(0.0, float(np.abs(lap2).max()), 0.0, -1)
    k = interior[int(np.argmax(np.abs(r[interior])))]
    res = float(abs(r[k]))
    ref = float(np.abs(lap2).max())
    return IdentityReport(res, ref, res / ref if ref > 0 else (0.0 if res == 0 else np.inf), int(k))


# --------------------------------------------------------------------------
# refinement study

@dataclass
class ConvergenceRow:
    n_nodes: int
    h: float
    d: float
    D: float
    d_entrywise: float
    D_entrywise: float
    identity_residual: float
    m2_min: float

    @property
    def ratio(self) -> float:
        return self.D / self.d if self.d > 0 else math.inf


@dataclass
class ConvergenceReport:
    s: float
    box: tuple
    rows: List[ConvergenceRow]
    slope: float
    identical: bool = False

    COLUMNS = ("n_nodes", "h", "d", "D", "ratio", "d_entrywise", "D_entrywise",
               "identity_residual", "m2_min")

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    def lines(self):
        out = [("s", repr(self.s)), ("box", repr(self.box)),
               ("resolutions", ",".join(str(r.n_nodes) for r in self.rows)),
               ("fitted_slope", f"{self.slope:.17g}")]
        for r in self.rows:
            out.append((f"N={r.n_nodes}", f"d={r.d:.6e} D={r.D:.6e} ratio={r.ratio:.6e}"))
        return out

    def to_text(self):
        return "".join(f"{k}: {v}\n" for k, v in self.lines())


def _is_power_of_two(n):
    return int(n) == n and n >= 1 and (int(n) & (int(n) - 1)) == 0


def _study_row(cfg, params, n, identical, probes):
    grid = UniformGrid(cfg.box[0], cfg.box[1], n)
    one = ConductivityField.constant(grid)
    A0 = assemble_stiffness(grid, one, params)
    rep = build_bounded(cfg, params, grid, with_dn=False, stiffness=A0)
    gamma2 = one if identical else rep.gamma2
    A2 = A0 if identical else assemble_stiffness(grid, gamma2, params)
    ctrl = cfg.with_w2(cfg.w1)
    d1, d2 = dn_matrix(one, cfg, params, A=A0), dn_matrix(gamma2, cfg, params, A=A2)
    c1, c2 = dn_matrix(one, ctrl, params, A=A0), dn_matrix(gamma2, ctrl, params, A=A2)
    return ConvergenceRow(
        n, grid.h, probe_difference(d1, d2, probes), probe_difference(c1, c2, probes),
        compare_dn(d1, d2).rel_frobenius, compare_dn(c1, c2).rel_frobenius,
        rep.identity.relative, rep.m2_min)


def convergence_study(cfg: WindowConfig, params: FracParams, resolutions: Sequence[int], *,
                      identical: bool = False, probes: int = 3,
                      workers: int = 1) -> ConvergenceReport:
    """DN differences for ``Gamma = 1`` against the constructed ``Gamma2``.

    ``d`` uses the disjoint windows, ``D`` the control with ``W2 := W1``;
    both compare the pairings against smooth probe functions in the
    windows.  The entrywise (hat basis) differences are recorded too.
    ``identical=True`` compares ``Gamma = 1`` with itself.
    """
    res = sorted(int(n) for n in resolutions)
    if len(res) < 3 or not all(_is_power_of_two(n) for n in res):
        raise InvalidArgument("need at least three power-of-two resolutions",
                              module="counterexample")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda n: _study_row(cfg, params, n, identical, probes), res))
    else:
        rows = [_study_row(cfg, params, n, identical, probes) for n in res]
    rows.sort(key=lambda r: r.n_nodes)
    d = np.array([r.d for r in rows])
    if np.all(d > 0):
        slope = float(np.polyfit(np.log([r.h for r in rows]), np.log(d), 1)[0])
        jumps = d[1:] / d[:-1]
        if np.any(jumps > 2.0):
            k = int(np.argmax(jumps))
            raise StudyFailed(f"d(N) grows from {d[k]:.3e} to {d[k + 1]:.3e} between "
                              f"N = {rows[k].n_nodes} and N = {rows[k + 1].n_nodes}", rows=rows)
    else:
        slope = math.nan
    return ConvergenceReport(params.s, cfg.box, rows, slope, identical)

import numpy as np
import pytest

from fraccond.assembly import ConductivityField, assemble_stiffness, classify_dofs, energy
from fraccond.dn import (DNMatrix, compare_dn, dn_matrix, probe_difference, probe_functions,
                         window_nodes)
from fraccond.errors import GridTooCoarse, InvalidArgument, PreconditionViolation
from fraccond.fracops import FracParams
from fraccond.geometry import IntervalSet, WindowConfig
from fraccond.grid import UniformGrid
from fraccond.oracles import smooth_bump
from fraccond.solver import ExteriorValueProblem, solve_exterior_value

P = FracParams(0.25)


@pytest.fixture(scope="module")
def setup(cfg):
    g = UniformGrid(-4, 4, 257)
    m = smooth_bump(g, 0.0, 0.9)
    gamma = ConductivityField.from_deviation(m.with_values(0.5 * m.values))
    return g, gamma, assemble_stiffness(g, gamma, P)


def test_window_nodes():
    g = UniformGrid(-4, 4, 17)  # h = 0.5
    assert list(g.x[window_nodes(g, IntervalSet([(1.4, 2.6)]))]) == [2.0]
    assert window_nodes(g, IntervalSet([(1.5, 2.0)])).size == 0


def test_empty_domain_gives_raw_block():
    g = UniformGrid(-4, 4, 129)
    cfg = WindowConfig(IntervalSet.empty(), IntervalSet([(1.5, 2)]), IntervalSet([(-2, -1.5)]),
                       (-4, 4))
    one = ConductivityField.constant(g)
    A = assemble_stiffness(g, one, P)
    M = dn_matrix(one, cfg, P, A=A)
    assert np.array_equal(M.entries, A.matrix[np.ix_(M.test_nodes, M.source_nodes)])


def test_entries_are_energy_pairings(cfg, setup):
    g, gamma, A = setup
    M = dn_matrix(gamma, cfg, P, A=A)
    I, _ = classify_dofs(g, cfg.omega_dom)
    for col in (0, M.source_nodes.size // 2):
        i = M.source_nodes[col]
        phi = g.zeros().with_values((np.arange(g.n_nodes) == i).astype(float))
        u = solve_exterior_value(ExteriorValueProblem(A, I, phi))
        for row in (0, M.test_nodes.size - 1):
            j = M.test_nodes[row]
            psi = g.zeros().with_values((np.arange(g.n_nodes) == j).astype(float))
            assert M.entries[row, col] == pytest.approx(energy(A, u, psi), rel=1e-10, abs=1e-14)


def test_identical_inputs_bitwise(cfg, setup):
    g, gamma, A = setup
    twin = ConductivityField(gamma.gamma_sqrt.copy())
    a = dn_matrix(gamma, cfg, P)
    b = dn_matrix(twin, cfg, P)
    assert np.array_equal(a.entries, b.entries)
    rep = compare_dn(a, b)
    assert rep.max_abs == 0.0 and rep.rel_frobenius <= 1e-14
    assert probe_difference(a, b) == 0.0


def test_reciprocity_and_symmetry(cfg, setup):
    g, gamma, A = setup
    M = dn_matrix(gamma, cfg, P, A=A)
    swapped = WindowConfig(cfg.omega_dom, cfg.w2, cfg.w1, cfg.box)
    Mt = dn_matrix(gamma, swapped, P, A=A)
    assert np.allclose(Mt.entries, M.entries.T, rtol=1e-10, atol=1e-13 * np.abs(M.entries).max())
    ctrl = dn_matrix(gamma, cfg.with_w2(cfg.w1), P, A=A)
    E = ctrl.entries
    assert np.allclose(E, E.T, rtol=1e-10, atol=1e-13 * np.abs(E).max())


def test_source_scaling_is_linear(cfg, setup):
    g, gamma, A = setup
    M = dn_matrix(gamma, cfg, P, A=A)
    I, _ = classify_dofs(g, cfg.omega_dom)
    i = M.source_nodes[3]
    for c in (2.0, -3.5):
        v = np.zeros(g.n_nodes)
        v[i] = c
        u = solve_exterior_value(ExteriorValueProblem(A, I, g.zeros().with_values(v))).values
        col = (A.matrix @ u)[M.test_nodes]
        assert np.allclose(col, c * M.entries[:, 3], rtol=1e-10, atol=1e-16)


def test_compare_dn_examples(cfg, setup):
    g, gamma, A = setup
    M = dn_matrix(gamma, cfg, P, A=A)
    assert compare_dn(M, M).max_abs == 0.0
    bumped = DNMatrix(M.source_nodes, M.test_nodes, M.entries.copy(), M.grid, M.s,
                      M.gamma_hash, M.w1, M.w2)
    bumped.entries[1, 1] += 1e-3
    rep = compare_dn(M, bumped)
    assert rep.max_abs == pytest.approx(1e-3, rel=1e-9) and rep.argmax == (1, 1)
    assert [k for k, _ in rep.lines()] == ["max_abs_difference", "argmax_test_source",
                                           "relative_frobenius"]
    other = dn_matrix(gamma, cfg.with_w2(cfg.w1), P, A=A)
    with pytest.raises(InvalidArgument):
        compare_dn(M, other)
    with pytest.raises(InvalidArgument):
        probe_difference(M, other)


def test_grid_too_coarse(cfg):
    g = UniformGrid(-4, 4, 16)  # h = 8/15: no hat fits a window of length 0.5
    with pytest.raises(GridTooCoarse) as info:
        dn_matrix(ConductivityField.constant(g), cfg, P)
    assert info.value.details["min_h"] == pytest.approx(0.5 / 3)


def test_window_clean_precondition(cfg):
    g = UniformGrid(-4, 4, 129)
    m = smooth_bump(g, 1.7, 0.5)
    with pytest.raises(PreconditionViolation):
        dn_matrix(ConductivityField.from_deviation(m.with_values(0.2 * m.values)), cfg, P)


def test_workers_give_identical_matrix(cfg, setup):
    g, gamma, A = setup
    a = dn_matrix(gamma, cfg.with_w2(cfg.w1), P, A=A, workers=1)
    b = dn_matrix(gamma, cfg.with_w2(cfg.w1), P, A=A, workers=4)
    assert np.array_equal(a.entries, b.entries)


def test_probe_functions(cfg):
    g = UniformGrid(-4, 4, 257)
    nodes = window_nodes(g, cfg.w1)
    F = probe_functions(g, cfg.w1, nodes, 3)
    assert F.shape == (nodes.size, 3)
    assert F[:, 0].max() == pytest.approx(1.0, abs=1e-3)
    assert np.all(F[:, 0] >= 0)

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraccond.assembly import ConductivityField, assemble_stiffness, classify_dofs
from fraccond.errors import AssemblyError, InvalidArgument
from fraccond.fracops import FracParams
from fraccond.geometry import IntervalSet
from fraccond.grid import UniformGrid
from fraccond.solver import (ExteriorValueProblem, InteriorFactorization, check_max_principle,
                             solve_exterior_value)

OMEGA = IntervalSet([(-1, 1)])


def setup(s=0.25, n=129):
    g = UniformGrid(-4, 4, n)
    A = assemble_stiffness(g, ConductivityField.constant(g), FracParams(s))
    I, E = classify_dofs(g, OMEGA)
    return g, A, I, E


_SETUPS = {}


def cached(s):
    if s not in _SETUPS:
        g, A, I, E = setup(s)
        _SETUPS[s] = (g, A, I, E, InteriorFactorization(A, I))
    return _SETUPS[s]


def test_zero_data_gives_zero():
    g, A, I, E = setup()
    u = solve_exterior_value(ExteriorValueProblem(A, I, g.zeros()))
    assert not np.any(u.values)


def test_five_unknowns_against_exact_inverse():
    g = UniformGrid(-4, 4, 17)  # h = 0.5
    A = assemble_stiffness(g, ConductivityField.constant(g), FracParams(0.3))
    I, E = classify_dofs(g, IntervalSet([(-1.6, 1.6)]))
    assert I.size == 5
    data = g.sample(lambda x: np.exp(-x**2) + 0.3 * np.sin(3 * x))
    u = solve_exterior_value(ExteriorValueProblem(A, I, data)).values
    # independent route: 40-digit Gauss-Jordan inverse of the interior block
    mp.mp.dps = 40
    M = A.matrix
    inv = mp.inverse(mp.matrix(M[np.ix_(I, I)].tolist()))
    rhs = -M[np.ix_(I, E)] @ data.values[E]
    ref = np.array([float(v) for v in inv * mp.matrix(rhs.tolist())])
    assert np.max(np.abs(u[I] - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))
    assert np.array_equal(u[E], data.values[E])


def test_source_term():
    g, A, I, E = setup()
    F = g.sample(lambda x: np.cos(x))
    u = solve_exterior_value(ExteriorValueProblem(A, I, g.zeros(), F)).values
    r = A.matrix[np.ix_(I, I)] @ u[I] - F.values[I]
    assert np.max(np.abs(r)) < 1e-12
    assert not np.any(u[E])


def test_max_principle_report():
    g, A, I, E = setup()
    data = g.sample(lambda x: np.where(np.abs(x - 2.5) < 0.5, 1.0, 0.0))
    u = solve_exterior_value(ExteriorValueProblem(A, I, data))
    rep = check_max_principle(u, data)
    assert rep.passed and rep.data_nonnegative
    neg = u.with_values(-u.values)
    bad = check_max_principle(neg, data)
    assert not bad.passed and bad.min_value < 0 and "FAIL" in str(bad)
    assert g.x[bad.argmin] == bad.x_min


def test_near_data_can_break_positivity_for_small_s():
    # the coupling between neighbouring hats is positive for small s, so data
    # right next to the domain may pull the solution below zero
    g, A, I, E, fac = cached(0.1)
    v = np.zeros(g.n_nodes)
    v[I[-1] + 1] = 1.0
    u = solve_exterior_value(ExteriorValueProblem(A, I, g.zeros().with_values(v)), factor=fac)
    assert not check_max_principle(u, u.with_values(v)).passed


def far_data(s):
    g, A, I, E, fac = cached(s)
    near = np.abs(g.x) < 1 + 2 * g.h
    free = np.flatnonzero(~near)
    return st.lists(st.floats(0, 5), min_size=free.size, max_size=free.size).map(
        lambda vals: (free, np.array(vals)))


@pytest.mark.parametrize("s", [0.1, 0.25, 0.4])
def test_comparison_and_bounds(s):
    g, A, I, E, fac = cached(s)

    @settings(max_examples=30, deadline=None)
    @given(far_data(s), far_data(s))
    def check(a, b):
        (idx, va), (_, vb) = a, b
        g1 = np.zeros(g.n_nodes)
        g2 = np.zeros(g.n_nodes)
        g1[idx] = va
        g2[idx] = np.minimum(va, vb)
        u1 = solve_exterior_value(ExteriorValueProblem(A, I, g.zeros().with_values(g1)), factor=fac)
        u2 = solve_exterior_value(ExteriorValueProblem(A, I, g.zeros().with_values(g2)), factor=fac)
        tol = 1e-12 * max(1.0, va.max(initial=0))
        assert np.all(u1.values >= u2.values - tol)
        assert u2.values.min() >= -tol
        assert u1.values.max() <= g1.max() + tol

    check()


def test_empty_interior_returns_data():
    g, A, I, E = setup()
    data = g.sample(np.sin)
    u = solve_exterior_value(ExteriorValueProblem(A, np.array([], dtype=int), data))
    assert np.array_equal(u.values, data.values)


def test_indefinite_block_detected():
    g, A, I, E = setup(n=65)
    M = A.matrix.copy()
    M[I[3], I[3]] = -5.0
    with pytest.raises(AssemblyError) as info:
        InteriorFactorization(M, I)
    assert info.value.details["min_eigenvalue"] < 0


def test_factorization_reuse():
    g, A, I, E = setup(n=65)
    fac = InteriorFactorization(A, I)
    assert 1 <= fac.cond_estimate < 1e6
    for f in (np.cos, np.sin):
        data = g.sample(lambda x: f(x) * (np.abs(x) > 1))
        a = solve_exterior_value(ExteriorValueProblem(A, I, data), factor=fac)
        b = solve_exterior_value(ExteriorValueProblem(A, I, data))
        assert np.array_equal(a.values, b.values)
    with pytest.raises(InvalidArgument):
        solve_exterior_value(ExteriorValueProblem(A, I[:-1], g.zeros()), factor=fac)


def test_problem_validation():
    g, A, I, E = setup(n=65)
    with pytest.raises(InvalidArgument):
        ExteriorValueProblem(A, I, UniformGrid(-4, 4, 66).zeros())
    with pytest.raises(InvalidArgument):
        ExteriorValueProblem(A, I, g.zeros(), exterior=E[:-1])
    p = ExteriorValueProblem(A, I, g.zeros(), exterior=E)
    assert np.array_equal(p.exterior, E)

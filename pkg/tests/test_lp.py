import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from salience.programs.lp import (
    EPS_FEAS,
    DimensionError,
    LinearProgramSpec,
    Status,
    find_feasible_point,
    solve_lp,
)

from program_cases import LP_CASES


@pytest.mark.parametrize("name,spec,status,value", LP_CASES, ids=[c[0] for c in LP_CASES])
def test_known_programs(name, spec, status, value):
    sol = solve_lp(spec)
    assert sol.status is status
    if value is not None:
        assert sol.objective_value == pytest.approx(value, abs=1e-9)
        assert sol.max_constraint_violation <= EPS_FEAS


def test_unit_cube_minimum_is_origin():
    sol = solve_lp(LinearProgramSpec([1, 1], lo=[0, 0], hi=[1, 1]))
    assert np.array_equal(sol.z, [0.0, 0.0])


def test_rejects_mismatched_shapes():
    with pytest.raises(DimensionError):
        LinearProgramSpec([1, 1], A_le=[[1, 1, 1]], b_le=[1])
    with pytest.raises(DimensionError):
        LinearProgramSpec([1, 1], A_eq=[[1, 1]], b_eq=[1, 2])
    with pytest.raises(DimensionError):
        LinearProgramSpec([1, 1], lo=[1, 1], hi=[0, 2])


def test_deterministic_vertex():
    spec = LinearProgramSpec([1, 1, 1], A_eq=[[1, 1, 1]], b_eq=[1], lo=[0, 0, 0])
    z1, z2 = solve_lp(spec).z, solve_lp(spec).z
    assert np.array_equal(z1, z2)


def test_feasible_point_satisfies_constraints():
    spec = LinearProgramSpec([5, -7], A_le=[[1, 2]], b_le=[1], A_eq=[[1, -1]], b_eq=[0.1], lo=[-1, -1], hi=[1, 1])
    sol = find_feasible_point(spec)
    assert sol.optimal and spec.violation(sol.z) <= EPS_FEAS


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), m_le=st.integers(0, 5), m_eq=st.integers(0, 2))
def test_agrees_with_highs(seed, n, m_le, m_eq):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n)
    A_le, b_le = rng.normal(size=(m_le, n)), rng.normal(size=m_le)
    A_eq, b_eq = rng.normal(size=(m_eq, n)), rng.normal(size=m_eq)
    lo = np.where(rng.random(n) < 0.7, -rng.random(n) * 3, -np.inf)
    hi = np.where(rng.random(n) < 0.7, rng.random(n) * 3, np.inf)
    spec = LinearProgramSpec(c, A_eq, b_eq, A_le, b_le, lo, hi)
    ref = linprog(
        c,
        A_ub=A_le if m_le else None,
        b_ub=b_le if m_le else None,
        A_eq=A_eq if m_eq else None,
        b_eq=b_eq if m_eq else None,
        bounds=list(zip([None if np.isinf(v) else v for v in lo], [None if np.isinf(v) else v for v in hi])),
        method="highs",
    )
    sol = solve_lp(spec)
    expected = {0: Status.OPTIMAL, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}[ref.status]
    assert sol.status is expected
    if expected is Status.OPTIMAL:
        assert sol.objective_value == pytest.approx(ref.fun, abs=1e-7 * (1 + abs(ref.fun)))
        assert sol.max_constraint_violation <= EPS_FEAS

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nurseflow.milp import ConstraintSystem, Domain, Sense, build_deterministic
from nurseflow.solver import IntegrityError, SolveLimits, solve, verify

from toys import deterministic_toys


def random_covering(seed: int, n: int = 4, m: int = 3) -> ConstraintSystem:
    """min c.x s.t. A x >= b, x integer in [0, 3]; always feasible at x = 3."""
    rng = np.random.default_rng(seed)
    sys = ConstraintSystem(f"cover{seed}")
    xs = [sys.add_var("x", (j,), Domain.INTEGER, 0, 3) for j in range(n)]
    A = rng.integers(0, 4, (m, n))
    A[:, 0] = np.maximum(A[:, 0], 1)
    for r in range(m):
        rhs = int(rng.integers(1, 3 * A[r].sum() + 1))
        sys.add_constraint([(xs[j], float(A[r, j])) for j in range(n)], Sense.GE, rhs)
    sys.add_objective([(xs[j], float(rng.integers(1, 10))) for j in range(n)])
    return sys


def enumerate_optimum(sys: ConstraintSystem) -> float:
    best = math.inf
    for x in itertools.product(range(4), repeat=sys.num_vars):
        v = np.array(x, float)
        if not sys.infeasibilities(v):
            best = min(best, sys.evaluate(v))
    return best


def test_empty_system_is_optimal_at_zero():
    sol = solve(ConstraintSystem())
    assert sol.status == "optimal" and sol.objective == 0.0 and sol.gap == 0.0


def test_infeasible_system_reports_no_solution():
    sys = ConstraintSystem()
    x = sys.add_var("x", (), Domain.BINARY)
    sys.add_constraint([(x, 1.0)], Sense.GE, 2)
    sol = solve(sys)
    assert sol.status == "infeasible"
    assert not sol.has_solution and sol.gap == math.inf


@pytest.mark.parametrize("seed", range(8))
def test_branch_and_bound_matches_enumeration(seed):
    sys = random_covering(seed)
    best = enumerate_optimum(sys)
    for engine in ("highs", "simplex"):
        sol = solve(sys, lp_engine=engine)
        assert sol.status == "optimal"
        assert math.isclose(sol.objective, best, abs_tol=1e-6)
    assert math.isclose(solve(sys, backend="milp").objective, best, abs_tol=1e-6)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), nodes=st.integers(1, 20))
def test_best_bound_never_exceeds_incumbent(seed, nodes):
    sol = solve(random_covering(seed, n=5, m=4), SolveLimits(node_limit=nodes))
    if sol.has_solution:
        assert sol.best_bound <= sol.objective + 1e-9
        assert sol.gap >= 0
        verify(random_covering(seed, n=5, m=4), sol.values)


def test_reference_and_highs_agree_on_roster_models():
    for inst in deterministic_toys(4, seed=2):
        sys = build_deterministic(inst)
        assert math.isclose(solve(sys).objective, solve(sys, backend="milp").objective, abs_tol=1e-6)


def test_verify_rejects_violating_assignments():
    sys = random_covering(0)
    with pytest.raises(IntegrityError):
        verify(sys, np.zeros(sys.num_vars))
    with pytest.raises(IntegrityError):
        verify(sys, np.zeros(sys.num_vars + 1))


def test_limits_validation_and_unknown_backend():
    with pytest.raises(ValueError):
        SolveLimits(time_limit=-1)
    with pytest.raises(ValueError):
        solve(random_covering(0), backend="nope")


def test_solution_assignment_is_keyed_by_variable_name():
    sys = random_covering(3)
    sol = solve(sys)
    assert set(sol.assignment) == {f"x_{j}" for j in range(sys.num_vars)}

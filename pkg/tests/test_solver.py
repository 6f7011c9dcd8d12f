from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from irpdfl.instance import generate_instance
from irpdfl.model import StandardFormProgram, build_standard_form, decode_plan
from irpdfl.solver import (
    INFEASIBLE,
    ITERATION_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    SolverConfig,
    SolverError,
    _pick_branch,
    branch_and_bound,
    brute_force_oracle,
    primal_residual,
    solve_relaxation,
)

from conftest import highs_objective


def kkt_max(prog, sol):
    """Independent recomputation of the optimality residuals."""
    A = prog.A.toarray()
    x, nu, s = sol.x, sol.nu, sol.s_dual
    r_dual = prog.quad_diag() * x + prog.c - A.T @ nu - s
    comp = x * s - (prog.barrier_weight if prog.barrier_weight > 0 else 0.0)
    return max(np.abs(A @ x - prog.b).max(), np.abs(r_dual).max(), np.abs(comp).max())


def lp(c, A, b, **kw):
    return StandardFormProgram.from_arrays(np.array(c, float), np.array(A, float), np.array(b, float), **kw)


def test_simple_lp():
    sol = solve_relaxation(lp([1, 0], [[1, 1]], [1]))
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(0, abs=1e-8)
    assert sol.x[0] <= 1e-8
    assert kkt_max(lp([1, 0], [[1, 1]], [1]), sol) <= 1e-8


def test_symmetric_qp():
    prog = lp([0, 0], [[1, 1]], [1], quad_weight=1.0)
    sol = solve_relaxation(prog)
    np.testing.assert_allclose(sol.x, [0.5, 0.5], atol=1e-9)
    assert sol.objective == pytest.approx(0.5)


def test_barrier_center():
    prog = lp([0, 0], [[1, 1]], [1], barrier_weight=0.1)
    sol = solve_relaxation(prog)
    assert sol.status == OPTIMAL
    np.testing.assert_allclose(sol.x, [0.5, 0.5], atol=1e-10)
    assert sol.mu_final == pytest.approx(0.1)
    assert kkt_max(prog, sol) <= 1e-8


def test_barrier_center_off_symmetry():
    # min x1 s.t. x1 + x2 = 1 with barrier: 1 - mu/x1 + mu/x2 = 0
    mu = 0.05
    sol = solve_relaxation(lp([1, 0], [[1, 1]], [1], barrier_weight=mu))
    x1 = sol.x[0]
    assert 1 - mu / x1 + mu / (1 - x1) == pytest.approx(0, abs=1e-8)


def test_infeasible_and_unbounded():
    assert solve_relaxation(lp([1, 1], [[1, 1]], [-1])).status == INFEASIBLE
    assert solve_relaxation(lp([-1, 0], [[1, -1]], [0])).status == UNBOUNDED
    infeasible = lp([1, 1, 0], [[1, 1, 0], [1, 1, 0]], [1, 2])
    assert solve_relaxation(infeasible).status == INFEASIBLE


def test_empty_program():
    with pytest.raises(SolverError):
        solve_relaxation(lp(np.zeros(0), np.zeros((1, 0)), [0]))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tol_kkt=0)
    with pytest.raises(ValueError):
        SolverConfig(step_fraction=1.0)
    with pytest.raises(ValueError):
        SolverConfig(bnb_node_limit=0)


@pytest.mark.parametrize("seed", range(5))
def test_random_lp_against_highs(seed):
    rng = np.random.default_rng(seed)
    m, n = 4, 9
    A = rng.normal(size=(m, n))
    b = A @ rng.uniform(0.5, 2, n)
    c = rng.uniform(0.1, 2, n)
    prog = lp(c, A, b)
    sol = solve_relaxation(prog)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    assert sol.objective == pytest.approx(ref.fun, abs=1e-8)
    assert kkt_max(prog, sol) <= 1e-8
    assert sol.x.min() >= -1e-9


def test_mu_history_decreasing(tiny_prog):
    sol = solve_relaxation(tiny_prog)
    hist = np.array(sol.mu_history)
    assert hist.size > 2
    assert np.all(np.diff(hist) < 0)


def test_tiny_optimum(tiny_prog):
    # one joint route in period 1 carries everything: 18 + 0.2*(6+5) + 0.1*(5+20)
    sol = branch_and_bound(tiny_prog)
    oracle = brute_force_oracle(tiny_prog)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(22.7, abs=1e-9)
    assert oracle.objective == pytest.approx(sol.objective, abs=1e-6)
    assert highs_objective(tiny_prog) == pytest.approx(sol.objective, abs=1e-6)
    plan = decode_plan(tiny_prog, sol.x)
    np.testing.assert_array_equal(plan.z, [[0, 0], [0, 0], [1, 0]])


def test_empty_plan_when_nothing_demanded(tiny):
    inst = replace(tiny.with_demand(np.zeros((2, 2))), supplier_initial=0.0, production_per_period=0.0)
    prog = build_standard_form(inst)
    for sol in (branch_and_bound(prog), brute_force_oracle(prog)):
        assert sol.status == OPTIMAL
        assert sol.objective == pytest.approx(0, abs=1e-9)
        lay = prog.layout
        for name in ("z", "y", "q"):
            assert np.all(np.abs(sol.x[lay[name]]) <= 1e-9)


def test_excess_demand_infeasible(tiny):
    prog = build_standard_form(tiny.with_demand(np.full((2, 2), 30.0)))
    assert branch_and_bound(prog).status == INFEASIBLE
    assert brute_force_oracle(prog).status == INFEASIBLE
    assert highs_objective(prog) is None


def test_oracle_size_guard():
    prog = build_standard_form(generate_instance(3, 4, 6, 0))
    with pytest.raises(ValueError, match="instance too large for oracle"):
        brute_force_oracle(prog)


def test_bnb_rejects_smoothed_programs(tiny):
    with pytest.raises(ValueError):
        branch_and_bound(build_standard_form(tiny, variant="regularized", lam=0.1))


def test_node_limit_reported():
    prog = build_standard_form(generate_instance(3, 3, 4, 2))
    sol = branch_and_bound(prog, SolverConfig(bnb_node_limit=2))
    full = branch_and_bound(prog)
    assert full.nodes > 2
    assert sol.status == ITERATION_LIMIT


def test_branch_rule():
    mask = np.array([True, True, True, False])
    assert _pick_branch(np.array([0.3, 0.5, 0.5, 0.5]), mask, 1e-6) == 1
    assert _pick_branch(np.array([0.2, 1.4, 0.9, 0.5]), mask, 1e-6) == 1
    assert _pick_branch(np.array([1.0, 0.0, 1.0 - 1e-9, 0.5]), mask, 1e-6) is None


@pytest.mark.parametrize("seed", range(8))
def test_bnb_sound(seed):
    inst = generate_instance(3, 2, 4, seed)
    prog = build_standard_form(inst)
    sol = branch_and_bound(prog)
    assert sol.status == OPTIMAL
    assert primal_residual(prog, sol.x) <= 1e-8
    assert sol.x.min() >= -1e-9
    assert sol.kkt_residual <= 1e-8
    relax = solve_relaxation(prog)
    assert relax.objective <= sol.objective + 1e-9
    assert highs_objective(prog) == pytest.approx(sol.objective, abs=1e-6)


@settings(max_examples=12, deadline=None)
@given(n=st.integers(1, 2), t=st.integers(1, 2), extra=st.integers(0, 1), seed=st.integers(0, 10**6),
       vmax=st.sampled_from(["unlimited", 1]))
def test_bnb_matches_oracle(n, t, extra, seed, vmax):
    inst = replace(generate_instance(n, t, n + extra, seed), max_visits_per_day=vmax)
    prog = build_standard_form(inst)
    a, b = branch_and_bound(prog), brute_force_oracle(prog)
    assert a.status == b.status
    if a.status == OPTIMAL:
        assert a.objective == pytest.approx(b.objective, abs=1e-6)
        assert highs_objective(prog) == pytest.approx(a.objective, abs=1e-6)

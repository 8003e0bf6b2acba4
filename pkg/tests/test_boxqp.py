import numpy as np
import pytest
from helpers import random_psd
from oracles import grid_search_qp, projected_gradient_qp

from odmkit.boxqp import (
    BoxQpProblem,
    SolverOptions,
    UnboundedProblemError,
    coordinate_update,
    dcd_solve,
    qp_objective,
)


def _random_problem(rng, n, finite_u=True, shift=0.5):
    H = random_psd(rng, n, shift=shift)
    q = rng.standard_normal(n)
    if finite_u:
        u = rng.random(n) * 2 + 0.1
    else:
        u = np.where(rng.random(n) < 0.5, np.inf, rng.random(n) + 0.1)
    return BoxQpProblem(H, q, u)


def test_problem_validation():
    with pytest.raises(ValueError, match="symmetric"):
        BoxQpProblem(np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros(2), np.ones(2))
    with pytest.raises(ValueError):
        BoxQpProblem(np.eye(2), np.zeros(2), np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        BoxQpProblem(np.eye(2), np.array([np.nan, 0.0]), np.ones(2))
    with pytest.raises(ValueError):
        BoxQpProblem(np.eye(3), np.zeros(2), np.ones(2))
    BoxQpProblem(np.eye(2), np.zeros(2), np.array([np.inf, 1.0]))


def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(tolerance=0.0)
    with pytest.raises(ValueError):
        SolverOptions(max_passes=0)


def test_hand_instance():
    # H singular PSD, both box faces active at the optimum
    prob = BoxQpProblem(
        np.array([[4.0, 2.0], [2.0, 1.0]]), -np.ones(2), np.array([0.5, 0.5])
    )
    sol = dcd_solve(prob, SolverOptions(seed=3))
    assert sol.converged
    np.testing.assert_allclose(sol.alpha, [0.0, 0.5], atol=1e-8)
    assert np.isclose(sol.objective, -0.375, atol=1e-12)
    # independent confirmation: coarse grid refined by projected gradient
    a_grid, _ = grid_search_qp(prob.H, prob.q, prob.u, steps=501)
    a_pg = projected_gradient_qp(prob.H, prob.q, prob.u)
    np.testing.assert_allclose(a_grid, a_pg, atol=2e-3)
    np.testing.assert_allclose(sol.alpha, a_pg, atol=1e-6)


def test_oracle_equivalence_random():
    rng = np.random.default_rng(11)
    for _ in range(15):
        n = int(rng.integers(1, 7))
        prob = _random_problem(rng, n)
        sol = dcd_solve(prob, SolverOptions(tolerance=1e-10, seed=1))
        ref = projected_gradient_qp(prob.H, prob.q, prob.u)
        assert sol.converged
        np.testing.assert_allclose(sol.alpha, ref, atol=1e-6)


def test_feasibility_exact():
    rng = np.random.default_rng(12)
    for _ in range(10):
        prob = _random_problem(rng, int(rng.integers(2, 20)), finite_u=bool(rng.random() < 0.5))
        sol = dcd_solve(prob)
        assert np.all(sol.alpha >= 0.0)
        assert np.all(sol.alpha <= prob.u)


def test_kkt_at_convergence():
    rng = np.random.default_rng(13)
    for _ in range(10):
        prob = _random_problem(rng, int(rng.integers(2, 25)))
        sol = dcd_solve(prob, SolverOptions(tolerance=1e-8, seed=2))
        assert sol.converged
        g = prob.H @ sol.alpha + prob.q
        tol = 1e-6
        at_lo = sol.alpha == 0.0
        at_hi = sol.alpha == prob.u
        interior = ~at_lo & ~at_hi
        assert np.all(g[at_lo] >= -tol)
        assert np.all(g[at_hi] <= tol)
        assert np.all(np.abs(g[interior]) <= tol)


def test_monotonicity_and_incremental_gradient_agree():
    rng = np.random.default_rng(14)
    prob = _random_problem(rng, 8)
    opts = SolverOptions(shuffle=False, max_passes=40, tolerance=1e-14)
    sol = dcd_solve(prob, opts)
    # replay the same sequential sweeps with the public single-coordinate
    # rule and an incrementally maintained gradient, as the solver does
    alpha = np.zeros(prob.n)
    g = prob.q.copy()
    last = qp_objective(prob, alpha)
    for _ in range(sol.passes_used):
        for i in range(prob.n):
            new = coordinate_update(alpha[i], g[i], prob.H[i, i], prob.u[i])
            delta = new - alpha[i]
            if delta != 0.0:
                alpha[i] = new
                g += delta * prob.H[i]
            now = qp_objective(prob, alpha)
            assert now <= last + 1e-12
            last = now
    np.testing.assert_array_equal(alpha, sol.alpha)
    # the maintained gradient stays consistent with recomputation
    np.testing.assert_allclose(g, prob.H @ alpha + prob.q, atol=1e-10)


def test_determinism_bitwise():
    rng = np.random.default_rng(15)
    prob = _random_problem(rng, 12)
    a = dcd_solve(prob, SolverOptions(seed=9)).alpha
    b = dcd_solve(prob, SolverOptions(seed=9)).alpha
    np.testing.assert_array_equal(a, b)
    c = dcd_solve(prob, SolverOptions(seed=10)).alpha
    np.testing.assert_allclose(a, c, atol=1e-5)


def test_budget_exhaustion_flags_not_raises():
    # coupled coordinates approach the interior optimum geometrically, so a
    # 3-pass budget at an absurd tolerance cannot be met
    prob = BoxQpProblem(
        np.array([[2.0, 1.0], [1.0, 2.0]]), -np.ones(2), np.full(2, np.inf)
    )
    sol = dcd_solve(prob, SolverOptions(tolerance=1e-300, max_passes=3))
    assert not sol.converged
    assert sol.passes_used == 3
    np.testing.assert_allclose(sol.alpha, [1 / 3, 1 / 3], atol=0.2)


def test_zero_curvature_rules():
    assert coordinate_update(0.3, 1.0, 0.0, 2.0) == 0.0
    assert coordinate_update(0.3, -1.0, 0.0, 2.0) == 2.0
    assert coordinate_update(0.3, 0.0, 0.0, 2.0) == 0.3
    with pytest.raises(UnboundedProblemError):
        coordinate_update(0.3, -1.0, 0.0, np.inf)
    # through the solver: a flat coordinate with negative gradient
    H = np.zeros((2, 2))
    H[0, 0] = 1.0
    prob = BoxQpProblem(H, np.array([0.5, -1.0]), np.array([np.inf, 3.0]))
    sol = dcd_solve(prob, SolverOptions(shuffle=False))
    assert sol.alpha[1] == 3.0
    prob_bad = BoxQpProblem(H, np.array([0.5, -1.0]), np.array([np.inf, np.inf]))
    with pytest.raises(UnboundedProblemError):
        dcd_solve(prob_bad, SolverOptions(shuffle=False))


def test_qp_objective_hand_value():
    prob = BoxQpProblem(np.array([[2.0, 0.0], [0.0, 4.0]]), np.array([1.0, -1.0]), np.ones(2))
    assert qp_objective(prob, np.array([1.0, 0.5])) == 1.0 + 0.5 + 1.0 - 0.5


def test_gradient_cap_rule_touches_inf_bound():
    # positive curvature with inf bound: interior minimum reached, no error
    prob = BoxQpProblem(np.array([[2.0]]), np.array([-4.0]), np.array([np.inf]))
    sol = dcd_solve(prob)
    np.testing.assert_allclose(sol.alpha, [2.0], atol=1e-10)

import numpy as np
import pytest

import ghd
from ghd.dressing import compute_R
from ghd.errors import ConvergenceError
from ghd.fixed_point import (SolverConfig, apply_G, characteristic_u,
                             eval_state, invert_Xhat, solve_Xhat)


def test_apply_G_zero_scenario(zero_setup):
    op, bump, _, _ = zero_setup
    tab = ghd.build_seed(ghd.zero_scenario(), op)
    f = np.sin(op.grid.nodes)
    out = apply_G(tab, 0.7, 1.3, f)
    np.testing.assert_allclose(out, 1.3, atol=1e-14)


def test_apply_G_fixed_point_at_origin(ll_tables):
    out = apply_G(ll_tables, 0.0, 0.0, np.zeros(ll_tables.op.count))
    assert np.max(np.abs(out)) <= 1e-14


def test_apply_G_constant_kernel_scalar_oracle(uniform_hr_setup):
    op, sc, tab, _ = uniform_hr_setup
    # N0hat = 0.2 xhat and symmetric grid: G[x0](p) = x - 0.12 x0
    t, x, x0 = 0.7, 1.1, 0.45
    out = apply_G(tab, t, x, np.full(op.count, x0))
    w, v = op.grid.weights, op.v
    expect = x - 0.3 * float(w @ (0.2 * (x0 - v * t)))
    np.testing.assert_allclose(out, expect, atol=1e-12)
    assert abs(expect - (x - 0.12 * x0)) <= 1e-12


def test_solve_vanishes_at_spacetime_origin(ll_tables):
    res = solve_Xhat(ll_tables, 0.0, 0.0)
    assert np.max(np.abs(res.xhat)) <= 1e-12


def test_zero_scenario_one_iteration(zero_setup):
    op, _, _, _ = zero_setup
    tab = ghd.build_seed(ghd.zero_scenario(), op)
    res = solve_Xhat(tab, 0.8, 2.5)
    np.testing.assert_allclose(res.xhat, 2.5, atol=1e-14)
    assert res.iters == 1
    assert res.final_residual == 0.0


def test_hard_rods_p_collapse(hr_setup):
    _, _, tab, solver = hr_setup
    rng = np.random.default_rng(2)
    for _ in range(100):
        t = rng.uniform(0.0, 2.0)
        x = rng.uniform(-3.0, 3.0)
        res = solver.solve(float(t), float(x))
        assert res.xhat.max() - res.xhat.min() <= 1e-10


def test_hard_rods_scalar_vs_generic_iteration(hr_setup):
    op, _, tab, solver = hr_setup
    t, x = 0.6, -0.9
    scalar = solver.solve(t, x).xhat
    f = np.full(op.count, x, dtype=float)
    for _ in range(200):
        f = solver.apply_G(t, x, f)
    assert np.max(np.abs(f - scalar)) <= 1e-10


def test_uniform_hard_rods_affine_solution(uniform_hr_setup):
    op, sc, tab, solver = uniform_hr_setup
    for t, x in ((0.0, 1.3), (0.9, -0.4), (2.0, 2.2)):
        res = solver.solve(t, x)
        np.testing.assert_allclose(res.xhat, x / 1.12, atol=1e-9)


def test_initial_condition_recovery(ll_solver, ll_bump):
    nodes = ll_solver.op.grid.nodes
    worst = 0.0
    for x in np.linspace(-3.0, 3.0, 21):
        s = ll_solver.state(0.0, float(x))
        worst = max(worst, float(np.max(np.abs(s.n - ll_bump.n0(x, nodes)))))
    assert worst <= 1e-8


def test_zero_kernel_free_advection(zero_setup):
    op, bump, tab, solver = zero_setup
    nodes = op.grid.nodes
    for t, x in ((0.5, 0.9), (1.0, -1.4)):
        s = solver.state(t, x)
        np.testing.assert_allclose(s.n, bump.n0(x - nodes * t, nodes), atol=1e-12)
        np.testing.assert_allclose(s.u, x - nodes * t, atol=1e-12)
        np.testing.assert_allclose(s.v_eff, nodes, atol=1e-14)


def test_state_invariants(ll_solver, ll_tables):
    s = ll_solver.state(0.7, 1.2)
    assert s.final_residual <= ll_solver.config.fp_tol
    assert np.all(s.n >= 0) and np.all(s.n <= ll_tables.sup_n0 + 1e-10)
    assert np.all(s.rho_s > 0)
    assert np.all(s.rho_p >= 0)
    np.testing.assert_allclose(s.rho_s, s.one_dr / (2 * np.pi))
    consistency = s.xhat - s.x - ll_solver.op.apply(s.N)
    assert np.max(np.abs(consistency)) <= 1e-9
    np.testing.assert_allclose(s.v_eff, s.v_dr / s.one_dr)


def test_one_dr_bounds_at_slices(ll_solver):
    sign = ll_solver.op.sign_class
    for t, x in ((0.0, 0.3), (0.5, -1.0), (1.5, 2.0)):
        s = ll_solver.state(t, x)
        lo = compute_R(s.tn_norm, sign)
        hi = 1.0 / (1.0 - s.tn_norm)
        assert np.all(s.one_dr >= lo - 1e-9)
        assert np.all(s.one_dr <= hi + 1e-9)


def test_contraction_ratios_bounded(ll_solver, ll_tables):
    slices = ll_solver.sweep(0.6, np.linspace(-3, 3, 101))
    cap = ll_tables.rate + 0.01
    for s in slices:
        assert all(r <= cap for r in s.contraction_ratios)
        assert s.final_residual <= ll_solver.config.fp_tol


def test_spatial_lipschitz(ll_solver, ll_tables):
    t = 0.8
    rng = np.random.default_rng(6)
    const = 1.0 / (1.0 - ll_tables.rate)
    for _ in range(20):
        x1, x2 = rng.uniform(-4, 4, size=2)
        s1 = ll_solver.state(t, float(x1))
        s2 = ll_solver.state(t, float(x2))
        gap = np.max(np.abs(s1.xhat - s2.xhat))
        assert gap <= abs(x1 - x2) * const + 1e-8


def test_temporal_lipschitz(ll_solver, ll_tables):
    x = 0.4
    rng = np.random.default_rng(8)
    unit = ghd.operator_norm(ll_solver.op)
    const = unit * ll_tables.vn_sup / (1.0 - ll_tables.rate)
    for _ in range(20):
        t1, t2 = rng.uniform(0, 2, size=2)
        s1 = ll_solver.state(float(t1), x)
        s2 = ll_solver.state(float(t2), x)
        gap = np.max(np.abs(s1.xhat - s2.xhat))
        assert gap <= abs(t1 - t2) * const + 1e-8


def test_monotonicity_in_x(ll_solver, ll_tables):
    t = 1.1
    r_lo = ll_tables.bounds.r_value
    xs = np.linspace(-3, 3, 41)
    slices = ll_solver.sweep(t, xs)
    for s1, s2 in zip(slices[:-1], slices[1:]):
        dx = s2.x - s1.x
        assert np.all(s2.xhat - s1.xhat >= r_lo * dx - 1e-8)
        assert np.all(s2.N - s1.N >= -1e-10)


def test_occupation_norm_preserved(ll_solver, ll_tables):
    worst = 0.0
    for t in (0.0, 0.7, 1.9):
        for s in ll_solver.sweep(t, np.linspace(-4, 4, 31)):
            worst = max(worst, float(s.n.max()))
    assert worst <= ll_tables.sup_n0 + 1e-10


def test_characteristic_u(ll_solver, ll_tables):
    # u(0,x,p) = x
    assert abs(characteristic_u(ll_tables, 0.0, 1.7, 10) - 1.7) <= 1e-8
    # non-crossing: u non-decreasing in x at fixed (t,p)
    t, p_index = 0.9, 24
    us = [ll_solver.state(t, float(x)).u[p_index]
          for x in np.linspace(-2, 2, 25)]
    assert all(b - a >= -1e-9 for a, b in zip(us[:-1], us[1:]))


def test_invert_xhat_round_trip(ll_solver, ll_tables):
    t, x_true, p_index = 0.7, 1.3, 30
    target = float(ll_solver.solve(t, x_true).xhat[p_index])
    x_rec = invert_Xhat(ll_tables, t, target, p_index)
    assert abs(x_rec - x_true) <= 1e-8


def test_invert_xhat_trivial_cases(zero_setup, uniform_hr_setup):
    op, _, _, _ = zero_setup
    tabz = ghd.build_seed(ghd.zero_scenario(), op)
    assert abs(invert_Xhat(tabz, 0.5, 1.9, 3) - 1.9) <= 1e-10
    _, _, tabu, solver = uniform_hr_setup
    assert abs(solver.invert_xhat(0.4, 1.0, 5) - 1.12) <= 1e-9


def test_eval_state_module_function(ll_tables):
    s = eval_state(ll_tables, 0.3, 0.5)
    assert s.t == 0.3 and s.x == 0.5
    assert s.iters >= 1


def test_max_iters_exceeded(ll_tables):
    cfg = SolverConfig(fp_tol=1e-14, max_iters=2)
    with pytest.raises(ConvergenceError, match="ratio history"):
        ghd.Solver(ll_tables, cfg).solve(0.9, 2.0)


def test_warm_start_agrees(ll_solver):
    cold = ll_solver.solve(0.5, 1.0)
    warm = ll_solver.solve(0.5, 1.0, warm=cold.xhat + 0.3)
    assert np.max(np.abs(cold.xhat - warm.xhat)) <= 1e-9


def test_inadmissible_solver_rejected(ll_op):
    big = ghd.gaussian_bump(3.0, 1.0, 0.05)
    with pytest.raises(ghd.AssumptionError):
        tab = ghd.build_seed(big, ll_op)
        ghd.Solver(tab)

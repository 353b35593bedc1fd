import numpy as np
import pytest
from hypothesis import given, strategies as st

import ghd
from ghd.diagnostics import (ENTROPY_FUNCTIONS, boson_entropy,
                             check_assumptions, classical_entropy,
                             conservation_report, conserved_charge,
                             derivative_identity_check, entropy,
                             fermi_entropy, weak_form_residual, weight_values)
from ghd.errors import SupportWindowError
from ghd.seed import SpatialGridSpec


def test_check_assumptions_pass(ll_op):
    sc = ghd.gaussian_bump(0.9, 1.0, 1.0)
    report = check_assumptions(sc, ll_op)
    assert report.verdict
    assert report.threshold_used == 1.0
    assert report.tn_norm < 1.0
    assert report.failed_clause is None
    assert report.tail_estimate < 1e-6


def test_check_assumptions_mixed_threshold():
    g = ghd.build_momentum_grid(-1, 1, 12)
    tab = ghd.tabulated_kernel([-1, 1], [-1, 1], [[0.6, -0.6], [-0.6, 0.6]])
    op = ghd.KernelOperator(tab, g)
    # row integral of |T| is 0.6; constant n = 1 gives tn_norm = 0.6 >= 1/2
    sc = ghd.Scenario(lambda x, p: np.broadcast_arrays(
        np.asarray(x, float) * 0 + 1.0, p)[0], 1.0, (-1, 1), "custom")
    report = check_assumptions(sc, op)
    assert report.threshold_used == 0.5
    assert not report.verdict
    assert "0.5" in report.failed_clause


def test_check_assumptions_trivial_zero(ll_op):
    report = check_assumptions(ghd.zero_scenario(), ll_op)
    assert report.verdict
    assert report.tn_norm == 0.0


def test_check_assumptions_negative_seed(ll_op):
    sc = ghd.Scenario(lambda x, p: np.broadcast_arrays(
        np.asarray(x, float) * 0 - 0.1, p)[0], 0.1, (-1, 1), "custom")
    report = check_assumptions(sc, ll_op)
    assert not report.verdict
    assert "nonnegativity" in report.failed_clause


@given(st.floats(min_value=0.05, max_value=1.0))
def test_verdict_monotone_under_scaling(ll_op, alpha):
    base = ghd.gaussian_bump(0.9, 1.0, 1.0)
    scaled = ghd.Scenario(lambda x, p: alpha * base.n0(x, p),
                          alpha * 0.9, base.x_support_hint, "custom")
    assert check_assumptions(scaled, ll_op).verdict


def test_report_round_trips_to_dict(ll_op):
    report = check_assumptions(ghd.gaussian_bump(0.5, 1.0, 1.0), ll_op)
    payload = report.to_dict()
    assert payload["verdict"] == "pass"
    assert set(payload) >= {"sign_class", "tn_norm", "threshold_used", "vn_sup"}


def test_conserved_charge_zero_scenario(zero_setup):
    op, _, _, _ = zero_setup
    tab = ghd.build_seed(ghd.zero_scenario(), op)
    series = conserved_charge(ghd.Solver(tab), "one", [0.0, 0.5],
                              (-3.0, 3.0), 101)
    assert all(abs(v) <= 1e-14 for v in series.values)


def test_conserved_charge_free_gas(zero_setup):
    _, _, _, solver = zero_setup
    series = conserved_charge(solver, "one", [0.0, 0.4, 0.8], (-9.0, 9.0), 257)
    assert series.relative_drift <= 1e-10


def test_conservation_lieb_liniger(ll_solver):
    rep = conservation_report(
        ll_solver, [0.0, 0.5, 1.0], (-14.0, 14.0), 301,
        weights={"one": weight_values("one", ll_solver.op),
                 "momentum": weight_values("momentum", ll_solver.op)},
        entropies={"fermi_entropy": fermi_entropy})
    for series in rep.values():
        v0 = abs(series.values[0])
        drift = max(abs(v - series.values[0]) for v in series.values)
        assert drift <= 1e-4 * max(v0, 1e-3)


def test_entropy_reproduces_charge(ll_solver):
    h = weight_values("momentum", ll_solver.op)
    charge = conserved_charge(ll_solver, h, [0.0, 0.6], (-12.0, 12.0), 201)
    series = entropy(ll_solver, lambda n, p: n * h[None, :], [0.0, 0.6],
                     (-12.0, 12.0), 201)
    for a, b in zip(charge.values, series.values):
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_entropy_functions_edge_values():
    assert fermi_entropy(np.array([0.0]))[0] == 0.0
    assert fermi_entropy(np.array([1.0]))[0] == 0.0
    assert classical_entropy(np.array([0.0]))[0] == 0.0
    assert boson_entropy(np.array([0.0]))[0] == 0.0
    n = np.array([0.3])
    expect = -0.3 * np.log(0.3) - 0.7 * np.log(0.7)
    assert abs(fermi_entropy(n)[0] - expect) <= 1e-15


def test_weight_registry(ll_op):
    np.testing.assert_allclose(weight_values("one", ll_op), 1.0)
    np.testing.assert_allclose(weight_values("momentum", ll_op), ll_op.grid.nodes)
    np.testing.assert_allclose(weight_values("energy:v", ll_op),
                               ll_op.grid.nodes ** 2 / 2)
    with pytest.raises(KeyError):
        weight_values("charge", ll_op)
    assert set(ENTROPY_FUNCTIONS) == {"fermi_entropy", "classical_entropy",
                                      "boson_entropy"}


def test_window_escape_detected(ll_solver):
    with pytest.raises(SupportWindowError, match="widen"):
        conserved_charge(ll_solver, "one", [0.0, 2.0], (-3.0, 3.0), 101)


def test_weak_residual_zero_scenario(zero_setup):
    op, _, _, _ = zero_setup
    tab = ghd.build_seed(ghd.zero_scenario(), op)
    res = weak_form_residual(ghd.Solver(tab), (-1.0, 1.0, 0.0, 0.5), 7,
                             edge_points=16)
    assert res["residual"] == 0.0
    assert res["raw"] == 0.0


def test_weak_residual_free_gas(zero_setup):
    _, _, _, solver = zero_setup
    res = weak_form_residual(solver, (-0.8, 1.1, 0.1, 0.6), 25,
                             edge_points=200)
    assert abs(res["residual"]) <= 1e-8


def test_weak_residual_partitioning(part_setup):
    _, _, _, solver = part_setup
    for rect, p_idx in (((-0.7, 0.8, 0.1, 0.9), 30), ((0.2, 1.2, 0.2, 1.1), 18)):
        res = weak_form_residual(solver, rect, p_idx, edge_points=160)
        assert abs(res["residual"]) <= 1e-4


def test_weak_residual_antisymmetric_in_time(part_setup):
    _, _, _, solver = part_setup
    rect = (-0.6, 0.7, 0.15, 0.85)
    fwd = weak_form_residual(solver, rect, 28, edge_points=96)
    rev = weak_form_residual(solver, (rect[0], rect[1], rect[3], rect[2]), 28,
                             edge_points=96)
    assert abs(fwd["raw"] + rev["raw"]) <= 1e-12 * max(1.0, fwd["scale"])


def test_derivative_identities_smooth(ll_op, ll_bump):
    tab = ghd.build_seed(ll_bump, ll_op, SpatialGridSpec(-9.6, 9.6, 2400))
    solver = ghd.Solver(tab, ghd.SolverConfig(fp_tol=1e-12))
    errs = derivative_identity_check(solver, 0.4, 0.7, h=1e-4)
    assert max(errs.values()) <= 1e-5

"""Admissibility checks before solving; conservation and weak-form checks after.

The assumption report realizes the admissibility conditions on the seed
data: nonnegativity, the operator-norm bound (threshold 1 for fixed-sign
kernels, 1/2 otherwise) and finiteness of sup |v n0|.  A failing check is
a verdict, not an exception.

Conserved charges Q[h](t) = integral dx dp rho_p h(p) and generalized
entropies S[g](t) = (1/2pi) integral dx dp g(n,p) 1dr are computed from
warm-started solver sweeps with composite-Simpson spatial integrals; the
weak-form residual sums the four edge integrals of the conservation
identity over a space-time rectangle with Gauss-Legendre edge quadrature,
splitting edges at the contact-discontinuity crossing for partitioning
data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq
from scipy.special import xlogy

from .dressing import sign_threshold
from .errors import SupportWindowError
from .fixed_point import Solver
from .kernel import KernelOperator
from .seed import Scenario

TWO_PI = 2.0 * np.pi

EDGE_SUPPORT_TOL = 1e-7


# ---------------------------------------------------------------------------
# assumption checking

@dataclass(frozen=True)
class AssumptionReport:
    """Verdict on the admissibility of a scenario against a kernel."""

    sign_class: str
    tn_norm: float
    threshold_used: float
    vn_sup: float
    n0_min: float
    sup_sampled: float
    declared_sup: float
    tail_estimate: float
    verdict: bool
    failed_clause: str | None

    def to_dict(self) -> dict:
        return {
            "sign_class": self.sign_class,
            "tn_norm": self.tn_norm,
            "threshold_used": self.threshold_used,
            "vn_sup": self.vn_sup,
            "n0_min": self.n0_min,
            "sup_sampled": self.sup_sampled,
            "declared_sup": self.declared_sup,
            "tail_estimate": self.tail_estimate,
            "verdict": "pass" if self.verdict else "fail",
            "failed_clause": self.failed_clause,
        }


def _default_x_samples(scenario: Scenario, count: int = 401) -> np.ndarray:
    lo, hi = scenario.x_support_hint
    margin = 0.2 * (hi - lo)
    xs = np.linspace(lo - margin, hi + margin, count)
    return np.union1d(xs, [0.0, lo, hi])


def truncation_tail(op: KernelOperator, scenario: Scenario,
                    x_samples: np.ndarray | None = None) -> float:
    """Estimate of the neglected momentum tail of ||T (sup_x n0)||_op.

    The grid window is our own truncation of the momentum line; this
    integrates |T(p, q)| sup_x n0(x, q) over one extra window length on
    each side of the grid and reports the worst node.  Advisory only.
    """
    from .grid import build_momentum_grid
    from .kernel import eval_kernel
    g = op.grid
    if x_samples is None:
        x_samples = _default_x_samples(scenario, 101)
    out = 0.0
    for lo, hi in ((g.p_min - g.span, g.p_min), (g.p_max, g.p_max + g.span)):
        side = build_momentum_grid(lo, hi, 128)
        env = np.asarray(
            scenario.n0(x_samples[:, None], side.nodes[None, :]), dtype=float
        ).max(axis=0)
        absT = np.abs(eval_kernel(op.kernel, g.nodes[:, None], side.nodes[None, :]))
        out += float(np.max(absT @ (side.weights * env)))
    return out


def check_assumptions(scenario: Scenario, op: KernelOperator,
                      x_samples: np.ndarray | None = None) -> AssumptionReport:
    """Evaluate the admissibility conditions on sampled seed data."""
    if x_samples is None:
        x_samples = _default_x_samples(scenario)
    x_samples = np.asarray(x_samples, dtype=float)
    n_vals = np.asarray(
        scenario.n0(x_samples[:, None], op.grid.nodes[None, :]), dtype=float)
    envelope = n_vals.max(axis=0)
    tn_norm = op.operator_norm(envelope=np.maximum(envelope, 0.0))
    threshold = sign_threshold(op.sign_class)
    n0_min = float(n_vals.min())
    vn_sup = float(np.max(np.abs(op.v) * envelope))
    tail = truncation_tail(op, scenario)

    failed = None
    if n0_min < 0:
        failed = "nonnegativity of the seed occupation"
    elif not np.isfinite(vn_sup):
        failed = "finiteness of sup |v(p) n0(x,p)|"
    elif tn_norm >= threshold:
        failed = (f"operator-norm bound ||T sup_x n0||_op < {threshold:g} "
                  f"for a {op.sign_class} kernel")
    return AssumptionReport(
        sign_class=op.sign_class, tn_norm=float(tn_norm),
        threshold_used=float(threshold), vn_sup=vn_sup, n0_min=n0_min,
        sup_sampled=float(n_vals.max()), declared_sup=float(scenario.declared_sup_n),
        tail_estimate=tail, verdict=failed is None, failed_clause=failed)


# ---------------------------------------------------------------------------
# named momentum weights and entropy densities

def weight_values(name: str, op: KernelOperator) -> np.ndarray:
    """Named momentum weight h(p) sampled on the grid nodes."""
    if name == "one":
        return np.ones(op.count)
    if name == "momentum":
        return op.grid.nodes.copy()
    if name == "energy:v":
        return op.energy_weights()
    raise KeyError(f"unknown weight function {name!r}")


def fermi_entropy(n, p=None):
    return -xlogy(n, n) - xlogy(1.0 - n, 1.0 - n)


def classical_entropy(n, p=None):
    return -xlogy(n, n)


def boson_entropy(n, p=None):
    return -xlogy(n, n) + xlogy(1.0 + n, 1.0 + n)


ENTROPY_FUNCTIONS = {
    "fermi_entropy": fermi_entropy,
    "classical_entropy": classical_entropy,
    "boson_entropy": boson_entropy,
}

WEIGHT_NAMES = ("one", "momentum", "energy:v")


# ---------------------------------------------------------------------------
# conservation series

@dataclass(frozen=True)
class ConservationSeries:
    """Values of one conserved functional over a list of times."""

    name: str
    times: tuple
    values: tuple

    @property
    def relative_drift(self) -> float:
        v0 = self.values[0]
        return float(max(abs(v - v0) for v in self.values) / max(abs(v0), 1e-12))


def _check_window(xs: np.ndarray, mass_profile: np.ndarray, t: float,
                  solver: Solver) -> None:
    peak = float(np.max(np.abs(mass_profile)))
    edge = float(max(abs(mass_profile[0]), abs(mass_profile[-1])))
    if peak > 0 and edge > EDGE_SUPPORT_TOL * peak:
        vmax = float(np.max(np.abs(solver.op.v)))
        lo, hi = solver.tab.scenario.x_support_hint
        need = max(abs(lo), abs(hi)) + vmax * abs(t)
        raise SupportWindowError(
            f"support reached the window edge at t={t:g} "
            f"(edge/peak = {edge / peak:.2e}); widen to at least +-{need:.3g}")


def conservation_report(solver: Solver, times, x_window: tuple[float, float],
                        x_count: int = 400, weights: dict | None = None,
                        entropies: dict | None = None) -> dict[str, ConservationSeries]:
    """Charges and entropies over shared solver sweeps, one sweep per time."""
    weights = weights or {}
    entropies = entropies or {}
    xs = np.linspace(x_window[0], x_window[1], x_count)
    w = solver.op.grid.weights
    acc: dict[str, list] = {f"Q[{k}]": [] for k in weights}
    acc.update({f"S[{k}]": [] for k in entropies})
    for t in times:
        slices = solver.sweep(float(t), xs)
        rho_p = np.stack([s.rho_p for s in slices])
        one_dr = np.stack([s.one_dr for s in slices])
        n = np.stack([s.n for s in slices])
        _check_window(xs, rho_p @ w, float(t), solver)
        for key, h in weights.items():
            density = (rho_p * h[None, :]) @ w
            acc[f"Q[{key}]"].append(float(simpson(density, x=xs)))
        for key, g in entropies.items():
            density = (g(n, solver.op.grid.nodes[None, :]) * one_dr) @ w / TWO_PI
            acc[f"S[{key}]"].append(float(simpson(density, x=xs)))
    return {name: ConservationSeries(name, tuple(float(t) for t in times),
                                     tuple(vals))
            for name, vals in acc.items()}


def conserved_charge(solver: Solver, h, times, x_window: tuple[float, float],
                     x_count: int = 400) -> ConservationSeries:
    """Q[h](t) for a momentum weight given as array, callable or name."""
    if isinstance(h, str):
        h = weight_values(h, solver.op)
    elif callable(h):
        h = np.asarray(h(solver.op.grid.nodes), dtype=float)
    else:
        h = np.asarray(h, dtype=float)
    report = conservation_report(solver, times, x_window, x_count,
                                 weights={"h": h})
    return report["Q[h]"]


def entropy(solver: Solver, g, times, x_window: tuple[float, float],
            x_count: int = 400) -> ConservationSeries:
    """S[g](t) for an entropy density g(n, p), callable or registry name."""
    if isinstance(g, str):
        g = ENTROPY_FUNCTIONS[g]
    report = conservation_report(solver, times, x_window, x_count,
                                 entropies={"g": g})
    return report["S[g]"]


# ---------------------------------------------------------------------------
# weak-form residual on a space-time rectangle

def _gl_nodes(a: float, b: float, count: int) -> tuple[np.ndarray, np.ndarray]:
    ref_x, ref_w = np.polynomial.legendre.leggauss(count)
    return a + 0.5 * (b - a) * (ref_x + 1.0), 0.5 * (b - a) * ref_w


def _edge_nodes(a: float, b: float, cuts, total_points: int):
    """Gauss-Legendre nodes and signed weights on [a,b], split at the cuts.

    The integrand of a discontinuous scenario jumps wherever any momentum
    node's contact crosses the edge; splitting there restores spectral
    convergence on each smooth piece.
    """
    lo, hi = min(a, b), max(a, b)
    span = hi - lo
    inner = sorted(c for c in cuts if lo + 1e-12 * span < c < hi - 1e-12 * span)
    merged = []
    for c in inner:
        if not merged or c - merged[-1] > 1e-9 * span:
            merged.append(c)
    pts = [a] + (merged if a <= b else merged[::-1]) + [b]
    nodes, weights = [], []
    for i in range(len(pts) - 1):
        count = max(6, int(round(total_points * abs(pts[i + 1] - pts[i]) / span)))
        xs, ws = _gl_nodes(pts[i], pts[i + 1], count)
        nodes.append(xs)
        weights.append(ws)
    return np.concatenate(nodes), np.concatenate(weights)


def _x_edge_crossings(solver: Solver, t: float, x_lo: float,
                      x_hi: float) -> np.ndarray:
    """Positions where any mode's contact sits at time t, within [x_lo, x_hi].

    For each momentum node q, psi_q(x) = Xhat(t,x,q) - v_q t is strictly
    increasing in x, so each column has at most one crossing; bracketed
    columns are bisected together in batched solves.
    """
    if solver.tab.scenario.kind != "partitioning":
        return np.empty(0)
    vt = solver.op.v * t
    psi_lo = solver.solve(t, x_lo).xhat - vt
    psi_hi = solver.solve(t, x_hi).xhat - vt
    cols = np.flatnonzero((psi_lo < 0) & (psi_hi > 0))
    if cols.size == 0:
        return np.empty(0)
    lo = np.full(cols.size, x_lo)
    hi = np.full(cols.size, x_hi)
    warm = None
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        xhat, _, _, _ = solver.solve_batch(t, mid, warm)
        warm = xhat
        below = xhat[np.arange(cols.size), cols] - vt[cols] < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) < 1e-11 * max(1.0, abs(x_lo), abs(x_hi)):
            break
    return 0.5 * (lo + hi)


def _t_edge_crossings(solver: Solver, x: float, t_lo: float, t_hi: float,
                      scan: int = 96) -> list[float]:
    """Times at which any mode's contact crosses the line at position x."""
    if solver.tab.scenario.kind != "partitioning":
        return []
    lo, hi = min(t_lo, t_hi), max(t_lo, t_hi)
    ts = np.linspace(lo, hi, scan)
    v = solver.op.v
    psis = np.empty((scan, solver.op.count))
    warm = None
    for i, t in enumerate(ts):
        res = solver.solve(float(t), x, warm=warm)
        warm = res.xhat
        psis[i] = res.xhat - v * t
    cuts = []
    state = {"warm": warm}
    for q in np.flatnonzero(np.any(np.sign(psis[:-1]) != np.sign(psis[1:]), axis=0)):
        def psi_q(t):
            res = solver.solve(float(t), x, warm=state["warm"])
            state["warm"] = res.xhat
            return float(res.xhat[q]) - float(v[q]) * t

        col = psis[:, q]
        for i in range(scan - 1):
            if col[i] == 0.0:
                cuts.append(float(ts[i]))
            elif col[i] * col[i + 1] < 0:
                cuts.append(float(brentq(psi_q, ts[i], ts[i + 1], xtol=1e-11)))
    return cuts


def weak_form_residual(solver: Solver, rectangle: tuple[float, float, float, float],
                       p_index: int, edge_points: int = 160) -> dict:
    """Normalized four-edge integral of the conservation identity.

    rectangle = (x1, x2, t1, t2).  Returns the raw edge sum, the
    normalization (largest edge-integral magnitude) and their ratio; a
    small ratio certifies the weak solution of the transported mode
    p_index on that rectangle.  The density and current at every edge node
    are recomputed through the dressing, so the residual genuinely tests
    the conservation identity rather than the height-field bookkeeping.
    """
    x1, x2, t1, t2 = (float(v) for v in rectangle)

    def charge_edge(t: float) -> float:
        cuts = _x_edge_crossings(solver, t, min(x1, x2), max(x1, x2))
        xs, wts = _edge_nodes(x1, x2, cuts, edge_points)
        order = np.argsort(xs)
        slices = solver.states_batch(t, xs[order])
        q = np.empty(xs.size)
        for j, idx in enumerate(order):
            q[idx] = slices[j].n[p_index] * slices[j].one_dr[p_index]
        return float(q @ wts)

    def current_edge(x: float) -> float:
        cuts = _t_edge_crossings(solver, x, t1, t2)
        ts, wts = _edge_nodes(t1, t2, cuts, edge_points)
        order = np.argsort(ts)
        j = np.empty(ts.size)
        warm = None
        for k in order:
            s = solver.state(float(ts[k]), x, warm=warm)
            warm = s.xhat
            j[k] = s.n[p_index] * s.v_dr[p_index]
        return float(j @ wts)

    q_t2 = charge_edge(t2)
    q_t1 = charge_edge(t1)
    j_x2 = current_edge(x2)
    j_x1 = current_edge(x1)
    raw = (q_t2 - q_t1) + (j_x2 - j_x1)
    scale = max(abs(q_t2), abs(q_t1), abs(j_x2), abs(j_x1))
    residual = raw / scale if scale > 0 else 0.0
    return {
        "rectangle": (x1, x2, t1, t2),
        "p_index": int(p_index),
        "momentum": float(solver.op.grid.nodes[p_index]),
        "edges": {"q_t2": q_t2, "q_t1": q_t1, "j_x2": j_x2, "j_x1": j_x1},
        "raw": raw,
        "scale": scale,
        "residual": residual,
    }


# ---------------------------------------------------------------------------
# derivative identities (finite-difference check of the extended derivatives)

def derivative_identity_check(solver: Solver, t: float, x: float,
                              h: float = 1e-4) -> dict[str, float]:
    """Max mismatch of central differences of Xhat and N against the
    dressed identities: d_x Xhat = 1dr, d_t Xhat = -(v_dr - v),
    d_x N = n 1dr, d_t N = -n v_dr.  Meaningful for C^1 seed data."""
    center = solver.state(t, x)
    xp, xm = solver.state(t, x + h), solver.state(t, x - h)
    tp, tm = solver.state(t + h, x), solver.state(t - h, x)
    fd = {
        "dXhat_dx": (xp.xhat - xm.xhat) / (2 * h),
        "dXhat_dt": (tp.xhat - tm.xhat) / (2 * h),
        "dN_dx": (xp.N - xm.N) / (2 * h),
        "dN_dt": (tp.N - tm.N) / (2 * h),
    }
    model = {
        "dXhat_dx": center.one_dr,
        "dXhat_dt": -(center.v_dr - solver.op.v),
        "dN_dx": center.n * center.one_dr,
        "dN_dt": -center.n * center.v_dr,
    }
    return {key: float(np.max(np.abs(fd[key] - model[key]))) for key in fd}

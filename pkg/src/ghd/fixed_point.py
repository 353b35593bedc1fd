"""Contracting fixed point for the coordinate change and state reconstruction.

For each space-time point (t,x) we solve

    Xhat(p) = x + (T N0hat(Xhat(.) - v(.) t, .))(p)

by Banach iteration; the rigorous contraction rate is the seed envelope
norm r = ||T sup_x n0||_op < 1, and the stopping rule is the a-posteriori
bound ||X_{k+1} - X_k|| * r/(1-r) <= fp_tol.  The measured per-iteration
ratios are recorded for reporting only, never used to stop.

Constant kernels (hard rods) collapse the map to one scalar equation that
is strictly monotone in the unknown, solved by bracketed root finding; this
bypasses the contraction precondition entirely.

From the solved Xhat the full state at (t,x) follows: occupation
n = n0(X0(Xhat - v t)), height N = N0hat(Xhat - v t), densities
rho_s = 1dr/(2 pi), rho_p = n rho_s, effective velocity v_eff = v_dr/1dr,
and the characteristic u = X0(Xhat - v t) (the initial position of the
trajectory through (t,x)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dressing import dress_batched, sign_threshold
from .errors import AssumptionError, ConvergenceError
from .seed import SeedTables

TWO_PI = 2.0 * np.pi

WARM_FROM_X = "from_x"
WARM_FROM_NEIGHBOR = "from_neighbor"


@dataclass(frozen=True)
class SolverConfig:
    """Stopping policy for the fixed-point iteration."""

    fp_tol: float = 1e-10
    max_iters: int = 500
    warm_start: str = WARM_FROM_NEIGHBOR
    inv_tol: float = 1e-10

    def __post_init__(self):
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be positive")


@dataclass(frozen=True)
class SolveResult:
    """Solved coordinate change at one (t,x) plus iteration statistics."""

    xhat: np.ndarray
    iters: int
    final_residual: float
    contraction_ratios: tuple


@dataclass(frozen=True)
class StateSlice:
    """Full reconstructed state at one space-time point."""

    t: float
    x: float
    xhat: np.ndarray
    N: np.ndarray
    n: np.ndarray
    rho_p: np.ndarray
    rho_s: np.ndarray
    one_dr: np.ndarray
    v_dr: np.ndarray
    v_eff: np.ndarray
    u: np.ndarray
    tn_norm: float
    iters: int
    final_residual: float
    contraction_ratios: tuple


class Solver:
    """Fixed-point solver bound to seed tables and a stopping policy."""

    def __init__(self, tab: SeedTables, config: SolverConfig | None = None):
        self.tab = tab
        self.op = tab.op
        self.config = config or SolverConfig()
        self.rate = tab.rate
        # zero kernels contract trivially; only a genuine constant kernel
        # needs the scalar route
        self.constant_kernel = (self.op.kernel.constant_in_pq
                                and self.op.kernel.constant_value != 0.0)
        threshold = sign_threshold(self.op.sign_class)
        if self.rate >= threshold and not self.constant_kernel:
            raise AssumptionError(
                f"contraction rate {self.rate:.6g} >= {threshold:g}; "
                "fixed-point iteration is not certified for this kernel")
        self._contracting = self.rate < threshold
        # a-posteriori factor: ||X_k - X*|| <= delta_k * r/(1-r)
        self._post_factor = self.rate / (1.0 - self.rate) if self._contracting else None

    # -- the map -------------------------------------------------------------

    def apply_G(self, t: float, x, f: np.ndarray) -> np.ndarray:
        """One application of the map; f has shape (N,) or (m, N)."""
        f = np.asarray(f, dtype=float)
        z = f - self.op.v * t
        _, height = self.tab.invert(z)
        gx = np.asarray(x, dtype=float)
        if f.ndim == 2:
            return gx[:, None] + height @ self.op.TW.T
        return gx + self.op.TW @ height

    # -- solving -------------------------------------------------------------

    def solve_batch(self, t: float, xs: np.ndarray,
                    warm: np.ndarray | None = None):
        """Solve the fixed point at many x for one t.

        Returns (xhat (m,N), iters (m,), residuals (m,), ratios list of
        tuples).  Converged rows are frozen so late iterations of slow rows
        do not pollute their statistics.
        """
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        m = xs.size
        N = self.op.count
        if self.constant_kernel:
            out = np.empty((m, N))
            iters = np.empty(m, dtype=int)
            resid = np.empty(m)
            for i, x in enumerate(xs):
                xi, it, r = self._solve_constant_kernel(t, float(x))
                out[i] = xi
                iters[i] = it
                resid[i] = r
            return out, iters, resid, [() for _ in range(m)]

        f = np.broadcast_to(xs[:, None], (m, N)).copy() if warm is None \
            else np.array(np.broadcast_to(warm, (m, N)), dtype=float)
        active = np.ones(m, dtype=bool)
        iters = np.zeros(m, dtype=int)
        resid = np.full(m, np.inf)
        prev_delta = np.full(m, np.nan)
        ratios: list[list[float]] = [[] for _ in range(m)]
        for k in range(1, self.config.max_iters + 1):
            f_new = self.apply_G(t, xs[active], f[active])
            delta = np.max(np.abs(f_new - f[active]), axis=1)
            f[active] = f_new
            idx = np.flatnonzero(active)
            bound = delta * self._post_factor
            for j, row in enumerate(idx):
                iters[row] = k
                # below ~1e-12 the increments are dominated by round-off and
                # their ratios are meaningless
                if np.isfinite(prev_delta[row]) and prev_delta[row] > 1e-12:
                    ratios[row].append(float(delta[j] / prev_delta[row]))
                prev_delta[row] = delta[j]
            done = bound <= self.config.fp_tol
            resid[idx[done]] = bound[done]
            active[idx[done]] = False
            if not active.any():
                break
        else:
            worst = int(np.argmax(resid))
            raise ConvergenceError(
                f"fixed point at (t={t}, x={xs[worst]}) missed tol "
                f"{self.config.fp_tol:g} after {self.config.max_iters} iterations; "
                f"ratio history: {[round(r, 4) for r in ratios[worst][-8:]]}")
        return f, iters, resid, [tuple(r) for r in ratios]

    def _solve_constant_kernel(self, t: float, x: float):
        """Scalar route for kernels constant in (p,q): monotone bracketing.

        The map value is p-independent, so the fixed point is the root of
        phi(xi) = xi - x - tau * sum_q w_q N0hat(xi - v_q t, q), with
        phi' >= 1; no contraction hypothesis is needed.
        """
        tau = self.op.kernel.constant_value
        w = self.op.grid.weights
        vt = self.op.v * t
        evals = [0]

        def phi(xi):
            evals[0] += 1
            _, height = self.tab.invert(xi - vt)
            return xi - x - tau * float(w @ height)

        phi0 = phi(x)
        if phi0 == 0.0:
            root = x
        else:
            a, b = (x - phi0, x) if phi0 > 0 else (x, x - phi0)
            root = brentq(phi, a, b, xtol=1e-14, rtol=8.9e-16)
        residual = abs(phi(root))
        if residual > self.config.fp_tol:
            raise ConvergenceError(
                f"constant-kernel root at (t={t}, x={x}) has defect {residual:g}")
        return np.full(self.op.count, root), evals[0], residual

    def solve(self, t: float, x: float, warm: np.ndarray | None = None) -> SolveResult:
        xh, iters, resid, ratios = self.solve_batch(
            t, np.array([x]), None if warm is None else np.asarray(warm)[None, :])
        return SolveResult(xh[0], int(iters[0]), float(resid[0]), ratios[0])

    # -- state reconstruction --------------------------------------------------

    def states_batch(self, t: float, xs: np.ndarray,
                     warm: np.ndarray | None = None) -> list[StateSlice]:
        """Solve and reconstruct full slices at many x; dressing is batched."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        xhat, iters, resid, ratios = self.solve_batch(t, xs, warm)
        z = xhat - self.op.v * t
        u, height = self.tab.invert(z)
        n = np.asarray(self.tab.scenario.n0(u, self.op.grid.nodes[None, :]), dtype=float)
        one_dr, v_dr = dress_batched(self.op, n, self.op.v)
        tn = np.max(n @ self.op.abs_TW.T, axis=1)
        rho_s = one_dr / TWO_PI
        rho_p = n * rho_s
        v_eff = v_dr / one_dr
        return [
            StateSlice(t=float(t), x=float(xs[i]), xhat=xhat[i], N=height[i],
                       n=n[i], rho_p=rho_p[i], rho_s=rho_s[i], one_dr=one_dr[i],
                       v_dr=v_dr[i], v_eff=v_eff[i], u=u[i], tn_norm=float(tn[i]),
                       iters=int(iters[i]), final_residual=float(resid[i]),
                       contraction_ratios=ratios[i])
            for i in range(xs.size)
        ]

    def state(self, t: float, x: float, warm: np.ndarray | None = None) -> StateSlice:
        return self.states_batch(t, np.array([x]),
                                 None if warm is None else np.asarray(warm)[None, :])[0]

    def sweep(self, t: float, xs: np.ndarray, chunk: int = 64) -> list[StateSlice]:
        """Warm-started sweep over ordered x values at fixed t.

        Chunks are seeded from the previous chunk's solution shifted by the
        x offset, an O(dx) initial guess by the spatial Lipschitz bound.
        """
        xs = np.asarray(xs, dtype=float)
        if self.config.warm_start != WARM_FROM_NEIGHBOR or xs.size <= 2:
            return self.states_batch(t, xs)
        order = np.argsort(xs)
        slices: list[StateSlice] = [None] * xs.size
        prev_xhat = None
        prev_x = None
        for lo in range(0, xs.size, chunk):
            sel = order[lo:lo + chunk]
            xb = xs[sel]
            warm = None
            if prev_xhat is not None:
                warm = prev_xhat[None, :] + (xb - prev_x)[:, None]
            batch = self.states_batch(t, xb, warm)
            for j, idx in enumerate(sel):
                slices[idx] = batch[j]
            prev_xhat = batch[-1].xhat
            prev_x = xb[-1]
        return slices

    # -- inversion --------------------------------------------------------------

    def invert_xhat(self, t: float, xhat_target: float, p_index: int) -> float:
        """Real position x with Xhat(t, x, p) = xhat_target, within inv_tol.

        Bracketed from the bi-Lipschitz slope bounds and bisected on the
        monotone map x -> Xhat(t, x, p).
        """
        if self.tab.bounds is not None:
            slope_lo = self.tab.bounds.r_value
        else:
            # constant kernel beyond the certified norm: 1dr = 1/(1 + |tau| I_n)
            tau = abs(self.op.kernel.constant_value)
            slope_lo = 1.0 / (1.0 + tau * self.op.grid.span * self.tab.sup_n0)
        last = {"x": None, "xhat": None}

        def g(x):
            warm = None
            if last["x"] is not None:
                warm = last["xhat"] + (x - last["x"])
            res = self.solve(t, x, warm=warm)
            last["x"], last["xhat"] = x, res.xhat
            return float(res.xhat[p_index]) - xhat_target

        x0 = xhat_target
        g0 = g(x0)
        if abs(g0) <= self.config.inv_tol:
            return x0
        if g0 > 0:
            a, b = x0 - g0 / slope_lo, x0
        else:
            a, b = x0, x0 - g0 / slope_lo
        return brentq(g, a, b, xtol=self.config.inv_tol * slope_lo * 0.5)


# ---------------------------------------------------------------------------
# module-level operations

def apply_G(tab: SeedTables, t: float, x: float, f: np.ndarray,
            config: SolverConfig | None = None) -> np.ndarray:
    return Solver(tab, config).apply_G(t, x, f)


def solve_Xhat(tab: SeedTables, t: float, x: float,
               config: SolverConfig | None = None,
               warm: np.ndarray | None = None) -> SolveResult:
    return Solver(tab, config).solve(t, x, warm=warm)


def eval_state(tab: SeedTables, t: float, x: float,
               config: SolverConfig | None = None) -> StateSlice:
    return Solver(tab, config).state(t, x)


def characteristic_u(tab: SeedTables, t: float, x: float, p_index: int,
                     config: SolverConfig | None = None) -> float:
    """Initial position of the trajectory through (t, x) at momentum node p."""
    return float(Solver(tab, config).state(t, x).u[p_index])


def invert_Xhat(tab: SeedTables, t: float, xhat_target: float, p_index: int,
                config: SolverConfig | None = None) -> float:
    return Solver(tab, config).invert_xhat(t, xhat_target, p_index)

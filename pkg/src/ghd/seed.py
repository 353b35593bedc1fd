"""Seed coordinate change and seed height tables.

From the seed occupation function n0(x,p) we build, per momentum node,
cumulative tables

    A(x,p) = integral_0^x 1dr_0(y,p) dy          (the coordinate change)
    B(x,p) = integral_0^x n0(y,p) 1dr_0(y,p) dy  (the cumulative height)

anchored at the origin, A(0,p) = B(0,p) = 0.  The seed height function in
the free coordinate is then N0hat(xhat,p) = B(X0(xhat,p),p) with X0 the
inverse of A in x; because both tables live on the same x nodes, N0hat is
evaluated by inverting A within a cell and reading B at the same cell
parameter, which keeps A(x,p) = x + (T N0hat(A))(p) exact at machine
precision on the discrete grid (and with it, exact recovery of the initial
condition at t = 0).

Interpolation is cubic Hermite with the exact node derivatives
dA = 1dr_0 and dB = n0*1dr_0 (falling back to piecewise linear if the
Hermite slope is not certifiably positive, which cannot happen for
resolved smooth data).  Outside the table the columns are extended
linearly with the boundary-node slopes, which is exact for scenarios that
are constant or decayed beyond the window.  Partitioning scenarios bypass
quadrature entirely: their tables are exactly piecewise linear with one
slope per side of the jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson

from .dressing import DressingBounds, DressingProblem, dress_batched, sign_threshold
from .errors import AssumptionError, ConfigError, NumericalError
from .kernel import KernelOperator

HERMITE = "hermite"
LINEAR = "linear"

DEFAULT_X_RESOLUTION = 2000   # cells per support length
SUPPORT_MARGIN = 0.2          # window extension beyond the support hint
INV_TOL = 1e-10

_NEWTON_ITERS = 8


# ---------------------------------------------------------------------------
# scenarios

@dataclass(frozen=True)
class Scenario:
    """Seed occupation function n0(x,p) with its declared bounds.

    ``n0`` must be vectorized over broadcastable (x, p) arrays and return
    values in [0, declared_sup_n].
    """

    n0: Callable
    declared_sup_n: float
    x_support_hint: tuple[float, float]
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        lo, hi = self.x_support_hint
        if not (self.declared_sup_n > 0) and self.kind != "zero":
            raise ConfigError("declared_sup_n must be positive")
        if not lo < hi:
            raise ConfigError("x_support_hint must be a nonempty interval")


def gaussian_bump(a: float, sigma: float, gamma: float,
                  p0: float = 0.0) -> Scenario:
    """Smooth bump n0(x,p) = a exp(-x^2/(2 sigma^2)) exp(-gamma (p-p0)^2).

    p0 shifts the momentum distribution, giving the state a net momentum.
    """
    if a <= 0 or sigma <= 0 or gamma <= 0:
        raise ConfigError("gaussian_bump requires a, sigma, gamma > 0")

    def n0(x, p):
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        return a * np.exp(-0.5 * (x / sigma) ** 2) * np.exp(-gamma * (p - p0) ** 2)

    return Scenario(n0, a, (-8.0 * sigma, 8.0 * sigma), "gaussian_bump",
                    {"a": a, "sigma": sigma, "gamma": gamma, "p0": p0})


def gaussian_profile(amplitude: float, gamma: float) -> Callable:
    if amplitude < 0 or gamma <= 0:
        raise ConfigError("gaussian profile requires amplitude >= 0, gamma > 0")
    return lambda p: amplitude * np.exp(-gamma * np.asarray(p, dtype=float) ** 2)


def constant_profile(value: float) -> Callable:
    if value < 0:
        raise ConfigError("constant profile requires value >= 0")
    return lambda p: np.full_like(np.asarray(p, dtype=float), value)


def partitioning(n_left: Callable, n_right: Callable,
                 declared_sup_n: float | None = None) -> Scenario:
    """Two-reservoir protocol: n0 = n_left(p) for x < 0, n_right(p) for x >= 0."""
    if declared_sup_n is None:
        probe = np.linspace(-64.0, 64.0, 4097)
        declared_sup_n = float(max(np.max(n_left(probe)), np.max(n_right(probe))))

    def n0(x, p):
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        left = np.asarray(n_left(p), dtype=float)
        right = np.asarray(n_right(p), dtype=float)
        return np.where(x < 0, left, right)

    return Scenario(n0, declared_sup_n, (-1.0, 1.0), "partitioning",
                    {"n_left": n_left, "n_right": n_right})


def tabulated_xy(x_rows: np.ndarray, p_cols: np.ndarray,
                 values: np.ndarray) -> Scenario:
    """Bilinear scenario from a sampled table; constant beyond the x range."""
    x_rows = np.asarray(x_rows, dtype=float)
    p_cols = np.asarray(p_cols, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (x_rows.size, p_cols.size):
        raise ConfigError("tabulated scenario dimensions do not match its axes")
    if np.any(values < 0):
        raise ConfigError("tabulated scenario must be nonnegative")
    from .kernel import _bilinear

    def n0(x, p):
        x, p = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(p, dtype=float))
        return _bilinear(x_rows, p_cols, values, x, p)

    return Scenario(n0, float(values.max()), (float(x_rows[0]), float(x_rows[-1])),
                    "tabulated_xy", {})


def load_tabulated_xy_csv(path) -> Scenario:
    """Scenario table from CSV: header row of p nodes, data rows (x, values...)."""
    raw = np.genfromtxt(path, delimiter=",", dtype=float)
    if raw.ndim != 2 or raw.shape[0] < 3 or raw.shape[1] < 3:
        raise ConfigError(f"tabulated scenario CSV {path} must be at least 2x2 plus axes")
    return tabulated_xy(raw[1:, 0], raw[0, 1:], raw[1:, 1:])


def zero_scenario() -> Scenario:
    def n0(x, p):
        x, p = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(p, dtype=float))
        return np.zeros(x.shape)
    return Scenario(n0, 1e-300, (-1.0, 1.0), "zero", {})


# ---------------------------------------------------------------------------
# spatial grid

@dataclass(frozen=True)
class SpatialGridSpec:
    """Uniform x grid for the seed tables; the origin is always a node."""

    x_min: float
    x_max: float
    count: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ConfigError("spatial grid requires x_min < x_max")
        if self.count < 5:
            raise ConfigError("spatial grid requires count >= 5")


def default_spatial_spec(scenario: Scenario,
                         resolution: int = DEFAULT_X_RESOLUTION) -> SpatialGridSpec:
    lo, hi = scenario.x_support_hint
    margin = SUPPORT_MARGIN * (hi - lo)
    x_min, x_max = lo - margin, hi + margin
    dx = (hi - lo) / resolution
    return SpatialGridSpec(x_min, x_max, int(math.ceil((x_max - x_min) / dx)) + 1)


def _anchored_nodes(spec: SpatialGridSpec) -> np.ndarray:
    """Uniform nodes covering the window with 0 exactly on the grid."""
    x_min, x_max = min(spec.x_min, 0.0), max(spec.x_max, 0.0)
    dx = (spec.x_max - spec.x_min) / (spec.count - 1)
    k_neg = int(math.ceil(-x_min / dx - 1e-12))
    k_pos = int(math.ceil(x_max / dx - 1e-12))
    return dx * np.arange(-k_neg, k_pos + 1)


# ---------------------------------------------------------------------------
# cubic Hermite machinery (vectorized over table columns)

def _hermite(y0, y1, d0, d1, h, s):
    s2 = s * s
    s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0
            + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1)


def _hermite_slope(y0, y1, d0, d1, h, s):
    """d/dx of the cell cubic at parameter s."""
    s2 = s * s
    return ((6 * s2 - 6 * s) * (y0 - y1) / h + (3 * s2 - 4 * s + 1) * d0
            + (3 * s2 - 2 * s) * d1)


def _cell_min_slope(y0, y1, d0, d1, h):
    """Exact minimum of the Hermite slope over each cell."""
    delta = (y1 - y0) / h
    a = 3.0 * (d0 + d1) - 6.0 * delta
    b = 6.0 * delta - 4.0 * d0 - 2.0 * d1
    ends = np.minimum(d0, d1)
    with np.errstate(divide="ignore", invalid="ignore"):
        s_star = np.where(np.abs(a) > 0, -b / (2.0 * a), -1.0)
        vertex = d0 + b * s_star + a * s_star * s_star
    interior = (s_star > 0) & (s_star < 1)
    return np.where(interior, np.minimum(ends, vertex), ends)


def _locate_columns(table: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Cell index per column such that table[i, j] <= z_j <= table[i+1, j].

    ``table`` is (nx, N) with strictly increasing columns; ``z`` is (..., N).
    Out-of-range queries clamp to the boundary cells (callers handle the
    extrapolation masks separately).  Vectorized bisection on the rows.
    """
    nx = table.shape[0]
    cols = np.broadcast_to(np.arange(table.shape[1]), z.shape)
    lo = np.zeros(z.shape, dtype=np.int64)
    hi = np.full(z.shape, nx - 1, dtype=np.int64)
    for _ in range(int(math.ceil(math.log2(max(nx, 2)))) + 1):
        mid = (lo + hi) // 2
        below = table[mid, cols] <= z
        lo = np.where(below & (mid > lo), mid, lo)
        hi = np.where(~below & (mid < hi), mid, hi)
        if np.all(hi - lo <= 1):
            break
    return np.minimum(lo, nx - 2)


# ---------------------------------------------------------------------------
# seed tables

@dataclass
class SeedTables:
    """Per-momentum cumulative tables realizing X0hat, X0 and N0hat."""

    scenario: Scenario
    op: KernelOperator
    x_nodes: np.ndarray          # (nx,)
    A: np.ndarray                # (nx, N) coordinate change
    dA: np.ndarray               # (nx, N) = 1dr_0 at the nodes
    B: np.ndarray                # (nx, N) cumulative height
    dB: np.ndarray               # (nx, N) = n0 * 1dr_0 at the nodes
    mode: str                    # interpolation kind actually in use
    envelope: np.ndarray         # (N,) per-p sup over sampled x of n0
    rate: float                  # ||T envelope||_op, the contraction rate
    sup_n0: float
    vn_sup: float
    bounds: DressingBounds | None
    min_slope_A: float

    @property
    def x_min(self) -> float:
        return float(self.x_nodes[0])

    @property
    def x_max(self) -> float:
        return float(self.x_nodes[-1])

    # -- forward direction ---------------------------------------------------

    def xhat0(self, x, p_index=None):
        """X0hat(x, .) for scalar or array x, all columns or one."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xq = np.atleast_1d(x)
        i = np.clip(np.searchsorted(self.x_nodes, xq) - 1, 0, self.x_nodes.size - 2)
        h = self.x_nodes[i + 1] - self.x_nodes[i]
        s = ((xq - self.x_nodes[i]) / h)[:, None]
        y0, y1 = self.A[i], self.A[i + 1]
        d0, d1 = self.dA[i], self.dA[i + 1]
        if self.mode == HERMITE:
            out = _hermite(y0, y1, d0, d1, h[:, None], s)
        else:
            out = y0 + s * (y1 - y0)
        below = xq < self.x_nodes[0]
        above = xq > self.x_nodes[-1]
        if np.any(below):
            out[below] = self.A[0] + (xq[below, None] - self.x_nodes[0]) * self.dA[0]
        if np.any(above):
            out[above] = self.A[-1] + (xq[above, None] - self.x_nodes[-1]) * self.dA[-1]
        if p_index is not None:
            out = out[:, p_index]
        return float(out[0]) if scalar and np.ndim(out[0]) == 0 else (out[0] if scalar else out)

    def xhat0_cols(self, x: np.ndarray) -> np.ndarray:
        """X0hat evaluated per column at per-column positions x (..., N)."""
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(self.x_nodes, x.ravel()).reshape(x.shape) - 1,
                    0, self.x_nodes.size - 2)
        cols = np.broadcast_to(np.arange(self.A.shape[1]), x.shape)
        xl = self.x_nodes[i]
        h = self.x_nodes[i + 1] - xl
        s = (x - xl) / h
        y0, y1 = self.A[i, cols], self.A[i + 1, cols]
        if self.mode == HERMITE:
            out = _hermite(y0, y1, self.dA[i, cols], self.dA[i + 1, cols], h, s)
        else:
            out = y0 + s * (y1 - y0)
        below = x < self.x_nodes[0]
        above = x > self.x_nodes[-1]
        out = np.where(below, self.A[0][cols] + (x - self.x_nodes[0]) * self.dA[0][cols], out)
        out = np.where(above, self.A[-1][cols] + (x - self.x_nodes[-1]) * self.dA[-1][cols], out)
        return out

    # -- inverse direction ---------------------------------------------------

    def invert(self, zhat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Solve A(x, p_j) = zhat_j per column; return (x, N0hat(zhat)).

        ``zhat`` has shape (..., N); both outputs share it.  The height is
        read from B at the same cell parameter, which realizes
        N0hat = B o X0 exactly on the discrete tables.
        """
        zhat = np.asarray(zhat, dtype=float)
        cells = _locate_columns(self.A, zhat)
        cols = np.broadcast_to(np.arange(self.A.shape[1]), zhat.shape)
        a0 = self.A[cells, cols]
        a1 = self.A[cells + 1, cols]
        da0 = self.dA[cells, cols]
        da1 = self.dA[cells + 1, cols]
        b0 = self.B[cells, cols]
        b1 = self.B[cells + 1, cols]
        db0 = self.dB[cells, cols]
        db1 = self.dB[cells + 1, cols]
        xl = self.x_nodes[cells]
        h = self.x_nodes[cells + 1] - xl

        if self.mode == HERMITE:
            s = np.clip((zhat - a0) / (a1 - a0), 0.0, 1.0)
            for _ in range(_NEWTON_ITERS):
                resid = _hermite(a0, a1, da0, da1, h, s) - zhat
                slope = _hermite_slope(a0, a1, da0, da1, h, s) * h
                s = np.clip(s - resid / slope, 0.0, 1.0)
            height = _hermite(b0, b1, db0, db1, h, s)
        else:
            s = (zhat - a0) / (a1 - a0)
            height = b0 + s * (b1 - b0)
        x = xl + s * h

        below = zhat < self.A[0]
        above = zhat > self.A[-1]
        if np.any(below):
            dz = zhat - self.A[0]
            x = np.where(below, self.x_nodes[0] + dz / self.dA[0], x)
            height = np.where(below, self.B[0] + dz * (self.dB[0] / self.dA[0]), height)
        if np.any(above):
            dz = zhat - self.A[-1]
            x = np.where(above, self.x_nodes[-1] + dz / self.dA[-1], x)
            height = np.where(above, self.B[-1] + dz * (self.dB[-1] / self.dA[-1]), height)
        return x, height

    def x0(self, zhat: np.ndarray) -> np.ndarray:
        return self.invert(zhat)[0]

    def n0hat_height(self, zhat: np.ndarray) -> np.ndarray:
        return self.invert(zhat)[1]


def build_seed(scenario: Scenario, op: KernelOperator,
               x_spec: SpatialGridSpec | None = None,
               mode: str = HERMITE) -> SeedTables:
    """Build the seed tables by dressing n0 at every spatial node.

    Partitioning scenarios take the exact piecewise-linear route; anything
    else is integrated by cumulative Simpson on a uniform origin-anchored
    grid, with the dressing solved in one batched pass over the nodes.
    """
    if scenario.kind == "partitioning":
        return _build_partitioning(scenario, op)

    spec = x_spec or default_spatial_spec(scenario)
    x_nodes = _anchored_nodes(spec)
    dx = x_nodes[1] - x_nodes[0]
    Ns = np.asarray(scenario.n0(x_nodes[:, None], op.grid.nodes[None, :]), dtype=float)
    if np.any(Ns < 0):
        raise AssumptionError("seed occupation is negative at a sampled point")
    if Ns.max(initial=0.0) > scenario.declared_sup_n * (1 + 1e-12) + 1e-300:
        raise AssumptionError("seed occupation exceeds its declared bound")

    envelope = Ns.max(axis=0)
    rate = op.operator_norm(envelope=envelope)
    threshold = sign_threshold(op.sign_class)
    if rate >= threshold and not op.kernel.constant_in_pq:
        raise AssumptionError(
            f"contraction rate ||T sup_x n0||_op = {rate:.6g} >= {threshold:g} "
            f"({op.sign_class} kernel); seed admissibility fails")

    one_rows, _ = dress_batched(op, Ns, np.ones(op.count))
    dA = one_rows
    dB = Ns * one_rows
    i0 = int(np.argmin(np.abs(x_nodes)))
    A_raw = cumulative_simpson(dA, dx=dx, axis=0, initial=0.0)
    B_raw = cumulative_simpson(dB, dx=dx, axis=0, initial=0.0)
    A = A_raw - A_raw[i0]
    B = B_raw - B_raw[i0]

    mode_used = mode
    min_slope_A = float(_cell_min_slope(A[:-1], A[1:], dA[:-1], dA[1:], dx).min())
    if mode == HERMITE:
        min_slope_B = float(_cell_min_slope(B[:-1], B[1:], dB[:-1], dB[1:], dx).min())
        if min_slope_A <= 0 or min_slope_B < -1e-13 * max(dB.max(initial=0.0), 1.0):
            # Under-resolved data: the cubic is not certifiably monotone.
            mode_used = LINEAR
    if mode_used == LINEAR:
        min_slope_A = float((np.diff(A, axis=0) / dx).min())
    if min_slope_A <= 0:
        raise NumericalError(
            "seed coordinate change is not strictly increasing; "
            "this is unreachable when the admissibility bounds hold")

    bounds = DressingBounds.for_norm(rate, op.sign_class) if rate < threshold else None
    vn_sup = float(np.max(np.abs(op.v) * envelope))
    return SeedTables(scenario, op, x_nodes, A, dA, B, dB, mode_used, envelope,
                      rate, float(envelope.max(initial=0.0)), vn_sup, bounds,
                      min_slope_A)


def _build_partitioning(scenario: Scenario, op: KernelOperator) -> SeedTables:
    """Exact three-node tables: one slope per side of the jump at x = 0."""
    n_left = np.asarray(scenario.params["n_left"](op.grid.nodes), dtype=float)
    n_right = np.asarray(scenario.params["n_right"](op.grid.nodes), dtype=float)
    one_left = DressingProblem(op, n_left).one_dressed()
    one_right = DressingProblem(op, n_right).one_dressed()

    lo, hi = scenario.x_support_hint
    margin = SUPPORT_MARGIN * (hi - lo)
    x_nodes = np.array([lo - margin, 0.0, hi + margin])
    A = np.vstack([x_nodes[0] * one_left, np.zeros(op.count), x_nodes[2] * one_right])
    dA = np.vstack([one_left, one_right, one_right])
    B = np.vstack([x_nodes[0] * n_left * one_left, np.zeros(op.count),
                   x_nodes[2] * n_right * one_right])
    dB = np.vstack([n_left * one_left, n_right * one_right, n_right * one_right])

    envelope = np.maximum(n_left, n_right)
    rate = op.operator_norm(envelope=envelope)
    threshold = sign_threshold(op.sign_class)
    if rate >= threshold and not op.kernel.constant_in_pq:
        raise AssumptionError(
            f"contraction rate ||T sup_x n0||_op = {rate:.6g} >= {threshold:g} "
            f"({op.sign_class} kernel); seed admissibility fails")
    bounds = DressingBounds.for_norm(rate, op.sign_class) if rate < threshold else None
    vn_sup = float(np.max(np.abs(op.v) * envelope))
    return SeedTables(scenario, op, x_nodes, A, dA, B, dB, LINEAR, envelope,
                      rate, float(envelope.max(initial=0.0)), vn_sup, bounds,
                      float(np.minimum(one_left, one_right).min()))


# ---------------------------------------------------------------------------
# spec-level operations on single momentum columns

def eval_Xhat0(tab: SeedTables, x: float, p_index: int) -> float:
    """Forward coordinate change X0hat(x, p) at one momentum node."""
    return float(tab.xhat0(x, p_index=p_index))


def X0_inverse(tab: SeedTables, xhat: float, p_index: int) -> float:
    """Real coordinate X0(xhat, p): the inverse of the coordinate change."""
    z = np.zeros((1, tab.op.count))
    z[0, p_index] = xhat
    return float(tab.x0(z)[0, p_index])


def eval_N0hat(tab: SeedTables, xhat: float, p_index: int) -> float:
    """Seed height N0hat(xhat, p) = B(X0(xhat, p), p)."""
    z = np.zeros((1, tab.op.count))
    z[0, p_index] = xhat
    return float(tab.n0hat_height(z)[0, p_index])

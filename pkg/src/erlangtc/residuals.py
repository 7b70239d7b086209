"""Residual checks of the governing fractional systems.

The transient series are verified by substituting them back into the
difference-differential systems they solve: the Caputo tempered derivative of
each series-evaluated probability (sampled on a uniform grid) is compared to
the right-hand side assembled from neighbouring series values.  Six state
equation classes, the phase-count system, the generating-function equation
and the mean Cauchy problem are covered.

Nothing here feeds back into the probabilities; a residual that exceeds its
tolerance is evidence against the series (or the quadrature grid), never an
input to them.
"""

from __future__ import annotations

import numpy as np

from .analytics import Evaluator, SeriesContext, _state_prob_arrays, _zero_state_arrays, _mean_arrays
from .base_queue import phase_inverse
from .fractional import FracParams, SampledFunction, caputo_tempered_derivative
from .special import DomainError

DEFAULT_GRID_POINTS = 2001
DEFAULT_SPAN = 2.0


class ResidualGrid:
    """Series values of p_0 and p_{n,s} sampled on a uniform time grid."""

    def __init__(self, ctx: SeriesContext, span: float = DEFAULT_SPAN,
                 points: int = DEFAULT_GRID_POINTS):
        if span <= 0 or points < 16:
            raise DomainError("need span > 0 and at least 16 grid points")
        self.ctx = ctx
        self.grid = np.linspace(0.0, span, points)
        self.ev = Evaluator(ctx, self.grid)
        self._p: dict[tuple[int, int], np.ndarray] = {}
        self._frac = FracParams(theta=max(ctx.tp.theta, 0.0), alpha=ctx.tp.alpha) \
            if 0 < ctx.tp.alpha < 1 else None

    def p(self, n: int, s: int) -> np.ndarray:
        """p_{n,s} on the grid (p(0,0) is the zero state)."""
        key = (n, s)
        if key not in self._p:
            if key == (0, 0):
                value, _, _ = _zero_state_arrays(self.ev)
            else:
                value, _, _ = _state_prob_arrays(self.ev, n, s)
            self._p[key] = value
        return self._p[key]

    def q(self, m: int) -> np.ndarray:
        sp = phase_inverse(m, self.ctx.qp.k)
        return self.p(sp.n, sp.s)

    def derivative(self, values: np.ndarray, t: float) -> float:
        """Caputo tempered derivative of a gridded function at t.

        For alpha = 1 (the classical limit) a central finite difference is
        used instead of the singular-kernel quadrature.
        """
        f = SampledFunction(self.grid, values)
        idx = f.index_of(t)
        if self._frac is None:  # alpha == 1
            h = self.grid[1] - self.grid[0]
            return float((values[idx + 1] - values[idx - 1]) / (2 * h))
        return caputo_tempered_derivative(f, self._frac, t).value

    def at(self, values: np.ndarray, t: float) -> float:
        idx = int(np.argmin(np.abs(self.grid - t)))
        if not np.isclose(self.grid[idx], t, atol=1e-9):
            raise DomainError(f"t={t} not on the residual grid")
        return float(values[idx])


def _equation_classes(ctx: SeriesContext) -> list[tuple[str, tuple[int, int]]]:
    """One representative state per equation class of the governing system."""
    k, l = ctx.qp.k, ctx.qp.l
    classes = [("zero", (0, 0))]
    if k >= 2:
        classes.append(("one_phase_below_k", (1, 1)))
    classes.append(("one_phase_k", (1, k)))
    if k >= 2:
        classes.append(("multi_below_k", (2, 1)))
    if l >= 2:
        classes.append(("multi_k_within_batch", (2, k)))
    classes.append(("multi_k_beyond_batch", (l + 1, k)))
    return classes


def _rhs_state(grid: ResidualGrid, n: int, s: int, t: float) -> float:
    """Right-hand side of the governing equation for state (n, s) at time t."""
    ctx = grid.ctx
    qp = ctx.qp
    k, l, Lam, kmu = qp.k, qp.l, qp.Lambda, ctx.kmu
    c = qp.c
    at = grid.at
    if (n, s) == (0, 0):
        return -Lam * at(grid.p(0, 0), t) + kmu * at(grid.p(1, 1), t)
    if n == 1 and s < k:
        return -(Lam + kmu) * at(grid.p(1, s), t) + kmu * at(grid.p(1, s + 1), t)
    if n == 1 and s == k:
        return (-(Lam + kmu) * at(grid.p(1, k), t) + kmu * at(grid.p(2, 1), t)
                + Lam * c[0] * at(grid.p(0, 0), t))
    if s < k:  # n >= 2; a batch into the empty system starts at phase k, so
        # the inflow from (0, s) vanishes for s < k
        inflow = sum(c[m - 1] * at(grid.p(n - m, s), t)
                     for m in range(1, min(n, l) + 1) if n - m >= 1)
        return (-(Lam + kmu) * at(grid.p(n, s), t) + kmu * at(grid.p(n, s + 1), t)
                + Lam * inflow)
    if 2 <= n <= l:  # s == k, the batch component c_n feeds from empty
        inflow = sum(c[m - 1] * at(grid.p(n - m, k), t) for m in range(1, n))
        return (-(Lam + kmu) * at(grid.p(n, k), t) + kmu * at(grid.p(n + 1, 1), t)
                + Lam * inflow + Lam * c[n - 1] * at(grid.p(0, 0), t))
    inflow = sum(c[m - 1] * at(grid.p(n - m, k), t) for m in range(1, l + 1))
    return (-(Lam + kmu) * at(grid.p(n, k), t) + kmu * at(grid.p(n + 1, 1), t)
            + Lam * inflow)


def system_residuals(ctx: SeriesContext, ts, pgf_u=(0.3, 0.7),
                     queue_length_states=(0, 1, 3), pgf_max_phase: int = 24,
                     grid: ResidualGrid | None = None) -> dict[str, dict[float, float]]:
    """Residuals of every governing-equation class at the requested times.

    Returns a mapping  equation name -> {t: |LHS - RHS|}.  The state classes
    cover the zero state, (1, s<k), (1, k), (n, s<k) for n >= 2, (n, k) for
    2 <= n <= l and (n, k) for n > l; the phase-count system and the
    generating-function equation are included as well.
    """
    grid = grid or ResidualGrid(ctx, span=max(DEFAULT_SPAN, max(ts)))
    qp = ctx.qp
    Lam, kmu, k, l = qp.Lambda, ctx.kmu, qp.k, qp.l
    out: dict[str, dict[float, float]] = {}

    for name, (n, s) in _equation_classes(ctx):
        res = {}
        values = grid.p(n, s)
        for t in ts:
            lhs = grid.derivative(values, t)
            res[t] = abs(lhs - _rhs_state(grid, n, s, t))
        out[f"state[{name}]"] = res

    c_prime = {i * k: qp.c[i - 1] for i in range(1, l + 1)}
    for m in queue_length_states:
        res = {}
        values = grid.q(m)
        for t in ts:
            lhs = grid.derivative(values, t)
            if m == 0:
                rhs = -Lam * grid.at(grid.q(0), t) + kmu * grid.at(grid.q(1), t)
            else:
                inflow = sum(cc * grid.at(grid.q(m - j), t)
                             for j, cc in c_prime.items() if j <= m)
                rhs = (-(Lam + kmu) * grid.at(grid.q(m), t)
                       + kmu * grid.at(grid.q(m + 1), t) + Lam * inflow)
            res[t] = abs(lhs - rhs)
        out[f"queue_length[{m}]"] = res

    for u in pgf_u:
        res = {}
        G = grid.p(0, 0).copy()
        for m in range(1, pgf_max_phase + 1):
            G = G + u**m * grid.q(m)
        batch_poly = sum(qp.c[i - 1] * u ** (i * k) for i in range(1, l + 1))
        for t in ts:
            lhs = u * grid.derivative(G, t)
            rhs = ((kmu * (1 - u) - Lam * u * (1 - batch_poly)) * grid.at(G, t)
                   - kmu * (1 - u) * grid.at(grid.p(0, 0), t))
            res[t] = abs(lhs - rhs)
        out[f"pgf[u={u}]"] = res

    return out


def mean_residual(ctx: SeriesContext, ts, grid: ResidualGrid | None = None
                  ) -> dict[float, float]:
    """|d^{theta,alpha} M(t) - k mu p_0(t) + k mu - k Lambda sum_i i c_i|."""
    grid = grid or ResidualGrid(ctx, span=max(DEFAULT_SPAN, max(ts)))
    qp = ctx.qp
    mean_values, _, _ = _mean_arrays(grid.ev)
    balance = qp.k * qp.Lambda * qp.mean_batch - qp.k * qp.mu
    out = {}
    for t in ts:
        lhs = grid.derivative(mean_values, t)
        rhs = ctx.kmu * grid.at(grid.p(0, 0), t) + balance
        out[t] = abs(lhs - rhs)
    return out

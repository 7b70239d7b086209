"""Direct transcription of the single-arrival (l = 1) transient series.

The batch machinery in :mod:`erlangtc.analytics` specializes to l = 1, where
the coefficient ledger collapses to explicit closed forms.  This module
transcribes those closed forms independently of the composition-enumeration
code so the two implementations can be compared term by term; it is used by
tests and the validation suite, not by the numerical laws themselves.

Notation (eta = theta^alpha - lambda - k*mu):

    delta0[h,n]   = h + n(k+1)
    Z0[h,n]       = (h lambda^n / n!) (k mu)^{delta0-n-1} (delta0-1)! / (delta0-n)!
    d[r;n,s]      = n + r + k(r+1) - s + 1
    D[r;n,s]      = lambda^{n+r} (k mu)^{k(r+1)-s} (d-1)! / ((n+r)! (k(r+1)-s)!)
    F[r,h,w;n,s]  = k mu D[r;n,s] Z0[h,w]          at power f = d + delta0
    Z[r,h,w;n,s]  = k mu D[r;n,s+1] Z0[h,w]  (s<k) at power z = d[r;n,s+1] + delta0
                    k mu D[r;n+1,1] Z0[h,w]  (s=k) at power z = d[r;n+1,1] + delta0

The printed exponent of (k mu) in Z0 is delta0 in some sources; only
delta0-n-1 is consistent with the batch ledger at l = 1 and with the
resolvent expansion of the zero-state transform, so that is what both code
paths use (the discrepancy is exercised by the coefficient cross-check
tests).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .analytics import Evaluator, SeriesContext, _run_shells
from .special import DomainError


def _require_l1(ctx: SeriesContext):
    if ctx.qp.l != 1:
        raise DomainError("direct transcription requires l = 1")


def log_z0(ctx: SeriesContext, h: int, n: int) -> tuple[int, float]:
    """(delta0, log Z0) for the zero-state ledger at (h, n)."""
    lam, k, kmu = ctx.qp.Lambda, ctx.qp.k, ctx.kmu
    delta0 = h + n * (k + 1)
    logz = (
        math.log(h) + n * math.log(lam) - float(gammaln(n + 1))
        + (delta0 - n - 1) * math.log(kmu)
        + float(gammaln(delta0)) - float(gammaln(delta0 - n + 1))
    )
    return delta0, logz


def log_d(ctx: SeriesContext, r: int, n: int, s: int) -> tuple[int, float]:
    """(d, log D) for the direct block at (r; n, s)."""
    lam, k, kmu = ctx.qp.Lambda, ctx.qp.k, ctx.kmu
    power = k * (r + 1) - s
    d = n + r + power + 1
    logd = (
        (n + r) * math.log(lam) + power * math.log(kmu)
        + float(gammaln(d)) - float(gammaln(n + r + 1)) - float(gammaln(power + 1))
    )
    return d, logd


def zero_state_prob_l1(ctx: SeriesContext, t) -> float | np.ndarray:
    """Zero-state probability from the explicit l = 1 ledger."""
    _require_l1(ctx)
    ev = Evaluator(ctx, t)
    cfg = ctx.cfg

    def shells():
        for u in range(1, cfg.h_cap + cfg.n_cap + 1):
            val = np.zeros_like(ev.t)
            for h in range(max(1, u - cfg.n_cap), min(u, cfg.h_cap) + 1):
                n = u - h
                delta0, logz = log_z0(ctx, h, n)
                logphi, _, _ = ev.phi_mix(delta0)
                val += np.exp(logz + logphi)
            yield val, np.zeros_like(val), float(np.abs(val).max())

    value, _, _ = _run_shells(shells(), cfg.tol, cfg.shell_factor, cfg.shell_window)
    return float(value[0]) if ev.scalar else value


def state_prob_l1(ctx: SeriesContext, n: int, s: int, t) -> float | np.ndarray:
    """State probability p_{n,s} from the explicit l = 1 coefficients."""
    _require_l1(ctx)
    if n < 1 or not 1 <= s <= ctx.qp.k:
        raise DomainError(f"({n},{s}) is not a positive state for k={ctx.qp.k}")
    ev = Evaluator(ctx, t)
    cfg = ctx.cfg
    k = ctx.qp.k
    log_kmu = math.log(ctx.kmu)
    reading = "m" if ctx.theta_power_reading == "a" else "alpha"

    # inner zero ledger flattened once
    inner = []
    for h in range(1, cfg.h_cap + 1):
        for w in range(0, cfg.w_cap + 1):
            inner.append(log_z0(ctx, h, w))

    def direct_shells():
        for r in range(cfg.r_cap + 1):
            d, logd = log_d(ctx, r, n, s)
            logphi, _, _ = ev.phi_mix(d, reading)
            val = np.exp(logd + logphi)
            yield val, np.zeros_like(val), float(np.abs(val).max())

    def cross_shells(sign: float, shifted: bool):
        for r in range(cfg.r_cap + 1):
            if shifted and s == k:
                d, logd = log_d(ctx, r, n + 1, 1)
            elif shifted:
                d, logd = log_d(ctx, r, n, s + 1)
            else:
                d, logd = log_d(ctx, r, n, s)
            val = np.zeros_like(ev.t)
            for delta0, logz in inner:
                logphi, _, _ = ev.phi_mix(d + delta0)
                val += np.exp(log_kmu + logd + logz + logphi)
            yield sign * val, np.zeros_like(val), float(np.abs(val).max())

    a_val, _, _ = _run_shells(direct_shells(), cfg.tol, cfg.shell_factor, cfg.shell_window)
    b_val, _, _ = _run_shells(cross_shells(+1.0, False), cfg.tol, cfg.shell_factor,
                              cfg.shell_window)
    c_val, _, _ = _run_shells(cross_shells(-1.0, True), cfg.tol, cfg.shell_factor,
                              cfg.shell_window)
    value = a_val + b_val + c_val
    return float(value[0]) if ev.scalar else value


def l1_coefficients(ctx: SeriesContext, r: int, h: int, w: int, n: int, s: int) -> dict:
    """The explicit l = 1 coefficient set at one index tuple (for cross-checks)."""
    _require_l1(ctx)
    alpha = ctx.tp.alpha
    kmu, k = ctx.kmu, ctx.qp.k
    delta0, logz = log_z0(ctx, h, w)
    d, logd = log_d(ctx, r, n, s)
    if s < k:
        d_shift, logd_shift = log_d(ctx, r, n, s + 1)
    else:
        d_shift, logd_shift = log_d(ctx, r, n + 1, 1)
    return {
        "delta0": delta0,
        "Z0": math.exp(logz),
        "psi0": alpha * (delta0 - 1) + 1.0,
        "d": d,
        "D": math.exp(logd),
        "zeta": alpha * (d - 1) + 1.0,
        "F": kmu * math.exp(logd + logz),
        "f": d + delta0,
        "eta_exp": alpha * (d + delta0 - 1) + 1.0,
        "Z": kmu * math.exp(logd_shift + logz),
        "z": d_shift + delta0,
        "alpha_exp": alpha * (d_shift + delta0 - 1) + 1.0,
        "eta_const": ctx.tp.theta**alpha - ctx.qp.Lambda - kmu,
        "psiM": alpha * delta0 + 1.0,
    }

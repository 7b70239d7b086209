"""Closed-form transient laws of the tempered Erlang queue with batch arrivals.

Every law evaluated here is a nested Mittag-Leffler series in which an
integer resolvent power gamma pairs a (factorially large) coefficient with
one of two tempering sums.  Writing E for the three-parameter Mittag-Leffler
function, x for the series argument and B = alpha*(gamma-1)+1, the
"hitting mixture"

    Phi_mix(gamma; t) = sum_m e^{-theta t} theta^m t^{B+m-1}
        * [ E^gamma_{alpha,B+m}(x t^alpha)
            - (theta t)^alpha E^gamma_{alpha,B+m+alpha}(x t^alpha) ]

is the inverse Laplace transform of Psi(z)/z * ((z+theta)^alpha - x)^{-gamma}
(the inverse-subordinator mixture of y^{gamma-1} e^{-(Lambda+k mu) y} /
Gamma(gamma) when x = theta^alpha - Lambda - k mu), and the "integrated"
variant with a caller-chosen exponent B

    Phi_int(gamma, B; t) = sum_m e^{-theta t} theta^m t^{B+m-1}
        * E^gamma_{alpha,B+m}(x t^alpha)

covers running integrals: mean queue length, busy-period distribution and
inter-event survivals.  Coefficients live in log space and only ever meet
the log-magnitude of their tempering sum inside one exp, so nothing
overflows; double sums of coefficients (the cross blocks of the state
probabilities) are folded by exact integer-index log-convolution before any
time-dependent work.

Probabilities come exclusively from these series; the fractional operators
are used only to verify them through residuals of the governing systems.

One display ambiguity is kept live: in the direct block of the state
probabilities the tempering weight reads either theta^a (a the outer summation
index, consistent with the resolvent inversion used by every other block) or
a fixed theta^alpha.  Both readings sit behind
``SeriesContext.theta_power_reading``; conservation of probability and Monte
Carlo agreement select "a", and the validation report records the evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .base_queue import QueueParams, phase_inverse
from .special import DomainError, UnconvergedError
from .subordinators import TemperedStableParams

_NEG_INF = -np.inf
# log-gamma coefficients carry a few-ulp relative error; after exponentiation
# the cancellation floor of the alternating sums is this multiple of the
# absolute-term mass (calibrated against 40-digit reference values)
_CANCEL_ULP = 2e-15


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation caps and tolerances for every nested summation index."""

    h_cap: int = 80
    n_cap: int = 48
    r_cap: int = 48
    w_cap: int = 48
    m_cap: int = 256
    comp_cap: int = 500_000
    tol: float = 1e-9
    ml_tol: float = 1e-15
    shell_factor: float = 0.1
    shell_window: int = 3
    max_j: int = 600
    beta_shift: float = 0.0  # fault-injection knob for negative-control validation

    def __post_init__(self):
        if min(self.h_cap, self.n_cap, self.r_cap, self.w_cap, self.m_cap) < 1:
            raise DomainError("all series caps must be >= 1")
        if self.tol <= 0 or self.ml_tol <= 0:
            raise DomainError("tolerances must be positive")

    def doubled(self) -> "SeriesConfig":
        """Caps doubled, for certifying a supported t-range."""
        return SeriesConfig(
            h_cap=2 * self.h_cap, n_cap=2 * self.n_cap, r_cap=2 * self.r_cap,
            w_cap=2 * self.w_cap, m_cap=2 * self.m_cap, comp_cap=4 * self.comp_cap,
            tol=self.tol, ml_tol=self.ml_tol, shell_factor=self.shell_factor,
            shell_window=self.shell_window, max_j=2 * self.max_j,
            beta_shift=self.beta_shift,
        )


@dataclass(frozen=True)
class SeriesContext:
    """Queue plus time-change parameters and series configuration."""

    qp: QueueParams
    tp: TemperedStableParams
    cfg: SeriesConfig = SeriesConfig()
    theta_power_reading: str = "a"

    def __post_init__(self):
        if self.theta_power_reading not in ("a", "alpha"):
            raise DomainError("theta_power_reading must be 'a' or 'alpha'")

    @property
    def beta_const(self) -> float:
        """theta^alpha - Lambda - k*mu, recomputed from components."""
        tp, qp = self.tp, self.qp
        return tp.theta**tp.alpha - qp.Lambda - qp.k * qp.mu + self.cfg.beta_shift

    @property
    def kmu(self) -> float:
        return self.qp.k * self.qp.mu


@dataclass(frozen=True)
class SeriesResult:
    """Series value with an accumulated truncation-error estimate."""

    value: float
    err: float
    converged: bool = True

    def __float__(self) -> float:
        return self.value


# ---------------------------------------------------------------------------
# composition enumeration (deterministic lexicographic order)

@lru_cache(maxsize=None)
def _comp_plain(l: int, n: int) -> tuple[tuple[int, ...], ...]:
    """All m = (m_1..m_l) with sum m_j = n."""
    if l == 1:
        return ((n,),)
    out = []
    for first in range(n + 1):
        for rest in _comp_plain(l - 1, n - first):
            out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def _comp_weighted(l: int, v: int) -> tuple[tuple[int, ...], ...]:
    """All m = (m_1..m_l) with sum j*m_j = v."""
    if l == 1:
        return ((v,),)
    out = []
    for last in range(v // l + 1):
        for rest in _comp_weighted(l - 1, v - l * last):
            out.append(rest + (last,))
    return tuple(out)


def _log_comp_weight(qp: QueueParams, m: tuple[int, ...]) -> float:
    """log of prod_i c_i^{m_i}/m_i!, or -inf when an impossible batch appears."""
    total = 0.0
    for ci, mi in zip(qp.c, m):
        if mi == 0:
            continue
        if ci == 0.0:
            return _NEG_INF
        total += mi * math.log(ci) - float(gammaln(mi + 1))
    return total


# ---------------------------------------------------------------------------
# tempering-sum engine

class Evaluator:
    """Series evaluator bound to one context and one time grid.

    Caches, per resolvent power, the Mittag-Leffler coefficient matrices and
    the log-magnitudes of the tempering sums across every law evaluated on
    the grid.  Instances are cheap; a fully warmed instance is read-only and
    safe to share, but warming is not synchronized, so use one instance per
    thread when in doubt.
    """

    def __init__(self, ctx: SeriesContext, t):
        self.ctx = ctx
        self.t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(self.t < 0):
            raise DomainError("t must be >= 0")
        self.alpha = ctx.tp.alpha
        self.theta = ctx.tp.theta
        self._pos = self.t > 0
        self._logt = np.where(self._pos, np.log(np.where(self._pos, self.t, 1.0)), 0.0)
        self._theta_t = self.theta * self.t
        self._cache: dict[tuple, object] = {}

    @property
    def scalar(self) -> bool:
        return self.t.shape == (1,)

    # -- powers of the series argument ---------------------------------------

    def _upow(self, x_coef: float, J: int):
        key = ("upow", x_coef, J)
        if key not in self._cache:
            T = len(self.t)
            if x_coef == 0.0:
                mat = np.zeros((J, T))
                mat[0, :] = 1.0
            else:
                js = np.arange(J, dtype=float)
                lo = js[:, None] * (math.log(abs(x_coef)) + self.alpha * self._logt[None, :])
                mat = np.exp(lo)
                mat[1:, ~self._pos] = 0.0
                mat[0, :] = 1.0
            signs = np.ones(J) if x_coef >= 0 else (-1.0) ** np.arange(J)
            self._cache[key] = (mat, signs)
        return self._cache[key]

    def _pick_J(self, gamma: float, B: float, x_coef: float) -> int:
        if x_coef == 0.0:
            return 1
        umax = abs(x_coef) * float(self.t.max()) ** self.alpha
        if umax == 0.0:
            return 1
        logumax = math.log(umax)
        scale = float(gammaln(B))
        for j in range(self.ctx.cfg.max_j):
            logterm = (
                j * logumax
                + float(gammaln(j + gamma) - gammaln(j + 1.0) - gammaln(gamma))
                - float(gammaln(self.alpha * j + B)) + scale
            )
            if logterm < math.log(1e-18) and j > 4:
                return j + 1
        raise UnconvergedError(
            f"Mittag-Leffler series needs more than {self.ctx.cfg.max_j} terms "
            f"(gamma={gamma}, |u|={umax:.3g})"
        )

    def _scaled_E(self, gamma: float, B: float, delta: float, M: int,
                  x_coef: float) -> tuple[np.ndarray, np.ndarray]:
        """e^{lgamma(B)} E^gamma_{alpha, B+delta+m}(x_coef t^alpha), shape (M, T).

        Returns (values, absolute-term sums); the latter feeds the
        cancellation-error floor for alternating arguments, where the
        attainable relative accuracy is a few ulp of the largest term.
        """
        key = ("E", gamma, B, delta, M, x_coef)
        if key not in self._cache:
            J = self._pick_J(gamma, B, x_coef)
            upow, signs = self._upow(x_coef, J)
            js = np.arange(J, dtype=float)
            ms = np.arange(M, dtype=float)
            logA = (
                gammaln(js[None, :] + gamma) - gammaln(js[None, :] + 1.0)
                - float(gammaln(gamma))
                - gammaln(self.alpha * js[None, :] + B + delta + ms[:, None])
                + float(gammaln(B))
            )
            coef = np.exp(logA)
            self._cache[key] = ((coef * signs[None, :]) @ upow, coef @ upow)
        return self._cache[key]

    # -- tempering sums -------------------------------------------------------

    def _weights(self, M: int, reading: str) -> np.ndarray:
        """(M, T) tempering weights: (theta t)^m, or fixed theta^alpha times t^m."""
        T = len(self.t)
        ms = np.arange(1, M, dtype=float)
        if reading == "m":
            w = np.ones((M, T))
            if M > 1:
                with np.errstate(divide="ignore"):
                    logw = ms[:, None] * np.where(
                        self._theta_t > 0,
                        np.log(np.where(self._theta_t > 0, self._theta_t, 1.0)),
                        _NEG_INF,
                    )[None, :]
                w[1:, :] = np.exp(logw)
            return w
        tm = np.ones((M, T))
        if M > 1:
            tm[1:, :] = np.exp(ms[:, None] * np.where(self._pos, self._logt, _NEG_INF)[None, :])
        return self.theta**self.alpha * tm

    def _tempering_sum(self, gamma: float, B: float, x_coef: float,
                       mix: bool, reading: str):
        """(log Phi(t), log error(t), converged) for one resolvent power.

        Phi(t) = t^{B-1} e^{-theta t} sum_m w_m(t)
                 [E_{B+m} - (theta t)^alpha E_{B+m+alpha}]      (mix)
        or the single-E variant; all Mittag-Leffler values are scaled by
        e^{lgamma(B)} internally and the scale is removed in the returned
        log-magnitudes.  The error combines the tempering-sum tail with the
        cancellation floor, a few ulp of the absolute-term mass of the
        alternating series.
        """
        key = ("phi", gamma, B, x_coef, mix, reading)
        if key in self._cache:
            return self._cache[key]

        cfg = self.ctx.cfg
        M = 24
        while True:
            E0, A0 = self._scaled_E(gamma, B, 0.0, M, x_coef)
            w = self._weights(M, reading)
            terms = w * E0
            abs_terms = w * A0
            if mix:
                Ea, Aa = self._scaled_E(gamma, B, self.alpha, M, x_coef)
                tt_alpha = np.where(self._theta_t > 0, self._theta_t, 0.0) ** self.alpha
                terms = terms - w * tt_alpha[None, :] * Ea
                abs_terms = abs_terms + w * tt_alpha[None, :] * Aa
            S = terms.sum(axis=0)
            S_abs = abs_terms.sum(axis=0)
            scale = np.maximum(np.abs(terms).max(axis=0), np.abs(S))
            tail_rel = float((np.abs(terms[-1]) / np.maximum(scale, 1e-300)).max())
            if tail_rel < 1e-15 or M >= cfg.m_cap:
                tail_ok = tail_rel < 1e-12
                break
            M = min(cfg.m_cap, M * 2)

        S_err = np.abs(terms[-1]) + _CANCEL_ULP * S_abs
        cancel_rel = float((S_err / np.maximum(np.abs(S), 1e-300)).max())
        converged = tail_ok and cancel_rel < 0.5

        with np.errstate(divide="ignore"):
            logS = np.where(S > 0, np.log(np.where(S > 0, S, 1.0)), _NEG_INF)
            logE = np.where(S_err > 0, np.log(np.where(S_err > 0, S_err, 1.0)), _NEG_INF)
        if B == 1.0:
            power = np.zeros_like(self.t)
        else:
            power = np.where(self._pos, (B - 1.0) * self._logt, _NEG_INF)
        base = power - self._theta_t - float(gammaln(B))
        out = (base + logS, base + logE, converged)
        self._cache[key] = out
        return out

    def phi_mix(self, gamma: int, reading: str = "m"):
        B = self.alpha * (gamma - 1.0) + 1.0
        return self._tempering_sum(float(gamma), B, self.ctx.beta_const, True, reading)

    def phi_int(self, gamma: int, B: float, x_coef: float):
        return self._tempering_sum(float(gamma), B, x_coef, False, "m")


# ---------------------------------------------------------------------------
# coefficient ledgers (integer resolvent power -> log coefficient)

def _bin_log(gammas: list[int], logcs: list[float]) -> tuple[np.ndarray, np.ndarray]:
    """Fold (gamma, logc) pairs into unique gammas via logsumexp."""
    g = np.asarray(gammas, dtype=int)
    lc = np.asarray(logcs, dtype=float)
    if len(g) == 0:
        return g, lc
    uniq = np.unique(g)
    folded = np.array([logsumexp(lc[g == x]) for x in uniq])
    return uniq, folded


@lru_cache(maxsize=64)
def _c0_ledger(ctx: SeriesContext) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Zero-state coefficient ledger in shells u = h + n.

    An entry at (h, n, m) has resolvent power gamma = h + n + k sum_j j m_j
    and log-coefficient

        log h + n log Lambda + log prod(c^m/m!)
        + (gamma-n-1) log(k mu) - lgamma(gamma-n+1) + lgamma(gamma).
    """
    qp, cfg = ctx.qp, ctx.cfg
    logL, logkmu = math.log(qp.Lambda), math.log(ctx.kmu)
    shells = []
    count = 0
    for u in range(1, cfg.h_cap + cfg.n_cap + 1):
        gammas, logcs = [], []
        for h in range(max(1, u - cfg.n_cap), min(u, cfg.h_cap) + 1):
            n = u - h
            for m in _comp_plain(qp.l, n):
                count += 1
                if count > cfg.comp_cap:
                    raise UnconvergedError("composition enumeration cap exceeded")
                lw = _log_comp_weight(qp, m)
                if lw == _NEG_INF:
                    continue
                g = h + n + qp.k * sum(j * mj for j, mj in enumerate(m, start=1))
                logcs.append(
                    math.log(h) + n * logL + lw + (g - n - 1) * logkmu
                    - float(gammaln(g - n + 1)) + float(gammaln(g))
                )
                gammas.append(g)
        shells.append(_bin_log(gammas, logcs))
    return tuple(shells)


@lru_cache(maxsize=64)
def _c0_ledger_flat(ctx: SeriesContext) -> tuple[np.ndarray, np.ndarray]:
    """The zero-state ledger folded across shells (used inside cross blocks)."""
    gs, lcs = [], []
    for g, lc in _c0_ledger(ctx):
        gs.extend(g.tolist())
        lcs.extend(lc.tolist())
    return _bin_log(gs, lcs)


@lru_cache(maxsize=256)
def _direct_shells(ctx: SeriesContext, n: int, s: int
                   ) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Direct-block ledger for state (n, s), shells indexed by r.

    Terms are enumerated over {m_j >= 0, r >= 0 : sum_j j m_j - r = n}; the
    resolvent power is a = sum_j m_j + k(r+1) - s + 1 with log-coefficient

        log prod(c^m/m!) + (sum m_j) log Lambda + (k(r+1)-s) log(k mu)
        - lgamma(k(r+1)-s+1) + lgamma(a).
    """
    qp, cfg = ctx.qp, ctx.cfg
    logL, logkmu = math.log(qp.Lambda), math.log(ctx.kmu)
    k = qp.k
    shells = []
    for r in range(cfg.r_cap + 1):
        avals, logcs = [], []
        for m in _comp_weighted(qp.l, n + r):
            lw = _log_comp_weight(qp, m)
            if lw == _NEG_INF:
                continue
            msum = sum(m)
            power = k * (r + 1) - s
            a = msum + power + 1
            avals.append(a)
            logcs.append(
                lw + msum * logL + power * logkmu
                - float(gammaln(power + 1)) + float(gammaln(a))
            )
        shells.append(_bin_log(avals, logcs))
    return tuple(shells)


def _next_state(n: int, s: int, k: int) -> tuple[int, int]:
    """Successor of (n, s) in the service order: one more remaining phase.

    The subtracted cross block of p_{n,s} is the direct ledger of this state:
    (n, s+1) below phase k, and (n+1, 1) at phase k.  Substituting the
    three-block ansatz into the balance equations forces exactly this ledger;
    restricting the s = k branch to raised first-batch counts (an equivalent
    rewrite only when l = 1) would drop every composition with m_1 = 0.
    """
    return (n, s + 1) if s < k else (n + 1, 1)


@lru_cache(maxsize=64)
def _busy_ledger(ctx: SeriesContext, a: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Busy-period ledger from initial phase load a, shells indexed by n."""
    qp, cfg = ctx.qp, ctx.cfg
    logL, logkmu = math.log(qp.Lambda), math.log(ctx.kmu)
    shells = []
    for n in range(cfg.n_cap + 1):
        gs, logcs = [], []
        for m in _comp_plain(qp.l, n):
            lw = _log_comp_weight(qp, m)
            if lw == _NEG_INF:
                continue
            jm = qp.k * sum(j * mj for j, mj in enumerate(m, start=1))
            g = a + n + jm
            gs.append(g)
            logcs.append(
                math.log(a) + n * logL + lw + (a + jm) * logkmu
                + float(gammaln(g)) - float(gammaln(a + jm + 1))
            )
        shells.append(_bin_log(gs, logcs))
    return tuple(shells)


# ---------------------------------------------------------------------------
# shelled summation with tail extrapolation

def _run_shells(shell_values, tol: float, factor: float, window: int):
    """Sum per-shell (value, squared error, magnitude) triples adaptively.

    Stops once ``window`` consecutive shells have nonincreasing magnitudes
    all below tol*factor; the remaining tail is extrapolated geometrically.
    Squared errors accumulate linearly (so independent rounding residuals
    combine in quadrature) while the systematic truncation tail is added
    outright.  Returns (value, err, converged).
    """
    total, err_sq = None, None
    mags: list[float] = []
    exhausted = True
    for value, shell_err_sq, mag in shell_values:
        total = value if total is None else total + value
        err_sq = shell_err_sq if err_sq is None else err_sq + shell_err_sq
        mags.append(mag)
        if len(mags) > window:
            recent = mags[-window:]
            small = all(m < tol * factor for m in recent)
            dec = all(recent[i + 1] <= recent[i] for i in range(window - 1))
            if small and dec:
                exhausted = False
                break
    if total is None:
        raise DomainError("no shells to sum")
    tail = 0.0
    if mags and mags[-1] > 0.0:
        rho = mags[-1] / mags[-2] if len(mags) >= 2 and mags[-2] > 0 else 1.0
        tail = mags[-1] * rho / (1.0 - rho) if rho < 0.9 else mags[-1] * 10.0
    err = np.sqrt(err_sq) + tail
    converged = (not exhausted) or mags[-1] == 0.0 or tail < tol
    return total, err, converged


# ---------------------------------------------------------------------------
# array-native law implementations

def _ledger_sum(ev: Evaluator, shells, phi_of_gamma, tol: float):
    """Shelled sum of exp(logcoef + log Phi(gamma)) over a coefficient ledger."""
    cfg = ev.ctx.cfg

    def shell_iter():
        for gammas, logcs in shells:
            val = np.zeros_like(ev.t)
            err = np.zeros_like(ev.t)
            for g, lc in zip(gammas, logcs):
                logphi, logerr, _ = phi_of_gamma(int(g))
                val += np.exp(lc + logphi)
                err += np.exp(2.0 * (lc + logerr))
            yield val, err, float(np.abs(val).max())

    return _run_shells(shell_iter(), tol, cfg.shell_factor, cfg.shell_window)


def _zero_state_arrays(ev: Evaluator):
    return _ledger_sum(ev, _c0_ledger(ev.ctx), lambda g: ev.phi_mix(g), ev.ctx.cfg.tol)


def _cross_convolved_shells(direct_shells, ledger_flat):
    """Per-r integer log-convolution of a direct ledger with the zero ledger.

    Yields (vvals, logcoefs) per shell where v = a + gamma and the
    coefficient folds every (a, gamma) pair with v = a + gamma.
    """
    lg_g, lg_c = ledger_flat
    for avals, logcs in direct_shells:
        if len(avals) == 0 or len(lg_g) == 0:
            yield np.asarray([], dtype=int), np.asarray([])
            continue
        v = (avals[:, None] + lg_g[None, :]).ravel()
        lc = (logcs[:, None] + lg_c[None, :]).ravel()
        uniq = np.unique(v)
        dense = np.full(uniq[-1] + 1, _NEG_INF)
        np.logaddexp.at(dense, v, lc)
        yield uniq, dense[uniq]


def _state_prob_arrays(ev: Evaluator, n: int, s: int):
    """(value, err, converged) arrays of p_{n,s} on the evaluator grid."""
    ctx = ev.ctx
    qp, cfg = ctx.qp, ctx.cfg
    if n < 1 or not 1 <= s <= qp.k:
        raise DomainError(f"({n},{s}) is not a positive state for k={qp.k}")
    reading = "m" if ctx.theta_power_reading == "a" else "alpha"
    log_kmu = math.log(ctx.kmu)

    direct = _direct_shells(ctx, n, s)
    shifted = _direct_shells(ctx, *_next_state(n, s, qp.k))
    flat = _c0_ledger_flat(ctx)

    a_val, a_err, a_conv = _run_shells(
        _phi_paired_shells(ev, direct, 0.0, reading),
        cfg.tol, cfg.shell_factor, cfg.shell_window,
    )
    b_val, b_err, b_conv = _run_shells(
        _phi_paired_shells(ev, _cross_convolved_shells(direct, flat), log_kmu, "m"),
        cfg.tol, cfg.shell_factor, cfg.shell_window,
    )
    c_val, c_err, c_conv = _run_shells(
        _phi_paired_shells(ev, _cross_convolved_shells(shifted, flat), log_kmu, "m"),
        cfg.tol, cfg.shell_factor, cfg.shell_window,
    )
    value = a_val + b_val - c_val
    err = a_err + b_err + c_err
    return value, err, (a_conv and b_conv and c_conv)


def _phi_paired_shells(ev: Evaluator, shells, log_prefactor: float, reading: str):
    for gammas, logcs in shells:
        val = np.zeros_like(ev.t)
        err = np.zeros_like(ev.t)
        for g, lc in zip(gammas, logcs):
            logphi, logerr, _ = ev.phi_mix(int(g), reading)
            val += np.exp(log_prefactor + lc + logphi)
            err += np.exp(2.0 * (log_prefactor + lc + logerr))
        yield val, err, float(np.abs(val).max())


# ---------------------------------------------------------------------------
# public operations

def _wrap(ev: Evaluator, triple) -> SeriesResult | tuple:
    value, err, converged = triple
    if ev.scalar:
        return SeriesResult(float(value[0]), float(err[0]), converged)
    return value, err, converged


def zero_state_prob(ctx: SeriesContext, t) -> SeriesResult:
    """Probability of an empty system at calendar time t."""
    ev = Evaluator(ctx, t)
    return _wrap(ev, _zero_state_arrays(ev))


def state_prob(ctx: SeriesContext, n: int, s: int, t) -> SeriesResult:
    """Transient probability of n customers with the served one at phase s."""
    ev = Evaluator(ctx, t)
    return _wrap(ev, _state_prob_arrays(ev, n, s))


def queue_length_prob(ctx: SeriesContext, m: int, t) -> SeriesResult:
    """Probability that the residual phase count equals m at time t."""
    if m < 0:
        raise DomainError(f"phase count must be >= 0, got {m}")
    if m == 0:
        return zero_state_prob(ctx, t)
    sp = phase_inverse(m, ctx.qp.k)
    return state_prob(ctx, sp.n, sp.s, t)


def mean_queue_length(ctx: SeriesContext, t) -> SeriesResult:
    """Mean residual phase count at time t (units: phases)."""
    ev = Evaluator(ctx, t)
    return _wrap(ev, _mean_arrays(ev))


def _mean_arrays(ev: Evaluator):
    ctx = ev.ctx
    qp = ctx.qp
    alpha, theta = ctx.tp.alpha, ctx.tp.theta
    logphi1, logerr1, conv1 = ev.phi_int(1, alpha + 1.0, theta**alpha)
    drift = qp.k * (qp.Lambda * qp.mean_batch - qp.mu)
    part1 = drift * np.exp(logphi1)

    def phi(g: int):
        return ev.phi_int(g, alpha * g + 1.0, ctx.beta_const)

    part2, err2, conv2 = _ledger_sum(ev, _c0_ledger(ctx), phi, ctx.cfg.tol)
    value = part1 + ctx.kmu * part2
    err = abs(drift) * np.exp(logerr1) + ctx.kmu * err2
    return value, err, conv1 and conv2


def busy_period_cdf(ctx: SeriesContext, a: int, t) -> SeriesResult:
    """CDF of the calendar busy period started by a batch of a phases."""
    qp = ctx.qp
    if a % qp.k != 0 or not qp.k <= a <= qp.l * qp.k:
        raise DomainError(f"busy start must be a multiple of k in [k, l*k], got {a}")
    ev = Evaluator(ctx, t)
    alpha = ctx.tp.alpha

    def phi(g: int):
        return ev.phi_int(g, alpha * g + 1.0, ctx.beta_const)

    return _wrap(ev, _ledger_sum(ev, _busy_ledger(ctx, a), phi, ctx.cfg.tol))


def _rate_survival_arrays(ev: Evaluator, rate: float):
    """1 + sum_{r>=1} (-rate)^r Phi_int(r, alpha*r + 1; theta^alpha)."""
    alpha, theta = ev.ctx.tp.alpha, ev.ctx.tp.theta
    cfg = ev.ctx.cfg
    lograte = math.log(rate)

    def shell_iter():
        for r in range(1, cfg.r_cap + 1):
            logphi, logerr, _ = ev.phi_int(r, alpha * r + 1.0, theta**alpha)
            term = (-1.0) ** r * np.exp(r * lograte + logphi)
            yield term, np.exp(2.0 * (r * lograte + logerr)), float(np.abs(term).max())

    tail_val, tail_err, converged = _run_shells(
        shell_iter(), cfg.tol, cfg.shell_factor, cfg.shell_window
    )
    return 1.0 + tail_val, tail_err, converged


def _require_l1(ctx: SeriesContext):
    if ctx.qp.l != 1:
        raise DomainError("inter-event laws require the single-arrival queue (l=1)")


def interarrival_survival(ctx: SeriesContext, t) -> SeriesResult:
    """P(inter-arrival time > t) for the tempered single-arrival Erlang queue."""
    _require_l1(ctx)
    ev = Evaluator(ctx, t)
    return _wrap(ev, _rate_survival_arrays(ev, ctx.qp.Lambda))


def interphase_survival(ctx: SeriesContext, t) -> SeriesResult:
    """P(inter-phase time > t): the inter-arrival law at rate k*mu."""
    _require_l1(ctx)
    ev = Evaluator(ctx, t)
    return _wrap(ev, _rate_survival_arrays(ev, ctx.kmu))


def sojourn_survival(ctx: SeriesContext, t) -> SeriesResult:
    """P(sojourn of the phase count in a non-zero state > t): rate lambda + k*mu.

    The sojourn in state 0 is the first-arrival time and follows the
    inter-arrival law instead.
    """
    _require_l1(ctx)
    ev = Evaluator(ctx, t)
    return _wrap(ev, _rate_survival_arrays(ev, ctx.qp.Lambda + ctx.kmu))


def total_probability(ctx: SeriesContext, t, max_customers: int = 60,
                      row_tol: float = 1e-11) -> SeriesResult:
    """p_0 plus all state probabilities, with a geometric tail estimate in n."""
    ev = Evaluator(ctx, t)
    total, err, converged = _zero_state_arrays(ev)
    total, err = total.copy(), err.copy()
    prev_row = None
    tail = None
    for n in range(1, max_customers + 1):
        row = np.zeros_like(ev.t)
        for s in range(1, ctx.qp.k + 1):
            v, e, conv = _state_prob_arrays(ev, n, s)
            row += v
            err += e
            converged = converged and conv
        total += row
        rmax = float(np.abs(row).max())
        if prev_row is not None and 0.0 < prev_row and rmax < row_tol and rmax <= prev_row:
            rho = rmax / prev_row
            tail = rmax * rho / (1.0 - rho) if rho < 0.9 else rmax * 10.0
            break
        if rmax == 0.0 and n > 2:
            tail = 0.0
            break
        prev_row = rmax
    if tail is None:
        converged = False
        tail = prev_row if prev_row else 0.0
    return _wrap(ev, (total, err + tail, converged))


def mean_queue_customers(ctx: SeriesContext, t, max_customers: int = 60) -> SeriesResult:
    """Derived view of the mean: expected customer count sum_n n sum_s p_{n,s}."""
    ev = Evaluator(ctx, t)
    total = np.zeros_like(ev.t)
    err = np.zeros_like(ev.t)
    converged = True
    for n in range(1, max_customers + 1):
        row = np.zeros_like(ev.t)
        for s in range(1, ctx.qp.k + 1):
            v, e, conv = _state_prob_arrays(ev, n, s)
            row += v
            err += n * e
            converged = converged and conv
        total += n * row
        if float(np.abs(row).max()) < 1e-12 and n > 2:
            break
    return _wrap(ev, (total, err, converged))


def pgf(ctx: SeriesContext, u: float, t, max_phase: int = 60) -> SeriesResult:
    """Generating function of the phase count, G(u,t) = sum_m u^m q_m(t)."""
    if not -1.0 <= u <= 1.0:
        raise DomainError(f"|u| must be <= 1, got {u}")
    ev = Evaluator(ctx, t)
    total, err, converged = _zero_state_arrays(ev)
    total, err = total.copy(), err.copy()
    mass = total.copy()
    for m in range(1, max_phase + 1):
        sp = phase_inverse(m, ctx.qp.k)
        v, e, conv = _state_prob_arrays(ev, sp.n, sp.s)
        total += u**m * v
        mass += v
        err += abs(u) ** m * e
        converged = converged and conv
    err = err + np.abs(u) ** (max_phase + 1) * np.clip(1.0 - mass, 0.0, None)
    return _wrap(ev, (total, err, converged))


# ---------------------------------------------------------------------------
# the exposed coefficient ledger (one index tuple at a time)

@dataclass(frozen=True)
class CoefficientSet:
    """Every coefficient of the transient series at one index tuple."""

    a: int
    pi: float
    gamma0: int
    C0: float
    beta0: float
    A: float
    B: float
    C: float
    b: int
    rho: float
    c: int
    delta: float
    betaM: float


def coefficients(ctx: SeriesContext, n: int, s: int, r: int, h: int, w: int,
                 m: tuple[int, ...], m_prime: tuple[int, ...]) -> CoefficientSet:
    """Evaluate the coefficient ledger exactly at one index tuple.

    ``m`` indexes the direct block (batch counts), ``m_prime`` the inner
    zero-ledger factor.  The subtracted cross coefficient C is the direct
    coefficient of the successor state, (n, s+1) below phase k and (n+1, 1)
    at phase k; for s = k the supplied ``m`` is interpreted as a composition
    from the successor's enumeration (sum j m_j - r = n + 1).
    """
    qp = ctx.qp
    if not 1 <= s <= qp.k or h < 1 or min(r, w, n) < 0:
        raise DomainError("invalid coefficient indices")
    if len(m) != qp.l or len(m_prime) != qp.l:
        raise DomainError("batch-count vectors must have length l")
    alpha = ctx.tp.alpha
    k, kmu = qp.k, ctx.kmu
    Lam = qp.Lambda

    def comp_weight(mv):
        return math.exp(_log_comp_weight(qp, mv))

    msum = sum(m)
    a = msum + k * (r + 1) - s + 1
    pi = alpha * (a - 1) + 1.0
    gamma0 = h + w + k * sum(j * mj for j, mj in enumerate(m_prime, start=1))
    C0 = (
        h * Lam**w * comp_weight(m_prime)
        * kmu ** (gamma0 - w - 1) / math.gamma(gamma0 - w + 1) * math.gamma(gamma0)
    )
    beta0 = alpha * (gamma0 - 1) + 1.0
    A = (
        comp_weight(m) * Lam**msum * kmu ** (k * (r + 1) - s)
        / math.gamma(k * (r + 1) - s + 1) * math.gamma(a)
    )
    B = kmu * A * C0
    s_next = s + 1 if s < k else 1
    a_shift = msum + k * (r + 1) - s_next + 1
    A_shift = (
        comp_weight(m) * Lam**msum * kmu ** (k * (r + 1) - s_next)
        / math.gamma(k * (r + 1) - s_next + 1) * math.gamma(a_shift)
    )
    C = kmu * A_shift * C0
    b = a + gamma0
    rho = alpha * (b - 1) + 1.0
    c = a_shift + gamma0
    delta = alpha * (c - 1) + 1.0
    betaM = alpha * gamma0 + 1.0
    return CoefficientSet(a=a, pi=pi, gamma0=gamma0, C0=C0, beta0=beta0, A=A,
                          B=B, C=C, b=b, rho=rho, c=c, delta=delta, betaM=betaM)

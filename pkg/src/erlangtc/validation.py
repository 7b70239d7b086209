"""Machine-checkable validation suites.

Each check returns a :class:`CheckResult` holding the measured quantity, its
tolerance and a verdict, so the command-line ``validate`` command and the
acceptance tests share one implementation.  Reference parameter sets:

* ``P_STAR``: batch rates (0.6, 0.3), k = 2, mu = 1.2, tempering
  (theta, alpha) = (0.5, 0.7) - the two-batch working point;
* ``P_ONE``: single arrivals at rate 0.8 with the same queue and tempering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate
from scipy.special import gammainc, gammaln, kolmogi

from . import analytics, analytics_l1, montecarlo, residuals
from .base_queue import QueueParams, default_cap, phase_inverse, transient_uniformization
from .fractional import (
    FracParams,
    SampledFunction,
    caputo_tempered_derivative,
    caputo_tempered_grid,
    numerical_laplace,
)
from .montecarlo import SimPlan, ks_statistic
from .special import MLArgs, UnconvergedError, ml3
from .subordinators import (
    GammaParams,
    TemperedStableParams,
    gamma_density,
    gamma_inverse_path,
    inverse_gamma_cdf,
    inverse_gamma_density,
    laplace_exponent,
)

P_STAR_QUEUE = QueueParams((0.6, 0.3), k=2, mu=1.2)
P_ONE_QUEUE = QueueParams((0.8,), k=2, mu=1.2)
TEMPERING = TemperedStableParams(theta=0.5, alpha=0.7)


def p_star(reading: str = "a", **cfg_kw) -> analytics.SeriesContext:
    return analytics.SeriesContext(P_STAR_QUEUE, TEMPERING,
                                   analytics.SeriesConfig(**cfg_kw),
                                   theta_power_reading=reading)


def p_one(**cfg_kw) -> analytics.SeriesContext:
    return analytics.SeriesContext(P_ONE_QUEUE, TEMPERING,
                                   analytics.SeriesConfig(**cfg_kw))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "measured": float(self.measured),
            "tolerance": float(self.tolerance),
            "details": _jsonable(self.details),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# 1. degenerate reduction to the untimed queue

def check_degenerate_reduction(times=(0.5, 1.0, 2.0), prob_floor: float = 1e-4,
                               tol: float = 1e-5) -> CheckResult:
    """At theta -> 0, alpha = 1 the series must equal the uniformized queue."""
    qp = P_STAR_QUEUE
    ctx = analytics.SeriesContext(qp, TemperedStableParams(theta=0.0, alpha=1.0))
    cap = default_cap(qp, max(times))
    table = transient_uniformization(qp, list(times), cap, tol=1e-12)
    worst = 0.0
    details = {}
    for ti, t in enumerate(times):
        diff = abs(analytics.zero_state_prob(ctx, t).value - table.probs[ti, 0])
        worst = max(worst, diff)
        mean_uni = float(np.dot(np.arange(cap + 1), table.probs[ti]))
        mean_series = analytics.mean_queue_length(ctx, t).value
        worst = max(worst, abs(mean_uni - mean_series))
        details[f"mean_diff_t={t}"] = abs(mean_uni - mean_series)
        for m in range(1, cap + 1):
            if table.probs[ti, m] < prob_floor:
                continue
            sp = phase_inverse(m, qp.k)
            diff = abs(analytics.state_prob(ctx, sp.n, sp.s, t).value - table.probs[ti, m])
            worst = max(worst, diff)
    return CheckResult("degenerate_reduction", worst <= tol, worst, tol, details)


# ---------------------------------------------------------------------------
# 2. conservation of probability

def check_normalization(ctx=None, times=(0.25, 0.5, 1.0, 2.0),
                        budget: float = 1e-4) -> CheckResult:
    ctx = ctx or p_star()
    worst_dev, worst_budget = 0.0, 0.0
    details = {}
    for t in times:
        tot = analytics.total_probability(ctx, t)
        dev = abs(tot.value - 1.0)
        reported = tot.err
        details[f"t={t}"] = {"total": tot.value, "reported_budget": reported,
                             "converged": tot.converged}
        worst_dev = max(worst_dev, dev)
        worst_budget = max(worst_budget, reported)
        if dev > reported:
            details[f"t={t}"]["budget_violated"] = True
    passed = worst_dev <= worst_budget <= budget
    return CheckResult("normalization", passed, worst_dev, budget,
                       {"max_reported_budget": worst_budget, **details})


# ---------------------------------------------------------------------------
# 3. Monte Carlo agreement with the analytic series

def check_mc_agreement(n_paths: int = 10**5, t: float = 1.0, seed: int = 2024,
                       step: float = 1e-3, prob_floor: float = 1e-2,
                       reading: str = "a") -> CheckResult:
    ctx = p_star(reading)
    plan = SimPlan(qp=ctx.qp, time_change=ctx.tp, horizon=t, n_paths=n_paths,
                   step=step, seed=seed, times=(t,), max_phase=40)
    table, _ = montecarlo.simulate_time_changed(plan)
    half, _ = montecarlo.simulate_time_changed(replace(plan, step=step / 2))

    worst_z, worst_shift = 0.0, 0.0
    details = {}
    for m in range(0, 30):
        p_analytic = analytics.queue_length_prob(ctx, m, t).value
        if p_analytic < prob_floor:
            continue
        est, se = table.at(t, m)
        est2, se2 = half.at(t, m)
        z = abs(est2 - p_analytic) / se2 if se2 > 0 else math.inf
        shift = abs(est - est2) / se if se > 0 else math.inf
        worst_z = max(worst_z, z)
        worst_shift = max(worst_shift, shift)
        details[f"m={m}"] = {"analytic": p_analytic, "mc": est2, "se": se2,
                             "z": z, "halving_shift_sigma": shift}
    passed = worst_z <= 3.0 and worst_shift <= 1.0
    return CheckResult("mc_agreement", passed, worst_z, 3.0,
                       {"worst_halving_shift_sigma": worst_shift, **details})


# ---------------------------------------------------------------------------
# 4. residuals of the governing systems

def check_residuals(ctx=None, times=(0.5, 1.0, 1.5), tol: float = 1e-3) -> CheckResult:
    ctx = ctx or p_star()
    res = residuals.system_residuals(ctx, times)
    worst = max(max(v.values()) for v in res.values())
    details = {name: vals for name, vals in res.items()}
    return CheckResult("system_residuals", worst <= tol, worst, tol, details)


def check_classical_residuals(times=(0.5, 1.0, 1.5), tol: float = 1e-6) -> CheckResult:
    """theta = 0, alpha = 1: the same systems under plain differentiation."""
    ctx = analytics.SeriesContext(P_STAR_QUEUE, TemperedStableParams(0.0, 1.0))
    res = residuals.system_residuals(ctx, times)
    worst = max(max(v.values()) for v in res.values())
    return CheckResult("classical_residuals", worst <= tol, worst, tol,
                       {name: vals for name, vals in res.items()})


# ---------------------------------------------------------------------------
# 5. mean queue length cross-checks

def check_mean_consistency(t: float = 1.0, budget: float = 1e-4,
                           residual_tol: float = 1e-3) -> CheckResult:
    ctx = p_star()
    series = analytics.mean_queue_length(ctx, t)
    by_summation = 0.0
    err = series.err
    for m in range(1, 80):
        q = analytics.queue_length_prob(ctx, m, t)
        by_summation += m * q.value
        err += m * q.err
    diff = abs(series.value - by_summation)
    res = residuals.mean_residual(ctx, (t,))[t]
    passed = diff <= max(budget, err) and diff <= budget and res <= residual_tol
    return CheckResult("mean_consistency", passed, diff, budget,
                       {"series": series.value, "summation": by_summation,
                        "cauchy_residual": res, "combined_err": err})


# ---------------------------------------------------------------------------
# 6. busy period versus simulation

def check_busy_period(n_paths: int = 10**5, seed: int = 77,
                      grid=None) -> CheckResult:
    ctx = p_star()
    a = ctx.qp.k
    plan = SimPlan(qp=ctx.qp, time_change=ctx.tp, horizon=2.0, n_paths=n_paths,
                   seed=seed, times=(2.0,))
    sample = montecarlo.simulate_busy_period(plan, a)
    grid = np.asarray(grid if grid is not None else np.linspace(0.1, 2.0, 39))
    analytic = np.array([analytics.busy_period_cdf(ctx, a, float(t)).value for t in grid])
    empirical = sample.empirical_cdf(grid)
    band = float(kolmogi(0.05)) / math.sqrt(n_paths)
    sup = float(np.max(np.abs(analytic - empirical)))
    passed = sup <= 3.0 * band and sample.censored_fraction < 1e-3
    return CheckResult("busy_period", passed, sup, 3.0 * band,
                       {"censored_fraction": sample.censored_fraction,
                        "uniform_band": band,
                        "monotone": bool(np.all(np.diff(analytic) >= -1e-12))})


# ---------------------------------------------------------------------------
# 7. inter-event laws

def _survival_cdf(fn, ctx):
    def cdf(x):
        x = np.atleast_1d(x)
        out = np.array([1.0 - np.clip(fn(ctx, float(v)).value, 0.0, 1.0) for v in x])
        return out
    return cdf


def check_inter_event(n_samples: int = 10**4, seed: int = 404,
                      level: float = 0.05) -> CheckResult:
    ctx = p_one(r_cap=192)
    plan = SimPlan(qp=ctx.qp, time_change=ctx.tp, horizon=1.0, n_paths=n_samples,
                   seed=seed, times=(1.0,))
    samples = montecarlo.collect_inter_event_times(plan)
    laws = {
        "interarrival": analytics.interarrival_survival,
        "interphase": analytics.interphase_survival,
        "sojourn": analytics.sojourn_survival,
    }
    details = {}
    all_pass = True
    worst = 0.0
    for name, fn in laws.items():
        ks = ks_statistic(samples[name], _survival_cdf(fn, ctx), level)
        rho = _lag1_autocorr(samples[name])
        rho_ok = abs(rho) <= 3.0 / math.sqrt(len(samples[name]))
        details[name] = {"ks": ks.statistic, "critical": ks.critical,
                         "p_value": ks.p_value, "lag1_autocorr": rho,
                         "passed": ks.passed and rho_ok}
        all_pass = all_pass and ks.passed and rho_ok
        worst = max(worst, ks.statistic / ks.critical)

    # classical control: with the identity clock every law is exponential
    ctl_plan = replace(plan, time_change=TemperedStableParams(0.0, 1.0))
    ctl = montecarlo.collect_inter_event_times(ctl_plan)
    rates = {"interarrival": ctx.qp.Lambda, "interphase": ctx.kmu,
             "sojourn": ctx.qp.Lambda + ctx.kmu}
    for name, rate in rates.items():
        ks = ks_statistic(ctl[name], lambda x, r=rate: 1.0 - np.exp(-r * np.asarray(x)),
                          level)
        details[f"classical_{name}"] = {"ks": ks.statistic, "critical": ks.critical,
                                        "passed": ks.passed}
        all_pass = all_pass and ks.passed
        worst = max(worst, ks.statistic / ks.critical)
    return CheckResult("inter_event_laws", all_pass, worst, 1.0, details)


def _lag1_autocorr(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    d = x - x.mean()
    return float(np.dot(d[:-1], d[1:]) / np.dot(d, d))


# ---------------------------------------------------------------------------
# 8. special-function identities

ML_LAPLACE_GRID = (
    # (alpha, beta, gamma, x)
    (0.6, 1.0, 1.0, -2.0),
    (0.6, 1.4, 2.5, -0.5),
    (0.7, 1.0, 2.0, -1.0),
    (0.8, 2.2, 1.0, 0.4),
)


def check_ml_laplace_identity(tol: float = 1e-8) -> CheckResult:
    """Quadrature of t^{b-1} E^g_{a,b}(x t^a) e^{-st} against its transform."""
    worst = 0.0
    details = {}
    for alpha, beta, gamma, x in ML_LAPLACE_GRID:
        s = max(1.8, abs(x) ** (1.0 / alpha) + 0.8)
        exact = s ** (alpha * gamma - beta) / (s**alpha - x) ** gamma

        def f(t):
            if t == 0.0:
                return 0.0 if beta > 1 else math.exp(-float(gammaln(beta)))
            e = ml3(MLArgs(alpha, beta, gamma, x * t**alpha), 1e-13)
            return t ** (beta - 1.0) * e.value * math.exp(-s * t)

        T = 50.0 / (s - max(0.0, x) ** (1.0 / alpha))
        val, quad_err = integrate.quad(f, 0.0, T, limit=400, epsabs=1e-12, epsrel=1e-12)
        tail = abs(f(T)) * 10.0 / (s - max(0.0, x) ** (1.0 / alpha))
        diff = abs(val - exact)
        worst = max(worst, diff)
        details[f"(a={alpha},b={beta},g={gamma},x={x})"] = {
            "quad": val, "exact": exact, "diff": diff,
            "quad_err": quad_err, "tail_bound": tail,
        }
    return CheckResult("ml_laplace_identity", worst <= tol, worst, tol, details)


def check_caputo_laplace_identity(theta: float = 0.5, alpha: float = 0.7,
                                  c: float = 0.8, s_values=(1.0, 2.0),
                                  tol: float = 1e-4) -> CheckResult:
    """Transform of the Caputo tempered derivative of e^{-ct} against
    Psi(s)/(s+c) - Psi(s)/s."""
    grid = np.linspace(0.0, 40.0, 16001)
    f = SampledFunction(grid, np.exp(-c * grid))
    p = FracParams(theta=theta, alpha=alpha)
    deriv = caputo_tempered_grid(f, p)
    deriv[0] = deriv[1]  # the t=0 value is irrelevant at the grid scale
    g = SampledFunction(grid, deriv)
    psi = lambda s: laplace_exponent(TemperedStableParams(theta, alpha), s)
    worst = 0.0
    details = {}
    for s in s_values:
        num = numerical_laplace(g, s, tail_bound=1e-8)
        exact = psi(s) / (s + c) - psi(s) / s
        diff = abs(num.value - exact)
        worst = max(worst, diff)
        details[f"s={s}"] = {"numeric": num.value, "exact": exact, "diff": diff}
    return CheckResult("caputo_laplace_identity", worst <= tol, worst, tol, details)


def check_caputo_power_rule(tol: float = 1e-6) -> CheckResult:
    """Classical limit theta=0: Caputo derivative of t at alpha=1/2, t=1."""
    grid = np.linspace(0.0, 1.25, 2001)
    f = SampledFunction(grid, grid.copy())
    p = FracParams(theta=0.0, alpha=0.5)
    got = caputo_tempered_derivative(f, p, 1.0).value
    exact = 1.0 / math.gamma(1.5)
    diff = abs(got - exact)
    return CheckResult("caputo_power_rule", diff <= tol, diff, tol,
                       {"got": got, "exact": exact})


# ---------------------------------------------------------------------------
# 9. gamma-clock suite

def check_gamma_suite(seed: int = 909, n_paths: int = 10**5) -> CheckResult:
    details = {}
    ok = True

    # density normalization
    gp = GammaParams(a=2.0, b=3.0)
    val, quad_err = integrate.quad(lambda x: gamma_density(gp, x, 0.7), 0.0, np.inf)
    details["density_normalization"] = {"integral": val, "quad_err": quad_err}
    ok = ok and abs(val - 1.0) <= 1e-8

    # shift-operator identity d/dx h = -a [h(x,t) - h(x, t - 1/b)]
    worst = 0.0
    gp2 = GammaParams(a=1.3, b=2.0)
    hx = 1e-6
    for x in np.linspace(0.4, 2.4, 9):
        for t in np.linspace(1.0 / gp2.b + 0.4, 3.0, 7):
            lhs = (gamma_density(gp2, x + hx, t) - gamma_density(gp2, x - hx, t)) / (2 * hx)
            rhs = -gp2.a * (gamma_density(gp2, x, t) - gamma_density(gp2, x, t - 1.0 / gp2.b))
            worst = max(worst, abs(lhs - rhs))
    details["shift_identity_worst"] = worst
    ok = ok and worst <= 1e-4

    # spectral density against the exact first-passage law, a*x < 1 region
    gp1 = GammaParams(a=1.0, b=1.0)
    h = 1e-6
    worst_dens = 0.0
    for x in np.linspace(0.05, 0.95, 10):
        spectral = inverse_gamma_density(gp1, float(x), 1.0)
        exact = (inverse_gamma_cdf(gp1, x + h, 1.0) - inverse_gamma_cdf(gp1, x - h, 1.0)) / (2 * h)
        worst_dens = max(worst_dens, abs(spectral - exact))
    details["spectral_vs_first_passage_worst"] = worst_dens
    ok = ok and worst_dens <= 1e-6

    # the spectral integral is divergent beyond a*x = 1: a reproducible,
    # documented restriction (the printed constant fixes b*t = 1 as well)
    try:
        inverse_gamma_density(gp1, 1.5, 1.0)
        details["divergence_flagged"] = False
        ok = False
    except UnconvergedError:
        details["divergence_flagged"] = True

    # combined normalization: spectral mass on (0,1) plus exact tail mass
    mass_low, _ = integrate.quad(lambda x: inverse_gamma_density(gp1, x, 1.0),
                                 1e-9, 1.0 - 1e-9, limit=200)
    tail_mass = 1.0 - inverse_gamma_cdf(gp1, 1.0, 1.0)
    details["normalization"] = {"spectral_below_1": mass_low,
                                "exact_tail_above_1": tail_mass,
                                "total": mass_low + tail_mass}
    ok = ok and abs(mass_low + tail_mass - 1.0) <= 1e-4

    # Kolmogorov distance between simulated first passages and the exact law
    rng_seed = seed
    samples = np.empty(n_paths)
    for i in range(n_paths):
        rng = np.random.default_rng(np.random.SeedSequence((rng_seed, i)))
        path = gamma_inverse_path(gp1, horizon=1.0, step=1e-3, rng=rng)
        samples[i] = path(1.0)
    ks = ks_statistic(samples + 1e-3, lambda x: inverse_gamma_cdf(gp1, x, 1.0))
    # one-step discretization bias: the path value lies one step below the
    # true passage level, so allow the band plus the step in Kolmogorov terms
    band = 3.0 * float(kolmogi(0.05)) / math.sqrt(n_paths)
    dens_bound = 0.55  # max density of L(1) at (a,b)=(1,1)
    tol = band + dens_bound * 1e-3
    details["first_passage_ks"] = {"statistic": ks.statistic, "band": band,
                                   "tolerance": tol}
    ok = ok and ks.statistic <= tol
    return CheckResult("gamma_suite", ok, ks.statistic, tol, details)


# ---------------------------------------------------------------------------
# 10. the tempering-power ambiguity

def check_reading_ambiguity(n_paths: int = 2 * 10**4, seed: int = 11) -> CheckResult:
    """Exactly one reading of the tempering power conserves probability."""
    outcomes = {}
    for reading in ("a", "alpha"):
        ctx = p_star(reading)
        tot = analytics.total_probability(ctx, 1.0)
        ok_norm = abs(tot.value - 1.0) <= max(tot.err, 1e-4) and tot.err <= 1e-4
        mc = check_mc_agreement(n_paths=n_paths, seed=seed, reading=reading,
                                prob_floor=5e-2)
        outcomes[reading] = {
            "total_probability": tot.value,
            "normalization_ok": ok_norm,
            "mc_worst_z": mc.measured,
            "mc_ok": mc.passed,
        }
    a_ok = outcomes["a"]["normalization_ok"] and outcomes["a"]["mc_ok"]
    alpha_ok = outcomes["alpha"]["normalization_ok"] and outcomes["alpha"]["mc_ok"]
    passed = a_ok and not alpha_ok
    return CheckResult("theta_power_reading", passed,
                       outcomes["alpha"]["total_probability"], 1.0,
                       {"selected": "a" if passed else "undetermined", **outcomes})


# ---------------------------------------------------------------------------
# l = 1 cross-validation of the two code paths

def check_l1_crosscheck(times=(0.3, 0.8, 1.4), tol: float = 1e-10,
                        seed: int = 7) -> CheckResult:
    ctx = p_one()
    worst = 0.0
    for t in times:
        worst = max(worst, abs(analytics.zero_state_prob(ctx, t).value
                               - analytics_l1.zero_state_prob_l1(ctx, t)))
        for (n, s) in ((1, 1), (1, 2), (2, 2), (3, 1)):
            worst = max(worst, abs(analytics.state_prob(ctx, n, s, t).value
                                   - analytics_l1.state_prob_l1(ctx, n, s, t)))
    rng = np.random.default_rng(seed)
    coeff_worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 5))
        s = int(rng.integers(1, ctx.qp.k + 1))
        r = int(rng.integers(0, 6))
        h = int(rng.integers(1, 7))
        w = int(rng.integers(0, 6))
        direct = analytics_l1.l1_coefficients(ctx, r, h, w, n, s)
        general = analytics.coefficients(
            ctx, n, s, r, h, w,
            m=(n + r,) if s < ctx.qp.k else (n + 1 + r,),
            m_prime=(w,),
        )
        pairs = [
            (direct["delta0"], general.gamma0), (direct["Z0"], general.C0),
            (direct["psi0"], general.beta0), (direct["d"], general.a),
            (direct["D"], general.A), (direct["zeta"], general.pi),
            (direct["F"], general.B), (direct["f"], general.b),
            (direct["eta_exp"], general.rho), (direct["Z"], general.C),
            (direct["z"], general.c), (direct["alpha_exp"], general.delta),
            (direct["psiM"], general.betaM),
        ]
        for d_val, g_val in pairs:
            denom = max(1.0, abs(float(d_val)))
            coeff_worst = max(coeff_worst, abs(float(d_val) - float(g_val)) / denom)
    passed = worst <= tol and coeff_worst <= 1e-12
    return CheckResult("l1_crosscheck", passed, worst, tol,
                       {"coefficient_worst_rel": coeff_worst})


# ---------------------------------------------------------------------------

def run_all(n_paths_small: int = 10**4, n_paths_full: int = 10**5,
            seed: int = 1234) -> dict:
    """Every suite at acceptance scale; returns a JSON-ready report."""
    checks = [
        check_degenerate_reduction(),
        check_normalization(),
        check_mc_agreement(n_paths=n_paths_full, seed=seed),
        check_residuals(),
        check_classical_residuals(),
        check_mean_consistency(),
        check_busy_period(n_paths=n_paths_full, seed=seed + 1),
        check_inter_event(n_samples=n_paths_small, seed=seed + 2),
        check_ml_laplace_identity(),
        check_caputo_laplace_identity(),
        check_caputo_power_rule(),
        check_gamma_suite(seed=seed + 3, n_paths=n_paths_full),
        check_reading_ambiguity(seed=seed + 4),
        check_l1_crosscheck(),
    ]
    return {
        "all_passed": all(c.passed for c in checks),
        "checks": [c.as_dict() for c in checks],
    }

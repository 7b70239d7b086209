"""Trajectory-level simulation of the time-changed queues.

The composition Q(Y(t)) is simulated by drawing the inverse-subordinator path
first (the clock is independent of the queue), reading off the operational
times Y(t_1), .., Y(t_r), then running the exact event simulation of the base
queue out to Y(max t).  Busy periods and inter-event times avoid the path
discretization entirely: an operational duration tau is converted to calendar
time by one draw of the subordinator D(tau), exact by the first-passage
duality {B <= t} = {Y(t) >= tau} = {D(tau) <= t}.

Every path owns the RNG stream keyed (seed, path index) - results are
bit-identical for any scheduling or worker count because per-path counts are
integers and sums of integers commute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import kolmogi, kolmogorov

from .base_queue import QueueParams, simulate_gillespie
from .special import DomainError
from .subordinators import (
    GammaParams,
    TemperedStableParams,
    gamma_inverse_path,
    inverse_path,
    sample_tempered_stable_increment,
)

TimeChange = TemperedStableParams | GammaParams | None


@dataclass(frozen=True)
class SimPlan:
    """Everything one simulation run depends on, seed included."""

    qp: QueueParams
    time_change: TimeChange
    horizon: float
    n_paths: int
    step: float = 1e-3
    seed: int = 0
    times: tuple[float, ...] = ()
    max_phase: int = 40
    busy_start: int | None = None
    busy_step_cap: int = 2_000_000

    def __post_init__(self):
        if self.n_paths < 1:
            raise DomainError("n_paths must be >= 1")
        if self.horizon <= 0 or self.step <= 0:
            raise DomainError("horizon and step must be positive")
        if any(t < 0 or t > self.horizon for t in self.times):
            raise DomainError("target times must lie in [0, horizon]")


@dataclass(frozen=True)
class EstimateTable:
    """Monte Carlo state-probability estimates with binomial standard errors."""

    times: np.ndarray
    states: np.ndarray
    probs: np.ndarray
    std_err: np.ndarray
    n_paths: int
    kind: str = "montecarlo"
    diagnostics: dict = field(default_factory=dict)

    def at(self, t: float, m: int) -> tuple[float, float]:
        ti = int(np.argmin(np.abs(self.times - t)))
        if not np.isclose(self.times[ti], t):
            raise DomainError(f"t={t} not in table")
        return float(self.probs[ti, m]), float(self.std_err[ti, m])


def _path_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed,) + key))


def _draw_operational_times(plan: SimPlan, times: np.ndarray,
                            rng: np.random.Generator) -> np.ndarray:
    tc = plan.time_change
    if tc is None:
        return times
    if isinstance(tc, TemperedStableParams):
        path = inverse_path(tc, plan.horizon, plan.step, rng)
    else:
        path = gamma_inverse_path(tc, plan.horizon, plan.step, rng)
    return np.atleast_1d(path(times))


def simulate_time_changed(plan: SimPlan) -> tuple[EstimateTable, np.ndarray]:
    """Estimate state probabilities of the time-changed queue at target times.

    Returns the estimate table and the raw (n_paths, n_times) matrix of
    sampled phase counts (counts above ``max_phase`` are clipped into the
    last, overflow, column of the table but kept raw in the matrix).
    """
    if not plan.times:
        raise DomainError("plan.times must list at least one target time")
    times = np.asarray(plan.times, dtype=float)
    states = np.arange(plan.max_phase + 1)
    counts = np.zeros((len(times), plan.max_phase + 2), dtype=np.int64)
    raw = np.zeros((plan.n_paths, len(times)), dtype=np.int32)
    regenerated = 0

    for i in range(plan.n_paths):
        rng = _path_rng(plan.seed, 0, i)
        ys = _draw_operational_times(plan, times, rng)
        span = float(ys.max())
        traj = simulate_gillespie(plan.qp, max(span, plan.step) * (1.0 + 1e-9), rng)
        while traj.horizon < span:  # defensive; spans are known up front
            regenerated += 1
            traj = simulate_gillespie(plan.qp, 2.0 * traj.horizon, rng)
        phases = np.asarray(traj.state_at(ys), dtype=np.int64)
        raw[i] = phases
        clipped = np.minimum(phases, plan.max_phase + 1)
        counts[np.arange(len(times)), clipped] += 1

    probs = counts[:, : plan.max_phase + 1] / plan.n_paths
    std_err = np.sqrt(probs * (1.0 - probs) / plan.n_paths)
    table = EstimateTable(
        times=times, states=states, probs=probs, std_err=std_err,
        n_paths=plan.n_paths,
        diagnostics={"regenerated": regenerated,
                     "overflow": counts[:, -1] / plan.n_paths},
    )
    return table, raw


def _walk_to_absorption(qp: QueueParams, start: int, cap: int,
                        rng: np.random.Generator) -> tuple[int, bool]:
    """Steps of the embedded jump chain until the phase count hits 0.

    Down-moves are single phases, so the first passage at 0 is an exact hit;
    returns (step count, censored at cap).
    """
    total_rate = qp.Lambda + qp.k * qp.mu
    p_down = qp.k * qp.mu / total_rate
    cum_up = p_down + np.cumsum(qp.lambdas) / total_rate
    jumps = np.concatenate(([-1], np.arange(1, qp.l + 1) * qp.k))
    edges = np.concatenate(([p_down], cum_up))

    taken = 0
    position = start
    block = 4096
    while taken < cap:
        u = rng.uniform(size=min(block, cap - taken))
        steps = jumps[np.searchsorted(edges, u, side="right").clip(max=qp.l)]
        walk = position + np.cumsum(steps)
        hit = np.nonzero(walk == 0)[0]
        if len(hit):
            return taken + int(hit[0]) + 1, False
        taken += len(u)
        position = int(walk[-1])
    return cap, True


def _operational_to_calendar(tc: TimeChange, tau: float,
                             rng: np.random.Generator) -> float:
    if tc is None:
        return tau
    if isinstance(tc, TemperedStableParams):
        return sample_tempered_stable_increment(tc, tau, rng)
    return float(rng.gamma(tc.a * tau) / tc.b)


@dataclass(frozen=True)
class BusyPeriodSample:
    """Calendar busy-period samples plus censoring diagnostics."""

    samples: np.ndarray  # calendar durations of non-censored paths
    n_paths: int
    censored: int

    @property
    def censored_fraction(self) -> float:
        return self.censored / self.n_paths

    def empirical_cdf(self, t) -> np.ndarray:
        """Censored paths count as exceeding every finite time."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        sorted_samples = np.sort(self.samples)
        return np.searchsorted(sorted_samples, t, side="right") / self.n_paths


def simulate_busy_period(plan: SimPlan, a: int) -> BusyPeriodSample:
    """Sample the calendar busy period started by a batch of a phases.

    The absorbing phase-count walk is simulated in operational time (holding
    times are exponential at the total rate, so the absorption time is a
    Gamma(steps) variate) and converted to calendar time by one subordinator
    increment draw, which is exact and free of path-discretization bias.
    """
    qp = plan.qp
    if a % qp.k != 0 or not qp.k <= a <= qp.l * qp.k:
        raise DomainError(f"busy start must be one of k..l*k multiples of k, got {a}")
    total_rate = qp.Lambda + qp.k * qp.mu
    out = np.empty(plan.n_paths)
    censored = 0
    for i in range(plan.n_paths):
        rng = _path_rng(plan.seed, 1, i)
        steps, hit_cap = _walk_to_absorption(qp, a, plan.busy_step_cap, rng)
        if hit_cap:
            censored += 1
            out[i] = np.nan
            continue
        tau = rng.gamma(steps) / total_rate
        out[i] = _operational_to_calendar(plan.time_change, tau, rng)
    return BusyPeriodSample(samples=out[~np.isnan(out)], n_paths=plan.n_paths,
                            censored=censored)


def collect_inter_event_times(plan: SimPlan) -> dict[str, np.ndarray]:
    """Calendar inter-arrival, inter-phase and sojourn samples (l = 1 queues).

    Each operational duration is exponential (rates lambda, k*mu and
    lambda + k*mu respectively); its calendar image is one exact subordinator
    increment D(E).  Samples within a category are iid by construction, which
    the lag-1 autocorrelation check exercises.
    """
    qp = plan.qp
    if qp.l != 1:
        raise DomainError("inter-event collection requires the single-arrival queue")
    rates = {
        "interarrival": qp.Lambda,
        "interphase": qp.k * qp.mu,
        "sojourn": qp.Lambda + qp.k * qp.mu,
    }
    out = {}
    for cat_idx, (name, rate) in enumerate(rates.items()):
        samples = np.empty(plan.n_paths)
        for i in range(plan.n_paths):
            rng = _path_rng(plan.seed, 2 + cat_idx, i)
            op = rng.exponential(1.0 / rate)
            samples[i] = _operational_to_calendar(plan.time_change, op, rng)
        out[name] = samples
    return out


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float
    critical: float
    level: float
    n: int
    passed: bool


def ks_statistic(samples: np.ndarray, cdf, level: float = 0.05) -> KSResult:
    """One-sample Kolmogorov-Smirnov test against a callable CDF.

    Uses the asymptotic critical value c(level)/sqrt(n); the p-value is the
    asymptotic Kolmogorov survival function at sqrt(n) * D_n.
    """
    samples = np.sort(np.asarray(samples, dtype=float))
    n = len(samples)
    if n == 0:
        raise DomainError("need at least one sample")
    F = np.asarray(cdf(samples), dtype=float)
    if np.any(np.diff(F) < -1e-12):
        raise DomainError("cdf must be monotone on the sample range")
    i = np.arange(1, n + 1)
    d_plus = float(np.max(i / n - F))
    d_minus = float(np.max(F - (i - 1) / n))
    d = max(d_plus, d_minus)
    critical = float(kolmogi(level)) / math.sqrt(n)
    return KSResult(
        statistic=d,
        p_value=float(kolmogorov(math.sqrt(n) * d)),
        critical=critical,
        level=level,
        n=n,
        passed=d < critical,
    )

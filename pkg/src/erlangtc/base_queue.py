"""The Erlang queue with batch arrivals, before any time change.

Customers arrive in batches: a batch of size m joins at rate lambda_m for
m = 1..l.  Service is Erlang with k phases, each exponential at rate k*mu,
and the phase of the customer in service counts the *remaining* phases, so
every service event lowers the residual phase count L = k(n-1)+s by one.
A batch of i customers raises it by i*k; a batch entering an empty system
starts at (i, k).

The module provides the state-phase/phase-count bijection, the generator on
phase counts with an explicit overflow tracker, a uniformization transient
solver (the main oracle for the analytic series), and an exact-event
simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .special import DomainError


@dataclass(frozen=True)
class QueueParams:
    """Batch rates lambda_1..lambda_l, Erlang shape k and service rate mu."""

    lambdas: tuple[float, ...]
    k: int
    mu: float

    def __post_init__(self):
        lambdas = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lambdas)
        if len(lambdas) == 0 or any(x < 0 for x in lambdas) or lambdas[-1] <= 0:
            raise DomainError("need lambda_m >= 0 with lambda_l > 0")
        if self.k < 1 or int(self.k) != self.k:
            raise DomainError(f"k must be a positive integer, got {self.k}")
        if self.mu <= 0:
            raise DomainError(f"mu must be positive, got {self.mu}")

    @property
    def l(self) -> int:
        return len(self.lambdas)

    @property
    def Lambda(self) -> float:
        return float(sum(self.lambdas))

    @property
    def c(self) -> np.ndarray:
        """Batch-size distribution c_m = lambda_m / Lambda."""
        return np.asarray(self.lambdas) / self.Lambda

    @property
    def mean_batch(self) -> float:
        return float(np.dot(np.arange(1, self.l + 1), self.c))


@dataclass(frozen=True)
class StatePhase:
    """(n, s): n customers with the served customer at remaining phase s.

    The empty system is (0, 0); otherwise n >= 1 and 1 <= s <= k.
    """

    n: int
    s: int

    def validate(self, k: int) -> "StatePhase":
        ok = (self.n == 0 and self.s == 0) or (self.n >= 1 and 1 <= self.s <= k)
        if not ok:
            raise DomainError(f"({self.n},{self.s}) is not a state for k={k}")
        return self


def phase_index(sp: StatePhase, k: int) -> int:
    """Bijection (0,0) -> 0, (n,s) -> k(n-1)+s onto the residual phase count."""
    sp.validate(k)
    if sp.n == 0:
        return 0
    return k * (sp.n - 1) + sp.s


def phase_inverse(m: int, k: int) -> StatePhase:
    """Inverse of phase_index: smallest positive s with s = m mod k."""
    if m < 0:
        raise DomainError(f"phase index must be >= 0, got {m}")
    if m == 0:
        return StatePhase(0, 0)
    s = (m - 1) % k + 1
    return StatePhase((m - s) // k + 1, s)


def default_cap(params: QueueParams, t_max: float) -> int:
    """Smallest multiple of k*l exceeding 40*(Lambda*t*l*k + k)."""
    unit = params.k * params.l
    need = 40.0 * (params.Lambda * t_max * params.l * params.k + params.k)
    return unit * (int(need // unit) + 1)


def generator(params: QueueParams, cap: int) -> np.ndarray:
    """Rate matrix on phase counts 0..cap plus one absorbing overflow row.

    From count j: rate lambda_i to j + i*k (redirected to the overflow state
    when that exceeds cap, so lost mass stays measurable), and rate k*mu to
    j-1 for j >= 1.  Rows sum to zero.
    """
    if cap < params.l * params.k:
        raise DomainError(f"cap={cap} below one batch of phases {params.l * params.k}")
    size = cap + 2  # states 0..cap plus overflow
    Q = np.zeros((size, size))
    kmu = params.k * params.mu
    for j in range(cap + 1):
        for i, lam in enumerate(params.lambdas, start=1):
            if lam == 0.0:
                continue
            dest = j + i * params.k
            Q[j, dest if dest <= cap else cap + 1] += lam
        if j >= 1:
            Q[j, j - 1] += kmu
        Q[j, j] = -Q[j].sum()
    return Q


@dataclass(frozen=True)
class ProbabilityTable:
    """Time grid x phase-count grid of probabilities with per-entry error."""

    times: np.ndarray
    states: np.ndarray
    probs: np.ndarray  # shape (len(times), len(states))
    err: np.ndarray
    kind: str
    overflow: np.ndarray = field(default=None)  # lost mass per time, if tracked

    def at(self, t: float, m: int) -> float:
        ti = int(np.argmin(np.abs(self.times - t)))
        if not np.isclose(self.times[ti], t):
            raise DomainError(f"t={t} not in table")
        return float(self.probs[ti, m])


def transient_uniformization(params: QueueParams, t: float | np.ndarray,
                             cap: int, tol: float = 1e-12) -> ProbabilityTable:
    """Transient distribution from the empty state by uniformization.

    The Poisson tail is cut at tol/2 and the overflow mass is reported
    separately, so the total unaccounted probability is at most
    tol/2 + overflow.
    """
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < 0):
        raise DomainError("t must be >= 0")
    Q = generator(params, cap)
    rate = float(np.max(-np.diag(Q)))
    P = np.eye(Q.shape[0]) + Q / rate
    qt_max = rate * float(times.max())
    n_terms = _poisson_terms(qt_max, tol / 2.0)

    out = np.zeros((len(times), Q.shape[0]))
    v = np.zeros(Q.shape[0])
    v[0] = 1.0
    log_qt = np.log(rate * times, out=np.full_like(times, -np.inf), where=times > 0)
    for n in range(n_terms + 1):
        logw = -rate * times + n * log_qt - gammaln(n + 1)
        if n == 0:
            logw = np.where(times == 0.0, 0.0, logw)
        out += np.exp(logw)[:, None] * v[None, :]
        v = v @ P
    overflow = out[:, -1].copy()
    probs = out[:, :-1]
    err = np.full_like(probs, tol / 2.0) + overflow[:, None]
    return ProbabilityTable(times=times, states=np.arange(cap + 1), probs=probs,
                            err=err, kind="uniformization", overflow=overflow)


def _poisson_terms(qt: float, tail: float) -> int:
    if qt == 0.0:
        return 0
    n = int(qt)
    log_pmf = -qt + n * math.log(qt) - float(gammaln(n + 1))
    # walk right until cumulative tail below target (crude but safe bound:
    # pmf decays at least geometrically with ratio qt/(n+1) once n > qt)
    acc = 0.0
    while True:
        n += 1
        log_pmf += math.log(qt) - math.log(n)
        pmf = math.exp(log_pmf)
        ratio = qt / (n + 1)
        if ratio < 1.0 and pmf / (1.0 - ratio) < tail:
            return n
        acc += pmf
        if n > 1000 + 100 * qt:
            raise RuntimeError("Poisson tail search failed")


@dataclass(frozen=True)
class Trajectory:
    """Exact event path: phase count counts[i] holds on [times[i], times[i+1])."""

    times: np.ndarray
    counts: np.ndarray

    def state_at(self, y) -> np.ndarray | int:
        y = np.asarray(y)
        idx = np.searchsorted(self.times, y, side="right") - 1
        out = self.counts[idx]
        return int(out) if out.ndim == 0 else out

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


def simulate_gillespie(params: QueueParams, horizon: float,
                       rng: np.random.Generator) -> Trajectory:
    """Statistically exact sample path of the phase-count process on [0, horizon]."""
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    kmu = params.k * params.mu
    lam = params.Lambda
    c = params.c
    batches = np.arange(1, params.l + 1) * params.k

    times = [0.0]
    counts = [0]
    t_now, j = 0.0, 0
    while True:
        rate = lam + (kmu if j >= 1 else 0.0)
        t_now += rng.exponential(1.0 / rate)
        if t_now >= horizon:
            break
        if j >= 1 and rng.uniform() < kmu / rate:
            j -= 1
        else:
            j += int(batches[rng.choice(params.l, p=c)]) if params.l > 1 else int(batches[0])
        times.append(t_now)
        counts.append(j)
    times.append(horizon)
    counts.append(j)  # sentinel so state_at(horizon) works
    return Trajectory(times=np.asarray(times), counts=np.asarray(counts))

"""Three-parameter Mittag-Leffler evaluation with certified truncation error.

The three-parameter (Prabhakar) function

    E^gamma_{alpha,beta}(x) = sum_{j>=0} x^j Gamma(j+gamma)
                              / (j! Gamma(alpha*j+beta) Gamma(gamma))

is entire in x for alpha, beta, gamma > 0, so direct summation with a term
ratio test is valid.  Every coefficient is assembled in log space through
``log_gamma`` so that large indices never overflow; the tail after truncation
is bounded by geometric majorization, which is rigorous because the term
ratio

    |a_{j+1}/a_j| = |x| * (j+gamma)/(j+1) * Gamma(alpha*j+beta)/Gamma(alpha*(j+1)+beta)

is the product of a factor bounded by max(1, (J+gamma+1)/(J+2)) and a factor
that is decreasing in j (log-convexity of Gamma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

TERM_CAP = 10_000


class DomainError(ValueError):
    """Parameter outside the supported domain."""


class UnconvergedError(RuntimeError):
    """A computation did not reach its tolerance within its caps."""


@dataclass(frozen=True)
class MLArgs:
    """Arguments of the three-parameter Mittag-Leffler function."""

    alpha: float
    beta: float
    gamma: float
    x: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0 and self.gamma > 0):
            raise DomainError(
                f"need alpha, beta, gamma > 0, got ({self.alpha}, {self.beta}, {self.gamma})"
            )


@dataclass(frozen=True)
class EvalResult:
    """Value plus a truncation-error certificate.

    ``abs_error_bound`` is a valid bound on the truncation error whenever
    ``converged`` is set; otherwise the value is a partial sum and the bound
    is only the magnitude of the first dropped term.
    """

    value: float
    abs_error_bound: float
    terms_used: int
    converged: bool = True


def log_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0."""
    if x <= 0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return float(gammaln(x))


def _log_term_magnitudes(alpha: float, beta: float, gamma: float,
                         absx: float, js: np.ndarray) -> np.ndarray:
    # log |a_j| with a_j = x^j Gamma(j+gamma) / (j! Gamma(alpha j+beta) Gamma(gamma))
    with np.errstate(divide="ignore"):
        logx = np.log(absx) if absx > 0 else -np.inf
    return (
        js * logx
        + gammaln(js + gamma)
        - gammaln(js + 1.0)
        - gammaln(alpha * js + beta)
        - gammaln(gamma)
    )


def _tail_ratio_bound(alpha: float, beta: float, gamma: float,
                      absx: float, J: int) -> float:
    # sup over j >= J+1 of |a_{j+1}/a_j|
    poly = max(1.0, (J + 1 + gamma) / (J + 2.0))
    gam = math.exp(gammaln(alpha * (J + 1) + beta) - gammaln(alpha * (J + 2) + beta))
    return absx * poly * gam


def ml3(args: MLArgs, tol: float) -> EvalResult:
    """Evaluate E^gamma_{alpha,beta}(x) by direct summation.

    Terms are summed until the absolute term drops below
    tol * max(1, |partial sum|) and the term ratio is below 1; the tail is
    then bounded geometrically.  Exceeding the 10,000-term cap yields an
    unconverged result rather than a silently wrong value.
    """
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    a, b, g, x = args.alpha, args.beta, args.gamma, args.x
    if x == 0.0:
        return EvalResult(math.exp(-gammaln(b)), 0.0, 1)

    absx = abs(x)
    sign = 1.0 if x > 0 else -1.0
    total = 0.0
    block = 32
    j0 = 0
    while j0 <= TERM_CAP:
        js = np.arange(j0, min(j0 + block, TERM_CAP + 1), dtype=float)
        logmag = _log_term_magnitudes(a, b, g, absx, js)
        terms = np.exp(logmag) * sign ** (js.astype(int) % 2)
        csum = total + np.cumsum(terms)
        mags = np.abs(terms)
        for i in range(len(js)):
            J = int(js[i])
            if mags[i] < tol * max(1.0, abs(csum[i])) and J >= 1:
                rho = _tail_ratio_bound(a, b, g, absx, J)
                if rho < 1.0:
                    next_mag = math.exp(
                        _log_term_magnitudes(a, b, g, absx, np.array([J + 1.0]))[0]
                    )
                    tail = next_mag / (1.0 - rho)
                    if tail <= tol * max(1.0, abs(csum[i])) or tail <= tol:
                        return EvalResult(float(csum[i]), float(tail), J + 1)
        total = float(csum[-1])
        j0 += block

    last = math.exp(_log_term_magnitudes(a, b, g, absx, np.array([float(TERM_CAP)]))[0])
    return EvalResult(total, last, TERM_CAP + 1, converged=False)


def ml2(alpha: float, beta: float, x: float, tol: float) -> EvalResult:
    """Two-parameter Mittag-Leffler function E_{alpha,beta}(x) (gamma = 1)."""
    return ml3(MLArgs(alpha, beta, 1.0, x), tol)


def ml3_beta_grid(alpha: float, betas: np.ndarray, gamma: float, x: float,
                  tol: float) -> tuple[np.ndarray, np.ndarray]:
    """E^gamma_{alpha, betas[i]}(x) for a vector of beta offsets.

    Internal workhorse for the tempering sums of the transient series, where
    only the second parameter varies across a sum.  Returns (values, error
    bounds); raises UnconvergedError at the shared term cap.
    """
    betas = np.asarray(betas, dtype=float)
    if np.any(betas <= 0) or alpha <= 0 or gamma <= 0 or tol <= 0:
        raise DomainError("ml3_beta_grid requires positive parameters")
    if x == 0.0:
        vals = np.exp(-gammaln(betas))
        return vals, np.zeros_like(vals)

    absx, sign = abs(x), (1.0 if x > 0 else -1.0)
    values = np.zeros_like(betas)
    J = 0
    block = 48
    logargs_const = -gammaln(gamma)
    while J <= TERM_CAP:
        js = np.arange(J, min(J + block, TERM_CAP + 1), dtype=float)
        with np.errstate(divide="ignore"):
            logx = np.log(absx)
        logmag = (
            js[:, None] * logx
            + gammaln(js[:, None] + gamma)
            - gammaln(js[:, None] + 1.0)
            - gammaln(alpha * js[:, None] + betas[None, :])
            + logargs_const
        )
        terms = np.exp(logmag) * (sign ** (js.astype(int) % 2))[:, None]
        values += terms.sum(axis=0)
        J = int(js[-1]) + 1
        maxmag = float(np.abs(terms[-1]).max())
        if maxmag < tol * max(1.0, float(np.abs(values).max())):
            bmin = float(betas.min())
            rho = _tail_ratio_bound(alpha, bmin, gamma, absx, J - 1)
            if rho < 1.0:
                nxt = np.exp(
                    J * logx + gammaln(J + gamma) - gammaln(J + 1.0)
                    - gammaln(alpha * J + betas) + logargs_const
                )
                tails = nxt / (1.0 - rho)
                if float(tails.max()) <= tol * max(1.0, float(np.abs(values).max())):
                    return values, tails
    raise UnconvergedError(
        f"ml3_beta_grid hit the {TERM_CAP}-term cap (alpha={alpha}, gamma={gamma}, x={x})"
    )

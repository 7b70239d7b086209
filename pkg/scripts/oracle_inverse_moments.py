#!/usr/bin/env python3
"""Pre-build oracles for subordinator tests.

1. E[Y_{theta,alpha}(t)], the mean of the inverse tempered stable subordinator,
   by numerical Laplace inversion (mpmath Talbot) of s -> 1/(s * Psi(s)) with
   Psi(s) = (s+theta)^alpha - theta^alpha.  Cross-checked with the de Hoog
   algorithm and at theta=0 against the exact t^alpha/Gamma(1+alpha).

2. Median of the one-sided alpha-stable variate with Laplace transform
   e^{-s^alpha} at alpha = 1/2, where the law is Levy(scale 1/4 * 2) i.e.
   scale c with e^{-sqrt(2 c s)} = e^{-sqrt(s)} so c = 1/2; the exact median
   is c / (2 * erfcinv(1/2)^2).  A 10^7-sample Monte Carlo check with
   scipy.stats.levy confirms it.

3. E[L_{1,1}(1)], the mean of the inverse gamma subordinator, by quadrature of
   the exact survival integral  E[L(t)] = int_0^inf P(ax, bt) dx  where P is
   the regularized lower incomplete gamma (first-passage identity), plus a
   Monte Carlo check using lockstep gamma increments (10^6 paths, step 1e-2;
   the grid-point-before-crossing convention biases the estimate down by at
   most one step).

Run:  python3 scripts/oracle_inverse_moments.py
"""

import mpmath as mp
import numpy as np
from scipy import integrate, special, stats

mp.mp.dps = 30


def mean_inverse_tempered_stable(theta, alpha, t):
    def transform(s):
        return 1 / (s * ((s + theta) ** alpha - theta**alpha))

    talbot = mp.invertlaplace(transform, t, method="talbot")
    dehoog = mp.invertlaplace(transform, t, method="dehoog")
    return talbot, dehoog


def stable_half_median():
    exact = 0.5 / (2 * special.erfcinv(0.5) ** 2)
    rng = np.random.default_rng(20240811)
    samples = stats.levy(scale=0.5).rvs(size=10**7, random_state=rng)
    est = np.median(samples)
    # large-sample std error of the median: 1/(2 f(med) sqrt(n))
    dens = stats.levy(scale=0.5).pdf(exact)
    se = 1.0 / (2 * dens * np.sqrt(samples.size))
    return exact, est, se


def mean_inverse_gamma(a, b, t):
    val, err = integrate.quad(lambda x: special.gammainc(a * x, b * t), 0, np.inf)
    # Monte Carlo: first passage of a gamma subordinator over level t
    rng = np.random.default_rng(20240812)
    n = 10**6
    step = 1e-2
    remaining = np.zeros(n)
    level = np.full(n, 0.0)
    active = np.ones(n, dtype=bool)
    passage = np.zeros(n)
    k = 0
    while active.any():
        k += 1
        inc = rng.gamma(a * step, 1.0 / b, size=int(active.sum()))
        level[active] += inc
        crossed = active.copy()
        crossed[active] = level[active] > t
        passage[crossed] = (k - 1) * step  # grid point before crossing
        active &= ~crossed
    mc = passage.mean()
    se = passage.std(ddof=1) / np.sqrt(n)
    return val, err, mc, se


if __name__ == "__main__":
    talbot, dehoog = mean_inverse_tempered_stable(0.5, 0.7, 1.0)
    print(f"E[Y_(0.5,0.7)(1)]  talbot={mp.nstr(talbot, 17)}  dehoog={mp.nstr(dehoog, 17)}")
    t0, d0 = mean_inverse_tempered_stable(1e-12, 0.7, 1.0)
    print(f"theta->0 check: {mp.nstr(t0, 12)} vs 1/Gamma(1.7) = {mp.nstr(1/mp.gamma(1.7), 12)}")

    exact, est, se = stable_half_median()
    print(f"stable(1/2) median: exact={exact:.12f}  mc={est:.6f}  se={se:.2e}")

    val, err, mc, se = mean_inverse_gamma(1.0, 1.0, 1.0)
    print(f"E[L_(1,1)(1)]: quadrature={val:.12f} (+-{err:.1e})  mc={mc:.6f} (+-{se:.1e})")

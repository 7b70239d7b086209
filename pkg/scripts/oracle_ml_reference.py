#!/usr/bin/env python3
"""Pre-build oracle: arbitrary-precision three-parameter Mittag-Leffler values.

Computes E^gamma_{alpha,beta}(x) = sum_j x^j Gamma(j+gamma) / (j! Gamma(alpha j
+ beta) Gamma(gamma)) with mpmath at 50 digits, summing until the term plus an
interval-style geometric tail bound is below 1e-30.  The printed values are
frozen into tests/test_special.py; mpmath is deliberately not a runtime
dependency of the package.

Run:  python3 scripts/oracle_ml_reference.py
"""

import mpmath as mp

mp.mp.dps = 50


def ml3_reference(alpha, beta, gamma, x, tol=mp.mpf("1e-30")):
    alpha, beta, gamma, x = map(mp.mpf, (alpha, beta, gamma, x))
    total = mp.mpf(0)
    j = 0
    while True:
        term = (
            x**j * mp.gamma(j + gamma)
            / (mp.factorial(j) * mp.gamma(alpha * j + beta) * mp.gamma(gamma))
        )
        total += term
        # ratio of consecutive term magnitudes; decreasing for j large enough
        nxt = abs(
            x ** (j + 1) * mp.gamma(j + 1 + gamma)
            / (mp.factorial(j + 1) * mp.gamma(alpha * (j + 1) + beta) * mp.gamma(gamma))
        )
        ratio = nxt / abs(term) if term != 0 else mp.mpf(0)
        if nxt < tol and ratio < mp.mpf("0.5") and j > 4:
            tail = nxt / (1 - ratio)
            return total, tail
        j += 1
        if j > 100000:
            raise RuntimeError("no convergence")


CASES = [
    # (alpha, beta, gamma, x)
    (0.5, 1.0, 2.0, -1.0),   # frozen for ml3
    (0.7, 1.7, 1.0, 0.3),    # frozen for ml2
    (1.0, 1.0, 1.0, 1.0),    # sanity: e
    (0.7, 2.0, 3.0, 0.0),    # sanity: 1/Gamma(2)
]

if __name__ == "__main__":
    for alpha, beta, gamma, x in CASES:
        val, tail = ml3_reference(alpha, beta, gamma, x)
        print(f"E^{gamma}_{{{alpha},{beta}}}({x}) = {mp.nstr(val, 25)}   (tail bound {mp.nstr(tail, 3)})")

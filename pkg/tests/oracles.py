"""Independent reference computations used by the tests.

None of these share code with the package: Legendre values come from exact
rational arithmetic, eigenvalues from ODE shooting, matrix entries from
adaptive quadrature over scipy's lpmv.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy import integrate, optimize
from scipy.special import lpmv


def legendre_poly_coeffs(n: int) -> list[Fraction]:
    """Coefficients (ascending powers) of P_n by Bonnet's recurrence in exact arithmetic."""
    p0 = [Fraction(1)]
    if n == 0:
        return p0
    p1 = [Fraction(0), Fraction(1)]
    for j in range(2, n + 1):
        nxt = [Fraction(0)] * (j + 1)
        for i, c in enumerate(p1):
            nxt[i + 1] += Fraction(2 * j - 1, j) * c
        for i, c in enumerate(p0):
            nxt[i] -= Fraction(j - 1, j) * c
        p0, p1 = p1, nxt
    return p1


def assoc_legendre_exact(l: int, k: int, s: Fraction) -> tuple[Fraction, Fraction]:
    """(A, B) with P_l^k(s) = A * sqrt(B); Condon-Shortley phase (-1)^k included."""
    coeffs = legendre_poly_coeffs(l)
    for _ in range(k):
        coeffs = [i * c for i, c in enumerate(coeffs)][1:] or [Fraction(0)]
    val = sum(c * s**i for i, c in enumerate(coeffs))
    one_minus = 1 - s * s
    # (1 - s^2)^{k/2} = (1 - s^2)^{k//2} * sqrt((1 - s^2)^{k % 2})
    a = (-1) ** k * val * one_minus ** (k // 2)
    b = one_minus ** (k % 2)
    return a, b


def gegenbauer_series(n: int, beta: float, s: float) -> float:
    """Polynomial solution of the Gegenbauer ODE from its coefficient recurrence.

    Plugging y = sum c_j s^j into (1-s^2)y'' - (2b+1)s y' + n(n+2b)y = 0
    gives c_{j+2} = c_j (j(j-1) + (2b+1)j - n(n+2b)) / ((j+2)(j+1)).  The
    leading coefficient is scaled to 2^n (b)_n / n!.
    """
    lam = n * (n + 2 * beta)
    c = [0.0] * (n + 3)
    c[n % 2] = 1.0
    for j in range(n % 2, n + 1, 2):
        c[j + 2] = c[j] * (j * (j - 1) + (2 * beta + 1) * j - lam) / ((j + 2) * (j + 1))
    lead = 2.0**n * math.gamma(beta + n) / math.gamma(beta) / math.factorial(n)
    scale = lead / c[n]
    return scale * sum(c[j] * s**j for j in range(n + 1))


def normalized_lpmv(l: int, k: int, s):
    norm = math.sqrt(2.0 * math.factorial(l + k) / ((2 * l + 1) * math.factorial(l - k)))
    return lpmv(k, l, s) / norm


def v_matrix_entry(l: int, m: int, k: int, omega: float, mu: float) -> float:
    """int V P_l P_m ds by adaptive quadrature (unit-normalized functions)."""
    f = lambda s: ((2 * omega + 12 * mu) / (15 * s * s - 3 + mu)
                   * normalized_lpmv(l, k, s) * normalized_lpmv(m, k, s))
    val, _ = integrate.quad(f, -1.0, 1.0, limit=400, epsabs=1e-14, epsrel=1e-13)
    return val


def _shoot(lam: float, k: int, omega: float, mu: float, odd: bool) -> float:
    """Parity mismatch at s=0 of the regular solution started at s=1.

    With Phi = (1-s^2)^{k/2} y the equation becomes
    (1-s^2) y'' - 2(k+1) s y' - (k(k+1) + V + lam) y = 0.
    """
    def V(s):
        return (2 * omega + 12 * mu) / (15 * s * s - 3 + mu)

    def rhs(s, y):
        return [y[1], (2 * (k + 1) * s * y[1] + (k * (k + 1) + V(s) + lam) * y[0]) / (1 - s * s)]

    slope = -(k * (k + 1) + V(1.0) + lam) / (2 * (k + 1))
    eps = 1e-7
    sol = integrate.solve_ivp(rhs, (1 - eps, 0.0), [1 - eps * slope, slope],
                              method="DOP853", rtol=1e-12, atol=1e-14)
    y, yp = sol.y[:, -1]
    return y if odd else yp


def shooting_eigenvalue(k: int, omega: float, mu: float, odd: bool, lo: float, hi: float) -> float:
    """Eigenvalue in [lo, hi] located by a sign change of the shooting mismatch."""
    return optimize.brentq(_shoot, lo, hi, args=(k, omega, mu, odd), xtol=1e-13)

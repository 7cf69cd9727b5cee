"""Associated Legendre / Gegenbauer evaluation and Gauss-Legendre quadrature.

Convention: Ferrers functions with the Condon-Shortley phase, so that

    P_3^1(s) = 1.5 (1 - 5 s^2) sqrt(1 - s^2)
    P_3^2(s) = 15 s (1 - s^2)
    P_3^3(s) = -15 (1 - s^2)^{3/2}

and  int_{-1}^{1} (P_l^k)^2 ds = 2 (l+k)! / ((2l+1) (l-k)!).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = [
    "QuadratureRule",
    "assoc_legendre",
    "gauss_legendre",
    "gegenbauer",
    "legendre_norm_sq",
    "normalized_legendre_table",
]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Legendre nodes (increasing) and weights on [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def positive_half(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes in (0, 1) with doubled weights, for integrating even functions.

        Only valid for rules with an even node count (no node at the origin).
        """
        n = len(self.nodes)
        if n % 2:
            raise DomainError("positive_half needs an even node count")
        return self.nodes[n // 2:], 2.0 * self.weights[n // 2:]


def _check_degree(l: int, k: int) -> None:
    if k < 0 or l < k:
        raise DomainError(f"need 0 <= k <= l, got l={l}, k={k}")


def legendre_norm_sq(l: int, k: int) -> float:
    """Squared L^2(-1, 1) norm of P_l^k."""
    _check_degree(l, k)
    return 2.0 * math.factorial(l + k) / ((2 * l + 1) * math.factorial(l - k))


def normalized_legendre_table(lmax: int, k: int, s) -> np.ndarray:
    """Unit-norm P_l^k(s) for l = k..lmax, shape (lmax - k + 1, len(s)).

    Upward three-term recurrence in l starting from the sectoral term, with
    (1 - s^2)^{k/2} evaluated once.
    """
    _check_degree(lmax, k)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(np.abs(s) > 1.0):
        raise DomainError("|s| must not exceed 1")
    out = np.empty((lmax - k + 1, s.size))

    c = math.sqrt(0.5)
    for j in range(1, k + 1):
        c *= -math.sqrt((2 * j + 1) / (2 * j))
    out[0] = c * (1.0 - s * s) ** (0.5 * k) if k else c
    if lmax == k:
        return out

    out[1] = math.sqrt(2 * k + 3) * s * out[0]
    for l in range(k + 2, lmax + 1):
        a = math.sqrt((4 * l * l - 1) / (l * l - k * k))
        b = math.sqrt((2 * l + 1) * ((l - 1) ** 2 - k * k) / ((2 * l - 3) * (l * l - k * k)))
        out[l - k] = a * s * out[l - k - 1] - b * out[l - k - 2]
    return out


def assoc_legendre(l: int, k: int, s):
    """Ferrers associated Legendre function P_l^k(s) (Condon-Shortley phase).

    Returns a float for scalar ``s`` and an array otherwise.
    """
    _check_degree(l, k)
    scalar = np.ndim(s) == 0
    vals = normalized_legendre_table(l, k, s)[-1] * math.sqrt(legendre_norm_sq(l, k))
    return float(vals[0]) if scalar else vals


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule by Newton iteration on P_n."""
    if n < 1:
        raise DomainError("node count must be >= 1")
    m = (n + 1) // 2
    i = np.arange(m)
    # Tricomi initial guesses, largest root first
    theta = np.pi * (i + 0.75) / (n + 0.5)
    x = np.cos(theta) * (1.0 - (n - 1) / (8.0 * n**3))
    for _ in range(100):
        p, dp = _legendre_with_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    p, dp = _legendre_with_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    if n % 2:
        x[-1] = 0.0
    # mirror the half-rule; x is decreasing from near 1 toward 0
    nodes = np.concatenate([-x, x[::-1][n % 2:]])
    weights = np.concatenate([w, w[::-1][n % 2:]])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights)


def _legendre_with_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p0 = np.ones_like(x)
    p1 = x.copy()
    if n == 1:
        return p1, p0
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def gegenbauer(n: int, beta: float, s):
    """Gegenbauer polynomial C_n^beta(s), standard normalization C_1 = 2 beta s.

    Solves (1 - s^2) y'' - (2 beta + 1) s y' + n (n + 2 beta) y = 0.
    """
    if n < 0:
        raise DomainError("degree must be >= 0")
    if beta <= 0:
        raise DomainError("beta must be positive")
    s = np.asarray(s, dtype=float)
    c0 = np.ones_like(s)
    if n == 0:
        return c0 if s.ndim else float(c0)
    c1 = 2.0 * beta * s
    for j in range(2, n + 1):
        c0, c1 = c1, (2.0 * (j + beta - 1.0) * s * c1 - (j + 2.0 * beta - 2.0) * c0) / j
    return c1 if s.ndim else float(c1)

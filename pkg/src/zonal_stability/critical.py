"""Neutral modes, the function g and the critical rotation rates.

A neutral mode with wavenumber k at rotation rate omega is a shift mu in the
admissible search interval at which the principal Rayleigh eigenvalue equals
-12.  The wave speed is c = omega + mu.
"""
from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import optimize

from .rayleigh import (
    BOUNDARY_GUARD,
    DiscretizationConfig,
    EigenSolution,
    ModeSpec,
    NEAR_BOUNDARY,
    analytic_lambda_at_mu3,
    analytic_lambda_at_mu_minus12,
    closed_form_dlambda_dmu,
    dlambda_dmu,
    principal_eigenvalue,
)
from .errors import DomainError, SingularIntegrandError

__all__ = [
    "BracketingWarning",
    "CriticalRates",
    "KreinSign",
    "NeutralMode",
    "SearchConfig",
    "SearchInterval",
    "critical_rates",
    "g_of_omega",
    "negative_critical_rate",
    "neutral_mode_solve",
    "search_interval",
]

log = logging.getLogger(__name__)

NEUTRAL_LEVEL = -12.0


class KreinSign(str, enum.Enum):
    NEGATIVE = "negative"
    POSITIVE = "positive"
    DEGENERATE = "degenerate"


class BracketingWarning(RuntimeWarning):
    """A root bracket next to a boundary shift could not be resolved."""


@dataclass(frozen=True)
class SearchConfig:
    """Grid and refinement constants for the neutral-mode and g searches."""

    grid_step: float = 0.25
    # beyond this distance from the boundary shift the grid step grows
    # geometrically, since the eigenvalue tends smoothly to -18
    fine_span: float = 20.0
    growth: float = 1.15
    mu_xtol: float = 1e-8
    golden_xtol: float = 1e-7
    # a refined local maximum this close to -12 is a tangency (one root)
    tangency_tol: float = 1e-9
    # numeric evaluations never come closer than this to a boundary shift
    boundary_offset: float = 1e-3
    truncation: float = 1e3
    secondary_window: float = 0.1
    derivative_floor: float = 1e-6


DEFAULT_SEARCH = SearchConfig()


@dataclass(frozen=True)
class SearchInterval:
    """Closed interval of admissible shifts, possibly empty."""

    lo: float
    hi: float
    excluded: tuple = ()

    @property
    def empty(self) -> bool:
        return self.lo > self.hi

    def __contains__(self, mu: float) -> bool:
        return (not self.empty and self.lo <= mu <= self.hi
                and all(abs(mu - x) > 0 for x in self.excluded))


@dataclass(frozen=True, eq=False)
class NeutralMode:
    c: float
    k: int
    omega: float
    mu: float
    eigenfunction: EigenSolution
    dlambda_dmu: float
    krein_sign: KreinSign
    boundary: bool = False
    secondary_near_level: bool = False

    @property
    def energy(self) -> float:
        """(c - 5 omega / 6) times the mu-derivative of the eigenvalue."""
        return (self.c - 5.0 * self.omega / 6.0) * self.dlambda_dmu


@dataclass(frozen=True)
class CriticalRates:
    positive_k1: float
    positive_k2: float
    negative_k1: float
    negative_k2: float
    overall_positive: float
    overall_negative: float
    negative_k2_bracket: tuple = ()


def search_interval(k: int, omega: float) -> SearchInterval:
    """Shifts mu = c - omega where a non-resonant neutral mode may exist.

    The neutral speed must lie in [3 + omega, 0] when omega < -3 and in
    [0, omega - 12] when omega > 12; no interval exists in between.  The
    resonant shift -omega/6 is listed as excluded when it falls inside.
    """
    if k not in (1, 2):
        raise DomainError("search intervals are defined for k = 1 and k = 2")
    omega = float(omega)
    if -3.0 < omega <= 12.0:
        return SearchInterval(1.0, 0.0)
    if omega <= -3.0:
        lo, hi = 3.0, -omega
    else:
        lo, hi = -omega, -12.0
    res = -omega / 6.0
    excluded = (res,) if lo <= res <= hi else ()
    return SearchInterval(lo, hi, excluded)


def krein_sign(mu: float, omega: float, dmu: float,
               floor: float = DEFAULT_SEARCH.derivative_floor) -> KreinSign:
    if abs(dmu) < floor:
        return KreinSign.DEGENERATE
    value = (mu + omega / 6.0) * dmu
    return KreinSign.POSITIVE if value > 0 else KreinSign.NEGATIVE


# --------------------------------------------------------------------------
# cached principal eigenvalues


@lru_cache(maxsize=8192)
def _solve(k: int, omega: float, mu: float, config: DiscretizationConfig) -> EigenSolution:
    return principal_eigenvalue(ModeSpec.standard(k, omega, mu), config)


def _lam(k: int, omega: float, mu: float, config: DiscretizationConfig) -> float:
    return _solve(k, float(omega), float(mu), config).eigenvalue


def _boundary_value(k: int, omega: float, mu: float) -> Optional[float]:
    """Closed-form eigenvalue at a boundary shift, or None if unavailable."""
    try:
        if mu == -12.0:
            return analytic_lambda_at_mu_minus12(k, omega)[0]
        if mu == 3.0:
            return analytic_lambda_at_mu3(k, omega)[0]
    except DomainError:
        return None
    return None


def _grid(lo: float, hi: float, anchor: float, search: SearchConfig) -> np.ndarray:
    """Grid on [lo, hi] refined next to ``anchor`` (one of the ends)."""
    h = search.grid_step
    pts = [0.0]
    d = 0.0
    length = hi - lo
    while True:
        step = h if d < search.fine_span else h * search.growth ** ((d - search.fine_span) / h / 8)
        step = min(step, 10.0 * (1.0 + d / 10.0))
        d += step
        if d >= length:
            break
        pts.append(d)
    pts.append(length)
    pts = np.asarray(pts)
    return lo + pts if anchor == lo else hi - pts[::-1]


def neutral_mode_solve(k: int, omega: float,
                       config: DiscretizationConfig = DiscretizationConfig(),
                       search: SearchConfig = DEFAULT_SEARCH) -> list[NeutralMode]:
    """All shifts in the search interval where the principal eigenvalue is -12.

    Sign changes on the grid are refined by Brent's method; grid local
    maxima without a sign change are refined by a bounded scalar maximizer,
    so that a hump that pokes just above -12 between grid points yields its
    two roots, and one that touches -12 yields a single degenerate root.
    Boundary shifts are evaluated by their closed forms.  Roots are returned
    in increasing mu.
    """
    iv = search_interval(k, omega)
    if iv.empty:
        return []
    omega = float(omega)
    anchor = 3.0 if omega <= -3.0 else -12.0
    lo, hi = iv.lo, iv.hi
    if omega > 12.0:
        lo = max(lo, -search.truncation)
    else:
        hi = min(hi, search.truncation)

    if lo == hi:
        val = _boundary_value(k, omega, lo)
        if val is not None and abs(val - NEUTRAL_LEVEL) < 1e-12:
            return [_boundary_mode(k, omega, lo, config, search)]
        return []

    mus = _grid(lo, hi, anchor, search)
    vals = np.empty(len(mus))
    exact = np.zeros(len(mus), dtype=bool)
    for i, mu in enumerate(mus):
        bval = _boundary_value(k, omega, float(mu)) if mu in (-12.0, 3.0) else None
        if bval is not None:
            vals[i] = bval
            exact[i] = True
            continue
        mu = _safe(float(mu), anchor, search)
        mus[i] = mu
        vals[i] = _lam(k, omega, mu, config)

    f = vals - NEUTRAL_LEVEL
    roots: list[tuple[float, bool]] = []  # (mu, tangency)
    boundary_roots = [float(mus[i]) for i in range(len(mus)) if exact[i] and abs(f[i]) < 1e-12]

    def fn(m):
        m = float(m)
        return _lam(k, omega, _safe(m, anchor, search), config) - NEUTRAL_LEVEL

    for i in range(len(mus) - 1):
        a, b = f[i], f[i + 1]
        if a == 0.0 or b == 0.0 or (a > 0) == (b > 0):
            continue
        lo_i, hi_i = float(mus[i]), float(mus[i + 1])
        if exact[i] or exact[i + 1]:
            found = _boundary_bracket(k, omega, config, search, anchor, lo_i, hi_i, a, b)
        else:
            found = _bracket_roots(fn, lo_i, hi_i, a, b, search)
        roots.extend((r, False) for r in found)

    # local maxima lying below the level: look for a hidden hump
    for i in range(len(mus)):
        left = f[i - 1] if i > 0 else -np.inf
        right = f[i + 1] if i + 1 < len(mus) else -np.inf
        if not (f[i] >= left and f[i] >= right) or f[i] >= 0 or exact[i]:
            # a maximum at a closed-form end is not refined: the numeric
            # path cannot approach the boundary shift cheaply
            continue
        if left > 0 or right > 0:
            continue
        a = mus[i - 1] if i > 0 else mus[i]
        b = mus[i + 1] if i + 1 < len(mus) else mus[i]
        a, b = _clip(a, b, anchor, search)
        if b - a <= search.golden_xtol:
            continue
        res = optimize.minimize_scalar(lambda m: -fn(m), bounds=(a, b), method="bounded",
                                       options={"xatol": search.golden_xtol})
        peak, fpeak = float(res.x), -float(res.fun)
        if abs(fpeak) <= search.tangency_tol:
            roots.append((peak, True))
        elif fpeak > 0:
            roots.extend((r, False) for r in _bracket_roots(fn, a, peak, fn(a), fpeak, search))
            roots.extend((r, False) for r in _bracket_roots(fn, peak, b, fpeak, fn(b), search))

    modes = [_boundary_mode(k, omega, m, config, search) for m in boundary_roots]
    for mu, tangent in sorted(set(roots)):
        if any(abs(mu - x) < 10 * search.mu_xtol for x in iv.excluded):
            continue
        modes.append(_numeric_mode(k, omega, mu, config, search, tangent))
    modes.sort(key=lambda m: m.mu)
    return modes


def _safe(mu: float, anchor: float, search: SearchConfig) -> float:
    # the admissible side is mu >= 3 for the anchor 3 and mu <= -12 otherwise
    if abs(mu - anchor) < search.boundary_offset:
        inward = 1.0 if anchor == 3.0 else -1.0
        return anchor + inward * search.boundary_offset
    return mu


def _clip(a: float, b: float, anchor: float, search: SearchConfig) -> tuple[float, float]:
    if anchor == 3.0:
        a = max(a, anchor + search.boundary_offset)
    else:
        b = min(b, anchor - search.boundary_offset)
    return a, b


def _bracket_roots(fn, a, b, fa, fb, search: SearchConfig) -> list[float]:
    """Root of fn in [a, b] given a sign change at the ends."""
    if fa == 0.0:
        return [float(a)]
    if fb == 0.0:
        return [float(b)]
    try:
        return [float(optimize.brentq(fn, a, b, xtol=search.mu_xtol, rtol=1e-14))]
    except ValueError as exc:
        warnings.warn(f"bracketing failed in [{a}, {b}]: {exc}", BracketingWarning, stacklevel=3)
        return []


def _boundary_bracket(k, omega, config, search, anchor, a, b, fa, fb) -> list[float]:
    """Sign change between a closed-form end value and a numeric one.

    The numeric end nearest the boundary is moved in to the guard offset; if
    the sign change is not seen there, smaller offsets are tried before the
    bracket is reported as unresolved.
    """
    f_far = fb if anchor == a else fa
    offset = search.boundary_offset
    while offset >= 10 * BOUNDARY_GUARD:
        near = anchor + (offset if anchor == a else -offset)
        f_near = _lam(k, omega, near, config) - NEUTRAL_LEVEL
        if (f_near > 0) != (f_far > 0):
            fn = lambda m: _lam(k, omega, float(m), config) - NEUTRAL_LEVEL
            lo, hi = (near, b) if anchor == a else (a, near)
            flo, fhi = (f_near, f_far) if anchor == a else (f_far, f_near)
            return _bracket_roots(fn, lo, hi, flo, fhi, search)
        offset /= 10.0
    warnings.warn(
        f"sign change in [{a}, {b}] lies within {10 * BOUNDARY_GUARD:g} of the boundary "
        "shift; root not resolved", BracketingWarning, stacklevel=3)
    return []


def _numeric_mode(k, omega, mu, config, search, tangent=False) -> NeutralMode:
    mode = ModeSpec.standard(k, omega, mu)
    sol = _solve(k, omega, mu, config)
    d = 0.0 if tangent else dlambda_dmu(mode, sol)
    sign = krein_sign(mu, omega, d, search.derivative_floor)
    near = sol.secondary is not None and abs(sol.secondary - NEUTRAL_LEVEL) < search.secondary_window
    if near:
        log.warning("secondary eigenvalue %.6g within %.2g of -12 at k=%d omega=%g mu=%g",
                    sol.secondary, search.secondary_window, k, omega, mu)
    return NeutralMode(omega + mu, k, omega, mu, sol, d, sign, False, near)


def _boundary_mode(k, omega, mu, config, search) -> NeutralMode:
    mode = ModeSpec.standard(k, omega, mu)
    sol = principal_eigenvalue(mode, config)
    try:
        d = closed_form_dlambda_dmu(k, omega, mu)
    except SingularIntegrandError:
        d = math.inf
    sign = krein_sign(mu, omega, d, search.derivative_floor)
    return NeutralMode(omega + mu, k, omega, mu, sol, d, sign, True, False)


# --------------------------------------------------------------------------
# g and the negative critical rate


def g_of_omega(omega: float, config: DiscretizationConfig = DiscretizationConfig(),
               search: SearchConfig = DEFAULT_SEARCH, return_argmax: bool = False):
    """Maximum of the k = 2 principal eigenvalue over mu in [3, 183].

    A coarse grid (step 0.5 on [3, 10], step 5 on [10, 183]) locates the best
    interior point, which is refined by a bounded scalar maximizer to
    ``search.golden_xtol``.  The end mu = 3 uses its closed form.
    """
    omega = float(omega)
    if not -18.0 <= omega <= -3.0:
        raise DomainError("g is defined for omega in [-18, -3]")
    end_value = analytic_lambda_at_mu3(2, omega)[0]
    grid = np.concatenate([np.arange(3.5, 10.0, 0.5), np.arange(10.0, 180.0 + 1e-9, 5.0), [183.0]])
    vals = np.array([_lam(2, omega, m, config) for m in grid])
    i = int(np.argmax(vals))
    a = grid[i - 1] if i > 0 else 3.0 + search.boundary_offset
    b = grid[i + 1] if i + 1 < len(grid) else grid[i]
    res = optimize.minimize_scalar(lambda m: -_lam(2, omega, m, config), bounds=(a, b),
                                   method="bounded", options={"xatol": search.golden_xtol})
    best_mu, best = float(res.x), -float(res.fun)
    if vals[i] > best:
        best_mu, best = float(grid[i]), float(vals[i])
    if end_value >= best:
        best_mu, best = 3.0, end_value
    return (best, best_mu) if return_argmax else best


@lru_cache(maxsize=8)
def negative_critical_rate(config: DiscretizationConfig = DiscretizationConfig(),
                           search: SearchConfig = DEFAULT_SEARCH, xtol: float = 1e-9) -> float:
    """The rotation rate where g crosses -12, by Brent's method on [-18, -3].

    g is decreasing, so the root is unique.  The tolerance is much tighter
    than the spacing of interest so that the result is reliable to the
    printed digits.
    """
    h = lambda w: g_of_omega(w, config, search) - NEUTRAL_LEVEL
    return float(optimize.brentq(h, -18.0, -3.0, xtol=xtol, rtol=1e-15))


def critical_rates(config: DiscretizationConfig = DiscretizationConfig(),
                   search: SearchConfig = DEFAULT_SEARCH) -> CriticalRates:
    g_inv = negative_critical_rate(config, search)
    return CriticalRates(
        positive_k1=99.0 / 2.0,
        positive_k2=69.0 / 2.0,
        negative_k1=-3.0,
        negative_k2=g_inv,
        overall_positive=max(99.0 / 2.0, 69.0 / 2.0),
        overall_negative=g_inv,
        negative_k2_bracket=(g_inv - 1e-8, g_inv + 1e-8),
    )

"""Rayleigh eigenvalue problems for the 3-jet on a rotating sphere.

For wavenumber k, rotation rate omega and spectral shift mu = c - omega the
problem is

    ((1 - s^2) Phi')' - k^2 Phi / (1 - s^2) - V(s) Phi = lambda Phi,
    V(s) = (2 omega + 12 mu) / (15 s^2 - 3 + mu),

posed on the parity subspace (odd Phi for k = 1, even Phi for k = 2).  The
principal eigenvalue is the largest one; a neutral mode corresponds to the
principal eigenvalue hitting -12.

The numeric path is a Galerkin discretization in unit-normalized associated
Legendre functions of the matching parity, which makes the Laplace part
diagonal.  At the two boundary shifts mu = -12 and mu = 3 the potential is
singular and closed-form solutions are used instead.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, linalg

from .basisfn import gauss_legendre, normalized_legendre_table
from .errors import ConfigError, DomainError, ResonanceError, SingularIntegrandError

__all__ = [
    "BOUNDARY_GUARD",
    "ClosedForm",
    "CurvePoint",
    "DiscretizationConfig",
    "EigenSolution",
    "ModeSpec",
    "Parity",
    "analytic_lambda_at_mu3",
    "analytic_lambda_at_mu_minus12",
    "assemble",
    "closed_form_dlambda_dmu",
    "dlambda_domega",
    "dlambda_dmu",
    "eigenvalue_curve",
    "hf_mu_integral",
    "lambda1",
    "principal_eigenvalue",
    "second_mu_derivative_fd",
]

# Shifts closer than this to -12 or 3 are treated as the boundary value.
BOUNDARY_GUARD = 1e-6
# Within this distance of a boundary shift the quadrature is oversampled 4x.
NEAR_BOUNDARY = 0.05
_MAX_NODES = 16384


class Parity(str, enum.Enum):
    ODD = "odd"
    EVEN = "even"


def default_parity(k: int) -> Parity:
    """Parity of the stability-relevant subspace: odd for k = 1, even for k = 2."""
    return Parity.ODD if abs(k) % 2 == 1 else Parity.EVEN


@dataclass(frozen=True)
class ModeSpec:
    """One Rayleigh problem instance."""

    k: int
    parity: Parity
    omega: float
    mu: float

    def __post_init__(self):
        object.__setattr__(self, "parity", Parity(self.parity))
        if self.k < 0:
            raise DomainError("wavenumber must be non-negative")

    @classmethod
    def standard(cls, k: int, omega: float, mu: float) -> "ModeSpec":
        return cls(k, default_parity(k), float(omega), float(mu))

    @property
    def c(self) -> float:
        return self.omega + self.mu

    @property
    def is_standard(self) -> bool:
        return (self.k, self.parity) in ((1, Parity.ODD), (2, Parity.EVEN))


@dataclass(frozen=True)
class DiscretizationConfig:
    """Galerkin and refinement settings.

    ``quadrature_nodes`` of None means 4N + 16 (raised further when the
    potential has a pole close to [-1, 1]).  ``basis_size`` doubles on each
    refinement until successive principal eigenvalues differ by less than
    ``convergence_tol``.
    """

    basis_size: int = 32
    quadrature_nodes: Optional[int] = None
    convergence_tol: float = 1e-9
    max_refinements: int = 4

    def __post_init__(self):
        if self.basis_size < 8:
            raise ConfigError("basis_size must be at least 8")
        if self.quadrature_nodes is not None and self.quadrature_nodes < 2:
            raise ConfigError("quadrature_nodes must be at least 2")
        if not self.convergence_tol > 0:
            raise ConfigError("convergence_tol must be positive")
        if self.max_refinements < 0:
            raise ConfigError("max_refinements must be non-negative")


@dataclass(frozen=True, eq=False)
class EigenSolution:
    """An eigenpair of the discretized problem.

    ``coeffs[j]`` multiplies the unit-normalized P_l^k with l = degrees[j];
    the coefficient vector has unit Euclidean norm, so Phi has unit L^2 norm.
    """

    eigenvalue: float
    coeffs: np.ndarray
    degrees: np.ndarray
    k: int
    residual: float
    converged: bool
    basis_size: int
    degenerate: bool = False
    quadrature_nodes: int = 0
    # a few of the largest eigenvalues, in decreasing order
    leading: tuple = ()
    analytic: bool = False

    def evaluate(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        table = normalized_legendre_table(int(self.degrees[-1]), self.k, s)
        return self.coeffs @ table[self.degrees - self.k]

    @property
    def secondary(self) -> Optional[float]:
        return self.leading[1] if len(self.leading) > 1 else None


@dataclass(frozen=True)
class ClosedForm:
    """A closed-form eigenpair at a boundary shift.

    ``phi`` evaluates the (unnormalized) eigenfunction; ``description`` is a
    short human-readable formula.
    """

    eigenvalue: float
    exponent: float
    description: str
    phi: Callable[[np.ndarray], np.ndarray] = field(compare=False, repr=False)


@dataclass(frozen=True)
class CurvePoint:
    mu: float
    omega: float
    lambda1: float
    dlambda_dmu: float
    converged: bool
    error: Optional[str] = None


# --------------------------------------------------------------------------
# basis and quadrature


def basis_degrees(k: int, parity: Parity, n: int) -> np.ndarray:
    """The first n degrees l >= k with (-1)^{l+k} matching the parity.

    For k <= 1 the degrees start at 2, which removes the rigid-rotation
    component from the space.
    """
    parity = Parity(parity)
    start = k if parity is Parity.EVEN else k + 1
    if k <= 1 and start < 2:
        start += 2
    return start + 2 * np.arange(n)


def _pole_parameter(mu: float) -> float:
    """log of the Bernstein ellipse parameter through the poles of 1/(15s^2-3+mu)."""
    z = np.sqrt(complex((3.0 - mu) / 15.0))
    rho = abs(z + np.sqrt(z * z - 1.0))
    rho = max(rho, 1.0 / rho)
    return math.log(rho)


def quadrature_size(n_basis: int, mu: float, requested: Optional[int] = None) -> int:
    """Even Gauss-Legendre node count used for a basis of n_basis functions."""
    if requested is not None:
        n = requested
    else:
        n = 4 * n_basis + 16
        logrho = _pole_parameter(mu)
        if logrho > 0:
            # geometric quadrature error rho^{-2n} below roundoff
            n = max(n, int(math.ceil(20.0 / logrho)))
        if min(abs(mu + 12.0), abs(mu - 3.0)) < NEAR_BOUNDARY:
            n *= 4
        n = min(n, _MAX_NODES)
    return n + (n % 2)


@lru_cache(maxsize=32)
def _half_table(k: int, parity: Parity, n_basis: int, n_nodes: int):
    """Basis values at the positive Gauss nodes and the doubled weights."""
    rule = gauss_legendre(n_nodes)
    s, w = rule.positive_half()
    degrees = basis_degrees(k, parity, n_basis)
    table = normalized_legendre_table(int(degrees[-1]), k, s)[degrees - k]
    table.setflags(write=False)
    return degrees, s, w, table


def _check_numeric_shift(mu: float) -> None:
    if -12.0 - BOUNDARY_GUARD < mu < 3.0 + BOUNDARY_GUARD:
        if abs(mu + 12.0) < BOUNDARY_GUARD or abs(mu - 3.0) < BOUNDARY_GUARD:
            raise ResonanceError(
                f"mu={mu} is at a boundary shift; use the closed-form solution")
        raise ResonanceError(f"15 s^2 - 3 + mu vanishes on (-1, 1) for mu={mu}")


def potential(s, omega: float, mu: float):
    return (2.0 * omega + 12.0 * mu) / (15.0 * np.square(s) - 3.0 + mu)


def assemble(mode: ModeSpec, config: DiscretizationConfig = DiscretizationConfig(),
             basis_size: Optional[int] = None) -> np.ndarray:
    """Symmetric Galerkin matrix A_lm = -l(l+1) d_lm - int V P_l P_m ds."""
    _check_numeric_shift(mode.mu)
    n = config.basis_size if basis_size is None else basis_size
    if n < 1:
        raise ConfigError("basis too small")
    nq = quadrature_size(n, mode.mu, config.quadrature_nodes)
    degrees, s, w, table = _half_table(mode.k, mode.parity, n, nq)
    # the integrand is even in s, so the positive half-rule suffices
    vw = w * potential(s, mode.omega, mode.mu)
    a = -(table * vw) @ table.T
    a[np.diag_indices(n)] -= degrees * (degrees + 1.0)
    return 0.5 * (a + a.T)


def _solve_once(mode: ModeSpec, config: DiscretizationConfig, n: int):
    a = assemble(mode, config, n)
    m = min(3, n)
    vals, vecs = linalg.eigh(a, subset_by_index=[n - m, n - 1])
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    v = vecs[:, 0]
    lam = float(vals[0])
    residual = float(np.linalg.norm(a @ v - lam * v))
    return lam, v, vals, residual, a


def principal_eigenvalue(mode: ModeSpec,
                         config: DiscretizationConfig = DiscretizationConfig()) -> EigenSolution:
    """Largest eigenvalue of the Rayleigh problem with its eigenfunction.

    The basis is doubled until two successive principal eigenvalues agree to
    ``config.convergence_tol`` or ``config.max_refinements`` is exhausted; the
    ``converged`` flag records which happened.  At the boundary shifts the
    closed form is returned, projected onto the basis.
    """
    if min(abs(mode.mu + 12.0), abs(mode.mu - 3.0)) < BOUNDARY_GUARD:
        return _boundary_solution(mode, config)
    _check_numeric_shift(mode.mu)

    n = config.basis_size
    previous = None
    converged = False
    for _ in range(config.max_refinements + 1):
        lam, v, vals, residual, a = _solve_once(mode, config, n)
        if previous is not None and abs(lam - previous) < config.convergence_tol:
            converged = True
            break
        previous = lam
        if _ == config.max_refinements:
            break
        n *= 2

    degenerate = len(vals) > 1 and (vals[0] - vals[1]) < 10.0 * config.convergence_tol
    if degenerate:
        # prefer the combination with the largest weight on the lowest degree
        _, vecs = linalg.eigh(a, subset_by_index=[n - 2, n - 1])
        c0 = vecs[0]
        v = vecs @ (c0 / np.linalg.norm(c0)) if np.linalg.norm(c0) > 0 else v
        v = v / np.linalg.norm(v)
    v = _fix_sign(v)
    degrees = basis_degrees(mode.k, mode.parity, n)
    return EigenSolution(
        eigenvalue=lam, coeffs=v, degrees=degrees, k=mode.k, residual=residual,
        converged=converged, basis_size=n, degenerate=bool(degenerate),
        quadrature_nodes=quadrature_size(n, mode.mu, config.quadrature_nodes),
        leading=tuple(float(x) for x in vals),
    )


def _fix_sign(v: np.ndarray) -> np.ndarray:
    j = int(np.argmax(np.abs(v)))
    return v if v[j] >= 0 else -v


def _boundary_solution(mode: ModeSpec, config: DiscretizationConfig) -> EigenSolution:
    if not mode.is_standard:
        raise ResonanceError("closed forms exist only for (k=1, odd) and (k=2, even)")
    try:
        if abs(mode.mu + 12.0) < BOUNDARY_GUARD:
            lam, form = analytic_lambda_at_mu_minus12(mode.k, mode.omega)
        else:
            lam, form = analytic_lambda_at_mu3(mode.k, mode.omega)
    except DomainError as exc:
        raise ResonanceError(str(exc)) from exc
    n = config.basis_size * 2 ** config.max_refinements
    degrees = basis_degrees(mode.k, mode.parity, n)
    rule = gauss_legendre(quadrature_size(n, 0.0, None) * 4)
    s, w = rule.positive_half()
    table = normalized_legendre_table(int(degrees[-1]), mode.k, s)[degrees - mode.k]
    coeffs = table @ (w * form.phi(s))
    coeffs = _fix_sign(coeffs / np.linalg.norm(coeffs))
    return EigenSolution(
        eigenvalue=lam, coeffs=coeffs, degrees=degrees, k=mode.k, residual=0.0,
        converged=True, basis_size=n, quadrature_nodes=len(rule), leading=(lam,),
        analytic=True,
    )


def lambda1(k: int, omega: float, mu: float,
            config: DiscretizationConfig = DiscretizationConfig()) -> float:
    """Principal eigenvalue on the stability-relevant parity subspace."""
    return principal_eigenvalue(ModeSpec.standard(k, omega, mu), config).eigenvalue


# --------------------------------------------------------------------------
# derivatives


def _weighted_square(mode: ModeSpec, solution: EigenSolution, weight) -> float:
    _check_numeric_shift(mode.mu)
    n = len(solution.coeffs)
    nq = solution.quadrature_nodes or quadrature_size(n, mode.mu)
    degrees, s, w, table = _half_table(mode.k, mode.parity, n, nq)
    phi = solution.coeffs @ table
    return float(np.dot(w * weight(s), phi * phi))


def dlambda_dmu(mode: ModeSpec, solution: EigenSolution) -> float:
    """Hellmann-Feynman derivative of the eigenvalue with respect to mu."""
    om, mu = mode.omega, mode.mu
    return _weighted_square(
        mode, solution,
        lambda s: (-12.0 * (15.0 * s * s - 3.0) + 2.0 * om) / (15.0 * s * s - 3.0 + mu) ** 2)


def dlambda_domega(mode: ModeSpec, solution: EigenSolution) -> float:
    """Hellmann-Feynman derivative of the eigenvalue with respect to omega."""
    mu = mode.mu
    return _weighted_square(mode, solution, lambda s: -2.0 / (15.0 * s * s - 3.0 + mu))


def _singular_points(mu: float) -> list[float]:
    """Zeros of 15 s^2 - 3 + mu in [-1, 1]."""
    r2 = (3.0 - mu) / 15.0
    if r2 < 0 or r2 > 1:
        return []
    r = math.sqrt(r2)
    return [0.0] if r == 0 else [-r, r]


def hf_mu_integral(omega: float, mu: float, phi: Callable, *,
                   epsabs: float = 1e-13, epsrel: float = 1e-12) -> float:
    """int (-12(15s^2-3) + 2 omega) / (15s^2-3+mu)^2 |phi|^2 ds over [-1, 1].

    ``phi`` is any vectorized callable.  Zeros of the denominator on [-1, 1]
    are allowed only when phi vanishes fast enough there for the integrand
    to stay integrable; otherwise SingularIntegrandError is raised.  The
    interval is split at the zeros and each piece is handled by adaptive
    quadrature, which copes with the remaining integrable endpoint
    singularities.
    """
    def integrand(s):
        s = np.asarray(s, dtype=float)
        d = 15.0 * s * s - 3.0 + mu
        return (-12.0 * (15.0 * s * s - 3.0) + 2.0 * omega) / (d * d) * np.abs(phi(s)) ** 2

    cuts = _singular_points(mu)
    for x in cuts:
        for side in (-1.0, 1.0):
            near, far = x + side * 1e-7, x + side * 1e-5
            if abs(near) >= 1.0:
                continue
            tn, tf = abs(float(integrand(near))), abs(float(integrand(far)))
            if tn == 0.0 or not math.isfinite(tn):
                if not math.isfinite(tn):
                    raise SingularIntegrandError(f"integrand blows up at s={x}")
                continue
            if tf == 0.0:
                raise SingularIntegrandError(f"integrand not integrable at s={x}")
            order = math.log(tn / tf) / math.log(1e-2)
            if order <= -0.95:
                raise SingularIntegrandError(
                    f"integrand behaves like |s - {x:.6g}|^{order:.3g}; not integrable")
    edges = sorted(set([-1.0, 1.0] + [x for x in cuts if -1.0 < x < 1.0] + [0.0]))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda t: float(integrand(t)), a, b, limit=400,
                                epsabs=epsabs, epsrel=epsrel)
        total += val
    return total


def closed_form_dlambda_dmu(k: int, omega: float, mu: float) -> float:
    """Derivative in mu at a boundary shift, from the closed-form eigenfunction.

    The eigenfunction is normalized to unit L^2 norm first.  Raises
    SingularIntegrandError when the derivative integral diverges.
    """
    if mu == -12.0:
        _, form = analytic_lambda_at_mu_minus12(k, omega)
    elif mu == 3.0:
        _, form = analytic_lambda_at_mu3(k, omega)
    else:
        raise DomainError("closed forms exist only at mu = -12 and mu = 3")
    norm2, _ = integrate.quad(lambda t: float(form.phi(np.asarray(t))) ** 2, 0.0, 1.0,
                              epsabs=1e-14, epsrel=1e-13)
    norm2 *= 2.0
    return hf_mu_integral(omega, mu, form.phi) / norm2


def eigenvalue_curve(k: int, parity, omega: float, mu_grid: Sequence[float],
                     config: DiscretizationConfig = DiscretizationConfig()) -> list[CurvePoint]:
    """Principal eigenvalue and its mu-derivative along a grid of shifts.

    Failures at individual points are recorded in the returned rows.
    """
    rows = []
    for mu in mu_grid:
        mu = float(mu)
        mode = ModeSpec(k, Parity(parity), float(omega), mu)
        try:
            sol = principal_eigenvalue(mode, config)
            d = dlambda_dmu(mode, sol) if not sol.analytic else math.nan
            rows.append(CurvePoint(mu, float(omega), sol.eigenvalue, d, sol.converged))
        except (ResonanceError, DomainError, ConfigError) as exc:
            rows.append(CurvePoint(mu, float(omega), math.nan, math.nan, False, str(exc)))
    return rows


def second_mu_derivative_fd(k: int, omega: float, mu_center: float, step: float,
                            config: DiscretizationConfig = DiscretizationConfig(),
                            eigenvalue: Optional[Callable[[float], float]] = None) -> float:
    """Central second difference of the principal eigenvalue in mu.

    ``eigenvalue`` replaces the eigen-solve with any callable of mu.
    """
    if step <= 0:
        raise DomainError("step must be positive")
    f = eigenvalue or (lambda m: lambda1(k, omega, m, config))
    return (f(mu_center + step) + f(mu_center - step) - 2.0 * f(mu_center)) / step**2


# --------------------------------------------------------------------------
# closed forms at the boundary shifts


def analytic_lambda_at_mu_minus12(k: int, omega: float) -> tuple[float, ClosedForm]:
    """Principal eigenvalue at mu = -12 for omega in [12, 72].

    There the potential reduces to (2 omega - 144) / (15 (s^2 - 1)) and the
    eigenfunction is (1-s^2)^{b/2} s for k = 1 or (1-s^2)^{b/2} for k = 2.
    """
    if not 12.0 <= omega <= 72.0:
        raise DomainError("closed form at mu=-12 needs omega in [12, 72]")
    q = (2.0 * omega - 144.0) / 15.0
    if k == 1:
        b = math.sqrt(1.0 - q)
        lam = -(1.0 + b) * (2.0 + b)
        return lam, ClosedForm(lam, b, f"(1-s^2)^({b:.12g}/2) s",
                               lambda s, b=b: (1.0 - np.square(s)) ** (0.5 * b) * s)
    if k == 2:
        b = math.sqrt(4.0 - q)
        lam = -b * (1.0 + b)
        return lam, ClosedForm(lam, b, f"(1-s^2)^({b:.12g}/2)",
                               lambda s, b=b: (1.0 - np.square(s)) ** (0.5 * b))
    raise DomainError("closed forms are available for k = 1 and k = 2 only")


def analytic_lambda_at_mu3(k: int, omega: float) -> tuple[float, ClosedForm]:
    """Principal eigenvalue at mu = 3 for omega in [-18, -3].

    With r = sqrt((8 omega + 159) / 15) and a = (1 + r) / 2 the eigenfunction
    is sign(s)|s|^a (1-s^2)^{1/2} for k = 1 and |s|^a (1-s^2) for k = 2.  For
    k = 2 at omega = -18 exactly the eigenvalue jumps up to -6 with
    eigenfunction 1 - s^2.
    """
    if not -18.0 <= omega <= -3.0:
        raise DomainError("closed form at mu=3 needs omega in [-18, -3]")
    r = math.sqrt((8.0 * omega + 159.0) / 15.0)
    a = 0.5 * (1.0 + r)
    if k == 1:
        lam = -(2.0 * omega + 96.0) / 15.0 - 2.0 * r
        return lam, ClosedForm(
            lam, a, f"sign(s)|s|^{a:.12g} (1-s^2)^(1/2)",
            lambda s, a=a: np.sign(s) * np.abs(s) ** a * np.sqrt(1.0 - np.square(s)))
    if k == 2:
        if omega == -18.0:
            return -6.0, ClosedForm(-6.0, 0.0, "1-s^2", lambda s: 1.0 - np.square(s))
        lam = -(2.0 * omega + 171.0) / 15.0 - 3.0 * r
        return lam, ClosedForm(lam, a, f"|s|^{a:.12g} (1-s^2)",
                               lambda s, a=a: np.abs(s) ** a * (1.0 - np.square(s)))
    raise DomainError("closed forms are available for k = 1 and k = 2 only")

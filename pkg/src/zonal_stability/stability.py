"""Energy forms, index counts, classification and spectral pictures.

The linearized operator on the k-th Fourier mode acts on vorticity
coefficients u as

    L u = i k [ Psi0' u + (Upsilon0' + 2 omega) sum_m u_m P_m / (m (m + 1)) ],

with Psi0' = 15 s^2 - 3 and Upsilon0' = -12 Psi0'.  A neutral mode at shift
mu gives the imaginary eigenvalue -i k mu, and an unstable eigenvalue sigma
corresponds to a complex shift mu = i sigma / k with positive imaginary part.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize
from scipy.integrate import solve_ivp

from .basisfn import gauss_legendre, normalized_legendre_table
from .critical import (
    DEFAULT_SEARCH,
    KreinSign,
    NeutralMode,
    SearchConfig,
    negative_critical_rate,
    neutral_mode_solve,
)
from .errors import DomainError
from .rayleigh import (
    DiscretizationConfig,
    EigenSolution,
    Parity,
    basis_degrees,
    default_parity,
    hf_mu_integral,
)

__all__ = [
    "IndexCounts",
    "Overall",
    "SpectralPicture",
    "SpectrumConfig",
    "StabilityReport",
    "Verdict",
    "classify",
    "continue_unstable_branch",
    "energy_form",
    "hamiltonian_energy",
    "index_counts",
    "linearized_matrix",
    "refine_unstable_eigenvalue",
    "shooting_residual",
    "spectral_picture",
    "trichotomy_dims",
    "unstable_spectrum",
]

POSITIVE_K1 = 99.0 / 2.0
POSITIVE_K2 = 69.0 / 2.0
NEGATIVE_K1 = -3.0
RAYLEIGH_LOW = -18.0
RAYLEIGH_HIGH = 72.0


class Verdict(str, enum.Enum):
    UNSTABLE = "unstable"
    STABLE = "stable"


class Overall(str, enum.Enum):
    LINEARLY_UNSTABLE = "linearly_unstable"
    SPECTRALLY_STABLE = "spectrally_stable"


@dataclass(frozen=True)
class IndexCounts:
    """Terms of the index formula k_i + k_0 + (k_c + k_r) = n^-(L_k).

    ``indeterminate`` is set when a neutral mode has a degenerate Krein
    sign; such modes are counted in ``k_i_le0``.  ``inferred`` names the
    term that was obtained from the identity rather than counted.
    """

    n_minus_L: int
    k_i_le0: int
    k_0_le0: int
    k_c_plus_k_r: int
    indeterminate: bool = False
    inferred: str = "k_c_plus_k_r"

    @property
    def identity_holds(self) -> bool:
        return self.k_i_le0 + self.k_0_le0 + self.k_c_plus_k_r == self.n_minus_L


@dataclass(frozen=True)
class StabilityReport:
    omega: float
    verdict_k1: Verdict
    verdict_k2: Verdict
    overall: Overall
    index_k1: Optional[IndexCounts]
    index_k2: Optional[IndexCounts]
    dim_Eu: int
    dim_Es: int
    neutral_modes: tuple = ()
    rayleigh_criterion: bool = False

    @property
    def unstable_modes(self) -> tuple[int, ...]:
        return tuple(k for k, v in ((1, self.verdict_k1), (2, self.verdict_k2))
                     if v is Verdict.UNSTABLE)


@dataclass(frozen=True)
class SpectralPicture:
    k: int
    omega: float
    essential_interval: tuple[complex, complex]
    embedded_eigenvalue: Optional[complex]
    isolated_imaginary: tuple[complex, ...]
    rotational_pair: Optional[tuple[complex, complex]]
    unstable_count: int
    rotational_kernel_flag: bool = False
    edge_eigenvalues: tuple[complex, ...] = ()
    unstable_eigenvalues: tuple[complex, ...] = ()
    rotational_eigenfunction: Optional[str] = None


@dataclass(frozen=True)
class SpectrumConfig:
    """Settings for the direct count of unstable eigenvalues."""

    basis_size: int = 64
    real_floor: float = 1e-4
    persistence_tol: float = 1e-3
    polish: bool = True
    shooting_rtol: float = 1e-11


# --------------------------------------------------------------------------
# energy


def energy_form(c: float, k: int, omega: float, phi: Callable) -> float:
    """(c - 5 omega/6) int (-12(15s^2-3)+2 omega)/(15s^2-3+mu)^2 |phi|^2 ds.

    Here mu = c - omega.  ``phi`` is a vectorized callable on [-1, 1]; it is
    used as given, without normalization.  Raises SingularIntegrandError if
    the integral diverges.
    """
    if k == 0:
        raise DomainError("k must be nonzero")
    mu = c - omega
    return (c - 5.0 * omega / 6.0) * hf_mu_integral(omega, mu, phi)


def hamiltonian_energy(solution: EigenSolution) -> float:
    """Quadratic form of the energy-Casimir operator on a stream function.

    With stream-function coefficients a_l in the normalized basis the form
    is sum_l l(l+1) (l(l+1)/12 - 1) a_l^2, whose only negative direction in
    the parity subspaces of k = 1, 2 is l = 2.
    """
    l = solution.degrees.astype(float)
    ll = l * (l + 1.0)
    return float(np.sum(ll * (ll / 12.0 - 1.0) * solution.coeffs**2))


# --------------------------------------------------------------------------
# index counts and classification


def _n_minus(k: int) -> int:
    return 1 if abs(k) in (1, 2) else 0


def index_counts(k: int, omega: float, config: DiscretizationConfig = DiscretizationConfig(),
                 search: SearchConfig = DEFAULT_SEARCH,
                 modes: Optional[Sequence[NeutralMode]] = None) -> IndexCounts:
    """Index-formula terms for the k = 1 (odd) or k = 2 (even) subspace.

    k_i counts neutral modes whose energy is not positive.  On (-18, 72) the
    kernel term vanishes and k_c + k_r follows from the identity.  Outside
    that range the Rayleigh criterion gives k_c + k_r = 0 and the kernel term
    is the one inferred from the identity.
    """
    if k not in (1, 2):
        raise DomainError("index counts are implemented for k = 1 and k = 2")
    if modes is None:
        modes = neutral_mode_solve(k, omega, config, search)
    k_i = sum(1 for m in modes if m.krein_sign is not KreinSign.POSITIVE)
    degenerate = any(m.krein_sign is KreinSign.DEGENERATE for m in modes)
    n = _n_minus(k)
    if RAYLEIGH_LOW < omega < RAYLEIGH_HIGH:
        return IndexCounts(n, k_i, 0, n - k_i, degenerate, "k_c_plus_k_r")
    return IndexCounts(n, k_i, n - k_i, 0, degenerate, "k_0_le0")


@lru_cache(maxsize=4)
def _g_inverse(config: DiscretizationConfig) -> float:
    return negative_critical_rate(config)


def trichotomy_dims(omega: float, g_inv: Optional[float] = None,
                    config: DiscretizationConfig = DiscretizationConfig()) -> tuple[int, int]:
    """Dimensions of the unstable and stable subspaces (always equal)."""
    if g_inv is None:
        g_inv = _g_inverse(config)
    if NEGATIVE_K1 < omega < POSITIVE_K2:
        d = 4
    elif g_inv < omega <= NEGATIVE_K1 or POSITIVE_K2 <= omega < POSITIVE_K1:
        d = 2
    else:
        d = 0
    return d, d


def classify(omega: float, config: DiscretizationConfig = DiscretizationConfig(),
             search: SearchConfig = DEFAULT_SEARCH) -> StabilityReport:
    """Stability verdicts of the 3-jet at rotation rate omega.

    For omega <= -18 or omega >= 72 the Rayleigh criterion settles stability
    without any computation.  Otherwise each mode is unstable exactly when
    the index formula leaves k_c + k_r = 1.  The closed endpoints 99/2 (k=1),
    69/2 (k=2), -3 (k=1) and g^{-1}(-12) (k=2) are stable by construction.
    """
    omega = float(omega)
    if omega <= RAYLEIGH_LOW or omega >= RAYLEIGH_HIGH:
        return StabilityReport(omega, Verdict.STABLE, Verdict.STABLE, Overall.SPECTRALLY_STABLE,
                               None, None, 0, 0, (), True)
    modes1 = tuple(neutral_mode_solve(1, omega, config, search))
    modes2 = tuple(neutral_mode_solve(2, omega, config, search))
    idx1 = index_counts(1, omega, config, search, modes1)
    idx2 = index_counts(2, omega, config, search, modes2)
    v1 = Verdict.UNSTABLE if idx1.k_c_plus_k_r > 0 else Verdict.STABLE
    v2 = Verdict.UNSTABLE if idx2.k_c_plus_k_r > 0 else Verdict.STABLE
    if omega in (POSITIVE_K1, NEGATIVE_K1):
        v1 = Verdict.STABLE
    if omega == POSITIVE_K2:
        v2 = Verdict.STABLE
    if omega < NEGATIVE_K1 and abs(omega - _g_inverse(config)) < 1e-9:
        v2 = Verdict.STABLE
    n_unstable = (v1 is Verdict.UNSTABLE) + (v2 is Verdict.UNSTABLE)
    overall = Overall.LINEARLY_UNSTABLE if n_unstable else Overall.SPECTRALLY_STABLE
    return StabilityReport(omega, v1, v2, overall, idx1, idx2, 2 * n_unstable, 2 * n_unstable,
                           modes1 + modes2, False)


# --------------------------------------------------------------------------
# direct eigenvalue computations


@lru_cache(maxsize=32)
def _operator_tables(k: int, parity: Parity, n: int):
    degrees = basis_degrees(k, parity, n)
    rule = gauss_legendre(2 * n + 40)
    s, w = rule.positive_half()
    table = normalized_legendre_table(int(degrees[-1]), k, s)[degrees - k]
    p = 15.0 * s * s - 3.0
    shear = (table * (w * p)) @ table.T
    mass = (table * w) @ table.T
    return degrees, shear, mass


def linearized_matrix(k: int, omega: float, n: int,
                      parity: Optional[Parity] = None) -> tuple[np.ndarray, np.ndarray]:
    """Real matrix R with L = i k R on the parity subspace, and its degrees.

    R_lm = <Psi0' P_m, P_l> + <(Upsilon0' + 2 omega) P_m, P_l> / (m (m + 1)).
    Both profiles are quadratics in s, so the Gauss rule integrates the
    entries exactly and the matrix is banded.
    """
    parity = default_parity(k) if parity is None else Parity(parity)
    degrees, shear, mass = _operator_tables(abs(k), parity, n)
    vort = -12.0 * shear + 2.0 * omega * mass
    m = degrees * (degrees + 1.0)
    return shear + vort / m[None, :], degrees


def shooting_residual(mu: complex, k: int, omega: float, parity: Optional[Parity] = None,
                      rtol: float = 1e-11, start: float = 1e-9) -> complex:
    """Mismatch of the Rayleigh equation at s = 0 for a complex shift mu.

    Solves Delta_k Phi = (Upsilon0' + 2 omega) / (Psi0' + mu) Phi with
    Phi = (1 - s^2)^{k/2} y, starting from the regular solution at s = 1 and
    integrating to s = 0, where the parity condition is tested.  Zeros with
    nonzero imaginary part are eigenvalues -i k mu of the linearized operator.
    """
    parity = default_parity(k) if parity is None else Parity(parity)
    k = abs(k)

    def rhs(s, y):
        w = (-12.0 * (15.0 * s * s - 3.0) + 2.0 * omega) / (15.0 * s * s - 3.0 + mu)
        return [y[1], (2.0 * (k + 1) * s * y[1] + (k * (k + 1) + w) * y[0]) / (1.0 - s * s)]

    w1 = (2.0 * omega - 144.0) / (12.0 + mu)
    slope = -(k * (k + 1) + w1) / (2.0 * (k + 1))
    s0 = 1.0 - start
    y0 = [complex(1.0 - start * slope), complex(slope)]
    sol = solve_ivp(rhs, (s0, 0.0), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-3)
    y, yp = sol.y[:, -1]
    scale = math.hypot(abs(y), abs(yp))
    return (y if parity is Parity.ODD else yp) / scale


def refine_unstable_eigenvalue(k: int, omega: float, sigma0: complex,
                               rtol: float = 1e-11) -> Optional[complex]:
    """Polish an eigenvalue estimate by shooting; None if it does not converge.

    The result is returned in its unstable form (positive real part) when
    the converged shift has nonzero imaginary part.
    """
    mu0 = 1j * sigma0 / k
    try:
        mu = optimize.newton(shooting_residual, mu0, args=(k, omega, None, rtol),
                             tol=1e-12, maxiter=60)
    except (RuntimeError, OverflowError, ZeroDivisionError):
        return None
    mu = complex(mu)
    if not np.isfinite(mu) or abs(shooting_residual(mu, k, omega, None, rtol)) > 1e-8:
        return None
    if mu.imag < 0:
        mu = mu.conjugate()
    return -1j * k * mu


def continue_unstable_branch(k: int, omegas: Sequence[float], sigma0: complex,
                             rtol: float = 1e-11) -> list[Optional[complex]]:
    """Follow an unstable eigenvalue along a path of rotation rates.

    Each solve starts from the previous result.  This reaches growth rates
    far below what the Galerkin count can resolve, for instance next to the
    critical rates where the eigenvalue leaves the edge of the essential
    spectrum.
    """
    out: list[Optional[complex]] = []
    sigma = sigma0
    for om in omegas:
        nxt = refine_unstable_eigenvalue(k, float(om), sigma, rtol)
        out.append(nxt)
        if nxt is not None:
            sigma = nxt
    return out


def _galerkin_unstable(k: int, omega: float, n: int, floor: float) -> np.ndarray:
    r, _ = linearized_matrix(k, omega, n)
    sig = 1j * k * np.linalg.eigvals(r)
    return sig[sig.real > floor]


def unstable_spectrum(k: int, omega: float, config: SpectrumConfig = SpectrumConfig()) -> list[complex]:
    """Eigenvalues with positive real part, one from each {sigma, -conj(sigma)} pair.

    Candidates are eigenvalues of the Galerkin matrix with real part above
    ``real_floor`` at 2N.  A candidate is kept if it persists at N within
    ``persistence_tol`` or, when ``polish`` is on, if shooting converges from
    it to a genuine eigenvalue.  Kept eigenvalues are reported after shooting
    refinement, sorted by decreasing real part.
    """
    if k not in (1, 2):
        raise DomainError("unstable_spectrum is implemented for k = 1 and k = 2")
    n = config.basis_size
    fine = _galerkin_unstable(k, omega, 2 * n, config.real_floor)
    coarse = _galerkin_unstable(k, omega, n, config.real_floor)
    kept: list[complex] = []
    for cand in fine:
        persistent = coarse.size > 0 and np.min(np.abs(coarse - cand)) < config.persistence_tol
        value = complex(cand)
        if config.polish:
            polished = refine_unstable_eigenvalue(k, omega, cand, config.shooting_rtol)
            if polished is not None and polished.real > config.real_floor:
                value = polished
                persistent = True
        if persistent and all(abs(value - x) > config.persistence_tol for x in kept):
            kept.append(value)
    kept.sort(key=lambda z: (-z.real, z.imag))
    return kept


def spectral_picture(k: int, omega: float, config: DiscretizationConfig = DiscretizationConfig(),
                     spectrum: SpectrumConfig = SpectrumConfig(),
                     search: SearchConfig = DEFAULT_SEARCH) -> SpectralPicture:
    """Imaginary-axis spectrum of the linearized operator on mode k.

    The essential spectrum, the resonant eigenvalue i k omega / 6 and the
    rotational pair are analytic facts; isolated eigenvalues come from the
    neutral modes and the unstable count from ``unstable_spectrum``.
    """
    if k == 0:
        raise DomainError("k must be nonzero")
    omega = float(omega)
    ak = abs(k)
    sgn = 1 if k > 0 else -1
    essential = (complex(0, -3 * k), complex(0, 12 * k))
    embedded = None
    isolated: list[complex] = []
    if ak <= 3:
        resonant = complex(0, k * omega / 6.0)
        if RAYLEIGH_LOW < omega < RAYLEIGH_HIGH:
            embedded = resonant
        else:
            isolated.append(resonant)
    edge: list[complex] = []
    unstable: list[complex] = []
    if ak in (1, 2):
        for m in neutral_mode_solve(ak, omega, config, search):
            ev = complex(0, -k * m.mu)
            if -3.0 < -m.mu < 12.0:
                continue
            (edge if m.mu in (-12.0, 3.0) else isolated).append(ev)
        unstable = unstable_spectrum(ak, omega, spectrum)
        if sgn < 0:
            unstable = [z.conjugate() for z in unstable]
    pair = None
    flag = False
    eigfn = None
    if ak == 1:
        if omega != 0.0:
            pair = (complex(0, omega), complex(0, -omega))
            eigfn = f"Y_1 - {72.0 / omega:.12g}*sqrt(1/14)*Y_3"
        else:
            flag = True
    isolated.sort(key=lambda z: z.imag)
    return SpectralPicture(k, omega, essential, embedded, tuple(isolated), pair, len(unstable),
                           flag, tuple(edge), tuple(unstable), eigfn)

import numpy as np
import pytest

from oracles import normalized_lpmv

from zonal_stability.critical import neutral_mode_solve
from zonal_stability.errors import DomainError
from zonal_stability.rayleigh import ModeSpec, principal_eigenvalue
from zonal_stability.stability import (
    Overall,
    SpectrumConfig,
    Verdict,
    classify,
    continue_unstable_branch,
    energy_form,
    hamiltonian_energy,
    index_counts,
    linearized_matrix,
    refine_unstable_eigenvalue,
    shooting_residual,
    spectral_picture,
    trichotomy_dims,
    unstable_spectrum,
)

G_INV = -16.073544946


# --------------------------------------------------------------- energies

def test_energy_form_examples():
    from zonal_stability.basisfn import assoc_legendre
    got = energy_form(37.5, 1, 49.5, lambda s: assoc_legendre(3, 2, s))
    assert abs(got + 67.5) < 1e-8
    got = energy_form(22.5, 2, 34.5, lambda s: assoc_legendre(3, 3, s))
    assert abs(got + 575.0) < 1e-8
    got = energy_form(0.0, 1, -3.0, lambda s: np.sign(s) * s * s * np.sqrt(1 - s * s))
    assert abs(got + 4.0 / 45.0) < 1e-8


def test_energy_form_rejects_k0():
    with pytest.raises(DomainError):
        energy_form(1.0, 0, 60.0, lambda s: s)


def test_hamiltonian_negative_direction_is_l2():
    sol = principal_eigenvalue(ModeSpec.standard(2, -17.0, 3.5))
    assert sol.degrees[0] == 2


# ----------------------------------------------------------- index counts

def test_index_counts_k1_at_60():
    idx = index_counts(1, 60.0)
    assert (idx.n_minus_L, idx.k_i_le0, idx.k_0_le0, idx.k_c_plus_k_r) == (1, 1, 0, 0)
    assert idx.identity_holds


def test_index_counts_k1_at_30():
    idx = index_counts(1, 30.0)
    assert (idx.k_i_le0, idx.k_c_plus_k_r) == (0, 1)


def test_index_counts_k2_at_minus17():
    idx = index_counts(2, -17.0)
    assert (idx.k_i_le0, idx.k_c_plus_k_r) == (1, 0)


def test_index_counts_outside_rayleigh_range():
    idx = index_counts(1, 100.0)
    assert idx.k_c_plus_k_r == 0 and idx.identity_holds and idx.inferred == "k_0_le0"


def test_index_counts_rejects_other_k():
    with pytest.raises(DomainError):
        index_counts(3, 30.0)


@pytest.mark.slow
def test_identity_on_grid():
    for omega in np.linspace(-17.6, 71.0, 50):
        for k in (1, 2):
            idx = index_counts(k, float(omega))
            assert idx.identity_holds
            assert idx.k_c_plus_k_r in (0, 1)


# ----------------------------------------------------------- trichotomy

@pytest.mark.parametrize("omega,want", [
    (0.0, 4), (-3.0, 2), (-10.0, 2), (34.5, 2), (40.0, 2), (49.5, 0), (-16.1, 0), (80.0, 0),
])
def test_trichotomy(omega, want):
    assert trichotomy_dims(omega, G_INV) == (want, want)


# ----------------------------------------------------------- classify

@pytest.mark.parametrize("omega,v1,v2", [
    (0.0, Verdict.UNSTABLE, Verdict.UNSTABLE),
    (40.0, Verdict.UNSTABLE, Verdict.STABLE),
    (-10.0, Verdict.STABLE, Verdict.UNSTABLE),
    (60.0, Verdict.STABLE, Verdict.STABLE),
    (49.5, Verdict.STABLE, Verdict.STABLE),
    (34.5, Verdict.UNSTABLE, Verdict.STABLE),
    (-3.0, Verdict.STABLE, Verdict.UNSTABLE),
])
def test_classify_verdicts(omega, v1, v2):
    r = classify(omega)
    assert (r.verdict_k1, r.verdict_k2) == (v1, v2)
    n = (v1 is Verdict.UNSTABLE) + (v2 is Verdict.UNSTABLE)
    assert (r.dim_Eu, r.dim_Es) == (2 * n, 2 * n)
    assert (r.overall is Overall.LINEARLY_UNSTABLE) == (n > 0)


def test_classify_rayleigh_fast_path():
    for omega in (-18.0, -100.0, 72.0, 500.0):
        r = classify(omega)
        assert r.rayleigh_criterion and r.overall is Overall.SPECTRALLY_STABLE
        assert r.index_k1 is None


def test_classify_dims_agree_with_trichotomy():
    for omega in (-10.0, 0.0, 40.0, 60.0):
        r = classify(omega)
        assert (r.dim_Eu, r.dim_Es) == trichotomy_dims(omega, G_INV)


@pytest.mark.slow
@pytest.mark.parametrize("lo,hi", [(-17.5, -16.2), (-15.9, -3.1), (-2.9, 34.4), (34.6, 49.4), (49.6, 71.9)])
def test_verdict_constant_on_intervals(lo, hi):
    verdicts = {(classify(w).verdict_k1, classify(w).verdict_k2) for w in np.linspace(lo, hi, 5)}
    assert len(verdicts) == 1


# ----------------------------------------------------------- operator

def test_neutral_modes_are_operator_eigenvalues():
    # sigma = -i k mu for every neutral mode
    for k, omega in [(1, 60.0), (2, -17.0)]:
        r, _ = linearized_matrix(k, omega, 96)
        sig = 1j * k * np.linalg.eigvals(r)
        for m in neutral_mode_solve(k, omega):
            target = -1j * k * m.mu
            assert np.min(np.abs(sig - target)) < 1e-4


def _operator_with_rigid_rotation(omega, lmax):
    # R_lm = <p P_m, P_l> + <(-12 p + 2 w) P_m, P_l> / (m(m+1)), p = 15 s^2 - 3,
    # on degrees 1, 3, 5, ... with k = 1, built from scipy's lpmv
    degrees = np.arange(1, lmax + 1, 2)
    x, w = np.polynomial.legendre.leggauss(2 * lmax + 10)
    table = np.array([normalized_lpmv(int(l), 1, x) for l in degrees])
    p = 15 * x * x - 3
    shear = (table * (w * p)) @ table.T
    mass = (table * w) @ table.T
    m = degrees * (degrees + 1.0)
    return shear + (-12 * shear + 2 * omega * mass) / m[None, :], degrees


@pytest.mark.parametrize("omega", [20.0, -10.0, 60.0])
def test_rotational_eigenvalue_present(omega):
    r, degrees = _operator_with_rigid_rotation(omega, 21)
    vals, vecs = np.linalg.eig(r)
    i = int(np.argmin(np.abs(vals - omega)))
    assert abs(vals[i] - omega) < 1e-10
    v = vecs[:, i] / vecs[0, i]
    assert np.max(np.abs(v[2:])) < 1e-10
    assert picture_rotational(omega) == (1j * omega, -1j * omega)


def picture_rotational(omega):
    return spectral_picture(1, omega).rotational_pair


@pytest.mark.parametrize("k,omega", [(1, 30.0), (2, -10.0), (1, 0.0)])
def test_spectrum_symmetric(k, omega):
    # real operator up to the factor ik: eigenvalues come in {sigma, -conj(sigma)}
    r, _ = linearized_matrix(k, omega, 48)
    sig = 1j * k * np.linalg.eigvals(r)
    for z in sig:
        assert np.min(np.abs(sig + np.conj(z))) < 1e-6 * max(1.0, abs(z))


def test_unstable_spectrum_counts():
    assert len(unstable_spectrum(1, 30.0)) == 1
    assert len(unstable_spectrum(2, 40.0)) == 0
    assert len(unstable_spectrum(2, -10.0)) == 1
    assert len(unstable_spectrum(1, 60.0)) == 0


def test_shooting_refinement_zero_residual():
    sig = unstable_spectrum(1, 30.0)[0]
    mu = 1j * sig / 1
    assert abs(shooting_residual(mu, 1, 30.0)) < 1e-7
    again = refine_unstable_eigenvalue(1, 30.0, sig + 1e-3)
    assert abs(again - sig) < 1e-8


def test_continuation_towards_69_over_2():
    seed = unstable_spectrum(2, -10.0)  # sanity: k = 2 is also reachable
    assert seed
    start = unstable_spectrum(1, 30.0)[0]
    path = continue_unstable_branch(1, [35.0, 40.0, 45.0], start)
    assert all(z is not None and z.real > 0 for z in path)


def test_continuation_near_99_over_2():
    start = unstable_spectrum(1, 45.0)[0]
    omegas = [46, 47, 48, 48.5, 49, 49.2, 49.3, 49.4]
    path = continue_unstable_branch(1, omegas, start)
    rates = [z.real for z in path]
    assert all(r > 0 for r in rates)
    assert all(b < a for a, b in zip(rates, rates[1:]))


# ----------------------------------------------------------- spectral picture

def test_spectral_picture_k1_50():
    p = spectral_picture(1, 50.0)
    assert p.essential_interval == (-3j, 12j)
    assert p.embedded_eigenvalue == pytest.approx(50j / 6)
    assert p.rotational_pair == (50j, -50j)
    assert p.unstable_count == 0
    assert len(p.isolated_imaginary) == 1


def test_spectral_picture_k2_minus17():
    p = spectral_picture(2, -17.0)
    assert p.essential_interval == (-6j, 24j)
    assert p.rotational_pair is None
    assert len(p.isolated_imaginary) == 2
    assert p.unstable_count == 0


def test_spectral_picture_k1_100():
    p = spectral_picture(1, 100.0)
    assert p.embedded_eigenvalue is None
    assert any(abs(z - 100j / 6) < 1e-12 for z in p.isolated_imaginary)
    assert p.unstable_count == 0


def test_spectral_picture_negative_k_conjugates():
    p = spectral_picture(-1, 30.0)
    q = spectral_picture(1, 30.0)
    assert p.unstable_count == q.unstable_count == 1
    assert p.unstable_eigenvalues[0] == pytest.approx(q.unstable_eigenvalues[0].conjugate())


def test_spectral_picture_rotational_kernel_flag():
    p = spectral_picture(1, 0.0)
    assert p.rotational_pair is None and p.rotational_kernel_flag


def test_spectral_picture_rejects_k0():
    with pytest.raises(DomainError):
        spectral_picture(0, 10.0)


def test_spectral_picture_boundary_edge():
    p = spectral_picture(1, 49.5)
    assert p.edge_eigenvalues == (12j,)


def test_spectrum_config_defaults():
    c = SpectrumConfig()
    assert c.basis_size == 64 and c.real_floor == 1e-4

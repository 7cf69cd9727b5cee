"""Linear stability of the 3-jet zonal flow on a rotating sphere."""
from .basisfn import QuadratureRule, assoc_legendre, gauss_legendre, gegenbauer, legendre_norm_sq
from .critical import (
    CriticalRates,
    KreinSign,
    NeutralMode,
    critical_rates,
    g_of_omega,
    negative_critical_rate,
    neutral_mode_solve,
    search_interval,
)
from .errors import ConfigError, DomainError, ResonanceError, SingularIntegrandError
from .rayleigh import (
    DiscretizationConfig,
    EigenSolution,
    ModeSpec,
    Parity,
    analytic_lambda_at_mu3,
    analytic_lambda_at_mu_minus12,
    assemble,
    dlambda_domega,
    dlambda_dmu,
    eigenvalue_curve,
    lambda1,
    principal_eigenvalue,
    second_mu_derivative_fd,
)
from .stability import (
    IndexCounts,
    Overall,
    SpectralPicture,
    SpectrumConfig,
    StabilityReport,
    Verdict,
    classify,
    continue_unstable_branch,
    energy_form,
    hamiltonian_energy,
    index_counts,
    linearized_matrix,
    refine_unstable_eigenvalue,
    spectral_picture,
    trichotomy_dims,
    unstable_spectrum,
)

__version__ = "0.1.0"

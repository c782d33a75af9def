"""covercorr: correlation asymptotics on lattice covers of finite dynamics.

A numerical laboratory for the asymptotic expansion of correlation
functions of lattice (and lattice x circle) extensions of finite mixing
Markov dynamics: deck-group Fourier transforms, twisted-matrix resonance
surfaces, Green-Kubo covariances, stationary-phase expansion
coefficients, and an exact brute-force correlation oracle that validates
all of them.
"""

from .analysis import (
    CovarianceMatrix,
    amplitude_jet,
    factor_jets,
    green_kubo_covariance,
    hessian_check,
    lambda_jet,
)
from .correlation import (
    CorrelationSeries,
    DecayReport,
    brute_force_correlation,
    decay_report,
    export_series_csv,
    floquet_correlation,
    k_split_correlation,
    mode_quadrature,
    sampling_correlation,
)
from .errors import (
    ConfigError,
    CovercorrError,
    ModelError,
    NumericalError,
    ResourceError,
    SpectralError,
)
from .expansion import (
    DriftComparison,
    ExpansionCoefficients,
    apply_Lj,
    direct_Q,
    drift_expansion,
    expansion_coefficients,
    export_expansion_json,
    g_jet,
    shifted_growth,
    symbol_Lj,
)
from .floquet import (
    FloquetField,
    ThetaGrid,
    export_field_csv,
    floquet_derivative,
    floquet_inverse,
    floquet_transform,
    parseval_pairing,
    transform_field,
)
from .jets import TaylorJet, phase_jet
from .models import (
    CenterCheck,
    CoverObservable,
    Edge,
    FiberCocycle,
    LatticeCocycle,
    MarkovModel,
    build_model,
    center_check,
    delta_observable,
    fiber_average,
    load_model,
    load_observable,
    random_centered_model,
    random_observable,
    save_observable,
    ulam_compile,
)
from .spectrum import (
    EigenTriple,
    ResonanceSurface,
    TwistedMatrix,
    export_surface_csv,
    leading_eigen,
    per_theta_decay_check,
    projector_pairing,
    resonance_surface,
    specrad_scan,
    twisted_matrix,
)

__version__ = "0.1.0"

"""Simulation of induced-coherence tomography with a two-crystal nonlinear interferometer."""

from .coherence import (
    SingleModeSetup,
    build_chain,
    closed_form_coherence,
    degree_of_coherence,
    low_gain_coherence,
    signal_fluxes,
)
from .errors import (
    ConfigError,
    ContractViolation,
    CutoffTooSmall,
    EstimationFailed,
    ICTSError,
    InsufficientSpan,
    InvalidArgument,
    InvalidCoefficients,
    OverlapWarning,
    UndefinedCoherence,
)
from .fock import FockState, OracleReport, oracle_induced_coherence
from .modes import (
    ModeId,
    MomentState,
    SqueezerCoeffs,
    apply_loss,
    apply_two_mode_squeezer,
    cross_correlation,
)
from .spectral import (
    CrystalParams,
    FilterSpec,
    FrequencyGrid,
    GeometryParams,
    PumpParams,
    bogoliubov_coeffs,
    coherence_length,
    g1_of_delay,
    g1_triangle,
    idler_spectrum,
    sigma_from_pump,
    signal_flux,
)
from .tomography import (
    DetectionParams,
    Layer,
    Profile,
    Sample,
    ScanConfig,
    ScanResult,
    estimate_visibility,
    fringe_counts,
    reconstruct_profile,
    simulate_axial_scan,
    visibility_vs_reflectivity_curve,
)

__version__ = "0.1.0"

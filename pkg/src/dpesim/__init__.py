"""Simulator and analysis suite for double-pulse single-photon generation.

The package models a four-level quantum dot (ground, two exciton branches,
biexciton) driven by a two-photon-excitation pulse and a de-excitation
trigger pulse, integrates the Lindblad master equation in the rotating
frame, evaluates single-photon purity and indistinguishability through the
quantum regression theorem, and provides the polarimetry, curve-fitting and
efficiency-budget tools needed to analyze such a source end to end.
"""

from .budget import EfficiencyChain, Stage, chain_efficiency, combined_extinction
from .correlations import (
    IRF,
    SNSPD_IRF,
    SPAD_IRF,
    DecayTrace,
    HistogramSet,
    TwoTimeGrid,
    g1_grid,
    g2_grid,
    g2_zero_pulsed,
    hom_indistinguishability,
    pl_decay_trace,
    rise_metric,
    synthesize_histograms,
)
from .errors import (
    ConfigError,
    DegenerateDataError,
    DpesimError,
    GridError,
    IntegrationError,
    InvariantViolation,
)
from .fitting import (
    CoincidenceHistogram,
    Estimate,
    FitReport,
    correct_visibility,
    fit_exponential,
    fit_lorentzian,
    fit_sinusoid,
    hbt_g2,
    hom_visibility,
)
from .lindblad import (
    DecayRates,
    Drive,
    FourLevelSystem,
    Trajectory,
    basis_state,
    build_hamiltonian,
    build_system,
    collapse_operators,
    emission_operator,
    evolve,
    ground_state,
    validate_density_matrix,
)
from .polarimetry import (
    StokesVector,
    extract_stokes,
    fourier_coefficients,
    hwp_polarizer_scan,
    jones_to_stokes,
    mueller_hwp,
    mueller_polarizer,
    mueller_qwp,
    rotating_qwp_intensities,
    stokes_from_coefficients,
)
from .pulses import PulseSpec, PulseTrain, area, envelope, scale_to_area
from .qd_model import (
    G,
    X_A,
    X_B,
    XX,
    LevelScheme,
    Transition,
    jones_vector,
    laser_energies,
    level_energies,
    synthesize_spectrum,
    transition_table,
)

__version__ = "0.1.0"

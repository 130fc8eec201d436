"""Quasienergy states, spectra, and pulse-train dynamics of kicked 3D rotors."""

from .basis import (
    T_REV,
    BasisSpec,
    RotorSpectrum,
    UnitBridge,
    energy_level,
    energies,
    revival_time_SI,
)
from .coupling import CouplingMatrix, cos2_matrix, quadrature_element
from .floquet import (
    QuasienergySet,
    ScanResult,
    band_structure,
    classify_edge_states,
    discrete_edge_levels,
    edge_overlap,
    planar_reference_spectrum,
    quasienergy_decomposition,
    quasienergy_states,
    reconstruct,
    spectrum_scan,
)
from .observables import (
    AlignmentSpectrum,
    AlignmentTrace,
    ThermalEnsemble,
    alignment_expectation,
    alignment_spectrum,
    alignment_trace,
    ensemble_average,
    mean_initial_J,
    populations,
    required_alignment_samples,
    spectrum_centroid,
    rotational_energy,
    thermal_alignment_trace,
    thermal_ensemble,
    thermal_population_dynamics,
)
from .propagation import (
    KickBuilder,
    OneCycleOperator,
    PulseTrainSpec,
    TruncationError,
    WaveFunction,
    finite_pulse_cycle,
    kick_operator,
    kick_strength_from_pulse,
    one_cycle_operator,
    propagate_train,
)

__version__ = "0.1.0"

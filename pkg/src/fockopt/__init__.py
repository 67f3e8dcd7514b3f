"""Definite-particle-number states in passive linear optics.

Simulation of boson/fermion Fock states through beam-splitter circuits,
classification of states reducible to a single mode, construction of
Bell-violating experiments for everything else, and a local hidden-variable
Monte Carlo that reproduces the statistics of the reducible class.
"""

from .bell import (
    BellTestResult,
    TwoQubitState,
    WitnessExperiment,
    chsh_max,
    dual_rail_measurement_circuit,
    filter_condition_residuals,
    find_witness,
    product_condition,
    replay_witness,
    run_erasure_ys,
    run_filtered_ys,
    witness_from_dict,
    witness_to_dict,
    yurke_stoler_postselect,
)
from .circuits import (
    BeamSplitter,
    Circuit,
    Detector,
    PhaseShifter,
    Swap,
    circuit_from_dict,
    circuit_to_dict,
    circuit_to_unitary,
    detector_statistics,
    fermion_herald_circuit,
    hadamard,
    load_circuit,
    quantum_erasure_circuit,
    reck_decompose,
    run_circuit,
    save_circuit,
    two_particle_filter_circuit,
    yurke_stoler_circuit,
)
from .classify import (
    Classification,
    extract_alpha,
    is_single_mode_type,
    phase_distance,
    single_mode_state,
    transform_alpha,
)
from .errors import (
    DegenerateAmplitude,
    FockoptError,
    InvalidCircuit,
    InvalidFile,
    InvalidOccupation,
    InvalidParameter,
    NotSingleMode,
    NotUnitary,
    PauliForbidden,
    ShapeMismatch,
    ZeroOutcome,
    ZeroState,
)
from .lhv import (
    ComparisonReport,
    EpistemicSpec,
    LhvRunResult,
    OnticState,
    compare_lhv_quantum,
    lhv_beam_splitter,
    lhv_detect,
    lhv_phase_shifter,
    run_lhv_experiment,
    run_shot,
    sample_epistemic,
    shot_generator,
)
from .states import (
    BOSON,
    FERMION,
    FockState,
    Statistics,
    apply_mode_unitary,
    detection_distribution,
    embed,
    fidelity,
    herald,
    inner,
    load_state,
    make_number_state,
    save_state,
    state_from_dict,
    state_to_dict,
    superpose,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

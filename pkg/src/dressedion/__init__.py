"""Simulation toolkit for microwave-dressed trapped-ion qubits.

Four bare levels (|0>, |0'>, |-1>, |+1>) dressed into a protected qutrit,
with schedule-driven time evolution, magnetic-field noise, and a
gradient-mediated sideband gate.
"""

from .core import (
    DIM_BARE,
    DRESSED_LABELS,
    LABELS,
    DressedFrame,
    basis_state,
    dressed_transform,
    population,
    populations,
    tensor_with_fock,
)
from .hamiltonian import (
    CombSpec,
    DriveField,
    IonLevels,
    TrapMode,
    build_mqg,
    build_sqg_interaction,
    build_time_dependent,
    comb_stark_shifts,
    polaron_transform,
    sideband_effective,
)
from .backend import (
    UnitarityError,
    available_backends,
    backend_name,
    set_backend,
)
from .schedule import (
    Schedule,
    StirapParams,
    pi_pulse,
    stirap_hold,
    stirap_ramp_in,
    stirap_ramp_out,
    stirap_schedule,
)
from .noise import (
    DriveNoise,
    OUNoise,
    bare_dephasing_rate,
    bare_ramsey_contrast,
    calibrate_bare_t2,
    ou_decay_time_fitter,
    psd,
    sample_ou,
)
from .propagate import (
    EnsembleResult,
    Trajectory,
    compile_schedule,
    compile_static,
    ensemble_average,
    evolve,
    lindblad_check,
)
from .fitting import FitResult, fit_curve
from .experiments import (
    ExperimentResult,
    FockTruncationError,
    Spam,
    calibrated_noise,
    default_scan_points,
    run_comb,
    run_lifetime,
    run_rabi,
    run_ramsey,
    run_sideband_gate,
    scan_stirap,
    transfer_fidelity,
)
from .config import (
    EXPERIMENTS,
    ConfigError,
    RunConfig,
    explain_config,
    load_document,
    parse_config,
    parse_quantity,
    serialize_config,
)
from .output import csv_bytes, json_bytes, manifest_bytes, write_artifacts

__version__ = "0.1.0"

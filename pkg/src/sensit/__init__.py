"""Qubit-probe dephasing under time-asymmetric dynamical decoupling.

Simulates the signal of a dephasing qubit controlled by pi-pulse trains
against classical quenched Ornstein-Uhlenbeck noise and exact finite spin
baths, and quantifies how far the environment is from a stationary state
through the contrast between a sequence and its time-reversed counterpart.
"""

__version__ = "0.1.0"

from .ou import (
    McEstimate,
    OuParams,
    contrast_analytic,
    decoherence_gaussian,
    kernel_w2,
    sample_paths,
    sigma_functional,
    simulate_signal_mc,
)
from .protocols import (
    ClassicalOuBackend,
    ClassicalOuMcBackend,
    ContrastCurve,
    ContrastPoint,
    QuantumBathBackend,
    SignalUnderflowError,
    default_x_grid,
    experiment_preparation_scan,
    experiment_quench_decay,
    experiment_scrambling_scan,
    sdr_sweep,
    sensit_contrast,
)
from .sequences import (
    ModulationFunction,
    SdrParams,
    evaluate,
    fourier_transform,
    integrate_against,
    make_cpmg,
    make_hahn,
    make_sdr,
    segments,
    time_reverse,
)
from .spinbath import (
    CumulantSet,
    EnvState,
    OtocResult,
    SpinBathSystem,
    build_system,
    correlation_g,
    correlation_set,
    cumulants_from_correlations,
    decoherence_second_order,
    heisenberg_b,
    maximally_mixed,
    otoc_k,
    otoc_k_commutator,
    prepare_quenched_state,
    scramble,
    signal_exact,
    sphere_bath,
    time_reversal_conjugate,
)

__all__ = [
    "__version__",
    "ModulationFunction", "SdrParams", "make_hahn", "make_cpmg", "make_sdr",
    "time_reverse", "evaluate", "segments", "integrate_against", "fourier_transform",
    "OuParams", "McEstimate", "kernel_w2", "decoherence_gaussian",
    "simulate_signal_mc", "sample_paths", "sigma_functional", "contrast_analytic",
    "SpinBathSystem", "EnvState", "CumulantSet", "OtocResult",
    "build_system", "sphere_bath", "maximally_mixed", "heisenberg_b",
    "correlation_g", "correlation_set", "cumulants_from_correlations",
    "signal_exact", "decoherence_second_order", "time_reversal_conjugate",
    "prepare_quenched_state", "scramble", "otoc_k", "otoc_k_commutator",
    "ClassicalOuBackend", "ClassicalOuMcBackend", "QuantumBathBackend",
    "ContrastPoint", "ContrastCurve", "SignalUnderflowError",
    "sensit_contrast", "sdr_sweep", "default_x_grid",
    "experiment_quench_decay", "experiment_preparation_scan", "experiment_scrambling_scan",
]

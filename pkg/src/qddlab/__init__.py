"""qddlab: nested dynamical-decoupling simulation and scaling analysis."""

__version__ = "0.1.0"

from .precision import PrecisionContext
from .mpmatrix import CMatrix, hermitian_eig, kron, norms, singular_values
from .model import BathSpec, HamiltonianModel, assemble, pauli_block, sample_bath
from .sequence import (PulseSchedule, SequenceSpec, compile_spec, free_schedule,
                       parse, pulse_count, qdd, udd, udd_fractions)
from .evolve import EvolutionResult, propagator, run
from .metrics import distance_to_identity, intermediate_errors, single_axis_error
from .scaling import (ScalingFit, SweepConfig, SweepResult, compare_tables,
                      fit_exponent, predicted_exponents, run_sweep)

__all__ = [
    "PrecisionContext", "CMatrix", "hermitian_eig", "kron", "norms",
    "singular_values", "BathSpec", "HamiltonianModel", "assemble",
    "pauli_block", "sample_bath", "PulseSchedule", "SequenceSpec",
    "compile_spec", "free_schedule", "parse", "pulse_count", "qdd", "udd",
    "udd_fractions", "EvolutionResult", "propagator", "run",
    "distance_to_identity", "intermediate_errors", "single_axis_error",
    "ScalingFit", "SweepConfig", "SweepResult", "compare_tables",
    "fit_exponent", "predicted_exponents", "run_sweep", "__version__",
]

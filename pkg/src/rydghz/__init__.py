"""Collective three-level dynamics in a blockaded atomic ensemble.

Simulator and protocol library for adiabatic entanglement generation:
a symmetric-subspace chain Hamiltonian, pulse-schedule primitives, an
adaptive propagator with optional Rydberg decay, composite adiabatic
operations up to a full GHZ-preparation sequence, and sweep tooling for
robustness maps and minimum-pulse-area scaling.
"""

__version__ = "0.1.0"

from .basis import SymmetricBasis, StateVector, build_basis, collective_state, superposition
from .pulses import (
    GaussianPulse,
    ChirpRamp,
    PulseSchedule,
    make_w_schedule,
    make_half_pi_schedule,
    make_half_chirp_schedule,
    make_half_rap_schedule,
    mirror_schedule,
    inverse_schedule,
    dilate_schedule,
)
from .hamiltonian import ChainHamiltonian, DressedFrame, dressed_frame, AnalyticModel
from .fullspace import FullSpaceOracle, run_equivalence_check
from .propagator import (
    IntegratorConfig,
    DecayParams,
    Trajectory,
    propagate,
    propagator_matrix,
    success_probability,
)
from .protocols import (
    WParams,
    ISOLATED_W,
    SUPERPOSITION_TRANSFER,
    w_operation,
    check_w_regime,
    prepare_superposition,
    superposition_transfer,
    ghz_protocol,
    ghz_overlap,
    adiabaticity_metric,
    dark_condensate,
)
from .sweeps import SweepSpec, run_sweep, find_min_area, fit_scaling

__all__ = [
    "__version__",
    "SymmetricBasis",
    "StateVector",
    "build_basis",
    "collective_state",
    "superposition",
    "GaussianPulse",
    "ChirpRamp",
    "PulseSchedule",
    "make_w_schedule",
    "make_half_pi_schedule",
    "make_half_chirp_schedule",
    "make_half_rap_schedule",
    "mirror_schedule",
    "inverse_schedule",
    "dilate_schedule",
    "ChainHamiltonian",
    "DressedFrame",
    "dressed_frame",
    "AnalyticModel",
    "FullSpaceOracle",
    "run_equivalence_check",
    "IntegratorConfig",
    "DecayParams",
    "Trajectory",
    "propagate",
    "propagator_matrix",
    "success_probability",
    "WParams",
    "ISOLATED_W",
    "SUPERPOSITION_TRANSFER",
    "w_operation",
    "check_w_regime",
    "prepare_superposition",
    "superposition_transfer",
    "ghz_protocol",
    "ghz_overlap",
    "adiabaticity_metric",
    "dark_condensate",
    "SweepSpec",
    "run_sweep",
    "find_min_area",
    "fit_scaling",
]

"""Simulation of an adiabatic two-atom Rydberg controlled-phase gate."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .gate import (  # noqa: E402
    GateResult,
    TargetGate,
    calibrate_tau,
    entangling_phase,
    fidelity,
    fidelity_sweep,
    simulate_gate,
    target_gate,
)
from .linalg import EigenDecomposition, eigh, tensor_product  # noqa: E402
from .model import (  # noqa: E402
    PhysicalParams,
    collapse_operators,
    pulse,
    single_atom_hamiltonian,
    two_atom_hamiltonian,
)
from .motion import TrapParams, excitation_probability, motion_report, motional_amplitude  # noqa: E402
from .propagate import SolverConfig, Trajectory, evolve_lindblad, evolve_schrodinger  # noqa: E402
from .spectrum import (  # noqa: E402
    SpectrumBranches,
    adiabaticity_metric,
    dark_state,
    perturbative_phase,
    track_branches,
    two_atom_dark_state,
)

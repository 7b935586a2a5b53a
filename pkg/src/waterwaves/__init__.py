"""Pseudo-spectral water waves with bulk reconstruction and verification."""

from .elliptic import SolverConfig, dno_apply, dno_flat_symbol
from .errors import (
    ConfigError,
    GridMismatch,
    InsufficientSnapshots,
    NoConvergence,
    NumericalAbort,
    ParseError,
    SeparationViolation,
    StripViolation,
    ValidationError,
)
from .evolution import EvolutionParams, SurfaceState, hamiltonian, initial_state, rk4_step, simulate
from .geometry import MapParams, build_domain_map
from .reconstruct import reconstruct_bulk, verify_trajectory
from .spectral import Grid

__version__ = "0.1.0"

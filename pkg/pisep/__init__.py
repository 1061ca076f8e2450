"""
pi-separation: source-channel separation over phase-incoherent multi-user channels.

Regions on the entropy triple, gain conditions, worst-phase Gaussian mutual
information, and desk-scale end-to-end simulations of the separation schemes.
"""

__version__ = "1.0.0"

from .errors import ArgumentError, BudgetError, PiSepError, ValidationError
from .model import (
    ChannelSpec,
    EntropyTriple,
    JointSourcePMF,
    PhaseVector,
    Topology,
    entropy_triple,
    make_dsbs,
    validate_channel,
)
from .regions import Boundary, check_gain_conditions, compute_region, is_feasible
from .minimax import GaussianInputSpec, mi_gaussian, min_theta_mi, verify_independence_optimal
from .channel import PhaseMode, transmit
from .codec import build_schedule, format_schedule
from .simulate import SimOutcome, simulate_mac_e2e, simulate_marc_df

__all__ = [
    "ArgumentError", "BudgetError", "PiSepError", "ValidationError",
    "ChannelSpec", "EntropyTriple", "JointSourcePMF", "PhaseVector", "Topology",
    "entropy_triple", "make_dsbs", "validate_channel",
    "Boundary", "check_gain_conditions", "compute_region", "is_feasible",
    "GaussianInputSpec", "mi_gaussian", "min_theta_mi", "verify_independence_optimal",
    "PhaseMode", "transmit",
    "build_schedule", "format_schedule",
    "SimOutcome", "simulate_mac_e2e", "simulate_marc_df",
]

"""Fixed-apparatus attacks on linear-optical QKD receivers."""

from ._core import BACKEND as KERNEL_BACKEND
from .attack import (
    AttackPlan,
    check_restriction,
    reversed_space,
    synthesize_grouped,
    synthesize_per_outcome,
    verify_plan,
)
from .hilbert import (
    VACUUM,
    BasisState,
    Isometry,
    LabeledSpace,
    ModeLabel,
    StateVector,
    Subspace,
    project_onto,
    states_equal_up_to_global_phase,
    tensor,
)
from .optics import Apparatus, Meaning, OutcomeMap, compose
from .presets import preset, preset_mach_zehnder, preset_polarization

__all__ = [
    "KERNEL_BACKEND",
    "AttackPlan",
    "check_restriction",
    "reversed_space",
    "synthesize_grouped",
    "synthesize_per_outcome",
    "verify_plan",
    "VACUUM",
    "BasisState",
    "Isometry",
    "LabeledSpace",
    "ModeLabel",
    "StateVector",
    "Subspace",
    "project_onto",
    "states_equal_up_to_global_phase",
    "tensor",
    "Apparatus",
    "Meaning",
    "OutcomeMap",
    "compose",
    "preset",
    "preset_mach_zehnder",
    "preset_polarization",
]

__version__ = "0.1.0"

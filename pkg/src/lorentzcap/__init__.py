"""Lorentz quasinorms, one-dimensional p,q-capacitances and conductor-inequality checks."""

from .cap1d import (
    Conductor1D,
    ConductorUnion1D,
    StructureError,
    cap_lower,
    cap_union,
    cap_upper,
    exact_p_cap,
)
from .conductor import ConvexPhi, PLFunction, TGrid, frullani_check, verify_conductor
from .lorentz import LorentzIndex, norm_starstar, quasinorm, quasinorm_via_distribution
from .stepfn import StepFunction, distribution, maximal, rearrangement
from .twoweight import ExponentTuple, Measure1D, criterion_K, inequality_A
from .varsolve import GridProblem, solve_cap

__all__ = [
    "Conductor1D",
    "ConductorUnion1D",
    "StructureError",
    "cap_lower",
    "cap_union",
    "cap_upper",
    "exact_p_cap",
    "ConvexPhi",
    "PLFunction",
    "TGrid",
    "frullani_check",
    "verify_conductor",
    "LorentzIndex",
    "norm_starstar",
    "quasinorm",
    "quasinorm_via_distribution",
    "StepFunction",
    "distribution",
    "maximal",
    "rearrangement",
    "ExponentTuple",
    "Measure1D",
    "criterion_K",
    "inequality_A",
    "GridProblem",
    "solve_cap",
]

__version__ = "0.1.0"

"""Exact simulation of interaction-free measurements in interferometers."""

from .amplitude import TOL, apply, basis_state, inner, is_unitary, tensor
from .engine import (
    DetectorMap,
    JointStats,
    OutcomeDistribution,
    conditional,
    evolve,
    insert_measurement,
    outcome_distribution,
    postselect,
    sample,
)
from .errors import IfmError, ParseError, ValidationError, ZeroProbabilityError
from .optics import (
    Absorb,
    Basis,
    BeamSplitter,
    Circuit,
    JointSink,
    ModeLabel,
    Phase,
    Rotate,
    Swap,
    circuit_operator,
    element_operator,
    validate,
)
from .twostate import TwoStateTrace, abl, presence, trace

__version__ = "0.1.0"

__all__ = [
    "TOL",
    "apply",
    "basis_state",
    "inner",
    "is_unitary",
    "tensor",
    "DetectorMap",
    "JointStats",
    "OutcomeDistribution",
    "conditional",
    "evolve",
    "insert_measurement",
    "outcome_distribution",
    "postselect",
    "sample",
    "IfmError",
    "ParseError",
    "ValidationError",
    "ZeroProbabilityError",
    "Absorb",
    "Basis",
    "BeamSplitter",
    "Circuit",
    "JointSink",
    "ModeLabel",
    "Phase",
    "Rotate",
    "Swap",
    "circuit_operator",
    "element_operator",
    "validate",
    "TwoStateTrace",
    "abl",
    "presence",
    "trace",
]

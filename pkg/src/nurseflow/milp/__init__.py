"""Constraint systems and model builders."""

from .builders import (
    VARIABLE_KINDS,
    Block,
    build_deterministic,
    build_two_stage_extensive,
    build_two_stage_tp,
    decode,
    decode_block,
    fix_aggregates,
    fix_blocks,
    fix_roster,
    initial_block,
    node_blocks,
)
from .system import ConstraintSystem, Domain, LinearConstraint, Sense, Variable

__all__ = [
    "VARIABLE_KINDS", "Block", "build_deterministic", "build_two_stage_extensive",
    "build_two_stage_tp", "decode", "decode_block", "fix_aggregates", "fix_blocks", "fix_roster",
    "initial_block", "node_blocks", "ConstraintSystem", "Domain", "LinearConstraint", "Sense",
    "Variable",
]

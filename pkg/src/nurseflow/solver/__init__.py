"""Reference branch-and-bound solver and adapters for external MILP engines."""

from .bnb import Solution, SolveLimits, UnboundedError, relative_gap, solve
from .check import IntegrityError, verify
from .external import AdapterError, EngineConfig, solve_external

__all__ = ["Solution", "SolveLimits", "UnboundedError", "IntegrityError", "relative_gap",
           "solve", "verify", "AdapterError", "EngineConfig", "solve_external"]

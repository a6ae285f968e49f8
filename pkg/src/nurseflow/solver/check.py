"""Independent feasibility re-check of solver output."""

from __future__ import annotations

from typing import Sequence

from ..milp.system import ConstraintSystem


class IntegrityError(RuntimeError):
    """A returned assignment violates the system it claims to solve."""


def verify(system: ConstraintSystem, values: Sequence[float], tol: float = 1e-6) -> None:
    """Re-evaluate every row term by term (no matrix path) and raise on any violation."""
    if len(values) != system.num_vars:
        raise IntegrityError(f"assignment has {len(values)} values, system has {system.num_vars}")
    bad = system.infeasibilities(values, tol)
    if bad:
        shown = ", ".join(bad[:5])
        raise IntegrityError(f"{len(bad)} violated conditions, e.g. {shown}")

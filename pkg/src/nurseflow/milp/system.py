"""Solver-agnostic mixed-integer linear systems."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy import sparse


class Domain(enum.Enum):
    BINARY = "binary"
    INTEGER = "integer"
    CONTINUOUS = "continuous"

    @property
    def integral(self) -> bool:
        return self is not Domain.CONTINUOUS


class Sense(enum.Enum):
    LE = "<="
    EQ = "="
    GE = ">="


@dataclass(frozen=True)
class Variable:
    kind: str
    index: tuple
    domain: Domain
    lb: float = 0.0
    ub: float = math.inf

    @property
    def name(self) -> str:
        return "_".join([self.kind, *map(str, self.index)])


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple[tuple[int, float], ...]
    sense: Sense
    rhs: float
    name: str = ""

    def activity(self, values: np.ndarray) -> float:
        return math.fsum(c * values[j] for j, c in self.terms)

    def violation(self, values: np.ndarray) -> float:
        a = self.activity(values)
        if self.sense is Sense.LE:
            return max(0.0, a - self.rhs)
        if self.sense is Sense.GE:
            return max(0.0, self.rhs - a)
        return abs(a - self.rhs)


def merge_terms(terms: Iterable[tuple[int, float]]) -> tuple[tuple[int, float], ...]:
    acc: dict[int, float] = {}
    for j, c in terms:
        acc[j] = acc.get(j, 0.0) + float(c)
    return tuple((j, c) for j, c in acc.items() if c != 0.0)


@dataclass(frozen=True)
class Compiled:
    """Matrix form: row_lo <= A x <= row_hi, lb <= x <= ub, minimize c.x + constant."""

    c: np.ndarray
    A: sparse.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integral: np.ndarray
    constant: float


class ConstraintSystem:
    """Registry of variables and linear constraints with a minimization objective."""

    def __init__(self, name: str = ""):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[LinearConstraint] = []
        self.objective: dict[int, float] = {}
        self.constant = 0.0
        self.meta: dict = {}
        self._index: dict[tuple, int] = {}
        self._compiled: Optional[Compiled] = None

    # -- construction -----------------------------------------------------
    def add_var(self, kind: str, index: tuple, domain: Domain, lb: float = 0.0,
                ub: Optional[float] = None) -> int:
        key = (kind, tuple(index))
        if key in self._index:
            raise ValueError(f"duplicate variable {key}")
        if ub is None:
            ub = 1.0 if domain is Domain.BINARY else math.inf
        self.variables.append(Variable(kind, tuple(index), domain, float(lb), float(ub)))
        self._index[key] = len(self.variables) - 1
        self._compiled = None
        return self._index[key]

    def add_constraint(self, terms: Iterable[tuple[int, float]], sense: Sense | str,
                       rhs: float, name: str = "") -> int:
        sense = sense if isinstance(sense, Sense) else Sense(sense)
        merged = merge_terms(terms)
        for j, _ in merged:
            if not 0 <= j < len(self.variables):
                raise ValueError(f"constraint {name!r} references unknown variable {j}")
        self.constraints.append(LinearConstraint(merged, sense, float(rhs), name))
        self._compiled = None
        return len(self.constraints) - 1

    def add_objective(self, terms: Iterable[tuple[int, float]]) -> None:
        for j, c in terms:
            if not 0 <= j < len(self.variables):
                raise ValueError(f"objective references unknown variable {j}")
            self.objective[j] = self.objective.get(j, 0.0) + float(c)
        self._compiled = None

    # -- lookup -------------------------------------------------------------
    def var(self, kind: str, *index) -> int:
        return self._index[(kind, tuple(index))]

    def has_var(self, kind: str, *index) -> bool:
        return (kind, tuple(index)) in self._index

    def of_kind(self, kind: str) -> list[int]:
        return [j for j, v in enumerate(self.variables) if v.kind == kind]

    @property
    def kinds(self) -> set[str]:
        return {v.kind for v in self.variables}

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    # -- derived systems ------------------------------------------------------
    def with_bounds(self, bounds: Mapping[int, tuple[float, float]]) -> "ConstraintSystem":
        """Copy sharing constraints, with selected variable bounds replaced."""
        out = ConstraintSystem(self.name)
        out.variables = list(self.variables)
        for j, (lo, hi) in bounds.items():
            out.variables[j] = replace(out.variables[j], lb=float(lo), ub=float(hi))
        out.constraints = self.constraints
        out.objective = dict(self.objective)
        out.constant = self.constant
        out.meta = dict(self.meta)
        out._index = self._index
        return out

    def fixed(self, values: Mapping[int, float]) -> "ConstraintSystem":
        return self.with_bounds({j: (v, v) for j, v in values.items()})

    # -- evaluation -----------------------------------------------------------
    def evaluate(self, values: Sequence[float]) -> float:
        return math.fsum([self.constant] + [c * values[j] for j, c in self.objective.items()])

    def infeasibilities(self, values: Sequence[float], tol: float = 1e-6) -> list[str]:
        """Names of constraints, bounds or integrality conditions violated beyond ``tol``."""
        values = np.asarray(values, dtype=float)
        bad = []
        for j, v in enumerate(self.variables):
            x = values[j]
            if x < v.lb - tol or x > v.ub + tol:
                bad.append(f"bound:{v.name}")
            if v.domain.integral and abs(x - round(x)) > tol:
                bad.append(f"integrality:{v.name}")
        for k, con in enumerate(self.constraints):
            if con.violation(values) > tol:
                bad.append(con.name or f"c{k}")
        return bad

    def compile(self) -> Compiled:
        if self._compiled is None:
            n, m = len(self.variables), len(self.constraints)
            c = np.zeros(n)
            for j, coef in self.objective.items():
                c[j] = coef
            rows, cols, vals = [], [], []
            lo = np.full(m, -np.inf)
            hi = np.full(m, np.inf)
            for r, con in enumerate(self.constraints):
                for j, coef in con.terms:
                    rows.append(r)
                    cols.append(j)
                    vals.append(coef)
                if con.sense is not Sense.GE:
                    hi[r] = con.rhs
                if con.sense is not Sense.LE:
                    lo[r] = con.rhs
            A = sparse.csr_matrix((vals, (rows, cols)), shape=(m, n))
            self._compiled = Compiled(
                c, A, lo, hi,
                np.array([v.lb for v in self.variables], dtype=float),
                np.array([v.ub for v in self.variables], dtype=float),
                np.array([v.domain.integral for v in self.variables], dtype=bool),
                self.constant,
            )
        return self._compiled

    def values_by_name(self, values: Sequence[float]) -> dict[str, float]:
        return {v.name: float(values[j]) for j, v in enumerate(self.variables)}

    def index_by_name(self) -> dict[str, int]:
        return {v.name: j for j, v in enumerate(self.variables)}

    def unreferenced(self) -> list[str]:
        used = set(self.objective)
        for con in self.constraints:
            used.update(j for j, _ in con.terms)
        return [v.name for j, v in enumerate(self.variables) if j not in used]

    def summary(self) -> dict:
        doms = [v.domain for v in self.variables]
        return {
            "variables": len(self.variables),
            "binary": sum(d is Domain.BINARY for d in doms),
            "integer": sum(d is Domain.INTEGER for d in doms),
            "continuous": sum(d is Domain.CONTINUOUS for d in doms),
            "constraints": len(self.constraints),
        }

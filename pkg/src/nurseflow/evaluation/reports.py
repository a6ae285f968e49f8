"""Coverage-gap, flexibility/regularity and reward-distribution reports with CSV forms.

Every CSV writer emits floats with ``repr`` so that parsing a report and
writing it again reproduces the bytes exactly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..domain.types import SLOTS, Instance, Roster, WorkPolicy
from .costs import coverage_gap


def _fmt(v: float) -> str:
    return repr(float(v))


def _rows(text: str) -> list[list[str]]:
    return list(csv.reader(io.StringIO(text)))


def _emit(rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


# -- coverage gaps ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoverageGapReport:
    gap: np.ndarray  # (3, D) supply minus demand

    @property
    def mismatches(self) -> int:
        return int(np.count_nonzero(self.gap))

    @property
    def mean_abs_per_day(self) -> float:
        return float(np.abs(self.gap).sum() / self.gap.shape[1])

    @property
    def envelope(self) -> tuple[int, int]:
        return int(self.gap.min()), int(self.gap.max())

    def to_csv(self) -> str:
        D = self.gap.shape[1]
        rows = [["slot", *(f"d{d}" for d in range(D))]]
        rows += [[j.name, *map(int, self.gap[int(j)])] for j in SLOTS]
        return _emit(rows)

    @classmethod
    def from_csv(cls, text: str) -> "CoverageGapReport":
        rows = _rows(text)
        gap = np.array([[int(v) for v in r[1:]] for r in rows[1:]], dtype=np.int64)
        return cls(gap)

    def summary(self) -> dict:
        lo, hi = self.envelope
        return {"mismatches": self.mismatches, "mean_abs_per_day": self.mean_abs_per_day,
                "min_gap": lo, "max_gap": hi}


def coverage_gap_report(roster: Roster, demand: np.ndarray, instance: Instance) -> CoverageGapReport:
    """Signed supply minus demand per slot and day."""
    return CoverageGapReport(coverage_gap(roster.assign, demand, instance.catalog.slot_of))


# -- flexibility and regularity --------------------------------------------

@dataclass(frozen=True)
class FlexibilityPoint:
    case: str
    regularity: float
    flexibility: float
    granted: int
    requests: int
    flagged: bool  # no requests at all; flexibility reported as 1 by convention


def regularity_level(instance: Instance) -> float:
    regular = sum(n.policy in (WorkPolicy.p1, WorkPolicy.p2) for n in instance.nurses)
    return regular / instance.num_nurses


def flexibility_level(roster: Roster, instance: Instance) -> tuple[float, int, int, bool]:
    req = instance.request_mask()
    total = int(req.sum())
    granted = int((req & (roster.assign > 0)).sum())
    if total == 0:
        return 1.0, 0, 0, True
    return granted / total, granted, total, False


def flexibility_regularity(rosters: Sequence[Roster], instances: Sequence[Instance]) -> list[FlexibilityPoint]:
    out = []
    for roster, inst in zip(rosters, instances, strict=True):
        flex, granted, total, flagged = flexibility_level(roster, inst)
        out.append(FlexibilityPoint(inst.name, regularity_level(inst), flex, granted, total, flagged))
    return out


FLEX_HEADER = ["case", "regularity", "flexibility", "granted", "requests", "flagged"]


def flexibility_to_csv(points: Sequence[FlexibilityPoint]) -> str:
    rows = [FLEX_HEADER]
    rows += [[p.case, _fmt(p.regularity), _fmt(p.flexibility), p.granted, p.requests, int(p.flagged)]
             for p in points]
    return _emit(rows)


def flexibility_from_csv(text: str) -> list[FlexibilityPoint]:
    rows = _rows(text)
    if rows[0] != FLEX_HEADER:
        raise ValueError(f"unexpected header {rows[0]}")
    return [FlexibilityPoint(r[0], float(r[1]), float(r[2]), int(r[3]), int(r[4]), bool(int(r[5])))
            for r in rows[1:]]


def mean_flexibility_by_level(points: Sequence[FlexibilityPoint]) -> dict[float, float]:
    groups: dict[float, list[float]] = {}
    for p in points:
        groups.setdefault(round(p.regularity, 9), []).append(p.flexibility)
    return {k: float(np.mean(v)) for k, v in sorted(groups.items())}


# -- reward distribution ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class RewardDistribution:
    thresholds: np.ndarray  # sorted distinct reward values
    crf: np.ndarray  # share of samples >= threshold

    def at(self, t: float) -> float:
        """Cumulative relative frequency at an arbitrary threshold."""
        k = int(np.searchsorted(self.thresholds, t, side="left"))
        return float(self.crf[k]) if k < self.crf.size else 0.0

    def to_csv(self) -> str:
        return _emit([["threshold", "crf"],
                      *([_fmt(t), _fmt(c)] for t, c in zip(self.thresholds, self.crf))])

    @classmethod
    def from_csv(cls, text: str) -> "RewardDistribution":
        rows = _rows(text)[1:]
        return cls(np.array([float(r[0]) for r in rows]), np.array([float(r[1]) for r in rows]))


def reward_distribution(samples: Sequence[float]) -> RewardDistribution:
    """Share of samples whose reward equals or exceeds each observed value."""
    r = np.sort(np.asarray(samples, dtype=float))
    if r.size == 0:
        raise ValueError("reward distribution needs at least one sample")
    if not np.all(np.isfinite(r)):
        raise ValueError("rewards must be finite")
    values, first = np.unique(r, return_index=True)
    return RewardDistribution(values, (r.size - first) / r.size)


def share_above(samples: Sequence[float], threshold: float) -> float:
    s = np.asarray(samples, dtype=float)
    return float(np.mean(s > threshold)) if s.size else math.nan


# -- roster grid ----------------------------------------------------------------

NOT_WORKING = "NW"


def roster_to_csv(roster: Roster, instance: Instance, first_day: int = 0) -> str:
    """Nurse x day grid with the shift id worked, or NW.

    Columns are labelled with absolute day indices starting at ``first_day``.
    """
    ids = instance.catalog.ids
    D = roster.shape[1]
    rows = [["nurse", *(f"d{first_day + d}" for d in range(D))]]
    for i, nurse in enumerate(instance.nurses):
        row = [nurse.id]
        for d in range(D):
            s = np.flatnonzero(roster.assign[i, d])
            row.append(ids[int(s[0])] if s.size else NOT_WORKING)
        rows.append(row)
    return _emit(rows)


def roster_from_csv(text: str, instance: Instance, demand=None) -> Roster:
    """Inverse of ``roster_to_csv``; a nurse is scheduled iff any cell is worked."""
    rows = _rows(text)
    if not rows or rows[0][:1] != ["nurse"]:
        raise ValueError("roster CSV must start with a 'nurse' header column")
    ids = list(instance.catalog.ids)
    D = len(rows[0]) - 1
    body = rows[1:]
    if len(body) != instance.num_nurses:
        raise ValueError(f"roster has {len(body)} nurse rows, instance has {instance.num_nurses}")
    x = np.zeros((instance.num_nurses, D, instance.num_shifts), np.int8)
    for i, (row, nurse) in enumerate(zip(body, instance.nurses)):
        if row[0] != nurse.id or len(row) != D + 1:
            raise ValueError(f"row {i + 1} does not match nurse {nurse.id} over {D} days")
        for d, cell in enumerate(row[1:]):
            if cell == NOT_WORKING:
                continue
            if cell not in ids:
                raise ValueError(f"unknown shift {cell!r} for nurse {nurse.id} on day {d}")
            x[i, d, ids.index(cell)] = 1
    first = int(rows[0][1][1:]) if D else 0
    if demand is None:
        demand = instance.demand[:, first:first + D]
    return Roster.from_assign(x, demand, instance.catalog.slot_of)

"""Seeded case generation and instance file I/O.

Random streams: every draw comes from a PCG64 generator seeded with
``SeedSequence(seed, spawn_key=key)``. Demand of stage ``h`` (1-based),
realization ``r`` uses ``key = (h, r)``; the request list of nurse ``i`` uses
``key = (0, i)``. The split keeps each stream independent of the others, so
changing e.g. the number of nurses never perturbs the demand draws.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import __version__
from .domain import (
    SLOTS,
    CostParams,
    Horizon,
    Instance,
    ModelError,
    NurseProfile,
    Shift,
    ShiftCatalog,
    Slot,
    WorkPolicy,
    default_catalog,
    toy_catalog,
)
from .scenario import Realization, ScenarioTree, build_tree

FORMAT = "nurseflow-instance"
FORMAT_VERSION = 1

DEFAULT_COSTS = CostParams(staffing=10.0, coverage=5.0, request=3.0,
                           violation=(2.0, 4.0, 6.0, 8.0), understaffing=8.0,
                           overstaffing=2.0, adjustment=1.0)

_P2_SLOTS = ((Slot.AM, Slot.PM), (Slot.PM, Slot.N), (Slot.AM, Slot.N))
_POLICIES = (WorkPolicy.p1, WorkPolicy.p2, WorkPolicy.p3)


class InstanceFormatError(ModelError):
    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


@dataclass(frozen=True)
class CaseSpec:
    nurse_count: int
    demand_scale: float
    stage_count: int = 2
    seed: int = 0
    base_demand: tuple[int, int, int] = (5, 6, 4)
    high_delta: int = 4
    low_delta: int = -2
    p_high: float = 0.6
    p_low: float = 0.4
    noise_sd: float = 2.0
    days_per_stage: int = 7
    start_weekday: int = 0
    requests_per_nurse: int = 2
    catalog: str = "default"  # or "toy"
    costs: CostParams = field(default=DEFAULT_COSTS)

    def validate(self) -> None:
        if self.nurse_count < 1:
            raise ModelError("nurse_count must be >= 1")
        if self.demand_scale < 0:
            raise ModelError("demand_scale must be >= 0")
        if self.stage_count < 1 or self.days_per_stage < 1:
            raise ModelError("stage_count and days_per_stage must be >= 1")
        if abs(self.p_high + self.p_low - 1.0) > 1e-12 or min(self.p_high, self.p_low) < 0:
            raise ModelError("p_high + p_low must equal 1")
        if self.noise_sd < 0:
            raise ModelError("noise_sd must be >= 0")
        if self.catalog not in ("default", "toy"):
            raise ModelError(f"unknown catalog {self.catalog!r}")


def expected_demand(spec: CaseSpec) -> np.ndarray:
    """Per-slot expected demand: probability mix of the high/low branches, rounded up.

    Both branches are clamped at zero before mixing. Exact rational arithmetic
    keeps integral mixes from picking up a spurious ceiling step.
    """
    eta = Fraction(spec.demand_scale).limit_denominator(10**9)
    ph = Fraction(spec.p_high).limit_denominator(10**9)
    pl = Fraction(spec.p_low).limit_denominator(10**9)
    out = []
    for d0 in spec.base_demand:
        scaled = eta * d0
        high = max(Fraction(0), scaled + spec.high_delta)
        low = max(Fraction(0), scaled + spec.low_delta)
        out.append(max(0, math.ceil(ph * high + pl * low)))
    return np.array(out, dtype=np.int64)


def round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(x) + 0.5).astype(np.int64)


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _preferred(k: int, policy: WorkPolicy, catalog: ShiftCatalog) -> frozenset[str]:
    if policy is WorkPolicy.p3:
        slots = SLOTS
    elif policy is WorkPolicy.p1:
        slots = (SLOTS[(k // 3) % 3],)
    else:
        slots = _P2_SLOTS[(k // 3) % 3]
    return frozenset(s.id for s in catalog if s.slot in slots)


def default_nurse(k: int, weeks: int, catalog: ShiftCatalog, policy: Optional[WorkPolicy] = None,
                  preferred: Optional[frozenset[str]] = None) -> NurseProfile:
    policy = policy or _POLICIES[k % 3]
    return NurseProfile(
        id=f"n{k}", policy=policy, min_hours=0.0, max_hours=40.0 * weeks,
        min_rest_days_per_week=1, max_consecutive_work=5, max_weekend_work=2 * weeks,
        max_violations=4, preferred_shifts=preferred or _preferred(k, policy, catalog),
    )


def draw_requests(seed: int, k: int, nurse: NurseProfile, num_days: int, count: int,
                  catalog: ShiftCatalog) -> frozenset[tuple[int, str]]:
    if count <= 0:
        return frozenset()
    rng = stream(seed, 0, k)
    prefs = [s.id for s in catalog if s.id in nurse.preferred_shifts]
    days = rng.choice(num_days, size=min(count, num_days), replace=False)
    return frozenset((int(d), prefs[int(rng.integers(len(prefs)))]) for d in sorted(days))


def generate_case(spec: CaseSpec) -> Instance:
    """Instance with |I| nurses and a two-branch (high/low) scenario tree per stage."""
    spec.validate()
    catalog = default_catalog() if spec.catalog == "default" else toy_catalog()
    num_days = spec.stage_count * spec.days_per_stage
    horizon = Horizon(num_days, (spec.days_per_stage,) * spec.stage_count, spec.start_weekday)
    weeks = horizon.num_weeks
    nurses = []
    for k in range(spec.nurse_count):
        base = default_nurse(k, weeks, catalog)
        reqs = draw_requests(spec.seed, k, base, num_days, spec.requests_per_nurse, catalog)
        nurses.append(replace(base, requests=reqs))
    de = expected_demand(spec)
    planning = np.repeat(de[:, None], num_days, axis=1)
    stages = []
    for h in range(1, spec.stage_count + 1):
        reals = []
        for r, (label, delta, prob) in enumerate(
                (("high", spec.high_delta, spec.p_high), ("low", spec.low_delta, spec.p_low))):
            rng = stream(spec.seed, h, r)
            mean = np.repeat((de + delta)[:, None], spec.days_per_stage, axis=1).astype(float)
            draw = rng.normal(mean, spec.noise_sd) if spec.noise_sd > 0 else mean
            reals.append(Realization(label, prob, np.maximum(round_half_up(draw), 0)))
        stages.append(reals)
    name = f"{spec.nurse_count}-{spec.demand_scale:g}-s{spec.seed}"
    return Instance(horizon, tuple(nurses), catalog, spec.costs, spec.nurse_count,
                    planning, build_tree(stages), name)


def regularity_case(spec: CaseSpec, level: float) -> Instance:
    """Case whose first ``round(level * |I|)`` nurses follow a restrictive policy.

    Every nurse may work every shift and draws requests over the whole
    catalog, so the policy cap alone limits which requests can be granted.
    Regular nurses alternate p1, p2 by index; the rest follow p3. Raising the
    level only turns further nurses regular, keeping the cases nested.
    """
    if not 0.0 <= level <= 1.0:
        raise ModelError("regularity level must lie in [0, 1]")
    inst = generate_case(spec)
    regular = int(math.floor(level * inst.num_nurses + 0.5))
    everything = frozenset(inst.catalog.ids)
    nurses = []
    for k, n in enumerate(inst.nurses):
        policy = (WorkPolicy.p1 if k % 2 == 0 else WorkPolicy.p2) if k < regular else WorkPolicy.p3
        open_nurse = replace(n, policy=policy, preferred_shifts=everything, requests=frozenset())
        reqs = draw_requests(spec.seed, k, open_nurse, inst.num_days, spec.requests_per_nurse,
                             inst.catalog)
        nurses.append(replace(open_nurse, requests=reqs))
    return replace(inst.with_nurses(nurses), name=f"{inst.name}-r{level:g}")


# ---------------------------------------------------------------------------
# file format


def _hm(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def _parse_hm(text: str) -> int:
    h, m = text.split(":")
    return int(h) * 60 + int(m)


def instance_to_dict(instance: Instance, provenance: Optional[dict] = None) -> dict:
    c = instance.costs
    doc = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "name": instance.name,
        "total_nurses": instance.total_nurses,
        "horizon": {
            "num_days": instance.horizon.num_days,
            "stage_lengths": list(instance.horizon.stage_lengths),
            "start_weekday": instance.horizon.start_weekday,
        },
        "catalog": [
            {"id": s.id, "slot": s.slot.name, "start": _hm(s.start), "end": _hm(s.end),
             "effective_hours": s.effective_hours}
            for s in instance.catalog
        ],
        "costs": {
            "staffing": c.staffing, "coverage": c.coverage, "request": c.request,
            "violation": list(c.violation), "understaffing": c.understaffing,
            "overstaffing": c.overstaffing, "adjustment": c.adjustment,
        },
        "nurses": [
            {
                "id": n.id, "policy": n.policy.name, "min_hours": n.min_hours,
                "max_hours": n.max_hours, "min_rest_days_per_week": n.min_rest_days_per_week,
                "max_consecutive_work": n.max_consecutive_work,
                "max_weekend_work": n.max_weekend_work, "max_violations": n.max_violations,
                "preferred_shifts": [s for s in instance.catalog.ids if s in n.preferred_shifts],
                "requests": [[d, s] for d, s in sorted(n.requests)],
            }
            for n in instance.nurses
        ],
        "demand": instance.demand.tolist(),
        "scenario_tree": None,
    }
    if instance.tree is not None:
        doc["scenario_tree"] = {"stages": [
            [{"label": r.label, "probability": r.probability, "demand": r.demand.tolist()}
             for r in rs]
            for rs in instance.tree.stages
        ]}
    if provenance is not None:
        doc["provenance"] = provenance
    return doc


def load_schema() -> dict:
    text = resources.files("nurseflow").joinpath("data/instance.schema.json").read_text()
    return json.loads(text)


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def instance_from_dict(doc: dict) -> Instance:
    try:
        jsonschema.validate(doc, load_schema())
    except jsonschema.ValidationError as e:
        raise InstanceFormatError(e.message, _pointer(e.absolute_path)) from None
    try:
        catalog = ShiftCatalog(tuple(
            Shift(s["id"], Slot[s["slot"]], _parse_hm(s["start"]), _parse_hm(s["end"]),
                  float(s["effective_hours"]))
            for s in doc["catalog"]))
        c = doc["costs"]
        costs = CostParams(float(c["staffing"]), float(c["coverage"]), float(c["request"]),
                           tuple(float(v) for v in c["violation"]),
                           float(c.get("understaffing", 0.0)), float(c.get("overstaffing", 0.0)),
                           float(c.get("adjustment", 0.0)))
        h = doc["horizon"]
        horizon = Horizon(h["num_days"], tuple(h.get("stage_lengths") or ()),
                          h.get("start_weekday", 0))
        nurses = tuple(
            NurseProfile(
                id=n["id"], policy=WorkPolicy[n["policy"]], min_hours=float(n["min_hours"]),
                max_hours=float(n["max_hours"]),
                min_rest_days_per_week=n["min_rest_days_per_week"],
                max_consecutive_work=n["max_consecutive_work"],
                max_weekend_work=n["max_weekend_work"], max_violations=n["max_violations"],
                preferred_shifts=frozenset(n["preferred_shifts"]),
                requests=frozenset((int(d), s) for d, s in n.get("requests", [])),
            )
            for n in doc["nurses"])
        tree: Optional[ScenarioTree] = None
        if doc.get("scenario_tree"):
            tree = build_tree([
                [Realization(r["label"], float(r["probability"]), np.array(r["demand"]))
                 for r in rs]
                for rs in doc["scenario_tree"]["stages"]])
        return Instance(horizon, nurses, catalog, costs, doc["total_nurses"],
                        np.array(doc["demand"], dtype=np.int64), tree, doc.get("name", ""))
    except InstanceFormatError:
        raise
    except ModelError as e:
        raise InstanceFormatError(str(e)) from None


def dumps_instance(instance: Instance, provenance: Optional[dict] = None) -> str:
    return json.dumps(instance_to_dict(instance, provenance), indent=2) + "\n"


def save_instance(instance: Instance, path, provenance: Optional[dict] = None) -> None:
    Path(path).write_text(dumps_instance(instance, provenance))


def load_instance(path) -> Instance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"invalid JSON: {e.msg} (line {e.lineno})") from None
    return instance_from_dict(doc)


def provenance_stamp(spec: CaseSpec) -> dict:
    fields = {k: v for k, v in spec.__dict__.items() if k != "costs"}
    fields["base_demand"] = list(spec.base_demand)
    return {"tool": "nurseflow", "version": __version__, "seed": spec.seed, "spec": fields}

"""Adapter for external MILP engines driven through an LP file and a subprocess.

The command is a template list; ``{lp}``, ``{sol}`` and ``{time}`` are
substituted. The default template targets CBC's command line. Solutions are
read back in CBC's solution-file format and re-verified against the system
before they are returned.
"""

from __future__ import annotations

import json
import math
import os
import re
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..milp.lpformat import write_lp
from ..milp.system import ConstraintSystem
from .bnb import Solution, SolveLimits, _finish
from .check import IntegrityError

ENV_VAR = "NURSEFLOW_MILP_ENGINE"
CBC_TEMPLATE = ["{engine}", "{lp}", "sec", "{time}", "ratio", "{gap}", "solve", "solu", "{sol}"]


class AdapterError(RuntimeError):
    """The external engine is missing, crashed, or wrote an unreadable solution."""


@dataclass
class EngineConfig:
    engine: str
    command: list[str] = field(default_factory=lambda: list(CBC_TEMPLATE))

    @classmethod
    def from_env(cls) -> "EngineConfig":
        """Engine path from ``NURSEFLOW_MILP_ENGINE``, or a JSON config file it points to."""
        value = os.environ.get(ENV_VAR, "").strip()
        if not value:
            found = shutil.which("cbc")
            if found is None:
                raise AdapterError(f"no external engine: set {ENV_VAR} or put cbc on PATH")
            return cls(found)
        if value.endswith(".json"):
            return cls.from_file(value)
        return cls(value)

    @classmethod
    def from_file(cls, path: str | Path) -> "EngineConfig":
        data = json.loads(Path(path).read_text())
        return cls(data["engine"], list(data.get("command", CBC_TEMPLATE)))

    def argv(self, lp: str, sol: str, limit: float, gap: float) -> list[str]:
        t = "100000000" if not math.isfinite(limit) else f"{max(limit, 1.0):g}"
        subs = {"engine": self.engine, "lp": lp, "sol": sol, "time": t, "gap": f"{gap:g}"}
        return [tok.format(**subs) for tok in self.command]


def parse_cbc_solution(text: str, names: dict[str, int], n: int) -> tuple[str, np.ndarray | None, float]:
    """Return (status, values, objective) from a CBC solution file.

    Variables absent from the file are zero, matching CBC's default of
    printing only nonzero columns.
    """
    lines = text.strip().splitlines()
    if not lines:
        raise AdapterError("empty solution file")
    head = lines[0].lower()
    m = re.search(r"objective value\s+(\S+)", head)
    obj = float(m.group(1)) if m else math.nan
    if "infeasible" in head:
        return "infeasible", None, math.inf
    if "unbounded" in head:
        return "unbounded", None, -math.inf
    x = np.zeros(n)
    body = lines[1:]
    for ln in body:
        toks = ln.split()
        if toks and toks[0] == "**":  # CBC marks infeasible rows/columns this way
            toks = toks[1:]
        if len(toks) < 3:
            raise AdapterError(f"bad solution line {ln!r}")
        name, val = toks[1], toks[2]
        if name not in names:
            raise AdapterError(f"solution names unknown variable {name!r}")
        x[names[name]] = float(val)
    if head.startswith("optimal"):
        return "optimal", x, obj
    if "stopped" in head:
        return ("feasible", x, obj) if "objective value" in head else ("limit", None, math.nan)
    raise AdapterError(f"unrecognized engine status line {lines[0]!r}")


def _lower_bound(log: str) -> float:
    for pattern in (r"Lower bound:\s+(\S+)", r"best possible\s+(\S+)"):
        hits = re.findall(pattern, log)
        if hits:
            try:
                return float(hits[-1].rstrip(","))
            except ValueError:
                pass
    return -math.inf


def solve_external(system: ConstraintSystem, limits: SolveLimits = SolveLimits(),
                   config: EngineConfig | None = None) -> Solution:
    """Solve by writing an LP file and running the external engine on it."""
    config = config or EngineConfig.from_env()
    comp = system.compile()
    names = system.index_by_name()
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory(prefix="nurseflow-") as tmp:
        lp = os.path.join(tmp, "model.lp")
        sol = os.path.join(tmp, "model.sol")
        with open(lp, "w") as fh:
            write_lp(system, fh)
        argv = config.argv(lp, sol, limits.time_limit, limits.gap_target)
        try:
            proc = subprocess.run(argv, capture_output=True, text=True,
                                  timeout=None if not math.isfinite(limits.time_limit)
                                  else limits.time_limit + 60)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise AdapterError(f"engine failed to run: {exc}") from exc
        if not os.path.exists(sol):
            raise AdapterError(f"engine wrote no solution (exit {proc.returncode}): {proc.stdout[-400:]}")
        status, x, obj = parse_cbc_solution(Path(sol).read_text(), names, system.num_vars)
    if x is None:
        return _finish(system, status, None, obj, obj, 0, t0, "external")
    x = np.clip(np.where(comp.integral, np.round(x), x), comp.lb, comp.ub)
    if system.infeasibilities(x, 1e-6):
        raise IntegrityError("external engine returned an assignment that fails re-validation")
    bound = math.inf if status == "optimal" else _lower_bound(proc.stdout) + system.constant
    return _finish(system, status, x, obj, bound, 0, t0, "external")

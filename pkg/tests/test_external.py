import math
import os
import shutil
from pathlib import Path

import pytest

from nurseflow.milp import build_deterministic
from nurseflow.solver import AdapterError, EngineConfig, solve, solve_external
from nurseflow.solver.external import ENV_VAR

from test_solver import random_covering
from toys import deterministic_toys


def find_engine():
    value = os.environ.get(ENV_VAR) or shutil.which("cbc")
    if value:
        return value
    try:
        import pulp  # optional; ships a CBC binary
    except ImportError:
        return None
    cand = Path(pulp.__file__).parent / "solverdir" / "cbc" / "linux" / "i64" / "cbc"
    return str(cand) if cand.exists() else None


ENGINE = find_engine()
needs_engine = pytest.mark.skipif(ENGINE is None, reason="no external MILP engine available")


@needs_engine
def test_external_engine_matches_reference_on_covering_models():
    cfg = EngineConfig(ENGINE)
    for seed in range(4):
        sys = random_covering(seed)
        assert math.isclose(solve_external(sys, config=cfg).objective, solve(sys).objective, abs_tol=1e-6)


@needs_engine
def test_external_engine_matches_reference_on_roster_models():
    cfg = EngineConfig(ENGINE)
    for inst in deterministic_toys(3, seed=4):
        sys = build_deterministic(inst)
        ext = solve_external(sys, config=cfg)
        assert ext.backend == "external"
        assert math.isclose(ext.objective, solve(sys).objective, abs_tol=1e-6)


def test_missing_engine_binary_raises_adapter_error(tmp_path):
    cfg = EngineConfig(str(tmp_path / "no-such-engine"))
    with pytest.raises(AdapterError):
        solve_external(random_covering(0), config=cfg)


def test_engine_config_from_file(tmp_path):
    p = tmp_path / "engine.json"
    p.write_text('{"engine": "/opt/cbc", "command": ["{engine}", "{lp}", "solu", "{sol}"]}')
    cfg = EngineConfig.from_file(p)
    assert cfg.argv("m.lp", "m.sol", math.inf, 0.0) == ["/opt/cbc", "m.lp", "solu", "m.sol"]

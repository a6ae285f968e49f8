import math

import pytest

from nurseflow.milp import build_two_stage_extensive
from nurseflow.milp.lpformat import LPParseError, dumps_lp, read_lp
from nurseflow.solver import solve

from test_solver import random_covering
from toys import tree_toys


def test_lp_text_round_trips():
    sys = build_two_stage_extensive(tree_toys(1)[0])
    text = dumps_lp(sys)
    back = read_lp(text)
    assert back.num_vars == sys.num_vars
    assert len(back.constraints) >= len(sys.constraints) - len(sys.unreferenced())
    assert dumps_lp(read_lp(dumps_lp(back))) == dumps_lp(back)


@pytest.mark.parametrize("seed", range(4))
def test_parsed_system_has_the_same_optimum(seed):
    sys = random_covering(seed)
    assert math.isclose(solve(read_lp(dumps_lp(sys))).objective, solve(sys).objective, abs_tol=1e-9)


def test_parsed_roster_model_has_the_same_optimum():
    sys = build_two_stage_extensive(tree_toys(1, seed=9)[0])
    a = solve(sys, backend="milp").objective
    b = solve(read_lp(dumps_lp(sys)), backend="milp").objective
    assert math.isclose(a, b, abs_tol=1e-6)


def test_garbage_is_a_parse_error():
    with pytest.raises(LPParseError):
        read_lp("x + y <= 3\n")
    with pytest.raises(LPParseError):
        read_lp("Minimize\n obj: x\nSubject To\n c1: x + y\nEnd\n")

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nurseflow.domain import ModelError
from nurseflow.scenario import (
    Realization,
    build_tree,
    expected_value_tree,
    node_demand,
    single_path_tree,
)


def real(label, p, value, days=2):
    return Realization(label, p, np.full((3, days), value))


def test_three_stages_of_two_branches():
    tree = build_tree([[real("h", 0.6, 3), real("l", 0.4, 1)]] * 3)
    assert [len(tree.nodes_at(h)) for h in range(4)] == [1, 2, 4, 8]
    assert len(tree.nodes) == 15
    assert math.isclose(sum(n.probability for n in tree.leaves), 1.0)
    leaf = tree.leaf_of((0, 1, 0))
    assert math.isclose(leaf.probability, 0.6 * 0.4 * 0.6)


def test_root_carries_no_demand():
    tree = single_path_tree([np.ones((3, 2), int)])
    with pytest.raises(ModelError):
        node_demand(tree, tree.root)


def test_invalid_stage_definitions():
    with pytest.raises(ModelError):
        build_tree([])
    with pytest.raises(ModelError):
        build_tree([[real("a", 0.5, 1)]])
    with pytest.raises(ModelError):
        build_tree([[real("a", 0.5, 1, days=2), real("b", 0.5, 1, days=3)]])
    with pytest.raises(ModelError):
        Realization("z", 0.0, np.zeros((3, 1), int))


def test_expected_value_tree_rounds_up():
    tree = build_tree([[real("h", 0.6, 3), real("l", 0.4, 1)]])
    ev = expected_value_tree(tree)
    assert len(ev.leaves) == 1
    assert (node_demand(ev, ev.leaves[0]) == 3).all()  # ceil(2.2)


@settings(max_examples=40, deadline=None)
@given(widths=st.lists(st.integers(1, 3), min_size=1, max_size=3),
       seed=st.integers(0, 1000))
def test_product_tree_invariants(widths, seed):
    rng = np.random.default_rng(seed)
    stages = []
    for w in widths:
        p = rng.dirichlet(np.ones(w))
        p[-1] = 1.0 - p[:-1].sum()
        stages.append([Realization(f"r{k}", float(p[k]), rng.integers(0, 5, (3, 2))) for k in range(w)])
    tree = build_tree(stages)
    for h in range(1, len(widths) + 1):
        nodes = tree.nodes_at(h)
        assert len(nodes) == int(np.prod(widths[:h]))
        assert math.isclose(sum(n.probability for n in nodes), 1.0, abs_tol=1e-9)
    for n in tree.stage_nodes:
        parent = tree.nodes[n.parent]
        assert n.id in parent.children
        assert parent.stage == n.stage - 1
        assert n.path[:-1] == parent.path
        assert math.isclose(n.probability, parent.probability * stages[n.stage - 1][n.path[-1]].probability)
        assert [m.stage for m in tree.path_to(n)] == list(range(1, n.stage + 1))
        assert tree.path_to(n)[-1] is n

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evolab.catalog import bool_mod2, bool_threshold, identity
from evolab.core import BudgetError
from evolab.dimensions import evolution_complexity
from evolab.trees import (
    TrajectoryTree,
    branching_factor,
    brute_force_max_branching,
    is_shattered,
)
from strategies import small_families


def test_tree_indexing_and_paths():
    tree = TrajectoryTree([[0], [1, 2], [3, 4, 5, 6]])
    assert tree.depth == 2
    assert tree.root == 0
    assert tree.path_states([1, 0]) == [0, 2, 5]
    assert len(list(tree.paths())) == 4


def test_tree_dict_roundtrip():
    tree = TrajectoryTree([[0], [1, 1], [0, 1, 0, 1]])
    assert TrajectoryTree.from_dict(tree.to_dict()).levels == tree.levels


def test_branching_factor_counts_distinct_children():
    # every node branches on the left spine only
    tree = TrajectoryTree([[0], [1, 2], [0, 0, 1, 1]])
    assert branching_factor(tree) == 1
    tree = TrajectoryTree([[0], [1, 2], [0, 1, 0, 1]])
    assert branching_factor(tree) == 2


def test_identity_family_has_no_branching():
    fam = identity(3)
    assert brute_force_max_branching(fam, 3)[0] == 0


def test_bool_threshold_constant_frozen():
    # exact value backed by the recursion and this brute-force oracle
    assert brute_force_max_branching(bool_threshold(2), 4)[0] == 2


def test_brute_force_budget():
    with pytest.raises(BudgetError) as info:
        brute_force_max_branching(bool_mod2(2), 3, budget=5)
    assert info.value.required > 5


def test_witness_tree_is_shattered():
    fam = bool_mod2(2)
    c, tree = evolution_complexity(fam, 4)
    assert is_shattered(tree, fam)[0]
    assert branching_factor(tree) == c


@settings(max_examples=40, deadline=None)
@given(small_families(max_states=3, max_members=4), st.integers(0, 3))
def test_recursion_matches_brute_force(fam, depth):
    c, tree = evolution_complexity(fam, depth)
    assert brute_force_max_branching(fam, depth)[0] == c
    assert is_shattered(tree, fam)[0]
    assert branching_factor(tree) == c

import json
import os
from collections import deque
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import FIXTURES
from pebbleworks.dag import make_dag, tree_dag
from pebbleworks.pebbling import (BLACK, BLACK_WHITE, discretized_noslide, half_pebble_strategy, fractional_grid,
                                  verify_sequence)
from pebbleworks.search import (Infeasible, SearchCapExceeded, black_cost, bw_cost, estimate_configurations,
                                feasible_under, fract_lower_bound, klawe_bw_bound, min_cost)
from pebbleworks.tree import TreeShape

T3 = TreeShape(2, 3)


def black_oracle(dag) -> int:
    """Black cost by BFS over sets of pebbled nodes, sliding allowed."""
    nodes = list(dag.ids)
    root = dag.root
    for bound in range(1, len(nodes) + 1):
        start = (frozenset(), False)
        seen = {start}
        queue = deque([start])
        while queue:
            peb, rooted = queue.popleft()
            if rooted and not peb:
                return bound
            nxt = []
            for u in peb:
                nxt.append((peb - {u}, rooted))
            for u in nodes:
                kids = set(dag.children(u))
                if u in peb or not kids <= peb:
                    continue
                # place on u, then optionally slide off any subset of the children
                base = peb | {u}
                subsets = [frozenset()]
                for c in kids:
                    subsets += [s | {c} for s in subsets]
                for s in subsets:
                    new = base - s
                    if len(new) <= bound:
                        nxt.append((new, rooted or u == root))
            for state in nxt:
                if state not in seen:
                    seen.add(state)
                    queue.append(state)
    raise AssertionError("unreachable")


@st.composite
def small_dags(draw):
    n = draw(st.integers(1, 6))
    edges = []
    for u in range(1, n):
        parents = draw(st.sets(st.integers(u + 1, n), min_size=1, max_size=2))
        edges += [(u, p) for p in parents]
    return make_dag(edges, range(1, n + 1))


def test_tree_black_costs():
    for h in range(1, 5):
        assert min_cost(TreeShape(2, h), BLACK).bound == h


def test_tree_bw_costs():
    assert min_cost(TreeShape(2, 2), BLACK_WHITE).bound == 2
    assert min_cost(T3, BLACK_WHITE).bound == 3
    # a lone node needs one pebble in every game
    assert min_cost(TreeShape(2, 1), BLACK_WHITE).bound == 1


def test_fractional_t3():
    res = min_cost(T3, fractional_grid(2))
    assert res.bound == Fraction(5, 2)
    assert verify_sequence(res.witness, T3) == Fraction(5, 2)
    assert min_cost(TreeShape(2, 2), fractional_grid(2)).bound == 2


def test_bounds_from_examples():
    assert not feasible_under(T3, BLACK, 2).feasible
    res = feasible_under(T3, BLACK, 3)
    assert res.feasible and verify_sequence(res.witness, T3) == 3
    assert not feasible_under(T3, fractional_grid(2), Fraction(9, 4)).feasible


def test_single_node():
    assert black_cost(make_dag([], [7])) == 1


def test_noslide_fixture():
    with open(os.path.join(FIXTURES, "noslide_t3.json")) as fh:
        fix = json.load(fh)
    res = min_cost(TreeShape(**fix["tree"]), discretized_noslide(fix["c"]))
    assert res.bound == Fraction(fix["cost"])


def test_infeasible_and_cap():
    with pytest.raises(Infeasible):
        min_cost(T3, BLACK, max_bound=2)
    with pytest.raises(SearchCapExceeded):
        feasible_under(TreeShape(2, 4), fractional_grid(4), 4, cap=1000)


def test_estimate_counts_configurations():
    # black game on T^2 with bound 3: all 8 subsets, times the rooted bit
    assert estimate_configurations(TreeShape(2, 2), BLACK, 3) == 16
    assert estimate_configurations(TreeShape(2, 2), BLACK, 1) == 8


def test_symmetry_reduction_agrees():
    for shape, game in [(T3, BLACK_WHITE), (T3, fractional_grid(2)), (TreeShape(3, 2), fractional_grid(2)),
                        (TreeShape(2, 4), BLACK)]:
        a = min_cost(shape, game)
        b = min_cost(shape, game, symmetry=False)
        assert a.bound == b.bound
        assert a.explored <= b.explored


def test_formulas():
    assert fract_lower_bound(2, 3) == Fraction(1, 2)
    assert fract_lower_bound(3, 4) == Fraction(5, 2)
    assert fract_lower_bound(2, 2) == 0
    assert [klawe_bw_bound(b) for b in (9, 1, 6)] == [5, 1, 4]
    with pytest.raises(ValueError):
        klawe_bw_bound(0)


@settings(max_examples=40)
@given(small_dags())
def test_black_cost_matches_oracle(dag):
    assert black_cost(dag) == black_oracle(dag)


@settings(max_examples=25)
@given(small_dags())
def test_game_inclusion(dag):
    b = min_cost(dag, BLACK).bound
    bw = min_cost(dag, BLACK_WHITE).bound
    fg = min_cost(dag, fractional_grid(2)).bound
    assert fg <= bw <= b
    assert feasible_under(dag, BLACK_WHITE, b).feasible


@settings(max_examples=25)
@given(small_dags())
def test_witness_verifies(dag):
    for game in (BLACK, BLACK_WHITE, fractional_grid(2)):
        res = min_cost(dag, game)
        assert verify_sequence(res.witness, dag) == res.bound


def test_bw_cost_helper():
    assert bw_cost(T3) == 3
    assert verify_sequence(half_pebble_strategy(), tree_dag(T3)) >= min_cost(T3, fractional_grid(2)).bound

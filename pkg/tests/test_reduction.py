import json
import os
import re

from hypothesis import given, settings, strategies as st

from conftest import FIXTURES
from pebbleworks.dag import make_dag, tree_dag
from pebbleworks.pebbling import BLACK
from pebbleworks.reduction import (blocks_all_paths, bottleneck_witness, build_G, build_Gprime, check_nice,
                                   check_order_fact, gprime_black_cost_formula, leftmost_path,
                                   node_black_cost_formula, rightmost_path, root_paths)
from pebbleworks.search import black_cost, min_cost
from pebbleworks.tree import TreeShape


def label(g, u):
    n = g.info[u]
    return "R" if n.tree_node is None else f"{n.tree_node}[{n.copy}]"


def test_G_sizes():
    g = build_G(2, 3, 3)
    assert len(g) == 22
    assert len(g.edges) == 57
    small = build_G(2, 1, 2)
    assert (len(small), len(small.edges)) == (3, 2)


def test_Gprime_matches_hand_adjacency():
    with open(os.path.join(FIXTURES, "gprime_2_3_3.json")) as fh:
        fix = json.load(fh)
    g = build_Gprime(fix["d"], fix["h"], fix["c"])
    got = {label(g, u): sorted(label(g, x) for x in g.children(u)) for u in g.ids if g.children(u)}
    assert got == {k: sorted(v) for k, v in fix["children"].items()}


def test_c1_removes_nothing():
    for d, h in ((2, 3), (3, 2)):
        assert set(build_Gprime(d, h, 1).edges) == set(build_G(d, h, 1).edges)


def test_extreme_paths():
    g = build_Gprime(2, 3, 3)
    src = g.sources[0]
    assert leftmost_path(g, src) == [src]
    assert [label(g, u) for u in leftmost_path(g, g.root)] == ["4[1]", "2[1]", "1[1]", "R"]
    assert [label(g, u) for u in rightmost_path(g, g.root)] == ["7[3]", "3[3]", "1[3]", "R"]
    # the two only meet where a node has a single child
    shared = set(leftmost_path(g, g.root)) & set(rightmost_path(g, g.root))
    assert shared == {g.root}


def test_order_fact():
    assert check_order_fact(build_Gprime(2, 3, 3))
    assert not check_order_fact(build_G(2, 3, 3))
    assert check_order_fact(build_Gprime(2, 3, 1))
    assert check_order_fact(build_Gprime(3, 2, 2))


def test_niceness():
    good = check_nice(build_Gprime(2, 3, 2))
    assert good.nice and not good.partial
    assert good.property1 and good.property2 and good.property3
    bad = check_nice(build_G(2, 3, 2))
    assert not bad.nice
    assert bad.counterexample is not None
    assert check_nice(make_dag([], [1])).nice
    assert check_nice(tree_dag(TreeShape(2, 3))).nice


def test_cost_formulas():
    assert gprime_black_cost_formula(2, 3, 3) == 9
    assert gprime_black_cost_formula(2, 3, 2) == 6
    assert gprime_black_cost_formula(2, 1, 4) == 4


def test_gprime_black_cost_by_search():
    for c in (1, 2):
        assert min_cost(build_Gprime(2, 3, c), BLACK).bound == gprime_black_cost_formula(2, 3, c)


def test_per_node_black_cost():
    g = build_Gprime(2, 3, 2)
    for u in g.ids:
        n = g.info[u]
        if n.tree_node is None:
            continue
        level = TreeShape(2, 3).height_of(n.tree_node)
        assert black_cost(g.subdag_to(u)) == node_black_cost_formula(2, 2, level)


def test_bottleneck_witness_sizes():
    for c, want in ((1, 2), (2, 5), (3, 8)):
        g = build_Gprime(2, 3, c)
        for path in root_paths(g):
            w = bottleneck_witness(g, path)
            assert len(w.S) == want == c * (2 - 1) * (3 - 1) + (c - 1)
            used = set(path)
            for p in w.paths.values():
                assert not used & set(p)
                used |= set(p)
            assert blocks_all_paths(g, w.configuration)


@settings(max_examples=20)
@given(st.integers(2, 3), st.integers(1, 3), st.integers(1, 3))
def test_gprime_structure(d, h, c):
    g, gp = build_G(d, h, c), build_Gprime(d, h, c)
    assert len(gp) == len(g) == TreeShape(d, h).node_count * c + 1
    assert set(gp.edges) <= set(g.edges)
    for u in gp.ids:
        n = gp.info[u]
        if n.tree_node is not None and gp.children(u):
            assert len(gp.children(u)) == c * (d - 1) + 1
    assert check_order_fact(gp)

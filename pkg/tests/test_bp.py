import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from pebbleworks.bp import (BranchingProgram, InputStream, InvalidProgram, NonTerminating, QueryClass, as_bt,
                            check_mindepth_thrifty, check_solves, check_thrifty, check_thrifty_or_wrongwrong,
                            classify_query, corrupt_query, depth, pi_w_params, relaxed_bounds, rewire_edge,
                            simulate, thrifty_sets)
from pebbleworks.construct import build_thrifty_det
from pebbleworks.tree import TepInstance, TreeShape, Variable, enumerate_instances, eval_ft, instance_at
from strategies import instances

T1, T2 = TreeShape(2, 1), TreeShape(2, 2)


def example_h2():
    return TepInstance.from_tables(T2, 2, {1: [[2, 1], [1, 2]]}, {2: 1, 3: 2})


def det(shape, k, rows, start=0):
    """Program from ``[(query or None, output or None, [targets...]), ...]``."""
    return BranchingProgram(shape, k, [q for q, _, _ in rows], [o for _, o, _ in rows],
                            [[(t,) for t in ts] for _, _, ts in rows], start)


def reader(query_for):
    """h=2, k=2: read l_2 and l_3, then query ``query_for(a, b)`` and output its value."""
    rows = [(Variable(2), None, [1, 2]),
            (Variable(3), None, [3, 4]), (Variable(3), None, [5, 6])]
    for a in (1, 2):
        for b in (1, 2):
            rows.append((query_for(a, b), None, [7, 8]))
    rows += [(None, 1, []), (None, 2, [])]
    return det(T2, 2, rows)


def test_simulate_height_one():
    bp = build_thrifty_det(1, 2)
    out, path = simulate(bp, TepInstance(T1, 2, (2,)))
    assert out == 2 and len(path) == 2


def test_simulate_example_instance():
    inst = example_h2()
    assert eval_ft(inst) == 1
    assert simulate(build_thrifty_det(2, 2), inst)[0] == 1


def test_self_loop_does_not_terminate():
    bp = BranchingProgram(T1, 2, [Variable(1), None], [None, 1], [[(0,), (1,)], ()])
    with pytest.raises(NonTerminating):
        bp.run((1,))
    assert bp.run((2,))[0] == 1
    res = check_solves(bp)
    assert not res and "terminate" in res.detail


def test_validation():
    with pytest.raises(InvalidProgram):
        BranchingProgram(T1, 2, [Variable(1), None], [None, 1], [[(1,)], ()])
    with pytest.raises(InvalidProgram):
        BranchingProgram(T1, 2, [Variable(1), None, None], [None, 1, 1], [[(1,), (2,)], (), ()])
    with pytest.raises(InvalidProgram):
        BranchingProgram(T1, 2, [Variable(5), None], [None, 1], [[(1,), (1,)], ()])
    with pytest.raises(InvalidProgram):
        BranchingProgram(T1, 2, [Variable(1), None], [None, 1], [[(1,), (1, 0)], ()], deterministic=True)


def test_check_solves_and_counterexample():
    bp = build_thrifty_det(2, 2)
    res = check_solves(bp)
    assert res and res.checked == 64 and not res.sampled
    # send f_1(1,1) answers of 1 to output 2
    s = next(i for i, q in enumerate(bp.queries) if q == Variable(1, (1, 1)))
    two = bp.outputs.index(2)
    edges = list(bp.edges)
    edges[s] = ((two,), edges[s][1])
    bad = check_solves(bp.relabelled(edges=edges))
    assert not bad
    assert simulate(bp.relabelled(edges=edges), bad.counterexample)[0] != eval_ft(bad.counterexample)


def test_thrifty_examples():
    for h, k in ((1, 2), (2, 2), (2, 3)):
        assert check_thrifty(build_thrifty_det(h, k))
    # iterating two different f_1 entries first
    rows = [(Variable(1, (1, 1)), None, [1, 1]), (Variable(1, (1, 2)), None, [2, 2]), (None, 1, [])]
    res = check_thrifty(det(T2, 2, rows))
    assert not res and res.state in (0, 1)
    leaves_only = det(T2, 2, [(Variable(2), None, [1, 2]), (None, 1, []), (None, 2, [])])
    assert check_thrifty(leaves_only)
    assert check_thrifty_or_wrongwrong(leaves_only)


def test_classify_query():
    inst = example_h2()
    v2, v3 = 1, 2
    assert classify_query(inst, Variable(1, (v2, v3))) is QueryClass.THRIFTY
    assert classify_query(inst, Variable(1, (3 - v2, 3 - v3))) is QueryClass.WRONG_WRONG
    assert classify_query(inst, Variable(1, (v2, 3 - v3))) is QueryClass.LEFT_ONLY_CORRECT
    assert classify_query(inst, Variable(1, (3 - v2, v3))) is QueryClass.RIGHT_ONLY_CORRECT
    bp = build_thrifty_det(2, 2)
    s = bp.run(inst.values)[1][-2]
    assert classify_query(inst, (bp, s)) is QueryClass.THRIFTY


def test_wrong_wrong_tolerance():
    ww = reader(lambda a, b: Variable(1, (3 - a, 3 - b)))
    assert not check_thrifty(ww)
    assert check_thrifty_or_wrongwrong(ww)
    left_only = reader(lambda a, b: Variable(1, (a, 3 - b)))
    assert not check_thrifty_or_wrongwrong(left_only)
    assert check_thrifty_or_wrongwrong(reader(lambda a, b: Variable(1, (a, b))))


def test_thrifty_sets_and_params():
    bp = build_thrifty_det(2, 2)
    for s, q in enumerate(bp.queries):
        if q is not None and not q.is_leaf:
            left, right = thrifty_sets(bp, s)
            assert len(left) == len(right) == 1
    assert pi_w_params(bp) == (1, 0)
    # a state nobody reaches has empty sets
    rows = [(Variable(2), None, [2, 2]), (Variable(1, (1, 1)), None, [2, 2]), (None, 1, [])]
    assert thrifty_sets(det(T2, 2, rows), 1) == (set(), set())


def test_wide_thrifty_sets():
    # querying f_1(1,1) regardless of the leaves: LeftThrifty and RightThrifty both {1,2}
    rows = [(Variable(1, (1, 1)), None, [1, 2]), (None, 1, []), (None, 2, [])]
    bp = det(T2, 2, rows)
    assert thrifty_sets(bp, 0) == ({1, 2}, {1, 2})
    assert pi_w_params(bp) == (2, 1)
    rep = relaxed_bounds(bp, 2, 1)
    assert rep["bound_pi"] == 4 and rep["bound_w"] == 2


def test_depth_and_mindepth():
    for h in (1, 2, 3):
        assert depth(build_thrifty_det(h, 2)) == 2 ** h
    rep = check_mindepth_thrifty(build_thrifty_det(2, 2))
    assert rep["verdict"] == "holds" and rep["ok"]
    padded = det(T1, 2, [(Variable(1), None, [1, 2]), (Variable(1), None, [3, 3]),
                         (Variable(1), None, [4, 4]), (None, 1, []), (None, 2, [])])
    assert check_solves(padded) and depth(padded) == 3
    rep = check_mindepth_thrifty(padded)
    assert rep["verdict"] == "not applicable" and rep["ok"]


def test_json_round_trip_and_canonical_bytes():
    for bp in (build_thrifty_det(2, 2), as_bt(build_thrifty_det(2, 2))):
        text = bp.dumps()
        back = BranchingProgram.from_json(json.loads(text))
        assert back.dumps() == text
        assert back.queries == bp.queries and back.edges == bp.edges and back.start == bp.start


def test_as_bt():
    bt = as_bt(build_thrifty_det(2, 3))
    assert bt.output_labels == (0, 1)
    assert check_solves(bt, "BT")
    assert not check_solves(bt, "FT")


def test_nondeterministic_reading():
    # guess l_2 without reading it; the wrong guess dies at a check of l_2
    bp = BranchingProgram(T2, 2,
                          [Variable(3), Variable(2), Variable(2), None, None],
                          [None, None, None, 1, 2],
                          [[(1, 2), (1, 2)], [(3,), ()], [(), (4,)], (), ()])
    assert not bp.deterministic
    for inst in enumerate_instances(T2, 2):
        live, outs = bp.live_states(inst.values)
        guess = inst.leaf_value(2)
        assert outs == {guess}
        # only the right guess stays live
        assert 3 - guess not in live


def test_sampling_is_seeded():
    a = list(InputStream(TreeShape(2, 3), 3, cap=1000, samples=50, seed=7))
    b = list(InputStream(TreeShape(2, 3), 3, cap=1000, samples=50, seed=7))
    c = list(InputStream(TreeShape(2, 3), 3, cap=1000, samples=50, seed=8))
    assert a == b and a != c
    res = check_solves(build_thrifty_det(3, 3), samples=2000, seed=1)
    assert res and res.sampled and res.checked == 2000


def test_mutants_detected():
    bp = build_thrifty_det(2, 2)
    rng = random.Random(3)
    caught = 0
    for m in range(200):
        mutant = rewire_edge(bp, rng) if m % 2 else corrupt_query(bp, rng)
        caught += not check_solves(mutant) or not check_thrifty(mutant)
    assert caught >= 198


@settings(max_examples=40)
@given(instances(d=2, h=(1, 3), k=(1, 3)))
def test_construction_computes_root(inst):
    bp = build_thrifty_det(inst.shape.h, inst.k)
    out, path = bp.run(inst.values)
    assert out == eval_ft(inst)
    assert len(path) == 2 ** inst.shape.h


@settings(max_examples=30)
@given(st.integers(0, 2 ** 16 - 1))
def test_every_query_thrifty_on_height_three(index):
    inst = instance_at(TreeShape(2, 3), 2, index)
    bp = build_thrifty_det(3, 2)
    for s in bp.run(inst.values)[1]:
        q = bp.queries[s]
        if q is not None and not q.is_leaf:
            assert q == inst.thrifty_variable(q.node)

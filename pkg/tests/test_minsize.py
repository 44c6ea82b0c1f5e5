import itertools
import json

import pytest

from pebbleworks.bp import BranchingProgram, InvalidProgram, NonTerminating, check_solves
from pebbleworks.minsize import run_minsize_search, search_estimate
from pebbleworks.tree import TreeShape, Variable

T1 = TreeShape(2, 1)


def brute_force_minimum(k: int, max_size: int):
    """Smallest FT program for h=1 by trying every table, no pruning."""
    for n in range(1, max_size + 1):
        kinds = [("o", a) for a in range(1, k + 1)] + [("q", None)]
        for assign in itertools.product(kinds, repeat=n):
            labels = [a for t, a in assign if t == "o"]
            if sorted(labels) != list(range(1, k + 1)):
                continue
            qs = [s for s, (t, _) in enumerate(assign) if t == "q"]
            for wiring in itertools.product(range(n), repeat=k * len(qs)):
                edges = [()] * n
                for j, s in enumerate(qs):
                    edges[s] = [(t,) for t in wiring[j * k:(j + 1) * k]]
                for start in range(n):
                    bp = BranchingProgram(T1, k, [Variable(1) if t == "q" else None for t, _ in assign],
                                          [a if t == "o" else None for t, a in assign], edges, start)
                    if check_solves(bp):
                        return n
    return None


def test_brute_force_agrees():
    for k in (1, 2, 3):
        res = run_minsize_search(1, k, size_cap=k + 1)
        assert res.status == "found"
        assert res.minimum == brute_force_minimum(k, k + 1)


def test_height_one_exhausted_below_k_plus_one():
    for k in (2, 3):
        res = run_minsize_search(1, k)
        assert res.status == "exhausted"
        assert res.exhausted_sizes == list(range(1, k + 1))
        assert res.program is None


def test_found_program_is_canonical_and_correct():
    res = run_minsize_search(1, 3, size_cap=4)
    bp = res.program
    assert check_solves(bp)
    assert bp.start == 0
    # states appear in breadth-first order from the start
    order, seen = [0], {0}
    for s in order:
        for row in bp.edges[s]:
            for t in row:
                if t not in seen:
                    seen.add(t)
                    order.append(t)
    assert order == list(range(bp.size))


def test_k1_single_state():
    res = run_minsize_search(1, 1)
    assert res.status == "found" and res.minimum == 1
    assert res.program.outputs == (1,)


def test_refuses_large_regimes():
    with pytest.raises(ValueError, match="unpruned"):
        run_minsize_search(3, 2)
    with pytest.raises(ValueError):
        run_minsize_search(2, 3)
    assert search_estimate(2, 2) > 10 ** 9


def test_checkpoint_resume(tmp_path):
    ck = tmp_path / "ck.json"
    first = run_minsize_search(2, 2, time_cap=1.0, checkpoint=str(ck))
    assert first.status == "partial"
    state = json.loads(ck.read_text())
    assert state["h"] == 2 and state["k"] == 2
    assert state["exhausted"] == first.exhausted_sizes
    second = run_minsize_search(2, 2, time_cap=1.0, checkpoint=str(ck))
    assert second.status == "partial"
    assert second.exhausted_sizes[:len(first.exhausted_sizes)] == first.exhausted_sizes
    later = json.loads(ck.read_text())
    assert len(later["exhausted"]) > len(state["exhausted"]) or \
        (later["size"] == state["size"] and len(later["branches"]) >= len(state["branches"]))
    with pytest.raises(ValueError):
        run_minsize_search(1, 2, checkpoint=str(ck))


def test_small_sizes_excluded_at_height_two():
    res = run_minsize_search(2, 2, size_cap=3)
    assert res.status == "exhausted" and res.exhausted_sizes == [1, 2, 3]


def test_result_json():
    res = run_minsize_search(1, 2, size_cap=3)
    out = res.to_json()
    assert out["status"] == "found" and out["program"]["k"] == 2
    assert BranchingProgram.from_json(out["program"]).size == 3

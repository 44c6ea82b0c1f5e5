import json
import os
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import FIXTURES
from pebbleworks.dag import make_dag, tree_dag
from pebbleworks.pebbling import (BLACK, BLACK_WHITE, FRACTIONAL, Combined, DecreaseBlack, IllegalMove,
                                  IncreaseWhite, InvalidSequence, PebbleConfig, PebbleSequence, apply_move,
                                  black_strategy, discretized_noslide, half_pebble_strategy, fractional_grid,
                                  place_black, place_white, remove_black, remove_white, trace, verify_sequence)
from pebbleworks.tree import TreeShape

T2 = tree_dag(TreeShape(2, 2))
T3 = tree_dag(TreeShape(2, 3))
HALF = Fraction(1, 2)


def test_white_placement_is_unconditional():
    cfg = apply_move(PebbleConfig.empty(T2), IncreaseWhite(1, 1))
    assert cfg.get(1).white == 1 and cfg.get(1).black == 0


def test_black_slide_onto_root():
    cfg = PebbleConfig.from_mapping(T2, {2: (1, 0), 3: (1, 0)})
    cfg = apply_move(cfg, Combined(1, 0, 1, {2: 1, 3: 1}))
    assert cfg.values == {1: cfg.get(1)}
    assert cfg.get(1).black == 1


def test_combined_needs_full_children():
    with pytest.raises(IllegalMove):
        apply_move(PebbleConfig.empty(T2), Combined(1, 0, 1, {}))
    half = PebbleConfig.from_mapping(T2, {2: (HALF, 0), 3: (1, 0)})
    with pytest.raises(IllegalMove):
        apply_move(half, place_black(1))


def test_white_removal_needs_children():
    cfg = apply_move(PebbleConfig.empty(T2), place_white(1))
    with pytest.raises(IllegalMove):
        apply_move(cfg, remove_white(1))


def test_sum_and_negativity_guarded():
    cfg = apply_move(PebbleConfig.empty(T2), place_white(2))
    with pytest.raises(IllegalMove):
        apply_move(cfg, place_white(2))
    with pytest.raises(IllegalMove):
        apply_move(PebbleConfig.empty(T2), remove_black(3))


def test_black_strategy_costs():
    for h in range(1, 6):
        seq = black_strategy(TreeShape(2, h))
        assert verify_sequence(seq, TreeShape(2, h)) == h
    assert verify_sequence(black_strategy(TreeShape(3, 3)), TreeShape(3, 3)) == 5


def test_half_pebble_cost_and_trace():
    with open(os.path.join(FIXTURES, "half_pebble_trace.json")) as fh:
        fix = json.load(fh)
    seq = half_pebble_strategy()
    assert verify_sequence(seq, T3) == Fraction(fix["cost"])
    got = trace(seq, T3)
    assert len(got) == len(fix["configurations"])
    for cfg, want in zip(got, fix["configurations"]):
        exp = {int(u): (Fraction(b), Fraction(w)) for u, (b, w) in want.items()}
        assert {u: (v.black, v.white) for u, v in cfg.values.items()} == exp
    # the seventh configuration holds node 2 half black and half white
    mixed = got[7]
    assert (mixed.get(2).black, mixed.get(2).white) == (HALF, HALF)
    assert mixed.total <= Fraction(5, 2)
    assert [n for n, c in enumerate(got) if c.total == Fraction(5, 2)] == [5, 11]
    assert got[0].is_empty() and got[-1].is_empty()


def test_half_pebble_illegal_in_integral_games():
    for game in (BLACK, BLACK_WHITE):
        with pytest.raises(InvalidSequence):
            verify_sequence(PebbleSequence(half_pebble_strategy().moves, game), T3)
    assert verify_sequence(PebbleSequence(half_pebble_strategy().moves, fractional_grid(2)), T3) == Fraction(5, 2)
    with pytest.raises(InvalidSequence):
        verify_sequence(PebbleSequence(half_pebble_strategy().moves, fractional_grid(3)), T3)


def test_leftover_white_rejected():
    seq = PebbleSequence((place_black(2), place_black(3), place_black(1, (2, 3)), remove_black(1),
                          place_white(2)), BLACK_WHITE)
    with pytest.raises(InvalidSequence, match="empty"):
        verify_sequence(seq, T2)


def test_never_rooting_rejected():
    seq = PebbleSequence((place_black(2), remove_black(2)), BLACK)
    with pytest.raises(InvalidSequence, match="root"):
        verify_sequence(seq, T2)


def test_white_in_black_game_rejected():
    seq = PebbleSequence((place_white(1), place_black(2), place_black(3), remove_white(1)), BLACK)
    with pytest.raises(InvalidSequence):
        verify_sequence(seq, T2)


def test_noslide_rules():
    g = discretized_noslide(2)
    ok = PebbleSequence((Combined(1, 0, HALF),) * 2 + (DecreaseBlack(1, HALF),) * 2, g)
    assert verify_sequence(ok, make_dag([], [1])) == 1
    with pytest.raises(InvalidSequence):
        verify_sequence(PebbleSequence((place_black(1), remove_black(1)), g), make_dag([], [1]))


def test_bw_whole_strategy_t3_cost_3():
    # white on 3, black path on the left, then discharge the white
    moves = (place_black(4), place_black(5), place_black(2, (4, 5)), place_white(3),
             place_black(1, (2,)), remove_black(1), place_black(6), place_black(7),
             Combined(3, 1, 0, {6: 1, 7: 1}))
    assert verify_sequence(PebbleSequence(moves, BLACK_WHITE), T3) == 3


def test_sequence_json_round_trip():
    for seq in (half_pebble_strategy(), black_strategy(TreeShape(2, 3))):
        text = seq.dumps()
        back = PebbleSequence.from_json(json.loads(text))
        assert back == seq
        assert back.dumps() == text


@st.composite
def random_moves(draw):
    n = draw(st.integers(1, 25))
    moves = []
    for _ in range(n):
        node = draw(st.integers(1, 7))
        amt = draw(st.sampled_from([HALF, Fraction(1)]))
        kind = draw(st.integers(0, 2))
        if kind == 0:
            moves.append(DecreaseBlack(node, amt))
        elif kind == 1:
            moves.append(IncreaseWhite(node, amt))
        else:
            kids = TreeShape(2, 3).children(node)
            dec = {c: draw(st.sampled_from([0, HALF, 1])) for c in kids}
            moves.append(Combined(node, draw(st.sampled_from([0, HALF])), amt, dec))
    return moves


@given(random_moves())
def test_apply_move_preserves_invariants(moves):
    cfg = PebbleConfig.empty(T3)
    for m in moves:
        try:
            cfg = apply_move(cfg, m)
        except IllegalMove:
            continue
        for _, v in cfg.items:
            assert v.black >= 0 and v.white >= 0
            assert v.total <= 1


@given(random_moves())
def test_verify_agrees_with_manual_replay(moves):
    seq = PebbleSequence(tuple(moves), FRACTIONAL)
    cfg = PebbleConfig.empty(T3)
    legal = True
    rooted = False
    peak = Fraction(0)
    for m in moves:
        try:
            cfg = apply_move(cfg, m)
        except IllegalMove:
            legal = False
            break
        rooted |= cfg.get(1).black == 1
        peak = max(peak, cfg.total)
    if legal and rooted and cfg.is_empty():
        assert verify_sequence(seq, T3) == peak
    else:
        with pytest.raises(InvalidSequence):
            verify_sequence(seq, T3)

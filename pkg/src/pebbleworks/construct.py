"""Building branching programs: the recursive ``(k+1)^h`` thrifty program,
and compilation of black or whole black-white pebblings."""

from __future__ import annotations

from collections import deque
from fractions import Fraction

from .bp import BranchingProgram
from .dag import tree_dag
from .pebbling import (Combined, DecreaseBlack, IncreaseWhite, InvalidSequence, PebbleSequence,
                       verify_sequence)
from .tree import TreeShape, Variable


# --- the recursive construction --------------------------------------------------------

def _thrifty_tables(h: int, k: int):
    """Raw tables ``(queries, outputs, edges, start)`` of the height-``h``
    program with variables over ``T^h``; edges are deterministic target tuples."""
    if h == 1:
        queries = [Variable(1)] + [None] * k
        outputs = [None] + list(range(1, k + 1))
        edges = [tuple(range(1, k + 1))] + [()] * k
        return queries, outputs, edges, 0
    sq, so, se, sstart = _thrifty_tables(h - 1, k)
    shape, sub = TreeShape(2, h), TreeShape(2, h - 1)
    sigma2, sigma3 = shape.subtree_map(2, sub), shape.subtree_map(3, sub)
    n = len(sq)
    inner = [s for s in range(n) if so[s] is None]

    cache: dict = {}

    def moved(var: Variable, sigma) -> Variable:
        key = (var, sigma[1])
        if key not in cache:
            cache[key] = Variable(sigma[var.node], var.args)
        return cache[key]

    # B_0 keeps its non-output states; B_a takes all n states of a copy.
    m0 = {s: p for p, s in enumerate(inner)}
    base = len(inner)

    def ma(a: int, s: int) -> int:
        return base + (a - 1) * n + s

    new_out = base + k * n  # first of the k fresh output states
    queries, outputs, edges = [], [], []
    for s in inner:
        queries.append(moved(sq[s], sigma2))
        outputs.append(None)
        edges.append(tuple(m0[t] if so[t] is None else ma(so[t], sstart) for t in se[s]))
    for a in range(1, k + 1):
        for s in range(n):
            if so[s] is None:
                queries.append(moved(sq[s], sigma3))
                outputs.append(None)
                edges.append(tuple(ma(a, t) for t in se[s]))
            else:
                queries.append(Variable(1, (a, so[s])))
                outputs.append(None)
                edges.append(tuple(new_out + c - 1 for c in range(1, k + 1)))
    queries.extend([None] * k)
    outputs.extend(range(1, k + 1))
    edges.extend([()] * k)
    return queries, outputs, edges, m0[sstart]


def build_thrifty_det(h: int, k: int) -> BranchingProgram:
    """Deterministic thrifty program for ``FT`` on ``T^h`` with exactly
    ``(k+1)^h`` states and depth ``2^h``.

    Height 1 queries ``l_1`` and branches to ``k`` outputs.  Height ``h``
    joins ``k+1`` copies of the height ``h-1`` program: copy 0 evaluates the
    left subtree and hands over to copy ``a`` on value ``a``; copy ``a``
    evaluates the right subtree, and its output ``b`` turns into a query of
    ``f_1(a, b)`` feeding ``k`` new outputs.
    """
    if h < 1 or k < 1:
        raise ValueError("need h >= 1 and k >= 1")
    queries, outputs, edges, start = _thrifty_tables(h, k)
    edges = [tuple((t,) for t in row) for row in edges]
    # Correct by construction; the tests validate it separately.
    return BranchingProgram(TreeShape(2, h), k, queries, outputs, edges, start, True,
                            meta={"construction": "recursive", "problem": "FT"}, check=False)


def thrifty_size(h: int, k: int) -> int:
    """State count recurrence ``s(h) = (k+1) s(h-1) - k + k``."""
    s = k + 1
    for _ in range(h - 1):
        s = (k + 1) * s - k + k
    return s


# --- compiling pebblings --------------------------------------------------------------------

def _infer_shape(seq: PebbleSequence, shape: TreeShape | None) -> TreeShape:
    if shape is not None:
        return shape
    top = max(m.node for m in seq.moves)
    return TreeShape(2, top.bit_length())


def _whole(x: Fraction) -> int:
    if x not in (0, 1):
        raise InvalidSequence(None, f"fractional amount {x}: only whole pebbles can be compiled")
    return int(x)


def _thrifty_var(shape: TreeShape, i: int, store: dict) -> Variable:
    kids = shape.children(i)
    if not kids:
        return Variable(i)
    missing = [c for c in kids if c not in store]
    if missing:
        raise InvalidSequence(None, f"node {i} queried while children {missing} hold no value")
    return Variable(i, tuple(store[c][0] for c in kids))


class _Builder:
    """Collects states keyed by an abstract description, in BFS order."""

    def __init__(self):
        self.index: dict = {}
        self.keys: list = []
        self.todo: deque = deque()

    def state(self, key) -> int:
        if key not in self.index:
            self.index[key] = len(self.keys)
            self.keys.append(key)
            self.todo.append(key)
        return self.index[key]


def build_from_black_pebbling(seq: PebbleSequence, k: int, shape: TreeShape | None = None) -> BranchingProgram:
    """Deterministic thrifty ``FT`` program following a black pebbling.

    A state is (next placement move, values held on the pebbled nodes).
    Placing a pebble on ``i`` queries the thrifty ``i`` variable at the stored
    child values; removals cost no state.  Placing the root leads to the output.
    """
    shape = _infer_shape(seq, shape)
    if seq.game.kind != "black":
        raise InvalidSequence(None, "expected a black pebbling sequence")
    cost = verify_sequence(seq, tree_dag(shape))
    moves = seq.moves

    def advance(pos: int, store: dict):
        store = dict(store)
        while pos < len(moves):
            m = moves[pos]
            if isinstance(m, DecreaseBlack):
                store.pop(m.node, None)
                pos += 1
                continue
            return ("q", pos, tuple(sorted(store.items())))
        raise InvalidSequence(None, "sequence ends without pebbling the root")

    b = _Builder()
    start = b.state(advance(0, {}))
    queries, outputs, edges = [], [], []
    while b.todo:
        key = b.todo.popleft()
        _, pos, items = key
        store = dict(items)
        m = moves[pos]
        i = m.node
        queries.append(_thrifty_var(shape, i, {c: (v,) for c, v in store.items()}))
        outputs.append(None)
        row = []
        for v in range(1, k + 1):
            if i == 1:
                row.append(("out", v))
                continue
            nxt = {c: x for c, x in store.items() if c not in m.child_map}
            nxt[i] = v
            row.append(b.state(advance(pos + 1, nxt)))
        edges.append(row)
    n = len(queries)
    final = []
    for row in edges:
        final.append(tuple((n + t[1] - 1,) if isinstance(t, tuple) else (t,) for t in row))
    queries.extend([None] * k)
    outputs.extend(range(1, k + 1))
    final.extend([()] * k)
    p = int(cost)
    size = n + k
    meta = {"construction": "black-pebbling", "problem": "FT", "pebbles": p,
            "constant": str(Fraction(size, k ** p))}
    return BranchingProgram(shape, k, queries, outputs, final, start, True, meta=meta)


def build_from_bw_pebbling(seq: PebbleSequence, k: int, shape: TreeShape | None = None) -> BranchingProgram:
    """Nondeterministic thrifty ``BT`` program following a whole black-white
    pebbling.

    Placing a white pebble guesses its value: the state queries the first
    leaf variable and, whatever the answer, branches to all ``k`` guesses.
    Removing a white pebble queries the node's variable at the stored child
    values and keeps only the edge agreeing with the guess, so wrong guesses
    die out.  The root value is kept in a register until the sequence ends.
    """
    shape = _infer_shape(seq, shape)
    dag = tree_dag(shape)
    for m in seq.moves:
        for x in ([m.amount] if not isinstance(m, Combined) else
                  [m.white_dec, m.black_inc, *m.child_map.values()]):
            _whole(x)
    verify_sequence(seq, dag)
    moves = seq.moves
    guess_var = Variable(shape.leaves[0])

    def advance(pos: int, store: dict, reg):
        store = dict(store)
        while pos < len(moves) and isinstance(moves[pos], DecreaseBlack):
            store.pop(moves[pos].node, None)
            pos += 1
        if pos == len(moves):
            if reg is None:
                raise InvalidSequence(None, "sequence ends without pebbling the root")
            return ("out", 1 if reg == 1 else 0)
        return ("q", pos, tuple(sorted(store.items())), reg)

    b = _Builder()
    start = b.state(advance(0, {}, None))
    queries, outputs, edges = [], [], []
    while b.todo:
        key = b.todo.popleft()
        if key[0] == "out":
            queries.append(None)
            outputs.append(key[1])
            edges.append(())
            continue
        _, pos, items, reg = key
        store = dict(items)
        m = moves[pos]
        i = m.node
        outputs.append(None)
        if isinstance(m, IncreaseWhite):
            queries.append(guess_var)
            targets = tuple(b.state(advance(pos + 1, {**store, i: (g, "w")}, reg)) for g in range(1, k + 1))
            edges.append([targets] * k)
            continue
        queries.append(_thrifty_var(shape, i, store))
        row = []
        for v in range(1, k + 1):
            if m.white_dec and store.get(i, (None,))[0] != v:
                row.append(())
                continue
            nxt = {c: x for c, x in store.items() if c not in m.child_map}
            if m.white_dec:
                nxt.pop(i, None)
            new_reg = reg
            if m.black_inc:
                nxt[i] = (v, "b")
                if i == 1:
                    new_reg = v
            row.append((b.state(advance(pos + 1, nxt, new_reg)),))
        edges.append(row)
    # Both output labels must exist even if one is unreachable.
    for lab in (0, 1):
        if ("out", lab) not in b.index:
            b.state(("out", lab))
            b.todo.popleft()
            queries.append(None)
            outputs.append(lab)
            edges.append(())
    meta = {"construction": "bw-pebbling", "problem": "BT"}
    return BranchingProgram(shape, k, queries, outputs, edges, start, meta=meta)

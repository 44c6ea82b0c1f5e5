"""The counting argument for deterministic thrifty programs, made executable.

For each input we pick one critical state per tree node along its computation
path, attach a black pebbling to the path (built backwards from a single
pebble on the root), and take as supercritical the first critical state met
going backwards that queries a height-``l`` node (``l = 2`` by default).
Grouping inputs by supercritical state gives the partition ``{E_r}``;
:class:`AdviceCodec` maps every input of ``E_r`` injectively to a string of
``|Vars| - h`` values, which bounds ``|E_r|`` and hence forces ``|R| >= k^h``.

A second, forward-built pebbling assignment works for programs that only make
thrifty or wrong-wrong queries; it comes with its own supercritical state and
the node sets used to reason about it.
"""

from __future__ import annotations

import bisect
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .bp import BranchingProgram, EXHAUSTIVE_CAP, InputStream, pi_w_params, relaxed_bounds
from .dag import tree_dag
from .pebbling import (BLACK, Combined, DecreaseBlack, PebbleSequence, place_black, remove_black,
                       verify_sequence)
from .tree import EnumerationCapExceeded, FastEvaluator, TepInstance, TreeShape, instance_count


class LemmaViolation(AssertionError):
    """A property the counting argument relies on failed on a concrete input."""


def _vec(inst) -> tuple[int, ...]:
    return inst.values if isinstance(inst, TepInstance) else tuple(inst)


def _thrifty_positions(bp: BranchingProgram, path: Sequence[int], vals: Sequence[int]) -> dict[int, list[int]]:
    """node -> ascending path positions whose state queries that node's thrifty variable."""
    shape = bp.shape
    out: dict[int, list[int]] = {}
    for pos, s in enumerate(path):
        var = bp.queries[s]
        if var is None:
            continue
        i = var.node
        if var.args and any(a != vals[c] for a, c in zip(var.args, shape.children(i))):
            continue
        out.setdefault(i, []).append(pos)
    return out


# --- backwards assignment ----------------------------------------------------------------

@dataclass
class CriticalAssignment:
    instance: TepInstance
    path: list[int]
    critical: dict[int, int]           # node -> path position
    configs: list[frozenset[int]]      # per path position: pebbled nodes before that state's move

    def critical_state(self, node: int) -> int:
        return self.path[self.critical[node]]

    def sequence(self) -> PebbleSequence:
        """The assignment read forward as a black pebbling of the tree."""
        shape = self.instance.shape
        order = sorted(self.critical, key=self.critical.get)
        moves = [place_black(i, shape.children(i)) for i in order]
        moves.append(remove_black(1))
        return PebbleSequence(tuple(moves), BLACK)


def _critical(bp: BranchingProgram, vec, vals) -> tuple[list[int], dict[int, int], list[frozenset]]:
    shape = bp.shape
    _, path = bp.run(vec)
    where = _thrifty_positions(bp, path, vals)
    if 1 not in where:
        raise LemmaViolation("the computation never queries its thrifty root variable")
    crit = {1: where[1][-1]}
    stack = [1]
    while stack:
        i = stack.pop()
        for c in shape.children(i):
            cand = where.get(c, [])
            n = bisect.bisect_left(cand, crit[i])
            if n == 0:
                raise LemmaViolation(f"node {i} is queried at position {crit[i]} "
                                     f"with no earlier query of child {c}")
            crit[c] = cand[n - 1]
            stack.append(c)
    at = {p: i for i, p in crit.items()}
    if len(at) != len(crit):
        raise LemmaViolation("two nodes share a critical state")
    configs: list[frozenset] = [frozenset()] * len(path)
    cur = {1}
    configs[-1] = frozenset(cur)
    for pos in range(len(path) - 2, -1, -1):
        i = at.get(pos)
        if i is not None:
            if i not in cur:
                raise LemmaViolation(f"critical state for node {i} met while {i} holds no pebble")
            cur.discard(i)
            cur.update(shape.children(i))
        configs[pos] = frozenset(cur)
    return path, crit, configs


def critical_states(bp: BranchingProgram, inst: TepInstance) -> CriticalAssignment:
    ev = FastEvaluator(bp.shape, bp.k)
    vec = _vec(inst)
    path, crit, configs = _critical(bp, vec, ev.values(vec))
    if not isinstance(inst, TepInstance):
        inst = TepInstance(bp.shape, bp.k, vec, bp.space)
    return CriticalAssignment(inst, path, crit, configs)


@dataclass
class SupercriticalReport:
    instance: TepInstance | None
    state: int
    position: int
    node: int
    bottleneck: frozenset[int]
    bottleneck_path: list[int]


def _supercritical(bp, path, crit, configs, height: int) -> tuple[int, int, int, frozenset]:
    shape = bp.shape
    best = None
    for i, p in crit.items():
        if shape.height_of(i) == height and (best is None or p > best[1]):
            best = (i, p)
    if best is None:
        raise ValueError(f"the tree has no nodes of height {height}")
    i, p = best
    return path[p], p, i, configs[p]


def supercritical(bp: BranchingProgram, inst: TepInstance, height: int = 2) -> SupercriticalReport:
    ca = critical_states(bp, inst)
    r, p, i, bn = _supercritical(bp, ca.path, ca.critical, ca.configs, height)
    return SupercriticalReport(ca.instance, r, p, i, bn, bp.shape.path_to_root(i))


@dataclass
class Partition:
    height: int
    classes: dict[int, list[int]]                  # state -> ascending instance indices
    nodes: dict[int, int] = field(default_factory=dict)
    min_bottleneck: int = 0
    checked: int = 0
    vectors: list | None = None
    values: list | None = None
    of: list | None = None                          # instance index -> supercritical state

    @property
    def R(self) -> list[int]:
        return sorted(self.classes)

    @property
    def counts(self) -> dict[int, int]:
        return {r: len(v) for r, v in sorted(self.classes.items())}


def partition_by_supercritical(bp: BranchingProgram, height: int = 2, cap: int = EXHAUSTIVE_CAP,
                               keep: bool = False) -> Partition:
    """Group every input by its supercritical state (exhaustive only)."""
    count = instance_count(bp.shape, bp.k)
    if count > cap:
        raise EnumerationCapExceeded(count, cap)
    ev = FastEvaluator(bp.shape, bp.k)
    part = Partition(height, {})
    if keep:
        part.vectors, part.values, part.of = [], [], []
    smallest = None
    for idx, vec in enumerate(InputStream(bp.shape, bp.k, cap)):
        vals = ev.values(vec)
        path, crit, configs = _critical(bp, vec, vals)
        r, _, i, bn = _supercritical(bp, path, crit, configs, height)
        part.classes.setdefault(r, []).append(idx)
        part.nodes[r] = i
        smallest = len(bn) if smallest is None else min(smallest, len(bn))
        if keep:
            part.vectors.append(vec)
            part.values.append(vals)
            part.of.append(r)
    part.min_bottleneck = smallest or 0
    part.checked = count
    return part


def supercritical_counts_by_height(bp: BranchingProgram, cap: int = EXHAUSTIVE_CAP) -> dict[int, int]:
    """``|R_l|`` for ``l = 2..h``; these state sets are disjoint."""
    return {l: len(partition_by_supercritical(bp, l, cap).classes) for l in range(2, bp.shape.h + 1)}


# --- advice -----------------------------------------------------------------------------------

class AdviceCodec:
    """Encoder/decoder for inputs of each class ``E_r``.

    Decoding walks from ``r`` keeping partial node values ``v*`` and the
    learned set ``U_L``: at an internal query whose child values are not yet
    fixed, those children are read off the query's arguments (learned for
    free); a node value not yet fixed is read from the advice; the walk follows
    the edge labelled with the node's value.  Once ``h`` nodes are learned the
    remaining advice is a rank among the inputs of ``E_r`` consistent with
    ``v*``, in enumeration order.
    """

    def __init__(self, bp: BranchingProgram, partition: Partition | None = None):
        if bp.shape.d != 2 or not bp.deterministic:
            raise ValueError("the advice codec handles deterministic programs on binary trees")
        if partition is None or partition.vectors is None:
            partition = partition_by_supercritical(bp, keep=True)
        self.bp = bp
        self.part = partition
        self.h = bp.shape.h
        self.k = bp.k
        self.nvars = bp.shape.var_count(bp.k)
        self.length = self.nvars - self.h
        self._cands: dict = {}
        self.invariant_checks = 0

    def _walk(self, r: int, supply):
        """Shared loop.  ``supply(i)`` yields the next value for node ``i`` or
        ``None`` when the advice runs out.  Returns ``(v*, U_L, used)`` or None."""
        bp, h = self.bp, self.h
        nxt, queries = bp._next, bp.queries
        q = r
        learned: list[int] = []
        vstar: dict[int, int] = {}
        used = 0
        steps = 0
        while len(learned) < h:
            if len(vstar) != used + len(learned):
                raise LemmaViolation(f"invariant broken: |Dom| = {len(vstar)}, "
                                     f"used {used}, learned {len(learned)}")
            self.invariant_checks += 1
            var = queries[q]
            if var is None:
                return None
            i = var.node
            if var.args and (2 * i not in vstar or 2 * i + 1 not in vstar):
                b1, b2 = var.args
                if 2 * i not in vstar:
                    vstar[2 * i] = b1
                    learned.append(2 * i)
                if 2 * i + 1 not in vstar and len(learned) < h:
                    vstar[2 * i + 1] = b2
                    learned.append(2 * i + 1)
            if i not in vstar:
                a = supply(i)
                if a is None:
                    return None
                vstar[i] = a
                used += 1
            q = nxt[q][vstar[i] - 1]
            steps += 1
            if steps > bp.size:
                return None
        if len(vstar) != used + len(learned):
            raise LemmaViolation("invariant broken at loop exit")
        return vstar, learned, used

    def candidates(self, r: int, vstar: dict[int, int]) -> list[int]:
        key = (r, tuple(sorted(vstar.items())))
        if key not in self._cands:
            vals = self.part.values
            self._cands[key] = [x for x in self.part.classes.get(r, ())
                                if all(vals[x][i] == a for i, a in vstar.items())]
        return self._cands[key]

    def decode(self, r: int, advice: Sequence[int]) -> TepInstance | None:
        advice = list(advice)
        pos = [0]

        def supply(_i):
            if pos[0] >= len(advice):
                return None
            pos[0] += 1
            return advice[pos[0] - 1]

        walked = self._walk(r, supply)
        if walked is None:
            return None
        vstar, _, used = walked
        m = self.nvars - len(vstar)
        tail = advice[used: used + m]
        if len(tail) < m:
            return None
        rank = 0
        for x in tail:
            rank = rank * self.k + (x - 1)
        t = rank + 1
        cands = self.candidates(r, vstar)
        if len(cands) > self.k ** m:
            raise LemmaViolation(f"{len(cands)} consistent inputs exceed k^{m}")
        if t > len(cands):
            return None
        return TepInstance(self.bp.shape, self.k, tuple(self.part.vectors[cands[t - 1]]), self.bp.space)

    def encode(self, inst: TepInstance) -> tuple[int, ...]:
        idx = inst.index
        r = self.part.of[idx]
        vals = self.part.values[idx]
        out: list[int] = []

        def supply(i):
            out.append(vals[i])
            return vals[i]

        walked = self._walk(r, supply)
        if walked is None:
            raise LemmaViolation(f"input {idx} does not finish the learning loop from state {r}")
        vstar = walked[0]
        m = self.nvars - len(vstar)
        cands = self.candidates(r, vstar)
        if len(cands) > self.k ** m:
            raise LemmaViolation(f"{len(cands)} consistent inputs exceed k^{m}")
        try:
            rank = cands.index(idx)
        except ValueError:
            raise LemmaViolation(f"input {idx} is inconsistent with its own partial values") from None
        digits = []
        for _ in range(m):
            rank, d = divmod(rank, self.k)
            digits.append(d + 1)
        out.extend(reversed(digits))
        if len(out) > self.length:
            raise LemmaViolation(f"advice of length {len(out)} exceeds {self.length}")
        out.extend([1] * (self.length - len(out)))
        return tuple(out)

    def state_of(self, inst: TepInstance) -> int:
        return self.part.of[inst.index]


def interadv_encode(bp: BranchingProgram, inst: TepInstance, codec: AdviceCodec | None = None) -> tuple[int, ...]:
    codec = codec or AdviceCodec(bp)
    return codec.encode(inst)


def interadv_decode(bp: BranchingProgram, r: int, advice: Sequence[int],
                    codec: AdviceCodec | None = None) -> TepInstance | None:
    codec = codec or AdviceCodec(bp)
    return codec.decode(r, advice)


# --- forward assignment --------------------------------------------------------------------------

@dataclass
class ForwardAssignment:
    instance: TepInstance
    path: list[int]
    thrifty: list[int]                  # path positions q_1..q_t* of thrifty states
    configs: list[frozenset[int]]       # C_1..C_{t*+1}
    sequence: PebbleSequence
    position: int                       # path position of the supercritical state
    state: int
    node: int
    bottleneck: frozenset[int]

    @property
    def bottleneck_path(self) -> list[int]:
        return self.instance.shape.path_to_root(self.node)


def _blocked(shape: TreeShape, pebbled) -> bool:
    def walk(i):
        if i in pebbled:
            return True
        kids = shape.children(i)
        return bool(kids) and all(walk(c) for c in kids)

    return walk(1)


def forward_pebbling_assignment(bp: BranchingProgram, inst: TepInstance) -> ForwardAssignment:
    """Configurations attached to the thrifty states of the input's path,
    built front to back, up to the first thrifty root query."""
    shape = bp.shape
    vals = inst.node_values
    vl = [0] + [vals[i] for i in shape.nodes]
    _, path = bp.run(inst.values)
    where = _thrifty_positions(bp, path, vl)
    if 1 not in where:
        raise LemmaViolation("the computation never queries its thrifty root variable")
    last = where[1][0]
    thrifty = sorted(p for ps in where.values() for p in ps if p <= last)

    def first_after(node: int, p: int):
        cand = where.get(node, [])
        n = bisect.bisect_right(cand, p)
        return cand[n] if n < len(cand) else None

    def queried_before_next(node: int, other: int, p: int) -> bool:
        """Is ``other`` queried (thriftily) after ``p`` before ``node`` is again?"""
        a = first_after(other, p)
        if a is None:
            return False
        b = first_after(node, p)
        return b is None or b > a

    configs = [frozenset()]
    moves = []
    for p in thrifty:
        cur = set(configs[-1])
        i = bp.queries[path[p]].node
        kids = shape.children(i)
        if i in cur:
            raise LemmaViolation(f"node {i} is queried while already pebbled")
        if kids and not all(c in cur for c in kids):
            raise LemmaViolation(f"node {i} is queried before its children are pebbled")
        if i == 1:
            moves.append(place_black(1, kids))
            cur.difference_update(kids)
            cur.add(1)
            configs.append(frozenset(cur))
            break
        dropped = [c for c in kids if not queried_before_next(c, i, p)]
        place = queried_before_next(i, shape.parent(i), p)
        if place:
            moves.append(Combined(i, 0, 1, {c: 1 for c in dropped}))
            cur.add(i)
        else:
            moves.extend(DecreaseBlack(c) for c in dropped)
        cur.difference_update(dropped)
        configs.append(frozenset(cur))
    # finish: lift the remaining pebbles, the root last
    rest = sorted(configs[-1] - {1})
    moves.extend(remove_black(u) for u in rest)
    moves.append(remove_black(1))
    seq = PebbleSequence(tuple(moves), BLACK)

    t = next(n for n, cfg in enumerate(configs) if _blocked(shape, cfg))
    if t == 0:
        raise LemmaViolation("the empty configuration blocks the tree")
    leafnode = bp.queries[path[thrifty[t - 1]]].node
    if not shape.is_leaf(leafnode):
        raise LemmaViolation(f"first blocking configuration follows a query of internal node {leafnode}")
    par = shape.parent(leafnode)
    tp = next((n for n in range(t, len(thrifty)) if bp.queries[path[thrifty[n]]].node == par), None)
    if tp is None:
        raise LemmaViolation(f"no thrifty query of node {par} after the blocking configuration")
    pos = thrifty[tp]
    return ForwardAssignment(inst, path, thrifty, configs, seq, pos, path[pos], par, configs[tp])


def check_forward_sequence(fa: ForwardAssignment) -> bool:
    verify_sequence(fa.sequence, tree_dag(fa.instance.shape))
    return True


def _suffix_first(bp: BranchingProgram, fa: ForwardAssignment) -> dict[int, int]:
    """node -> first path position at or after the supercritical state that
    queries that node's thrifty variable."""
    vals = fa.instance.node_values
    vl = [0] + [vals[i] for i in fa.instance.shape.nodes]
    where = _thrifty_positions(bp, fa.path, vl)
    out = {}
    for i, ps in where.items():
        n = bisect.bisect_left(ps, fa.position)
        if n < len(ps):
            out[i] = ps[n]
    return out


def learn_bn_nodes_holds(bp: BranchingProgram, fa: ForwardAssignment) -> bool:
    """Bottleneck nodes are exactly the off-path nodes whose parent is queried
    (from the supercritical state on) before the node itself is."""
    shape = fa.instance.shape
    first = _suffix_first(bp, fa)
    bnpath = set(fa.bottleneck_path)
    for i in shape.nodes:
        par = shape.parent(i)
        rhs = (i not in bnpath and par is not None and par in first
               and (i not in first or first[par] < first[i]))
        if rhs != (i in fa.bottleneck):
            return False
    return True


def learn_from_bn_path_holds(bp: BranchingProgram, fa: ForwardAssignment) -> bool:
    """Along the bottleneck path, lower nodes are first queried before higher ones."""
    first = _suffix_first(bp, fa)
    bn = fa.bottleneck_path
    for n, j in enumerate(bn[:-1]):
        for jp in bn[n + 1:]:
            if j not in first or jp not in first or not first[j] < first[jp]:
                return False
    return True


@dataclass
class NodeSets:
    bn_path: list[int]
    sibl_bn_path: list[int]
    right_path: dict[int, list[int]]
    learnable: set[int]
    learnable_star: set[int]


def right_path(shape: TreeShape, i: int) -> list[int]:
    out = [i]
    while not shape.is_leaf(out[-1]):
        out.append(shape.children(out[-1])[-1])
    return out


def node_sets(shape: TreeShape, sc_node: int) -> NodeSets:
    """Node sets around the bottleneck path of a supercritical node."""
    bn = shape.path_to_root(sc_node)
    sibl = [s for j in bn for s in shape.siblings(j)]
    rp = {s: right_path(shape, s) for s in sibl}
    kids = set(shape.children(sc_node))
    learnable = kids | {x for p in rp.values() for x in p}
    return NodeSets(bn, sibl, rp, learnable, learnable - kids)


def right_path_bottleneck_holds(fa: ForwardAssignment) -> bool:
    ns = node_sets(fa.instance.shape, fa.node)
    return all(set(p) & fa.bottleneck for p in ns.right_path.values())


def relaxed_bound_check(bp: BranchingProgram, cap: int = EXHAUSTIVE_CAP) -> dict:
    """Measured (pi, w) against the size bounds ``k^h/pi^(h-2)`` and ``k^h/pi^w``."""
    pi, w = pi_w_params(bp, cap)
    rep = relaxed_bounds(bp, pi, w)
    rep["ok"] = rep["ok_pi"] and rep["ok_w"]
    return rep


def histogram(part: Partition) -> Counter:
    return Counter({r: len(v) for r, v in part.classes.items()})

"""Minimum pebbling cost by breadth-first search over configuration graphs.

Pebble values are kept as integer numerators over the game's fixed
denominator ``c`` (``c = 1`` for the black and black-white games).  A search
state is the numerator vector plus a bit recording whether the root has
already carried a full black pebble; the goal is the empty configuration with
that bit set.  ``min_cost`` tries bounds in ascending steps of ``1/c`` and
stops at the first feasible one, so the returned cost is minimal over the grid.
"""

from __future__ import annotations

import itertools
import math
import os
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .dag import Dag, tree_dag
from .pebbling import (BLACK, BLACK_WHITE, Combined, DecreaseBlack, Game, IncreaseWhite,
                       PebbleSequence, verify_sequence)
from .tree import TreeShape

DEFAULT_CONFIG_CAP = 1 << 26
# Rough bytes per stored configuration, used to turn PEBBLEWORKS_CAP_MB into a count.
_BYTES_PER_CONFIG = 256


class SearchCapExceeded(RuntimeError):
    def __init__(self, estimate: int, cap: int):
        super().__init__(f"search needs up to {estimate} configurations, cap is {cap}")
        self.estimate = estimate
        self.cap = cap


class Infeasible(Exception):
    def __init__(self, max_bound: Fraction):
        super().__init__(f"no pebbling with cost <= {max_bound}")
        self.max_bound = max_bound


@dataclass(frozen=True)
class SearchResult:
    feasible: bool
    witness: PebbleSequence | None
    explored: int
    bound: Fraction
    game: Game

    @property
    def cost(self) -> Fraction | None:
        return self.bound if self.feasible else None


def default_config_cap() -> int:
    mb = os.environ.get("PEBBLEWORKS_CAP_MB")
    if mb:
        return max(1, int(float(mb) * (1 << 20)) // _BYTES_PER_CONFIG)
    return DEFAULT_CONFIG_CAP


def _as_dag(dag: Dag | TreeShape) -> Dag:
    return tree_dag(dag) if isinstance(dag, TreeShape) else dag


def _node_options(game: Game) -> list[tuple[int, int]]:
    """Admissible (black, white) numerator pairs for one node."""
    c = game.c
    if game.kind == "black":
        return [(0, 0), (1, 0)]
    return [(b, w) for b in range(c + 1) for w in range(c + 1 - b)]


def estimate_configurations(dag: Dag | TreeShape, game: Game, bound: Fraction) -> int:
    """Exact count of configurations with total <= bound, times two for the rooted bit."""
    dag = _as_dag(dag)
    units = math.floor(Fraction(bound) * game.c)
    per_node = [0] * (2 * game.c + 1)
    for b, w in _node_options(game):
        per_node[b + w] += 1
    poly = [1] + [0] * units
    for _ in range(len(dag)):
        nxt = [0] * (units + 1)
        for t, cnt in enumerate(poly):
            if cnt:
                for s, m in enumerate(per_node):
                    if t + s > units:
                        break
                    nxt[t + s] += cnt * m
        poly = nxt
    return 2 * sum(poly)


class _Space:
    """Compact integer encoding of configurations on one DAG for one game."""

    def __init__(self, dag: Dag, game: Game, symmetry: bool = True):
        self.dag = dag
        self.game = game
        self.c = game.c
        self.ids = list(dag.topological_order)
        self.pos = {u: p for p, u in enumerate(self.ids)}
        self.n = len(self.ids)
        self.kids = [tuple(self.pos[c] for c in dag.children(u)) for u in self.ids]
        self.root = self.pos[dag.root]
        self.radix = (self.c + 1) ** 2
        self.white = game.kind != "black"
        self.noslide = game.kind == "noslide"
        self.symmetric = symmetry and _is_complete_tree(dag)

    def canonical(self, bs, ws, rooted: bool) -> tuple[int, list[int] | None]:
        """Key of the least representative under sibling-subtree swaps, with the
        position map ``m`` (old position ``p`` goes to ``m[p]``)."""
        if not self.symmetric:
            return self.encode(bs, ws, rooted), None
        kids = self.kids
        sig: dict[int, tuple] = {}
        for p in range(self.n):  # sources first, so children come before parents
            sig[p] = (bs[p], ws[p], tuple(sorted(sig[q] for q in kids[p])))
        m = [0] * self.n
        stack = [(self.root, self.root)]
        while stack:
            p, r = stack.pop()
            m[p] = r
            order = sorted(kids[p], key=sig.__getitem__)
            stack.extend(zip(order, kids[r]))
        nb, nw = [0] * self.n, [0] * self.n
        for p in range(self.n):
            nb[m[p]] = bs[p]
            nw[m[p]] = ws[p]
        return self.encode(nb, nw, rooted), m

    def decode(self, key: int) -> tuple[list[int], list[int], bool]:
        rooted = bool(key & 1)
        key >>= 1
        bs, ws = [0] * self.n, [0] * self.n
        c1 = self.c + 1
        for p in range(self.n):
            key, code = divmod(key, self.radix)
            bs[p], ws[p] = divmod(code, c1)
        return bs, ws, rooted

    def encode(self, bs, ws, rooted: bool) -> int:
        key = 0
        c1 = self.c + 1
        for p in range(self.n - 1, -1, -1):
            key = key * self.radix + bs[p] * c1 + ws[p]
        return (key << 1) | int(rooted)

    def successors(self, key: int, limit: int):
        """Yield ``(new_key, new_total, move)`` with ``move`` in compact form:
        ``(kind, p, amount_or_wd, bi, child_decs)``."""
        bs, ws, rooted = self.decode(key)
        c = self.c
        total = sum(bs) + sum(ws)
        root = self.root
        for p in range(self.n):
            b, w = bs[p], ws[p]
            free = c - b - w
            # rule (i): lower black
            if b:
                amounts = (1,) if self.noslide else (range(1, b + 1) if c > 1 else (b,))
                for x in amounts:
                    bs[p] = b - x
                    yield self.canonical(bs, ws, rooted), total - x, ("db", p, x, 0, ())
                bs[p] = b
            # rule (ii): raise white
            if self.white and free:
                amounts = (1,) if self.noslide else range(1, free + 1)
                for x in amounts:
                    if total + x > limit:
                        break
                    ws[p] = w + x
                    yield self.canonical(bs, ws, rooted), total + x, ("iw", p, x, 0, ())
                ws[p] = w
            # rule (iii): needs every child at value c
            kids = self.kids[p]
            if any(bs[q] + ws[q] != c for q in kids):
                continue
            if self.noslide:
                if free:
                    if total + 1 <= limit:
                        bs[p] = b + 1
                        yield self.canonical(bs, ws, rooted or (p == root and b + 1 == c)), total + 1, ("cb", p, 0, 1, ())
                        bs[p] = b
                if w:
                    ws[p] = w - 1
                    yield self.canonical(bs, ws, rooted), total - 1, ("cb", p, 1, 0, ())
                    ws[p] = w
                continue
            dec_ranges = [range(bs[q] + 1) for q in kids]
            for wd in range(w + 1):
                for bi in range(free + wd + 1):
                    if wd == 0 and bi == 0:
                        continue  # pure child removals are ordinary rule (i) moves
                    nb = b + bi
                    now_rooted = rooted or (p == root and nb == c)
                    for decs in itertools.product(*dec_ranges):
                        nt = total - wd + bi - sum(decs)
                        if nt > limit:
                            continue
                        bs[p], ws[p] = nb, w - wd
                        saved = [bs[q] for q in kids]
                        for q, x in zip(kids, decs):
                            bs[q] -= x
                        yield self.canonical(bs, ws, now_rooted), nt, ("cb", p, wd, bi, decs)
                        for q, x in zip(kids, saved):
                            bs[q] = x
                        bs[p], ws[p] = b, w

    def to_move(self, mv, pi=None):
        """Move object; ``pi`` maps search positions to actual positions."""
        kind, p, x, bi, decs = mv
        at = (lambda q: self.ids[pi[q]]) if pi is not None else (lambda q: self.ids[q])
        f = Fraction(1, self.c)
        if kind == "db":
            return DecreaseBlack(at(p), x * f)
        if kind == "iw":
            return IncreaseWhite(at(p), x * f)
        child_dec = {at(q): a * f for q, a in zip(self.kids[p], decs) if a}
        return Combined(at(p), x * f, bi * f, child_dec)


def _is_complete_tree(dag: Dag) -> bool:
    """Every node has at most one parent, every internal node the same number
    of children, and every leaf the same depth; sibling subtrees are then
    interchangeable."""
    if any(len(dag.parents(u)) > 1 for u in dag.ids):
        return False
    degrees = {len(dag.children(u)) for u in dag.ids} - {0}
    if len(degrees) > 1:
        return False
    depth = {dag.root: 0}
    for u in reversed(dag.topological_order):
        for c in dag.children(u):
            depth[c] = depth[u] + 1
    return len({depth[u] for u in dag.sources}) <= 1 and len(depth) == len(dag.ids)


def feasible_under(dag: Dag | TreeShape, game: Game, bound, cap: int | None = None,
                   symmetry: bool = True) -> SearchResult:
    """Is there a complete pebbling within ``game`` whose every configuration
    holds at most ``bound`` pebbles?

    On complete trees configurations are identified up to swapping sibling
    subtrees (``symmetry=False`` turns this off); the witness is mapped back
    to actual node labels."""
    dag = _as_dag(dag)
    bound = Fraction(bound)
    cap = default_config_cap() if cap is None else cap
    estimate = estimate_configurations(dag, game, bound)
    if estimate > cap:
        raise SearchCapExceeded(estimate, cap)
    space = _Space(dag, game, symmetry)
    limit = math.floor(bound * game.c)
    start = 0
    goal = 1  # empty with the rooted bit
    parent: dict[int, tuple[int, tuple] | None] = {start: None}
    queue = deque([start])
    found = False
    while queue:
        key = queue.popleft()
        for (nk, sigma), _total, mv in space.successors(key, limit):
            if nk in parent:
                continue
            parent[nk] = (key, mv, sigma)
            if nk == goal:
                found = True
                break
            queue.append(nk)
        if found:
            break
        if len(parent) > cap:
            raise SearchCapExceeded(len(parent), cap)
    if not found:
        return SearchResult(False, None, len(parent), bound, game)
    steps = []
    key = goal
    while parent[key] is not None:
        prev, mv, sigma = parent[key]
        steps.append((mv, sigma))
        key = prev
    steps.reverse()
    # Replay through the symmetry maps: the search state S_i stands for the
    # actual configuration pi_i(S_i), and pi_{i+1} = pi_i o sigma_i^-1.
    moves = []
    pi = list(range(space.n))
    for mv, sigma in steps:
        moves.append(space.to_move(mv, pi))
        if sigma is not None:
            inv = [0] * space.n
            for p, q in enumerate(sigma):
                inv[q] = p
            pi = [pi[inv[q]] for q in range(space.n)]
    return SearchResult(True, PebbleSequence(tuple(moves), game), len(parent), bound, game)


def candidate_bounds(game: Game, max_bound):
    step = Fraction(1, game.c)
    b = Fraction(1)
    while b <= Fraction(max_bound):
        yield b
        b += step


def min_cost(dag: Dag | TreeShape, game: Game, max_bound=None, cap: int | None = None,
             symmetry: bool = True) -> SearchResult:
    """Smallest grid cost of a complete pebbling, with a verified witness.

    Raises :class:`Infeasible` when nothing up to ``max_bound`` works.  The
    default ``max_bound`` is the node count, which always suffices.
    """
    dag = _as_dag(dag)
    if max_bound is None:
        max_bound = Fraction(len(dag))
    explored = 0
    for b in candidate_bounds(game, max_bound):
        res = feasible_under(dag, game, b, cap, symmetry)
        explored += res.explored
        if res.feasible:
            cost = verify_sequence(res.witness, dag)
            if cost != b:
                raise AssertionError(f"witness cost {cost} differs from searched bound {b}")
            return SearchResult(True, res.witness, explored, b, game)
    raise Infeasible(Fraction(max_bound))


def black_cost(dag: Dag | TreeShape, cap: int | None = None) -> int:
    return int(min_cost(dag, BLACK, cap=cap).bound)


def bw_cost(dag: Dag | TreeShape, cap: int | None = None) -> int:
    return int(min_cost(dag, BLACK_WHITE, cap=cap).bound)


def fract_lower_bound(d: int, h: int) -> Fraction:
    """Lower bound ``(d-1)h/2 - d/2`` on the fractional pebbling cost of ``T_d^h``."""
    if d < 2 or h < 1:
        raise ValueError("need d >= 2 and h >= 1")
    return Fraction((d - 1) * h, 2) - Fraction(d, 2)


def klawe_bw_bound(black_cost: int) -> int:
    """Black-white cost lower bound ``floor(B/2) + 1`` for nice graphs."""
    if black_cost < 1:
        raise ValueError("black cost must be >= 1")
    return black_cost // 2 + 1

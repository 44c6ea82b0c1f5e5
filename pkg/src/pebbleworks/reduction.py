"""The G and G' DAGs that turn discretized fractional pebbling of ``T_d^h``
into whole black-white pebbling, plus the niceness and path checks used to
lower-bound their pebbling cost.

Every tree node ``v`` becomes ``c`` copies ``v[1..c]``.  In ``G`` each tree
edge becomes a complete bipartite graph between the copies; a new root sits
above the ``c`` copies of the tree root.  ``G'`` drops, for each copy ``v[i]``
of an internal tree node, the edges from its ``i-1`` smallest and ``c-i``
largest children, where nodes are ordered by (inorder rank of the tree node,
copy index).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import networkx as nx

from .dag import Dag, NodeInfo
from .tree import TreeShape

DEFAULT_ANTICHAIN_LIMIT = 10 ** 6


class DisjointnessViolation(AssertionError):
    pass


def node_id(shape: TreeShape, c: int, tree_node: int, copy: int) -> int:
    return (tree_node - 1) * c + (copy - 1)


def build_G(d: int, h: int, c: int) -> Dag:
    shape = TreeShape(d, h)
    nodes = [NodeInfo(node_id(shape, c, v, i), v, i) for v in shape.nodes for i in range(1, c + 1)]
    root = shape.node_count * c
    nodes.append(NodeInfo(root, None, None))
    edges = []
    for v in shape.nodes:
        for u in shape.children(v):
            for i in range(1, c + 1):
                for j in range(1, c + 1):
                    edges.append((node_id(shape, c, u, i), node_id(shape, c, v, j)))
    edges.extend((node_id(shape, c, 1, i), root) for i in range(1, c + 1))
    return Dag(tuple(nodes), tuple(edges), name=f"G_{d},{h}(c={c})",
               meta={"d": d, "h": h, "c": c, "prime": False})


def build_Gprime(d: int, h: int, c: int) -> Dag:
    g = build_G(d, h, c)
    key = order_key(g)
    drop = set()
    for n in g.nodes:
        if n.tree_node is None or not g.children(n.id):
            continue
        kids = sorted(g.children(n.id), key=key)
        i = n.copy
        removed = kids[:i - 1] + kids[len(kids) - (c - i):]
        drop.update((u, n.id) for u in removed)
    edges = tuple(e for e in g.edges if e not in drop)
    return Dag(g.nodes, edges, name=f"G'_{d},{h}(c={c})",
               meta={"d": d, "h": h, "c": c, "prime": True})


# --- order and paths ------------------------------------------------------------

def order_key(dag: Dag) -> Callable[[int], tuple]:
    """Key realising the node order: inorder rank of the tree node, then copy.
    Nodes without a tree back-reference (the added root) come last; graphs
    without construction metadata fall back to id order."""
    meta = dag.meta or {}
    if "d" not in meta or "h" not in meta:
        return lambda u: (0, u)
    shape = TreeShape(meta["d"], meta["h"])
    rank = {v: r for r, v in enumerate(shape.inorder())}
    info = dag.info

    def key(u: int) -> tuple:
        n = info[u]
        if n.tree_node is None:
            return (len(rank), 0, u)
        return (rank[n.tree_node], n.copy or 1, u)

    return key


def sorted_children(dag: Dag, u: int) -> list[int]:
    return sorted(dag.children(u), key=order_key(dag))


def _extreme_path(dag: Dag, u: int, pick) -> list[int]:
    key = order_key(dag)
    path = [u]
    while dag.children(path[-1]):
        path.append(pick(dag.children(path[-1]), key=key))
    path.reverse()
    return path


def leftmost_path(dag: Dag, u: int) -> list[int]:
    """Path from a source up to ``u`` taking the smallest child at every level."""
    return _extreme_path(dag, u, min)


def rightmost_path(dag: Dag, u: int) -> list[int]:
    return _extreme_path(dag, u, max)


def _same_height_pairs(dag: Dag) -> Iterator[tuple[int, int]]:
    key = order_key(dag)
    by_height: dict[int, list[int]] = {}
    for u in dag.ids:
        by_height.setdefault(dag.height[u], []).append(u)
    for nodes in by_height.values():
        nodes.sort(key=key)
        yield from itertools.combinations(nodes, 2)


def check_order_fact(dag: Dag) -> bool:
    """For ``u < u'`` at the same height: the smallest child of ``u`` is not a
    child of ``u'`` and the largest child of ``u'`` is not a child of ``u``."""
    key = order_key(dag)
    for u, v in _same_height_pairs(dag):
        cu, cv = dag.children(u), dag.children(v)
        if not cu or not cv:
            continue
        if min(cu, key=key) in cv or max(cv, key=key) in cu:
            return False
    return True


def gprime_black_cost_formula(d: int, h: int, c: int) -> int:
    return c * ((d - 1) * (h - 1) + 1)


def node_black_cost_formula(d: int, c: int, level: int) -> int:
    """Black cost of pebbling one node of ``G'`` at tree height ``level``."""
    return c * (d - 1) * (level - 1) + 1


# --- niceness --------------------------------------------------------------------------

@dataclass
class NiceReport:
    property1: bool = True
    property2: bool = True
    property3: bool = True
    counterexample: dict | None = None
    antichains_checked: int = 0
    partial: bool = False
    fallback_used: int = 0

    @property
    def nice(self) -> bool:
        return self.property1 and self.property2 and self.property3

    def __bool__(self) -> bool:
        return self.nice


def antichains(dag: Dag, max_size: int | None = None) -> Iterator[tuple[int, ...]]:
    """All antichains with at least two nodes, in lexicographic id order."""
    ids = sorted(dag.ids)

    def extend(chain: list[int], start: int):
        if len(chain) >= 2:
            yield tuple(chain)
        if max_size is not None and len(chain) >= max_size:
            return
        for n in range(start, len(ids)):
            x = ids[n]
            if all(not dag.comparable(x, y) for y in chain):
                chain.append(x)
                yield from extend(chain, n + 1)
                chain.pop()

    yield from extend([], 0)


def _constructive_paths(dag: Dag, u: int, others: Sequence[int]) -> list[list[int]] | None:
    key = order_key(dag)
    paths = []
    used: set[int] = set()
    for x in others:
        p = leftmost_path(dag, x) if key(x) < key(u) else rightmost_path(dag, x)
        if any(dag.comparable(y, u) for y in p) or used.intersection(p):
            return None
        used.update(p)
        paths.append(p)
    return paths


def _flow_paths_exist(dag: Dag, u: int, others: Sequence[int]) -> bool:
    """Node-disjoint source paths to every node of ``others`` avoiding all
    nodes comparable with ``u`` (vertex-split max flow)."""
    allowed = {x for x in dag.ids if not dag.comparable(x, u)}
    g = nx.DiGraph()
    for x in allowed:
        g.add_edge(("in", x), ("out", x), capacity=1)
        if not dag.children(x):
            g.add_edge("S", ("in", x), capacity=1)
    for a, b in dag.edges:
        if a in allowed and b in allowed:
            g.add_edge(("out", a), ("in", b), capacity=1)
    for x in others:
        if x not in allowed:
            return False
        g.add_edge(("out", x), "T", capacity=1)
    if "S" not in g or "T" not in g:
        return False
    return nx.maximum_flow_value(g, "S", "T") == len(others)


def check_nice(dag: Dag, antichain_cap: int | None = None,
               black_cost: Callable[[Dag], int] | None = None,
               antichain_limit: int = DEFAULT_ANTICHAIN_LIMIT) -> NiceReport:
    """Check the three niceness properties and report the first failure.

    ``antichain_cap`` bounds the antichain size examined for property 3
    (``None`` means no bound); at most ``antichain_limit`` antichains are
    examined, after which the report is flagged ``partial``.
    """
    if black_cost is None:
        from .search import black_cost as _bc
        black_cost = _bc
    rep = NiceReport()
    cost_cache: dict[int, int] = {}

    def cost(x: int) -> int:
        if x not in cost_cache:
            cost_cache[x] = black_cost(dag.subdag_to(x))
        return cost_cache[x]

    for u in sorted(dag.ids):
        kids = sorted(dag.children(u))
        for a, b in itertools.combinations(kids, 2):
            if dag.comparable(a, b):
                rep.property2 = False
                rep.counterexample = rep.counterexample or {"property": 2, "parent": u, "children": [a, b]}
        if len(kids) >= 2:
            costs = {x: cost(x) for x in kids}
            if len(set(costs.values())) > 1:
                rep.property1 = False
                rep.counterexample = rep.counterexample or {"property": 1, "parent": u, "costs": costs}
    for chain in antichains(dag, antichain_cap):
        if rep.antichains_checked >= antichain_limit:
            rep.partial = True
            break
        rep.antichains_checked += 1
        for u in chain:
            others = [x for x in chain if x != u]
            if _constructive_paths(dag, u, others) is not None:
                continue
            rep.fallback_used += 1
            if not _flow_paths_exist(dag, u, others):
                rep.property3 = False
                rep.counterexample = rep.counterexample or {"property": 3, "u": u, "others": others}
                return rep
    return rep


# --- bottleneck witness ---------------------------------------------------------------

@dataclass
class BottleneckWitness:
    path: list[int]
    S: list[int]
    paths: dict[int, list[int]] = field(default_factory=dict)

    @property
    def configuration(self) -> set[int]:
        """One pebble per node of ``S`` plus the source of the blocked path."""
        return set(self.S) | {self.path[0]}


def root_paths(dag: Dag) -> Iterator[list[int]]:
    """Every source-to-root path, listed source first."""
    def down(path: list[int]):
        kids = dag.children(path[-1])
        if not kids:
            yield list(reversed(path))
            return
        for x in sorted(kids):
            path.append(x)
            yield from down(path)
            path.pop()

    yield from down([dag.root])


def bottleneck_witness(dag: Dag, path: Sequence[int]) -> BottleneckWitness:
    """The set ``S`` of off-path children of path nodes, with a leftmost or
    rightmost source path for each, checked to be mutually disjoint and
    disjoint from ``path``."""
    key = order_key(dag)
    on_path = set(path)
    at_height = {dag.height[x]: x for x in path}
    S = sorted({x for p in path for x in dag.children(p) if x not in on_path}, key=key)
    wit = BottleneckWitness(list(path), S)
    used = set(on_path)
    for x in S:
        ref = at_height[dag.height[x]]
        p = leftmost_path(dag, x) if key(x) < key(ref) else rightmost_path(dag, x)
        clash = used.intersection(p)
        if clash:
            raise DisjointnessViolation(f"path to {x} meets {sorted(clash)}")
        used.update(p)
        wit.paths[x] = p
    return wit


def blocks_all_paths(dag: Dag, pebbled: set[int]) -> bool:
    """Does every source-to-root path contain a pebbled node?"""
    open_nodes: set[int] = set()
    for x in dag.topological_order:
        if x in pebbled:
            continue
        kids = dag.children(x)
        if not kids or any(k in open_nodes for k in kids):
            open_nodes.add(x)
    return dag.root not in open_nodes

"""Directed acyclic graphs for pebbling.

Edges run child -> parent, so sources (in-degree 0) are the leaves of the
pebbling game and the unique sink is the root.  Each node may carry a back
reference ``(tree_node, copy)`` to the tree node it simulates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .tree import TreeShape


class InvalidDag(ValueError):
    pass


@dataclass(frozen=True)
class NodeInfo:
    id: int
    tree_node: int | None = None
    copy: int | None = None


@dataclass(frozen=True)
class Dag:
    nodes: tuple[NodeInfo, ...]
    edges: tuple[tuple[int, int], ...]
    name: str = field(default="", compare=False)
    # Height (in levels) of each node, when the builder knows it.
    heights: Mapping[int, int] | None = field(default=None, compare=False, repr=False)
    # Construction parameters, e.g. {"d": 2, "h": 3, "c": 3, "prime": True}.
    meta: Mapping | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise InvalidDag("duplicate node ids")
        known = set(ids)
        for u, v in self.edges:
            if u not in known or v not in known:
                raise InvalidDag(f"edge ({u}, {v}) references an unknown node")
        if len(self.topological_order) != len(ids):
            raise InvalidDag("graph has a cycle")

    @cached_property
    def ids(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes)

    @cached_property
    def info(self) -> dict[int, NodeInfo]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def _children(self) -> dict[int, tuple[int, ...]]:
        ch: dict[int, list[int]] = {u: [] for u in self.ids}
        for u, v in self.edges:
            ch[v].append(u)
        return {u: tuple(c) for u, c in ch.items()}

    @cached_property
    def _parents(self) -> dict[int, tuple[int, ...]]:
        pa: dict[int, list[int]] = {u: [] for u in self.ids}
        for u, v in self.edges:
            pa[u].append(v)
        return {u: tuple(p) for u, p in pa.items()}

    def children(self, u: int) -> tuple[int, ...]:
        return self._children[u]

    def parents(self, u: int) -> tuple[int, ...]:
        return self._parents[u]

    @cached_property
    def sources(self) -> tuple[int, ...]:
        return tuple(u for u in self.ids if not self._children[u])

    @cached_property
    def sinks(self) -> tuple[int, ...]:
        return tuple(u for u in self.ids if not self._parents[u])

    @property
    def root(self) -> int:
        if len(self.sinks) != 1:
            raise InvalidDag(f"expected a unique sink, found {len(self.sinks)}")
        return self.sinks[0]

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        """Sources first."""
        indeg = {u: 0 for u in self.ids}
        for u, v in self.edges:
            indeg[v] += 1
        out, ready = [], [u for u in self.ids if indeg[u] == 0]
        parents: dict[int, list[int]] = {u: [] for u in self.ids}
        for u, v in self.edges:
            parents[u].append(v)
        while ready:
            u = ready.pop()
            out.append(u)
            for v in parents[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
        return tuple(out)

    @cached_property
    def height(self) -> dict[int, int]:
        """Longest source-to-node path length in levels (sources have height 1)."""
        if self.heights is not None:
            return dict(self.heights)
        hts: dict[int, int] = {}
        for u in self.topological_order:
            kids = self._children[u]
            hts[u] = 1 + max((hts[c] for c in kids), default=0)
        return hts

    @cached_property
    def descendants(self) -> dict[int, frozenset[int]]:
        """Nodes with a path *to* ``u`` (excluding ``u``)."""
        desc: dict[int, frozenset[int]] = {}
        for u in self.topological_order:
            acc: set[int] = set()
            for c in self._children[u]:
                acc.add(c)
                acc |= desc[c]
            desc[u] = frozenset(acc)
        return desc

    def comparable(self, u: int, v: int) -> bool:
        return u == v or u in self.descendants[v] or v in self.descendants[u]

    def subdag_to(self, u: int) -> "Dag":
        """The sub-DAG of ``u`` and every node with a path to ``u``."""
        keep = self.descendants[u] | {u}
        nodes = tuple(n for n in self.nodes if n.id in keep)
        edges = tuple(e for e in self.edges if e[0] in keep and e[1] in keep)
        return Dag(nodes, edges, name=f"{self.name}[{u}]")

    def __len__(self) -> int:
        return len(self.nodes)

    def to_json(self) -> dict:
        out = {
            "nodes": [{"id": n.id, "tree_node": n.tree_node, "copy": n.copy} for n in self.nodes],
            "edges": [[u, v] for u, v in self.edges],
        }
        if self.meta:
            out["meta"] = dict(self.meta)
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "Dag":
        try:
            nodes = tuple(NodeInfo(int(n["id"]), n.get("tree_node"), n.get("copy")) for n in obj["nodes"])
            edges = tuple((int(u), int(v)) for u, v in obj["edges"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidDag(f"malformed DAG JSON: {exc}") from exc
        return cls(nodes, edges, name=obj.get("name", ""), meta=obj.get("meta"))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def tree_dag(shape: TreeShape) -> Dag:
    """The tree itself as a DAG; node ids are the heap numbers."""
    nodes = tuple(NodeInfo(i, i, 1) for i in shape.nodes)
    edges = tuple((c, i) for i in shape.nodes for c in shape.children(i))
    heights = {i: shape.height_of(i) for i in shape.nodes}
    return Dag(nodes, edges, name=f"T_{shape.d}^{shape.h}", heights=heights,
               meta={"d": shape.d, "h": shape.h, "c": 1, "tree": True})


def make_dag(edges: Iterable[Sequence[int]], nodes: Iterable[int] | None = None, name: str = "") -> Dag:
    edges = tuple((int(u), int(v)) for u, v in edges)
    ids = set(nodes or ()) | {u for e in edges for u in e}
    return Dag(tuple(NodeInfo(i) for i in sorted(ids)), edges, name=name)


def load_dag(path) -> Dag:
    with open(path) as fh:
        return Dag.from_json(json.load(fh))

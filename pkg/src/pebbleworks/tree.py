"""Balanced d-ary trees in heap numbering, tree evaluation instances, and evaluation.

Nodes are numbered from 1 (the root).  For binary trees the children of ``i``
are ``2i`` and ``2i+1``; for arity ``d`` they are ``d(i-1)+2 .. d*i+1``.
Heights count levels, so ``TreeShape(2, 1)`` is a single node.

An instance assigns a value in ``[k] = {1..k}`` to every input variable.  The
variables are ordered globally: leaf variables ``l_i`` by ascending node, then
the table entries ``f_i(a_1..a_d)`` by ascending node with the argument tuple in
row-major order.  Instances are stored as a flat value vector in that order,
and the enumeration order over all instances is the odometer order on that
vector (last variable fastest).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Mapping, Sequence

DEFAULT_INSTANCE_CAP = 1 << 24


class EnumerationCapExceeded(RuntimeError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"{count} items exceed the enumeration cap of {cap}")
        self.count = count
        self.cap = cap


class InvalidInstance(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Variable:
    """An input variable: ``l_i`` when ``args`` is empty, else ``f_i(args)``."""

    node: int
    args: tuple[int, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.args

    def __str__(self) -> str:
        if self.is_leaf:
            return f"l_{self.node}"
        return f"f_{self.node}({','.join(map(str, self.args))})"

    def to_json(self) -> dict:
        if self.is_leaf:
            return {"leaf": self.node}
        if len(self.args) == 2:
            return {"f": {"node": self.node, "a": self.args[0], "b": self.args[1]}}
        return {"f": {"node": self.node, "args": list(self.args)}}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Variable":
        if "leaf" in obj:
            return cls(int(obj["leaf"]))
        f = obj["f"]
        if "args" in f:
            return cls(int(f["node"]), tuple(int(a) for a in f["args"]))
        return cls(int(f["node"]), (int(f["a"]), int(f["b"])))


def leaf(node: int) -> Variable:
    return Variable(node)


def fvar(node: int, *args: int) -> Variable:
    return Variable(node, tuple(args))


@dataclass(frozen=True)
class TreeShape:
    d: int
    h: int

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"arity must be >= 2, got {self.d}")
        if self.h < 1:
            raise ValueError(f"height must be >= 1, got {self.h}")

    @cached_property
    def node_count(self) -> int:
        return (self.d ** self.h - 1) // (self.d - 1)

    @cached_property
    def internal_count(self) -> int:
        return (self.d ** (self.h - 1) - 1) // (self.d - 1)

    @property
    def nodes(self) -> range:
        return range(1, self.node_count + 1)

    @property
    def internal_nodes(self) -> range:
        return range(1, self.internal_count + 1)

    @property
    def leaves(self) -> range:
        return range(self.internal_count + 1, self.node_count + 1)

    def check(self, i: int) -> None:
        if not 1 <= i <= self.node_count:
            raise IndexError(f"node {i} outside 1..{self.node_count}")

    def is_leaf(self, i: int) -> bool:
        self.check(i)
        return i > self.internal_count

    def children(self, i: int) -> tuple[int, ...]:
        self.check(i)
        if i > self.internal_count:
            return ()
        first = self.d * (i - 1) + 2
        return tuple(range(first, first + self.d))

    def parent(self, i: int) -> int | None:
        self.check(i)
        if i == 1:
            return None
        return (i - 2) // self.d + 1

    def level(self, i: int) -> int:
        """Distance from the root (root is level 0)."""
        self.check(i)
        lvl, first, width = 0, 1, 1
        while i >= first + width:
            first += width
            width *= self.d
            lvl += 1
        return lvl

    def height_of(self, i: int) -> int:
        """Height in levels of the subtree rooted at ``i`` (leaves have height 1)."""
        return self.h - self.level(i)

    def sibling_index(self, i: int) -> int:
        """Position of ``i`` among its parent's children, 0-based."""
        if i == 1:
            return 0
        return (i - 2) % self.d

    def siblings(self, i: int) -> tuple[int, ...]:
        p = self.parent(i)
        if p is None:
            return ()
        return tuple(j for j in self.children(p) if j != i)

    def subtree(self, i: int) -> list[int]:
        out, frontier = [], [i]
        while frontier:
            out.extend(frontier)
            frontier = [c for j in frontier for c in self.children(j)]
        return sorted(out)

    def path_to_root(self, i: int) -> list[int]:
        path = [i]
        while path[-1] != 1:
            path.append(self.parent(path[-1]))
        return path

    def inorder(self) -> list[int]:
        """Inorder traversal; a d-ary node is visited after its first child's subtree."""
        out: list[int] = []

        def visit(i: int) -> None:
            kids = self.children(i)
            if not kids:
                out.append(i)
                return
            visit(kids[0])
            out.append(i)
            for c in kids[1:]:
                visit(c)

        visit(1)
        return out

    def subtree_map(self, root: int, sub: "TreeShape") -> dict[int, int]:
        """Map node labels of ``sub`` onto the subtree of ``self`` rooted at ``root``."""
        mapping = {1: root}
        for j in sub.nodes:
            for pos, c in enumerate(sub.children(j)):
                mapping[c] = self.children(mapping[j])[pos]
        return mapping

    def var_count(self, k: int) -> int:
        return self.internal_count * k ** self.d + (self.node_count - self.internal_count)


@dataclass(frozen=True)
class VariableSpace:
    """The ordered variable set of ``(shape, k)``."""

    shape: TreeShape
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    @cached_property
    def variables(self) -> tuple[Variable, ...]:
        out = [Variable(i) for i in self.shape.leaves]
        rows = list(itertools.product(range(1, self.k + 1), repeat=self.shape.d))
        for i in self.shape.internal_nodes:
            out.extend(Variable(i, r) for r in rows)
        return tuple(out)

    @cached_property
    def index(self) -> dict[Variable, int]:
        return {v: n for n, v in enumerate(self.variables)}

    def __len__(self) -> int:
        return len(self.variables)

    def position(self, var: Variable) -> int:
        try:
            return self.index[var]
        except KeyError:
            raise InvalidInstance(f"{var} is not a variable of T_{self.shape.d}^{self.shape.h} with k={self.k}") from None

    def leaf_position(self, i: int) -> int:
        return i - self.shape.internal_count - 1

    def table_offset(self, i: int) -> int:
        return (self.shape.node_count - self.shape.internal_count) + (i - 1) * self.k ** self.shape.d

    def row_index(self, args: Sequence[int]) -> int:
        r = 0
        for a in args:
            r = r * self.k + (a - 1)
        return r

    def vars_of_nodes(self, nodes) -> list[Variable]:
        wanted = set(nodes)
        return [v for v in self.variables if v.node in wanted]


@dataclass(frozen=True)
class TepInstance:
    """An input to the tree evaluation problem: a value for every variable."""

    shape: TreeShape
    k: int
    values: tuple[int, ...]
    space: VariableSpace = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.space is None:
            object.__setattr__(self, "space", VariableSpace(self.shape, self.k))
        if len(self.values) != len(self.space):
            raise InvalidInstance(f"expected {len(self.space)} values, got {len(self.values)}")

    def validate(self) -> "TepInstance":
        bad = [n for n, x in enumerate(self.values) if not 1 <= x <= self.k]
        if bad:
            var = self.space.variables[bad[0]]
            raise InvalidInstance(f"{var} has value {self.values[bad[0]]} outside [1..{self.k}]")
        return self

    @classmethod
    def from_tables(cls, shape: TreeShape, k: int, functions: Mapping[int, Sequence],
                    leaves: Mapping[int, int]) -> "TepInstance":
        """Build from per-node tables.  A table is either flat (k^d entries,
        row-major) or nested d deep, indexed by the first argument outermost."""
        space = VariableSpace(shape, k)
        values = []
        for i in shape.leaves:
            if i not in leaves:
                raise InvalidInstance(f"leaf {i} has no value")
            values.append(int(leaves[i]))
        for i in shape.internal_nodes:
            if i not in functions:
                raise InvalidInstance(f"internal node {i} has no table")
            flat = _flatten(functions[i], shape.d)
            if len(flat) != k ** shape.d:
                raise InvalidInstance(f"table of node {i} has {len(flat)} entries, expected {k ** shape.d}")
            values.extend(int(x) for x in flat)
        extra = (set(leaves) - set(shape.leaves)) | (set(functions) - set(shape.internal_nodes))
        if extra:
            raise InvalidInstance(f"values given for unknown or misplaced nodes {sorted(extra)}")
        return cls(shape, k, tuple(values), space).validate()

    def __getitem__(self, var: Variable) -> int:
        return self.values[self.space.position(var)]

    def leaf_value(self, i: int) -> int:
        return self.values[self.space.leaf_position(i)]

    def f(self, i: int, args: Sequence[int]) -> int:
        return self.values[self.space.table_offset(i) + self.space.row_index(args)]

    def table(self, i: int) -> tuple[int, ...]:
        off = self.space.table_offset(i)
        return self.values[off: off + self.k ** self.shape.d]

    @property
    def functions(self) -> dict[int, tuple[int, ...]]:
        return {i: self.table(i) for i in self.shape.internal_nodes}

    @property
    def leaves(self) -> dict[int, int]:
        return {i: self.leaf_value(i) for i in self.shape.leaves}

    @cached_property
    def node_values(self) -> dict[int, int]:
        vals: dict[int, int] = {}
        for i in reversed(self.shape.nodes):
            kids = self.shape.children(i)
            if kids:
                vals[i] = self.f(i, [vals[c] for c in kids])
            else:
                vals[i] = self.leaf_value(i)
        return vals

    def thrifty_variable(self, i: int) -> Variable:
        kids = self.shape.children(i)
        if not kids:
            return Variable(i)
        nv = self.node_values
        return Variable(i, tuple(nv[c] for c in kids))

    def replace(self, var: Variable, value: int) -> "TepInstance":
        vals = list(self.values)
        vals[self.space.position(var)] = value
        return TepInstance(self.shape, self.k, tuple(vals), self.space)

    @property
    def index(self) -> int:
        """Position of this instance in the global enumeration order."""
        n = 0
        for x in self.values:
            n = n * self.k + (x - 1)
        return n

    def to_json(self) -> dict:
        return {
            "d": self.shape.d, "h": self.shape.h, "k": self.k,
            "functions": {str(i): _nest(self.table(i), self.k, self.shape.d) for i in self.shape.internal_nodes},
            "leaves": {str(i): self.leaf_value(i) for i in self.shape.leaves},
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "TepInstance":
        try:
            shape = TreeShape(int(obj.get("d", 2)), int(obj["h"]))
            k = int(obj["k"])
            functions = {int(i): t for i, t in obj.get("functions", {}).items()}
            leaves = {int(i): int(v) for i, v in obj.get("leaves", {}).items()}
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInstance(f"malformed instance JSON: {exc}") from exc
        return cls.from_tables(shape, k, functions, leaves)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _flatten(table, depth: int) -> list:
    if depth == 0 or not isinstance(table, (list, tuple)):
        return [table]
    if table and not isinstance(table[0], (list, tuple)):
        return list(table)
    return [x for row in table for x in _flatten(row, depth - 1)]


def _nest(flat: Sequence[int], k: int, depth: int):
    if depth == 1:
        return list(flat)
    size = k ** (depth - 1)
    return [_nest(flat[a * size:(a + 1) * size], k, depth - 1) for a in range(k)]


def children(shape: TreeShape, i: int) -> tuple[int, ...]:
    return shape.children(i)


def node_value(inst: TepInstance, i: int) -> int:
    inst.shape.check(i)
    return inst.node_values[i]


def node_value_naive(inst: TepInstance, i: int) -> int:
    """Unmemoized recursion; kept as an independent check on ``node_value``."""
    kids = inst.shape.children(i)
    if not kids:
        return inst.leaf_value(i)
    return inst.f(i, [node_value_naive(inst, c) for c in kids])


def eval_ft(inst: TepInstance) -> int:
    return inst.node_values[1]


def eval_bt(inst: TepInstance) -> bool:
    return eval_ft(inst) == 1


def instance_count(shape: TreeShape, k: int) -> int:
    return k ** shape.var_count(k)


def enumerate_instances(shape: TreeShape, k: int, cap: int = DEFAULT_INSTANCE_CAP) -> Iterator[TepInstance]:
    """Yield every instance once, in odometer order over the variable vector."""
    count = instance_count(shape, k)
    if count > cap:
        raise EnumerationCapExceeded(count, cap)
    space = VariableSpace(shape, k)
    for values in itertools.product(range(1, k + 1), repeat=len(space)):
        yield TepInstance(shape, k, values, space)


def enumerate_values(shape: TreeShape, k: int, cap: int = DEFAULT_INSTANCE_CAP) -> Iterator[tuple[int, ...]]:
    """Raw value vectors in the same order as ``enumerate_instances``."""
    count = instance_count(shape, k)
    if count > cap:
        raise EnumerationCapExceeded(count, cap)
    return itertools.product(range(1, k + 1), repeat=shape.var_count(k))


def instance_at(shape: TreeShape, k: int, index: int) -> TepInstance:
    space = VariableSpace(shape, k)
    m = len(space)
    if not 0 <= index < k ** m:
        raise IndexError(index)
    digits = []
    for _ in range(m):
        index, r = divmod(index, k)
        digits.append(r + 1)
    return TepInstance(shape, k, tuple(reversed(digits)), space)


def load_instance(path) -> TepInstance:
    with open(path) as fh:
        return TepInstance.from_json(json.load(fh))


class FastEvaluator:
    """Node values straight from flat value vectors, for tight enumeration loops.

    ``values(vec)`` returns a list indexed by node (index 0 unused)."""

    def __init__(self, shape: TreeShape, k: int):
        self.shape = shape
        self.k = k
        space = VariableSpace(shape, k)
        self.plan = []
        for i in reversed(shape.nodes):
            kids = shape.children(i)
            if kids:
                self.plan.append((i, space.table_offset(i), kids))
            else:
                self.plan.append((i, space.leaf_position(i), ()))
        self.n = shape.node_count

    def values(self, vec: Sequence[int]) -> list[int]:
        k = self.k
        out = [0] * (self.n + 1)
        for i, off, kids in self.plan:
            if not kids:
                out[i] = vec[off]
            elif len(kids) == 2:
                out[i] = vec[off + (out[kids[0]] - 1) * k + out[kids[1]] - 1]
            else:
                r = 0
                for c in kids:
                    r = r * k + out[c] - 1
                out[i] = vec[off + r]
        return out

"""k-way branching programs over tree evaluation inputs.

States are indexed ``0..n-1``.  A state either queries a variable (and then
has, for each label ``1..k``, a tuple of successor states) or is an output
state carrying a label.  Deterministic programs have exactly one successor
per label.  Simulation runs on flat value vectors in the global variable
order of :mod:`pebbleworks.tree`, which keeps exhaustive checks fast.
"""

from __future__ import annotations

import enum
import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

from .tree import (FastEvaluator, InvalidInstance, TepInstance, TreeShape, Variable, VariableSpace,
                   instance_count)

EXHAUSTIVE_CAP = 1 << 24
DEFAULT_SAMPLES = 100_000
DEFAULT_PATH_CAP = 10 ** 6


class InvalidProgram(ValueError):
    pass


class NonTerminating(RuntimeError):
    def __init__(self, path):
        super().__init__(f"computation revisits state {path[-1]} after {len(path) - 1} steps")
        self.path = path


class EnumerationCap(RuntimeError):
    pass


class QueryClass(enum.Enum):
    THRIFTY = "thrifty"
    WRONG_WRONG = "wrong-wrong"
    LEFT_ONLY_CORRECT = "left-only-correct"
    RIGHT_ONLY_CORRECT = "right-only-correct"


class BranchingProgram:
    """A k-way branching program for ``FT`` or ``BT`` on one tree shape."""

    def __init__(self, shape: TreeShape, k: int, queries: Sequence[Variable | None],
                 outputs: Sequence[int | None], edges: Sequence[Sequence[Sequence[int]]],
                 start: int = 0, deterministic: bool | None = None,
                 ids: Sequence | None = None, meta: Mapping | None = None, check: bool = True):
        self.shape = shape
        self.k = k
        self.queries = tuple(queries)
        self.outputs = tuple(outputs)
        self.edges = tuple(tuple(tuple(t) for t in row) for row in edges)
        self.start = start
        self.ids = tuple(ids) if ids is not None else tuple(range(len(self.queries)))
        self.meta = dict(meta or {})
        if deterministic is None:
            deterministic = all(len(t) == 1 for row in self.edges for t in row)
        self.deterministic = deterministic
        if check:
            self.validate()

    def validate(self) -> None:
        n = len(self.queries)
        if not (len(self.outputs) == len(self.edges) == len(self.ids) == n):
            raise InvalidProgram("state tables have different lengths")
        if not 0 <= self.start < n:
            raise InvalidProgram(f"start state {self.start} out of range")
        space = self.space
        for s in range(n):
            q, out, row = self.queries[s], self.outputs[s], self.edges[s]
            if out is not None:
                if q is not None or any(row):
                    raise InvalidProgram(f"output state {self.ids[s]} has a query or outedges")
                continue
            if q is None:
                raise InvalidProgram(f"state {self.ids[s]} has neither query nor output label")
            try:
                space.position(q)
            except InvalidInstance as exc:
                raise InvalidProgram(f"state {self.ids[s]}: {exc}") from None
            if q.args and any(not 1 <= a <= self.k for a in q.args):
                raise InvalidProgram(f"state {self.ids[s]} queries {q} outside [1..{self.k}]")
            if len(row) != self.k:
                raise InvalidProgram(f"state {self.ids[s]} needs one edge slot per label 1..{self.k}")
            for targets in row:
                if any(not 0 <= t < n for t in targets):
                    raise InvalidProgram(f"state {self.ids[s]} has an edge to an unknown state")
                if self.deterministic and len(targets) != 1:
                    raise InvalidProgram(
                        f"deterministic state {self.ids[s]} needs exactly one outedge per label")
        labels = sorted(o for o in self.outputs if o is not None)
        if len(labels) != len(set(labels)):
            raise InvalidProgram("output labels must be distinct")

    # -- basic facts -------------------------------------------------------------

    @cached_property
    def space(self) -> VariableSpace:
        return VariableSpace(self.shape, self.k)

    @property
    def size(self) -> int:
        return len(self.queries)

    def __len__(self) -> int:
        return self.size

    def is_output(self, s: int) -> bool:
        return self.outputs[s] is not None

    def node(self, s: int) -> int | None:
        q = self.queries[s]
        return None if q is None else q.node

    @cached_property
    def output_labels(self) -> tuple[int, ...]:
        return tuple(sorted(o for o in self.outputs if o is not None))

    @cached_property
    def _qpos(self) -> list[int]:
        return [-1 if q is None else self.space.position(q) for q in self.queries]

    @cached_property
    def _next(self) -> list[tuple[int, ...]]:
        """Deterministic successor per label (index label-1)."""
        return [tuple(t[0] for t in row) if row else () for row in self.edges]

    # -- simulation ------------------------------------------------------------------

    def run(self, vec: Sequence[int]) -> tuple[int, list[int]]:
        """Deterministic run on a flat value vector: ``(output, path)``."""
        if not self.deterministic:
            raise InvalidProgram("run() needs a deterministic program")
        qpos, nxt, outs = self._qpos, self._next, self.outputs
        limit = len(outs)
        s = self.start
        path = [s]
        while outs[s] is None:
            s = nxt[s][vec[qpos[s]] - 1]
            path.append(s)
            if len(path) > limit:
                raise NonTerminating(path)
        return outs[s], path

    def live_states(self, vec: Sequence[int]) -> tuple[set[int], set[int]]:
        """Nondeterministic reading: states lying on some terminating computation
        and the output labels those computations reach."""
        qpos, outs = self._qpos, self.outputs
        fwd = {self.start}
        stack = [self.start]
        succ: dict[int, tuple[int, ...]] = {}
        while stack:
            s = stack.pop()
            if outs[s] is not None:
                continue
            ts = self.edges[s][vec[qpos[s]] - 1]
            succ[s] = ts
            for t in ts:
                if t not in fwd:
                    fwd.add(t)
                    stack.append(t)
        live = {s for s in fwd if outs[s] is not None}
        changed = True
        while changed:
            changed = False
            for s, ts in succ.items():
                if s not in live and any(t in live for t in ts):
                    live.add(s)
                    changed = True
        return live, {outs[s] for s in live if outs[s] is not None}

    def paths(self, vec: Sequence[int], cap: int = DEFAULT_PATH_CAP) -> list[tuple[int, list[int]]]:
        """All simple activated paths from the start that end in an output."""
        qpos, outs = self._qpos, self.outputs
        found: list[tuple[int, list[int]]] = []
        path = [self.start]
        on_path = {self.start}

        def walk(s: int):
            if outs[s] is not None:
                found.append((outs[s], list(path)))
                if len(found) > cap:
                    raise EnumerationCap(f"more than {cap} computation paths")
                return
            for t in self.edges[s][vec[qpos[s]] - 1]:
                if t in on_path:
                    continue
                path.append(t)
                on_path.add(t)
                walk(t)
                on_path.discard(t)
                path.pop()

        walk(self.start)
        return found

    # -- serialization -------------------------------------------------------------------

    def to_json(self) -> dict:
        states = []
        for s in range(self.size):
            entry: dict = {"id": self.ids[s]}
            if self.outputs[s] is not None:
                entry["output"] = self.outputs[s]
            else:
                entry["query"] = self.queries[s].to_json()
                row = {}
                for a, targets in enumerate(self.edges[s], start=1):
                    if self.deterministic:
                        row[str(a)] = self.ids[targets[0]]
                    elif targets:
                        row[str(a)] = [self.ids[t] for t in targets]
                entry["edges"] = row
            states.append(entry)
        out = {"k": self.k, "d": self.shape.d, "h": self.shape.h,
               "deterministic": self.deterministic, "start": self.ids[self.start], "states": states}
        if self.meta:
            out["meta"] = self.meta
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj: Mapping) -> "BranchingProgram":
        try:
            k = int(obj["k"])
            shape = TreeShape(int(obj.get("d", 2)), int(obj["h"]))
            raw = obj["states"]
            ids = [st["id"] for st in raw]
            index = {x: n for n, x in enumerate(ids)}
            queries, outputs, edges = [], [], []
            for st in raw:
                if "output" in st:
                    queries.append(None)
                    outputs.append(int(st["output"]))
                    edges.append(())
                    continue
                queries.append(Variable.from_json(st["query"]))
                outputs.append(None)
                row = []
                for a in range(1, k + 1):
                    t = st.get("edges", {}).get(str(a), [])
                    t = [t] if not isinstance(t, list) else t
                    row.append(tuple(index[x] for x in t))
                edges.append(tuple(row))
            det = obj.get("deterministic")
            return cls(shape, k, queries, outputs, edges, start=index[obj["start"]],
                       deterministic=det, ids=ids, meta=obj.get("meta"))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidProgram):
                raise
            raise InvalidProgram(f"malformed program JSON: {exc!r}") from exc

    def relabelled(self, **changes) -> "BranchingProgram":
        args = dict(shape=self.shape, k=self.k, queries=self.queries, outputs=self.outputs,
                    edges=self.edges, start=self.start, deterministic=self.deterministic,
                    ids=self.ids, meta=self.meta)
        args.update(changes)
        return BranchingProgram(**args)


def load_program(path) -> BranchingProgram:
    with open(path) as fh:
        return BranchingProgram.from_json(json.load(fh))


# --- input streams -----------------------------------------------------------------------

class InputStream:
    """Flat value vectors: every input when the count is within ``cap``,
    otherwise ``samples`` seeded random ones (``sampled`` is then set)."""

    def __init__(self, shape: TreeShape, k: int, cap: int = EXHAUSTIVE_CAP,
                 samples: int = DEFAULT_SAMPLES, seed: int = 0):
        self.shape, self.k = shape, k
        self.count = instance_count(shape, k)
        self.sampled = self.count > cap
        self.samples, self.seed = samples, seed

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        m = self.shape.var_count(self.k)
        if not self.sampled:
            return itertools.product(range(1, self.k + 1), repeat=m)
        rng = random.Random(self.seed)
        return (tuple(rng.randint(1, self.k) for _ in range(m)) for _ in range(self.samples))

    def __len__(self) -> int:
        return self.samples if self.sampled else self.count


@dataclass
class CheckResult:
    ok: bool
    checked: int = 0
    sampled: bool = False
    counterexample: TepInstance | None = None
    state: int | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _fail(bp, vec, checked, sampled, detail, state=None) -> CheckResult:
    inst = TepInstance(bp.shape, bp.k, tuple(vec), bp.space)
    return CheckResult(False, checked, sampled, inst, state, detail)


# --- semantic checks -------------------------------------------------------------------

def simulate(bp: BranchingProgram, inst: TepInstance, path_cap: int = DEFAULT_PATH_CAP):
    """Deterministic programs: ``(output, path)``.  Nondeterministic: the list
    of terminating simple paths as ``(output, path)`` pairs."""
    if (inst.shape, inst.k) != (bp.shape, bp.k):
        raise InvalidProgram("instance and program disagree on tree shape or k")
    if bp.deterministic:
        return bp.run(inst.values)
    return bp.paths(inst.values, path_cap)


def expected_output(problem: str, root_value: int) -> int:
    if problem == "FT":
        return root_value
    if problem == "BT":
        return 1 if root_value == 1 else 0
    raise ValueError(f"unknown problem {problem!r}; use FT or BT")


def check_solves(bp: BranchingProgram, problem: str = "FT", cap: int = EXHAUSTIVE_CAP,
                 samples: int = DEFAULT_SAMPLES, seed: int = 0) -> CheckResult:
    """Does every input reach the correct output?  For nondeterministic
    programs every terminating computation must be correct and at least one
    must exist."""
    stream = InputStream(bp.shape, bp.k, cap, samples, seed)
    ev = FastEvaluator(bp.shape, bp.k)
    checked = 0
    for vec in stream:
        want = expected_output(problem, ev.values(vec)[1])
        checked += 1
        if bp.deterministic:
            try:
                got, _ = bp.run(vec)
            except NonTerminating as exc:
                return _fail(bp, vec, checked, stream.sampled, "computation does not terminate", exc.path[-1])
            if got != want:
                return _fail(bp, vec, checked, stream.sampled, f"output {got}, expected {want}")
        else:
            _, outs = bp.live_states(vec)
            if not outs:
                return _fail(bp, vec, checked, stream.sampled, "no computation terminates")
            if outs != {want}:
                return _fail(bp, vec, checked, stream.sampled, f"outputs {sorted(outs)}, expected {want}")
    return CheckResult(True, checked, stream.sampled)


def _visited(bp: BranchingProgram, vec) -> Iterable[int]:
    if bp.deterministic:
        return bp.run(vec)[1]
    return bp.live_states(vec)[0]


def classify(var: Variable, node_values: Sequence[int] | Mapping[int, int], shape: TreeShape) -> QueryClass:
    if var.is_leaf:
        raise ValueError(f"{var} is a leaf variable; only internal queries are classified")
    kids = shape.children(var.node)
    if len(kids) != 2:
        raise ValueError("query classification is defined for binary trees")
    left = var.args[0] == node_values[kids[0]]
    right = var.args[1] == node_values[kids[1]]
    if left and right:
        return QueryClass.THRIFTY
    if left:
        return QueryClass.LEFT_ONLY_CORRECT
    if right:
        return QueryClass.RIGHT_ONLY_CORRECT
    return QueryClass.WRONG_WRONG


def classify_query(inst: TepInstance, state) -> QueryClass:
    """Classify a queried variable against the input's true child values.
    ``state`` is a :class:`Variable` or a ``(program, state index)`` pair."""
    if isinstance(state, Variable):
        var = state
    else:
        bp, s = state
        var = bp.queries[s]
        if var is None:
            raise ValueError(f"state {s} is an output state")
    return classify(var, inst.node_values, inst.shape)


def is_thrifty_query(var: Variable, vals: Sequence[int], shape: TreeShape) -> bool:
    if var.is_leaf:
        return True
    return all(a == vals[c] for a, c in zip(var.args, shape.children(var.node)))


def check_thrifty(bp: BranchingProgram, cap: int = EXHAUSTIVE_CAP, samples: int = DEFAULT_SAMPLES,
                  seed: int = 0) -> CheckResult:
    """Every internal query on every (terminating) computation asks the
    table entry at the true child values."""
    return _check_queries(bp, {QueryClass.THRIFTY}, cap, samples, seed)


def check_thrifty_or_wrongwrong(bp: BranchingProgram, cap: int = EXHAUSTIVE_CAP,
                                samples: int = DEFAULT_SAMPLES, seed: int = 0) -> CheckResult:
    return _check_queries(bp, {QueryClass.THRIFTY, QueryClass.WRONG_WRONG}, cap, samples, seed)


def _check_queries(bp, allowed, cap, samples, seed) -> CheckResult:
    stream = InputStream(bp.shape, bp.k, cap, samples, seed)
    ev = FastEvaluator(bp.shape, bp.k)
    shape = bp.shape
    checked = 0
    for vec in stream:
        vals = ev.values(vec)
        checked += 1
        try:
            visited = _visited(bp, vec)
        except NonTerminating as exc:
            visited = exc.path
        for s in visited:
            var = bp.queries[s]
            if var is None or var.is_leaf:
                continue
            if QueryClass.THRIFTY in allowed and len(allowed) == 1:
                if is_thrifty_query(var, vals, shape):
                    continue
                return _fail(bp, vec, checked, stream.sampled, f"state {bp.ids[s]} queries {var}", s)
            cls = classify(var, vals, shape)
            if cls not in allowed:
                return _fail(bp, vec, checked, stream.sampled,
                             f"state {bp.ids[s]} queries {var} ({cls.value})", s)
    return CheckResult(True, checked, stream.sampled)


def depth(bp: BranchingProgram, cap: int = EXHAUSTIVE_CAP, samples: int = DEFAULT_SAMPLES,
          seed: int = 0) -> int:
    """Largest number of states on any computation, output state included."""
    return max(len(bp.run(vec)[1]) for vec in InputStream(bp.shape, bp.k, cap, samples, seed))


def check_mindepth_thrifty(bp: BranchingProgram, problem: str = "FT", cap: int = EXHAUSTIVE_CAP) -> dict:
    """Programs of depth at most ``2^h`` that solve the problem must be
    thrifty.  ``ok`` is False only when that implication is violated."""
    d = depth(bp, cap)
    limit = 2 ** bp.shape.h
    solves = bool(check_solves(bp, problem, cap))
    report = {"depth": d, "limit": limit, "solves": solves, "applicable": d <= limit and solves}
    if not report["applicable"]:
        report.update(thrifty=None, ok=True, verdict="not applicable")
        return report
    thr = check_thrifty(bp, cap)
    report.update(thrifty=bool(thr), ok=bool(thr), verdict="holds" if thr else "violated")
    if not thr:
        report["counterexample"] = thr.counterexample
    return report


# --- relaxed-thrifty measurables ------------------------------------------------------------

@dataclass
class ThriftyProfile:
    left: dict[int, set[int]] = field(default_factory=dict)
    right: dict[int, set[int]] = field(default_factory=dict)
    pi: int = 1
    w: int = 0
    sampled: bool = False


def thrifty_profile(bp: BranchingProgram, cap: int = EXHAUSTIVE_CAP, samples: int = DEFAULT_SAMPLES,
                    seed: int = 0) -> ThriftyProfile:
    """LeftThrifty / RightThrifty for every internal-querying state, and the
    derived parameters pi and w (binary trees only)."""
    if bp.shape.d != 2:
        raise ValueError("thrifty sets are defined for binary trees")
    if not bp.deterministic:
        raise InvalidProgram("thrifty sets are defined for deterministic programs")
    prof = ThriftyProfile()
    internal = [s for s in range(bp.size) if bp.queries[s] is not None and not bp.queries[s].is_leaf]
    for s in internal:
        prof.left[s], prof.right[s] = set(), set()
    stream = InputStream(bp.shape, bp.k, cap, samples, seed)
    ev = FastEvaluator(bp.shape, bp.k)
    runs = []
    for vec in stream:
        vals = ev.values(vec)
        _, path = bp.run(vec)
        hits = []
        for s in path:
            var = bp.queries[s]
            if var is None or var.is_leaf:
                continue
            i = var.node
            a, b = var.args
            if vals[2 * i + 1] == b:
                prof.right[s].add(vals[2 * i])
            if vals[2 * i] == a:
                prof.left[s].add(vals[2 * i + 1])
            hits.append(s)
        runs.append(hits)
    prof.sampled = stream.sampled
    prof.pi = max([max(len(prof.left[s]), len(prof.right[s])) for s in internal] + [1])
    wide = {s for s in internal if len(prof.left[s]) > 1 or len(prof.right[s]) > 1}
    prof.w = max([len({bp.queries[s].node for s in hits if s in wide}) for hits in runs] + [0])
    return prof


def thrifty_sets(bp: BranchingProgram, state: int, cap: int = EXHAUSTIVE_CAP) -> tuple[set[int], set[int]]:
    """``(LeftThrifty(q), RightThrifty(q))``."""
    var = bp.queries[state]
    if var is None or var.is_leaf:
        raise ValueError(f"state {state} does not query an internal variable")
    prof = thrifty_profile(bp, cap)
    return prof.left[state], prof.right[state]


def pi_w_params(bp: BranchingProgram, cap: int = EXHAUSTIVE_CAP) -> tuple[int, int]:
    prof = thrifty_profile(bp, cap)
    return prof.pi, prof.w


def relaxed_bounds(bp: BranchingProgram, pi: int, w: int) -> dict:
    k, h = bp.k, bp.shape.h
    b1 = Fraction(k ** h, pi ** max(h - 2, 0))
    b2 = Fraction(k ** h, pi ** w)
    return {"size": bp.size, "pi": pi, "w": w, "bound_pi": b1, "bound_w": b2,
            "ok_pi": bp.size >= b1, "ok_w": bp.size >= b2}


# --- transformations ----------------------------------------------------------------------------

def as_bt(bp: BranchingProgram) -> BranchingProgram:
    """Turn an ``FT`` program into a ``BT`` one: output 1 stays 1, every other
    output becomes 0, and equal outputs are merged."""
    keep = {}
    remap = {}
    order = []
    for s in range(bp.size):
        out = bp.outputs[s]
        if out is None:
            remap[s] = len(order)
            order.append(s)
    for lab in (0, 1):
        keep[lab] = len(order) + lab
    for s in range(bp.size):
        out = bp.outputs[s]
        if out is not None:
            remap[s] = keep[1 if out == 1 else 0]
    queries = [bp.queries[s] for s in order] + [None, None]
    outputs = [None] * len(order) + [0, 1]
    edges = [tuple(tuple(remap[t] for t in ts) for ts in bp.edges[s]) for s in order] + [(), ()]
    meta = dict(bp.meta, problem="BT")
    return BranchingProgram(bp.shape, bp.k, queries, outputs, edges, remap[bp.start],
                            bp.deterministic, meta=meta)


def rewire_edge(bp: BranchingProgram, rng: random.Random) -> BranchingProgram:
    """Mutant: one deterministic edge points somewhere else."""
    inner = [s for s in range(bp.size) if bp.outputs[s] is None]
    s = rng.choice(inner)
    a = rng.randrange(bp.k)
    old = bp.edges[s][a][0]
    t = rng.choice([x for x in range(bp.size) if x != old])
    row = list(bp.edges[s])
    row[a] = (t,)
    edges = list(bp.edges)
    edges[s] = tuple(row)
    return bp.relabelled(edges=edges)


def corrupt_query(bp: BranchingProgram, rng: random.Random) -> BranchingProgram:
    """Mutant: one state queries a different variable."""
    inner = [s for s in range(bp.size) if bp.outputs[s] is None]
    s = rng.choice(inner)
    old = bp.queries[s]
    var = rng.choice([v for v in bp.space.variables if v != old])
    queries = list(bp.queries)
    queries[s] = var
    return bp.relabelled(queries=queries)

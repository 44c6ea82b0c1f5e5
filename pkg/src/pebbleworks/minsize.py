"""Exhaustive search for small deterministic programs solving ``FT``.

Programs are generated directly in canonical form: states are numbered in
breadth-first order from the start, so every program is produced once up to
renaming of states, and every state is reachable.  After each decision the
partial program is simulated on all inputs; a wrong output or a loop prunes
the branch.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

from .bp import BranchingProgram, check_solves
from .tree import FastEvaluator, TreeShape, VariableSpace, enumerate_values


class _Timeout(Exception):
    pass


@dataclass
class MinsizeResult:
    status: str                          # "found", "exhausted" or "partial"
    h: int
    k: int
    size_cap: int
    program: BranchingProgram | None = None
    exhausted_sizes: list[int] = field(default_factory=list)
    explored: int = 0
    elapsed: float = 0.0

    @property
    def minimum(self) -> int | None:
        return self.program.size if self.program is not None else None

    def to_json(self) -> dict:
        out = {"status": self.status, "h": self.h, "k": self.k, "size_cap": self.size_cap,
               "exhausted_sizes": self.exhausted_sizes, "explored": self.explored,
               "elapsed": round(self.elapsed, 3)}
        if self.program is not None:
            out["program"] = self.program.to_json()
        return out


def search_estimate(h: int, k: int) -> int:
    """Crude count of unpruned canonical programs below ``(k+1)^h`` states."""
    s = (k + 1) ** h - 1
    nvars = TreeShape(2, h).var_count(k)
    return (nvars + k) ** s * s ** (k * s)


class _Search:
    def __init__(self, h: int, k: int, size: int, deadline: float | None, skip: set[int]):
        self.shape = TreeShape(2, h)
        self.k = k
        self.size = size
        self.deadline = deadline
        self.skip = skip
        self.space = VariableSpace(self.shape, k)
        ev = FastEvaluator(self.shape, k)
        self.inputs = [(vec, ev.values(vec)[1]) for vec in enumerate_values(self.shape, k)]
        self.nvars = len(self.space)
        self.kind: list = [None] * size           # ("o", label) | ("q", var position)
        self.edges: list = [[None] * k for _ in range(size)]
        self.next_new = 1
        self.labels: set[int] = set()
        self.explored = 0
        self.found = None
        self.done_branches: list[int] = []

    def consistent(self) -> bool:
        kind, edges = self.kind, self.edges
        for vec, want in self.inputs:
            s = 0
            seen = set()
            while True:
                kd = kind[s]
                if kd is None:
                    break
                if kd[0] == "o":
                    if kd[1] != want:
                        return False
                    break
                if s in seen:
                    return False
                seen.add(s)
                t = edges[s][vec[kd[1]] - 1]
                if t is None:
                    break
                s = t
        return True

    def tick(self):
        self.explored += 1
        if self.deadline is not None and self.explored % 256 == 0 and time.monotonic() > self.deadline:
            raise _Timeout()

    def decide(self, j: int) -> bool:
        """Choose the kind of state ``j``; returns True once a program is found."""
        if j == self.size:
            if self.next_new == self.size and len(self.labels) == self.k:
                self.found = self.program()
                return True
            return False
        if j >= self.next_new:
            return False          # state j is unreachable
        missing = self.k - len(self.labels)
        if self.size - j < missing:
            return False
        options = [("o", a) for a in range(1, self.k + 1) if a not in self.labels]
        options += [("q", p) for p in range(self.nvars)]
        for n, opt in enumerate(options):
            if j == 0 and n in self.skip:
                continue
            self.tick()
            self.kind[j] = opt
            if opt[0] == "o":
                self.labels.add(opt[1])
            if self.consistent():
                hit = self.decide(j + 1) if opt[0] == "o" else self.wire(j, 0)
                if hit:
                    return True
            if opt[0] == "o":
                self.labels.discard(opt[1])
            self.kind[j] = None
            if j == 0:
                self.done_branches.append(n)
        return False

    def wire(self, j: int, a: int) -> bool:
        if a == self.k:
            return self.decide(j + 1)
        limit = min(self.next_new + 1, self.size)
        for t in range(limit):
            self.tick()
            fresh = t == self.next_new
            self.edges[j][a] = t
            if fresh:
                self.next_new += 1
            if self.consistent() and self.wire(j, a + 1):
                return True
            if fresh:
                self.next_new -= 1
            self.edges[j][a] = None
        return False

    def program(self) -> BranchingProgram:
        queries, outputs, edges = [], [], []
        for s in range(self.size):
            kd = self.kind[s]
            if kd[0] == "o":
                queries.append(None)
                outputs.append(kd[1])
                edges.append(())
            else:
                queries.append(self.space.variables[kd[1]])
                outputs.append(None)
                edges.append(tuple((t,) for t in self.edges[s]))
        return BranchingProgram(self.shape, self.k, queries, outputs, edges, 0, True,
                                meta={"construction": "minsize-search", "problem": "FT"})


def _load_checkpoint(path, h, k):
    if not path or not os.path.exists(path):
        return {"h": h, "k": k, "exhausted": [], "size": None, "branches": []}
    with open(path) as fh:
        state = json.load(fh)
    if (state.get("h"), state.get("k")) != (h, k):
        raise ValueError(f"checkpoint {path} belongs to h={state.get('h')}, k={state.get('k')}")
    return state


def _save_checkpoint(path, state):
    if path:
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fh:
            json.dump(state, fh, sort_keys=True)
        os.replace(tmp, path)


def run_minsize_search(h: int, k: int, size_cap: int | None = None, time_cap: float | None = None,
                       checkpoint: str | None = None) -> MinsizeResult:
    """Smallest deterministic ``FT`` program with at most ``size_cap`` states
    (default ``(k+1)^h - 1``).  Sizes are tried in increasing order.

    ``found``: a program of minimal size within the cap.  ``exhausted``: none
    exists up to the cap.  ``partial``: the time cap hit first; the sizes
    listed in ``exhausted_sizes`` are fully excluded.
    """
    if not (h == 1 or (h, k) == (2, 2)):
        raise ValueError(f"search at h={h}, k={k} is out of reach "
                         f"(roughly {search_estimate(h, k):.3e} unpruned programs)")
    if size_cap is None:
        size_cap = (k + 1) ** h - 1
    t0 = time.monotonic()
    deadline = None if time_cap is None else t0 + time_cap
    state = _load_checkpoint(checkpoint, h, k)
    res = MinsizeResult("exhausted", h, k, size_cap, exhausted_sizes=list(state["exhausted"]))
    for size in range(1, size_cap + 1):
        if size in state["exhausted"]:
            continue
        skip = set(state["branches"]) if state["size"] == size else set()
        search = _Search(h, k, size, deadline, skip)
        search.done_branches = sorted(skip)
        try:
            hit = search.decide(0)
        except _Timeout:
            res.explored += search.explored
            state.update(size=size, branches=sorted(set(search.done_branches)))
            _save_checkpoint(checkpoint, state)
            res.status = "partial"
            res.elapsed = time.monotonic() - t0
            return res
        res.explored += search.explored
        if hit:
            if not check_solves(search.found, "FT"):
                raise AssertionError("search accepted a program that does not solve FT")
            res.status = "found"
            res.program = search.found
            res.elapsed = time.monotonic() - t0
            return res
        res.exhausted_sizes.append(size)
        state.update(exhausted=sorted(res.exhausted_sizes), size=None, branches=[])
        _save_checkpoint(checkpoint, state)
    res.elapsed = time.monotonic() - t0
    return res

"""Named experiment suites with pass/fail lines, emitted as text, JSON or CSV."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import random
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable

from . import __version__
from .bp import (as_bt, check_mindepth_thrifty, check_solves, check_thrifty, corrupt_query, depth,
                 pi_w_params, relaxed_bounds, rewire_edge)
from .construct import build_from_black_pebbling, build_thrifty_det
from .minsize import run_minsize_search
from .pebbling import BLACK, BLACK_WHITE, black_strategy, half_pebble_strategy, fractional_grid, verify_sequence
from .proof import AdviceCodec, partition_by_supercritical, supercritical_counts_by_height
from .reduction import (bottleneck_witness, build_G, build_Gprime, check_nice, gprime_black_cost_formula,
                        root_paths, DisjointnessViolation)
from .search import fract_lower_bound, klawe_bw_bound, min_cost
from .tree import TreeShape, enumerate_instances


@dataclass
class Row:
    suite: str
    check: str
    measured: str
    expected: str
    ok: bool
    seconds: float = 0.0


class UnknownSuite(KeyError):
    pass


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def _fmt(x) -> str:
    return str(x)


# --- suites ---------------------------------------------------------------------------------

def suite_pebbling_numbers(cfg) -> list[Row]:
    rows = []
    for h in range(1, 5):
        res, sec = _timed(lambda: min_cost(TreeShape(2, h), BLACK))
        rows.append(Row("pebbling-numbers", f"black T^{h}", _fmt(res.bound), str(h), res.bound == h, sec))
    for h in range(1, 4):
        want = math.ceil(h / 2) + 1
        res, sec = _timed(lambda: min_cost(TreeShape(2, h), BLACK_WHITE))
        rows.append(Row("pebbling-numbers", f"black-white T^{h}", _fmt(res.bound), str(want), res.bound == want, sec))
    for h, want in ((2, Fraction(2)), (3, Fraction(5, 2))):
        res, sec = _timed(lambda: min_cost(TreeShape(2, h), fractional_grid(2)))
        rows.append(Row("pebbling-numbers", f"fracgrid(2) T^{h}", _fmt(res.bound), _fmt(want), res.bound == want, sec))
    cost, sec = _timed(lambda: verify_sequence(half_pebble_strategy(), TreeShape(2, 3)))
    rows.append(Row("pebbling-numbers", "5/2 witness sequence on T^3", _fmt(cost), "5/2", cost == Fraction(5, 2), sec))
    return rows


def suite_construction(cfg) -> list[Row]:
    rows = []
    bad = []
    _, sec = _timed(lambda: bad.extend((h, k) for h in range(1, 7) for k in range(1, 6)
                                       if build_thrifty_det(h, k).size != (k + 1) ** h))
    rows.append(Row("construction", "size (k+1)^h for h<=6, k<=5", f"{25 - len(bad)}/25 match",
                    "25/25", not bad, sec))
    for h, k in ((1, 2), (1, 3), (2, 2), (2, 3), (3, 2)):
        def run():
            bp = build_thrifty_det(h, k)
            return bool(check_solves(bp)), bool(check_thrifty(bp)), depth(bp)
        (s, t, d), sec = _timed(run)
        rows.append(Row("construction", f"(h,k)=({h},{k}) solves/thrifty/depth",
                        f"{s}/{t}/{d}", f"True/True/{2 ** h}", s and t and d == 2 ** h, sec))
    def black_vs_recursive():
        a = build_from_black_pebbling(black_strategy(TreeShape(2, 3)), 2)
        b = build_thrifty_det(3, 2)
        return all(a.run(i.values)[0] == b.run(i.values)[0] for i in enumerate_instances(a.shape, 2)), a
    (same, prog), sec = _timed(black_vs_recursive)
    rows.append(Row("construction", "black-pebbling program agrees with recursive (3,2)",
                    f"{same}, constant {prog.meta['constant']}", "True", same, sec))
    rep, sec = _timed(lambda: check_mindepth_thrifty(build_thrifty_det(2, 2)))
    rows.append(Row("construction", "depth <= 2^h and solving implies thrifty (2,2)",
                    rep["verdict"], "holds", rep["ok"], sec))
    return rows


def suite_thrifty_lowerbound(cfg) -> list[Row]:
    rows = []
    for h, k in ((2, 2), (2, 3), (3, 2)):
        part, sec = _timed(lambda: partition_by_supercritical(build_thrifty_det(h, k)))
        n = len(part.classes)
        rows.append(Row("thrifty-lowerbound", f"|R| at (h,k)=({h},{k})", str(n), f">= {k ** h}", n >= k ** h, sec))
        rows.append(Row("thrifty-lowerbound", f"bottleneck nodes at ({h},{k})", str(part.min_bottleneck),
                        f">= {h}", part.min_bottleneck >= h, 0.0))
    counts, sec = _timed(lambda: supercritical_counts_by_height(build_thrifty_det(3, 2)))
    total = sum(counts.values())
    want = sum(2 ** l for l in range(2, 4))
    rows.append(Row("thrifty-lowerbound", "per-height supercritical states at (3,2)",
                    f"{counts} total {total}", f">= {want}", total >= want, sec))
    return rows


def suite_advice(cfg) -> list[Row]:
    rows = []
    for h, k in ((2, 2), (3, 2)):
        def run():
            bp = build_thrifty_det(h, k)
            codec = AdviceCodec(bp)
            seen = set()
            ok_round = ok_len = injective = True
            for inst in enumerate_instances(bp.shape, k):
                adv = codec.encode(inst)
                r = codec.state_of(inst)
                ok_len &= len(adv) == codec.length
                ok_round &= codec.decode(r, adv) == inst
                injective &= (r, adv) not in seen
                seen.add((r, adv))
            return ok_round, ok_len, injective, codec
        (a, b, c, codec), sec = _timed(run)
        rows.append(Row("advice", f"round trip / length {codec.length} / injective at ({h},{k})",
                        f"{a}/{b}/{c} ({codec.invariant_checks} invariant checks)", "True/True/True",
                        a and b and c, sec))
    return rows


def suite_dag_reduction(cfg) -> list[Row]:
    rows = []
    g = build_G(2, 3, 3)
    rows.append(Row("dag-reduction", "G_{2,3} (c=3) nodes", str(len(g)), "22", len(g) == 22))
    for d in (2, 3):
        for c in (1, 2, 3):
            gp = build_Gprime(d, 3, c)
            counts = {len(gp.children(n.id)) for n in gp.nodes
                      if n.tree_node is not None and gp.children(n.id)}
            want = c * (d - 1) + 1
            rows.append(Row("dag-reduction", f"G'_{{{d},3}} children per internal non-root (c={c})",
                            str(sorted(counts)), f"[{want}]", counts == {want}))
    res, sec = _timed(lambda: min_cost(build_Gprime(2, 3, 2), BLACK))
    want = gprime_black_cost_formula(2, 3, 2)
    rows.append(Row("dag-reduction", "black cost of G'_{2,3} (c=2)", _fmt(res.bound), str(want), res.bound == want, sec))
    for c in (1, 2, 3):
        gp = build_Gprime(2, 3, c)
        want = c * (2 - 1) * (3 - 1) + (c - 1)
        sizes, ok = set(), True
        for p in root_paths(gp):
            try:
                sizes.add(len(bottleneck_witness(gp, p).S))
            except DisjointnessViolation:
                ok = False
        rows.append(Row("dag-reduction", f"bottleneck witness |S| on every path (c={c})",
                        f"{sorted(sizes)} disjoint={ok}", f"[{want}] disjoint=True", ok and sizes == {want}))
    rep, sec = _timed(lambda: check_nice(build_Gprime(2, 3, 2)))
    rows.append(Row("dag-reduction", "G'_{2,3} (c=2) nice", str(rep.nice), "True", rep.nice and not rep.partial, sec))
    rep, sec = _timed(lambda: check_nice(build_G(2, 3, 2)))
    rows.append(Row("dag-reduction", "G_{2,3} (c=2) nice", f"{rep.nice} {rep.counterexample}", "False", not rep.nice, sec))
    return rows


def suite_bounds(cfg) -> list[Row]:
    rows = []
    for d in (2, 3):
        for h in (1, 2, 3):
            for c in (1, 2):
                lb = fract_lower_bound(d, h)
                res, sec = _timed(lambda: min_cost(TreeShape(d, h), fractional_grid(c)))
                rows.append(Row("bounds", f"fractional lower bound T_{d}^{h}, c={c}",
                                f"{_fmt(lb)} <= {_fmt(res.bound)}", "holds", lb <= res.bound, sec))
    for h in (1, 2, 3):
        b = min_cost(TreeShape(2, h), BLACK).bound
        bw = min_cost(TreeShape(2, h), BLACK_WHITE).bound
        kb = klawe_bw_bound(int(b))
        rows.append(Row("bounds", f"floor(B/2)+1 <= BW on T^{h}", f"{kb} <= {_fmt(bw)}", "holds", kb <= bw))
    return rows


def suite_relaxed(cfg) -> list[Row]:
    rows = []
    for h, k in ((2, 2), (2, 3), (3, 2)):
        def run():
            bp = build_thrifty_det(h, k)
            pi, w = pi_w_params(bp)
            return relaxed_bounds(bp, pi, w)
        rep, sec = _timed(run)
        ok = (rep["pi"], rep["w"]) == (1, 0) and rep["ok_pi"] and rep["ok_w"]
        rows.append(Row("relaxed", f"(pi,w) and size bounds at ({h},{k})",
                        f"pi={rep['pi']} w={rep['w']} size={rep['size']} >= {_fmt(rep['bound_pi'])}, {_fmt(rep['bound_w'])}",
                        "pi=1 w=0, both bounds hold", ok, sec))
    return rows


def suite_minsize(cfg) -> list[Row]:
    rows = []
    for k in (1, 2, 3):
        below, sec1 = _timed(lambda: run_minsize_search(1, k))
        at, sec2 = _timed(lambda: run_minsize_search(1, k, size_cap=k + 1))
        ok = below.status == "exhausted" and at.status == "found" and at.minimum == k + 1
        rows.append(Row("minsize", f"h=1, k={k} minimum", f"{at.minimum} ({below.status} below {k + 1})",
                        str(k + 1), ok, sec1 + sec2))
    if cfg.get("long"):
        res, sec = _timed(lambda: run_minsize_search(2, 2, time_cap=cfg.get("time_cap"),
                                                     checkpoint=cfg.get("checkpoint")))
        rows.append(Row("minsize", "h=2, k=2 nothing below 9 states",
                        f"{res.status}, sizes excluded {res.exhausted_sizes}", "exhausted",
                        res.status == "exhausted", sec))
    return rows


def mutation_rate(n: int = 1000, seed: int = 0) -> tuple[int, int]:
    bp = build_thrifty_det(2, 2)
    rng = random.Random(seed)
    caught = 0
    for m in range(n):
        mutant = rewire_edge(bp, rng) if m % 2 == 0 else corrupt_query(bp, rng)
        if not check_solves(mutant) or not check_thrifty(mutant):
            caught += 1
    return caught, n


def suite_mutation(cfg) -> list[Row]:
    (caught, n), sec = _timed(lambda: mutation_rate(cfg.get("mutants", 1000), cfg.get("seed", 0)))
    return [Row("mutation", "mutants detected at (2,2)", f"{caught}/{n}", ">= 99%", caught >= 0.99 * n, sec)]


SUITES: dict[str, Callable] = {
    "pebbling-numbers": suite_pebbling_numbers,
    "construction": suite_construction,
    "thrifty-lowerbound": suite_thrifty_lowerbound,
    "advice": suite_advice,
    "dag-reduction": suite_dag_reduction,
    "bounds": suite_bounds,
    "relaxed": suite_relaxed,
    "minsize": suite_minsize,
    "mutation": suite_mutation,
}


def run_report(suite: str, cfg: dict | None = None) -> dict:
    cfg = dict(cfg or {})
    if suite == "all":
        names = list(SUITES)
    elif suite in SUITES:
        names = [suite]
    else:
        raise UnknownSuite(f"unknown suite {suite!r}; choose from: all, {', '.join(SUITES)}")
    rows: list[Row] = []
    for name in names:
        try:
            rows.extend(SUITES[name](cfg))
        except Exception as exc:
            raise RuntimeError(f"suite {name} failed: {exc}") from exc
    blob = json.dumps({"suite": suite, **cfg}, sort_keys=True, default=str)
    return {
        "version": __version__,
        "config_hash": hashlib.sha256(blob.encode()).hexdigest()[:16],
        "suite": suite,
        "rows": rows,
        "failures": sum(not r.ok for r in rows),
    }


def render_text(rep: dict) -> str:
    lines = [f"pebbleworks {rep['version']}  suite={rep['suite']}  config={rep['config_hash']}"]
    for r in rep["rows"]:
        mark = "PASS" if r.ok else "FAIL"
        lines.append(f"{mark}  [{r.suite}] {r.check}: {r.measured} (expected {r.expected}) {r.seconds:.2f}s")
    lines.append(f"{len(rep['rows']) - rep['failures']} passed, {rep['failures']} failed")
    return "\n".join(lines)


def render_json(rep: dict) -> str:
    out = dict(rep, rows=[asdict(r) for r in rep["rows"]])
    return json.dumps(out, indent=2, sort_keys=True)


def render_csv(rep: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["suite", "check", "measured", "expected", "ok", "seconds"])
    for r in rep["rows"]:
        w.writerow([r.suite, r.check, r.measured, r.expected, r.ok, f"{r.seconds:.3f}"])
    return buf.getvalue()

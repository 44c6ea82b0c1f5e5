"""Command-line front end.

Exit codes: 0 pass or found, 1 checked and negative, 2 resource cap hit,
3 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import __version__
from .bp import (EXHAUSTIVE_CAP, EnumerationCap, InvalidProgram, check_solves, check_thrifty, depth,
                 load_program, pi_w_params, relaxed_bounds, simulate)
from .construct import build_from_black_pebbling, build_from_bw_pebbling, build_thrifty_det
from .dag import InvalidDag, load_dag, tree_dag
from .minsize import run_minsize_search
from .pebbling import (Game, InvalidSequence, IllegalMove, black_strategy, half_pebble_strategy, frac_str,
                       load_sequence, verify_sequence)
from .proof import AdviceCodec, critical_states, partition_by_supercritical, supercritical
from .reduction import (DisjointnessViolation, bottleneck_witness, build_G, build_Gprime, check_nice,
                        root_paths)
from .report import UnknownSuite, render_csv, render_json, render_text, run_report
from .search import Infeasible, SearchCapExceeded, min_cost
from .tree import (EnumerationCapExceeded, InvalidInstance, TreeShape, enumerate_instances, instance_at,
                   instance_count, load_instance)

OK, NEGATIVE, CAP, INPUT = 0, 1, 2, 3


class InputError(ValueError):
    pass


def _emit(args, payload, text: str | None = None) -> None:
    """Print ``text`` (or the JSON payload) and write the JSON to ``--out``."""
    blob = json.dumps(payload, indent=2, sort_keys=True, default=str)
    print(text if text is not None else blob)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(blob + "\n")


def _shape(args) -> TreeShape:
    if args.h is None:
        raise InputError("--h is required")
    return TreeShape(args.d, args.h)


def _need_k(args) -> int:
    if args.k is None:
        raise InputError("--k is required")
    return args.k


def _instance(args, shape=None, k=None):
    if args.input:
        return load_instance(args.input)
    if args.index is not None:
        return instance_at(shape or _shape(args), k or _need_k(args), args.index)
    raise InputError("give --input FILE or --index N")


def _program(args):
    if args.bp:
        return load_program(args.bp)
    if args.h is None or args.k is None:
        raise InputError("give --bp FILE or --h and --k")
    return build_thrifty_det(args.h, args.k)


def _graph(args):
    if args.graph:
        return load_dag(args.graph)
    if args.h is None:
        raise InputError("give --graph FILE or --h")
    if args.c is not None and args.prime is not None:
        return (build_Gprime if args.prime else build_G)(args.d, args.h, args.c)
    return tree_dag(_shape(args))


def _game(args) -> Game:
    return Game.parse(args.game or "black", args.c or 1)


# --- tep -------------------------------------------------------------------------------------

def cmd_tep_eval(args) -> int:
    inst = _instance(args)
    vals = inst.node_values
    _emit(args, {"root": vals[1], "FT": vals[1], "BT": int(vals[1] == 1), "index": inst.index,
                 "node_values": vals},
          f"root value {vals[1]} (BT {'yes' if vals[1] == 1 else 'no'})")
    return OK


def cmd_tep_enum(args) -> int:
    shape, k = _shape(args), _need_k(args)
    n = instance_count(shape, k)
    cap = args.cap_instances or EXHAUSTIVE_CAP
    if n > cap:
        print(f"{n} instances exceed the cap {cap}", file=sys.stderr)
        return CAP
    counts: dict[int, int] = {}
    for inst in enumerate_instances(shape, k, cap):
        r = inst.node_values[1]
        counts[r] = counts.get(r, 0) + 1
    _emit(args, {"count": n, "root_histogram": counts},
          f"{n} instances; root values {dict(sorted(counts.items()))}")
    return OK


# --- bp --------------------------------------------------------------------------------------

def cmd_bp_build(args) -> int:
    if args.from_pebbling:
        seq = load_sequence(args.from_pebbling)
        k = _need_k(args)
        shape = _shape(args) if args.h is not None else None
        bp = (build_from_black_pebbling if seq.game.kind == "black" else build_from_bw_pebbling)(seq, k, shape)
    else:
        bp = build_thrifty_det(_shape(args).h, _need_k(args))
    _emit(args, bp.to_json(), f"{bp.meta.get('construction')} program: {bp.size} states, "
                              f"{'deterministic' if bp.deterministic else 'nondeterministic'}")
    return OK


def cmd_bp_simulate(args) -> int:
    bp = _program(args)
    inst = _instance(args, bp.shape, bp.k)
    res = simulate(bp, inst)
    if bp.deterministic:
        out, path = res
        _emit(args, {"output": out, "path": path}, f"output {out} after {len(path) - 1} queries")
    else:
        _emit(args, {"paths": [{"output": o, "path": p} for o, p in res]},
              f"{len(res)} terminating computations, outputs {sorted({o for o, _ in res})}")
    return OK


def cmd_bp_check(args) -> int:
    bp = _program(args)
    cap = args.cap_instances or EXHAUSTIVE_CAP
    solves = check_solves(bp, args.problem, cap=cap, seed=args.seed)
    thrifty = check_thrifty(bp, cap=cap, seed=args.seed)
    out = {"size": bp.size, "solves": solves.ok, "thrifty": thrifty.ok,
           "checked": solves.checked, "sampled": solves.sampled}
    if bp.deterministic:
        out["depth"] = depth(bp, cap=cap, seed=args.seed)
    for name, res in (("solves", solves), ("thrifty", thrifty)):
        if not res.ok:
            out[f"{name}_detail"] = res.detail
            out[f"{name}_counterexample"] = res.counterexample.index
    tag = " (sampled)" if solves.sampled else ""
    _emit(args, out, f"size {bp.size}: solves {args.problem} {solves.ok}, thrifty {thrifty.ok}"
                     + (f", depth {out['depth']}" if "depth" in out else "") + tag)
    return OK if solves.ok and thrifty.ok else NEGATIVE


def cmd_bp_minsize(args) -> int:
    res = run_minsize_search(_shape(args).h, _need_k(args), args.size_cap, args.time_cap, args.checkpoint)
    payload = res.to_json()
    if res.status == "found":
        text = f"found a {res.minimum}-state program (sizes {res.exhausted_sizes} excluded)"
    elif res.status == "exhausted":
        text = f"exhausted: no program with at most {res.size_cap} states"
    else:
        text = f"partial: sizes {res.exhausted_sizes} excluded before the time cap"
    _emit(args, payload, text)
    return {"found": OK, "exhausted": NEGATIVE, "partial": CAP}[res.status]


# --- pebble ----------------------------------------------------------------------------------

def cmd_pebble_verify(args) -> int:
    if not args.sequence:
        raise InputError("--sequence FILE is required")
    seq = load_sequence(args.sequence)
    dag = _graph(args)
    try:
        cost = verify_sequence(seq, dag)
    except (IllegalMove, InvalidSequence) as exc:
        _emit(args, {"valid": False, "error": str(exc)}, f"invalid: {exc}")
        return NEGATIVE
    _emit(args, {"valid": True, "cost": frac_str(cost)}, f"valid, cost {frac_str(cost)}")
    return OK


def cmd_pebble_search(args) -> int:
    dag, game = _graph(args), _game(args)
    bound = Fraction(args.max_bound) if args.max_bound else None
    try:
        res = min_cost(dag, game, bound, args.cap_configs)
    except Infeasible as exc:
        _emit(args, {"feasible": False, "max_bound": str(exc.max_bound)}, str(exc))
        return NEGATIVE
    _emit(args, {"cost": frac_str(res.bound), "explored": res.explored, "witness": res.witness.to_json()},
          frac_str(res.bound))
    return OK


def cmd_pebble_strategy(args) -> int:
    name = (args.game or "black").lower()
    if name == "half":
        seq = half_pebble_strategy()
    elif name == "black":
        seq = black_strategy(_shape(args))
    else:
        raise InputError("strategies available: black, half")
    cost = verify_sequence(seq, TreeShape(2, 3) if name == "half" else _shape(args))
    _emit(args, seq.to_json(), f"{len(seq)} moves, cost {frac_str(cost)}")
    return OK


# --- dag -------------------------------------------------------------------------------------

def _reduction(args):
    if args.h is None or args.c is None:
        raise InputError("--h and --c are required")
    return (build_Gprime if args.prime else build_G)(args.d, args.h, args.c)


def cmd_dag_build(args) -> int:
    g = _reduction(args)
    _emit(args, g.to_json(), f"{g.name}: {len(g)} nodes, {len(g.edges)} edges")
    return OK


def cmd_dag_nice(args) -> int:
    g = load_dag(args.graph) if args.graph else _reduction(args)
    rep = check_nice(g, antichain_limit=args.cap_configs or 10 ** 6)
    out = {"nice": rep.nice, "property1": rep.property1, "property2": rep.property2,
           "property3": rep.property3, "counterexample": rep.counterexample,
           "antichains_checked": rep.antichains_checked, "partial": rep.partial}
    _emit(args, out, f"nice {rep.nice}" + (f" (counterexample {rep.counterexample})" if not rep.nice else "")
          + (" (partial)" if rep.partial else ""))
    if rep.partial and rep.nice:
        return CAP
    return OK if rep.nice else NEGATIVE


def cmd_dag_bottleneck(args) -> int:
    args.prime = True if args.prime is None else args.prime
    g = _reduction(args)
    sizes, bad = {}, []
    for p in root_paths(g):
        try:
            w = bottleneck_witness(g, p)
            sizes[len(w.S)] = sizes.get(len(w.S), 0) + 1
        except DisjointnessViolation as exc:
            bad.append(str(exc))
    _emit(args, {"sizes": sizes, "violations": bad},
          f"witness sizes {sizes}, {len(bad)} disjointness violations")
    return OK if not bad else NEGATIVE


# --- proof -----------------------------------------------------------------------------------

def cmd_proof_critical(args) -> int:
    bp = _program(args)
    inst = _instance(args, bp.shape, bp.k)
    ca = critical_states(bp, inst)
    crit = {str(i): ca.critical[i] for i in sorted(ca.critical)}
    _emit(args, {"critical_positions": crit, "path": ca.path},
          "\n".join(f"node {i}: position {p}, state {ca.path[p]}" for i, p in sorted(ca.critical.items())))
    return OK


def cmd_proof_supercritical(args) -> int:
    bp = _program(args)
    if args.input or args.index is not None:
        rep = supercritical(bp, _instance(args, bp.shape, bp.k), args.height)
        _emit(args, {"state": rep.state, "position": rep.position, "node": rep.node,
                     "bottleneck": sorted(rep.bottleneck)},
              f"supercritical state {rep.state} at node {rep.node}, bottleneck {sorted(rep.bottleneck)}")
        return OK
    part = partition_by_supercritical(bp, args.height, cap=args.cap_instances or EXHAUSTIVE_CAP)
    want = bp.k ** bp.shape.h
    n = len(part.classes)
    _emit(args, {"R": n, "expected_at_least": want, "min_bottleneck": part.min_bottleneck,
                 "checked": part.checked},
          f"|R| = {n} (k^h = {want}), minimum bottleneck size {part.min_bottleneck}")
    return OK if n >= want else NEGATIVE


def cmd_proof_advice(args) -> int:
    bp = _program(args)
    codec = AdviceCodec(bp)
    if args.input or args.index is not None:
        inst = _instance(args, bp.shape, bp.k)
        adv = codec.encode(inst)
        r = codec.state_of(inst)
        back = codec.decode(r, adv)
        _emit(args, {"state": r, "advice": list(adv), "round_trip": back == inst},
              f"state {r}, advice {list(adv)}, round trip {back == inst}")
        return OK if back == inst else NEGATIVE
    bad = 0
    seen = set()
    for inst in enumerate_instances(bp.shape, bp.k, args.cap_instances or EXHAUSTIVE_CAP):
        adv = codec.encode(inst)
        r = codec.state_of(inst)
        bad += codec.decode(r, adv) != inst or (r, adv) in seen
        seen.add((r, adv))
    _emit(args, {"checked": len(seen), "failures": bad, "advice_length": codec.length},
          f"{len(seen)} inputs, {bad} failures, advice length {codec.length}")
    return OK if not bad else NEGATIVE


def cmd_proof_relaxed(args) -> int:
    bp = _program(args)
    pi, w = pi_w_params(bp)
    rep = relaxed_bounds(bp, pi, w)
    _emit(args, rep, f"pi={pi} w={w} size={rep['size']} bounds {frac_str(rep['bound_pi'])}, "
                     f"{frac_str(rep['bound_w'])}: {rep['ok_pi'] and rep['ok_w']}")
    return OK if rep["ok_pi"] and rep["ok_w"] else NEGATIVE


# --- report ----------------------------------------------------------------------------------

def cmd_report(args) -> int:
    cfg = {"seed": args.seed, "long": args.long, "time_cap": args.time_cap, "checkpoint": args.checkpoint}
    rep = run_report(args.suite, cfg)
    render = {"text": render_text, "json": render_json, "csv": render_csv}[args.format]
    out = render(rep)
    print(out)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out if out.endswith("\n") else out + "\n")
    return OK if rep["failures"] == 0 else NEGATIVE


# --- parser ----------------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--h", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--c", type=int)
    p.add_argument("--game")
    p.add_argument("--bound", "--max-bound", dest="max_bound")
    p.add_argument("--cap-instances", type=int)
    p.add_argument("--cap-configs", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="accepted; all commands run single-threaded")
    p.add_argument("--out")
    p.add_argument("--input", help="instance JSON")
    p.add_argument("--index", type=int, help="instance by enumeration index")
    p.add_argument("--bp", help="branching program JSON")
    p.add_argument("--graph", help="DAG JSON")
    p.add_argument("--sequence", help="pebbling sequence JSON")
    p.add_argument("--from-pebbling", help="pebbling sequence JSON to compile")
    p.add_argument("--problem", choices=("FT", "BT"), default="FT")
    p.add_argument("--height", type=int, default=2)
    prime = p.add_mutually_exclusive_group()
    prime.add_argument("--prime", dest="prime", action="store_true", default=None)
    prime.add_argument("--no-prime", dest="prime", action="store_false")
    p.add_argument("--size-cap", type=int)
    p.add_argument("--time-cap", type=float)
    p.add_argument("--checkpoint")


COMMANDS = {
    "tep": {"eval": cmd_tep_eval, "enum": cmd_tep_enum},
    "bp": {"build": cmd_bp_build, "simulate": cmd_bp_simulate, "check": cmd_bp_check, "minsize": cmd_bp_minsize},
    "pebble": {"verify": cmd_pebble_verify, "search": cmd_pebble_search, "strategy": cmd_pebble_strategy},
    "dag": {"build": cmd_dag_build, "nice": cmd_dag_nice, "bottleneck": cmd_dag_bottleneck},
    "proof": {"critical": cmd_proof_critical, "supercritical": cmd_proof_supercritical,
              "advice": cmd_proof_advice, "relaxed": cmd_proof_relaxed},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pebbleworks", description="Tree evaluation and pebbling workbench")
    parser.add_argument("--version", action="version", version=f"pebbleworks {__version__}")
    sub = parser.add_subparsers(dest="group", required=True)
    for group, cmds in COMMANDS.items():
        gp = sub.add_parser(group)
        gsub = gp.add_subparsers(dest="command", required=True)
        for name, fn in cmds.items():
            p = gsub.add_parser(name)
            _common(p)
            p.set_defaults(func=fn)
    rp = sub.add_parser("report")
    rp.add_argument("suite")
    rp.add_argument("--format", choices=("text", "json", "csv"), default="text")
    rp.add_argument("--long", action="store_true", help="include the long (h,k)=(2,2) minimum-size search")
    _common(rp)
    rp.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage errors are input errors here.
        return INPUT if exc.code not in (0, None) else OK
    try:
        return args.func(args)
    except (SearchCapExceeded, EnumerationCap, EnumerationCapExceeded) as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return CAP
    except (InputError, InvalidInstance, InvalidProgram, InvalidSequence, InvalidDag, UnknownSuite,
            FileNotFoundError, json.JSONDecodeError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"input error: {msg}", file=sys.stderr)
        return INPUT


if __name__ == "__main__":
    sys.exit(main())

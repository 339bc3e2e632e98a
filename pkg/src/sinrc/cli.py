"""Command-line front end.

Exit codes: 0 success, 1 usage, 2 validation (malformed input), 3 domain
failure (an invariant fails, an instance cannot be built, a non-fading
metric).  ``verify`` instead exits with the number of infeasible slots,
capped at 255.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import shlex
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .conflict import build, f_independent_set
from .funclib import parse_fn
from .generators import (LengthOverflowError, chain_clique, chain_clique_strong, hard_instance, random_planar,
                         sample_independent, unit_metric_clique)
from .metric import InstanceError, LinkInstance, NonFadingError, instance_from_json
from .scheduler import BENCH_FIELDS, baseline_lengthclass, bench_row, default_threads, measure, schedule, wcapacity
from .sinr import exact_feasible, necessary_check

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_DOMAIN = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


@dataclass
class RunConfig:
    """A subcommand with its flags; ``canonical()`` round-trips through ``parse``."""

    command: str
    options: dict = field(default_factory=dict)

    def canonical(self) -> str:
        parts = [self.command]
        for k in sorted(self.options):
            v = self.options[k]
            if v is None or v is False:
                continue
            parts.append(f"--{k}" if v is True else f"--{k}={_canon_value(v)}")
        return " ".join(shlex.quote(p) for p in parts)

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        parts = shlex.split(text)
        opts = {}
        for p in parts[1:]:
            key, eq, val = p[2:].partition("=")
            opts[key] = json.loads(val) if eq and _is_json(val) else (val if eq else True)
        return cls(parts[0], opts)


def _canon_value(v) -> str:
    if isinstance(v, (list, tuple)):
        return json.dumps(list(v), separators=(",", ":"))
    if isinstance(v, str):
        return json.dumps(v) if _is_json(v) else v
    return json.dumps(v)


def _is_json(s: str) -> bool:
    try:
        json.loads(s)
        return True
    except ValueError:
        return False


def provenance(cfg: RunConfig) -> dict:
    return {"tool": "sinrc", "version": __version__, "config": cfg.canonical()}


# -- argument parsing ------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _sinr_flags(p):
    p.add_argument("--alpha", type=float, help="path-loss exponent override")
    p.add_argument("--beta", type=float, help="SINR threshold override")
    p.add_argument("--noise", type=float, help="noise override")


def _instance_arg(p):
    p.add_argument("instance", help="instance JSON file")
    _sinr_flags(p)


def _out_flag(p):
    p.add_argument("--out", "-o", help="output path (default: stdout)")


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sinrc", description="SINR link scheduling via sub-linear conflict graphs")
    ap.add_argument("--version", action="version", version=f"sinrc {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", help="build an instance and its invariants file")
    g.add_argument("kind", choices=["chain-clique", "chain-strong", "hard", "unit-metric", "random", "independent"])
    g.add_argument("-n", type=int, default=10, help="number of links")
    g.add_argument("--f", "-f", dest="f", default=None, help="function spec, e.g. log, tlog:g=2, const:2, pow:e=0.5")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--delta", type=float, default=2.0**12, help="target length ratio (random, independent)")
    g.add_argument("--side", type=float, default=None, help="square side (random, independent)")
    g.add_argument("-t", type=int, default=2, help="recursion depth (hard)")
    g.add_argument("--k-cap", type=int, default=64, help="copies cap in scaled mode (hard)")
    g.add_argument("--mode", choices=["scaled", "faithful"], default="scaled")
    g.add_argument("--c0", type=float, default=None, help="transversal influence target (hard)")
    g.add_argument("--alpha", type=float, default=3.0)
    g.add_argument("--beta", type=float, default=1.0)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--invariants", help="invariants output path (default: <out>.invariants.json)")
    _out_flag(g)

    s = sub.add_parser("schedule", help="verified schedule by coloring G_{gamma*tlog}")
    _instance_arg(s)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--verify", action=argparse.BooleanOptionalAction, default=True)
    s.add_argument("--baseline", action="store_true", help="length-class first-fit baseline instead")
    _out_flag(s)

    c = sub.add_parser("capacity", help="weighted capacity by local ratio")
    _instance_arg(c)
    c.add_argument("--gamma", type=float, default=1.0)
    c.add_argument("--verify", action="store_true", help="cross-check the set with the exact oracle")
    _out_flag(c)

    v = sub.add_parser("verify", help="re-check every slot of a schedule file")
    _instance_arg(v)
    v.add_argument("schedule", help="schedule JSON file")
    _out_flag(v)

    m = sub.add_parser("measure", help="B-measures, colors and influence")
    _instance_arg(m)
    m.add_argument("--gamma", type=float, default=1.0)
    m.add_argument("--k-nec", type=float, default=None, help="also run the necessary-condition check")
    _out_flag(m)

    gr = sub.add_parser("graph", help="export G_f as an edge list")
    _instance_arg(gr)
    gr.add_argument("--f", "-f", dest="f", default="tlog:g=1")
    _out_flag(gr)

    b = sub.add_parser("bench", help="random ensembles: slots vs B-measures vs baseline (CSV)")
    b.add_argument("--seeds", type=int, default=20)
    b.add_argument("--seed", type=int, default=0, help="first seed")
    b.add_argument("-n", type=int, default=200)
    b.add_argument("--delta-exps", default="4,8,12,16,20,24", help="comma-separated log2 of delta")
    b.add_argument("--gamma", type=float, default=1.0)
    b.add_argument("--alpha", type=float, default=3.0)
    b.add_argument("--beta", type=float, default=1.0)
    _out_flag(b)
    return ap


def _config(args) -> RunConfig:
    opts = {k.replace("_", "-"): v for k, v in vars(args).items() if k != "command"}
    return RunConfig(args.command, opts)


# -- io helpers ------------------------------------------------------------------


def _read_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InstanceError(f"{path}: {e.strerror}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from e


def _load(args) -> LinkInstance:
    data = _read_json(args.instance)
    try:
        inst = instance_from_json(data)
    except InstanceError as e:
        raise InstanceError(f"{args.instance}: {e}") from e
    over = {k: getattr(args, k) for k in ("alpha", "beta", "noise") if getattr(args, k, None) is not None}
    return inst.with_sinr(**over) if over else inst


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, default=_json_default) + "\n"


def _json_default(o):
    if hasattr(o, "item"):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


# -- commands --------------------------------------------------------------------


def _default_f(kind: str) -> str:
    return {"chain-clique": "log", "chain-strong": "log", "hard": "const:1", "unit-metric": "const:2",
            "random": "const:1", "independent": "tlog:g=1"}[kind]


def cmd_generate(args) -> int:
    cfg = _config(args)
    fspec = args.f or _default_f(args.kind)
    m = 1.0 if args.kind in ("hard", "unit-metric", "chain-clique", "chain-strong") else 2.0
    try:
        f = parse_fn(fspec, args.alpha, m)
    except ValueError as e:
        raise UsageError(f"bad --f: {e}") from e
    try:
        if args.kind == "chain-clique":
            inst, inv = chain_clique(args.n, f, args.alpha, args.beta)
        elif args.kind == "chain-strong":
            inst, inv = chain_clique_strong(args.n, f, alpha=args.alpha, beta=args.beta)
        elif args.kind == "hard":
            inst, inv = hard_instance(args.t, f, mode=args.mode, k_cap=args.k_cap, alpha=args.alpha,
                                      beta=args.beta, c0=args.c0, seed=args.seed)
        elif args.kind == "unit-metric":
            inst, inv = unit_metric_clique(args.n, f, args.alpha, args.beta)
        elif args.kind == "random":
            inst = random_planar(args.n, args.delta, args.seed, args.alpha, args.beta, side=args.side)
            inv = {"n": inst.n, "delta": inst.delta(), "n_matches": inst.n == args.n}
        else:
            side = args.side if args.side is not None else 10.0 * args.delta * max(1.0, math.sqrt(args.n))
            inst = sample_independent(f, args.n, args.delta, args.seed, side, args.alpha, args.beta)
            inv = {"n": inst.n, "f_independent": f_independent_set(inst, f)}
    except LengthOverflowError as e:
        raise DomainError(f"{e} (use -n {e.max_n} or a slower-growing f)") from e
    except ValueError as e:
        raise DomainError(str(e)) from e
    if args.noise:
        inst = inst.with_sinr(noise=args.noise)
    data = inst.to_json()
    data["provenance"] = provenance(cfg)
    data["generator"] = {"kind": args.kind, "f": f.spec_string()}
    _emit(args, _dump(data))
    inv_doc = {"invariants": inv, "provenance": provenance(cfg)}
    inv_path = args.invariants or (f"{args.out}.invariants.json" if args.out else None)
    if inv_path:
        Path(inv_path).write_text(_dump(inv_doc))
    else:
        sys.stderr.write(_dump(inv_doc))
    failed = [k for k, v in inv.items() if v is False]
    if failed:
        sys.stderr.write(f"invariants failed: {', '.join(failed)}\n")
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_schedule(args) -> int:
    inst = _load(args)
    sched = baseline_lengthclass(inst) if args.baseline else schedule(inst, args.gamma, verify=args.verify)
    doc = sched.to_json(inst)
    doc["provenance"] = provenance(_config(args))
    _emit(args, _dump(doc))
    return EXIT_OK


def cmd_capacity(args) -> int:
    inst = _load(args)
    sol = wcapacity(inst, None, args.gamma, cross_check=args.verify)
    doc = sol.to_json(inst.ids)
    doc["provenance"] = provenance(_config(args))
    _emit(args, _dump(doc))
    if args.verify and not sol.verdict.feasible:
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = _load(args)
    doc = _read_json(args.schedule)
    if not isinstance(doc.get("slots"), list):
        raise InstanceError(f"{args.schedule}: field 'slots' must be a list of id lists")
    pos = inst.index_of
    seen = set()
    slots = []
    for k, raw in enumerate(doc["slots"]):
        try:
            slot = [pos[int(i)] for i in raw]
        except (KeyError, TypeError, ValueError) as e:
            raise InstanceError(f"{args.schedule}: slots[{k}]: unknown link id {e}") from e
        if seen.intersection(slot):
            raise InstanceError(f"{args.schedule}: slots[{k}]: link appears in more than one slot")
        seen.update(slot)
        slots.append(slot)
    if len(seen) != inst.n:
        raise InstanceError(f"{args.schedule}: slots cover {len(seen)} of {inst.n} links")
    results = []
    bad = 0
    for k, slot in enumerate(slots):
        v = exact_feasible(inst, slot)
        bad += not v.feasible
        results.append({"slot": k, "verdict": v.verdict, "rho": v.rho})
    out = {"slots": len(slots), "infeasible": bad, "results": results, "provenance": provenance(_config(args))}
    _emit(args, _dump(out))
    return min(bad, 255)


def cmd_measure(args) -> int:
    inst = _load(args)
    rep = measure(inst, args.gamma)
    if args.k_nec is not None:
        nec = necessary_check(inst, range(inst.n), args.k_nec)
        rep["necessary"] = {"tested": nec.tested, "influence": nec.influence, "k_nec": nec.k_nec,
                            "passed": nec.passed}
    rep["provenance"] = provenance(_config(args))
    _emit(args, _dump(rep))
    return EXIT_OK


def cmd_graph(args) -> int:
    inst = _load(args)
    try:
        f = parse_fn(args.f, inst.alpha, inst.m)
    except ValueError as e:
        raise UsageError(f"bad --f: {e}") from e
    text = build(inst, f).export_edgelist()
    header, _, rest = text.partition("\n")
    head = json.loads(header)
    head["provenance"] = provenance(_config(args))
    _emit(args, json.dumps(head, sort_keys=True) + "\n" + rest)
    return EXIT_OK


def _bench_job(job):
    seed, n, exp, gamma, alpha, beta = job
    inst = random_planar(n, 2.0**exp, seed, alpha, beta)
    return bench_row(inst, seed, gamma)


def cmd_bench(args) -> int:
    try:
        exps = [int(x) for x in args.delta_exps.split(",") if x.strip()]
    except ValueError as e:
        raise UsageError(f"bad --delta-exps: {e}") from e
    jobs = [(args.seed + s, args.n, e, args.gamma, args.alpha, args.beta)
            for e in exps for s in range(args.seeds)]
    threads = default_threads()
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_bench_job, jobs))
    else:
        rows = [_bench_job(j) for j in jobs]
    rows.sort(key=lambda r: (r["delta"], r["seed"]))
    buf = io.StringIO()
    buf.write(f"# sinrc {__version__} {_config(args).canonical()}\n")
    w = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    _emit(args, buf.getvalue())
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "schedule": cmd_schedule, "capacity": cmd_capacity, "verify": cmd_verify,
            "measure": cmd_measure, "graph": cmd_graph, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        return COMMANDS[args.command](args)
    except UsageError as e:
        sys.stderr.write(f"usage error: {e}\n")
        return EXIT_USAGE
    except (DomainError, NonFadingError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_DOMAIN
    except InstanceError as e:
        sys.stderr.write(f"invalid input: {e}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: ``petriqubo <verb> ...``.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 no feasible
solution (only with ``--require-feasible``).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from petriqubo import problems as pb
from petriqubo import solver as sv
from petriqubo.bqn import convert
from petriqubo.expr import VarId, as_fraction
from petriqubo.formats import (
    FormatError,
    ModelDocument,
    dump_model,
    format_number,
    load_json,
    load_model,
    parse_net,
    to_coordinate_text,
)
from petriqubo.petri import Marking, NetValidationError, Schedule

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_INFEASIBLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"SEED environment variable is not an integer: {env!r}") from None


def _model_out(model: pb.CompiledModel, args) -> int:
    _emit(dump_model(ModelDocument(model.bqn, model.hints), args.float), args.output)
    return EXIT_OK


def _load_compiled(path: str, strict: bool) -> pb.CompiledModel | None:
    doc = load_model(path, strict=strict)
    if not doc.decode_hints:
        return None
    return pb.model_from_hints(doc.decode_hints, doc.bqn)


def _samples_doc(samples: sv.SampleSet) -> dict[str, Any]:
    return {
        "vartype": samples.vartype.value,
        "metadata": dict(samples.metadata),
        "samples": [
            {
                "assignment": {str(v): int(s.assignment[v]) for v in samples.variables},
                "energy": format_number(s.energy),
                "occurrences": s.occurrences,
            }
            for s in samples
        ],
    }


def _read_assignment(path: str, index: int) -> dict[VarId, int]:
    data = load_json(path)
    if isinstance(data, dict) and "samples" in data:
        try:
            data = data["samples"][index]
        except (IndexError, TypeError):
            raise FormatError(f"{path}: no sample at index {index}") from None
    if isinstance(data, dict) and "assignment" in data:
        data = data["assignment"]
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected an assignment object")
    out = {}
    for key, val in data.items():
        try:
            v = VarId.parse(key)
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
        if isinstance(val, bool) or not isinstance(val, int):
            raise FormatError(f"{path}: value of {key} must be an integer")
        out[v] = val
    return out


def _plain(value: Any) -> Any:
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, Schedule):
        return {"horizon": value.horizon, "entries": [[t, k] for t, k in value.entries]}
    if isinstance(value, list):
        return [_plain(v) for v in value]
    if isinstance(value, Marking):
        return {"step": value.step, "counts": list(value.counts)}
    return value


def cmd_compile(args) -> int:
    net = parse_net(args.net, strict=not args.lenient)
    config = load_json(args.config)
    if not isinstance(config, dict):
        raise FormatError(f"{args.config}: construction config must be an object")
    return _model_out(pb.net_model(net, config, strict=not args.lenient), args)


def cmd_gen(args) -> int:
    scales = {k: getattr(args, k) for k in ("A", "B", "C") if getattr(args, k) is not None}
    if args.problem in ("vertex-cover", "partition"):
        if not args.graph:
            raise UsageError(f"gen {args.problem}: --graph is required")
        graph = pb.Graph.from_dict(load_json(args.graph))
        build = pb.vertex_cover_model if args.problem == "vertex-cover" else pb.graph_partitioning_model
        return _model_out(build(graph, **scales), args)
    if args.problem == "tsp":
        if not args.dist:
            raise UsageError("gen tsp: --dist is required")
        data = load_json(args.dist)
        dist = data["distances"] if isinstance(data, dict) else data
        return _model_out(pb.tsp_model(dist, clamp_start=args.clamp_start, **scales), args)
    if not args.instance:
        raise UsageError("gen jobshop: --instance is required")
    inst = pb.JobShopInstance.from_dict(load_json(args.instance))
    return _model_out(pb.job_shop_model(inst, max_time=args.max_time, **scales), args)


def cmd_solve(args) -> int:
    doc = load_model(args.model, strict=not args.lenient)
    if args.solver == "brute":
        samples = sv.brute_force(doc.bqn, cap=args.cap, limit=args.limit)
    else:
        cfg = sv.AnnealConfig(seed=_seed(args), sweeps=args.sweeps, reads=args.reads)
        samples = sv.simulated_annealing(doc.bqn, cfg)
    _emit(_dumps(_samples_doc(samples)), args.output)
    if args.require_feasible:
        model = pb.model_from_hints(doc.decode_hints, doc.bqn) if doc.decode_hints else None
        if model is None:
            feasible = any(s.energy == 0 for s in samples)
        else:
            feasible = any(sv.verify(model, s.assignment).ok for s in samples)
        if not feasible:
            print("no feasible sample found", file=sys.stderr)
            return EXIT_INFEASIBLE
    return EXIT_OK


def _need_model(args) -> pb.CompiledModel:
    model = _load_compiled(args.model, not args.lenient)
    if model is None:
        raise FormatError(f"{args.model}: model file carries no decode hints")
    return model


def cmd_decode(args) -> int:
    model = _need_model(args)
    decoded = sv.decode(model, _read_assignment(args.samples, args.index))
    out = {"kind": decoded.kind, "value": _plain(decoded.value), "conflicts": list(decoded.conflicts)}
    if isinstance(decoded.value, Schedule) and model.net is not None:
        out["makespan"] = decoded.value.makespan(model.net)
    if decoded.kind == "tsp" and decoded.value is not None:
        d = model.hints["instance"]["distances"]
        tour = decoded.value
        out["length"] = format_number(
            sum(as_fraction(d[tour[k]][tour[(k + 1) % len(tour)]]) for k in range(len(tour)))
        )
    _emit(_dumps(out), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    model = _need_model(args)
    report = sv.verify(model, _read_assignment(args.samples, args.index))
    _emit(_dumps(report.to_dict()), args.output)
    if args.require_feasible and not report.ok:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_convert(args) -> int:
    doc = load_model(args.model, strict=not args.lenient)
    _emit(dump_model(ModelDocument(convert(doc.bqn, args.to), doc.decode_hints), args.float), args.output)
    return EXIT_OK


def cmd_export(args) -> int:
    doc = load_model(args.model, strict=not args.lenient)
    if args.format == "coordinate-text":
        _emit(to_coordinate_text(doc.bqn, args.float), args.output)
    else:
        _emit(dump_model(doc, args.float), args.output)
    return EXIT_OK


def cmd_jobshop_opt(args) -> int:
    inst = pb.JobShopInstance.from_dict(load_json(args.instance))
    cfg = sv.AnnealConfig(seed=_seed(args), sweeps=args.sweeps, reads=args.reads)
    scales = {k: getattr(args, k) for k in ("A", "B", "C") if getattr(args, k) is not None}
    try:
        makespan, sched = pb.job_shop_minimize_makespan(
            inst, args.solver, cfg, max_variables=args.cap, retries=args.retries, **scales
        )
    except RuntimeError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INFEASIBLE
    net, _ = pb.job_shop_net(inst)
    rows = [
        {"task": t, "resource": inst.tasks[net.transition_index(t)].resource, "start": k, "end": k + net.duration(t)}
        for t, k in sched.entries
    ]
    _emit(_dumps({"makespan": makespan, "schedule": rows}), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="petriqubo", description="Compile Petri-net models to QUBO/Ising nets and solve them.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def common(sp, model_out=False):
        sp.add_argument("-o", "--output", help="write to this file instead of stdout")
        sp.add_argument("--lenient", action="store_true", help="ignore unknown keys in input files")
        if model_out:
            sp.add_argument("--float", action="store_true", help="write coefficients as floats")

    def scales(sp):
        for name in ("A", "B", "C"):
            sp.add_argument(f"--{name}", type=str, default=None, help=f"scale factor {name}")

    def anneal(sp):
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (default: $SEED or 0)")
        sp.add_argument("--sweeps", type=int, default=1000)
        sp.add_argument("--reads", type=int, default=32)

    sp = sub.add_parser("compile", help="net + construction config -> model file")
    sp.add_argument("net")
    sp.add_argument("config")
    common(sp, True)
    sp.set_defaults(func=cmd_compile)

    sp = sub.add_parser("gen", help="compile a built-in problem")
    sp.add_argument("problem", choices=["vertex-cover", "partition", "tsp", "jobshop"])
    sp.add_argument("--graph", help="graph file {n, edges}")
    sp.add_argument("--dist", help="distance matrix file")
    sp.add_argument("--instance", help="job-shop instance file")
    sp.add_argument("--max-time", type=int, default=None)
    sp.add_argument("--clamp-start", action="store_true", help="TSP: fix city 0 at step 0")
    scales(sp)
    common(sp, True)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("solve", help="model file -> samples")
    sp.add_argument("model")
    sp.add_argument("--solver", choices=["brute", "sa"], default="brute")
    anneal(sp)
    sp.add_argument("--cap", type=int, default=sv.DEFAULT_CAP, help="brute-force variable cap")
    sp.add_argument("--limit", type=int, default=16, help="brute force: ground states kept")
    sp.add_argument("--require-feasible", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_solve)

    for verb, func in (("decode", cmd_decode), ("verify", cmd_verify)):
        sp = sub.add_parser(verb, help=f"{verb} an assignment against a model")
        sp.add_argument("model")
        sp.add_argument("samples", help="samples file or assignment file")
        sp.add_argument("--index", type=int, default=0, help="sample index")
        if verb == "verify":
            sp.add_argument("--require-feasible", action="store_true")
        common(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("convert", help="switch the model between binary and spin")
    sp.add_argument("model")
    sp.add_argument("--to", choices=["binary", "spin"], required=True)
    common(sp, True)
    sp.set_defaults(func=cmd_convert)

    sp = sub.add_parser("export", help="re-export a model file")
    sp.add_argument("model")
    sp.add_argument("--format", choices=["model-json", "coordinate-text"], default="model-json")
    common(sp, True)
    sp.set_defaults(func=cmd_export)

    sp = sub.add_parser("jobshop-opt", help="binary-search the minimum makespan")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--solver", choices=["auto", "brute", "sa"], default="auto")
    sp.add_argument("--cap", type=int, default=sv.DEFAULT_CAP)
    sp.add_argument("--retries", type=int, default=3)
    anneal(sp)
    scales(sp)
    common(sp)
    sp.set_defaults(func=cmd_jobshop_opt)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, NetValidationError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

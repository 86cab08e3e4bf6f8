# main.py
"""
graphweave command line.
  run        compile a .gt program, execute it on a graph, write the result TSV and stats JSON
  verify     run a program under a schedule matrix and compare every run with its reference
  bench      median runtimes and counters per (program, graph, schedule)
  tune       search the schedule space of one labeled edgeset apply
  dump-ir    GIS vectors per traversal        dump-deps  distance vectors and sync per vector
  dump-plan  loop nests per traversal         dump-source  the program after transforms
  convert    edge list <-> binary cache
  gen        synthetic graphs
Exit codes: 0 ok, 1 program/schedule/graph error, 2 runtime error, 3 verification mismatch.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

from agents import autotuner_agent, verifier_agent
from agents.pipeline import (collect_overrides, compile_file, dump, load_input_graph, primary_vector,
                             program_stem, read_text, run_compiled, stats_document, vector_tsv)
from lang.errors import CompileError, ExecutionError, GraphError, GraphWeaveError, ParseError
from lang.schedule_parser import parse_schedule_text
from services import analysis_utils, gcs_utils, generators
from services.graph_store import load_graph, write_cache, write_edge_list
from services.state import EngineOptions

LOG_LEVEL = os.environ.get("GRAPHWEAVE_LOG_LEVEL", "WARNING")
EXIT_MISMATCH = 3


@dataclass
class RunConfig:
    program: str
    graph: str
    schedule: Optional[str] = None
    overrides: Dict[str, Any] = field(default_factory=dict)
    out: Optional[str] = None
    stats: Optional[str] = None
    vector: Optional[str] = None
    threads: int = 1
    hybrid_threshold: Optional[int] = None
    numa_bind: bool = False
    weighted: Optional[bool] = None
    symmetrize: bool = False
    upload: bool = False
    seed: int = 0

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(
            program=args.program,
            graph=args.graph,
            schedule=getattr(args, "schedule", None),
            overrides=_overrides(args),
            out=getattr(args, "out", None),
            stats=getattr(args, "stats", None),
            vector=getattr(args, "vector", None),
            threads=args.threads,
            hybrid_threshold=args.hybrid_threshold,
            numa_bind=args.numa_bind,
            weighted=args.weighted,
            symmetrize=args.symmetrize,
            upload=getattr(args, "upload", False),
            seed=getattr(args, "seed", 0),
        )

    def validate(self):
        if not os.path.exists(self.program):
            raise CompileError(f"program file not found: {self.program}")
        if self.schedule and not os.path.exists(self.schedule):
            raise CompileError(f"schedule file not found: {self.schedule}")
        if not os.path.exists(self.graph):
            raise ParseError(f"graph file not found: {self.graph}", path=self.graph)

    def engine_options(self) -> EngineOptions:
        return EngineOptions(threads=self.threads, hybrid_threshold=self.hybrid_threshold, numa_bind=self.numa_bind)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return collect_overrides(args.set, iters=args.iters, source=args.source, damping=args.damping,
                             epsilon=args.epsilon, delta=args.delta)


def _write(path: Optional[str], text: str):
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w") as f:
        f.write(text)


# ---------------------------------------------------------------- commands

def cmd_run(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    cfg.validate()
    compiled = compile_file(cfg.program, cfg.schedule)
    graph = load_input_graph(cfg.graph, cfg.weighted, cfg.symmetrize)
    result = run_compiled(compiled, graph, cfg.engine_options(), cfg.overrides)
    vector = cfg.vector or primary_vector(compiled)
    tsv = vector_tsv(result, vector)
    _write(cfg.out, tsv)
    doc = stats_document(compiled, graph, result)
    if cfg.stats:
        with open(cfg.stats, "w") as f:
            json.dump(doc, f, indent=2)
    if cfg.upload:
        run_id = f"runs/{compiled.name}-{program_stem(cfg.graph)}"
        print(analysis_utils.upload_json_to_gcs(doc, f"{run_id}/stats.json"), file=sys.stderr)
        print(gcs_utils.upload_text(tsv, f"{run_id}/{vector}.tsv"), file=sys.stderr)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    cfg.schedule = None
    cfg.validate()
    compiled = compile_file(cfg.program)
    graph = load_input_graph(cfg.graph, cfg.weighted, cfg.symmetrize)
    if args.schedules:
        schedules = [(program_stem(p), parse_schedule_text(read_text(p, "schedule"))) for p in args.schedules]
    else:
        schedules = verifier_agent.schedule_matrix(compiled)
    report = verifier_agent.verify(compiled, graph, schedules, cfg.engine_options(), cfg.overrides)
    sys.stdout.write(report.to_text())
    if args.report:
        with open(args.report, "w") as f:
            json.dump(report.to_dict(), f, indent=2)
    if args.upload:
        print(analysis_utils.upload_json_to_gcs(report.to_dict(), f"verify/{compiled.name}.json"), file=sys.stderr)
    failure = report.first_failure
    if failure is not None:
        print(f"error: {compiled.name} under {failure.schedule}: {failure.mismatch or failure.error}",
              file=sys.stderr)
        return EXIT_MISMATCH
    return 0


def _bench_case(entry: str) -> verifier_agent.BenchCase:
    program, sep, schedule = entry.partition(":")
    return verifier_agent.BenchCase(program, schedule if sep else None)


def cmd_bench(args: argparse.Namespace) -> int:
    cases = [_bench_case(p) for p in args.programs]
    graphs = {}
    for entry in args.graphs:
        name, sep, path = entry.partition("=")
        if not sep:
            name, path = program_stem(entry), entry
        graphs[name] = load_graph(path, args.weighted, args.symmetrize)
    options = EngineOptions(threads=args.threads, hybrid_threshold=args.hybrid_threshold, numa_bind=args.numa_bind)
    rows = verifier_agent.bench(cases, graphs, args.repeats, options, _overrides(args))
    _write(args.csv, verifier_agent.bench_csv(rows))
    if args.json:
        _write(args.json, verifier_agent.bench_json(rows))
    return 0


def cmd_tune(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    cfg.validate()
    compiled = compile_file(cfg.program, cfg.schedule)
    graph = load_input_graph(cfg.graph, cfg.weighted, cfg.symmetrize)
    space = autotuner_agent.ScheduleSpace.from_json(args.space) if args.space else None
    tune_cfg = autotuner_agent.TuneConfig(label=args.label, trials=args.trials, seconds=args.seconds,
                                          seed=args.seed, strategy=args.strategy)
    result = autotuner_agent.tune(compiled, graph, tune_cfg, space, cfg.engine_options(), cfg.overrides)
    doc = result.to_dict()
    if args.out:
        with open(args.out, "w") as f:
            json.dump(doc, f, indent=2)
    if args.upload:
        print(analysis_utils.upload_json_to_gcs(doc, f"tune/{compiled.name}-{args.seed}.json"), file=sys.stderr)
    if result.best is None:
        print("error: no valid schedule found", file=sys.stderr)
        return 2
    sys.stdout.write(result.best.schedule)
    print(f"% median {result.best.median_runtime_ns / 1e6:.3f} ms over {len(result.history)} trial(s)")
    return 0


def cmd_dump(args: argparse.Namespace) -> int:
    compiled = compile_file(args.program, args.schedule)
    kind = args.command.split("-", 1)[1]
    sys.stdout.write(dump(compiled, kind, getattr(args, "ascii", False)))
    return 0


def _save_graph(graph, path: str):
    if path.endswith(".csr"):
        write_cache(graph, path)
    else:
        write_edge_list(graph, path)


def cmd_convert(args: argparse.Namespace) -> int:
    graph = load_graph(args.input, args.weighted, args.symmetrize)
    _save_graph(graph, args.output)
    print(f"{args.output}: n={graph.n} m={graph.m}", file=sys.stderr)
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    weights = None
    if args.weights:
        try:
            lo, hi = (int(x) for x in args.weights.split(","))
        except ValueError:
            raise GraphError(f"--weights expects lo,hi, got '{args.weights}'")
        weights = (lo, hi)
    try:
        graph = generators.generate(args.kind, args.n, args.m, args.seed, weights, not args.directed)
    except ValueError as e:
        raise GraphError(str(e))
    _save_graph(graph, args.output)
    print(f"{args.output}: n={graph.n} m={graph.m}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- parser

def _engine_flags(p: argparse.ArgumentParser):
    p.add_argument("--threads", type=int, default=1, help="worker threads (GRAPHWEAVE_THREADS wins)")
    p.add_argument("--hybrid-threshold", type=int, default=None, help="hybrid direction switch (default m/20)")
    p.add_argument("--numa-bind", action="store_true")


def _graph_flags(p: argparse.ArgumentParser):
    p.add_argument("--weighted", action="store_const", const=True, default=None,
                   help="read a weight column (default: only for .wel files)")
    p.add_argument("--symmetrize", action="store_true", help="add the reverse of every edge")


def _param_flags(p: argparse.ArgumentParser):
    p.add_argument("--set", action="append", default=[], metavar="NAME=VALUE", help="override a const")
    p.add_argument("--iters", help="maxIters")
    p.add_argument("--source", help="source vertex")
    p.add_argument("--damping", help="damp")
    p.add_argument("--epsilon")
    p.add_argument("--delta")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphweave", description="graph DSL compiler, runtime and autotuner")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run")
    p.add_argument("program")
    p.add_argument("--graph", required=True)
    p.add_argument("--schedule")
    p.add_argument("--vector", help="vector to write (default: the program's result vector)")
    p.add_argument("--out", help="result TSV (default stdout)")
    p.add_argument("--stats", help="stats JSON path")
    p.add_argument("--upload", action="store_true", help="store stats and TSV in GCS or artifacts/")
    _param_flags(p)
    _engine_flags(p)
    _graph_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify")
    p.add_argument("program")
    p.add_argument("--graph", required=True)
    p.add_argument("--schedule", dest="schedules", action="append", default=[],
                   help="schedule file; repeatable (default: the standard matrix)")
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--upload", action="store_true")
    _param_flags(p)
    _engine_flags(p)
    _graph_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench")
    p.add_argument("--program", dest="programs", action="append", required=True,
                   metavar="PROGRAM[:SCHEDULE]")
    p.add_argument("--graph", dest="graphs", action="append", required=True, metavar="[NAME=]PATH")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--csv", help="CSV path (default stdout)")
    p.add_argument("--json", help="JSON path")
    _param_flags(p)
    _engine_flags(p)
    _graph_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("tune")
    p.add_argument("program")
    p.add_argument("--graph", required=True)
    p.add_argument("--schedule", help="transforms to keep in front of every trial")
    p.add_argument("--label", required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--seconds", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--space", help="JSON axis restriction file")
    p.add_argument("--strategy", default="hill", choices=sorted(autotuner_agent.STRATEGIES))
    p.add_argument("--out", help="history JSON path")
    p.add_argument("--upload", action="store_true")
    _param_flags(p)
    _engine_flags(p)
    _graph_flags(p)
    p.set_defaults(func=cmd_tune)

    for name in ("dump-ir", "dump-deps", "dump-plan", "dump-source"):
        p = sub.add_parser(name)
        p.add_argument("program")
        p.add_argument("--schedule")
        if name == "dump-ir":
            p.add_argument("--ascii", action="store_true", help="ASCII angle brackets and tags")
        p.set_defaults(func=cmd_dump)

    p = sub.add_parser("convert")
    p.add_argument("input")
    p.add_argument("output", help=".csr writes the binary cache, anything else an edge list")
    _graph_flags(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("gen")
    p.add_argument("kind", choices=generators.GENERATORS)
    p.add_argument("n", type=int)
    p.add_argument("output")
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights", help="lo,hi for random integer weights")
    p.add_argument("--directed", action="store_true")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else LOG_LEVEL,
                        format="%(asctime)s %(levelname)s %(name)s %(message)s")
    try:
        return args.func(args)
    except (CompileError, GraphError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ExecutionError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except GraphWeaveError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

# agents/pipeline.py
"""
Compile-and-run pipeline shared by the CLI, the HTTP service, the verifier and the autotuner.
1) parse the program (+ inline schedule) and check it -> ProgramIR
2) apply a schedule: transforms, GIS lowering, synchronization inference -> LoweringResult
3) execute main on a loaded graph -> RunResult
plus the dump-ir / dump-deps / dump-plan / dump-source renderers and the result writers.
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from compiler.dependence import render_deps
from compiler.gis import ExecutionPlan, render_plan
from compiler.lowering import STRICT, LoweringResult, apply_schedule
from lang import ast_nodes as A
from lang.errors import CompileError, VectorNotFound
from lang.parser import parse_source
from lang.printer import format_program
from lang.schedule_parser import Schedule, parse_schedule_text
from lang.semantics import check_semantics
from services.analysis_utils import with_schema
from services.executor import describe_plan
from services.graph_store import Graph, load_graph
from services.interpreter import RunResult, run_program
from services.state import EngineOptions
from services.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

DUMP_KINDS = ("ir", "deps", "plan", "source")

# vector written by `run` when --vector is not given
PRIMARY_VECTORS = {
    "pagerank": "old_rank",
    "prdelta": "Rank",
    "pr_ec": "old_rank",
    "bfs": "parent",
    "cc": "IDs",
    "cc_async": "IDs",
    "sssp": "SP",
    "bc": "dep",
    "cf": "user_latent",
}

# named CLI flags -> program constants
NAMED_OVERRIDES = {
    "iters": "maxIters",
    "source": "source",
    "damping": "damp",
    "epsilon": "epsilon",
    "delta": "delta",
}


@dataclass
class CompiledProgram:
    name: str
    source_ir: A.ProgramIR
    schedule: Schedule
    lowered: LoweringResult
    warnings: List[str] = field(default_factory=list)

    @property
    def plans(self) -> Tuple[ExecutionPlan, ...]:
        return self.lowered.plans

    @property
    def dropped(self) -> List[str]:
        return [text for text, _ in self.lowered.dropped]

    def with_schedule(self, schedule: Schedule, mode: str = STRICT) -> "CompiledProgram":
        """Re-lower the already parsed program under another schedule."""
        lowered = apply_schedule(self.source_ir, schedule, mode)
        return CompiledProgram(self.name, self.source_ir, schedule, lowered, self.warnings)


def program_stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def read_text(path: str, what: str = "program") -> str:
    if not os.path.exists(path):
        raise CompileError(f"{what} file not found: {path}")
    with open(path, "r") as f:
        return f.read()


def compile_program(source: str, schedule: Union[Schedule, str, None] = None, name: str = "program",
                    mode: str = STRICT) -> CompiledProgram:
    """An explicit schedule replaces the program's inline `schedule:` section."""
    ir, inline = parse_source(source)
    warnings = check_semantics(ir)
    for w in warnings:
        logger.warning("[Pipeline] %s: %s", name, w)
    if schedule is None:
        schedule = inline
    elif isinstance(schedule, str):
        schedule = parse_schedule_text(schedule)
    lowered = apply_schedule(ir, schedule, mode)
    logger.info("[Pipeline] compiled %s: %d traversal(s), %d schedule call(s)", name, len(lowered.plans),
                len(schedule))
    return CompiledProgram(name, ir, schedule, lowered, warnings)


def compile_file(program_path: str, schedule_path: Optional[str] = None, mode: str = STRICT) -> CompiledProgram:
    source = read_text(program_path)
    schedule = read_text(schedule_path, "schedule") if schedule_path else None
    return compile_program(source, schedule, program_stem(program_path), mode)


def load_input_graph(path: str, weighted: Optional[bool] = None, symmetrize: bool = False) -> Graph:
    return load_graph(path, weighted=weighted, symmetrize=symmetrize)


def run_compiled(compiled: CompiledProgram, graph: Graph, options: Optional[EngineOptions] = None,
                 overrides: Optional[Dict[str, Any]] = None, pool: Optional[WorkerPool] = None) -> RunResult:
    result = run_program(compiled.lowered, graph, options, overrides, pool)
    logger.info("[Pipeline] ran %s on n=%d m=%d in %.3f ms", compiled.name, graph.n, graph.m,
                result.wall_time_ns / 1e6)
    return result


def collect_overrides(pairs: Optional[List[str]] = None, **named) -> Dict[str, Any]:
    """`name=value` strings plus the named flags; values stay strings until typed by the program."""
    overrides: Dict[str, Any] = {}
    for pair in pairs or []:
        name, sep, value = pair.partition("=")
        if not sep or not name.strip():
            raise CompileError(f"--set expects name=value, got '{pair}'")
        overrides[name.strip()] = value.strip()
    for flag, value in named.items():
        if value is not None:
            overrides[NAMED_OVERRIDES[flag]] = value
    return overrides


def run_parameters(result: RunResult) -> Dict[str, Any]:
    return dict(result.state.scalars)


# ---------------------------------------------------------------- results

def primary_vector(compiled: CompiledProgram) -> str:
    names = [d.name for d in compiled.source_ir.vector_decls]
    preferred = PRIMARY_VECTORS.get(compiled.name)
    if preferred in names:
        return preferred
    if not names:
        raise VectorNotFound(f"{compiled.name} declares no vertex vectors")
    return names[0]


def _cell(value) -> str:
    if isinstance(value, list):
        return " ".join(_cell(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def vector_tsv(result: RunResult, name: str) -> str:
    vectors = result.vectors()
    if name not in vectors:
        raise VectorNotFound(f"no vertex vector named '{name}' (have: {', '.join(sorted(vectors))})")
    values = np.asarray(vectors[name]).tolist()
    return "".join(f"{v}\t{_cell(x)}\n" for v, x in enumerate(values))


def stats_document(compiled: CompiledProgram, graph: Graph, result: RunResult) -> Dict[str, Any]:
    doc = result.stats()
    return with_schema({
        "program": compiled.name,
        "graph": {"n": graph.n, "m": graph.m, "weighted": graph.weighted},
        "schedule": compiled.schedule.to_text(),
        "dropped_calls": compiled.dropped,
        "overrides": {k: str(v) for k, v in result.overrides.items()},
        **doc,
    })


# ---------------------------------------------------------------- dumps

def dump_ir(compiled: CompiledProgram, ascii_only: bool = False) -> str:
    return "".join(render_plan(p, ascii_only) + "\n" for p in compiled.plans)


def dump_deps(compiled: CompiledProgram) -> str:
    return "".join(line + "\n" for p in compiled.plans for line in render_deps(p))


def dump_plan(compiled: CompiledProgram) -> str:
    return "".join(line + "\n" for p in compiled.plans for line in describe_plan(p))


def dump(compiled: CompiledProgram, kind: str, ascii_only: bool = False) -> str:
    if kind == "ir":
        return dump_ir(compiled, ascii_only)
    if kind == "deps":
        return dump_deps(compiled)
    if kind == "plan":
        return dump_plan(compiled)
    if kind == "source":
        return format_program(compiled.lowered.ir)
    raise CompileError(f"unknown dump kind '{kind}' (choose from {', '.join(DUMP_KINDS)})")

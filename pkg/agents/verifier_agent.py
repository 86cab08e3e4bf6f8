# agents/verifier_agent.py
"""
Verifier Agent
- verify(): runs one program under a matrix of schedules and checks every run against the
  program's serial oracle (services.oracles), or against the serial default schedule when the
  program has no oracle. The report lists pass/fail per schedule with its counters.
- bench(): median runtime and counters per (program, graph, schedule) cell. A failing cell is
  recorded with its error and the table keeps going.
- schedule_matrix(): the standard set of schedules applied to every labeled traversal
"""

import csv
import io
import json
import logging
import statistics
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from agents.pipeline import CompiledProgram, compile_file, program_stem, run_compiled, run_parameters
from compiler.lowering import LENIENT
from lang.errors import BudgetZero, GraphWeaveError
from lang.schedule_parser import TRANSFORM_FUNCTIONS, Schedule, ScheduleCall
from services.analysis_utils import with_schema
from services.graph_store import Graph
from services.oracles import compare_runs, oracle_for
from services.state import EngineOptions
from services.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

DEFAULT_SCHEDULE = "default"

# (name, [(func, config, extra kwargs)]) applied to each labeled traversal
_MATRIX: Tuple[Tuple[str, Tuple[Tuple[str, str, Dict[str, Any]], ...]], ...] = (
    ("sparse-push-dvp", (
        ("configApplyDirection", "SparsePush", {}),
        ("configApplyParallelization", "dynamic-vertex-parallel", {"grain": 64}),
    )),
    ("sparse-push-edge-parallel", (
        ("configApplyDirection", "SparsePush", {}),
        ("configApplyParallelization", "edge-parallel", {"grain": 64}),
    )),
    ("dense-push-static", (
        ("configApplyDirection", "DensePush", {}),
        ("configApplyParallelization", "static-vertex-parallel", {"grain": 32}),
    )),
    ("dense-pull-serial", (
        ("configApplyDirection", "DensePull", {}),
    )),
    ("dense-pull-dvp", (
        ("configApplyDirection", "DensePull", {}),
        ("configApplyParallelization", "dynamic-vertex-parallel", {"grain": 16}),
    )),
    ("dense-pull-bitvector", (
        ("configApplyDirection", "DensePull", {}),
        ("configApplyParallelization", "edge-aware-dynamic-vertex-parallel", {"grain": 64}),
        ("configApplyDenseVertexSet", "bitvector", {"vertexset": "both"}),
    )),
    ("dense-pull-ssg", (
        ("configApplyDirection", "DensePull", {}),
        ("configApplyParallelization", "dynamic-vertex-parallel", {"grain": 32}),
        ("configApplyNumSSG", "fixed-vertex-count", {"num_segments": 3}),
    )),
    ("dense-pull-numa", (
        ("configApplyDirection", "DensePull", {}),
        ("configApplyParallelization", "static-vertex-parallel", {"grain": 32}),
        ("configApplyNumSSG", "edge-aware-vertex-count", {"num_segments": 4}),
        ("configApplyNUMA", "dynamic-parallel", {}),
    )),
    ("hybrid-pull", (
        ("configApplyDirection", "DensePull-SparsePush", {}),
        ("configApplyParallelization", "dynamic-vertex-parallel", {"grain": 32}),
    )),
    ("hybrid-pull-bitvector-cache", (
        ("configApplyDirection", "DensePull-SparsePush", {}),
        ("configApplyParallelization", "dynamic-vertex-parallel", {"grain": 32}),
        ("configApplyDenseVertexSet", "bitvector", {"vertexset": "src-vertexset", "direction": "DensePull"}),
        ("configApplyNumSSG", "fixed-vertex-count", {"num_segments": 2, "direction": "DensePull"}),
    )),
    ("hybrid-push", (
        ("configApplyDirection", "DensePush-SparsePush", {}),
        ("configApplyParallelization", "edge-aware-dynamic-vertex-parallel", {"grain": 64}),
    )),
    ("hybrid-push-static", (
        ("configApplyDirection", "DensePush-SparsePush", {}),
        ("configApplyParallelization", "static-vertex-parallel", {"grain": 16, "direction": "DensePush"}),
        ("configApplyParallelization", "dynamic-vertex-parallel", {"grain": 16, "direction": "SparsePush"}),
    )),
)


@dataclass
class ScheduleCheck:
    schedule: str
    passed: bool
    mismatch: Optional[str] = None
    error: Optional[str] = None
    counters: Dict[str, int] = field(default_factory=dict)
    dropped_calls: List[str] = field(default_factory=list)
    runtime_ms: Optional[float] = None


@dataclass
class VerifyReport:
    program: str
    reference: str
    graph: Dict[str, int]
    checks: List[ScheduleCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_failure(self) -> Optional[ScheduleCheck]:
        return next((c for c in self.checks if not c.passed), None)

    def to_dict(self) -> Dict[str, Any]:
        return with_schema({
            "program": self.program,
            "reference": self.reference,
            "graph": self.graph,
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
        })

    def to_text(self) -> str:
        lines = [f"{self.program}: reference = {self.reference}"]
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            detail = c.mismatch or c.error or ""
            counters = " ".join(f"{k}={v}" for k, v in c.counters.items())
            lines.append(f"  {status}  {c.schedule:<28} {counters} {detail}".rstrip())
        return "\n".join(lines) + "\n"


def _transform_calls(schedule: Schedule) -> Tuple[ScheduleCall, ...]:
    return tuple(c for c in schedule.calls if c.func in TRANSFORM_FUNCTIONS)


def schedule_matrix(compiled: CompiledProgram) -> List[Tuple[str, Schedule]]:
    """Default plus the standard matrix over every labeled traversal; the program's own
    transform calls (loop and kernel fusion) are kept in front of each schedule."""
    base = _transform_calls(compiled.schedule)
    labels = [p.label for p in compiled.plans if p.label]
    matrix = [(DEFAULT_SCHEDULE, Schedule(base))]
    for name, recipe in _MATRIX:
        calls = list(base)
        for label in labels:
            for func, config, extra in recipe:
                calls.append(ScheduleCall(func, label=label, config=config, **extra))
        matrix.append((name, Schedule(tuple(calls))))
    return matrix


def verify(compiled: CompiledProgram, graph: Graph, schedules: Sequence[Tuple[str, Schedule]],
           options: Optional[EngineOptions] = None, overrides: Optional[Dict[str, Any]] = None,
           mode: str = LENIENT) -> VerifyReport:
    options = options or EngineOptions()
    oracle = oracle_for(compiled.name)
    report = VerifyReport(compiled.name, "", {"n": graph.n, "m": graph.m})
    with WorkerPool(options.threads) as pool:
        reference = None
        if oracle is not None:
            report.reference = f"oracle: {oracle.description}"
        else:
            report.reference = "serial default schedule"
            default = compiled.with_schedule(Schedule(_transform_calls(compiled.schedule)), mode)
            serial = EngineOptions(threads=1, hybrid_threshold=options.hybrid_threshold)
            reference = run_compiled(default, graph, serial, overrides).vectors()

        for name, schedule in schedules:
            check = ScheduleCheck(schedule=name, passed=False)
            try:
                variant = compiled.with_schedule(schedule, mode)
                check.dropped_calls = variant.dropped
                result = run_compiled(variant, graph, options, overrides, pool)
            except GraphWeaveError as e:
                check.error = f"{type(e).__name__}: {e}"
                logger.warning("[Verifier] %s under %s failed: %s", compiled.name, name, e)
                report.checks.append(check)
                continue
            check.counters = result.state.counters.as_dict()
            check.runtime_ms = result.wall_time_ns / 1e6
            if oracle is not None:
                mismatch = oracle.check(result.vectors(), graph, run_parameters(result))
            else:
                mismatch = compare_runs(reference, result.vectors())
            check.passed = mismatch is None
            check.mismatch = str(mismatch) if mismatch is not None else None
            logger.info("[Verifier] %s under %s: %s", compiled.name, name, "pass" if check.passed else mismatch)
            report.checks.append(check)
    return report


# ---------------------------------------------------------------- bench

@dataclass(frozen=True)
class BenchCase:
    program: str
    schedule: Optional[str] = None  # None: the program's inline schedule

    @property
    def schedule_name(self) -> str:
        return program_stem(self.schedule) if self.schedule else DEFAULT_SCHEDULE


@dataclass
class BenchRow:
    program: str
    graph: str
    schedule: str
    status: str
    median_ms: Optional[float] = None
    repeats: int = 0
    counters: Dict[str, int] = field(default_factory=dict)
    error: Optional[str] = None

    def flat(self) -> Dict[str, Any]:
        row = {k: v for k, v in asdict(self).items() if k != "counters"}
        row.update(self.counters)
        return row


def _declared_overrides(compiled: CompiledProgram, overrides: Dict[str, Any]) -> Dict[str, Any]:
    declared = {d.name for d in compiled.source_ir.const_decls}
    return {k: v for k, v in overrides.items() if k in declared}


def bench(cases: Sequence[BenchCase], graphs: Dict[str, Graph], repeats: int = 3,
          options: Optional[EngineOptions] = None, overrides: Optional[Dict[str, Any]] = None) -> List[BenchRow]:
    """One row per (case, graph). Overrides only reach programs that declare the constant."""
    if repeats < 1:
        raise BudgetZero(f"bench needs at least one repeat, got {repeats}")
    options = options or EngineOptions()
    overrides = overrides or {}
    rows: List[BenchRow] = []
    with WorkerPool(options.threads) as pool:
        for case in cases:
            name = program_stem(case.program)
            try:
                compiled = compile_file(case.program, case.schedule)
            except GraphWeaveError as e:
                logger.warning("[Bench] %s does not compile: %s", case.program, e)
                rows.extend(BenchRow(name, g, case.schedule_name, "compile-error", error=str(e)) for g in graphs)
                continue
            own = _declared_overrides(compiled, overrides)
            for graph_name, graph in graphs.items():
                row = BenchRow(name, graph_name, case.schedule_name, "ok", repeats=repeats)
                try:
                    runs = [run_compiled(compiled, graph, options, own, pool) for _ in range(repeats)]
                except GraphWeaveError as e:
                    row.status, row.error = "error", f"{type(e).__name__}: {e}"
                    logger.warning("[Bench] %s/%s/%s failed: %s", name, graph_name, case.schedule_name, e)
                    rows.append(row)
                    continue
                row.median_ms = statistics.median(r.wall_time_ns for r in runs) / 1e6
                row.counters = runs[-1].state.counters.as_dict()
                rows.append(row)
    return rows


def bench_csv(rows: Sequence[BenchRow]) -> str:
    flat = [r.flat() for r in rows]
    columns: List[str] = []
    for row in flat:
        columns.extend(k for k in row if k not in columns)
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(flat)
    return out.getvalue()


def bench_json(rows: Sequence[BenchRow]) -> str:
    return json.dumps(with_schema({"rows": [asdict(r) for r in rows]}), indent=2)

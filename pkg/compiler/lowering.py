# compiler/lowering.py
"""
Schedule lowering: Schedule + ProgramIR -> transformed IR, one ExecutionPlan per edgeset traversal, LayoutPlan.
- transforms (fuse*/split*) run first, in schedule order; fuseFields feeds the layout
- configApply* calls are grouped per statement: direction first (last one wins), then the rest in order
- a call that conflicts with the plan is recorded; strict mode raises, lenient mode drops it
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from compiler import transforms
from compiler.dependence import attach_sync
from compiler.gis import (
    BA, BV, DEFAULT_DIRECTION, DEFAULT_GRAIN, EVC, FVC, SP, SR, WSP, DimCfg, ExecutionPlan, LayoutPlan,
    Variant, default_plan, variants_for,
)
from lang import ast_nodes as A
from lang.errors import CompileError, InvalidCombination
from lang.labels import qualified_labels, resolve_label
from lang.schedule_parser import Schedule, ScheduleCall

logger = logging.getLogger(__name__)

STRICT, LENIENT = "strict", "lenient"

_NUMA_TAGS = {"serial": SR, "static-parallel": SP, "dynamic-parallel": WSP}
_SSG_TAGS = {"fixed-vertex-count": FVC, "edge-aware-vertex-count": EVC}


class _Conflict(Exception):
    pass


@dataclass
class LoweringResult:
    ir: A.ProgramIR
    plans: Tuple[ExecutionPlan, ...]
    layout: LayoutPlan = field(default_factory=LayoutPlan)
    dropped: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self):
        self._by_id = {id(p.stmt): p for p in self.plans}

    def plan_for(self, stmt: A.EdgeSetApply) -> Optional[ExecutionPlan]:
        return self._by_id.get(id(stmt))

    def plan(self, label: str) -> ExecutionPlan:
        for p in self.plans:
            if p.label == label or p.display_label == label:
                return p
        handle = resolve_label(self.ir, label)
        chain = A.traversal_of(handle.stmt)
        plan = self.plan_for(chain) if chain is not None else None
        if plan is None:
            raise CompileError(f"label '{label}' is not an edgeset apply statement")
        return plan


# ---------------------------------------------------------------- call application

def _targets(variants: Tuple[Variant, ...], call: ScheduleCall) -> List[int]:
    if call.direction is None:
        return list(range(len(variants)))
    hits = [i for i, v in enumerate(variants) if v.name == call.direction]
    if not hits:
        names = "/".join(v.name for v in variants)
        raise _Conflict(f"direction {call.direction} is not part of this plan ({names})")
    return hits


def _parallelize(variant: Variant, call: ScheduleCall) -> Variant:
    if variant.parallelization is not None and variant.parallelization != call.config:
        raise _Conflict(f"{variant.name} is already {variant.parallelization}; two parallel tags for one dimension")
    grain = call.grain if call.grain is not None else DEFAULT_GRAIN
    gis = variant.gis
    inner = replace(gis.inner, parallel=SR)
    bsg = None
    edge_grain = variant.edge_grain
    if call.config == "dynamic-vertex-parallel":
        bsg = DimCfg(WSP, FVC, grain)
    elif call.config == "static-vertex-parallel":
        bsg = DimCfg(SP, FVC, grain)
    elif call.config == "edge-aware-dynamic-vertex-parallel":
        bsg = DimCfg(WSP, EVC, grain)
    elif call.config == "edge-parallel":
        inner = replace(gis.inner, parallel=WSP)
        edge_grain = grain
    return replace(variant, gis=replace(gis, bsg=bsg, inner=inner), edge_grain=edge_grain,
                   parallelization=call.config)


def _dense_vertexset(variant: Variant, call: ScheduleCall) -> Variant:
    tag = BV if call.config == "bitvector" else BA
    sides = {"both": ("src", "dst"), "src-vertexset": ("src",), "dst-vertexset": ("dst",)}[call.vertexset or "both"]
    gis = variant.gis
    outer, inner = gis.outer, gis.inner
    if outer.direction in sides and outer.filter in (BA, BV):
        outer = replace(outer, filter=tag)
    if inner.direction in sides and inner.filter in (BA, BV):
        inner = replace(inner, filter=tag)
    return replace(variant, gis=replace(gis, outer=outer, inner=inner))


def _num_ssg(variant: Variant, call: ScheduleCall) -> Variant:
    if call.num_segments is None or call.num_segments < 1:
        raise _Conflict(f"numSegments must be >= 1, got {call.num_segments}")
    gis = variant.gis
    parallel = gis.ssg.parallel if gis.ssg else SR
    ssg = DimCfg(parallel, _SSG_TAGS[call.config], call.num_segments)
    return replace(variant, gis=replace(gis, ssg=ssg))


def _numa(variant: Variant, call: ScheduleCall) -> Variant:
    gis = variant.gis
    if gis.ssg is None:
        raise _Conflict(f"{variant.name} has no S dimension; configApplyNumSSG must come first")
    return replace(variant, gis=replace(gis, ssg=replace(gis.ssg, parallel=_NUMA_TAGS[call.config])))


_APPLIERS = {
    "configApplyParallelization": _parallelize,
    "configApplyDenseVertexSet": _dense_vertexset,
    "configApplyNumSSG": _num_ssg,
    "configApplyNUMA": _numa,
}


def plan_statement(stmt: A.EdgeSetApply, label: Optional[str], calls: List[ScheduleCall]) -> ExecutionPlan:
    """Build the (unvalidated) plan of one traversal from the calls that target it."""
    if not calls:
        return default_plan(stmt, label)
    direction = DEFAULT_DIRECTION
    applied: List[str] = []
    conflicts: List[Tuple[str, str]] = []
    for call in calls:
        if call.func == "configApplyDirection":
            direction = call.config
    variants = variants_for(direction, stmt)
    for call in calls:
        text = call.to_text()
        if call.func == "configApplyDirection":
            if call.config == direction:
                applied.append(text)
            continue
        try:
            candidate = list(variants)
            for i in _targets(variants, call):
                candidate[i] = _APPLIERS[call.func](candidate[i], call)
        except _Conflict as conflict:
            conflicts.append((text, str(conflict)))
            continue
        variants = tuple(candidate)
        applied.append(text)
    return ExecutionPlan(stmt=stmt, variants=variants, label=label, direction=direction,
                         applied_calls=tuple(applied), conflicts=tuple(conflicts))


def validate_plan(plan: ExecutionPlan, mode: str = STRICT) -> ExecutionPlan:
    if not plan.conflicts:
        return plan
    if mode == STRICT:
        text, reason = plan.conflicts[0]
        raise InvalidCombination(f"{plan.display_label}: {text}: {reason}")
    for text, reason in plan.conflicts:
        logger.warning("[Lowering] dropped call %s: %s", text, reason)
    return replace(plan, dropped_calls=plan.dropped_calls + tuple(t for t, _ in plan.conflicts), conflicts=())


# ---------------------------------------------------------------- whole program

def _traversals(stmts) -> List[A.EdgeSetApply]:
    out = []
    for stmt in stmts:
        for node in A.walk(stmt):
            if isinstance(node, A.EdgeSetApply):
                out.append(node)
    return out


def _label_index(ir: A.ProgramIR) -> Dict[int, str]:
    labels = {}
    for path, node in qualified_labels(ir.main):
        chain = A.traversal_of(node) if isinstance(node, A.Labeled) else None
        if chain is not None:
            labels[id(chain)] = ":".join(path)
    return labels


def run_transforms(ir: A.ProgramIR, schedule: Schedule) -> Tuple[A.ProgramIR, LayoutPlan]:
    layout = LayoutPlan()
    for call in schedule.calls:
        if call.func == "fuseForLoop":
            ir = transforms.fuse_for_loops(ir, call.targets[0], call.targets[1], call.new_name)
        elif call.func == "splitForLoop":
            ir = transforms.split_for_loop(ir, call.label, call.targets[0], call.targets[1], call.split_point)
        elif call.func == "fuseApplyFunctions":
            ir = transforms.fuse_apply_functions(ir, call.targets[0], call.targets[1], call.new_name)
        elif call.func == "fuseFields":
            layout = transforms.fuse_fields(layout, ir, call.fields)
    return ir, layout


def apply_schedule(ir: A.ProgramIR, schedule: Schedule, mode: str = STRICT) -> LoweringResult:
    ir, layout = run_transforms(ir, schedule)
    ir = transforms.lower_vector_initializers(ir)

    per_stmt: Dict[int, List[ScheduleCall]] = {}
    for call in schedule.calls:
        if call.func not in _APPLIERS and call.func != "configApplyDirection":
            continue
        handle = resolve_label(ir, call.label)
        chain = A.traversal_of(handle.stmt)
        if chain is None:
            raise CompileError(f"{call.func}: label '{call.label}' does not name an edgeset apply", call.line)
        per_stmt.setdefault(id(chain), []).append(call)

    labels = _label_index(ir)
    plans = []
    dropped: List[Tuple[str, str]] = []
    for stmt in _traversals(ir.main):
        plan = plan_statement(stmt, labels.get(id(stmt)), per_stmt.get(id(stmt), []))
        dropped.extend(plan.conflicts)
        plan = validate_plan(plan, mode)
        plans.append(attach_sync(ir, plan))
        logger.debug("[Lowering] %s -> %s", plan.display_label, " | ".join(str(v.gis) for v in plan.variants))
    return LoweringResult(ir=ir, plans=tuple(plans), layout=layout, dropped=tuple(dropped))

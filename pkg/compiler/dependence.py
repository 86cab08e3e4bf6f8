# compiler/dependence.py
"""
Read/write classification, distance vectors and synchronization inference.
- classify_accesses(func): per-vector ReadOnly | WriteOnly | Reduction | AsyncReduction
- classify_traversal(ir, stmt): merges the apply function with its filters (claim-once CAS idiom)
- distance_vectors(): Zero/Star over (OuterIter, InnerIter)
- infer_sync(): NoSync | AtomicReduction | LocalBufferMerge per vector, plus dedup strategy
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

from compiler.gis import ExecutionPlan, GisVector, Variant
from lang import ast_nodes as A
from lang.errors import MixedAccessError

logger = logging.getLogger(__name__)

READ_ONLY, WRITE_ONLY, REDUCTION, ASYNC_REDUCTION = "ReadOnly", "WriteOnly", "Reduction", "AsyncReduction"
ZERO, STAR = "0", "*"
NO_SYNC, ATOMIC, BUFFER_MERGE = "NoSync", "AtomicReduction", "LocalBufferMerge"

_REDUCE_OPS = {"+=": "sum", "-=": "sum", "min=": "min", "max=": "max"}
_ASYNC_OPS = {"asyncMin=": "min", "asyncMax=": "max"}


@dataclass(frozen=True)
class AccessClass:
    kind: str
    op: Optional[str] = None  # sum | min | max | cas
    indexed_by: Tuple[str, ...] = ()  # endpoint roles used as the vector's index
    expected: Optional[object] = None  # cas: value a claim compares against

    def __str__(self) -> str:
        return f"{self.kind}({self.op})" if self.op else self.kind


@dataclass(frozen=True)
class DistanceVector:
    outer: str
    inner: str
    indexed_by: Tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"⟨{self.outer},{self.inner}⟩"


@dataclass(frozen=True)
class SyncPlan:
    variant: str
    entries: Tuple[Tuple[str, str], ...] = ()
    dedup: str = "none"  # none | visited-flag-CAS
    early_exit: bool = False
    classes: Tuple[Tuple[str, AccessClass], ...] = ()
    distances: Tuple[Tuple[str, DistanceVector], ...] = ()

    def for_vector(self, name: str) -> str:
        for vec, sync in self.entries:
            if vec == name:
                return sync
        return NO_SYNC

    def access(self, name: str) -> Optional[AccessClass]:
        return dict(self.classes).get(name)

    def distance(self, name: str) -> Optional[DistanceVector]:
        return dict(self.distances).get(name)


# ---------------------------------------------------------------- access collection

def param_roles(func: A.FuncDecl) -> Dict[str, str]:
    names = [p.name for p in func.params]
    if len(names) == 1:
        return {names[0]: "vertex"}
    roles = {}
    if names:
        roles[names[0]] = "src"
    if len(names) > 1:
        roles[names[1]] = "dst"
    return roles


class _Collector:
    def __init__(self, roles: Dict[str, str]):
        self.roles = roles
        self.reads: Dict[str, set] = {}
        self.writes: Dict[str, set] = {}
        self.reductions: Dict[str, List[Tuple[str, str]]] = {}
        self.async_reductions: Dict[str, List[Tuple[str, str]]] = {}

    def _role(self, target) -> str:
        chain = A.index_chain(target)
        first = chain[0] if chain else None
        if isinstance(first, A.Name) and first.id in self.roles:
            return self.roles[first.id]
        return "other"

    def expr(self, expr):
        for node in A.walk(expr):
            if isinstance(node, A.Index) and isinstance(node.target, A.Name):
                self.reads.setdefault(node.target.id, set()).add(self._role(node))

    def _target_indices(self, target):
        for idx in A.index_chain(target):
            self.expr(idx)

    def stmts(self, stmts):
        for stmt in stmts:
            self.stmt(stmt)

    def stmt(self, stmt):
        if isinstance(stmt, A.Assign):
            self.expr(stmt.value)
            base = A.vector_base(stmt.target) if isinstance(stmt.target, A.Index) else None
            if base:
                self._target_indices(stmt.target)
                self.writes.setdefault(base, set()).add(self._role(stmt.target))
        elif isinstance(stmt, A.Reduce):
            self.expr(stmt.value)
            base = A.vector_base(stmt.target) if isinstance(stmt.target, A.Index) else None
            if base:
                self._target_indices(stmt.target)
                entry = (stmt.op, self._role(stmt.target))
                if stmt.op in _ASYNC_OPS:
                    self.async_reductions.setdefault(base, []).append(entry)
                else:
                    self.reductions.setdefault(base, []).append(entry)
        elif isinstance(stmt, A.VarDecl):
            if stmt.init is not None:
                self.expr(stmt.init)
        elif isinstance(stmt, A.ExprStmt):
            self.expr(stmt.expr)
        elif isinstance(stmt, A.If):
            self.expr(stmt.cond)
            self.stmts(stmt.then)
            self.stmts(stmt.orelse)
        elif isinstance(stmt, A.For):
            self.expr(stmt.lo)
            self.expr(stmt.hi)
            self.stmts(stmt.body)
        elif isinstance(stmt, A.While):
            self.expr(stmt.cond)
            self.stmts(stmt.body)
        elif isinstance(stmt, (A.Labeled,)):
            self.stmt(stmt.stmt)
        elif isinstance(stmt, A.NameNode):
            self.stmts(stmt.body)


def _single_op(ops: List[Tuple[str, str]], table: Dict[str, str], vector: str, func: str) -> str:
    kinds = {table[op] for op, _ in ops}
    if len(kinds) > 1:
        raise MixedAccessError(vector, func, f"conflicting reduction operators {sorted(kinds)}")
    return kinds.pop()


def classify_accesses(func: A.FuncDecl, roles: Optional[Dict[str, str]] = None) -> Dict[str, AccessClass]:
    roles = roles if roles is not None else param_roles(func)
    col = _Collector(roles)
    col.stmts(func.body)
    names = set(col.reads) | set(col.writes) | set(col.reductions) | set(col.async_reductions)
    out: Dict[str, AccessClass] = {}
    for vec in sorted(names):
        reads = col.reads.get(vec, set())
        writes = col.writes.get(vec, set())
        reds = col.reductions.get(vec, [])
        areds = col.async_reductions.get(vec, [])
        if areds:
            if writes or reds:
                raise MixedAccessError(vec, func.name, "async reduction mixed with other updates")
            op = _single_op(areds, _ASYNC_OPS, vec, func.name)
            out[vec] = AccessClass(ASYNC_REDUCTION, op, tuple(sorted({r for _, r in areds})))
        elif reds:
            if reads or writes:
                raise MixedAccessError(vec, func.name, "read or written besides its reduction")
            op = _single_op(reds, _REDUCE_OPS, vec, func.name)
            out[vec] = AccessClass(REDUCTION, op, tuple(sorted({r for _, r in reds})))
        elif writes:
            if reads:
                raise MixedAccessError(vec, func.name, "plain read and write")
            out[vec] = AccessClass(WRITE_ONLY, None, tuple(sorted(writes)))
        else:
            out[vec] = AccessClass(READ_ONLY, None, tuple(sorted(reads)))
    return out


# ---------------------------------------------------------------- traversal-level classification

def _literal_value(expr) -> Tuple[bool, object]:
    if isinstance(expr, (A.IntLit, A.FloatLit, A.BoolLit)):
        return True, expr.value
    return False, None


def claim_pattern(filter_func: A.FuncDecl) -> Optional[Tuple[str, object]]:
    """`output = vec[v] == c` (either operand order) -> (vec, c)."""
    if filter_func.output is None or len(filter_func.body) != 1 or len(filter_func.params) != 1:
        return None
    stmt = filter_func.body[0]
    if not (isinstance(stmt, A.Assign) and isinstance(stmt.target, A.Name)
            and stmt.target.id == filter_func.output.name):
        return None
    cond = stmt.value
    if not (isinstance(cond, A.Binary) and cond.op == "=="):
        return None
    param = filter_func.params[0].name
    for lhs, rhs in ((cond.left, cond.right), (cond.right, cond.left)):
        if (isinstance(lhs, A.Index) and isinstance(lhs.target, A.Name)
                and isinstance(lhs.index, A.Name) and lhs.index.id == param):
            ok, value = _literal_value(rhs)
            if ok:
                return lhs.target.id, value
    return None


def _filter_reads(func: A.FuncDecl, role: str) -> Dict[str, AccessClass]:
    roles = {p.name: role for p in func.params}
    if len(func.params) >= 2:
        roles = param_roles(func)
    return classify_accesses(func, roles)


def classify_traversal(ir: A.ProgramIR, stmt: A.EdgeSetApply) -> Dict[str, AccessClass]:
    """Access classes for one edgeset traversal (apply function plus every filter)."""
    apply_func = ir.func(stmt.apply_func)
    merged = dict(classify_accesses(apply_func))
    claims = {}
    for fname, role in ((stmt.src_filter, "src"), (stmt.dst_filter, "dst"), (stmt.edge_filter, "edge")):
        if not fname:
            continue
        ffunc = ir.func(fname)
        pattern = claim_pattern(ffunc) if role == "dst" else None
        for vec, cls in _filter_reads(ffunc, role).items():
            if cls.kind != READ_ONLY:
                raise MixedAccessError(vec, fname, "filters may only read vertex data")
            current = merged.get(vec)
            if current is None or current.kind == READ_ONLY:
                roles = set(cls.indexed_by) | set(current.indexed_by if current else ())
                merged[vec] = AccessClass(READ_ONLY, None, tuple(sorted(roles)))
            elif (current.kind == WRITE_ONLY and pattern and pattern[0] == vec
                  and current.indexed_by == ("dst",)):
                claims[vec] = pattern[1]
            else:
                raise MixedAccessError(vec, f"{stmt.apply_func}/{fname}",
                                       "written by the apply function and read by a filter")
    for vec, expected in claims.items():
        merged[vec] = AccessClass(ASYNC_REDUCTION, "cas", ("dst",), expected)
    return merged


# ---------------------------------------------------------------- distance vectors / sync

def distance_vectors(access: Dict[str, AccessClass], gis: GisVector) -> Dict[str, DistanceVector]:
    out = {}
    for vec, cls in access.items():
        if cls.kind == READ_ONLY:
            out[vec] = DistanceVector(ZERO, ZERO, cls.indexed_by)
            continue
        roles = set(cls.indexed_by)
        if len(roles) == 1 and roles <= {"src", "dst"}:
            endpoint = roles.pop()
            outer = ZERO if gis.outer.direction == endpoint else STAR
            inner = ZERO if gis.inner.direction == endpoint else STAR
        else:
            outer = inner = STAR
        out[vec] = DistanceVector(outer, inner, cls.indexed_by)
    return out


def _segment_lift(dvs: Dict[str, DistanceVector], access: Dict[str, AccessClass],
                  gis: GisVector) -> Dict[str, DistanceVector]:
    """Concurrent segments share the outer range: outer-indexed updates gain a Star."""
    if not (gis.ssg and gis.ssg.is_parallel):
        return dvs
    lifted = {}
    for vec, dv in dvs.items():
        cls = access[vec]
        if cls.kind != READ_ONLY and dv.outer == ZERO:
            dv = DistanceVector(STAR, dv.inner, dv.indexed_by)
        lifted[vec] = dv
    return lifted


def infer_sync(variant: Variant, dvs: Dict[str, DistanceVector], access: Dict[str, AccessClass],
               plan: Optional[ExecutionPlan] = None) -> SyncPlan:
    gis = variant.gis
    dvs = _segment_lift(dvs, access, gis)
    outer_par = (gis.bsg is not None and gis.bsg.is_parallel) or gis.outer.parallel != "SR"
    inner_par = gis.inner.parallel != "SR" or (gis.ssg is not None and gis.ssg.is_parallel)
    entries = []
    for vec in sorted(access):
        cls = access[vec]
        dv = dvs[vec]
        if cls.kind == ASYNC_REDUCTION:
            sync = ATOMIC
        elif cls.kind == REDUCTION:
            star_outer = dv.outer == STAR and outer_par
            star_inner = dv.inner == STAR and inner_par
            if star_outer and star_inner:
                sync = BUFFER_MERGE
            elif star_outer or star_inner:
                sync = ATOMIC
            else:
                sync = NO_SYNC
        else:
            sync = NO_SYNC
        entries.append((vec, sync))

    dedup = "none"
    early_exit = False
    if plan is not None and plan.stmt.modified:
        if plan.stmt.dedup:
            dedup = "visited-flag-CAS"
        tracked = access.get(plan.stmt.tracked)
        writers = [v for v, c in access.items() if c.kind != READ_ONLY]
        early_exit = (not gis.is_push and gis.inner.parallel == "SR" and tracked is not None
                      and tracked.kind == ASYNC_REDUCTION and tracked.op == "cas"
                      and writers == [plan.stmt.tracked])
    return SyncPlan(variant.name, tuple(entries), dedup, early_exit,
                    tuple(sorted(access.items())), tuple(sorted(dvs.items())))


def attach_sync(ir: A.ProgramIR, plan: ExecutionPlan) -> ExecutionPlan:
    """One SyncPlan per variant; hybrid plans get two independent specializations."""
    access = classify_traversal(ir, plan.stmt)
    syncs = []
    for variant in plan.variants:
        dvs = distance_vectors(access, variant.gis)
        syncs.append(infer_sync(variant, dvs, access, plan))
        logger.debug("[Dependence] %s/%s -> %s", plan.display_label, variant.name, syncs[-1].entries)
    return replace(plan, sync=tuple(syncs))


def render_deps(plan: ExecutionPlan) -> List[str]:
    """dump-deps lines: `name  ⟨o,i⟩  class  sync`, one block per variant."""
    lines = []
    for variant, sync in zip(plan.variants, plan.sync):
        lines.append(f"{plan.display_label} [{variant.name}] {variant.gis.render()}")
        for vec, cls in sync.classes:
            dv = sync.distance(vec)
            lines.append(f"  {vec}  {dv}  {cls}  {sync.for_vector(vec)}")
        lines.append(f"  dedup={sync.dedup} early_exit={str(sync.early_exit).lower()}")
    return lines

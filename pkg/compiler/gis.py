# compiler/gis.py
"""
Graph iteration space (GIS) model.
- GisVector = <S, B, O, I> with direction/parallel/partition/filter tags
- ExecutionPlan: one or two (hybrid) variants per edgeset-apply statement
- LayoutPlan: SoA vs fused AoS groups for vertex vectors
- render_vector/parse_gis_vector implement the dump-ir text format (unicode or ASCII)
"""

import re
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

from lang import ast_nodes as A
from lang.errors import CompileError

SR, SP, WSP = "SR", "SP", "WSP"
FVC, EVC = "FVC", "EVC"
SA, BA, BV = "SA", "BA", "BV"
PARALLEL_TAGS = (SR, SP, WSP)
FILTER_TAGS = (SA, BA, BV)

SPARSE_PUSH, DENSE_PUSH, DENSE_PULL = "SparsePush", "DensePush", "DensePull"
DEFAULT_GRAIN = 256
DEFAULT_DIRECTION = SPARSE_PUSH


@dataclass(frozen=True)
class DimCfg:
    """S or B dimension. `size` is the grain for B and the segment count for S."""
    parallel: str
    partition: str
    size: int

    def render_bsg(self) -> str:
        return f"B[{self.parallel},({self.partition},{self.size})]"

    def render_ssg(self) -> str:
        total = "num_vert" if self.partition == FVC else "num_edges"
        return f"S[{self.parallel},({self.partition},{total}/{self.size})]"

    @property
    def is_parallel(self) -> bool:
        return self.parallel != SR


@dataclass(frozen=True)
class IterCfg:
    direction: str  # src | dst
    parallel: str = SR
    filter: Optional[str] = None

    def render(self, dim: str) -> str:
        tail = f",{self.filter}" if self.filter else ""
        return f"{dim}[{self.direction},{self.parallel}{tail}]"


@dataclass(frozen=True)
class GisVector:
    outer: IterCfg
    inner: IterCfg
    ssg: Optional[DimCfg] = None
    bsg: Optional[DimCfg] = None

    @property
    def is_push(self) -> bool:
        return self.outer.direction == "src"

    def render(self, ascii_only: bool = False) -> str:
        bottom = "_" if ascii_only else "⊥"
        parts = [
            self.ssg.render_ssg() if self.ssg else bottom,
            self.bsg.render_bsg() if self.bsg else bottom,
            self.outer.render("O"),
            self.inner.render("I"),
        ]
        left, right = ("<", ">") if ascii_only else ("⟨", "⟩")
        return left + ", ".join(parts) + right

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class Variant:
    name: str  # SparsePush | DensePush | DensePull
    gis: GisVector
    edge_grain: int = DEFAULT_GRAIN
    parallelization: Optional[str] = None

    @property
    def is_dense(self) -> bool:
        return self.name != SPARSE_PUSH


@dataclass(frozen=True)
class ExecutionPlan:
    stmt: A.EdgeSetApply
    variants: Tuple[Variant, ...]
    label: Optional[str] = None
    direction: str = DEFAULT_DIRECTION
    applied_calls: Tuple[str, ...] = ()
    dropped_calls: Tuple[str, ...] = ()
    conflicts: Tuple[Tuple[str, str], ...] = ()
    sync: Tuple = ()  # one SyncPlan per variant, attached by compiler.dependence

    @property
    def hybrid(self) -> bool:
        return len(self.variants) == 2

    @property
    def dedup_enabled(self) -> bool:
        return self.stmt.modified and self.stmt.dedup

    @property
    def tracked_vector(self) -> Optional[str]:
        return self.stmt.tracked if self.stmt.modified else None

    @property
    def apply_func(self) -> str:
        return self.stmt.apply_func

    @property
    def src_filter(self) -> Optional[str]:
        return self.stmt.src_filter

    @property
    def dst_filter(self) -> Optional[str]:
        return self.stmt.dst_filter

    @property
    def edge_filter(self) -> Optional[str]:
        return self.stmt.edge_filter

    @property
    def output(self) -> str:
        return "modified-vertexset" if self.stmt.modified else "none"

    @property
    def display_label(self) -> str:
        return self.label or f"line{self.stmt.line}"

    def variant(self, name: str) -> Optional[Variant]:
        for v in self.variants:
            if v.name == name:
                return v
        return None

    def sync_for(self, variant_name: str):
        for v, s in zip(self.variants, self.sync):
            if v.name == variant_name:
                return s
        return None


@dataclass(frozen=True)
class FusedGroup:
    name: str
    members: Tuple[str, ...]


@dataclass(frozen=True)
class LayoutPlan:
    groups: Tuple[FusedGroup, ...] = ()

    def group_of(self, vector: str) -> Optional[FusedGroup]:
        for g in self.groups:
            if vector in g.members:
                return g
        return None

    def bucket(self, vector: str) -> str:
        g = self.group_of(vector)
        return f"AoS({g.name})" if g else "SoA"


# ---------------------------------------------------------------- defaults

def variant_for(direction: str, stmt: A.EdgeSetApply) -> Variant:
    """Direction + filter tags of a single traversal mode."""
    has_from = stmt.from_set is not None
    has_to = stmt.to_set is not None
    if direction == SPARSE_PUSH:
        gis = GisVector(IterCfg("src", SR, SA), IterCfg("dst", SR, BA if has_to else None))
    elif direction == DENSE_PUSH:
        gis = GisVector(IterCfg("src", SR, BA if has_from else None), IterCfg("dst", SR, BA if has_to else None))
    elif direction == DENSE_PULL:
        gis = GisVector(IterCfg("dst", SR, BA if has_to else None), IterCfg("src", SR, BA if has_from else None))
    else:
        raise CompileError(f"unknown traversal direction '{direction}'")
    return Variant(direction, gis)


def variants_for(direction: str, stmt: A.EdgeSetApply) -> Tuple[Variant, ...]:
    """Hybrid options yield (dense, sparse)."""
    if "-" in direction:
        dense, sparse = direction.split("-")
        return (variant_for(dense, stmt), variant_for(sparse, stmt))
    return (variant_for(direction, stmt),)


def default_plan(stmt: A.EdgeSetApply, label: Optional[str] = None) -> ExecutionPlan:
    """Serial SparsePush; what every traversal gets when no schedule call targets it."""
    return ExecutionPlan(stmt=stmt, variants=variants_for(DEFAULT_DIRECTION, stmt), label=label)


# ---------------------------------------------------------------- dump format

def render_plan(plan: ExecutionPlan, ascii_only: bool = False) -> str:
    vectors = " | ".join(v.gis.render(ascii_only) for v in plan.variants)
    return f"{plan.display_label}: {vectors}"


def _split_top(text: str) -> List[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur).strip())
    return parts


_ITER_RE = re.compile(r"^([OI])\[(src|dst),(SR|SP|WSP)(?:,(SA|BA|BV))?\]$")
_BSG_RE = re.compile(r"^B\[(SR|SP|WSP),\((FVC|EVC),(\d+)\)\]$")
_SSG_RE = re.compile(r"^S\[(SR|SP|WSP),\((FVC|EVC),(?:num_vert|num_edges)/(\d+)\)\]$")


def parse_gis_vector(text: str) -> GisVector:
    body = text.strip()
    if body[:1] in ("⟨", "<") and body[-1:] in ("⟩", ">"):
        body = body[1:-1]
    else:
        raise CompileError(f"malformed GIS vector '{text}'")
    parts = [p.replace(" ", "") for p in _split_top(body)]
    if len(parts) != 4:
        raise CompileError(f"GIS vector needs 4 dimensions: '{text}'")
    s_txt, b_txt, o_txt, i_txt = parts
    ssg = bsg = None
    if s_txt not in ("⊥", "_"):
        m = _SSG_RE.match(s_txt)
        if not m:
            raise CompileError(f"malformed S dimension '{s_txt}'")
        ssg = DimCfg(m.group(1), m.group(2), int(m.group(3)))
    if b_txt not in ("⊥", "_"):
        m = _BSG_RE.match(b_txt)
        if not m:
            raise CompileError(f"malformed B dimension '{b_txt}'")
        bsg = DimCfg(m.group(1), m.group(2), int(m.group(3)))
    iters = []
    for dim, txt in (("O", o_txt), ("I", i_txt)):
        m = _ITER_RE.match(txt)
        if not m or m.group(1) != dim:
            raise CompileError(f"malformed {dim} dimension '{txt}'")
        iters.append(IterCfg(m.group(2), m.group(3), m.group(4)))
    return GisVector(iters[0], iters[1], ssg, bsg)


def parse_plan_line(line: str) -> Tuple[str, List[GisVector]]:
    label, _, rest = line.partition(": ")
    return label.strip(), [parse_gis_vector(p) for p in rest.split(" | ")]

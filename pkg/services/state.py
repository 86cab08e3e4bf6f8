# services/state.py
"""
Runtime state shared by the executor, the compiled functions and the interpreter.
- Counters: work/locality counters, per traversal and cumulative
- EngineOptions: threads, hybrid threshold, stats collection
- RuntimeState: vertex data laid out per LayoutPlan, scalars, named sets, traversal stats
SoA vectors are one list per vector; a fused AoS group is one list of per-vertex records,
each record a list with one slot per member vector.
"""

import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from compiler.gis import LayoutPlan
from lang import ast_nodes as A
from lang.errors import VectorNotFound

GRAPHWEAVE_THREADS = os.environ.get("GRAPHWEAVE_THREADS")

_ZERO = {"int": 0, "double": 0.0, "bool": False}
_DTYPES = {"int": np.int64, "double": np.float64, "bool": bool}


@dataclass
class Counters:
    edges_examined: int = 0
    edges_applied: int = 0
    atomics_executed: int = 0
    frontier_conversions: int = 0
    ssg_passes: int = 0
    merge_ops: int = 0
    vertices_examined: int = 0

    def add(self, other: "Counters") -> "Counters":
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        return self

    def as_dict(self) -> Dict[str, int]:
        return {k: int(v) for k, v in asdict(self).items()}


@dataclass
class EngineOptions:
    threads: int = 1
    hybrid_threshold: Optional[int] = None  # default: m / 20
    collect_stats: bool = True
    numa_bind: bool = False  # accepted for compatibility; partitions are not pinned to sockets

    def __post_init__(self):
        if GRAPHWEAVE_THREADS:
            self.threads = int(GRAPHWEAVE_THREADS)
        self.threads = max(1, int(self.threads))

    def threshold_for(self, num_edges: int) -> int:
        if self.hybrid_threshold is not None:
            return self.hybrid_threshold
        return num_edges // 20


class TaskContext:
    """Per-task scratch: counters, reduction buffers, the last apply's change flag, emitted ids."""

    __slots__ = ("counters", "buffers", "changed", "out")

    def __init__(self, buffered: Tuple[str, ...] = ()):
        self.counters = Counters()
        self.buffers: Dict[str, dict] = {vec: {} for vec in buffered}
        self.changed = False
        self.out: List[int] = []


@dataclass
class TraversalStats:
    label: str
    variant_chosen: str
    counters: Counters
    wall_time_ns: int

    def as_dict(self) -> Dict[str, Any]:
        return {"label": self.label, "variant_chosen": self.variant_chosen,
                "counters": self.counters.as_dict(), "wall_time_ns": self.wall_time_ns}


def zero_of(value_type) -> Any:
    if isinstance(value_type, A.ArrayType):
        return [_ZERO[value_type.scalar.name]] * value_type.length
    return _ZERO[value_type.name]


def coerce(value_type, value):
    """Stored form of `value` for a slot of the given declared type."""
    if isinstance(value_type, A.ArrayType):
        if isinstance(value, list):
            return [coerce(value_type.scalar, x) for x in value]
        return [coerce(value_type.scalar, value)] * value_type.length
    name = value_type.name
    if name == "double":
        return float(value)
    if name == "bool":
        return bool(value)
    return int(value)


class RuntimeState:
    def __init__(self, ir: A.ProgramIR, n: int, layout: Optional[LayoutPlan] = None):
        self.n = n
        self.layout = layout or LayoutPlan()
        self.decls: Dict[str, A.VectorDecl] = {d.name: d for d in ir.vector_decls}
        self.columns: Dict[str, list] = {}
        self.records: Dict[str, list] = {}
        self.slots: Dict[str, Tuple[str, int]] = {}
        self.scalars: Dict[str, Any] = {}
        self.sets: Dict[str, Any] = {}
        self.counters = Counters()
        self.traversals: List[TraversalStats] = []
        self._allocate()

    def _allocate(self):
        for group in self.layout.groups:
            members = [self.decls[name] for name in group.members]
            self.records[group.name] = [[zero_of(d.value_type) for d in members] for _ in range(self.n)]
            for j, d in enumerate(members):
                self.slots[d.name] = (group.name, j)
        for name, decl in self.decls.items():
            if name in self.slots:
                continue
            if isinstance(decl.value_type, A.ArrayType):
                self.columns[name] = [zero_of(decl.value_type) for _ in range(self.n)]
            else:
                self.columns[name] = [zero_of(decl.value_type)] * self.n

    # ------------------------------------------------------------ element access

    def is_vector(self, name: str) -> bool:
        return name in self.decls

    def value_type(self, name: str):
        return self._decl(name).value_type

    def _decl(self, name: str) -> A.VectorDecl:
        decl = self.decls.get(name)
        if decl is None:
            raise VectorNotFound(f"no vertex vector named '{name}'")
        return decl

    def column(self, name: str) -> list:
        """SoA list of a vector; raises VectorNotFound for fused or unknown names."""
        col = self.columns.get(name)
        if col is None:
            self._decl(name)
            raise VectorNotFound(f"'{name}' is stored in {self.slots[name][0]}, not as a column")
        return col

    def get(self, name: str, v: int):
        if name in self.columns:
            return self.columns[name][v]
        group, j = self._slot(name)
        return self.records[group][v][j]

    def set(self, name: str, v: int, value):
        value = coerce(self.value_type(name), value)
        if name in self.columns:
            self.columns[name][v] = value
        else:
            group, j = self._slot(name)
            self.records[group][v][j] = value

    def container(self, name: str, v: int) -> Tuple[list, int]:
        """(list, index) holding element v of `name`, whichever layout it uses."""
        if name in self.columns:
            return self.columns[name], v
        group, j = self._slot(name)
        return self.records[group][v], j

    def _slot(self, name: str) -> Tuple[str, int]:
        slot = self.slots.get(name)
        if slot is None:
            self._decl(name)
        return slot

    # ------------------------------------------------------------ export

    def vector(self, name: str) -> np.ndarray:
        vt = self.value_type(name)
        values = self.columns[name] if name in self.columns else [self.get(name, v) for v in range(self.n)]
        if isinstance(vt, A.ArrayType):
            return np.array(values, dtype=_DTYPES[vt.scalar.name]).reshape(self.n, vt.length)
        return np.array(values, dtype=_DTYPES[vt.name])

    def vectors(self) -> Dict[str, np.ndarray]:
        return {name: self.vector(name) for name in self.decls}

    def record_traversal(self, stats: TraversalStats):
        self.traversals.append(stats)
        self.counters.add(stats.counters)

    def stats(self) -> Dict[str, Any]:
        return {
            "traversals": [t.as_dict() for t in self.traversals],
            "totals": self.counters.as_dict(),
        }

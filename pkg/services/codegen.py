# services/codegen.py
"""
Compiles user functions to Python functions.
Each FuncDecl is rendered as Python source, compiled with compile() and exec'd into a
namespace that binds the runtime's storage directly:
- V_<vec>: SoA list, R_<group>: AoS record list (member j lives at record[v][j])
- S: scalar globals, SETS: named vertex/edge sets, OD_/ID_/M_<edgeset>: degree lists, edge count
Vertex-data updates are specialized per SyncPlan: plain code (NoSync), striped-lock
atomics (AtomicReduction) or a write into the task's buffer (LocalBufferMerge).
Claim-once CAS writes always go through compare_and_swap.
Functions take the task context first: gt_f(ctx, *params); filters return their output.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from compiler.dependence import ASYNC_REDUCTION, ATOMIC, BUFFER_MERGE, SyncPlan
from lang import ast_nodes as A
from lang.errors import CompileError
from services import atomics
from services.state import RuntimeState

logger = logging.getLogger(__name__)

_ARITH = {"+", "-", "*"}
_COMPARE = {"==", "!=", "<", ">", "<=", ">="}
_REDUCE_OPS = {"+=": atomics.SUM, "-=": atomics.SUM, "min=": atomics.MIN, "max=": atomics.MAX,
               "asyncMin=": atomics.MIN, "asyncMax=": atomics.MAX}


def divide(a, b):
    """`/` as the language defines it: truncating on two ints, IEEE otherwise."""
    if type(a) is int and type(b) is int:
        if b == 0:
            raise ZeroDivisionError("integer division by zero")
        q = abs(a) // abs(b)
        return q if (a < 0) == (b < 0) else -q
    try:
        return a / b
    except ZeroDivisionError:
        if a == 0 or a != a:
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)


def make_row(length: int, value, scalar: str):
    if isinstance(value, list):
        return [float(x) for x in value] if scalar == "double" else list(value)
    if scalar == "double":
        value = float(value)
    return [value] * length


@dataclass
class CompiledFunction:
    name: str
    fn: object
    arity: int  # user-visible parameters, ctx excluded
    source: str


class _Emitter:
    def __init__(self, compiler: "FunctionCompiler", func: A.FuncDecl, sync: Optional[SyncPlan],
                 tracked: Optional[str]):
        self.c = compiler
        self.func = func
        self.sync = sync
        self.tracked = tracked
        self.lines: List[str] = []
        self.depth = 1
        self.tmp = 0
        self.locals: Dict[str, object] = {}
        for p in func.params:
            self.locals[p.name] = A.INT if isinstance(p.type, A.ElementType) else p.type
        if func.output is not None:
            self.locals[func.output.name] = func.output.type

    # ------------------------------------------------------------ helpers

    def emit(self, line: str):
        self.lines.append("    " * self.depth + line)

    def fresh(self, stem: str) -> str:
        self.tmp += 1
        return f"_{stem}{self.tmp}"

    def render(self) -> str:
        params = ", ".join(["ctx"] + [f"l_{p.name}" for p in self.func.params])
        head = [f"def gt_{self.func.name}({params}):"]
        out = self.func.output
        prologue = []
        if out is not None:
            prologue.append(f"    l_{out.name} = {self.zero(out.type)}")
        self.block(self.func.body)
        body = prologue + self.lines
        if out is not None:
            body.append(f"    return l_{out.name}")
        if not body:
            body = ["    pass"]
        return "\n".join(head + body) + "\n"

    def zero(self, t) -> str:
        if isinstance(t, A.ArrayType):
            return f"_row({t.length}, {self.zero(t.scalar)}, {t.scalar.name!r})"
        return {"int": "0", "double": "0.0", "bool": "False"}.get(getattr(t, "name", ""), "0")

    def coerced(self, t, expr: A.Expr) -> str:
        text = self.expr(expr)
        if isinstance(t, A.ArrayType):
            return f"_row({t.length}, {text}, {t.scalar.name!r})"
        if isinstance(t, A.ScalarType) and t.name == "double" and not isinstance(expr, A.FloatLit):
            return f"float({text})"
        return text

    # ------------------------------------------------------------ expressions

    def expr(self, e) -> str:
        if isinstance(e, A.IntLit):
            return repr(e.value)
        if isinstance(e, A.FloatLit):
            return repr(e.value) if math.isfinite(e.value) else f"float({str(e.value)!r})"
        if isinstance(e, A.BoolLit):
            return "True" if e.value else "False"
        if isinstance(e, A.Name):
            if e.id in self.locals:
                return f"l_{e.id}"
            if e.id in self.c.scalar_names:
                return f"S[{e.id!r}]"
            raise CompileError(f"'{e.id}' cannot be used as a value in function '{self.func.name}'")
        if isinstance(e, A.Index):
            return self.index(e)
        if isinstance(e, A.Binary):
            left, right = self.expr(e.left), self.expr(e.right)
            if e.op == "/":
                return f"_div({left}, {right})"
            if e.op in _ARITH or e.op in _COMPARE:
                return f"({left} {e.op} {right})"
            if e.op in ("and", "or"):
                return f"({left} {e.op} {right})"
            raise CompileError(f"unsupported operator '{e.op}'")
        if isinstance(e, A.Unary):
            operand = self.expr(e.operand)
            return f"(-{operand})" if e.op == "-" else f"(not {operand})"
        if isinstance(e, A.Call):
            if e.func in ("fabs", "sqrt"):
                return f"_{e.func}({self.expr(e.args[0])})"
            raise CompileError(f"'{e.func}()' is not available inside function '{self.func.name}'")
        if isinstance(e, A.MethodCall):
            return self.method(e)
        raise CompileError(f"{type(e).__name__} is not allowed inside function '{self.func.name}'")

    def method(self, e: A.MethodCall) -> str:
        recv = e.receiver.id if isinstance(e.receiver, A.Name) else None
        if recv in self.c.edgesets:
            if e.method == "getOutDegree":
                return f"OD_{recv}[{self.expr(e.args[0])}]"
            if e.method == "getInDegree":
                return f"ID_{recv}[{self.expr(e.args[0])}]"
            if e.method in ("getNumEdges", "size"):
                return f"M_{recv}"
        if recv is not None and e.method in ("size", "getVertexSetSize"):
            return f"SETS[{recv!r}].size"
        raise CompileError(f"method '{e.method}' is not available inside function '{self.func.name}'")

    def _slot(self, e: A.Index) -> Tuple[str, str, str, object]:
        """(container, index, key, scalar type) for a vector element; key is the vertex id temp."""
        base = A.vector_base(e)
        chain = A.index_chain(e)
        key = self.fresh("k")
        self.emit(f"{key} = {self.expr(chain[0])}")
        decl = self.c.state.decls[base]
        if base in self.c.state.slots:
            group, j = self.c.state.slots[base]
            cont, idx = f"R_{group}[{key}]", str(j)
        else:
            cont, idx = f"V_{base}", key
        for sub in chain[1:]:
            cont, idx = f"{cont}[{idx}]", self.expr(sub)
        vt = decl.value_type
        scalar = vt.scalar if isinstance(vt, A.ArrayType) and len(chain) > 1 else vt
        return cont, idx, key, scalar

    def index(self, e: A.Index) -> str:
        base = A.vector_base(e)
        if base in self.locals:
            return f"{self.expr(e.target)}[{self.expr(e.index)}]"
        if base is None or not self.c.state.is_vector(base):
            raise CompileError(f"cannot index '{base}' in function '{self.func.name}'")
        chain = A.index_chain(e)
        first = self.expr(chain[0])
        if base in self.c.state.slots:
            group, j = self.c.state.slots[base]
            text = f"R_{group}[{first}][{j}]"
        else:
            text = f"V_{base}[{first}]"
        for sub in chain[1:]:
            text += f"[{self.expr(sub)}]"
        return text

    # ------------------------------------------------------------ statements

    def block(self, stmts):
        start = len(self.lines)
        for stmt in stmts:
            self.stmt(stmt)
        if len(self.lines) == start:
            self.emit("pass")

    def stmt(self, s):
        if isinstance(s, A.VarDecl):
            self.locals[s.name] = s.type
            value = self.coerced(s.type, s.init) if s.init is not None else self.zero(s.type)
            self.emit(f"l_{s.name} = {value}")
        elif isinstance(s, A.Assign):
            self.assign(s)
        elif isinstance(s, A.Reduce):
            self.reduce(s)
        elif isinstance(s, A.ExprStmt):
            self.emit(self.expr(s.expr))
        elif isinstance(s, A.If):
            self.emit(f"if {self.expr(s.cond)}:")
            self.nested(s.then)
            if s.orelse:
                self.emit("else:")
                self.nested(s.orelse)
        elif isinstance(s, A.For):
            self.locals[s.var] = A.INT
            self.emit(f"for l_{s.var} in range({self.expr(s.lo)}, {self.expr(s.hi)}):")
            self.nested(s.body)
        elif isinstance(s, A.While):
            self.emit(f"while {self.expr(s.cond)}:")
            self.nested(s.body)
        elif isinstance(s, A.Break):
            self.emit("break")
        elif isinstance(s, (A.Labeled,)):
            self.stmt(s.stmt)
        elif isinstance(s, A.NameNode):
            for inner in s.body:
                self.stmt(inner)
        else:
            raise CompileError(f"unsupported statement {type(s).__name__} in '{self.func.name}'")

    def nested(self, stmts):
        self.depth += 1
        self.block(stmts)
        self.depth -= 1

    def _changed(self):
        self.emit("    ctx.changed = True")

    def assign(self, s: A.Assign):
        target = s.target
        if isinstance(target, A.Name):
            self.emit(f"l_{target.id} = {self.coerced(self.locals.get(target.id), s.value)}")
            return
        base = A.vector_base(target)
        if base in self.locals:
            self.emit(f"{self.expr(target)} = {self.expr(s.value)}")
            return
        cont, idx, key, scalar = self._slot(target)
        value = self.coerced(scalar, s.value)
        cls = self.sync.access(base) if self.sync else None
        tracked = base == self.tracked
        if cls is not None and cls.kind == ASYNC_REDUCTION and cls.op == "cas":
            self.emit("ctx.counters.atomics_executed += 1")
            if tracked:
                self.emit(f"if _cas({cont}, {idx}, {cls.expected!r}, {value}, {key}):")
                self._changed()
            else:
                self.emit(f"_cas({cont}, {idx}, {cls.expected!r}, {value}, {key})")
            return
        if tracked:
            old = self.fresh("o")
            self.emit(f"{old} = {cont}[{idx}]")
            self.emit(f"{cont}[{idx}] = {value}")
            self.emit(f"if {cont}[{idx}] != {old}:")
            self._changed()
        else:
            self.emit(f"{cont}[{idx}] = {value}")

    def reduce(self, s: A.Reduce):
        op = _REDUCE_OPS[s.op]
        value_expr = A.Unary("-", s.value) if s.op == "-=" else s.value
        target = s.target
        if isinstance(target, A.Name) or A.vector_base(target) in self.locals:
            lhs = self.expr(target)
            if op == atomics.SUM:
                self.emit(f"{lhs} = {lhs} + {self.expr(value_expr)}")
            else:
                v = self.fresh("v")
                self.emit(f"{v} = {self.expr(value_expr)}")
                cmp = "<" if op == atomics.MIN else ">"
                self.emit(f"if {v} {cmp} {lhs}:")
                self.emit(f"    {lhs} = {v}")
            return
        base = A.vector_base(target)
        cont, idx, key, scalar = self._slot(target)
        value = self.coerced(scalar, value_expr)
        mode = self.sync.for_vector(base) if self.sync else None
        cls = self.sync.access(base) if self.sync else None
        tracked = base == self.tracked
        if mode == ATOMIC or (cls is not None and cls.kind == ASYNC_REDUCTION):
            self.emit("ctx.counters.atomics_executed += 1")
            if tracked:
                self.emit(f"if _atomic({cont}, {idx}, {op!r}, {value}, {key}):")
                self._changed()
            else:
                self.emit(f"_atomic({cont}, {idx}, {op!r}, {value}, {key})")
            return
        if mode == BUFFER_MERGE:
            chain = A.index_chain(target)
            bkey = key if len(chain) == 1 else f"({key}, {self.expr(chain[1])})"
            self.emit(f"_buffer(ctx.buffers[{base!r}], {bkey}, {op!r}, {value})")
            return
        v = self.fresh("v")
        self.emit(f"{v} = {value}")
        if op == atomics.SUM:
            if tracked:
                old = self.fresh("o")
                self.emit(f"{old} = {cont}[{idx}]")
                self.emit(f"{cont}[{idx}] = {old} + {v}")
                self.emit(f"if {cont}[{idx}] != {old}:")
                self._changed()
            else:
                self.emit(f"{cont}[{idx}] += {v}")
            return
        cmp = "<" if op == atomics.MIN else ">"
        self.emit(f"if {v} {cmp} {cont}[{idx}]:")
        self.emit(f"    {cont}[{idx}] = {v}")
        if tracked:
            self.emit("    ctx.changed = True")


class FunctionCompiler:
    """Per-run compiler; results are cached per (function, SyncPlan, tracked vector)."""

    def __init__(self, ir: A.ProgramIR, state: RuntimeState, graphs: Dict[str, object]):
        self.ir = ir
        self.state = state
        self.edgesets = dict(graphs)
        self.scalar_names = {d.name for d in ir.const_decls}
        self._cache: Dict[tuple, CompiledFunction] = {}
        self.namespace = self._namespace()

    def _namespace(self) -> dict:
        ns = {
            "S": self.state.scalars, "SETS": self.state.sets, "_div": divide, "_row": make_row,
            "_fabs": math.fabs, "_sqrt": math.sqrt, "_atomic": atomics.atomic_update,
            "_cas": atomics.compare_and_swap, "_buffer": atomics.buffer_update,
        }
        for name, col in self.state.columns.items():
            ns[f"V_{name}"] = col
        for group, records in self.state.records.items():
            ns[f"R_{group}"] = records
        for name, graph in self.edgesets.items():
            ns[f"OD_{name}"] = graph.out_degree_list
            ns[f"ID_{name}"] = graph.in_degree_list
            ns[f"M_{name}"] = graph.m
        return ns

    def source(self, name: str, sync: Optional[SyncPlan] = None, tracked: Optional[str] = None) -> str:
        func = self.ir.func(name)
        if func is None:
            raise CompileError(f"unknown function '{name}'")
        return _Emitter(self, func, sync, tracked).render()

    def compile(self, name: str, sync: Optional[SyncPlan] = None, tracked: Optional[str] = None) -> CompiledFunction:
        key = (name, sync, tracked)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        text = self.source(name, sync, tracked)
        code = compile(text, f"<gt:{name}>", "exec")
        exec(code, self.namespace)
        compiled = CompiledFunction(name, self.namespace[f"gt_{name}"], len(self.ir.func(name).params), text)
        self._cache[key] = compiled
        logger.debug("[Codegen] %s (%s)\n%s", name, sync.variant if sync else "serial", text)
        return compiled

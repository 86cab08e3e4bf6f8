# services/interpreter.py
"""
Runs `main` of a lowered program against one graph.
Control flow (for/while/if/break) and scalar arithmetic are interpreted directly;
every edgeset apply and vertexset operator is handed to the TraversalEngine with the
plan lowering attached to that statement. Non-graphweave failures inside a statement
surface as GtRuntimeError tagged with the statement's label.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from compiler.lowering import LoweringResult
from lang import ast_nodes as A
from lang.errors import CompileError, GraphWeaveError, GtRuntimeError
from services.codegen import FunctionCompiler, divide
from services.executor import TraversalEngine
from services.frontier import Frontier
from services.graph_store import Graph
from services.state import EngineOptions, RuntimeState, coerce
from services.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

_RUNTIME_FAILURES = (ZeroDivisionError, IndexError, ValueError, TypeError, OverflowError, KeyError)


class _Break(Exception):
    pass


@dataclass
class RunResult:
    state: RuntimeState
    wall_time_ns: int
    overrides: Dict[str, Any] = field(default_factory=dict)

    def vector(self, name: str):
        return self.state.vector(name)

    def vectors(self):
        return self.state.vectors()

    def stats(self) -> Dict[str, Any]:
        doc = self.state.stats()
        doc["wall_time_ns"] = self.wall_time_ns
        return doc


def parse_override(value_type: A.ScalarType, raw) -> Any:
    if not isinstance(raw, str):
        return coerce(value_type, raw)
    text = raw.strip()
    if value_type.name == "bool":
        if text.lower() in ("true", "1"):
            return True
        if text.lower() in ("false", "0"):
            return False
        raise CompileError(f"'{raw}' is not a bool")
    try:
        return int(text) if value_type.name == "int" else float(text)
    except ValueError:
        raise CompileError(f"'{raw}' is not a valid {value_type.name}")


class Interpreter:
    def __init__(self, lowered: LoweringResult, graph: Graph, options: Optional[EngineOptions] = None,
                 overrides: Optional[Dict[str, Any]] = None, pool: Optional[WorkerPool] = None):
        self.ir = lowered.ir
        self.lowered = lowered
        self.graph = graph
        self.options = options or EngineOptions()
        self.overrides = dict(overrides or {})
        self.state = RuntimeState(self.ir, graph.n, lowered.layout)
        self.scopes: List[Dict[str, Any]] = []
        self.types: List[Dict[str, Any]] = []
        self.labels: List[str] = []
        self.line = 0
        self._init_globals()
        graphs = {d.name: graph for d in self.ir.edgeset_decls()}
        self.compiler = FunctionCompiler(self.ir, self.state, graphs)
        self.engine = TraversalEngine(graph, self.state, self.compiler, self.options, pool)
        self.engine.prepare(lowered.plans)

    # ------------------------------------------------------------ globals

    def _init_globals(self):
        consts = {d.name: d for d in self.ir.const_decls}
        unknown = sorted(set(self.overrides) - set(consts))
        if unknown:
            raise CompileError(f"cannot override undeclared constant(s): {', '.join(unknown)}")
        for decl in self.ir.decls:
            if isinstance(decl, A.ConstDecl):
                if decl.name in self.overrides:
                    value = parse_override(decl.type, self.overrides[decl.name])
                else:
                    value = coerce(decl.type, self.eval(decl.value))
                self.state.scalars[decl.name] = value
            elif isinstance(decl, A.SetDecl):
                if isinstance(decl.type, A.EdgeSetType):
                    self.state.sets[decl.name] = self.graph
                else:
                    self.state.sets[decl.name] = self.eval(decl.init)

    # ------------------------------------------------------------ names

    def _lookup(self, name: str):
        for frame in reversed(self.scopes):
            if name in frame:
                return frame[name]
        if name in self.state.sets:
            return self.state.sets[name]
        if name in self.state.scalars:
            return self.state.scalars[name]
        raise GtRuntimeError(f"undefined name '{name}'", self._where())

    def _store(self, name: str, value):
        for frame, types in zip(reversed(self.scopes), reversed(self.types)):
            if name in frame:
                t = types.get(name)
                frame[name] = coerce(t, value) if isinstance(t, (A.ScalarType, A.ArrayType)) else value
                return
        if name in self.state.scalars:
            decl = next(d for d in self.ir.const_decls if d.name == name)
            self.state.scalars[name] = coerce(decl.type, value)
            return
        self.state.sets[name] = value

    def _where(self) -> str:
        return ":".join(self.labels) if self.labels else f"line {self.line}"

    def _vertex(self, value) -> int:
        if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < self.graph.n:
            raise GtRuntimeError(f"vertex id {value!r} out of range [0, {self.graph.n})", self._where())
        return value

    # ------------------------------------------------------------ expressions

    def eval(self, e):
        if isinstance(e, (A.IntLit, A.FloatLit, A.BoolLit)):
            return e.value
        if isinstance(e, A.Name):
            return self._lookup(e.id)
        if isinstance(e, A.Index):
            base = A.vector_base(e)
            if base is not None and self.state.is_vector(base):
                chain = A.index_chain(e)
                value = self.state.get(base, self._vertex(self.eval(chain[0])))
                for sub in chain[1:]:
                    value = value[self.eval(sub)]
                return value
            return self.eval(e.target)[self.eval(e.index)]
        if isinstance(e, A.Binary):
            return self._binary(e)
        if isinstance(e, A.Unary):
            value = self.eval(e.operand)
            return -value if e.op == "-" else not value
        if isinstance(e, A.Call):
            if e.func == "fabs":
                return math.fabs(self.eval(e.args[0]))
            if e.func == "sqrt":
                return math.sqrt(self.eval(e.args[0]))
            if e.func == "load":
                return self.graph
            raise GtRuntimeError(f"unknown function '{e.func}'", self._where())
        if isinstance(e, A.MethodCall):
            return self._method(e)
        if isinstance(e, A.NewVertexSet):
            size = self.eval(e.size)
            if not 0 <= size <= self.graph.n:
                raise GtRuntimeError(f"vertexset size {size} outside [0, {self.graph.n}]", self._where())
            return Frontier.from_ids(self.graph.n, range(size))
        if isinstance(e, A.EdgeSetApply):
            plan = self.lowered.plan_for(e)
            if plan is None:
                raise GtRuntimeError("edgeset apply has no execution plan", self._where())
            from_f = self.eval(e.from_set) if e.from_set is not None else None
            to_f = self.eval(e.to_set) if e.to_set is not None else None
            return self.engine.run_edgeset_apply(plan, from_f, to_f)
        if isinstance(e, A.VertexSetOp):
            return self.engine.run_vertexset_op(e.op, self.eval(e.target), e.func)
        raise GtRuntimeError(f"cannot evaluate {type(e).__name__}", self._where())

    def _binary(self, e: A.Binary):
        if e.op == "and":
            return bool(self.eval(e.left)) and bool(self.eval(e.right))
        if e.op == "or":
            return bool(self.eval(e.left)) or bool(self.eval(e.right))
        a, b = self.eval(e.left), self.eval(e.right)
        op = e.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return divide(a, b)
        if op == "==":
            return a == b
        if op == "!=":
            return a != b
        if op == "<":
            return a < b
        if op == ">":
            return a > b
        if op == "<=":
            return a <= b
        return a >= b

    def _method(self, e: A.MethodCall):
        recv = self.eval(e.receiver)
        m = e.method
        args = [self.eval(a) for a in e.args]
        if isinstance(recv, Graph):
            if m == "getVertices":
                return Frontier.full(recv.n)
            if m == "getOutDegree":
                return recv.out_degree_list[self._vertex(args[0])]
            if m == "getInDegree":
                return recv.in_degree_list[self._vertex(args[0])]
            if m == "getOutDegrees":
                return list(recv.out_degree_list)
            if m == "getInDegrees":
                return list(recv.in_degree_list)
            if m in ("getNumEdges", "size"):
                return recv.m
        if isinstance(recv, Frontier):
            if m in ("size", "getVertexSetSize"):
                return recv.size
            if m == "addVertex":
                recv.add_vertex(self._vertex(args[0]))
                return None
        raise GtRuntimeError(f"unknown method '{m}' on {type(recv).__name__}", self._where())

    # ------------------------------------------------------------ statements

    def run_block(self, stmts):
        self.scopes.append({})
        self.types.append({})
        try:
            for stmt in stmts:
                self.exec(stmt)
        finally:
            self.scopes.pop()
            self.types.pop()

    def exec(self, s):
        self.line = getattr(s, "line", self.line) or self.line
        try:
            self._exec(s)
        except (GraphWeaveError, _Break):
            raise
        except _RUNTIME_FAILURES as exc:
            raise GtRuntimeError(f"{type(exc).__name__}: {exc}", self._where()) from exc

    def _exec(self, s):
        if isinstance(s, A.Labeled):
            self.labels.append(s.label)
            try:
                self.exec(s.stmt)
            finally:
                self.labels.pop()
        elif isinstance(s, A.NameNode):
            self.labels.append(s.label)
            try:
                self.run_block(s.body)
            finally:
                self.labels.pop()
        elif isinstance(s, A.VarDecl):
            value = self.eval(s.init) if s.init is not None else None
            if isinstance(s.type, (A.ScalarType, A.ArrayType)):
                value = coerce(s.type, value if value is not None else 0)
            self.scopes[-1][s.name] = value
            self.types[-1][s.name] = s.type
        elif isinstance(s, A.Assign):
            self._assign(s.target, self.eval(s.value))
        elif isinstance(s, A.ExprStmt):
            self.eval(s.expr)
        elif isinstance(s, A.For):
            lo, hi = self.eval(s.lo), self.eval(s.hi)
            for i in range(lo, hi):
                self.scopes.append({s.var: i})
                self.types.append({s.var: A.INT})
                try:
                    self.run_block(s.body)
                except _Break:
                    break
                finally:
                    self.scopes.pop()
                    self.types.pop()
        elif isinstance(s, A.While):
            while self.eval(s.cond):
                try:
                    self.run_block(s.body)
                except _Break:
                    break
        elif isinstance(s, A.If):
            self.run_block(s.then if self.eval(s.cond) else s.orelse)
        elif isinstance(s, A.Break):
            raise _Break()
        else:
            raise GtRuntimeError(f"statement {type(s).__name__} is not allowed in main", self._where())

    def _assign(self, target, value):
        if isinstance(target, A.Name):
            self._store(target.id, value)
            return
        base = A.vector_base(target)
        if base is None or not self.state.is_vector(base):
            raise GtRuntimeError("only vertex vector elements and names can be assigned", self._where())
        chain = A.index_chain(target)
        v = self._vertex(self.eval(chain[0]))
        if len(chain) == 1:
            self.state.set(base, v, value)
            return
        cont, idx = self.state.container(base, v)
        row = cont[idx]
        for sub in chain[1:-1]:
            row = row[self.eval(sub)]
        row[self.eval(chain[-1])] = coerce(self.state.value_type(base).scalar, value)

    def run(self) -> RunResult:
        start = time.perf_counter_ns()
        self.run_block(self.ir.main)
        elapsed = time.perf_counter_ns() - start
        logger.info("[Interpreter] main finished in %.3f ms, %d traversals", elapsed / 1e6,
                    len(self.state.traversals))
        return RunResult(self.state, elapsed, self.overrides)


def run_program(lowered: LoweringResult, graph: Graph, options: Optional[EngineOptions] = None,
                overrides: Optional[Dict[str, Any]] = None, pool: Optional[WorkerPool] = None) -> RunResult:
    own_pool = pool is None
    options = options or EngineOptions()
    pool = pool or WorkerPool(options.threads)
    try:
        return Interpreter(lowered, graph, options, overrides, pool).run()
    finally:
        if own_pool:
            pool.shutdown()

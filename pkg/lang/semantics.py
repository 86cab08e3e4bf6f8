# lang/semantics.py
"""
Static checks over a parsed ProgramIR.
- declarations reference declared element kinds; vector/element agreement on indexing
- apply/filter function arities and boolean outputs
- reductions only inside function bodies; consts are never assigned
- per-traversal read/write classification (MixedAccessError), via compiler.dependence
Returns a list of warnings; the first error is raised.
"""

import logging
from typing import Dict, List, Optional

from lang import ast_nodes as A
from lang.errors import GtTypeError

logger = logging.getLogger(__name__)

_NUMERIC = ("int", "double")
_BUILTIN_MATH = ("fabs", "sqrt")


def _is_numeric(t) -> bool:
    return isinstance(t, A.ElementType) or (isinstance(t, A.ScalarType) and t.name in _NUMERIC)


def _is_intlike(t) -> bool:
    return isinstance(t, A.ElementType) or t == A.INT


def _is_bool(t) -> bool:
    return t == A.BOOL


class _Scope:
    def __init__(self, parent: Optional["_Scope"] = None):
        self.parent = parent
        self.names: Dict[str, object] = {}

    def lookup(self, name: str):
        scope = self
        while scope is not None:
            if name in scope.names:
                return scope.names[name]
            scope = scope.parent
        return None

    def child(self) -> "_Scope":
        return _Scope(self)


class _LoadResult:
    """Type of `load(...)`: assignable to any edgeset."""


class SemanticChecker:
    def __init__(self, ir: A.ProgramIR):
        self.ir = ir
        self.elements = {d.name for d in ir.element_decls}
        self.consts: Dict[str, A.ConstDecl] = {d.name: d for d in ir.const_decls}
        self.vectors: Dict[str, A.VectorDecl] = {d.name: d for d in ir.vector_decls}
        self.sets: Dict[str, A.SetDecl] = {d.name: d for d in ir.set_decls}
        self.funcs: Dict[str, A.FuncDecl] = {f.name: f for f in ir.funcs}
        self.warnings: List[str] = []
        self.in_function: Optional[A.FuncDecl] = None

    # ------------------------------------------------------------ entry

    def check(self) -> List[str]:
        seen = set()
        for decl in self.ir.decls:
            name = getattr(decl, "name")
            if name in seen:
                raise GtTypeError(f"duplicate declaration '{name}'", decl.line)
            seen.add(name)
        for f in self.ir.funcs:
            if f.name in seen:
                raise GtTypeError(f"duplicate declaration '{f.name}'", f.line)
            seen.add(f.name)

        globals_scope = _Scope()
        for decl in self.ir.decls:
            self._check_decl(decl, globals_scope)
        for func in self.ir.funcs:
            self._check_func(func, globals_scope)
        self.in_function = None
        self._check_labels(self.ir.main)
        self._block(self.ir.main, globals_scope.child(), loop_depth=0)
        self._check_traversals()
        return self.warnings

    def _require_element(self, name: str, line: int = 0):
        if name not in self.elements:
            raise GtTypeError(f"undeclared element kind '{name}'", line)

    def _check_decl(self, decl, scope: _Scope):
        if isinstance(decl, A.ElementDecl):
            return
        if isinstance(decl, A.VectorDecl):
            self._require_element(decl.element, decl.line)
            if decl.init is not None:
                t = self._expr(decl.init, scope)
                if isinstance(t, A.VectorType):
                    if t.element != decl.element:
                        raise GtTypeError(f"vector '{decl.name}' initialized from a {t.element} vector", decl.line)
                else:
                    self._assignable(decl.value_type, t, f"initializer of '{decl.name}'", decl.line)
            scope.names[decl.name] = A.VectorType(decl.element, decl.value_type)
            return
        if isinstance(decl, A.SetDecl):
            st = decl.type
            if isinstance(st, A.EdgeSetType):
                self._require_element(st.element, decl.line)
                self._require_element(st.src, decl.line)
                self._require_element(st.dst, decl.line)
            else:
                self._require_element(st.element, decl.line)
            t = self._expr(decl.init, scope)
            self._assignable(st, t, f"initializer of '{decl.name}'", decl.line)
            scope.names[decl.name] = st
            return
        if isinstance(decl, A.ConstDecl):
            t = self._expr(decl.value, scope)
            self._assignable(decl.type, t, f"initializer of '{decl.name}'", decl.line)
            scope.names[decl.name] = decl.type

    # ------------------------------------------------------------ functions

    def _check_func(self, func: A.FuncDecl, globals_scope: _Scope):
        self.in_function = func
        scope = globals_scope.child()
        for p in func.params:
            if isinstance(p.type, A.ElementType):
                self._require_element(p.type.name, func.line)
            elif not isinstance(p.type, A.ScalarType):
                raise GtTypeError(f"parameter '{p.name}' of '{func.name}' must be a vertex or scalar", func.line)
            scope.names[p.name] = p.type
        if func.output is not None:
            scope.names[func.output.name] = func.output.type
        self._block(func.body, scope, loop_depth=0)

    def _check_labels(self, stmts, where: str = "main"):
        seen = set()
        for stmt in stmts:
            if isinstance(stmt, (A.Labeled, A.NameNode)):
                if stmt.label in seen:
                    raise GtTypeError(f"duplicate label '#{stmt.label}#' in {where}", stmt.line)
                seen.add(stmt.label)
            for body in _child_blocks(stmt):
                self._check_labels(body, getattr(stmt, "label", where))

    # ------------------------------------------------------------ statements

    def _block(self, stmts, scope: _Scope, loop_depth: int):
        for stmt in stmts:
            self._stmt(stmt, scope, loop_depth)

    def _stmt(self, stmt, scope: _Scope, loop_depth: int):
        if isinstance(stmt, A.Labeled):
            if self.in_function is not None:
                raise GtTypeError("labels are only allowed in main", stmt.line)
            self._stmt(stmt.stmt, scope, loop_depth)
        elif isinstance(stmt, A.NameNode):
            self._block(stmt.body, scope, loop_depth)
        elif isinstance(stmt, A.VarDecl):
            if isinstance(stmt.type, A.VectorType):
                raise GtTypeError("vectors must be declared globally", stmt.line)
            if stmt.init is not None:
                t = self._expr(stmt.init, scope)
                self._assignable(stmt.type, t, f"initializer of '{stmt.name}'", stmt.line)
            scope.names[stmt.name] = stmt.type
        elif isinstance(stmt, A.Assign):
            target_t = self._lvalue(stmt.target, scope, stmt.line)
            value_t = self._expr(stmt.value, scope)
            self._assignable(target_t, value_t, "assignment", stmt.line)
        elif isinstance(stmt, A.Reduce):
            if self.in_function is None:
                raise GtTypeError(f"reduction '{stmt.op}' outside a function body", stmt.line)
            target_t = self._lvalue(stmt.target, scope, stmt.line)
            value_t = self._expr(stmt.value, scope)
            if not _is_numeric(target_t) or not _is_numeric(value_t):
                raise GtTypeError(f"reduction '{stmt.op}' needs numeric operands", stmt.line)
            if stmt.op.startswith("async") and not isinstance(stmt.target, A.Index):
                raise GtTypeError(f"'{stmt.op}' must update a vector element", stmt.line)
        elif isinstance(stmt, A.ExprStmt):
            self._expr(stmt.expr, scope, statement=True)
        elif isinstance(stmt, A.For):
            for bound in (stmt.lo, stmt.hi):
                if not _is_intlike(self._expr(bound, scope)):
                    raise GtTypeError("for-loop bounds must be integers", stmt.line)
            inner = scope.child()
            inner.names[stmt.var] = A.INT
            self._block(stmt.body, inner, loop_depth + 1)
        elif isinstance(stmt, A.While):
            if not _is_bool(self._expr(stmt.cond, scope)):
                raise GtTypeError("while condition must be bool", stmt.line)
            self._block(stmt.body, scope.child(), loop_depth + 1)
        elif isinstance(stmt, A.If):
            if not _is_bool(self._expr(stmt.cond, scope)):
                raise GtTypeError("if condition must be bool", stmt.line)
            self._block(stmt.then, scope.child(), loop_depth)
            self._block(stmt.orelse, scope.child(), loop_depth)
        elif isinstance(stmt, A.Break):
            if loop_depth == 0:
                raise GtTypeError("break outside a loop", stmt.line)

    def _lvalue(self, target, scope: _Scope, line: int):
        if isinstance(target, A.Name):
            t = scope.lookup(target.id)
            if t is None:
                raise GtTypeError(f"undefined name '{target.id}'", line)
            if _declared_at_global(scope, target.id):
                decl = self.consts.get(target.id)
                if decl is None:
                    raise GtTypeError(f"cannot reassign global '{target.id}'", line)
                if not decl.mutable:
                    raise GtTypeError(f"cannot assign to const '{target.id}'", line)
                if self.in_function is not None:
                    raise GtTypeError(f"functions cannot assign global '{target.id}'", line)
            if isinstance(t, (A.VectorType, A.EdgeSetType)):
                raise GtTypeError(f"cannot assign a whole {t} '{target.id}'", line)
            return t
        if isinstance(target, A.Index):
            return self._expr(target, scope)
        raise GtTypeError("invalid assignment target", line)

    def _assignable(self, target_t, value_t, what: str, line: int):
        if isinstance(value_t, _LoadResult):
            if isinstance(target_t, A.EdgeSetType):
                return
            raise GtTypeError(f"{what}: load() yields an edgeset", line)
        if target_t == value_t:
            return
        if isinstance(target_t, A.ScalarType) and target_t.name == "double" and _is_numeric(value_t):
            return
        if _is_intlike(target_t) and _is_intlike(value_t):
            return
        if isinstance(target_t, A.ArrayType) and _is_numeric(value_t):
            return
        if isinstance(target_t, A.VertexSetType) and isinstance(value_t, A.VertexSetType):
            if target_t.element != value_t.element:
                raise GtTypeError(f"{what}: vertexset of {value_t.element} where {target_t.element} expected", line)
            return
        raise GtTypeError(f"{what}: cannot use {value_t} where {target_t} is expected", line)

    # ------------------------------------------------------------ expressions

    def _expr(self, expr, scope: _Scope, statement: bool = False):
        if isinstance(expr, A.IntLit):
            return A.INT
        if isinstance(expr, A.FloatLit):
            return A.DOUBLE
        if isinstance(expr, A.BoolLit):
            return A.BOOL
        if isinstance(expr, A.Name):
            t = scope.lookup(expr.id)
            if t is None:
                if expr.id in self.funcs:
                    raise GtTypeError(f"function '{expr.id}' used as a value")
                raise GtTypeError(f"undefined name '{expr.id}'")
            return t
        if isinstance(expr, A.Index):
            target_t = self._expr(expr.target, scope)
            index_t = self._expr(expr.index, scope)
            if isinstance(target_t, A.VectorType):
                if isinstance(index_t, A.ElementType):
                    if index_t.name != target_t.element:
                        raise GtTypeError(f"vector{{{target_t.element}}} indexed by a {index_t.name}")
                elif index_t != A.INT:
                    raise GtTypeError(f"vector index must be a vertex or int, got {index_t}")
                return target_t.value
            if isinstance(target_t, A.ArrayType):
                if not _is_intlike(index_t):
                    raise GtTypeError("array element index must be an int")
                return target_t.scalar
            raise GtTypeError(f"cannot index a value of type {target_t}")
        if isinstance(expr, A.Binary):
            return self._binary(expr, scope)
        if isinstance(expr, A.Unary):
            t = self._expr(expr.operand, scope)
            if expr.op == "-":
                if not _is_numeric(t):
                    raise GtTypeError("unary '-' needs a number")
                return A.INT if _is_intlike(t) else A.DOUBLE
            if not _is_bool(t):
                raise GtTypeError("'not' needs a bool")
            return A.BOOL
        if isinstance(expr, A.Call):
            if expr.func == "load":
                return _LoadResult()
            if expr.func in _BUILTIN_MATH:
                if len(expr.args) != 1 or not _is_numeric(self._expr(expr.args[0], scope)):
                    raise GtTypeError(f"{expr.func}() takes one number")
                return A.DOUBLE
            if expr.func in self.funcs:
                raise GtTypeError(f"function '{expr.func}' can only be invoked through apply/filter")
            raise GtTypeError(f"unknown function '{expr.func}'")
        if isinstance(expr, A.MethodCall):
            return self._method(expr, scope, statement)
        if isinstance(expr, A.NewVertexSet):
            self._require_element(expr.element)
            if not _is_intlike(self._expr(expr.size, scope)):
                raise GtTypeError("vertexset size must be an int")
            return A.VertexSetType(expr.element)
        if isinstance(expr, A.EdgeSetApply):
            return self._edgeset_apply(expr, scope)
        if isinstance(expr, A.VertexSetOp):
            return self._vertexset_op(expr, scope)
        raise GtTypeError(f"unsupported expression {type(expr).__name__}")

    def _binary(self, expr: A.Binary, scope: _Scope):
        lt = self._expr(expr.left, scope)
        rt = self._expr(expr.right, scope)
        op = expr.op
        if op in ("and", "or"):
            if not (_is_bool(lt) and _is_bool(rt)):
                raise GtTypeError(f"'{op}' needs bool operands")
            return A.BOOL
        if op in ("==", "!="):
            if (_is_numeric(lt) and _is_numeric(rt)) or (_is_bool(lt) and _is_bool(rt)):
                return A.BOOL
            raise GtTypeError(f"cannot compare {lt} with {rt}")
        if op in ("<", ">", "<=", ">="):
            if _is_numeric(lt) and _is_numeric(rt):
                return A.BOOL
            raise GtTypeError(f"'{op}' needs numeric operands")
        if not (_is_numeric(lt) and _is_numeric(rt)):
            raise GtTypeError(f"'{op}' needs numeric operands, got {lt} and {rt}")
        if _is_intlike(lt) and _is_intlike(rt):
            return A.INT
        return A.DOUBLE

    def _method(self, expr: A.MethodCall, scope: _Scope, statement: bool):
        recv = self._expr(expr.receiver, scope)
        m = expr.method
        nargs = len(expr.args)
        for arg in expr.args:
            self._expr(arg, scope)
        if isinstance(recv, A.EdgeSetType):
            if m == "getVertices" and nargs == 0:
                return A.VertexSetType(recv.src)
            if m in ("getOutDegrees", "getInDegrees") and nargs == 0:
                return A.VectorType(recv.src if m == "getOutDegrees" else recv.dst, A.INT)
            if m in ("getOutDegree", "getInDegree") and nargs == 1:
                return A.INT
            if m in ("getNumEdges", "size") and nargs == 0:
                return A.INT
        if isinstance(recv, A.VertexSetType):
            if m in ("size", "getVertexSetSize") and nargs == 0:
                return A.INT
            if m == "addVertex" and nargs == 1:
                if not statement:
                    raise GtTypeError("addVertex() is a statement")
                if not _is_intlike(self._expr(expr.args[0], scope)):
                    raise GtTypeError("addVertex() takes a vertex id")
                return None
        raise GtTypeError(f"unknown method '{m}' with {nargs} argument(s) on {recv}")

    def _func_checked(self, name: str, arities, needs_bool: bool, usage: str) -> A.FuncDecl:
        func = self.funcs.get(name)
        if func is None:
            raise GtTypeError(f"{usage}: undefined function '{name}'")
        if len(func.params) not in arities:
            raise GtTypeError(f"{usage}: function '{name}' takes {len(func.params)} parameter(s), "
                              f"expected {' or '.join(str(a) for a in arities)}")
        if needs_bool and (func.output is None or func.output.type != A.BOOL):
            raise GtTypeError(f"{usage}: function '{name}' must declare a bool output")
        return func

    def _param_kind(self, func: A.FuncDecl, idx: int, kind: str, usage: str):
        ptype = func.params[idx].type
        if isinstance(ptype, A.ElementType) and ptype.name != kind:
            raise GtTypeError(f"{usage}: parameter '{func.params[idx].name}' of '{func.name}' is a "
                              f"{ptype.name}, expected {kind}")

    def _edgeset_apply(self, expr: A.EdgeSetApply, scope: _Scope):
        et = scope.lookup(expr.edgeset)
        if not isinstance(et, A.EdgeSetType):
            raise GtTypeError(f"'{expr.edgeset}' is not an edgeset", expr.line)
        for clause, kind in ((expr.from_set, et.src), (expr.to_set, et.dst)):
            if clause is not None:
                st = self._expr(clause, scope)
                if not isinstance(st, A.VertexSetType):
                    raise GtTypeError("from()/to() take a vertexset", expr.line)
                if st.element != kind:
                    raise GtTypeError(f"vertexset of {st.element} used where {kind} expected", expr.line)
        if expr.src_filter:
            f = self._func_checked(expr.src_filter, (1,), True, "srcFilter")
            self._param_kind(f, 0, et.src, "srcFilter")
        if expr.dst_filter:
            f = self._func_checked(expr.dst_filter, (1,), True, "dstFilter")
            self._param_kind(f, 0, et.dst, "dstFilter")
        weighted = et.weight is not None
        arities = (2, 3) if weighted else (2,)
        if expr.edge_filter:
            self._func_checked(expr.edge_filter, arities, True, "filter")
        func = self._func_checked(expr.apply_func, arities, False, "apply")
        self._param_kind(func, 0, et.src, "apply")
        self._param_kind(func, 1, et.dst, "apply")
        if len(func.params) == 3 and not _is_numeric(func.params[2].type):
            raise GtTypeError(f"apply: weight parameter of '{func.name}' must be numeric", expr.line)
        if expr.modified:
            if expr.tracked not in self.vectors:
                raise GtTypeError(f"applyModified tracks unknown vector '{expr.tracked}'", expr.line)
            return A.VertexSetType(et.dst)
        return None

    def _vertexset_op(self, expr: A.VertexSetOp, scope: _Scope):
        st = self._expr(expr.target, scope)
        if not isinstance(st, A.VertexSetType):
            raise GtTypeError(f"'{expr.op}' needs a vertexset receiver, got {st}")
        func = self._func_checked(expr.func, (1,), expr.op == "filter", f"vertexset {expr.op}")
        self._param_kind(func, 0, st.element, f"vertexset {expr.op}")
        if expr.op == "filter":
            return A.VertexSetType(st.element)
        return None

    # ------------------------------------------------------------ read/write restrictions

    def _check_traversals(self):
        from compiler.dependence import classify_traversal

        for node in A.walk(A.ProgramIR((), (), self.ir.main)):
            if isinstance(node, A.EdgeSetApply):
                classes = classify_traversal(self.ir, node)
                logger.debug("[Semantics] %s: %s", node.apply_func,
                             {k: str(v) for k, v in classes.items()})
        used = {n.func for n in A.walk(A.ProgramIR((), (), self.ir.main)) if isinstance(n, A.VertexSetOp)}
        used |= {n.apply_func for n in A.walk(A.ProgramIR((), (), self.ir.main)) if isinstance(n, A.EdgeSetApply)}
        for f in self.ir.funcs:
            if f.name not in used and not _used_as_filter(self.ir, f.name):
                self.warnings.append(f"function '{f.name}' is never used")


def _declared_at_global(scope: _Scope, name: str) -> bool:
    while scope is not None:
        if name in scope.names:
            return scope.parent is None
        scope = scope.parent
    return False


def _used_as_filter(ir: A.ProgramIR, name: str) -> bool:
    for node in A.walk(A.ProgramIR((), (), ir.main)):
        if isinstance(node, A.EdgeSetApply) and name in (node.src_filter, node.dst_filter, node.edge_filter):
            return True
    return False


def _child_blocks(stmt):
    if isinstance(stmt, A.Labeled):
        return _child_blocks(stmt.stmt)
    if isinstance(stmt, (A.For, A.While, A.NameNode)):
        return [stmt.body]
    if isinstance(stmt, A.If):
        return [stmt.then, stmt.orelse]
    return []


def check_semantics(ir: A.ProgramIR) -> List[str]:
    warnings = SemanticChecker(ir).check()
    for w in warnings:
        logger.info("[Semantics] %s", w)
    return warnings

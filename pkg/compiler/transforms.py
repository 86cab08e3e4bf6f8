# compiler/transforms.py
"""
Program-structure and data-layout passes over ProgramIR.
- fuse_for_loops / split_for_loop: loop fusion and splitting; original labels survive as name nodes
- fuse_apply_functions: two compatible edgeset traversals become one traversal of a fused function
- fuse_fields: groups vertex vectors into one array-of-structs record
- lower_vector_initializers: vector initializers become generated vertexset applies at the top of main
"""

import logging
from dataclasses import replace
from typing import Iterable, Optional, Tuple

from compiler.gis import FusedGroup, LayoutPlan
from lang import ast_nodes as A
from lang.errors import (
    AlreadyFused, IncompatibleChains, IncompatibleRanges, MixedElementKinds, NonSiblingLoops,
    NotAForLoop, SplitOutOfRange, TransformError, UnknownVector,
)
from lang.labels import container_of, replace_at, resolve_label

logger = logging.getLogger(__name__)


def _labeled_for(ir: A.ProgramIR, label: str):
    handle = resolve_label(ir, label)
    loop = handle.stmt
    if not isinstance(loop, A.For):
        raise NotAForLoop(f"'{label}' is a {type(loop).__name__}, not a for loop")
    return handle, loop


def _literal(expr) -> Optional[int]:
    return expr.value if isinstance(expr, A.IntLit) else None


def _clone_stmts(stmts) -> Tuple:
    return tuple(A.clone(s) for s in stmts)


# ---------------------------------------------------------------- loops

def fuse_for_loops(ir: A.ProgramIR, l1: str, l2: str, fused_label: str) -> A.ProgramIR:
    h1, loop1 = _labeled_for(ir, l1)
    h2, loop2 = _labeled_for(ir, l2)
    if h1.path == h2.path:
        raise NonSiblingLoops(f"cannot fuse '{l1}' with itself")
    if container_of(h1.path) != container_of(h2.path) or h2.path[-1][0] != h1.path[-1][0] + 1:
        raise NonSiblingLoops(f"'{l1}' and '{l2}' are not adjacent loops in one block")

    body2 = loop2.body
    if loop2.var != loop1.var:
        body2 = tuple(A.rename_names(s, {loop2.var: loop1.var}) for s in body2)
    name1, name2 = h1.node.label, h2.node.label
    part1 = A.NameNode(name1, loop1.body, line=loop1.line)
    part2 = A.NameNode(name2, body2, line=loop2.line)

    def loop(label, lo, hi, body):
        return A.Labeled(label, A.For(loop1.var, lo, hi, tuple(body), line=loop1.line), line=loop1.line)

    if loop1.lo == loop2.lo and loop1.hi == loop2.hi:
        replacement = (loop(fused_label, loop1.lo, loop1.hi, (part1, part2)),)
    else:
        bounds = [_literal(loop1.lo), _literal(loop1.hi), _literal(loop2.lo), _literal(loop2.hi)]
        if any(b is None for b in bounds):
            raise IncompatibleRanges(f"'{l1}' and '{l2}' have different symbolic ranges")
        lo1, hi1, lo2, hi2 = bounds
        lo, hi = max(lo1, lo2), min(hi1, hi2)
        if lo >= hi:
            raise IncompatibleRanges(f"'{l1}' ({lo1}:{hi1}) and '{l2}' ({lo2}:{hi2}) do not overlap")
        replacement = []
        if lo1 != lo2:
            early = part1 if lo1 < lo2 else part2
            replacement.append(loop(f"{fused_label}_prologue", A.IntLit(min(lo1, lo2)), A.IntLit(lo),
                                    (A.clone(early),)))
        replacement.append(loop(fused_label, A.IntLit(lo), A.IntLit(hi), (part1, part2)))
        if hi1 != hi2:
            late = part1 if hi1 > hi2 else part2
            replacement.append(loop(f"{fused_label}_epilogue", A.IntLit(hi), A.IntLit(max(hi1, hi2)),
                                    (A.clone(late),)))
        replacement = tuple(replacement)

    main = replace_at(ir.main, h2.path, ())
    main = replace_at(main, h1.path, replacement)
    logger.info("[Transforms] fused loops %s + %s -> %s", l1, l2, fused_label)
    return replace(ir, main=main)


def split_for_loop(ir: A.ProgramIR, label: str, l_a: str, l_b: str, split_point: int) -> A.ProgramIR:
    handle, loop = _labeled_for(ir, label)
    lo, hi = _literal(loop.lo), _literal(loop.hi)
    if (lo is not None and split_point < lo) or (hi is not None and split_point > hi):
        raise SplitOutOfRange(f"split point {split_point} outside '{label}' range "
                              f"{lo if lo is not None else '?'}:{hi if hi is not None else '?'}")
    point = A.IntLit(split_point)
    first = A.Labeled(l_a, replace(loop, hi=point), line=loop.line)
    second = A.Labeled(l_b, A.For(loop.var, point, loop.hi, _clone_stmts(loop.body), line=loop.line),
                       line=loop.line)
    wrapper = A.NameNode(handle.node.label, (first, second), line=loop.line)
    logger.info("[Transforms] split %s at %d -> %s, %s", label, split_point, l_a, l_b)
    return replace(ir, main=replace_at(ir.main, handle.path, (wrapper,)))


# ---------------------------------------------------------------- kernels

def _traversal_at(ir: A.ProgramIR, label: str):
    handle = resolve_label(ir, label)
    chain = A.traversal_of(handle.stmt)
    if chain is None:
        raise IncompatibleChains(f"'{label}' is not an edgeset apply statement")
    return handle, chain


def _local_names(stmts) -> set:
    out = set()
    for stmt in stmts:
        for node in A.walk(stmt):
            if isinstance(node, A.VarDecl):
                out.add(node.name)
            elif isinstance(node, A.For):
                out.add(node.var)
    return out


def fuse_apply_functions(ir: A.ProgramIR, label1: str, label2: str, fused_name: str) -> A.ProgramIR:
    h1, chain1 = _traversal_at(ir, label1)
    h2, chain2 = _traversal_at(ir, label2)
    if h1.path == h2.path:
        raise IncompatibleChains(f"cannot fuse '{label1}' with itself")
    if not chain1.same_chain(chain2):
        raise IncompatibleChains(f"'{label1}' and '{label2}' traverse with different chains")
    if chain1.modified or not isinstance(h2.stmt, A.ExprStmt):
        raise IncompatibleChains("only plain apply traversals can be fused")
    if ir.func(fused_name) is not None:
        raise TransformError(f"function '{fused_name}' already exists")

    f1, f2 = ir.func(chain1.apply_func), ir.func(chain2.apply_func)
    if len(f1.params) != len(f2.params) or any(a.type != b.type for a, b in zip(f1.params, f2.params)):
        raise IncompatibleChains(f"'{f1.name}' and '{f2.name}' have parameter lists that do not unify")
    mapping = {b.name: a.name for a, b in zip(f1.params, f2.params) if a.name != b.name}
    clashes = _local_names(f1.body) & _local_names(f2.body)
    mapping.update({name: f"{name}_{f2.name}" for name in clashes})
    body2 = tuple(A.rename_names(s, mapping) for s in f2.body) if mapping else f2.body
    fused = A.FuncDecl(fused_name, f1.params, f1.body + body2, None, line=f1.line)

    new_stmt = A.Labeled(h1.node.label, A.ExprStmt(replace(chain1, apply_func=fused_name), line=chain1.line),
                         line=h1.node.line)
    main = replace_at(ir.main, h1.path, (new_stmt,))
    ir = replace(ir, main=main, funcs=ir.funcs + (fused,))
    h2 = resolve_label(ir, label2)
    ir = replace(ir, main=replace_at(ir.main, h2.path, ()))
    logger.info("[Transforms] fused %s(%s) + %s(%s) -> %s", label1, f1.name, label2, f2.name, fused_name)
    return ir


# ---------------------------------------------------------------- data layout

def fuse_fields(layout: LayoutPlan, ir: A.ProgramIR, vectors: Iterable[str]) -> LayoutPlan:
    names = list(dict.fromkeys(vectors))
    decls = []
    for name in names:
        decl = ir.vector(name)
        if decl is None:
            raise UnknownVector(f"fuseFields: unknown vector '{name}'")
        if layout.group_of(name) is not None:
            raise AlreadyFused(f"fuseFields: '{name}' already belongs to {layout.group_of(name).name}")
        decls.append(decl)
    kinds = {d.element for d in decls}
    if len(kinds) > 1:
        raise MixedElementKinds(f"fuseFields: vectors over different element kinds {sorted(kinds)}")
    order = [d.name for d in ir.vector_decls if d.name in names]
    group = FusedGroup(f"fused_struct{len(layout.groups)}", tuple(order))
    logger.info("[Transforms] %s = AoS%s", group.name, group.members)
    return LayoutPlan(layout.groups + (group,))


def _vertices_of(ir: A.ProgramIR, element: str):
    for decl in ir.edgeset_decls():
        if decl.type.src == element:
            return A.MethodCall(A.Name(decl.name), "getVertices")
    for decl in ir.set_decls:
        if isinstance(decl.type, A.VertexSetType) and decl.type.element == element:
            return A.Name(decl.name)
    edgesets = ir.edgeset_decls()
    if edgesets:
        return A.MethodCall(A.Name(edgesets[0].name), "getVertices")
    raise TransformError(f"no vertex set available to initialize {element} vectors")


def lower_vector_initializers(ir: A.ProgramIR) -> A.ProgramIR:
    globals_ = {getattr(d, "name") for d in ir.decls}
    vertex = "v" if "v" not in globals_ else "vtx"
    vector_names = {d.name for d in ir.vector_decls}
    funcs, prologue, decls = [], [], []
    for decl in ir.decls:
        if not isinstance(decl, A.VectorDecl) or decl.init is None:
            decls.append(decl)
            continue
        fname = f"vertexset_apply_{decl.name}"
        value = _initial_value(decl.init, vertex, vector_names)
        body = (A.Assign(A.Index(A.Name(decl.name), A.Name(vertex)), value, line=decl.line),)
        funcs.append(A.FuncDecl(fname, (A.Param(vertex, A.ElementType(decl.element)),), body, line=decl.line))
        prologue.append(A.ExprStmt(A.VertexSetOp(_vertices_of(ir, decl.element), "apply", fname), line=decl.line))
        decls.append(replace(decl, init=None))
    if not funcs:
        return ir
    logger.debug("[Transforms] lowered %d vector initializers", len(funcs))
    return replace(ir, decls=tuple(decls), funcs=ir.funcs + tuple(funcs), main=tuple(prologue) + ir.main)


def _initial_value(expr, vertex: str, vector_names: set):
    """Per-vertex form of a vector initializer."""
    if isinstance(expr, A.Name) and expr.id in vector_names:
        return A.Index(expr, A.Name(vertex))
    if isinstance(expr, A.Index):
        return A.Index(expr.target, _initial_value(expr.index, vertex, vector_names))
    if isinstance(expr, A.MethodCall):
        if expr.method in ("getOutDegrees", "getInDegrees") and not expr.args:
            return A.MethodCall(expr.receiver, expr.method[:-1], (A.Name(vertex),))
        return replace(expr, args=tuple(_initial_value(a, vertex, vector_names) for a in expr.args))
    if isinstance(expr, A.Binary):
        return replace(expr, left=_initial_value(expr.left, vertex, vector_names),
                       right=_initial_value(expr.right, vertex, vector_names))
    if isinstance(expr, A.Unary):
        return replace(expr, operand=_initial_value(expr.operand, vertex, vector_names))
    if isinstance(expr, A.Call):
        return replace(expr, args=tuple(_initial_value(a, vertex, vector_names) for a in expr.args))
    return expr

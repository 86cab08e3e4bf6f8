# lang/printer.py
"""
Pretty-printer for ProgramIR: `dump-source` shows the program after fuse/split transforms.
Binary and unary expressions are fully parenthesized, so output reparses to an equal IR.
"""

from typing import List

from lang import ast_nodes as A

INDENT = "    "


def format_expr(expr) -> str:
    if isinstance(expr, A.IntLit):
        return str(expr.value)
    if isinstance(expr, A.FloatLit):
        return repr(float(expr.value))
    if isinstance(expr, A.BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, A.Name):
        return expr.id
    if isinstance(expr, A.Index):
        return f"{format_expr(expr.target)}[{format_expr(expr.index)}]"
    if isinstance(expr, A.Binary):
        return f"({format_expr(expr.left)} {expr.op} {format_expr(expr.right)})"
    if isinstance(expr, A.Unary):
        op = "-" if expr.op == "-" else "not "
        return f"({op}{format_expr(expr.operand)})"
    if isinstance(expr, A.Call):
        return f"{expr.func}({', '.join(format_expr(a) for a in expr.args)})"
    if isinstance(expr, A.MethodCall):
        args = ", ".join(format_expr(a) for a in expr.args)
        return f"{format_expr(expr.receiver)}.{expr.method}({args})"
    if isinstance(expr, A.NewVertexSet):
        return f"new vertexset{{{expr.element}}}({format_expr(expr.size)})"
    if isinstance(expr, A.VertexSetOp):
        return f"{format_expr(expr.target)}.{expr.op}({expr.func})"
    if isinstance(expr, A.EdgeSetApply):
        return format_chain(expr)
    raise TypeError(f"cannot print {type(expr).__name__}")


def format_chain(stmt: A.EdgeSetApply) -> str:
    parts = [stmt.edgeset]
    if stmt.from_set is not None:
        parts.append(f"from({format_expr(stmt.from_set)})")
    if stmt.to_set is not None:
        parts.append(f"to({format_expr(stmt.to_set)})")
    for method, func in (("filter", stmt.edge_filter), ("srcFilter", stmt.src_filter),
                         ("dstFilter", stmt.dst_filter)):
        if func:
            parts.append(f"{method}({func})")
    if stmt.modified:
        tail = "" if stmt.dedup else ", true"
        parts.append(f"applyModified({stmt.apply_func}, {stmt.tracked}{tail})")
    else:
        parts.append(f"apply({stmt.apply_func})")
    return ".".join(parts)


def _block(stmts, depth: int, out: List[str]):
    for stmt in stmts:
        _stmt(stmt, depth, out, prefix="")


def _stmt(stmt, depth: int, out: List[str], prefix: str):
    pad = INDENT * depth
    if isinstance(stmt, A.Labeled):
        _stmt(stmt.stmt, depth, out, prefix=f"{prefix}#{stmt.label}# ")
    elif isinstance(stmt, A.NameNode):
        out.append(f"{pad}{prefix}#{stmt.label}# namenode")
        _block(stmt.body, depth + 1, out)
        out.append(f"{pad}end")
    elif isinstance(stmt, A.VarDecl):
        init = f" = {format_expr(stmt.init)}" if stmt.init is not None else ""
        out.append(f"{pad}{prefix}var {stmt.name} : {stmt.type}{init};")
    elif isinstance(stmt, A.Assign):
        out.append(f"{pad}{prefix}{format_expr(stmt.target)} = {format_expr(stmt.value)};")
    elif isinstance(stmt, A.Reduce):
        out.append(f"{pad}{prefix}{format_expr(stmt.target)} {stmt.op} {format_expr(stmt.value)};")
    elif isinstance(stmt, A.ExprStmt):
        out.append(f"{pad}{prefix}{format_expr(stmt.expr)};")
    elif isinstance(stmt, A.For):
        out.append(f"{pad}{prefix}for {stmt.var} in {format_expr(stmt.lo)}:{format_expr(stmt.hi)}")
        _block(stmt.body, depth + 1, out)
        out.append(f"{pad}end")
    elif isinstance(stmt, A.While):
        out.append(f"{pad}{prefix}while {format_expr(stmt.cond)}")
        _block(stmt.body, depth + 1, out)
        out.append(f"{pad}end")
    elif isinstance(stmt, A.If):
        out.append(f"{pad}{prefix}if {format_expr(stmt.cond)}")
        _block(stmt.then, depth + 1, out)
        if stmt.orelse:
            out.append(f"{pad}else")
            _block(stmt.orelse, depth + 1, out)
        out.append(f"{pad}end")
    elif isinstance(stmt, A.Break):
        out.append(f"{pad}{prefix}break;")
    else:
        raise TypeError(f"cannot print {type(stmt).__name__}")


def _decl(decl) -> str:
    if isinstance(decl, A.ElementDecl):
        return f"element {decl.name} end"
    if isinstance(decl, A.ConstDecl):
        const = "" if decl.mutable else "const "
        return f"{const}{decl.name} : {decl.type} = {format_expr(decl.value)};"
    if isinstance(decl, A.VectorDecl):
        const = "const " if decl.const else ""
        init = f" = {format_expr(decl.init)}" if decl.init is not None else ""
        return f"{const}{decl.name} : {A.VectorType(decl.element, decl.value_type)}{init};"
    if isinstance(decl, A.SetDecl):
        return f"const {decl.name} : {decl.type} = {format_expr(decl.init)};"
    raise TypeError(f"cannot print {type(decl).__name__}")


def _func(func: A.FuncDecl, out: List[str]):
    params = ", ".join(f"{p.name} : {p.type}" for p in func.params)
    output = f" -> {func.output.name} : {func.output.type}" if func.output else ""
    out.append(f"func {func.name}({params}){output}")
    _block(func.body, 1, out)
    out.append("end")


def format_program(ir: A.ProgramIR) -> str:
    out: List[str] = [_decl(d) for d in ir.decls]
    for func in ir.funcs:
        out.append("")
        _func(func, out)
    if ir.main:
        out.append("")
        _func(A.FuncDecl("main", (), ir.main), out)
    return "\n".join(out) + "\n"

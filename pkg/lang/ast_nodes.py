# lang/ast_nodes.py
"""
Typed AST for graph programs (ProgramIR).
- All nodes are frozen dataclasses: structural equality, safe to share across threads
- `line` is carried for diagnostics and excluded from equality
- walk()/rewrite() give generic traversal for analyses and IR-to-IR passes
"""

from dataclasses import dataclass, field, fields, is_dataclass, replace
from typing import Callable, Iterator, Optional, Tuple, Union


# ---------------------------------------------------------------- types

@dataclass(frozen=True)
class ScalarType:
    name: str  # int | double | bool

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ArrayType:
    length: int
    scalar: ScalarType

    def __str__(self) -> str:
        return f"vector[{self.length}]({self.scalar})"


@dataclass(frozen=True)
class ElementType:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class VectorType:
    element: str
    value: Union[ScalarType, ArrayType]

    def __str__(self) -> str:
        return f"vector{{{self.element}}}({self.value})"


@dataclass(frozen=True)
class VertexSetType:
    element: str

    def __str__(self) -> str:
        return f"vertexset{{{self.element}}}"


@dataclass(frozen=True)
class EdgeSetType:
    element: str
    src: str
    dst: str
    weight: Optional[ScalarType] = None

    def __str__(self) -> str:
        tail = f",{self.weight}" if self.weight else ""
        return f"edgeset{{{self.element}}}({self.src},{self.dst}{tail})"


GtType = Union[ScalarType, ArrayType, ElementType, VectorType, VertexSetType, EdgeSetType]

INT = ScalarType("int")
DOUBLE = ScalarType("double")
BOOL = ScalarType("bool")


# ---------------------------------------------------------------- expressions

@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class FloatLit:
    value: float


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class Index:
    target: "Expr"
    index: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Unary:
    op: str  # '-' | 'not'
    operand: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: Tuple["Expr", ...] = ()


@dataclass(frozen=True)
class MethodCall:
    receiver: "Expr"
    method: str
    args: Tuple["Expr", ...] = ()


@dataclass(frozen=True)
class NewVertexSet:
    element: str
    size: "Expr"


@dataclass(frozen=True)
class EdgeSetApply:
    """A lazy from/to/filter chain, materialized only by its apply terminator."""
    edgeset: str
    apply_func: str
    from_set: Optional["Expr"] = None
    to_set: Optional["Expr"] = None
    edge_filter: Optional[str] = None
    src_filter: Optional[str] = None
    dst_filter: Optional[str] = None
    modified: bool = False
    tracked: Optional[str] = None
    dedup: bool = True
    line: int = field(default=0, compare=False)

    def same_chain(self, other: "EdgeSetApply") -> bool:
        return (self.edgeset, self.from_set, self.to_set, self.edge_filter, self.src_filter,
                self.dst_filter, self.modified, self.tracked, self.dedup) == (
                other.edgeset, other.from_set, other.to_set, other.edge_filter, other.src_filter,
                other.dst_filter, other.modified, other.tracked, other.dedup)


@dataclass(frozen=True)
class VertexSetOp:
    target: "Expr"
    op: str  # apply | filter
    func: str


Expr = Union[IntLit, FloatLit, BoolLit, Name, Index, Binary, Unary, Call, MethodCall,
             NewVertexSet, EdgeSetApply, VertexSetOp]


# ---------------------------------------------------------------- statements

@dataclass(frozen=True)
class VarDecl:
    name: str
    type: GtType
    init: Optional[Expr] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Assign:
    target: Expr
    value: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Reduce:
    target: Expr
    op: str  # one of tokens.REDUCTION_OPS
    value: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class For:
    var: str
    lo: Expr
    hi: Expr
    body: Tuple["Stmt", ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class While:
    cond: Expr
    body: Tuple["Stmt", ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Tuple["Stmt", ...]
    orelse: Tuple["Stmt", ...] = ()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Break:
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Labeled:
    label: str
    stmt: "Stmt"
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class NameNode:
    """Scope-only wrapper produced by loop fusion; no runtime behaviour."""
    label: str
    body: Tuple["Stmt", ...]
    line: int = field(default=0, compare=False)


Stmt = Union[VarDecl, Assign, Reduce, ExprStmt, For, While, If, Break, Labeled, NameNode]


# ---------------------------------------------------------------- declarations

@dataclass(frozen=True)
class ElementDecl:
    name: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ConstDecl:
    """Top-level scalar; `mutable` ones are globals that main may reassign."""
    name: str
    type: ScalarType
    value: Expr
    mutable: bool = False
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class VectorDecl:
    name: str
    element: str
    value_type: Union[ScalarType, ArrayType]
    init: Optional[Expr] = None
    const: bool = False
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SetDecl:
    name: str
    type: Union[VertexSetType, EdgeSetType]
    init: Expr
    line: int = field(default=0, compare=False)


Decl = Union[ElementDecl, ConstDecl, VectorDecl, SetDecl]


@dataclass(frozen=True)
class Param:
    name: str
    type: GtType


@dataclass(frozen=True)
class FuncDecl:
    name: str
    params: Tuple[Param, ...]
    body: Tuple[Stmt, ...]
    output: Optional[Param] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ProgramIR:
    decls: Tuple[Decl, ...] = ()
    funcs: Tuple[FuncDecl, ...] = ()
    main: Tuple[Stmt, ...] = ()

    @property
    def element_decls(self) -> Tuple[ElementDecl, ...]:
        return tuple(d for d in self.decls if isinstance(d, ElementDecl))

    @property
    def vector_decls(self) -> Tuple[VectorDecl, ...]:
        return tuple(d for d in self.decls if isinstance(d, VectorDecl))

    @property
    def set_decls(self) -> Tuple[SetDecl, ...]:
        return tuple(d for d in self.decls if isinstance(d, SetDecl))

    @property
    def const_decls(self) -> Tuple[ConstDecl, ...]:
        return tuple(d for d in self.decls if isinstance(d, ConstDecl))

    def func(self, name: str) -> Optional[FuncDecl]:
        for f in self.funcs:
            if f.name == name:
                return f
        return None

    def vector(self, name: str) -> Optional[VectorDecl]:
        for v in self.vector_decls:
            if v.name == name:
                return v
        return None

    def edgeset_decls(self) -> Tuple[SetDecl, ...]:
        return tuple(d for d in self.set_decls if isinstance(d.type, EdgeSetType))


# ---------------------------------------------------------------- generic traversal

def _is_node(value) -> bool:
    return is_dataclass(value) and not isinstance(value, type)


def children(node) -> Iterator:
    for f in fields(node):
        value = getattr(node, f.name)
        if isinstance(value, tuple):
            for item in value:
                if _is_node(item):
                    yield item
        elif _is_node(value):
            yield value


def walk(node) -> Iterator:
    """Pre-order over every nested node, types included."""
    yield node
    for child in children(node):
        yield from walk(child)


def rewrite(node, fn: Callable):
    """Bottom-up rebuild: children are rewritten first, then fn(node) replaces the node."""
    changes = {}
    for f in fields(node):
        value = getattr(node, f.name)
        if isinstance(value, tuple):
            new_items = tuple(rewrite(item, fn) if _is_node(item) else item for item in value)
            if any(a is not b for a, b in zip(new_items, value)):
                changes[f.name] = new_items
        elif _is_node(value):
            new_value = rewrite(value, fn)
            if new_value is not value:
                changes[f.name] = new_value
    if changes:
        node = replace(node, **changes)
    return fn(node)


def rename_names(node, mapping: dict):
    """Alpha-rename Name references (and loop variables) according to mapping."""
    def _fn(n):
        if isinstance(n, Name) and n.id in mapping:
            return Name(mapping[n.id])
        if isinstance(n, For) and n.var in mapping:
            return replace(n, var=mapping[n.var])
        if isinstance(n, VarDecl) and n.name in mapping:
            return replace(n, name=mapping[n.name])
        return n
    return rewrite(node, _fn)


def vector_base(expr) -> Optional[str]:
    """`x[a][b]` -> 'x' when the innermost target is a plain name."""
    while isinstance(expr, Index):
        expr = expr.target
    return expr.id if isinstance(expr, Name) else None


def index_chain(expr) -> Tuple:
    """`x[a][b]` -> (a, b)."""
    out = []
    while isinstance(expr, Index):
        out.append(expr.index)
        expr = expr.target
    return tuple(reversed(out))


def clone(node):
    """Fresh node objects throughout; equal to the input but sharing no identity."""
    return rewrite(node, lambda n: replace(n))


def traversal_of(stmt) -> Optional[EdgeSetApply]:
    """The edgeset-apply chain a statement evaluates, if it is one."""
    if isinstance(stmt, Labeled):
        return traversal_of(stmt.stmt)
    expr = None
    if isinstance(stmt, ExprStmt):
        expr = stmt.expr
    elif isinstance(stmt, Assign):
        expr = stmt.value
    elif isinstance(stmt, VarDecl):
        expr = stmt.init
    return expr if isinstance(expr, EdgeSetApply) else None

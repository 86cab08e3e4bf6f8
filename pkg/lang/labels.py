# lang/labels.py
"""
Scoped label resolution.
- A label path "l3:l1:s1" is matched segment by segment against labeled statements and name nodes
- Unlabeled compound statements (for/while/if bodies) are transparent scopes
- Resolution walks the current IR, so it works after fusion/splitting
"""

from dataclasses import dataclass
from typing import List, Tuple, Union

from lang import ast_nodes as A
from lang.errors import AmbiguousLabel, LabelNotFound

# A statement handle is the index path from ProgramIR.main to the labeled node.
# Each step is (position in the current statement list, name of the body field to descend into).
Path = Tuple[Tuple[int, str], ...]


@dataclass(frozen=True)
class Label:
    path: Tuple[str, ...]

    @staticmethod
    def parse(text: str) -> "Label":
        parts = tuple(p for p in text.split(":"))
        if not parts or any(not p for p in parts):
            raise LabelNotFound(text)
        return Label(parts)

    def __str__(self) -> str:
        return ":".join(self.path)


@dataclass(frozen=True)
class StatementHandle:
    label: str
    path: Path
    node: Union[A.Labeled, A.NameNode]

    @property
    def stmt(self) -> A.Stmt:
        """The statement the label names (unwrapped from Labeled)."""
        return self.node.stmt if isinstance(self.node, A.Labeled) else self.node


def _label_of(stmt) -> Union[str, None]:
    if isinstance(stmt, (A.Labeled, A.NameNode)):
        return stmt.label
    return None


def _bodies(stmt) -> List[Tuple[str, Tuple]]:
    """Nested statement lists of a compound statement (unwrapping labels)."""
    if isinstance(stmt, A.Labeled):
        return [("stmt", (stmt.stmt,))]
    if isinstance(stmt, (A.For, A.While, A.NameNode)):
        return [("body", stmt.body)]
    if isinstance(stmt, A.If):
        return [("then", stmt.then), ("orelse", stmt.orelse)]
    return []


def _search(stmts: Tuple, segments: Tuple[str, ...], prefix: Path) -> List[Tuple[Path, object]]:
    found = []
    head = segments[0]
    for i, stmt in enumerate(stmts):
        here = prefix + ((i, ""),)
        if _label_of(stmt) == head:
            if len(segments) == 1:
                found.append((here, stmt))
            else:
                for fname, body in _inner_bodies(stmt):
                    found.extend(_search(body, segments[1:], prefix + ((i, fname),)))
            continue
        for fname, body in _bodies(stmt):
            found.extend(_search(body, segments, prefix + ((i, fname),)))
    return found


def _inner_bodies(stmt) -> List[Tuple[str, Tuple]]:
    """Bodies that open the scope named by a labeled statement."""
    if isinstance(stmt, A.NameNode):
        return [("body", stmt.body)]
    if isinstance(stmt, A.Labeled):
        inner = stmt.stmt
        if isinstance(inner, (A.For, A.While, A.NameNode)):
            return [("stmt.body", inner.body)]
        if isinstance(inner, A.If):
            return [("stmt.then", inner.then), ("stmt.orelse", inner.orelse)]
    return []


def find_all(ir: A.ProgramIR, label: Union[str, Label]) -> List[StatementHandle]:
    lab = label if isinstance(label, Label) else Label.parse(label)
    return [StatementHandle(str(lab), path, node) for path, node in _search(ir.main, lab.path, ())]


def resolve_label(ir: A.ProgramIR, label: Union[str, Label]) -> StatementHandle:
    matches = find_all(ir, label)
    if not matches:
        raise LabelNotFound(str(label))
    if len(matches) > 1:
        raise AmbiguousLabel(str(label), len(matches))
    return matches[0]


def qualified_labels(stmts: Tuple, prefix: Tuple[str, ...] = ()) -> List[Tuple[Tuple[str, ...], object]]:
    """Every (fully-qualified path, node) pair for labeled statements and name nodes."""
    out = []
    for stmt in stmts:
        label = _label_of(stmt)
        if label is not None:
            path = prefix + (label,)
            out.append((path, stmt))
            for _, body in _inner_bodies(stmt):
                out.extend(qualified_labels(body, path))
            continue
        for _, body in _bodies(stmt):
            out.extend(qualified_labels(body, prefix))
    return out


# ---------------------------------------------------------------- path-based rewriting

def _get_list(node, fname: str) -> Tuple:
    obj = node
    for part in fname.split("."):
        obj = getattr(obj, part)
    return obj if isinstance(obj, tuple) else (obj,)


def _set_list(node, fname: str, new_list: Tuple):
    from dataclasses import replace

    parts = fname.split(".")
    if len(parts) == 1:
        if fname == "stmt":
            return replace(node, stmt=new_list[0]) if len(new_list) == 1 else _wrap_multi(node, new_list)
        return replace(node, **{fname: new_list})
    inner = getattr(node, parts[0])
    return replace(node, **{parts[0]: _set_list(inner, ".".join(parts[1:]), new_list)})


def _wrap_multi(node, new_list: Tuple):
    # a Labeled node holds one statement; a replacement of several is kept under a name node
    return A.NameNode(node.label, new_list, line=node.line)


def replace_at(stmts: Tuple, path: Path, new_stmts: Tuple) -> Tuple:
    """Replace the statement at `path` by zero or more statements."""
    (idx, fname), rest = path[0], path[1:]
    if not rest:
        return stmts[:idx] + tuple(new_stmts) + stmts[idx + 1:]
    node = stmts[idx]
    child_list = _get_list(node, fname)
    new_child = replace_at(child_list, rest, new_stmts)
    return stmts[:idx] + (_set_list(node, fname, new_child),) + stmts[idx + 1:]


def container_of(path: Path) -> Path:
    return path[:-1]

# lang/tokens.py
"""
Lexer for the algorithm and scheduling languages.
- One master regex, longest-match alternatives listed first
- `%` and `//` comments run to end of line and are dropped
- `#name#` becomes a LABEL token, `min=` / `asyncMin=` are single reduction tokens
"""

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List

from lang.errors import IllegalCharacter


class TokenType(Enum):
    IDENT = "identifier"
    INT = "integer"
    FLOAT = "float"
    STRING = "string"
    LABEL = "label"
    KEYWORD = "keyword"
    OP = "operator"
    EOF = "end of input"


KEYWORDS = frozenset({
    "element", "end", "const", "func", "var", "for", "in", "while", "if", "elif", "else",
    "true", "false", "vector", "vertexset", "edgeset", "new", "int", "double", "float",
    "bool", "schedule", "break", "and", "or", "not", "namenode",
})

REDUCTION_OPS = ("+=", "-=", "min=", "max=", "asyncMin=", "asyncMax=")

_TOKEN_SPEC = [
    ("WS", r"[ \t\r\f\v]+"),
    ("NEWLINE", r"\n"),
    ("COMMENT", r"%[^\n]*|//[^\n]*"),
    ("LABEL", r"#[A-Za-z_][A-Za-z0-9_]*#"),
    ("REDUCE", r"asyncMin=(?!=)|asyncMax=(?!=)|min=(?!=)|max=(?!=)"),
    ("FLOAT", r"\d+\.\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|\d+[eE][-+]?\d+"),
    ("INT", r"\d+"),
    ("IDENT", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("STRING", r'"[^"\n]*"'),
    ("OP", r"->|==|!=|<=|>=|&&|\|\||\+=|-=|[-+*/<>=!(){}\[\],;:.]"),
]
_MASTER = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in _TOKEN_SPEC))


@dataclass(frozen=True)
class Token:
    kind: TokenType
    value: str
    line: int
    col: int

    def describe(self) -> str:
        if self.kind == TokenType.EOF:
            return "end of input"
        return f"'{self.value}'"


def _scan(source: str) -> Iterator[Token]:
    line, line_start, pos = 1, 0, 0
    size = len(source)
    while pos < size:
        match = _MASTER.match(source, pos)
        if match is None:
            raise IllegalCharacter(f"illegal character {source[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        text = match.group()
        col = pos - line_start + 1
        pos = match.end()
        if kind == "NEWLINE":
            line += 1
            line_start = pos
            continue
        if kind in ("WS", "COMMENT"):
            continue
        if kind == "LABEL":
            yield Token(TokenType.LABEL, text[1:-1], line, col)
        elif kind == "REDUCE":
            yield Token(TokenType.OP, text, line, col)
        elif kind == "IDENT":
            ttype = TokenType.KEYWORD if text in KEYWORDS else TokenType.IDENT
            yield Token(ttype, text, line, col)
        elif kind == "STRING":
            yield Token(TokenType.STRING, text[1:-1], line, col)
        else:
            yield Token(TokenType[kind], text, line, col)
    yield Token(TokenType.EOF, "", line, pos - line_start + 1)


def tokenize(source: str) -> List[Token]:
    """Token list ending in a single EOF token; empty input yields just EOF."""
    return list(_scan(source))

# lang/errors.py
"""
Exception hierarchy shared by every graphweave layer.
- CompileError: anything wrong with the program, schedule or IR (CLI exit 1)
- GraphError: unreadable graph inputs (CLI exit 1)
- ExecutionError: failures while a compiled program runs (CLI exit 2)
"""

from typing import Iterable, Optional


class GraphWeaveError(Exception):
    exit_code = 1


class CompileError(GraphWeaveError):
    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"{line}:{col}: " if col is not None else f"line {line}: "
        super().__init__(f"{where}{message}")


class IllegalCharacter(CompileError):
    pass


class GtSyntaxError(CompileError):
    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None,
                 expected: Iterable[str] = ()):
        self.expected = sorted(set(expected))
        if self.expected:
            message = f"{message} (expected one of: {', '.join(self.expected)})"
        super().__init__(message, line, col)


class UnknownSchedulingFunction(CompileError):
    pass


class UnknownOption(CompileError):
    pass


class ArityError(CompileError):
    pass


class GtTypeError(CompileError):
    pass


class MixedAccessError(CompileError):
    def __init__(self, vector: str, func: str, detail: str = ""):
        self.vector = vector
        self.func = func
        msg = f"vector '{vector}' has mixed accesses in function '{func}'"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class LabelNotFound(CompileError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"label '{label}' not found")


class AmbiguousLabel(CompileError):
    def __init__(self, label: str, count: int):
        self.label = label
        super().__init__(f"label '{label}' matches {count} statements")


class InvalidCombination(CompileError):
    pass


class TransformError(CompileError):
    pass


class NotAForLoop(TransformError):
    pass


class NonSiblingLoops(TransformError):
    pass


class SplitOutOfRange(TransformError):
    pass


class IncompatibleChains(TransformError):
    pass


class IncompatibleRanges(TransformError):
    pass


class UnknownVector(TransformError):
    pass


class AlreadyFused(TransformError):
    pass


class MixedElementKinds(TransformError):
    pass


class GraphError(GraphWeaveError):
    pass


class ParseError(GraphError):
    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        where = f"{path}:" if path else ""
        where += f"{line}: " if line is not None else (" " if path else "")
        super().__init__(f"{where}{message}")


class NegativeId(ParseError):
    pass


class ZeroSegments(GraphError):
    pass


class CacheFormatError(GraphError):
    pass


class ExecutionError(GraphWeaveError):
    exit_code = 2


class MissingSSGs(ExecutionError):
    pass


class VectorNotFound(ExecutionError):
    pass


class GtRuntimeError(ExecutionError):
    def __init__(self, message: str, label: Optional[str] = None):
        self.label = label
        prefix = f"[{label}] " if label else ""
        super().__init__(f"{prefix}{message}")


class BudgetZero(ExecutionError):
    pass

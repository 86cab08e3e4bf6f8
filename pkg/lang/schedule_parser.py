# lang/schedule_parser.py
"""
Scheduling language: `program->configApplyDirection("s1","DensePull-SparsePush")->...;`
- parse_schedule(tokens) / parse_schedule_text(text) -> Schedule
- option strings are checked against closed vocabularies (UnknownOption)
- Schedule.to_text() renders calls back to the same grammar
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from lang.errors import ArityError, GtSyntaxError, UnknownOption, UnknownSchedulingFunction
from lang.tokens import Token, TokenType, tokenize

DIRECTIONS = ("SparsePush", "DensePush", "DensePull", "DensePull-SparsePush", "DensePush-SparsePush")
VARIANT_DIRECTIONS = ("SparsePush", "DensePush", "DensePull")
PARALLEL_OPTIONS = ("serial", "dynamic-vertex-parallel", "static-vertex-parallel",
                    "edge-aware-dynamic-vertex-parallel", "edge-parallel")
DENSE_LAYOUTS = ("bool-array", "bitvector")
DENSE_SIDES = ("both", "src-vertexset", "dst-vertexset")
SSG_SCHEMES = ("fixed-vertex-count", "edge-aware-vertex-count")
NUMA_OPTIONS = ("serial", "static-parallel", "dynamic-parallel")

CONFIG_FUNCTIONS = ("configApplyDirection", "configApplyParallelization", "configApplyDenseVertexSet",
                    "configApplyNumSSG", "configApplyNUMA")
TRANSFORM_FUNCTIONS = ("fuseFields", "fuseForLoop", "fuseApplyFunctions", "splitForLoop")
SCHEDULING_FUNCTIONS = CONFIG_FUNCTIONS + TRANSFORM_FUNCTIONS

DEFAULT_GRAIN = 256


@dataclass(frozen=True)
class ScheduleCall:
    func: str
    label: Optional[str] = None
    config: Optional[str] = None
    vertexset: Optional[str] = None
    direction: Optional[str] = None
    grain: Optional[int] = None
    num_segments: Optional[int] = None
    split_point: Optional[int] = None
    targets: Tuple[str, ...] = ()
    new_name: Optional[str] = None
    fields: Tuple[str, ...] = ()
    line: int = field(default=0, compare=False)

    def to_text(self) -> str:
        q = lambda s: f'"{s}"'
        if self.func == "fuseFields":
            args = ["{" + ",".join(q(f) for f in self.fields) + "}"]
        elif self.func in ("fuseForLoop", "fuseApplyFunctions"):
            args = [q(t) for t in self.targets] + [q(self.new_name)]
        elif self.func == "splitForLoop":
            args = [q(self.label)] + [q(t) for t in self.targets] + [str(self.split_point)]
        else:
            args = [q(self.label), q(self.config)]
            if self.func == "configApplyDenseVertexSet" and self.vertexset:
                args.append(q(self.vertexset))
            if self.grain is not None:
                args.append(str(self.grain))
            if self.num_segments is not None:
                args.append(str(self.num_segments))
            if self.direction:
                args.append(q(self.direction))
        return f"{self.func}({','.join(args)})"


@dataclass(frozen=True)
class Schedule:
    calls: Tuple[ScheduleCall, ...] = ()

    def __len__(self) -> int:
        return len(self.calls)

    def to_text(self) -> str:
        if not self.calls:
            return ""
        return "program->" + "\n    ->".join(c.to_text() for c in self.calls) + ";\n"

    def extend(self, other: "Schedule") -> "Schedule":
        return Schedule(self.calls + other.calls)


class _ScheduleParser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != TokenType.EOF:
            self.pos += 1
        return tok

    def _expect(self, value: str) -> Token:
        if self.tok.value != value or self.tok.kind not in (TokenType.OP, TokenType.KEYWORD, TokenType.IDENT):
            raise GtSyntaxError(f"expected '{value}', found {self.tok.describe()}",
                                self.tok.line, self.tok.col, [value])
        return self._advance()

    def parse(self) -> Schedule:
        calls: List[ScheduleCall] = []
        while self.tok.kind != TokenType.EOF:
            self._expect("program")
            while self.tok.value == "->" and self.tok.kind == TokenType.OP:
                self._advance()
                calls.append(self._call())
            if self.tok.kind != TokenType.EOF:
                self._expect(";")
        return Schedule(tuple(calls))

    def _call(self) -> ScheduleCall:
        tok = self.tok
        if tok.kind != TokenType.IDENT:
            raise GtSyntaxError(f"expected scheduling function, found {tok.describe()}", tok.line, tok.col)
        name = self._advance().value
        if name not in SCHEDULING_FUNCTIONS:
            raise UnknownSchedulingFunction(f"unknown scheduling function '{name}'", tok.line, tok.col)
        self._expect("(")
        args = []
        if self.tok.value != ")":
            while True:
                args.append(self._arg())
                if self.tok.value != ",":
                    break
                self._advance()
        self._expect(")")
        return _build_call(name, args, tok)

    def _arg(self):
        tok = self.tok
        if tok.kind == TokenType.STRING:
            self._advance()
            return ("str", tok.value)
        if tok.kind == TokenType.INT:
            self._advance()
            return ("int", int(tok.value))
        if tok.value == "{" and tok.kind == TokenType.OP:
            self._advance()
            names = []
            while self.tok.kind == TokenType.STRING:
                names.append(self._advance().value)
                if self.tok.value == ",":
                    self._advance()
            self._expect("}")
            return ("set", tuple(names))
        raise GtSyntaxError(f"expected string, integer or {{...}}, found {tok.describe()}",
                            tok.line, tok.col, ["string", "integer", "{"])


def _strings(args) -> List[str]:
    return [v for k, v in args if k == "str"]


def _ints(args) -> List[int]:
    return [v for k, v in args if k == "int"]


def _option(value: str, vocab: Tuple[str, ...], what: str, tok: Token) -> str:
    if value not in vocab:
        raise UnknownOption(f"unknown {what} option '{value}' (allowed: {', '.join(vocab)})", tok.line, tok.col)
    return value


def _arity(name: str, ok: bool, expected: str, tok: Token):
    if not ok:
        raise ArityError(f"{name} expects {expected}", tok.line, tok.col)


def _build_call(name: str, args, tok: Token) -> ScheduleCall:
    strs, ints = _strings(args), _ints(args)
    sets = [v for k, v in args if k == "set"]
    line = tok.line

    if name == "fuseFields":
        if sets:
            _arity(name, len(sets) == 1 and not strs and not ints, "one {...} set of vector names", tok)
            fields = tuple(sets[0])
        else:
            _arity(name, not ints, "vector names", tok)
            fields = tuple(strs)
        _arity(name, len(fields) > 0, "at least one vector name", tok)
        return ScheduleCall(name, fields=fields, line=line)
    _arity(name, not sets, "no {...} arguments", tok)

    if name in ("fuseForLoop", "fuseApplyFunctions"):
        _arity(name, len(strs) == 3 and not ints, "(label1, label2, fusedName)", tok)
        return ScheduleCall(name, targets=(strs[0], strs[1]), new_name=strs[2], line=line)

    if name == "splitForLoop":
        _arity(name, len(strs) == 3 and len(ints) == 1, "(label, label1, label2, splitPoint)", tok)
        return ScheduleCall(name, label=strs[0], targets=(strs[1], strs[2]), split_point=ints[0], line=line)

    _arity(name, len(strs) >= 2, "(label, option, ...)", tok)
    label, rest = strs[0], strs[1:]

    if name == "configApplyDirection":
        _arity(name, len(rest) == 1 and not ints, "(label, direction)", tok)
        return ScheduleCall(name, label=label, config=_option(rest[0], DIRECTIONS, "direction", tok), line=line)

    if name == "configApplyParallelization":
        _arity(name, len(rest) <= 2 and len(ints) <= 1, "(label, option[, grainSize][, direction])", tok)
        config = _option(rest[0], PARALLEL_OPTIONS, "parallelization", tok)
        direction = _option(rest[1], VARIANT_DIRECTIONS, "direction", tok) if len(rest) > 1 else None
        grain = ints[0] if ints else None
        if grain is not None and grain < 1:
            raise UnknownOption(f"grain size must be >= 1, got {grain}", tok.line, tok.col)
        return ScheduleCall(name, label=label, config=config, grain=grain, direction=direction, line=line)

    if name == "configApplyDenseVertexSet":
        _arity(name, len(rest) <= 3 and not ints, "(label, config[, vertexset][, direction])", tok)
        config = vertexset = direction = None
        for value in rest:
            if value in DENSE_LAYOUTS and config is None:
                config = value
            elif value in DENSE_SIDES and vertexset is None:
                vertexset = value
            elif value in VARIANT_DIRECTIONS and direction is None:
                direction = value
            else:
                raise UnknownOption(f"unknown or repeated dense vertexset option '{value}'", tok.line, tok.col)
        _arity(name, config is not None, "a layout option (bool-array or bitvector)", tok)
        return ScheduleCall(name, label=label, config=config, vertexset=vertexset or "both",
                            direction=direction, line=line)

    if name == "configApplyNumSSG":
        _arity(name, len(rest) <= 2 and len(ints) == 1, "(label, config, numSegments[, direction])", tok)
        config = _option(rest[0], SSG_SCHEMES, "segmenting", tok)
        direction = _option(rest[1], VARIANT_DIRECTIONS, "direction", tok) if len(rest) > 1 else None
        return ScheduleCall(name, label=label, config=config, num_segments=ints[0], direction=direction, line=line)

    # configApplyNUMA
    _arity(name, len(rest) <= 2 and not ints, "(label, config[, direction])", tok)
    config = _option(rest[0], NUMA_OPTIONS, "NUMA", tok)
    direction = _option(rest[1], VARIANT_DIRECTIONS, "direction", tok) if len(rest) > 1 else None
    return ScheduleCall(name, label=label, config=config, direction=direction, line=line)


def parse_schedule(tokens: List[Token]) -> Schedule:
    return _ScheduleParser(tokens).parse()


def parse_schedule_text(text: str) -> Schedule:
    """Parse a .sched file or inline schedule; a leading `schedule:` is tolerated."""
    tokens = tokenize(text)
    if tokens and tokens[0].kind == TokenType.KEYWORD and tokens[0].value == "schedule":
        if len(tokens) < 2 or tokens[1].value != ":":
            raise GtSyntaxError("expected ':' after 'schedule'", tokens[0].line, tokens[0].col, [":"])
        tokens = tokens[2:]
    return parse_schedule(tokens)

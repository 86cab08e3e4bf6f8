# lang/parser.py
"""
Recursive-descent parser for the algorithm language.
- parse_program(tokens) -> ProgramIR (stops at an optional `schedule:` section)
- parse_source(text) -> (ProgramIR, Schedule) for a whole .gt file
- edgeset chains (from/to/filter/srcFilter/dstFilter) must end in apply/applyModified
"""

from typing import Iterable, List, Optional, Set, Tuple

from lang import ast_nodes as A
from lang.errors import GtSyntaxError
from lang.tokens import REDUCTION_OPS, Token, TokenType, tokenize

_SCALARS = {"int": A.INT, "double": A.DOUBLE, "float": A.DOUBLE, "bool": A.BOOL}
_CHAIN_CLAUSES = ("from", "to", "filter", "srcFilter", "dstFilter")
_CHAIN_TERMINATORS = ("apply", "applyModified")
_STMT_END = ("end", "else", "elif")


class _EdgeChain:
    """Accumulates chain clauses until a terminator arrives."""

    def __init__(self, edgeset: str, line: int):
        self.edgeset = edgeset
        self.line = line
        self.clauses = {}

    def add(self, name: str, value, tok: Token):
        key = {"from": "from_set", "to": "to_set", "filter": "edge_filter",
               "srcFilter": "src_filter", "dstFilter": "dst_filter"}[name]
        if key in self.clauses:
            raise GtSyntaxError(f"duplicate '{name}' clause in edgeset chain", tok.line, tok.col)
        self.clauses[key] = value


class Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0
        self.edgesets: Set[str] = set()

    # ------------------------------------------------------------ token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _peek(self, offset: int = 1) -> Token:
        idx = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[idx]

    def _advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != TokenType.EOF:
            self.pos += 1
        return tok

    def _is(self, value: str, kind: Optional[TokenType] = None) -> bool:
        tok = self.tok
        if kind is not None and tok.kind != kind:
            return False
        return tok.kind in (TokenType.OP, TokenType.KEYWORD) and tok.value == value

    def _accept(self, value: str) -> Optional[Token]:
        if self._is(value):
            return self._advance()
        return None

    def _fail(self, what: str, expected: Iterable[str] = ()):
        tok = self.tok
        raise GtSyntaxError(f"{what}, found {tok.describe()}", tok.line, tok.col, expected)

    def _expect(self, value: str) -> Token:
        if not self._is(value):
            self._fail(f"expected '{value}'", [value])
        return self._advance()

    def _ident(self) -> str:
        if self.tok.kind != TokenType.IDENT:
            self._fail("expected identifier", ["identifier"])
        return self._advance().value

    def _int(self) -> int:
        if self.tok.kind != TokenType.INT:
            self._fail("expected integer", ["integer"])
        return int(self._advance().value)

    # ------------------------------------------------------------ program

    def parse_program(self) -> A.ProgramIR:
        decls: List = []
        funcs: List[A.FuncDecl] = []
        main: Tuple = ()
        while self.tok.kind != TokenType.EOF and not self._is("schedule"):
            if self._is("element"):
                tok = self._advance()
                name = self._ident()
                self._expect("end")
                decls.append(A.ElementDecl(name, line=tok.line))
            elif self._is("func"):
                func = self._func()
                if func.name == "main":
                    main = func.body
                else:
                    funcs.append(func)
            elif self._is("const") or (self.tok.kind == TokenType.IDENT and self._peek().value == ":"):
                decls.append(self._global_decl())
            else:
                self._fail("expected declaration", ["element", "const", "func", "schedule", "identifier"])
        return A.ProgramIR(decls=tuple(decls), funcs=tuple(funcs), main=main)

    def _global_decl(self):
        is_const = self._accept("const") is not None
        tok = self.tok
        name = self._ident()
        self._expect(":")
        gtype = self._type()
        init = None
        if self._accept("="):
            init = self._expr()
        self._expect(";")
        if isinstance(gtype, A.VectorType):
            return A.VectorDecl(name, gtype.element, gtype.value, init, const=is_const, line=tok.line)
        if isinstance(gtype, (A.VertexSetType, A.EdgeSetType)):
            if init is None:
                raise GtSyntaxError(f"set '{name}' needs an initializer", tok.line, tok.col)
            if isinstance(gtype, A.EdgeSetType):
                self.edgesets.add(name)
            return A.SetDecl(name, gtype, init, line=tok.line)
        if isinstance(gtype, A.ScalarType):
            if init is None:
                if is_const:
                    raise GtSyntaxError(f"const '{name}' needs an initializer", tok.line, tok.col)
                init = {"int": A.IntLit(0), "double": A.FloatLit(0.0), "bool": A.BoolLit(False)}[gtype.name]
            return A.ConstDecl(name, gtype, init, mutable=not is_const, line=tok.line)
        raise GtSyntaxError(f"cannot declare global '{name}' of type {gtype}", tok.line, tok.col)

    # ------------------------------------------------------------ types

    def _scalar(self) -> A.ScalarType:
        tok = self.tok
        if tok.kind == TokenType.KEYWORD and tok.value in _SCALARS:
            self._advance()
            return _SCALARS[tok.value]
        self._fail("expected scalar type", list(_SCALARS))

    def _value_type(self):
        if self._is("vector") and self._peek().value == "[":
            self._advance()
            self._expect("[")
            length = self._int()
            self._expect("]")
            self._expect("(")
            scalar = self._scalar()
            self._expect(")")
            return A.ArrayType(length, scalar)
        return self._scalar()

    def _type(self) -> A.GtType:
        tok = self.tok
        if tok.kind == TokenType.KEYWORD and tok.value in _SCALARS:
            return self._scalar()
        if self._accept("vector"):
            self._expect("{")
            elem = self._ident()
            self._expect("}")
            self._expect("(")
            value = self._value_type()
            self._expect(")")
            return A.VectorType(elem, value)
        if self._accept("vertexset"):
            self._expect("{")
            elem = self._ident()
            self._expect("}")
            return A.VertexSetType(elem)
        if self._accept("edgeset"):
            self._expect("{")
            elem = self._ident()
            self._expect("}")
            self._expect("(")
            src = self._ident()
            self._expect(",")
            dst = self._ident()
            weight = None
            if self._accept(","):
                weight = self._scalar()
            self._expect(")")
            return A.EdgeSetType(elem, src, dst, weight)
        if tok.kind == TokenType.IDENT:
            return A.ElementType(self._advance().value)
        self._fail("expected type", ["int", "double", "bool", "vector", "vertexset", "edgeset", "identifier"])

    # ------------------------------------------------------------ functions

    def _func(self) -> A.FuncDecl:
        tok = self._expect("func")
        name = self._ident()
        self._expect("(")
        params: List[A.Param] = []
        if not self._is(")"):
            while True:
                pname = self._ident()
                self._expect(":")
                params.append(A.Param(pname, self._type()))
                if not self._accept(","):
                    break
        self._expect(")")
        output = None
        if self._accept("->"):
            oname = self._ident()
            self._expect(":")
            output = A.Param(oname, self._type())
        body = self._block()
        self._expect("end")
        return A.FuncDecl(name, tuple(params), body, output, line=tok.line)

    # ------------------------------------------------------------ statements

    def _block(self) -> Tuple[A.Stmt, ...]:
        stmts = []
        while not (self.tok.kind == TokenType.KEYWORD and self.tok.value in _STMT_END):
            if self.tok.kind == TokenType.EOF:
                self._fail("unterminated block", ["end"])
            stmts.append(self._stmt())
        return tuple(stmts)

    def _stmt(self) -> A.Stmt:
        tok = self.tok
        if tok.kind == TokenType.LABEL:
            self._advance()
            if self._is("namenode"):
                self._advance()
                body = self._block()
                self._expect("end")
                return A.NameNode(tok.value, body, line=tok.line)
            return A.Labeled(tok.value, self._stmt(), line=tok.line)
        if self._accept("var"):
            name = self._ident()
            self._expect(":")
            vtype = self._type()
            init = self._expr() if self._accept("=") else None
            self._expect(";")
            if isinstance(vtype, A.EdgeSetType):
                self.edgesets.add(name)
            return A.VarDecl(name, vtype, init, line=tok.line)
        if self._accept("for"):
            var = self._ident()
            self._expect("in")
            lo = self._expr()
            self._expect(":")
            hi = self._expr()
            body = self._block()
            self._expect("end")
            return A.For(var, lo, hi, body, line=tok.line)
        if self._accept("while"):
            cond = self._expr()
            body = self._block()
            self._expect("end")
            return A.While(cond, body, line=tok.line)
        if self._accept("if"):
            stmt = self._if_tail(tok)
            self._expect("end")
            return stmt
        if self._accept("break"):
            self._expect(";")
            return A.Break(line=tok.line)
        if self._is("namenode"):
            self._fail("namenode requires a label", ["label"])
        target = self._expr()
        if self._accept("="):
            value = self._expr()
            self._expect(";")
            return A.Assign(target, value, line=tok.line)
        if self.tok.kind == TokenType.OP and self.tok.value in REDUCTION_OPS:
            op = self._advance().value
            value = self._expr()
            self._expect(";")
            return A.Reduce(target, op, value, line=tok.line)
        self._expect(";")
        return A.ExprStmt(target, line=tok.line)

    def _if_tail(self, tok: Token) -> A.If:
        cond = self._expr()
        then = self._block()
        orelse: Tuple = ()
        if self._is("elif"):
            elif_tok = self._advance()
            orelse = (self._if_tail(elif_tok),)
        elif self._accept("else"):
            orelse = self._block()
        return A.If(cond, then, orelse, line=tok.line)

    # ------------------------------------------------------------ expressions

    def _expr(self):
        return self._or()

    def _or(self):
        left = self._and()
        while self._is("||") or self._is("or"):
            self._advance()
            left = A.Binary("or", left, self._and())
        return left

    def _and(self):
        left = self._equality()
        while self._is("&&") or self._is("and"):
            self._advance()
            left = A.Binary("and", left, self._equality())
        return left

    def _equality(self):
        left = self._comparison()
        while self._is("==") or self._is("!="):
            op = self._advance().value
            left = A.Binary(op, left, self._comparison())
        return left

    def _comparison(self):
        left = self._additive()
        while self.tok.kind == TokenType.OP and self.tok.value in ("<", ">", "<=", ">="):
            op = self._advance().value
            left = A.Binary(op, left, self._additive())
        return left

    def _additive(self):
        left = self._multiplicative()
        while self._is("+") or self._is("-"):
            op = self._advance().value
            left = A.Binary(op, left, self._multiplicative())
        return left

    def _multiplicative(self):
        left = self._unary()
        while self._is("*") or self._is("/"):
            op = self._advance().value
            left = A.Binary(op, left, self._unary())
        return left

    def _unary(self):
        if self._accept("-"):
            operand = self._unary()
            if isinstance(operand, A.IntLit):
                return A.IntLit(-operand.value)
            if isinstance(operand, A.FloatLit):
                return A.FloatLit(-operand.value)
            return A.Unary("-", operand)
        if self._is("!") or self._is("not"):
            self._advance()
            return A.Unary("not", self._unary())
        return self._postfix()

    def _args(self) -> Tuple:
        self._expect("(")
        args = []
        if not self._is(")"):
            while True:
                args.append(self._expr())
                if not self._accept(","):
                    break
        self._expect(")")
        return tuple(args)

    def _func_ref(self, arg, method: str, tok: Token) -> str:
        if not isinstance(arg, A.Name):
            raise GtSyntaxError(f"'{method}' expects a function name", tok.line, tok.col)
        return arg.id

    def _postfix(self):
        expr = self._primary()
        chain: Optional[_EdgeChain] = None
        if isinstance(expr, A.Name) and expr.id in self.edgesets:
            chain = _EdgeChain(expr.id, self.tok.line)
        while True:
            if self._is("["):
                if chain is not None and chain.clauses:
                    self._fail("cannot index an edgeset chain")
                self._advance()
                index = self._expr()
                self._expect("]")
                expr = A.Index(expr, index)
                chain = None
            elif self._is("."):
                self._advance()
                tok = self.tok
                method = self._ident()
                args = self._args() if self._is("(") else ()
                if chain is not None and (method in _CHAIN_CLAUSES or method in _CHAIN_TERMINATORS):
                    expr = self._chain_step(chain, method, args, tok)
                    if isinstance(expr, A.EdgeSetApply):
                        chain = None
                    continue
                if chain is not None and chain.clauses:
                    raise GtSyntaxError(f"'{method}' is not an edgeset chain operator", tok.line, tok.col)
                chain = None
                if method in ("apply", "filter") and len(args) == 1:
                    expr = A.VertexSetOp(expr, method, self._func_ref(args[0], method, tok))
                else:
                    expr = A.MethodCall(expr, method, args)
            else:
                break
        if chain is not None and chain.clauses:
            tok = self.tok
            raise GtSyntaxError("edgeset chain must end with apply or applyModified", tok.line, tok.col,
                                _CHAIN_TERMINATORS)
        return expr

    def _chain_step(self, chain: _EdgeChain, method: str, args: Tuple, tok: Token):
        if method in ("from", "to"):
            if len(args) != 1:
                raise GtSyntaxError(f"'{method}' takes one vertexset", tok.line, tok.col)
            chain.add(method, args[0], tok)
            return A.Name(chain.edgeset)
        if method in ("filter", "srcFilter", "dstFilter"):
            if len(args) != 1:
                raise GtSyntaxError(f"'{method}' takes one function", tok.line, tok.col)
            chain.add(method, self._func_ref(args[0], method, tok), tok)
            return A.Name(chain.edgeset)
        if method == "apply":
            if len(args) != 1:
                raise GtSyntaxError("'apply' takes one function", tok.line, tok.col)
            return A.EdgeSetApply(chain.edgeset, self._func_ref(args[0], method, tok),
                                  line=chain.line, **chain.clauses)
        if len(args) not in (2, 3):
            raise GtSyntaxError("'applyModified' takes (function, vector[, true])", tok.line, tok.col)
        func = self._func_ref(args[0], method, tok)
        tracked = self._func_ref(args[1], method, tok)
        dedup = True
        if len(args) == 3:
            if not isinstance(args[2], A.BoolLit):
                raise GtSyntaxError("third 'applyModified' argument must be true or false", tok.line, tok.col)
            dedup = not args[2].value
        return A.EdgeSetApply(chain.edgeset, func, modified=True, tracked=tracked, dedup=dedup,
                              line=chain.line, **chain.clauses)

    def _primary(self):
        tok = self.tok
        if tok.kind == TokenType.INT:
            self._advance()
            return A.IntLit(int(tok.value))
        if tok.kind == TokenType.FLOAT:
            self._advance()
            return A.FloatLit(float(tok.value))
        if self._accept("true"):
            return A.BoolLit(True)
        if self._accept("false"):
            return A.BoolLit(False)
        if self._accept("("):
            expr = self._expr()
            self._expect(")")
            return expr
        if self._accept("new"):
            self._expect("vertexset")
            self._expect("{")
            elem = self._ident()
            self._expect("}")
            self._expect("(")
            size = self._expr()
            self._expect(")")
            return A.NewVertexSet(elem, size)
        if tok.kind == TokenType.IDENT:
            self._advance()
            if self._is("("):
                return A.Call(tok.value, self._args())
            return A.Name(tok.value)
        self._fail("expected expression", ["literal", "identifier", "(", "new"])


def parse_program(tokens: List[Token]) -> A.ProgramIR:
    return Parser(tokens).parse_program()


def parse_source(text: str):
    """Parse a .gt file: program plus optional trailing `schedule:` section."""
    from lang.schedule_parser import Schedule, parse_schedule

    tokens = tokenize(text)
    parser = Parser(tokens)
    program = parser.parse_program()
    schedule = Schedule()
    if parser._is("schedule"):
        parser._advance()
        parser._expect(":")
        schedule = parse_schedule(tokens[parser.pos:])
    return program, schedule

"""The straight-line expression DSL: tokenizer, parser, renderer and lowering.

Source is a sequence of statements ``name := expr`` separated by newlines or
``;``.  The last item may instead be a bare expression, which becomes the
sole output under the name ``y``.  See ``docs/grammar.md`` for the EBNF.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from .core import FUNCTIONS, Graph, GraphBuilder, Op, fmt_real, prune
from .errors import SourceError

IMPLICIT_OUTPUT = "y"

_FUNC_OPS = {name: op for op, name in FUNCTIONS.items()}
_BINARY_OPS = {"+": Op.ADD, "-": Op.SUB, "*": Op.MUL, "/": Op.DIV, "^": Op.POW}

_NUMBER = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


# -- expression trees ---------------------------------------------------------
# Positions are carried for error messages but excluded from equality, so
# structurally equal trees compare equal regardless of layout.


@dataclass(frozen=True)
class Num:
    value: float
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Name:
    id: str
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


Expr = Union[Num, Name, Neg, BinOp, Call]


@dataclass(frozen=True)
class Statement:
    target: str
    expr: Expr
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Program:
    statements: tuple[Statement, ...]
    free_vars: tuple[str, ...]
    outputs: tuple[str, ...]
    implicit_output: bool = False


# -- tokenizer ----------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # NUM IDENT FUNC OP ASSIGN SEP EOF
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, i = 1, 0, 0
    n = len(source)
    while i < n:
        c = source[i]
        col = i - line_start + 1
        if c == "\n":
            tokens.append(Token("SEP", "\n", line, col))
            line, line_start = line + 1, i + 1
            i += 1
        elif c.isspace():
            i += 1
        elif c == "#":
            while i < n and source[i] != "\n":
                i += 1
        elif c == ";":
            tokens.append(Token("SEP", ";", line, col))
            i += 1
        elif c == ":":
            if source.startswith(":=", i):
                tokens.append(Token("ASSIGN", ":=", line, col))
                i += 2
            else:
                raise SourceError("lex", line, col, "expected ':=' after ':'")
        elif c in "+-*/^()":
            tokens.append(Token("OP", c, line, col))
            i += 1
        elif c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            m = _NUMBER.match(source, i)
            i = m.end()
            if i < n and (source[i].isalpha() or source[i] == "_"):
                raise SourceError(
                    "lex", line, i - line_start + 1,
                    f"implicit multiplication is not supported; write '{m.group()}*{source[i]}...'",
                )
            tokens.append(Token("NUM", m.group(), line, col))
        elif c.isascii() and c.isalpha():
            m = _IDENT.match(source, i)
            text = m.group()
            tokens.append(Token("FUNC" if text in _FUNC_OPS else "IDENT", text, line, col))
            i = m.end()
        elif c == "_":
            raise SourceError("lex", line, col, "identifiers must start with a letter ('_' names are reserved)")
        else:
            raise SourceError("lex", line, col, f"unexpected character {c!r}")
    if n == 0:
        tokens.append(Token("EOF", "", 1, 1))
    else:
        # EOF is reported at the last character so positions stay inside the text
        last_line = source.count("\n", 0, n - 1) + 1
        tokens.append(Token("EOF", "", last_line, n - 1 - source.rfind("\n", 0, n - 1)))
    return tokens


# -- parser -------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, tok: Token, message: str) -> SourceError:
        return SourceError("syntax", tok.line, tok.col, message)

    def expect_op(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind != "OP" or tok.text != text:
            raise self.error(tok, f"expected '{text}', found {_describe(tok)}")
        return self.advance()

    def items(self) -> list[tuple[str | None, Expr, tuple[int, int]]]:
        items = []
        while True:
            while self.peek().kind == "SEP":
                self.advance()
            tok = self.peek()
            if tok.kind == "EOF":
                return items
            if items and items[-1][0] is None:
                raise self.error(tok, "a bare expression is only allowed as the final line")
            if tok.kind == "IDENT" and self.peek(1).kind == "ASSIGN":
                self.advance()
                self.advance()
                items.append((tok.text, self.expr(), (tok.line, tok.col)))
            else:
                items.append((None, self.expr(), (tok.line, tok.col)))
            end = self.peek()
            if end.kind not in ("SEP", "EOF"):
                if end.kind in ("NUM", "IDENT", "FUNC") or (end.kind == "OP" and end.text == "("):
                    raise self.error(end, "implicit multiplication is not supported; write '*' explicitly")
                raise self.error(end, f"unexpected {_describe(end)}")

    def expr(self) -> Expr:
        left = self.term()
        while self.peek().kind == "OP" and self.peek().text in "+-":
            tok = self.advance()
            left = BinOp(tok.text, left, self.term(), (tok.line, tok.col))
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek().kind == "OP" and self.peek().text in "*/":
            tok = self.advance()
            left = BinOp(tok.text, left, self.unary(), (tok.line, tok.col))
        return left

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "-":
            self.advance()
            return Neg(self.unary(), (tok.line, tok.col))
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "^":
            self.advance()
            # the exponent is a unary, which makes ^ right-associative
            return BinOp("^", base, self.unary(), (tok.line, tok.col))
        return base

    def primary(self) -> Expr:
        tok = self.peek()
        pos = (tok.line, tok.col)
        if tok.kind == "NUM":
            self.advance()
            return Num(float(tok.text), pos)
        if tok.kind == "IDENT":
            self.advance()
            if self.peek().kind == "ASSIGN":
                raise self.error(self.peek(), "assignment is only allowed at the start of a statement")
            return Name(tok.text, pos)
        if tok.kind == "FUNC":
            self.advance()
            if not (self.peek().kind == "OP" and self.peek().text == "("):
                raise self.error(self.peek(), f"expected '(' after function {tok.text!r}")
            self.advance()
            arg = self.expr()
            self.expect_op(")")
            return Call(tok.text, arg, pos)
        if tok.kind == "OP" and tok.text == "(":
            self.advance()
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise self.error(tok, f"expected an expression, found {_describe(tok)}")


def _describe(tok: Token) -> str:
    if tok.kind == "EOF":
        return "end of input"
    if tok.kind == "SEP":
        return "end of line" if tok.text == "\n" else "';'"
    return repr(tok.text)


def _names_in(expr: Expr):
    match expr:
        case Name():
            yield expr
        case Neg(operand=e) | Call(arg=e):
            yield from _names_in(e)
        case BinOp(left=a, right=b):
            yield from _names_in(a)
            yield from _names_in(b)


def parse(source: str) -> Program:
    """Parse DSL source into a scope-checked :class:`Program`."""
    items = _Parser(tokenize(source)).items()
    if not items:
        raise SourceError("syntax", 1, 1, "empty program")
    implicit = items[-1][0] is None
    if implicit:
        _, expr, pos = items[-1]
        items[-1] = (IMPLICIT_OUTPUT, expr, pos)
    targets = {t for t, _, _ in items}
    assigned: set[str] = set()
    free: list[str] = []
    statements = []
    for target, expr, pos in items:
        for name in _names_in(expr):
            if name.id in assigned or name.id in free:
                continue
            if name.id in targets:
                if implicit and name.id == IMPLICIT_OUTPUT and target == IMPLICIT_OUTPUT:
                    msg = f"{name.id!r} is the implicit output name and cannot be used as an input"
                else:
                    msg = f"{name.id!r} is used before it is assigned"
                raise SourceError("scope", *name.pos, msg)
            free.append(name.id)
        if target in assigned:
            raise SourceError("scope", *pos, f"{target!r} is assigned more than once")
        assigned.add(target)
        statements.append(Statement(target, expr, pos))
    outputs = (IMPLICIT_OUTPUT,) if implicit else tuple(s.target for s in statements)
    return Program(tuple(statements), tuple(free), outputs, implicit)


# -- canonical rendering ------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(expr: Expr) -> int:
    match expr:
        case BinOp(op=op):
            return _PREC[op]
        case Neg():
            return 3
    return 5


def render_expr(expr: Expr) -> str:
    def wrap(e: Expr, need: bool) -> str:
        s = render_expr(e)
        return f"({s})" if need else s

    match expr:
        case Num(value=v):
            return fmt_real(v)
        case Name(id=name):
            return name
        case Call(func=f, arg=a):
            return f"{f}({render_expr(a)})"
        case Neg(operand=e):
            return "-" + wrap(e, _prec(e) < 3)
        case BinOp(op="^", left=a, right=b):
            return f"{wrap(a, _prec(a) < 5)}^{wrap(b, _prec(b) < 3)}"
        case BinOp(op=op, left=a, right=b):
            p = _PREC[op]
            return f"{wrap(a, _prec(a) < p)} {op} {wrap(b, _prec(b) <= p)}"
    raise TypeError(f"not an expression: {expr!r}")


def render(program: Program) -> str:
    """Canonical source text; parsing it yields an equal :class:`Program`."""
    lines = []
    for k, stmt in enumerate(program.statements):
        if program.implicit_output and k == len(program.statements) - 1:
            lines.append(render_expr(stmt.expr))
        else:
            lines.append(f"{stmt.target} := {render_expr(stmt.expr)}")
    return "\n".join(lines) + "\n"


# -- lowering -----------------------------------------------------------------


@dataclass(frozen=True)
class NameMap:
    """Bidirectional identifier <-> NodeId map produced by :func:`lower`."""

    by_name: dict[str, int]
    output_names: tuple[str, ...]

    def names_of(self, node: int) -> list[str]:
        return [name for name, i in self.by_name.items() if i == node]

    def node(self, name: str) -> int:
        return self.by_name[name]


def lower(program: Program) -> tuple[Graph, NameMap]:
    """Lower a program to a graph with one node per source operation.

    Operation nodes are numbered in as-soon-as-possible wavefront order
    (by longest path from the inputs, ties broken by source order), which is
    the order an evaluation trace lists them in.
    """
    # proto-nodes: (op, inputs, attr) in post-order, variables first
    protos: list[tuple[Op, tuple[int, ...], object]] = []
    env: dict[str, int] = {}
    for name in program.free_vars:
        env[name] = len(protos)
        protos.append((Op.VAR, (), name))

    def emit(op: Op, inputs: tuple[int, ...], attr=None) -> int:
        protos.append((op, inputs, attr))
        return len(protos) - 1

    def walk(expr: Expr) -> int:
        match expr:
            case Num(value=v):
                return emit(Op.CONST, (), v)
            case Name(id=name):
                return env[name]
            case Neg(operand=e):
                return emit(Op.NEG, (walk(e),))
            case Call(func=f, arg=a):
                return emit(_FUNC_OPS[f], (walk(a),))
            case BinOp(op=op, left=a, right=b):
                left = walk(a)
                return emit(_BINARY_OPS[op], (left, walk(b)))
        raise TypeError(f"not an expression: {expr!r}")

    for stmt in program.statements:
        env[stmt.target] = walk(stmt.expr)

    depth = [0] * len(protos)
    for k, (_, inputs, _) in enumerate(protos):
        if inputs:
            depth[k] = 1 + max(depth[i] for i in inputs)
    n_vars = len(program.free_vars)
    order = list(range(n_vars)) + sorted(range(n_vars, len(protos)), key=lambda k: (depth[k], k))
    new_id = {old: new for new, old in enumerate(order)}

    builder = GraphBuilder()
    for old in order:
        op, inputs, attr = protos[old]
        builder.add_node(op, [new_id[i] for i in inputs], attr)
    by_name = {name: new_id[i] for name, i in env.items()}
    graph = builder.build((by_name[name] for name in program.outputs), permissive=True)
    live = graph.live()
    if not all(live):
        # statements that no output depends on are dropped
        remap = {old: new for new, old in enumerate(j for j in range(len(live)) if live[j])}
        graph = prune(graph)
        by_name = {name: remap[i] for name, i in by_name.items() if live[i]}
    else:
        graph = Graph(graph.nodes, graph.outputs)
    return graph, NameMap(by_name, program.outputs)


def compile_source(source: str) -> tuple[Graph, NameMap]:
    """``lower(parse(source))``."""
    return lower(parse(source))

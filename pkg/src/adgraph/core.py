"""Computation-graph data model and per-primitive derivative rules.

A :class:`Graph` is an immutable list of :class:`Node` objects where every
edge points from a node to one with a strictly smaller index, so a graph is
acyclic by construction and its node order is already a valid execution
order.  Leaves are ``Const`` (carrying a literal) and ``Var`` (carrying a
name); every other node applies one primitive to its ordered inputs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, GraphError

Bindings = Mapping[str, float]


class Op(enum.Enum):
    CONST = "Const"
    VAR = "Var"
    ADD = "Add"
    SUB = "Sub"
    MUL = "Mul"
    DIV = "Div"
    NEG = "Neg"
    LN = "Ln"
    SIN = "Sin"
    COS = "Cos"
    EXP = "Exp"
    POW = "Pow"

    @property
    def arity(self) -> int:
        return _ARITY[self]

    @property
    def is_leaf(self) -> bool:
        return self in (Op.CONST, Op.VAR)

    @classmethod
    def from_tag(cls, tag: str) -> "Op":
        return cls(tag)


_ARITY = {
    Op.CONST: 0,
    Op.VAR: 0,
    Op.NEG: 1,
    Op.LN: 1,
    Op.SIN: 1,
    Op.COS: 1,
    Op.EXP: 1,
    Op.ADD: 2,
    Op.SUB: 2,
    Op.MUL: 2,
    Op.DIV: 2,
    Op.POW: 2,
}

INFIX = {Op.ADD: "+", Op.SUB: "-", Op.MUL: "*", Op.DIV: "/", Op.POW: "^"}
FUNCTIONS = {Op.LN: "ln", Op.SIN: "sin", Op.COS: "cos", Op.EXP: "exp"}


@dataclass(frozen=True)
class Node:
    """One primitive instruction.

    ``attr`` is the literal of a ``Const`` node or the name of a ``Var``
    node and ``None`` otherwise.
    """

    op: Op
    inputs: tuple[int, ...] = ()
    attr: float | str | None = None


@dataclass(frozen=True)
class Graph:
    nodes: tuple[Node, ...]
    outputs: tuple[int, ...]
    # dead nodes are tolerated only in permissive graphs (pre-optimization)
    permissive: bool = field(default=False, compare=False)

    def __len__(self) -> int:
        return len(self.nodes)

    def variables(self) -> list[tuple[int, str]]:
        """(NodeId, name) of every Var node, in id order."""
        return [(i, n.attr) for i, n in enumerate(self.nodes) if n.op is Op.VAR]

    def variable_names(self) -> list[str]:
        return [name for _, name in self.variables()]

    def consumers(self) -> list[list[tuple[int, int]]]:
        """For every node, the (consumer id, input slot) pairs reading it, sorted."""
        out: list[list[tuple[int, int]]] = [[] for _ in self.nodes]
        for j, node in enumerate(self.nodes):
            for slot, i in enumerate(node.inputs):
                out[i].append((j, slot))
        return out

    def live(self) -> list[bool]:
        """Mask of nodes reachable (backwards) from some output."""
        mark = [False] * len(self.nodes)
        for o in self.outputs:
            if 0 <= o < len(mark):
                mark[o] = True
        for j in range(len(self.nodes) - 1, -1, -1):
            if mark[j]:
                for i in self.nodes[j].inputs:
                    if 0 <= i < j:
                        mark[i] = True
        return mark

    def edge_count(self) -> int:
        return sum(len(n.inputs) for n in self.nodes)


class GraphBuilder:
    """Mutable graph under construction; :meth:`build` freezes it."""

    def __init__(self) -> None:
        self.nodes: list[Node] = []

    def add_node(self, op: Op, inputs: Sequence[int] = (), attr: float | str | None = None) -> int:
        inputs = tuple(inputs)
        if len(inputs) != op.arity:
            raise GraphError(f"{op.value} takes {op.arity} input(s), got {len(inputs)}")
        for i in inputs:
            if not isinstance(i, int) or not 0 <= i < len(self.nodes):
                raise GraphError(f"dangling input id {i!r} for {op.value}")
        if op is Op.CONST:
            if isinstance(attr, bool) or not isinstance(attr, (int, float)):
                raise GraphError("Const needs a numeric literal")
            attr = float(attr)
            if not math.isfinite(attr):
                raise GraphError(f"Const literal must be finite, got {attr!r}")
        elif op is Op.VAR:
            if not isinstance(attr, str) or not attr:
                raise GraphError("Var needs a name")
        elif attr is not None:
            raise GraphError(f"{op.value} takes no attribute")
        self.nodes.append(Node(op, inputs, attr))
        return len(self.nodes) - 1

    def var(self, name: str) -> int:
        return self.add_node(Op.VAR, (), name)

    def const(self, value: float) -> int:
        return self.add_node(Op.CONST, (), value)

    def apply(self, op: Op, *inputs: int) -> int:
        return self.add_node(op, inputs)

    def build(self, outputs: Iterable[int], *, permissive: bool = False) -> Graph:
        graph = Graph(tuple(self.nodes), tuple(outputs), permissive)
        problems = validate(graph)
        if problems:
            raise GraphError("; ".join(problems))
        return graph


def validate(graph: Graph) -> list[str]:
    """Return every invariant violation of ``graph``; an empty list means ok."""
    problems: list[str] = []
    n = len(graph.nodes)
    seen_vars: dict[str, int] = {}
    for j, node in enumerate(graph.nodes):
        if len(node.inputs) != node.op.arity:
            problems.append(
                f"node {j}: arity mismatch ({node.op.value} takes {node.op.arity}, has {len(node.inputs)})"
            )
        for i in node.inputs:
            if not 0 <= i < n:
                problems.append(f"node {j}: input {i} out of range")
            elif i >= j:
                problems.append(f"node {j}: non-topological edge from {i}")
        if node.op is Op.CONST and not (
            isinstance(node.attr, float) and math.isfinite(node.attr)
        ):
            problems.append(f"node {j}: Const literal must be a finite float")
        if node.op is Op.VAR:
            if not isinstance(node.attr, str) or not node.attr:
                problems.append(f"node {j}: Var without a name")
            elif node.attr in seen_vars:
                problems.append(
                    f"node {j}: duplicate variable {node.attr!r} (also node {seen_vars[node.attr]})"
                )
            else:
                seen_vars[node.attr] = j
    if not graph.outputs:
        problems.append("no outputs")
    for o in graph.outputs:
        if not 0 <= o < n:
            problems.append(f"output {o} out of range")
    if not graph.permissive and not problems:
        dead = [j for j, alive in enumerate(graph.live()) if not alive]
        if dead:
            problems.append(f"dead nodes {dead} unreachable from outputs")
    return problems


def prune(graph: Graph, outputs: Sequence[int] | None = None) -> Graph:
    """Drop nodes unreachable from ``outputs`` (default: the graph's outputs).

    Surviving nodes keep their relative order, so the result is again
    topologically numbered.
    """
    if outputs is not None:
        graph = Graph(graph.nodes, tuple(outputs), True)
    live = graph.live()
    remap: dict[int, int] = {}
    nodes = []
    for j, node in enumerate(graph.nodes):
        if live[j]:
            remap[j] = len(nodes)
            nodes.append(Node(node.op, tuple(remap[i] for i in node.inputs), node.attr))
    return Graph(tuple(nodes), tuple(remap[o] for o in graph.outputs))


def _check_finite(op: Op, result: float) -> float:
    if not math.isfinite(result):
        raise DomainError(f"{op.value} overflowed to {result}", op=op)
    return result


def primitive_value(op: Op, xs: Sequence[float]) -> float:
    """Value of a non-leaf primitive at ``xs`` (double precision)."""
    if op.is_leaf:
        raise ValueError(f"{op.value} is a leaf; it has no primitive value rule")
    if len(xs) != op.arity:
        raise ValueError(f"{op.value} expects {op.arity} value(s), got {len(xs)}")
    try:
        match op:
            case Op.ADD:
                r = xs[0] + xs[1]
            case Op.SUB:
                r = xs[0] - xs[1]
            case Op.MUL:
                r = xs[0] * xs[1]
            case Op.DIV:
                if xs[1] == 0:
                    raise DomainError("division by zero", op=op)
                r = xs[0] / xs[1]
            case Op.NEG:
                r = -xs[0]
            case Op.LN:
                if xs[0] <= 0:
                    raise DomainError(f"ln of non-positive value {xs[0]!r}", op=op)
                r = math.log(xs[0])
            case Op.SIN:
                r = math.sin(xs[0])
            case Op.COS:
                r = math.cos(xs[0])
            case Op.EXP:
                r = math.exp(xs[0])
            case Op.POW:
                r = _pow(xs[0], xs[1])
    except OverflowError:
        raise DomainError(f"{op.value} overflowed", op=op) from None
    return _check_finite(op, r)


def _pow(base: float, exponent: float) -> float:
    if base < 0 and not float(exponent).is_integer():
        raise DomainError(
            f"negative base {base!r} with non-integer exponent {exponent!r}", op=Op.POW
        )
    if base == 0 and exponent < 0:
        raise DomainError("zero raised to a negative power", op=Op.POW)
    return math.pow(base, exponent)


def primitive_partial(op: Op, xs: Sequence[float], wrt: int) -> float:
    """Partial derivative of ``op`` with respect to input ``wrt`` at ``xs``."""
    if op.is_leaf:
        raise ValueError(f"{op.value} has no inputs to differentiate against")
    if len(xs) != op.arity:
        raise ValueError(f"{op.value} expects {op.arity} value(s), got {len(xs)}")
    if not 0 <= wrt < op.arity:
        raise ValueError(f"{op.value} has no input {wrt}")
    try:
        match op:
            case Op.ADD:
                r = 1.0
            case Op.SUB:
                r = 1.0 if wrt == 0 else -1.0
            case Op.MUL:
                r = xs[1] if wrt == 0 else xs[0]
            case Op.DIV:
                if xs[1] == 0:
                    raise DomainError("division by zero", op=op)
                r = 1.0 / xs[1] if wrt == 0 else -xs[0] / (xs[1] * xs[1])
            case Op.NEG:
                r = -1.0
            case Op.LN:
                if xs[0] <= 0:
                    raise DomainError(f"ln of non-positive value {xs[0]!r}", op=op)
                r = 1.0 / xs[0]
            case Op.SIN:
                r = math.cos(xs[0])
            case Op.COS:
                r = -math.sin(xs[0])
            case Op.EXP:
                r = math.exp(xs[0])
            case Op.POW:
                base, exponent = xs
                if wrt == 0:
                    r = exponent * _pow(base, exponent - 1)
                else:
                    if base <= 0:
                        raise DomainError(
                            f"d/dexponent of pow needs a positive base, got {base!r}", op=op
                        )
                    r = math.pow(base, exponent) * math.log(base)
    except OverflowError:
        raise DomainError(f"partial of {op.value} overflowed", op=op) from None
    return _check_finite(op, r)


def fmt_real(x: float) -> str:
    """Shortest round-trip decimal form, with a bare integer for whole numbers."""
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s

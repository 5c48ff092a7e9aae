"""The ``adgraph v1`` text format.

::

    adgraph v1
    0 Var x1
    1 Var x2
    2 Ln 0
    3 Mul 0 1
    4 Sin 1
    5 Add 2 3
    6 Sub 5 4
    outputs 6

One node per line, ids dense from 0, inputs by id.  Adjoint programs add a
``grad <name> <id>`` line per variable before ``outputs``; their outputs
list the primal outputs followed by the gradient ids in ``grad`` order.
The full grammar is in ``docs/adgraph-format.md``.
"""

from __future__ import annotations

import math

from .adjoint import SEED, AdjointProgram
from .core import Graph, GraphBuilder, Op, fmt_real
from .errors import GraphError, GraphFileError

HEADER = "adgraph v1"


def serialize(obj: Graph | AdjointProgram) -> str:
    if isinstance(obj, AdjointProgram):
        graph, grads = obj.combined, obj.gradient_outputs
        expected = list(obj.primal_outputs) + list(grads.values())
        if list(graph.outputs) != expected:
            raise GraphError("adjoint program outputs are not primal outputs followed by gradients")
    else:
        graph, grads = obj, {}
    lines = [HEADER]
    for j, node in enumerate(graph.nodes):
        parts = [str(j), node.op.value]
        if node.op is Op.CONST:
            parts.append(fmt_real(node.attr))
        elif node.op is Op.VAR:
            parts.append(node.attr)
        parts.extend(str(i) for i in node.inputs)
        lines.append(" ".join(parts))
    for name, j in grads.items():
        lines.append(f"grad {name} {j}")
    lines.append(" ".join(["outputs", *(str(o) for o in graph.outputs)]))
    return "\n".join(lines) + "\n"


def _int(text: str, lineno: int) -> int:
    if not text.isdigit():
        raise GraphFileError(f"expected a decimal id, got {text!r}", lineno)
    return int(text)


def deserialize_any(text: str) -> Graph | AdjointProgram:
    """Parse a file; returns an :class:`AdjointProgram` if it has ``grad`` lines."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].strip() != HEADER:
        found = lines[0].strip() if lines else ""
        if found.startswith("adgraph "):
            raise GraphFileError(f"unsupported version {found[8:]!r} (expected v1)", 1)
        raise GraphFileError(f"missing header {HEADER!r}", 1)
    builder = GraphBuilder()
    grads: dict[str, int] = {}
    outputs: list[int] | None = None
    for lineno, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if not parts:
            raise GraphFileError("blank line", lineno)
        if outputs is not None:
            raise GraphFileError("content after the outputs line", lineno)
        if parts[0] == "outputs":
            outputs = [_int(p, lineno) for p in parts[1:]]
            continue
        if parts[0] == "grad":
            if len(parts) != 3:
                raise GraphFileError("expected 'grad <name> <id>'", lineno)
            grads[parts[1]] = _int(parts[2], lineno)
            continue
        if grads:
            raise GraphFileError("node line after grad lines", lineno)
        if _int(parts[0], lineno) != len(builder.nodes):
            raise GraphFileError(f"expected node id {len(builder.nodes)}, got {parts[0]}", lineno)
        if len(parts) < 2:
            raise GraphFileError("missing op tag", lineno)
        try:
            op = Op.from_tag(parts[1])
        except ValueError:
            raise GraphFileError(f"unknown op tag {parts[1]!r}", lineno) from None
        rest = parts[2:]
        attr = None
        if op is Op.CONST:
            if len(rest) != 1:
                raise GraphFileError("Const takes exactly one literal", lineno)
            try:
                attr = float(rest[0])
            except ValueError:
                raise GraphFileError(f"bad literal {rest[0]!r}", lineno) from None
            if not math.isfinite(attr):
                raise GraphFileError(f"literal must be finite, got {rest[0]!r}", lineno)
            rest = []
        elif op is Op.VAR:
            if len(rest) != 1:
                raise GraphFileError("Var takes exactly one name", lineno)
            attr, rest = rest[0], []
        try:
            builder.add_node(op, [_int(p, lineno) for p in rest], attr)
        except GraphError as err:
            raise GraphFileError(str(err), lineno) from None
    if outputs is None:
        raise GraphFileError("missing outputs line", len(lines))
    if not outputs:
        raise GraphFileError("no outputs", len(lines))
    try:
        graph = builder.build(outputs, permissive=True)
    except GraphError as err:
        raise GraphFileError(str(err), len(lines)) from None
    if not grads and not any(name.startswith(SEED) for name in graph.variable_names()):
        return graph
    program = AdjointProgram.from_graph(graph, list(grads))
    if program.gradient_outputs != grads:
        raise GraphFileError("grad lines do not match the trailing outputs", len(lines))
    return program


def deserialize(text: str) -> Graph:
    """Parse a file as a plain graph (an adjoint file yields its combined graph)."""
    obj = deserialize_any(text)
    return obj.combined if isinstance(obj, AdjointProgram) else obj


def deserialize_adjoint(text: str) -> AdjointProgram:
    obj = deserialize_any(text)
    if not isinstance(obj, AdjointProgram):
        raise GraphFileError("file holds a plain graph, not an adjoint program")
    return obj

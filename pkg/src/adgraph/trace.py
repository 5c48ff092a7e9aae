"""Evaluation-trace tables and Graphviz export.

Display names follow the classic evaluation-trace convention: the k input
variables are ``v-(k-1) .. v0`` in declaration order and operation nodes
are ``v1 .. vn`` in execution order.  Constants are shown inline.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import FUNCTIONS, INFIX, Bindings, Graph, Op, fmt_real, prune
from .errors import ContractError
from .parser import NameMap, compile_source
from .tape import backward_state, record, slot_of_node


def display_names(graph: Graph) -> dict[int, str]:
    """NodeId -> ``v<i>`` for every non-Const node."""
    names = {}
    var_ids = [j for j, _ in graph.variables()]
    k = len(var_ids)
    for pos, j in enumerate(var_ids):
        names[j] = f"v{pos - (k - 1)}"
    counter = 0
    for j, node in enumerate(graph.nodes):
        if not node.op.is_leaf:
            counter += 1
            names[j] = f"v{counter}"
    return names


def primed(name: str) -> str:
    """``x1`` -> ``x'1``, ``x`` -> ``x'``: the prime goes before a numeric subscript."""
    m = re.fullmatch(r"(.*?)(\d*)", name)
    return f"{m.group(1)}'{m.group(2)}"


def _fmt(value: float, decimals: int | None) -> str:
    if decimals is None:
        return fmt_real(value)
    s = f"{value:.{decimals}f}"
    return s[1:] if s.startswith("-") and float(s) == 0 else s


@dataclass
class TraceTable:
    """Rows are (left-hand side, expression, value); text renders ``lhs = expr = value``."""

    primal_rows: list[tuple[str, str, float]] = field(default_factory=list)
    adjoint_rows: list[tuple[str, str, float]] = field(default_factory=list)
    decimals: int | None = 3

    def lines(self, rows) -> list[str]:
        return [f"{lhs} = {expr} = {_fmt(v, self.decimals)}" for lhs, expr, v in rows]

    def text(self) -> str:
        out = ["Forward primal trace"]
        out += ["  " + line for line in self.lines(self.primal_rows)]
        out.append("Reverse adjoint trace")
        out += ["  " + line for line in self.lines(self.adjoint_rows)]
        return "\n".join(out) + "\n"

    __str__ = text


def _operand(graph: Graph, names: dict[int, str], j: int) -> str:
    node = graph.nodes[j]
    if node.op is Op.CONST:
        return fmt_real(node.attr)
    return names[j]


def _symbolic(graph: Graph, names: dict[int, str], j: int) -> str:
    node = graph.nodes[j]
    args = [_operand(graph, names, i) for i in node.inputs]
    if node.op is Op.VAR:
        return node.attr
    if node.op is Op.NEG:
        return f"-{args[0]}"
    if node.op in FUNCTIONS:
        return f"{FUNCTIONS[node.op]}({args[0]})"
    return f" {INFIX[node.op]} ".join(args)


def _contribution(op: Op, wrt: int, bar: str, args: list[str]) -> str:
    a = args[0]
    b = args[1] if len(args) > 1 else ""
    match op, wrt:
        case (Op.ADD, _) | (Op.SUB, 0):
            return f"{bar} * 1"
        case (Op.SUB, 1) | (Op.NEG, 0):
            return f"{bar} * (-1)"
        case Op.MUL, 0:
            return f"{bar} * {b}"
        case Op.MUL, 1:
            return f"{bar} * {a}"
        case Op.DIV, 0:
            return f"{bar} / {b}"
        case Op.DIV, 1:
            return f"{bar} * (-{a} / {b}^2)"
        case Op.LN, 0:
            return f"{bar} / {a}"
        case Op.SIN, 0:
            return f"{bar} * cos({a})"
        case Op.COS, 0:
            return f"{bar} * (-sin({a}))"
        case Op.EXP, 0:
            return f"{bar} * exp({a})"
        case Op.POW, 0:
            return f"{bar} * {b} * {a}^({b} - 1)"
        case Op.POW, 1:
            return f"{bar} * {a}^{b} * ln({a})"
    raise ValueError(f"no contribution form for {op.value} input {wrt}")


def trace_table(
    graph: Graph, bindings: Bindings, output_name: str = "y", decimals: int | None = 3
) -> TraceTable:
    """Primal and reverse-adjoint trace of a single-output graph."""
    if len(graph.outputs) != 1:
        raise ContractError("trace needs a single-output program")
    out = graph.outputs[0]
    names = display_names(graph)
    value, tape = record(graph, bindings)
    state = backward_state(tape, 1.0)
    node_of_slot = {s: j for j, s in slot_of_node(graph, tape).items()}
    values = {j: tape.slot_value(s) for s, j in node_of_slot.items()}
    table = TraceTable(decimals=decimals)
    out_is_var = graph.nodes[out].op is Op.VAR

    for j, node in enumerate(graph.nodes):
        if node.op is Op.CONST:
            continue
        if j == out and out_is_var:
            table.primal_rows.append((f"{output_name} = {names[j]}", node.attr, values[j]))
        else:
            table.primal_rows.append((names[j], _symbolic(graph, names, j), values[j]))
    if not out_is_var:
        table.primal_rows.append((output_name, _operand(graph, names, out), value))

    y_bar = primed(output_name)
    if not out_is_var and graph.nodes[out].op is not Op.CONST:
        table.adjoint_rows.append((_prime_v(names[out]), y_bar, 1.0))
    touched: set[int] = set()
    for src, res, k, i, _d, new in state.steps:
        target = node_of_slot[src]
        if graph.nodes[target].op is Op.CONST:
            continue
        entry = tape.entries[k]
        consumer = node_of_slot[res]
        args = [_operand(graph, names, node_of_slot[s]) for s in entry.input_slots]
        term = _contribution(entry.op, i, _prime_v(names[consumer]), args)
        lhs = _prime_v(names[target])
        # adjoints start at zero, so a first write reads as a plain assignment
        expr = f"{lhs} + {term}" if src in state.seeds or target in touched else term
        touched.add(target)
        table.adjoint_rows.append((lhs, expr, new))
    for j, name in graph.variables():
        adj = state.adjoint[tape.variable_slots[name]]
        if j == out:
            table.adjoint_rows.append((primed(name), f"{_prime_v(names[j])} = {y_bar}", adj))
        else:
            table.adjoint_rows.append((primed(name), _prime_v(names[j]), adj))
    return table


def _prime_v(vname: str) -> str:
    return "v'" + vname[1:]


def render_trace(
    source: str, bindings: Bindings, output: str | None = None, decimals: int | None = 3
) -> TraceTable:
    """Parse ``source`` and build its trace table at ``bindings``."""
    graph, names = compile_source(source)
    graph, out_name = select_output(graph, names, output)
    return trace_table(graph, bindings, out_name, decimals)


def select_output(graph: Graph, names: NameMap, output: str | None) -> tuple[Graph, str]:
    """Restrict ``graph`` to one named output (required when it has several)."""
    if output is None:
        if len(graph.outputs) != 1:
            raise ContractError(
                f"program has {len(graph.outputs)} outputs {list(names.output_names)}; choose one"
            )
        return graph, names.output_names[0]
    if output not in names.output_names:
        raise ContractError(f"unknown output {output!r}; outputs are {list(names.output_names)}")
    return prune(graph, [names.node(output)]), output


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(graph: Graph, labels: NameMap | dict[int, list[str]] | None = None) -> str:
    """Graphviz digraph; edges run from input to consumer, nodes sorted by id."""
    names = display_names(graph)
    extra: dict[int, list[str]] = {}
    if isinstance(labels, NameMap):
        for name, j in labels.by_name.items():
            if graph.nodes[j].op is not Op.VAR:
                extra.setdefault(j, []).append(name)
    elif labels:
        extra = {j: list(v) for j, v in labels.items()}
    outputs = set(graph.outputs)
    lines = ["digraph adgraph {", "  rankdir=BT;"]
    for j, node in enumerate(graph.nodes):
        if node.op is Op.CONST:
            parts, shape = [fmt_real(node.attr)], "plaintext"
        elif node.op is Op.VAR:
            parts, shape = [names[j], node.attr], "box"
        else:
            sym = FUNCTIONS.get(node.op) or INFIX.get(node.op) or "neg"
            parts, shape = [names[j], sym], "ellipse"
        if extra.get(j):
            parts.append("(" + ", ".join(sorted(extra[j])) + ")")
        label = "\\n".join(_dot_escape(p) for p in parts)
        style = ", peripheries=2" if j in outputs else ""
        lines.append(f'  n{j} [label="{label}", shape={shape}{style}];')
    for j, node in enumerate(graph.nodes):
        for i in node.inputs:
            lines.append(f"  n{i} -> n{j};")
    lines.append("}")
    return "\n".join(lines) + "\n"

"""Source-transformation reverse mode.

:func:`build_adjoint` appends, once and purely structurally, an adjoint
program to a primal graph.  The result is an ordinary :class:`Graph`, so
gradients come from a single dataflow evaluation of primal plus adjoint
nodes with the seed bound as the Var ``__seed``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import Bindings, Graph, GraphBuilder, Node, Op, primitive_value, prune, validate
from .dataflow import evaluate
from .errors import ContractError, DomainError, GraphError, StaticDomainError
from .instrument import bump

SEED = "__seed"


def seed_name(k: int, n_outputs: int) -> str:
    return SEED if n_outputs == 1 else f"{SEED}{k}"


@dataclass(frozen=True)
class AdjointProgram:
    combined: Graph
    primal_outputs: tuple[int, ...]
    gradient_outputs: dict[str, int]
    seed_nodes: tuple[int | None, ...]

    @property
    def seed_node(self) -> int | None:
        return self.seed_nodes[0]

    @property
    def seed_names(self) -> list[str]:
        return [seed_name(k, len(self.primal_outputs)) for k in range(len(self.primal_outputs))]

    @classmethod
    def from_graph(cls, combined: Graph, gradient_names: Sequence[str]) -> "AdjointProgram":
        """Recover the adjoint view of a combined graph.

        The combined graph's outputs are the primal outputs followed by one
        gradient output per name in ``gradient_names``.
        """
        n_grad = len(gradient_names)
        n_primal = len(combined.outputs) - n_grad
        if n_primal < 1:
            raise GraphError("adjoint program needs at least one primal output")
        vars_by_name = {name: j for j, name in combined.variables()}
        seeds = tuple(vars_by_name.get(seed_name(k, n_primal)) for k in range(n_primal))
        return cls(
            combined,
            combined.outputs[:n_primal],
            dict(zip(gradient_names, combined.outputs[n_primal:])),
            seeds,
        )


def _balanced_sum(b: GraphBuilder, leaves: list[int]) -> int:
    if len(leaves) == 1:
        return leaves[0]
    mid = len(leaves) // 2
    return b.apply(Op.ADD, _balanced_sum(b, leaves[:mid]), _balanced_sum(b, leaves[mid:]))


def _partial_node(b: GraphBuilder, graph: Graph, c: int, slot: int) -> int:
    """Node computing d(node c)/d(input ``slot`` of c), built from primal nodes."""
    node = graph.nodes[c]
    x = node.inputs
    match node.op, slot:
        case (Op.ADD, _) | (Op.SUB, 0):
            return b.const(1.0)
        case (Op.SUB, 1) | (Op.NEG, 0):
            return b.apply(Op.NEG, b.const(1.0))
        case Op.MUL, 0:
            return x[1]
        case Op.MUL, 1:
            return x[0]
        case Op.DIV, 0:
            return b.apply(Op.DIV, b.const(1.0), x[1])
        case Op.DIV, 1:
            return b.apply(Op.NEG, b.apply(Op.DIV, x[0], b.apply(Op.MUL, x[1], x[1])))
        case Op.LN, 0:
            return b.apply(Op.DIV, b.const(1.0), x[0])
        case Op.SIN, 0:
            return b.apply(Op.COS, x[0])
        case Op.COS, 0:
            return b.apply(Op.NEG, b.apply(Op.SIN, x[0]))
        case Op.EXP, 0:
            return c
        case Op.POW, 0:
            lowered = b.apply(Op.SUB, x[1], b.const(1.0))
            return b.apply(Op.MUL, x[1], b.apply(Op.POW, x[0], lowered))
        case Op.POW, 1:
            return b.apply(Op.MUL, c, b.apply(Op.LN, x[0]))
    raise GraphError(f"no partial rule for {node.op.value} input {slot}")


def build_adjoint(graph: Graph) -> AdjointProgram:
    """Append the adjoint program of ``graph``; no numeric evaluation happens.

    For every primal node v, its adjoint is a balanced Add tree over one
    ``adjoint(c) * d c / d v`` leaf per consuming input slot (ordered by
    consumer id, then slot), plus the seed Var if v is an output.
    """
    problems = validate(graph)
    if problems:
        raise GraphError("; ".join(problems))
    bump("adjoint_builds")
    b = GraphBuilder()
    for node in graph.nodes:
        b.add_node(node.op, node.inputs, node.attr)
    n_out = len(graph.outputs)
    seeds = [b.var(seed_name(k, n_out)) for k in range(n_out)]
    consumers = graph.consumers()
    adjoint: list[int | None] = [None] * len(graph.nodes)
    for v in range(len(graph.nodes) - 1, -1, -1):
        leaves = [seeds[k] for k, o in enumerate(graph.outputs) if o == v]
        for c, slot in consumers[v]:
            if adjoint[c] is not None:
                leaves.append(b.apply(Op.MUL, adjoint[c], _partial_node(b, graph, c, slot)))
        if leaves:
            adjoint[v] = _balanced_sum(b, leaves)
    gradient_outputs = {}
    for j, name in graph.variables():
        gradient_outputs[name] = adjoint[j] if adjoint[j] is not None else b.const(0.0)
    combined = b.build(list(graph.outputs) + list(gradient_outputs.values()), permissive=True)
    return AdjointProgram(combined, graph.outputs, gradient_outputs, tuple(seeds))


def adjoint_bindings(
    program: AdjointProgram, bindings: Bindings, seed: float | Sequence[float] = 1.0
) -> dict[str, float]:
    if any(name.startswith("__") for name in bindings):
        raise ContractError("names starting with '__' are reserved")
    seeds = [seed] if isinstance(seed, (int, float)) else list(seed)
    if len(seeds) != len(program.primal_outputs):
        raise ContractError(f"expected {len(program.primal_outputs)} seeds, got {len(seeds)}")
    full = dict(bindings)
    for name, s in zip(program.seed_names, seeds):
        full[name] = float(s)
    return full


def two_phase_grad(
    program: AdjointProgram, bindings: Bindings, seed: float | Sequence[float] = 1.0
) -> tuple[float, dict[str, float]]:
    """One evaluation of the combined graph: primal value and gradient."""
    val = evaluate(program.combined, adjoint_bindings(program, bindings, seed))
    value = val.values[program.primal_outputs[0]]
    return value, {name: val.values[j] for name, j in program.gradient_outputs.items()}


def constant_fold(graph: Graph) -> Graph:
    """Fold all-constant subgraphs into single Consts and drop dead nodes.

    Folded literals are computed with the same primitive rules as runtime
    evaluation, so outputs stay bit-identical.
    """
    nodes = list(graph.nodes)
    is_const = [False] * len(nodes)
    for j, node in enumerate(nodes):
        if node.op is Op.CONST:
            is_const[j] = True
        elif not node.op.is_leaf and all(is_const[i] for i in node.inputs):
            xs = [nodes[i].attr for i in node.inputs]
            try:
                value = primitive_value(node.op, xs)
            except DomainError as err:
                raise StaticDomainError(err.reason, op=node.op, node=j) from None
            nodes[j] = Node(Op.CONST, (), value)
            is_const[j] = True
    return prune(Graph(tuple(nodes), graph.outputs, True))


def fold_adjoint(program: AdjointProgram) -> AdjointProgram:
    return AdjointProgram.from_graph(constant_fold(program.combined), list(program.gradient_outputs))

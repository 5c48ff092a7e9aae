"""Forward-mode AD by tangent propagation over the dataflow executor.

Every node carries a (value, tangent) pair.  A Var's tangent is its seed, a
Const's is zero, and an operation's tangent is the partial-weighted sum of
its inputs' tangents.  One pass gives one directional derivative, so a full
gradient of an n-input program costs n passes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .core import Bindings, Graph, Node, Op, primitive_partial, primitive_value
from .dataflow import Schedule, check_bindings, execute
from .errors import ContractError, DomainError
from .instrument import bump


@dataclass(frozen=True)
class DualValuation:
    values: tuple[float, ...]
    tangents: tuple[float, ...]
    firings: int


def dual_evaluate(
    graph: Graph,
    bindings: Bindings,
    tangent_seed: Mapping[str, float] | None = None,
    schedule: Schedule | None = None,
) -> DualValuation:
    check_bindings(graph, bindings)
    seed = tangent_seed or {}
    unknown = set(seed) - set(graph.variable_names())
    if unknown:
        raise ContractError(f"tangent seed names unknown variables {sorted(unknown)}")

    def fire(j: int, node: Node, ins: list[tuple[float, float]]) -> tuple[float, float]:
        match node.op:
            case Op.CONST:
                return node.attr, 0.0
            case Op.VAR:
                return float(bindings[node.attr]), float(seed.get(node.attr, 0.0))
        xs = [v for v, _ in ins]
        try:
            value = primitive_value(node.op, xs)
            tangent = 0.0
            for i, (_, dx) in enumerate(ins):
                tangent += primitive_partial(node.op, xs, i) * dx
        except DomainError as err:
            raise err.at(j, node.op) from None
        return value, tangent

    bump("jvp_passes")
    pairs, firings = execute(graph, fire, schedule)
    return DualValuation(tuple(v for v, _ in pairs), tuple(t for _, t in pairs), firings)


def jvp(
    graph: Graph, bindings: Bindings, tangent_seed: Mapping[str, float] | None = None
) -> tuple[list[float], list[float]]:
    """Output values and output tangents for one tangent seed, in one pass."""
    dv = dual_evaluate(graph, bindings, tangent_seed)
    return [dv.values[o] for o in graph.outputs], [dv.tangents[o] for o in graph.outputs]


def gradient_forward(graph: Graph, bindings: Bindings) -> dict[str, float]:
    """Gradient of a single-output graph by one unit-seed pass per variable."""
    if len(graph.outputs) != 1:
        raise ContractError("gradient_forward needs a single-output graph")
    grads = {}
    for name in graph.variable_names():
        _, tangents = jvp(graph, bindings, {name: 1.0})
        grads[name] = tangents[0]
    return grads

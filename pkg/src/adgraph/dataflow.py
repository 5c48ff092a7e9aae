"""Fireable-node evaluation of a :class:`~adgraph.core.Graph`.

A node becomes fireable once every one of its inputs holds a value.  The
executor keeps the set of fireable nodes explicitly and lets a *schedule*
pick which one fires next; every legal schedule yields the same values,
because each node reads its inputs from a single-assignment table in the
node's own input order.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass
from typing import Callable, Generic, Sequence, TypeVar

from .core import Bindings, Graph, Node, Op, primitive_value
from .errors import BindingError, DomainError
from .instrument import bump

T = TypeVar("T")

# A schedule receives the sorted ready list and returns the node to fire.
Schedule = Callable[[Sequence[int]], int]


def lowest_first(ready: Sequence[int]) -> int:
    return ready[0]


def highest_first(ready: Sequence[int]) -> int:
    return ready[-1]


def random_schedule(seed: int | None = None) -> Schedule:
    rng = random.Random(seed)

    def pick(ready: Sequence[int]) -> int:
        return rng.choice(ready)

    return pick


class EvalState(Generic[T]):
    """Per-evaluation bookkeeping: values, unfilled-input counts, ready set."""

    def __init__(self, graph: Graph) -> None:
        self.graph = graph
        n = len(graph.nodes)
        self.values: list[T | None] = [None] * n
        self.done = [False] * n
        self.pending = [len(node.inputs) for node in graph.nodes]
        self.readers: list[list[int]] = [[] for _ in range(n)]
        for j, node in enumerate(graph.nodes):
            for i in node.inputs:
                self.readers[i].append(j)
        self.ready: set[int] = {j for j in range(n) if self.pending[j] == 0}
        self.firings = 0

    def complete(self) -> bool:
        return self.firings == len(self.graph.nodes)

    def fire(self, j: int, value: T) -> None:
        if j not in self.ready:
            raise RuntimeError(f"node {j} is not fireable")
        self.ready.discard(j)
        self.values[j] = value
        self.done[j] = True
        self.firings += 1
        for k in self.readers[j]:
            self.pending[k] -= 1
            if self.pending[k] == 0:
                self.ready.add(k)


def ready_set(state: EvalState) -> frozenset[int]:
    return frozenset(state.ready)


@dataclass(frozen=True)
class Valuation:
    values: tuple[float, ...]
    outputs: tuple[float, ...]
    firings: int

    @property
    def value(self) -> float:
        """The sole output; only meaningful for single-output graphs."""
        return self.outputs[0]


def check_bindings(graph: Graph, bindings: Bindings) -> None:
    for _, name in graph.variables():
        if name not in bindings:
            raise BindingError(f"missing binding for variable {name!r}", name)
        v = bindings[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise BindingError(f"binding for {name!r} must be a finite real, got {v!r}", name)


def execute(
    graph: Graph,
    fire: Callable[[int, Node, list[T]], T],
    schedule: Schedule | None = None,
) -> tuple[list[T], int]:
    """Run ``fire`` once per node in an order chosen by ``schedule``.

    ``fire(node_id, node, input_results)`` computes the node's result from
    its inputs' results.  Returns all results and the firing count.  With
    no schedule, nodes fire lowest-id-first using a heap, which skips the
    sorting a general schedule needs.
    """
    bump("evaluations")
    state: EvalState[T] = EvalState(graph)
    nodes = graph.nodes
    values = state.values
    try:
        if schedule is None:
            heap = sorted(state.ready)
            while heap:
                j = heapq.heappop(heap)
                node = nodes[j]
                values[j] = fire(j, node, [values[i] for i in node.inputs])
                state.firings += 1
                for k in state.readers[j]:
                    state.pending[k] -= 1
                    if state.pending[k] == 0:
                        heapq.heappush(heap, k)
        else:
            while state.ready:
                j = schedule(sorted(state.ready))
                node = nodes[j]
                state.fire(j, fire(j, node, [values[i] for i in node.inputs]))
    finally:
        bump("firings", state.firings)
    assert state.firings == len(nodes), "acyclic graphs always complete"
    return values, state.firings  # type: ignore[return-value]


def _value_fire(bindings: Bindings) -> Callable[[int, Node, list[float]], float]:
    def fire(j: int, node: Node, xs: list[float]) -> float:
        match node.op:
            case Op.CONST:
                return node.attr
            case Op.VAR:
                return float(bindings[node.attr])
        try:
            return primitive_value(node.op, xs)
        except DomainError as err:
            raise err.at(j, node.op) from None

    return fire


def evaluate(graph: Graph, bindings: Bindings) -> Valuation:
    """Evaluate every node; raises on a missing binding or a domain error."""
    return evaluate_with_schedule(graph, bindings, None)


def evaluate_with_schedule(
    graph: Graph, bindings: Bindings, schedule: Schedule | None
) -> Valuation:
    check_bindings(graph, bindings)
    values, firings = execute(graph, _value_fire(bindings), schedule)
    return Valuation(tuple(values), tuple(values[o] for o in graph.outputs), firings)

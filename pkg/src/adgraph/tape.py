"""Operator-overloading reverse mode.

Arithmetic on :class:`Traced` values executes the primal operation and
appends a :class:`TapeEntry` to the recording :class:`Recorder`.  After the
forward pass, :func:`backward` sweeps the frozen :class:`Tape` in reverse,
accumulating ``adjoint[input] += adjoint[result] * partial`` for every input
of every entry.

    >>> rec = Recorder()
    >>> x = rec.variable("x", 3.0)
    >>> tape = rec.finish(x * x)
    >>> backward(tape)
    {'x': 6.0}
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .core import Bindings, Graph, Op, primitive_partial, primitive_value
from .dataflow import check_bindings
from .errors import ContractError, DomainError
from .instrument import bump


@dataclass(frozen=True)
class TapeEntry:
    result_slot: int
    op: Op
    input_slots: tuple[int, ...]
    input_values: tuple[float, ...]
    result_value: float
    literal: float | None = None  # Const entries only
    node: int | None = None  # source NodeId when recorded from a Graph


@dataclass(frozen=True)
class Tape:
    """A completed recording.  Variable slots come first, then one slot per entry."""

    entries: tuple[TapeEntry, ...]
    variable_slots: dict[str, int]
    variable_values: dict[str, float]
    output_slots: tuple[int, ...]

    @property
    def n_slots(self) -> int:
        return len(self.variable_slots) + len(self.entries)

    @property
    def output_slot(self) -> int:
        if len(self.output_slots) != 1:
            raise ContractError("tape has several outputs; pass one seed per output")
        return self.output_slots[0]

    def slot_value(self, slot: int) -> float:
        n_vars = len(self.variable_slots)
        if slot < n_vars:
            name = next(k for k, v in self.variable_slots.items() if v == slot)
            return self.variable_values[name]
        return self.entries[slot - n_vars].result_value

    @property
    def total_arity(self) -> int:
        return sum(len(e.input_slots) for e in self.entries)


class Traced:
    """A float that records every operation applied to it."""

    __slots__ = ("recorder", "slot", "value")

    def __init__(self, recorder: "Recorder", slot: int, value: float) -> None:
        self.recorder = recorder
        self.slot = slot
        self.value = value

    def __repr__(self) -> str:
        return f"Traced(slot={self.slot}, value={self.value!r})"

    def _apply(self, op: Op, *args) -> "Traced":
        return self.recorder.apply(op, *args)

    def __add__(self, other):
        return self._apply(Op.ADD, self, other)

    def __radd__(self, other):
        return self._apply(Op.ADD, other, self)

    def __sub__(self, other):
        return self._apply(Op.SUB, self, other)

    def __rsub__(self, other):
        return self._apply(Op.SUB, other, self)

    def __mul__(self, other):
        return self._apply(Op.MUL, self, other)

    def __rmul__(self, other):
        return self._apply(Op.MUL, other, self)

    def __truediv__(self, other):
        return self._apply(Op.DIV, self, other)

    def __rtruediv__(self, other):
        return self._apply(Op.DIV, other, self)

    def __pow__(self, other):
        return self._apply(Op.POW, self, other)

    def __rpow__(self, other):
        return self._apply(Op.POW, other, self)

    def __neg__(self):
        return self._apply(Op.NEG, self)


def _unary(op: Op, fallback: Callable[[float], float]):
    def f(x):
        if isinstance(x, Traced):
            return x.recorder.apply(op, x)
        return fallback(x)

    f.__name__ = fallback.__name__
    return f


ln = _unary(Op.LN, math.log)
sin = _unary(Op.SIN, math.sin)
cos = _unary(Op.COS, math.cos)
exp = _unary(Op.EXP, math.exp)


class Recorder:
    """Collects tape entries while a primal computation runs."""

    def __init__(self) -> None:
        self._entries: list[TapeEntry] = []
        self._variables: dict[str, int] = {}
        self._values: dict[str, float] = {}
        self._finished = False
        # graph node being replayed, stamped onto entries by record()
        self.current_node: int | None = None

    def _next_slot(self) -> int:
        return len(self._variables) + len(self._entries)

    def variable(self, name: str, value: float) -> Traced:
        if self._entries:
            raise ContractError("variables must be declared before any operation is recorded")
        if name in self._variables:
            raise ContractError(f"variable {name!r} declared twice")
        slot = self._next_slot()
        self._variables[name] = slot
        self._values[name] = float(value)
        return Traced(self, slot, float(value))

    def constant(self, value: float, node: int | None = None) -> Traced:
        slot = self._next_slot()
        value = float(value)
        self._entries.append(TapeEntry(slot, Op.CONST, (), (), value, value, node))
        return Traced(self, slot, value)

    def apply(self, op: Op, *args) -> Traced:
        node = self.current_node
        if self._finished:
            raise ContractError("tape is finished")
        traced = [a if isinstance(a, Traced) else self.constant(a) for a in args]
        for t in traced:
            if t.recorder is not self:
                raise ContractError("cannot mix values from different recordings")
        xs = tuple(t.value for t in traced)
        try:
            value = primitive_value(op, xs)
        except DomainError as err:
            raise err.at(node if node is not None else self._next_slot(), op) from None
        slot = self._next_slot()
        self._entries.append(TapeEntry(slot, op, tuple(t.slot for t in traced), xs, value, None, node))
        return Traced(self, slot, value)

    def finish(self, *outputs: Traced) -> Tape:
        self._finished = True
        bump("tape_builds")
        return Tape(
            tuple(self._entries),
            dict(self._variables),
            dict(self._values),
            tuple(o.slot for o in outputs),
        )


_OVERLOADED: dict[Op, Callable] = {
    Op.ADD: operator.add,
    Op.SUB: operator.sub,
    Op.MUL: operator.mul,
    Op.DIV: operator.truediv,
    Op.POW: operator.pow,
    Op.NEG: operator.neg,
    Op.LN: ln,
    Op.SIN: sin,
    Op.COS: cos,
    Op.EXP: exp,
}


def record(graph: Graph, bindings: Bindings) -> tuple[float, Tape]:
    """Run ``graph`` on overloaded values and return (primal output, tape).

    The graph is replayed in id order through the overloaded operators, so
    the tape is exactly what a user program written with those operators
    would have produced.  Multi-output graphs return the first output's
    value; all output slots are kept on the tape.
    """
    check_bindings(graph, bindings)
    rec = Recorder()
    traced: list[Traced | None] = [None] * len(graph.nodes)
    for j, name in graph.variables():
        traced[j] = rec.variable(name, bindings[name])
    for j, node in enumerate(graph.nodes):
        if node.op is Op.VAR:
            continue
        if node.op is Op.CONST:
            traced[j] = rec.constant(node.attr, node=j)
            continue
        rec.current_node = j
        try:
            traced[j] = _OVERLOADED[node.op](*(traced[i] for i in node.inputs))
        except DomainError as err:
            raise err.at(j, node.op) from None
    rec.current_node = None
    tape = rec.finish(*(traced[o] for o in graph.outputs))
    return traced[graph.outputs[0]].value, tape


@dataclass
class AdjointState:
    """Per-slot adjoints after a reverse sweep, plus the sweep's history.

    ``steps`` lists every accumulation as
    ``(target_slot, source_slot, entry_index, input_index, partial, new_adjoint)``
    in the order it happened.
    """

    adjoint: list[float]
    seeds: dict[int, float]
    contributions: list[int]
    steps: list[tuple[int, int, int, int, float, float]] = field(default_factory=list)
    partial_evals: int = 0


def backward_state(tape: Tape, seed: float | Sequence[float] = 1.0) -> AdjointState:
    """Reverse sweep over ``tape``; returns the full adjoint state."""
    if isinstance(seed, (int, float)):
        seeds = {tape.output_slot: float(seed)}
    else:
        seed = [float(s) for s in seed]
        if len(seed) != len(tape.output_slots):
            raise ContractError(f"expected {len(tape.output_slots)} seeds, got {len(seed)}")
        seeds = {}
        for slot, s in zip(tape.output_slots, seed):
            seeds[slot] = seeds.get(slot, 0.0) + s
    for s in seeds.values():
        if not math.isfinite(s):
            raise ContractError("seed must be finite")
    bump("backward_sweeps")
    adjoint = [0.0] * tape.n_slots
    contributions = [0] * tape.n_slots
    for slot, s in seeds.items():
        adjoint[slot] = s
    state = AdjointState(adjoint, seeds, contributions)
    for k in range(len(tape.entries) - 1, -1, -1):
        entry = tape.entries[k]
        bar = adjoint[entry.result_slot]
        for i, src in enumerate(entry.input_slots):
            try:
                d = primitive_partial(entry.op, entry.input_values, i)
            except DomainError as err:
                raise err.at(entry.node if entry.node is not None else entry.result_slot, entry.op) from None
            state.partial_evals += 1
            adjoint[src] += bar * d
            contributions[src] += 1
            state.steps.append((src, entry.result_slot, k, i, d, adjoint[src]))
    bump("partial_evals", state.partial_evals)
    return state


def backward(tape: Tape, seed: float | Sequence[float] = 1.0) -> dict[str, float]:
    """Adjoints of the tape's variables for the given output seed(s)."""
    state = backward_state(tape, seed)
    return {name: state.adjoint[slot] for name, slot in tape.variable_slots.items()}


def grad(graph: Graph, bindings: Bindings) -> tuple[float, dict[str, float]]:
    """Value and gradient of a single-output graph: one record, one sweep."""
    if len(graph.outputs) != 1:
        raise ContractError(
            f"grad needs a single-output graph (got {len(graph.outputs)}); "
            "use record + backward with one seed per output"
        )
    value, tape = record(graph, bindings)
    return value, backward(tape, 1.0)


def replay_values(tape: Tape) -> list[float]:
    """Slot values reconstructed from the tape alone."""
    return [tape.slot_value(s) for s in range(tape.n_slots)]


def slot_of_node(graph: Graph, tape: Tape) -> Mapping[int, int]:
    """Map NodeId -> tape slot for a tape produced by :func:`record`."""
    out = {j: tape.variable_slots[name] for j, name in graph.variables()}
    for e in tape.entries:
        if e.node is not None:
            out[e.node] = e.result_slot
    return out

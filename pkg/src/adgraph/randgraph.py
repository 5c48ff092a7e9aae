"""Seeded random straight-line programs for property and acceptance tests.

Programs are grown one node at a time while tracking the primal values at
the sampled bindings, and an operation is only accepted if its inputs sit
well inside the primitive's domain (``ln`` args >= 0.1, divisors >= 0.2 in
magnitude, ``^`` bases >= 0.2 ...) and every value stays within +-1000.
Those margins keep gradient checks away from domain boundaries.

:func:`program_suite` additionally discards programs whose central
difference is not yet converged at the checking step: the estimates at
``h`` and ``2h`` must agree to ``1e-7`` (relative, unit floor).  Truncation
error scales with ``h^2``, so this bounds the finite-difference error at
``h`` near ``3e-8`` using primal evaluations only.  It drops points of
extreme curvature (nested ``exp``/``cos``, self-powers) and perturbations
that leave a primitive's domain.
"""

from __future__ import annotations

import math
import random

from .core import Graph, GraphBuilder, Op, primitive_value, prune
from .dataflow import evaluate
from .errors import DomainError

VALUE_BOUND = 1e3

_WEIGHTS = {
    Op.ADD: 4,
    Op.SUB: 4,
    Op.MUL: 4,
    Op.DIV: 2,
    Op.NEG: 1,
    Op.LN: 2,
    Op.SIN: 2,
    Op.COS: 2,
    Op.EXP: 1,
    Op.POW: 2,
    Op.CONST: 2,
}


def _safe(op: Op, xs: list[float]) -> bool:
    match op:
        case Op.LN:
            return xs[0] >= 0.1
        case Op.DIV:
            return abs(xs[1]) >= 0.2
        case Op.EXP:
            return xs[0] <= 4.0
        case Op.POW:
            return xs[0] >= 0.2 and abs(xs[1]) <= 3.0
    return True


def random_program(
    rng: random.Random, max_nodes: int = 50, max_vars: int = 4
) -> tuple[Graph, dict[str, float]]:
    """A single-output graph of at most ``max_nodes`` nodes and safe bindings."""
    n_vars = rng.randint(1, max_vars)
    bindings = {f"x{k + 1}": round(rng.uniform(-2.0, 2.0), 3) for k in range(n_vars)}
    b = GraphBuilder()
    values: list[float] = []
    unused: list[int] = []
    for name, v in bindings.items():
        unused.append(b.var(name))
        values.append(v)
    target = rng.randint(n_vars + 1, max_nodes)
    ops = list(_WEIGHTS)
    weights = list(_WEIGHTS.values())

    def operand() -> int:
        if unused and rng.random() < 0.6:
            return rng.choice(unused)
        # bias towards recent nodes to get deep chains
        n = len(values)
        return max(0, n - 1 - int(rng.expovariate(0.3)))

    attempts = 0
    while len(b.nodes) < target and attempts < 20 * max_nodes:
        attempts += 1
        op = rng.choices(ops, weights)[0]
        if op is Op.CONST:
            c = rng.choice([0.5, 1.0, 2.0, 3.0, round(rng.uniform(-3.0, 3.0), 2)])
            b.const(c)
            values.append(c)
            unused.append(len(values) - 1)
            continue
        if op is Op.POW and rng.random() < 0.7:
            # mostly constant exponents, like x^2
            base = operand()
            if not _safe(Op.POW, [values[base], 0.0]):
                continue
            e = rng.choice([2.0, 3.0, 0.5, -1.0, 1.5])
            if len(b.nodes) + 2 > target:
                continue
            exp_id = b.const(e)
            values.append(e)
            ins = [base, exp_id]
        else:
            ins = [operand() for _ in range(op.arity)]
        xs = [values[i] for i in ins]
        if not _safe(op, xs):
            continue
        try:
            v = primitive_value(op, xs)
        except DomainError:
            continue
        if not math.isfinite(v) or abs(v) > VALUE_BOUND:
            continue
        j = b.apply(op, *ins)
        values.append(v)
        for i in ins:
            if i in unused:
                unused.remove(i)
        unused.append(j)
    ops_ids = [j for j, node in enumerate(b.nodes) if not node.op.is_leaf]
    out = ops_ids[-1] if ops_ids else 0
    b_graph = Graph(tuple(b.nodes), (out,), True)
    graph = prune(b_graph)
    live_names = set(graph.variable_names())
    return graph, {k: v for k, v in bindings.items() if k in live_names}


def _central(graph: Graph, bindings: dict[str, float], name: str, h: float) -> float:
    up, down = dict(bindings), dict(bindings)
    up[name] += h
    down[name] -= h
    return (evaluate(graph, up).value - evaluate(graph, down).value) / (2 * h)


def fd_converged(graph: Graph, bindings: dict[str, float], h: float = 1e-6, tol: float = 1e-7) -> bool:
    """True if central differences at ``h`` and ``2h`` agree for every variable."""
    try:
        for name in bindings:
            a, b = _central(graph, bindings, name, h), _central(graph, bindings, name, 2 * h)
            if abs(a - b) > tol * max(1.0, abs(a), abs(b)):
                return False
    except DomainError:
        return False
    return True


def program_suite(
    n: int, seed: int = 0, max_nodes: int = 50, screen_h: float | None = 1e-6
) -> list[tuple[Graph, dict[str, float]]]:
    """``n`` programs; with ``screen_h`` set, only finite-difference-friendly ones."""
    rng = random.Random(seed)
    suite = []
    while len(suite) < n:
        graph, bindings = random_program(rng, max_nodes)
        if screen_h is None or fd_converged(graph, bindings, screen_h):
            suite.append((graph, bindings))
    return suite

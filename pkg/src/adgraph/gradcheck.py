"""Central-difference gradient checking against the tape gradient."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import Bindings, Graph
from .dataflow import evaluate
from .errors import DomainError
from .parser import compile_source
from .tape import grad
from .trace import select_output

DEFAULT_H = 1e-6
DEFAULT_TOL = 1e-5


def relative_error(a: float, b: float) -> float:
    """``|a - b| / max(1, |a|, |b|)``.

    The unit floor turns the measure absolute for gradients below one in
    magnitude, where round-off around an exact zero would otherwise read
    as a 100% error.
    """
    if a == b:
        return 0.0
    return abs(a - b) / max(1.0, abs(a), abs(b))


@dataclass
class VariableCheck:
    name: str
    analytic: float
    numeric: float | None
    rel_error: float
    status: str  # "ok", "fail" or "inconclusive"
    note: str = ""


@dataclass
class GradCheckReport:
    checks: list[VariableCheck] = field(default_factory=list)
    h: float = DEFAULT_H
    tolerance: float = DEFAULT_TOL

    @property
    def max_rel_error(self) -> float:
        return max((c.rel_error for c in self.checks), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance

    def text(self, decimals: int | None = None) -> str:
        from .trace import _fmt

        rows = [f"{'variable':<12} {'analytic':>24} {'numeric':>24} {'rel.err':>10}  status"]
        for c in self.checks:
            numeric = "-" if c.numeric is None else _fmt(c.numeric, decimals)
            rows.append(
                f"{c.name:<12} {_fmt(c.analytic, decimals):>24} {numeric:>24} "
                f"{c.rel_error:>10.3g}  {c.status}{'  ' + c.note if c.note else ''}"
            )
        verdict = "PASS" if self.passed else "FAIL"
        rows.append(
            f"max relative error {self.max_rel_error:.3g} (tol {self.tolerance:g}, h {self.h:g}): {verdict}"
        )
        return "\n".join(rows) + "\n"


def numeric_partial(graph: Graph, bindings: Bindings, name: str, h: float = DEFAULT_H) -> float:
    """``(f(v + h) - f(v - h)) / 2h`` by plain evaluation."""
    up, down = dict(bindings), dict(bindings)
    up[name] = bindings[name] + h
    down[name] = bindings[name] - h
    return (evaluate(graph, up).value - evaluate(graph, down).value) / (2 * h)


def gradcheck_graph(
    graph: Graph, bindings: Bindings, h: float = DEFAULT_H, tol: float = DEFAULT_TOL
) -> GradCheckReport:
    _, analytic = grad(graph, bindings)
    report = GradCheckReport(h=h, tolerance=tol)
    for name, a in analytic.items():
        try:
            n = numeric_partial(graph, bindings, name, h)
        except DomainError as err:
            # a perturbed point left the domain; the check says nothing here
            report.checks.append(VariableCheck(name, a, None, math.inf, "inconclusive", str(err)))
            continue
        err = relative_error(a, n)
        report.checks.append(VariableCheck(name, a, n, err, "ok" if err <= tol else "fail"))
    return report


def gradcheck(
    source: str,
    bindings: Bindings,
    h: float = DEFAULT_H,
    tol: float = DEFAULT_TOL,
    output: str | None = None,
) -> GradCheckReport:
    graph, names = compile_source(source)
    graph, _ = select_output(graph, names, output)
    return gradcheck_graph(graph, bindings, h, tol)

"""End-to-end acceptance checks.

Each test prints one ``PASS``/``FAIL`` line (shown even with output
capture on) and then asserts.  Run alone with::

    pytest tests/test_acceptance.py -v
"""

import time

import pytest

from adgraph.adjoint import build_adjoint, fold_adjoint, two_phase_grad
from adgraph.dataflow import evaluate, evaluate_with_schedule, random_schedule
from adgraph.forward import dual_evaluate, gradient_forward
from adgraph.gradcheck import gradcheck_graph, numeric_partial, relative_error
from adgraph.graphfile import deserialize_any, serialize
from adgraph.instrument import counting
from adgraph.parser import compile_source
from adgraph.randgraph import program_suite
from adgraph.tape import backward, grad, record
from adgraph.trace import render_trace, select_output

from .conftest import LN_MUL_SIN, LN_MUL_SIN_AT, SHARED_Z, SHARED_Z_AT, ln_mul_sin_direct

SUITE_SIZE = 1000
SUITE_SEED = 20240601
BUDGET_S = 30.0


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def suite():
    return program_suite(SUITE_SIZE, seed=SUITE_SEED)


def test_1_golden_value(report):
    graph, _ = compile_source(LN_MUL_SIN)
    program = build_adjoint(graph)
    reloaded = deserialize_any(serialize(fold_adjoint(program)))
    values = {
        "direct": evaluate(graph, LN_MUL_SIN_AT).value,
        "tape": record(graph, LN_MUL_SIN_AT)[0],
        "jvp": dual_evaluate(graph, LN_MUL_SIN_AT).values[graph.outputs[0]],
        "adjoint": two_phase_grad(program, LN_MUL_SIN_AT)[0],
        "file": two_phase_grad(reloaded, LN_MUL_SIN_AT)[0],
    }
    worst = max(abs(v - 11.652) for v in values.values())
    ok = worst <= 1e-3 and all(v == ln_mul_sin_direct(2.0, 5.0) for v in values.values())
    report(1, ok, f"value via 5 paths, max |v - 11.652| = {worst:.2e}")


def test_2_golden_gradient(report):
    graph, _ = compile_source(LN_MUL_SIN)
    grads = {
        "forward": gradient_forward(graph, LN_MUL_SIN_AT),
        "tape": grad(graph, LN_MUL_SIN_AT)[1],
        "adjoint": two_phase_grad(build_adjoint(graph), LN_MUL_SIN_AT)[1],
    }
    expected = {"x1": 5.5, "x2": 1.716}
    worst = max(abs(g[k] - v) for g in grads.values() for k, v in expected.items())
    report(2, worst <= 1e-3, f"3 modes, max deviation from {{5.5, 1.716}} = {worst:.2e}")


def test_3_trace_fidelity(report):
    text = render_trace(LN_MUL_SIN, LN_MUL_SIN_AT, decimals=3).text()
    primal, adjoint = text.split("Reverse adjoint trace")
    cells = lambda block: [line.rsplit(" = ", 1)[1] for line in block.splitlines() if line.startswith("  ")]
    want_primal = ["2.000", "5.000", "0.693", "10.000", "-0.959", "10.693", "11.652", "11.652"]
    want_adjoint = ["1.000", "1.000", "-1.000", "1.000", "1.000", "-0.284", "5.000", "1.716", "5.500",
                    "5.500", "1.716"]
    ok = cells(primal) == want_primal and cells(adjoint) == want_adjoint
    report(3, ok, f"{len(want_primal) + len(want_adjoint)} trace cells at 3 decimals")


def test_4_cross_mode_equivalence(report, suite):
    start = time.perf_counter()
    worst = 0.0
    for graph, at in suite:
        fwd = gradient_forward(graph, at)
        _, tape = grad(graph, at)
        _, adj = two_phase_grad(build_adjoint(graph), at)
        for name in fwd:
            worst = max(worst, relative_error(fwd[name], tape[name]), relative_error(tape[name], adj[name]),
                        relative_error(fwd[name], adj[name]))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < BUDGET_S
    report(4, ok, f"{len(suite)} programs, max rel. error {worst:.2e}, {elapsed:.1f} s")


def test_5_finite_difference_oracle(report, suite):
    start = time.perf_counter()
    failures = 0
    worst = 0.0
    for graph, at in suite:
        rep = gradcheck_graph(graph, at, h=1e-6, tol=1e-5)
        worst = max(worst, rep.max_rel_error)
        failures += not rep.passed
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < BUDGET_S
    report(5, ok, f"{len(suite)} programs, {failures} failures, max rel. error {worst:.2e}, {elapsed:.1f} s")


def test_6_schedule_independence(report):
    mismatches = 0
    for source, at in [(LN_MUL_SIN, LN_MUL_SIN_AT), (SHARED_Z, SHARED_Z_AT)]:
        graph, _ = compile_source(source)
        ref = evaluate(graph, at)
        mismatches += sum(evaluate_with_schedule(graph, at, random_schedule(s)) != ref for s in range(100))
    report(6, mismatches == 0, f"2 graphs x 100 random schedules, {mismatches} mismatches")


def test_7_cost_contracts(report):
    graph, _ = compile_source(LN_MUL_SIN)
    fig, names = compile_source(SHARED_Z)
    fig_y, _ = select_output(fig, names, "Y")
    problems = []
    for g, at in [(graph, LN_MUL_SIN_AT), (fig_y, SHARED_Z_AT)]:
        n = len(g.variable_names())
        with counting() as d:
            gradient_forward(g, at)
        if (d["jvp_passes"], d["firings"]) != (n, n * len(g)):
            problems.append(f"forward {dict(d)}")
        _, tape = record(g, at)
        with counting() as d:
            backward(tape)
        if (d["backward_sweeps"], d["partial_evals"]) != (1, tape.total_arity):
            problems.append(f"tape {dict(d)}")
    with counting() as d:
        program = build_adjoint(graph)
        for _ in range(100):
            two_phase_grad(program, LN_MUL_SIN_AT)
    with counting() as t:
        for _ in range(100):
            grad(graph, LN_MUL_SIN_AT)
    if (d["adjoint_builds"], t["tape_builds"]) != (1, 100):
        problems.append(f"builds {d['adjoint_builds']} vs {t['tape_builds']}")
    report(7, not problems, "; ".join(problems) or "pass, sweep and build counts exact")


def test_8_persistence(report, suite):
    graph, _ = compile_source(LN_MUL_SIN)
    objects = [graph, build_adjoint(graph), fold_adjoint(build_adjoint(graph))]
    objects += [g for g, _ in suite[:100]]
    unstable = sum(serialize(deserialize_any(serialize(o))) != serialize(o) for o in objects)
    _, g = two_phase_grad(deserialize_any(serialize(objects[2])), LN_MUL_SIN_AT)
    ok = unstable == 0 and abs(g["x1"] - 5.5) <= 1e-3 and abs(g["x2"] - 1.716) <= 1e-3
    report(8, ok, f"{len(objects)} round trips, {unstable} unstable; reloaded folded gradient {g}")


def test_9_shared_z(report):
    graph, names = compile_source(SHARED_Z)
    outputs = dict(zip(names.output_names, evaluate(graph, SHARED_Z_AT).outputs))
    y, _ = select_output(graph, names, "Y")
    expected = {"A": 33.0, "B": 21.0, "C": 11.0}
    fd_ok = all(relative_error(numeric_partial(y, SHARED_Z_AT, k), v) <= 1e-5 for k, v in expected.items())
    modes = [gradient_forward(y, SHARED_Z_AT), grad(y, SHARED_Z_AT)[1], two_phase_grad(build_adjoint(y), SHARED_Z_AT)[1]]
    ok = outputs == {"Z": 7.0, "W": 11.0, "Y": 25.0} and fd_ok and all(m == expected for m in modes)
    report(9, ok, f"outputs {outputs}, dY = {modes[1]}")

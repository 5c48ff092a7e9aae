import re

from adgraph.adjoint import build_adjoint
from adgraph.parser import compile_source
from adgraph.trace import display_names, primed, render_trace, to_dot

from .conftest import LN_MUL_SIN, LN_MUL_SIN_AT

PRIMAL = [
    ("v-1", "x1", "2.000"),
    ("v0", "x2", "5.000"),
    ("v1", "ln(v-1)", "0.693"),
    ("v2", "v-1 * v0", "10.000"),
    ("v3", "sin(v0)", "-0.959"),
    ("v4", "v1 + v2", "10.693"),
    ("v5", "v4 - v3", "11.652"),
    ("y", "v5", "11.652"),
]

ADJOINT = [
    ("v'5", "y'", "1.000"),
    ("v'4", "v'5 * 1", "1.000"),
    ("v'3", "v'5 * (-1)", "-1.000"),
    ("v'1", "v'4 * 1", "1.000"),
    ("v'2", "v'4 * 1", "1.000"),
    ("v'0", "v'3 * cos(v0)", "-0.284"),
    ("v'-1", "v'2 * v0", "5.000"),
    ("v'0", "v'0 + v'2 * v-1", "1.716"),
    ("v'-1", "v'-1 + v'1 / v-1", "5.500"),
    ("x'1", "v'-1", "5.500"),
    ("x'2", "v'0", "1.716"),
]


def _split(text):
    primal, adjoint = text.split("Reverse adjoint trace\n")
    rows = lambda block: [
        tuple(p.strip() for p in line.split(" = ")) for line in block.splitlines() if line.startswith("  ")
    ]
    return rows(primal), rows(adjoint)


def test_ln_mul_sin_trace_rows():
    primal, adjoint = _split(render_trace(LN_MUL_SIN, LN_MUL_SIN_AT).text())
    assert primal == PRIMAL
    assert adjoint == ADJOINT


def test_trace_sections_in_order():
    text = render_trace(LN_MUL_SIN, LN_MUL_SIN_AT).text()
    assert text.index("Forward primal trace") < text.index("Reverse adjoint trace")


def test_single_var_trace():
    primal, adjoint = _split(render_trace("x", {"x": 7.0}).text())
    assert primal == [("y", "v0", "x", "7.000")]
    assert adjoint == [("x'", "v'0", "y'", "1.000")]


def test_negative_zero_prints_unsigned():
    text = render_trace("0 * x - 0 * x", {"x": -1.0}).text()
    assert "-0.000" not in text


def test_display_names_and_primes(ln_mul_sin):
    graph, _ = ln_mul_sin
    assert display_names(graph) == {0: "v-1", 1: "v0", 2: "v1", 3: "v2", 4: "v3", 5: "v4", 6: "v5"}
    assert primed("x1") == "x'1" and primed("rate") == "rate'"


def test_dot_counts(ln_mul_sin):
    graph, names = ln_mul_sin
    dot = to_dot(graph, names)
    assert dot.startswith("digraph adgraph {")
    assert len(re.findall(r"^\s+n\d+ \[", dot, re.M)) == 7
    assert len(re.findall(r"->", dot)) == 8
    assert "peripheries=2" in dot


def test_dot_single_var():
    graph, names = compile_source("x")
    dot = to_dot(graph, names)
    assert len(re.findall(r"^\s+n\d+ \[", dot, re.M)) == 1
    assert "->" not in dot


def test_adjoint_dot_shows_seed(ln_mul_sin):
    graph, _ = ln_mul_sin
    assert "__seed" in to_dot(build_adjoint(graph).combined)


def test_dot_is_deterministic(ln_mul_sin):
    graph, names = ln_mul_sin
    assert to_dot(graph, names) == to_dot(*compile_source(LN_MUL_SIN))


def test_square_trace_accumulates_twice():
    _, adjoint = _split(render_trace("y := x*x", {"x": 3.0}).text())
    into_x = [row for row in adjoint if row[0] == "v'0"]
    assert [row[-1] for row in into_x] == ["3.000", "6.000"]
    assert adjoint[-1] == ("x'", "v'0", "6.000")

import math

from adgraph.gradcheck import gradcheck, numeric_partial, relative_error
from adgraph.parser import compile_source

from .conftest import LN_MUL_SIN, LN_MUL_SIN_AT


def test_ln_mul_sin_passes():
    report = gradcheck(LN_MUL_SIN, LN_MUL_SIN_AT)
    assert report.passed
    assert report.max_rel_error <= 1e-5
    assert [c.status for c in report.checks] == ["ok", "ok"]


def test_linear_is_exact_with_power_of_two_step():
    graph, _ = compile_source("3*x")
    assert numeric_partial(graph, {"x": 1.7}, "x", h=2.0**-20) == 3.0
    assert gradcheck("3*x", {"x": 0.0}).max_rel_error <= 1e-12


def test_linear_at_generic_point_is_close():
    # x +- h is rounded, so a decimal h cannot be exact here
    assert gradcheck("3*x", {"x": 1.7}).max_rel_error <= 1e-9


def test_ln_near_zero_is_flagged():
    report = gradcheck("ln(x)", {"x": 1e-5})
    assert not report.passed
    check = report.checks[0]
    assert check.status == "fail"
    assert math.isfinite(check.rel_error) and check.rel_error > 1e-5
    assert "FAIL" in report.text()


def test_domain_exit_is_inconclusive():
    report = gradcheck("ln(x)", {"x": 1e-7})
    check = report.checks[0]
    assert check.status == "inconclusive"
    assert check.numeric is None and check.rel_error == math.inf
    assert not report.passed


def test_relative_error_has_a_unit_floor():
    assert relative_error(0.0, 1e-12) == 1e-12
    assert relative_error(200.0, 202.0) == 2.0 / 202.0
    assert relative_error(5.0, 5.0) == 0.0

import pytest
from hypothesis import given
from hypothesis import strategies as st

from adgraph.core import Op
from adgraph.dataflow import evaluate
from adgraph.errors import ContractError, DomainError
from adgraph.instrument import counting
from adgraph.parser import compile_source
from adgraph.randgraph import random_program
from adgraph.tape import Recorder, backward, backward_state, cos, exp, grad, ln, record, replay_values, sin

from .conftest import LN_MUL_SIN_AT, ln_mul_sin_direct


def test_ln_mul_sin_gradient(ln_mul_sin):
    graph, _ = ln_mul_sin
    value, g = grad(graph, LN_MUL_SIN_AT)
    assert value == ln_mul_sin_direct(2.0, 5.0)
    assert abs(g["x1"] - 5.5) <= 1e-3
    assert abs(g["x2"] - 1.716) <= 1e-3


def test_overloaded_recording_by_hand():
    rec = Recorder()
    x1 = rec.variable("x1", 2.0)
    x2 = rec.variable("x2", 5.0)
    y = ln(x1) + x1 * x2 - sin(x2)
    tape = rec.finish(y)
    assert y.value == ln_mul_sin_direct(2.0, 5.0)
    assert [e.op for e in tape.entries] == [Op.LN, Op.MUL, Op.ADD, Op.SIN, Op.SUB]
    g = backward(tape)
    assert g["x1"] == 5.5


def test_fallback_to_math_on_plain_floats():
    assert ln(1.0) == 0.0 and exp(0.0) == 1.0 and cos(0.0) == 1.0


def test_reflected_operators_record_constants():
    rec = Recorder()
    x = rec.variable("x", 2.0)
    y = 1 - 3 / x + 2**x
    tape = rec.finish(y)
    assert y.value == 1 - 3 / 2.0 + 4.0
    assert sum(e.op is Op.CONST for e in tape.entries) == 3


def test_variables_must_come_first():
    rec = Recorder()
    x = rec.variable("x", 1.0)
    _ = x * 2
    with pytest.raises(ContractError):
        rec.variable("z", 1.0)


def test_square_accumulates_two_contributions():
    graph, _ = compile_source("x*x")
    _, tape = record(graph, {"x": 3.0})
    state = backward_state(tape)
    slot = tape.variable_slots["x"]
    assert state.adjoint[slot] == 6.0
    assert state.contributions[slot] == 2


@given(st.sampled_from([0.0, 0.25, 0.5, 2.0, 4.0, -8.0]))
def test_seed_scales_gradient(seed):
    graph, _ = compile_source("ln(x1) + x1*x2 - sin(x2)")
    _, tape = record(graph, LN_MUL_SIN_AT)
    base = backward(tape, 1.0)
    scaled = backward(tape, seed)
    assert scaled == {k: seed * v for k, v in base.items()}


def test_single_reverse_sweep_with_one_partial_per_input_slot(ln_mul_sin):
    graph, _ = ln_mul_sin
    _, tape = record(graph, LN_MUL_SIN_AT)
    with counting() as delta:
        backward(tape)
    assert delta["backward_sweeps"] == 1
    assert delta["partial_evals"] == tape.total_arity == graph.edge_count()


def test_tape_has_one_entry_per_non_var_node(shared_z):
    graph, _ = shared_z
    _, tape = record(graph, {"A": 2.0, "B": 3.0, "C": 1.0})
    assert len(tape.entries) == sum(n.op is not Op.VAR for n in graph.nodes)


@pytest.mark.parametrize("seed", range(20))
def test_replay_matches_dataflow_valuation(seed):
    import random

    graph, at = random_program(random.Random(seed))
    _, tape = record(graph, at)
    val = evaluate(graph, at)
    from adgraph.tape import slot_of_node

    replayed = replay_values(tape)
    for j, s in slot_of_node(graph, tape).items():
        assert replayed[s] == val.values[j]


def test_multi_output_grad_is_a_contract_error(shared_z):
    graph, _ = shared_z
    with pytest.raises(ContractError):
        grad(graph, {"A": 2.0, "B": 3.0, "C": 1.0})


def test_constant_program_has_empty_gradient():
    graph, _ = compile_source("2 * 3")
    value, g = grad(graph, {})
    assert value == 6.0 and g == {}


def test_unused_variable_gets_zero():
    graph, _ = compile_source("y := x + 0*z")
    _, g = grad(graph, {"x": 1.0, "z": 4.0})
    assert g == {"x": 1.0, "z": 0.0}


def test_backward_domain_error_for_pow_exponent_partial():
    graph, _ = compile_source("x^e")
    with pytest.raises(DomainError):
        grad(graph, {"x": -2.0, "e": 2.0})

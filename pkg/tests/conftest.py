import math

import pytest

from adgraph.parser import compile_source

LN_MUL_SIN = "ln(x1) + x1*x2 - sin(x2)"
SHARED_Z = "Z := A * B + C\nW := Z + 4\nY := Z^2 - (3*Z + B)"
LN_MUL_SIN_AT = {"x1": 2.0, "x2": 5.0}
SHARED_Z_AT = {"A": 2.0, "B": 3.0, "C": 1.0}


def ln_mul_sin_direct(x1: float, x2: float) -> float:
    return math.log(x1) + x1 * x2 - math.sin(x2)


@pytest.fixture
def ln_mul_sin():
    return compile_source(LN_MUL_SIN)


@pytest.fixture
def shared_z():
    return compile_source(SHARED_Z)

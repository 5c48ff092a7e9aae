"""Scalar automatic differentiation over dataflow computation graphs.

Three interchangeable gradient backends share one graph model:

* :mod:`adgraph.forward`  forward mode (tangent propagation)
* :mod:`adgraph.tape`     reverse mode by operator overloading and a tape
* :mod:`adgraph.adjoint`  reverse mode by building an explicit adjoint graph
"""

from .adjoint import AdjointProgram, build_adjoint, constant_fold, fold_adjoint, two_phase_grad
from .core import Graph, GraphBuilder, Node, Op, primitive_partial, primitive_value, validate
from .dataflow import Valuation, evaluate, evaluate_with_schedule
from .errors import (
    ADError,
    BindingError,
    ContractError,
    DomainError,
    GraphError,
    GraphFileError,
    SourceError,
    StaticDomainError,
)
from .forward import gradient_forward, jvp
from .gradcheck import gradcheck, gradcheck_graph
from .graphfile import deserialize, deserialize_adjoint, serialize
from .parser import Program, compile_source, lower, parse, render
from .tape import backward, grad, record
from .trace import render_trace, to_dot

__version__ = "0.1.0"

__all__ = [
    "ADError", "AdjointProgram", "BindingError", "ContractError", "DomainError", "Graph",
    "GraphBuilder", "GraphError", "GraphFileError", "Node", "Op", "Program", "SourceError",
    "StaticDomainError", "Valuation", "backward", "build_adjoint", "compile_source",
    "constant_fold", "deserialize", "deserialize_adjoint", "evaluate", "evaluate_with_schedule",
    "fold_adjoint", "grad", "gradcheck", "gradcheck_graph", "gradient_forward", "jvp", "lower",
    "parse", "primitive_partial", "primitive_value", "record", "render", "render_trace",
    "serialize", "to_dot", "two_phase_grad", "validate",
]

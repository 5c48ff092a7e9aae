"""Command-line driver.

Exit codes: 0 success, 1 usage error, 2 parse error (DSL or graph file),
3 evaluation/domain error, 4 gradient check failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from . import adjoint as st
from .core import Graph, fmt_real
from .dataflow import evaluate
from .errors import (
    BindingError,
    ContractError,
    DomainError,
    GraphError,
    GraphFileError,
    SourceError,
)
from .forward import gradient_forward
from .gradcheck import DEFAULT_H, DEFAULT_TOL, gradcheck_graph
from .graphfile import deserialize_any, serialize
from .parser import compile_source
from .tape import grad
from .trace import select_output, to_dot, trace_table

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_EVAL, EXIT_CHECK = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _ArgParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _binding(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise UsageError(f"--bind expects name=value, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise UsageError(f"--bind value for {name!r} is not a number: {value!r}") from None


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror}") from None


def _num(x: float, decimals: int | None) -> str:
    return fmt_real(x) if decimals is None else f"{x:.{decimals}f}"


def build_parser() -> argparse.ArgumentParser:
    p = _ArgParser(prog="adgraph", description="Scalar automatic differentiation over dataflow graphs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_ArgParser)

    def add(name: str, help: str, *, source=True, binds=True, output=True, decimals=True):
        sp = sub.add_parser(name, help=help)
        if source:
            sp.add_argument("file", help="DSL source file ('-' for standard input)")
        if binds:
            sp.add_argument("--bind", action="append", default=[], metavar="NAME=VALUE")
        if output:
            sp.add_argument("--output", help="restrict a multi-output program to one output")
        if decimals:
            sp.add_argument("--decimals", type=int, metavar="N")
        return sp

    add("eval", "evaluate a program", output=False)
    g = add("grad", "value and gradient of a single-output program")
    g.add_argument("--mode", choices=["tape", "forward", "adjoint"], default="tape")
    t = add("trace", "print the primal and adjoint evaluation trace")
    t.set_defaults(decimals=3)
    d = add("dot", "Graphviz DOT of the program graph", binds=False, decimals=False)
    d.add_argument("--adjoint", action="store_true", help="include the adjoint program")
    c = add("compile", "write an adgraph v1 file", binds=False, decimals=False)
    c.add_argument("-o", "--out", required=True, metavar="GRAPHFILE")
    c.add_argument("--fold", action="store_true", help="constant-fold and drop dead nodes")
    c.add_argument("--primal", action="store_true", help="write the primal graph only")
    r = add("run", "evaluate an adgraph v1 file", source=False, output=False)
    r.add_argument("file", help="graph file ('-' for standard input)")
    r.add_argument("--seed", type=float, default=1.0, help="output seed for adjoint programs")
    k = add("gradcheck", "compare the tape gradient with central differences")
    k.add_argument("--h", type=float, default=DEFAULT_H)
    k.add_argument("--tol", type=float, default=DEFAULT_TOL)
    return p


def _bindings(args) -> dict[str, float]:
    return dict(_binding(b) for b in args.bind)


def _single(args) -> tuple[Graph, str, object]:
    graph, names = compile_source(_read(args.file))
    graph, out_name = select_output(graph, names, args.output)
    return graph, out_name, names


def _print_grad(value: float, gradient: dict[str, float], decimals: int | None, out) -> None:
    print(f"value {_num(value, decimals)}", file=out)
    for name, g in gradient.items():
        print(f"{name} {_num(g, decimals)}", file=out)


def run_command(args, out, err) -> int:
    match args.command:
        case "eval":
            graph, names = compile_source(_read(args.file))
            val = evaluate(graph, _bindings(args))
            if len(val.outputs) == 1:
                print(_num(val.outputs[0], args.decimals), file=out)
            else:
                for name, v in zip(names.output_names, val.outputs):
                    print(f"{name} {_num(v, args.decimals)}", file=out)
        case "grad":
            graph, _, _ = _single(args)
            bindings = _bindings(args)
            if args.mode == "tape":
                value, gradient = grad(graph, bindings)
            elif args.mode == "forward":
                value = evaluate(graph, bindings).value
                gradient = gradient_forward(graph, bindings)
            else:
                value, gradient = st.two_phase_grad(st.build_adjoint(graph), bindings)
            _print_grad(value, gradient, args.decimals, out)
        case "trace":
            graph, out_name, _ = _single(args)
            out.write(trace_table(graph, _bindings(args), out_name, args.decimals).text())
        case "dot":
            graph, names = compile_source(_read(args.file))
            if args.output:
                graph, _ = select_output(graph, names, args.output)
                names = None
            if args.adjoint:
                out.write(to_dot(st.build_adjoint(graph).combined))
            else:
                out.write(to_dot(graph, names))
        case "compile":
            graph, names = compile_source(_read(args.file))
            if args.output:
                graph, _ = select_output(graph, names, args.output)
            if args.primal:
                obj = st.constant_fold(graph) if args.fold else graph
            else:
                obj = st.build_adjoint(graph)
                if args.fold:
                    obj = st.fold_adjoint(obj)
            Path(args.out).write_text(serialize(obj))
        case "run":
            obj = deserialize_any(_read(args.file))
            bindings = _bindings(args)
            if isinstance(obj, st.AdjointProgram):
                seeds = [args.seed] * len(obj.primal_outputs)
                value, gradient = st.two_phase_grad(obj, bindings, seeds if len(seeds) > 1 else args.seed)
                _print_grad(value, gradient, args.decimals, out)
            else:
                val = evaluate(obj, bindings)
                if len(val.outputs) == 1:
                    print(_num(val.outputs[0], args.decimals), file=out)
                else:
                    for k, v in enumerate(val.outputs):
                        print(f"output{k} {_num(v, args.decimals)}", file=out)
        case "gradcheck":
            graph, _, _ = _single(args)
            report = gradcheck_graph(graph, _bindings(args), args.h, args.tol)
            if not report.passed:
                # failures go to the error stream like every other error path
                err.write(report.text(args.decimals))
                return EXIT_CHECK
            out.write(report.text(args.decimals))
    return EXIT_OK


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return run_command(args, out, err)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (UsageError, ContractError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    except (SourceError, GraphFileError) as exc:
        print(f"parse error: {exc}", file=err)
        return EXIT_PARSE
    except (DomainError, BindingError, GraphError) as exc:
        print(f"evaluation error: {exc}", file=err)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())

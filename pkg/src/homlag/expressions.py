"""Arithmetic expression trees: parsing, printing, and compilation to differentiable fields.

Expressions arrive either as infix strings (``"(2 - arctan(b/a))*(adot**2 + bdot**2)"``)
or as JSON trees (``{"op": "mul", "args": [...]}``, numbers, ``{"var": "a"}``).  Both
forms compile to closures over the polymorphic primitives in :mod:`homlag.diffkit`, so the
same tree evaluates on floats, arrays, hyper-duals and duals.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

from homlag import diffkit as dk
from homlag.errors import ScenarioError

UNARY = {
    "exp": dk.exp,
    "log": dk.log,
    "sqrt": dk.sqrt,
    "sin": dk.sin,
    "cos": dk.cos,
    "tan": dk.tan,
    "arctan": dk.arctan,
}
BINARY = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": dk.divide,
    "pow": dk.power,
    "arctan2": dk.arctan2,
}
ALIASES = {"atan": "arctan", "atan2": "arctan2"}
CONSTANTS = {"pi": math.pi}

_INFIX = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "**"}
_AST_OPS = {ast.Add: "add", ast.Sub: "sub", ast.Mult: "mul", ast.Div: "div", ast.Pow: "pow"}


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Op:
    op: str
    args: tuple


Expr = Union[Const, Var, Op]


def parse(source, path: str = "") -> Expr:
    """Parse an infix string or a JSON tree into an expression."""
    if isinstance(source, bool):
        raise ScenarioError("boolean is not an expression", path)
    if isinstance(source, (int, float)):
        return Const(float(source))
    if isinstance(source, str):
        try:
            tree = ast.parse(source.strip(), mode="eval")
        except SyntaxError as exc:
            raise ScenarioError(f"cannot parse expression {source!r}: {exc.msg}", path) from None
        return _from_ast(tree.body, path)
    if isinstance(source, Mapping):
        if "var" in source:
            return Var(str(source["var"]))
        if "const" in source:
            return Const(float(source["const"]))
        if "op" not in source:
            raise ScenarioError("expression object needs 'op', 'var' or 'const'", path)
        op = ALIASES.get(source["op"], source["op"])
        args = tuple(
            parse(a, f"{path}/args/{i}") for i, a in enumerate(source.get("args", ()))
        )
        return _make_op(op, args, path)
    raise ScenarioError(f"unsupported expression type {type(source).__name__}", path)


def _make_op(op: str, args: tuple, path: str) -> Op:
    if op == "neg":
        want = 1
    elif op in UNARY:
        want = 1
    elif op in BINARY:
        want = 2
    else:
        raise ScenarioError(f"unknown primitive {op!r}", path)
    if len(args) != want:
        raise ScenarioError(f"{op} takes {want} argument(s), got {len(args)}", path)
    return Op(op, args)


def _from_ast(node, path: str) -> Expr:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        if isinstance(node.value, bool):
            raise ScenarioError("boolean literal in expression", path)
        return Const(float(node.value))
    if isinstance(node, ast.Name):
        if node.id in CONSTANTS:
            return Const(CONSTANTS[node.id])
        return Var(node.id)
    if isinstance(node, ast.BinOp) and type(node.op) in _AST_OPS:
        return Op(
            _AST_OPS[type(node.op)], (_from_ast(node.left, path), _from_ast(node.right, path))
        )
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _from_ast(node.operand, path)
        if isinstance(node.op, ast.UAdd):
            return inner
        if isinstance(inner, Const):
            return Const(-inner.value)
        return Op("neg", (inner,))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        name = ALIASES.get(node.func.id, node.func.id)
        return _make_op(name, tuple(_from_ast(a, path) for a in node.args), path)
    raise ScenarioError(f"unsupported syntax {ast.dump(node)[:60]}", path)


def to_string(expr: Expr) -> str:
    """Infix rendering that parses back to an identical tree."""
    if isinstance(expr, Const):
        return repr(expr.value) if expr.value >= 0 else f"({expr.value!r})"
    if isinstance(expr, Var):
        return expr.name
    if expr.op == "neg":
        return f"(-{to_string(expr.args[0])})"
    if expr.op in _INFIX:
        a, b = (to_string(x) for x in expr.args)
        return f"({a} {_INFIX[expr.op]} {b})"
    return f"{expr.op}({', '.join(to_string(a) for a in expr.args)})"


def to_tree(expr: Expr):
    """JSON-tree rendering."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        return {"var": expr.name}
    return {"op": expr.op, "args": [to_tree(a) for a in expr.args]}


def free_vars(expr: Expr) -> set:
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Op):
        return set().union(*(free_vars(a) for a in expr.args))
    return set()


def _closure(expr: Expr, index: Mapping[str, int]) -> Callable:
    if isinstance(expr, Const):
        value = expr.value
        return lambda args: value
    if isinstance(expr, Var):
        k = index[expr.name]
        return lambda args: args[k]
    subs = [_closure(a, index) for a in expr.args]
    if expr.op == "neg":
        (f,) = subs
        return lambda args: -f(args)
    if expr.op in UNARY:
        fn = UNARY[expr.op]
        (f,) = subs
        return lambda args: fn(f(args))
    fn = BINARY[expr.op]
    f, g = subs
    return lambda args: fn(f(args), g(args))


def compile_expr(expr: Expr, variables: Sequence[str], path: str = "") -> Callable:
    unknown = free_vars(expr) - set(variables)
    if unknown:
        raise ScenarioError(
            f"unknown variable(s) {sorted(unknown)}; allowed: {list(variables)}", path
        )
    body = _closure(expr, {name: i for i, name in enumerate(variables)})
    return lambda *args: body(args)


def compile_field(expr: Expr, variables: Sequence[str], name: str = "", path: str = ""):
    return dk.ScalarField(len(variables), compile_expr(expr, variables, path), name)


def compile_map(exprs: Sequence[Expr], variables: Sequence[str], name: str = "", path: str = ""):
    fns = [compile_expr(e, variables, f"{path}/{i}") for i, e in enumerate(exprs)]
    return dk.VectorMap(len(variables), len(fns), lambda *a: [fn(*a) for fn in fns], name)

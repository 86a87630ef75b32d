"""Arithmetic expressions over named single-variable functions.

Grammar (``^`` binds tightest, all operators left-associative)::

    expr   := term ('+' term)*
    term   := power ('*' power)*
    power  := atom ('^' INT)*
    atom   := ['-'|'+'] NUMBER | NAME '(' NAME ')' | '(' expr ')'

``compile`` lowers an AST straight to a network that mirrors the circuit:
function tensors at the leaves, control add/mul tensors at the inner
nodes, COPY tensors wherever a variable is used more than once.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from actn.circuit import QuadratureRule, add_tensor, constant_tensor, copy_tensor, function_tensor, mul_tensor
from actn.network import ContractionReport, TensorNetwork, contract_exact, contract_network
from actn.tensor import Tensor


@dataclass(frozen=True)
class FunctionRef:
    name: str
    var: str


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Add:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow:
    base: Expr
    exponent: int

    def __post_init__(self):
        if int(self.exponent) != self.exponent or self.exponent < 1:
            raise ValueError(f"exponent must be a positive integer, got {self.exponent}")


Expr = Union[FunctionRef, Constant, Add, Mul, Pow]


class ExprSyntaxError(ValueError):
    def __init__(self, offset: int, expected: str, found: str):
        self.offset = offset
        self.expected = expected
        self.found = found
        super().__init__(f"at offset {offset}: expected {expected}, found {found}")


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens, pos = [], 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos == len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(pos, "a number, name, operator or parenthesis", repr(text[pos]))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind, value=None, expected=None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExprSyntaxError(tok[2], expected or repr(value or kind), found)
        self.i += 1
        return tok

    def at(self, value):
        tok = self.peek()
        return tok[0] == "op" and tok[1] == value

    def expr(self):
        node = self.term()
        while self.at("+"):
            self.i += 1
            node = Add(node, self.term())
        return node

    def term(self):
        node = self.power()
        while self.at("*"):
            self.i += 1
            node = Mul(node, self.power())
        return node

    def power(self):
        node = self.atom()
        while self.at("^"):
            self.i += 1
            kind, text, off = self.take("num", expected="a positive integer exponent")
            if not text.isdigit() or int(text) < 1:
                raise ExprSyntaxError(off, "a positive integer exponent", repr(text))
            node = Pow(node, int(text))
        return node

    def atom(self):
        kind, text, off = self.peek()
        if self.at("-") or self.at("+"):
            self.i += 1
            num = self.take("num", expected="a number after sign")[1]
            return Constant(-float(num) if text == "-" else float(num))
        if kind == "num":
            self.i += 1
            return Constant(float(text))
        if kind == "name":
            self.i += 1
            self.take("op", "(", expected="'(' after function name")
            var = self.take("name", expected="a variable name")[1]
            self.take("op", ")", expected="')'")
            return FunctionRef(text, var)
        if self.at("("):
            self.i += 1
            node = self.expr()
            self.take("op", ")", expected="')'")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(off, "a number, function call or '('", found)


def parse(text: str) -> Expr:
    p = _Parser(text)
    node = p.expr()
    kind, value, off = p.peek()
    if kind != "end":
        raise ExprSyntaxError(off, "'+', '*', '^' or end of input", repr(value))
    return node


_PREC = {Add: 1, Mul: 2, Pow: 3}


def to_text(node: Expr) -> str:
    """Print with the fewest parentheses that ``parse`` reads back to the same tree."""

    def wrap(child, min_prec):
        s = to_text(child)
        return f"({s})" if _PREC.get(type(child), 4) < min_prec else s

    if isinstance(node, FunctionRef):
        return f"{node.name}({node.var})"
    if isinstance(node, Constant):
        return repr(node.value)
    if isinstance(node, Add):
        return f"{wrap(node.left, 1)}+{wrap(node.right, 2)}"
    if isinstance(node, Mul):
        return f"{wrap(node.left, 2)}*{wrap(node.right, 3)}"
    if isinstance(node, Pow):
        return f"{wrap(node.base, 4)}^{node.exponent}"
    raise TypeError(f"not an expression node: {node!r}")


def variables(node: Expr) -> list[str]:
    """Distinct variables in order of first appearance."""
    out: list[str] = []

    def walk(n):
        if isinstance(n, FunctionRef):
            if n.var not in out:
                out.append(n.var)
        elif isinstance(n, (Add, Mul)):
            walk(n.left)
            walk(n.right)
        elif isinstance(n, Pow):
            walk(n.base)

    walk(node)
    return out


def expand_powers(node: Expr) -> Expr:
    """Replace ``Pow(b, k)`` by the left-nested product of ``k`` copies of ``b``."""
    if isinstance(node, (Add, Mul)):
        return type(node)(expand_powers(node.left), expand_powers(node.right))
    if isinstance(node, Pow):
        base = expand_powers(node.base)
        out = base
        for _ in range(node.exponent - 1):
            out = Mul(out, base)
        return out
    return node


@dataclass
class CompilationEnv:
    """Sample vectors for each function name and a quadrature grid for each variable."""

    bindings: dict[str, np.ndarray]
    grids: dict[str, QuadratureRule]

    def samples(self, ref: FunctionRef) -> np.ndarray:
        if ref.name not in self.bindings:
            raise KeyError(f"function {ref.name!r} is not bound")
        if ref.var not in self.grids:
            raise KeyError(f"variable {ref.var!r} has no grid")
        s = np.asarray(self.bindings[ref.name], dtype=np.float64)
        if s.shape != (self.grids[ref.var].G,):
            raise ValueError(
                f"{ref.name}({ref.var}): {s.size} samples but the grid of {ref.var!r} has {self.grids[ref.var].G} nodes"
            )
        return s


OUT = "@out"


def compile(node: Expr, env: CompilationEnv) -> TensorNetwork:  # noqa: A001
    """Lower ``node`` to a network with one open leg per variable.

    Control legs exist only below an ``Add``; a root ``Add`` leaves the open
    control leg ``@out`` whose index 1 carries the function value. A
    variable used ``m > 1`` times gets ``m - 1`` chained three-leg COPY
    tensors, its uses named ``var#1 .. var#m``.
    """
    node = expand_powers(node)
    uses: dict[str, int] = {}

    def count(n):
        if isinstance(n, FunctionRef):
            uses[n.var] = uses.get(n.var, 0) + 1
        elif isinstance(n, (Add, Mul)):
            count(n.left)
            count(n.right)

    count(node)
    tensors: list[Tensor] = []
    tags: list[str] = []
    seen: dict[str, int] = {}
    counter = [0]

    def fresh():
        counter[0] += 1
        return f"@c{counter[0]}"

    def var_leg(var):
        if uses[var] == 1:
            return var
        seen[var] = seen.get(var, 0) + 1
        return f"{var}#{seen[var]}"

    def lower(n, ctrl: str | None):
        if isinstance(n, FunctionRef):
            samples = env.samples(n)
            leg = var_leg(n.var)
            if ctrl is None:
                tensors.append(function_tensor(samples, with_control=False, var=leg))
            else:
                tensors.append(function_tensor(samples, var=leg, control=ctrl))
            tags.append("function")
        elif isinstance(n, Constant):
            tensors.append(constant_tensor(n.value, with_control=ctrl is not None, control=ctrl or "a"))
            tags.append("constant")
        elif isinstance(n, Mul):
            if ctrl is None:
                lower(n.left, None)
                lower(n.right, None)
            else:
                a, b = fresh(), fresh()
                tensors.append(mul_tensor((a, b, ctrl)))
                tags.append("mul")
                lower(n.left, a)
                lower(n.right, b)
        elif isinstance(n, Add):
            out = ctrl if ctrl is not None else fresh()
            a, b = fresh(), fresh()
            tensors.append(add_tensor((a, b, out)))
            tags.append("add")
            if ctrl is None:
                tensors.append(Tensor([out], [0.0, 1.0]))
                tags.append("select")
            lower(n.left, a)
            lower(n.right, b)
        else:
            raise TypeError(f"cannot compile {n!r}")

    lower(node, OUT if isinstance(node, Add) else None)

    for var, m in uses.items():
        if m == 1:
            continue
        G = env.grids[var].G
        prev = var
        for n in range(1, m - 1):
            link = f"{var}#~{n}"
            tensors.append(copy_tensor(G, 3, (prev, f"{var}#{n}", link)))
            tags.append("copy")
            prev = link
        tensors.append(copy_tensor(G, 3, (prev, f"{var}#{m - 1}", f"{var}#{m}")))
        tags.append("copy")
    return TensorNetwork(tensors, tags=tags)


def evaluate_at(tn: TensorNetwork, point: dict[str, int]) -> float:
    """Value of a compiled network at grid indices ``point``."""
    for leg in tn.open_legs:
        if leg == OUT:
            continue
        if leg not in point:
            raise KeyError(f"no grid index given for variable {leg!r}")
        tn = tn.select(leg, point[leg])
    if OUT in tn.open_legs:
        tn = tn.select(OUT, 1)
    return float(contract_network(tn).data)


def integrate(tn: TensorNetwork, rules: dict[str, QuadratureRule]) -> ContractionReport:
    """Attach quadrature weights to every variable leg and contract exactly."""
    for leg in tn.open_legs:
        if leg == OUT:
            continue
        if leg not in rules:
            raise KeyError(f"no quadrature rule for variable {leg!r}")
        if tn.leg_dim(leg) != rules[leg].G:
            raise ValueError(f"variable {leg!r} has {tn.leg_dim(leg)} grid points but its rule has {rules[leg].G}")
        tn = tn.add(Tensor([leg], rules[leg].weights), tag="weights")
    if OUT in tn.open_legs:
        tn = tn.select(OUT, 1)
    return contract_exact(tn)


def interpret_point(node: Expr, env: CompilationEnv, point: dict[str, int]) -> float:
    """Direct recursive evaluation, the reference semantics of the grammar."""
    if isinstance(node, FunctionRef):
        return float(env.samples(node)[point[node.var]])
    if isinstance(node, Constant):
        return node.value
    if isinstance(node, Add):
        return interpret_point(node.left, env, point) + interpret_point(node.right, env, point)
    if isinstance(node, Mul):
        return interpret_point(node.left, env, point) * interpret_point(node.right, env, point)
    if isinstance(node, Pow):
        return math.prod([interpret_point(node.base, env, point)] * node.exponent)
    raise TypeError(f"cannot interpret {node!r}")

"""Matrix-polynomial expressions: parsing, gate compilation, plain and secure evaluation.

Grammar (whitespace ignored)::

    expr   := term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := ['-'] atom ["'"] ['^' INT]
    atom   := INT | 'X' INT | '(' expr ')'

``X1`` is the first input. A trailing ``'`` transposes. Integer factors act as
scalars. Sums and products are folded right to left, so ``A*B*C`` is built as
``A*(B*C)`` and the last product of a monomial is computed first.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import DimensionMismatch, ExpressionSyntaxError, TooFewWorkers, UnknownInput
from .matrix import Matrix
from .procedures import (
    add_shares,
    change_basis,
    multiply_requirement,
    multiply_shares,
    scale_shares,
    transpose_shares,
)
from .sharing import ShareBundle
from .transcript import RunTranscript

MAX_POWER = 64


@dataclass(frozen=True)
class Input:
    index: int  # 1-based, as written

    def __str__(self):
        return f"X{self.index}"


@dataclass(frozen=True)
class Transpose:
    child: "Expr"

    def __str__(self):
        return f"({self.child})'"


@dataclass(frozen=True)
class Scale:
    q: int
    child: "Expr"

    def __str__(self):
        return f"{self.q}*({self.child})"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"({self.left} + {self.right})"


@dataclass(frozen=True)
class MatMul:
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"({self.left} * {self.right})"


Expr = Union[Input, Transpose, Scale, Add, MatMul]


@dataclass(frozen=True)
class _Const:
    """A scalar-only factor during parsing; never escapes the parser."""

    value: int


_TOKEN = re.compile(r"(\d+)|(X\d+)|(\S)")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos == len(text):
            break
        m = _TOKEN.match(text, pos)
        if m.group(1):
            out.append(("int", m.group(1), pos))
        elif m.group(2):
            out.append(("input", m.group(2), pos))
        else:
            ch = m.group(3)
            if ch not in "+-*()'^":
                raise ExpressionSyntaxError(f"unexpected character {ch!r}", pos)
            out.append((ch, ch, pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, modulus: int, n_inputs: int | None):
        self.toks = _tokenize(text)
        self.i = 0
        self.p = modulus
        self.n_inputs = n_inputs

    def peek(self):
        return self.toks[self.i]

    def take(self, kind: str | None = None):
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExpressionSyntaxError(f"expected {kind!r}, found {what}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        if isinstance(e, _Const):
            raise ExpressionSyntaxError("expression has no matrix input", 0)
        return e

    def expr(self):
        start = self.peek()[2]
        terms = [self.term()]
        while self.peek()[0] in "+-":
            op = self.take()
            t = self.term()
            terms.append(_negate(t, self.p) if op[0] == "-" else t)
        if all(isinstance(t, _Const) for t in terms):
            return _Const(sum(t.value for t in terms) % self.p)
        if any(isinstance(t, _Const) for t in terms):
            raise ExpressionSyntaxError("cannot add a scalar to a matrix", start)
        out = terms[-1]
        for t in reversed(terms[:-1]):
            out = Add(t, out)
        return out

    def term(self):
        factors = [self.factor()]
        while self.peek()[0] == "*":
            self.take()
            factors.append(self.factor())
        q = 1
        mats = []
        for f in factors:
            if isinstance(f, _Const):
                q = q * f.value % self.p
            else:
                mats.append(f)
        if not mats:
            return _Const(q)
        out = mats[-1]
        for f in reversed(mats[:-1]):
            out = MatMul(f, out)
        return out if q == 1 else _scale(q, out, self.p)

    def factor(self):
        neg = False
        if self.peek()[0] == "-":
            self.take()
            neg = True
        kind, val, pos = self.peek()
        if kind == "int":
            self.take()
            node = _Const(int(val) % self.p)
        elif kind == "input":
            self.take()
            idx = int(val[1:])
            if idx < 1 or (self.n_inputs is not None and idx > self.n_inputs):
                limit = "" if self.n_inputs is None else f" (have {self.n_inputs} inputs)"
                raise UnknownInput(f"unknown input {val} at position {pos}{limit}")
            node = Input(idx)
        elif kind == "(":
            self.take()
            node = self.expr()
            self.take(")")
        else:
            what = "end of input" if kind == "end" else repr(val)
            raise ExpressionSyntaxError(f"expected an operand, found {what}", pos)
        if self.peek()[0] == "'":
            tpos = self.take()[2]
            if isinstance(node, _Const):
                raise ExpressionSyntaxError("cannot transpose a scalar", tpos)
            node = Transpose(node)
        if self.peek()[0] == "^":
            self.take()
            kind, val, pos = self.take("int")
            power = int(val)
            if not 1 <= power <= MAX_POWER:
                raise ExpressionSyntaxError(f"exponent must lie in [1, {MAX_POWER}]", pos)
            node = _power(node, power, self.p)
        return _negate(node, self.p) if neg else node


def _scale(q: int, node, p: int):
    if isinstance(node, _Const):
        return _Const(q * node.value % p)
    if isinstance(node, Scale):
        return Scale(q * node.q % p, node.child)
    return Scale(q % p, node)


def _negate(node, p: int):
    return _scale(p - 1, node, p)


def _power(node, power: int, p: int):
    if isinstance(node, _Const):
        return _Const(pow(node.value, power, p))
    out = node
    for _ in range(power - 1):
        out = MatMul(node, out)
    return out


def parse_expression(text: str, modulus: int, n_inputs: int | None = None) -> Expr:
    """Parse ``text``; scalars are reduced mod ``modulus``.

    With ``n_inputs`` given, references beyond ``X{n_inputs}`` raise
    :class:`UnknownInput`.
    """
    return _Parser(text, modulus, n_inputs).parse()


def max_input(expr: Expr) -> int:
    if isinstance(expr, Input):
        return expr.index
    if isinstance(expr, (Transpose, Scale)):
        return max_input(expr.child)
    return max(max_input(expr.left), max_input(expr.right))


# ---------------------------------------------------------------- gates

Ref = tuple[str, int]  # ("input", 0-based source) or ("gate", gate id)


@dataclass(frozen=True)
class Gate:
    op: str  # "add" | "scale" | "matmul" | "transpose"
    args: tuple[Ref, ...]
    q: int | None = None
    # matmul only: left ref already holds P^T, so no transpose round is needed
    transpose_left: bool = False

    def to_dict(self) -> dict:
        d = {"op": self.op, "args": [list(a) for a in self.args]}
        if self.q is not None:
            d["q"] = self.q
        if self.op == "matmul":
            d["transpose_left"] = self.transpose_left
        return d


@dataclass(frozen=True)
class Circuit:
    gates: tuple[Gate, ...]
    output: Ref
    n_inputs: int

    @property
    def has_matmul(self) -> bool:
        return any(g.op == "matmul" for g in self.gates)

    def count(self, op: str) -> int:
        return sum(g.op == op for g in self.gates)

    def to_dict(self) -> dict:
        return {
            "inputs": self.n_inputs,
            "gates": [dict(id=i, **g.to_dict()) for i, g in enumerate(self.gates)],
            "output": list(self.output),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def compile_circuit(expr: Expr, n_inputs: int | None = None) -> Circuit:
    """Lower an expression to gates, right operands first.

    ``MatMul(Transpose(E), Q)`` uses E directly with ``transpose_left`` set.
    """
    gates: list[Gate] = []

    def emit(g: Gate) -> Ref:
        gates.append(g)
        return ("gate", len(gates) - 1)

    def walk(e: Expr) -> Ref:
        if isinstance(e, Input):
            return ("input", e.index - 1)
        if isinstance(e, Transpose):
            return emit(Gate("transpose", (walk(e.child),)))
        if isinstance(e, Scale):
            return emit(Gate("scale", (walk(e.child),), q=e.q))
        if isinstance(e, Add):
            r = walk(e.right)
            return emit(Gate("add", (walk(e.left), r)))
        if isinstance(e, MatMul):
            r = walk(e.right)
            if isinstance(e.left, Transpose):
                return emit(Gate("matmul", (walk(e.left.child), r), transpose_left=True))
            return emit(Gate("matmul", (walk(e.left), r)))
        raise TypeError(f"not an expression node: {e!r}")

    out = walk(expr)
    n = max_input(expr) if n_inputs is None else n_inputs
    return Circuit(tuple(gates), out, n)


def compile_text(text: str, modulus: int, n_inputs: int | None = None) -> Circuit:
    return compile_circuit(parse_expression(text, modulus, n_inputs), n_inputs)


# ------------------------------------------------------------ evaluation


def evaluate_plain(expr: Expr, inputs: Sequence[Matrix]) -> Matrix:
    """Direct AST walk over plaintext matrices."""
    if isinstance(expr, Input):
        if expr.index > len(inputs):
            raise UnknownInput(f"X{expr.index} referenced but only {len(inputs)} inputs given")
        return inputs[expr.index - 1]
    if isinstance(expr, Transpose):
        return evaluate_plain(expr.child, inputs).T
    if isinstance(expr, Scale):
        return evaluate_plain(expr.child, inputs).scale(expr.q)
    a = evaluate_plain(expr.left, inputs)
    b = evaluate_plain(expr.right, inputs)
    if isinstance(expr, Add):
        if a.shape != b.shape:
            raise DimensionMismatch(f"cannot add {a.shape} and {b.shape}")
        return a + b
    return a @ b


def evaluate_circuit_plain(circuit: Circuit, inputs: Sequence[Matrix]) -> Matrix:
    """Gate-by-gate plaintext evaluation, mirroring the secure dispatch."""
    vals: list[Matrix] = []

    def get(ref: Ref) -> Matrix:
        return inputs[ref[1]] if ref[0] == "input" else vals[ref[1]]

    for g in circuit.gates:
        if g.op == "add":
            vals.append(get(g.args[0]) + get(g.args[1]))
        elif g.op == "scale":
            vals.append(get(g.args[0]).scale(g.q))
        elif g.op == "transpose":
            vals.append(get(g.args[0]).T)
        else:
            left = get(g.args[0])
            lt = left if g.transpose_left else left.T
            vals.append(lt.T @ get(g.args[1]))
    return get(circuit.output)


def required_workers(k: int, t: int, has_matmul: bool) -> int:
    """Workers a circuit needs: depends only on (k, t) and whether it multiplies."""
    return multiply_requirement(k, t) if has_matmul else k + t - 1


def evaluate_secure(
    circuit: Circuit,
    inputs: Sequence[ShareBundle],
    transcript: RunTranscript | None = None,
    seed: int | None = None,
) -> ShareBundle:
    """Run the circuit on basis-1 sharings; the result is a basis-1 sharing."""
    if len(inputs) < circuit.n_inputs:
        raise UnknownInput(f"circuit reads {circuit.n_inputs} inputs, {len(inputs)} given")
    prm = inputs[0].params
    need = required_workers(prm.k, prm.t, circuit.has_matmul)
    if prm.N < need:
        raise TooFewWorkers(
            f"N={prm.N} workers is below the required {need} for k={prm.k}, t={prm.t} "
            f"(min{{2k^2+2t-3, k^2+kt+t-2}} for circuits with a matrix product)"
        )
    if transcript is None:
        transcript = RunTranscript({"N": prm.N, "t": prm.t, "k": prm.k})
    seed = prm.field.default_seed if seed is None else seed
    k = prm.k
    vals: list[ShareBundle] = []

    def get(ref: Ref) -> ShareBundle:
        return inputs[ref[1]] if ref[0] == "input" else vals[ref[1]]

    for gid, g in enumerate(circuit.gates):
        label = f"g{gid}"
        if g.op == "add":
            vals.append(add_shares(get(g.args[0]), get(g.args[1]), label))
        elif g.op == "scale":
            vals.append(scale_shares(get(g.args[0]), g.q, label, transcript))
        elif g.op == "transpose":
            vals.append(transpose_shares(get(g.args[0]), transcript, seed, label))
        elif g.op == "matmul":
            left = get(g.args[0])
            if not g.transpose_left:
                left = transpose_shares(left, transcript, seed, label + ".T")
            right = get(g.args[1])
            if k > 1:
                right = change_basis(right, k, transcript, seed, label + ".B")
            vals.append(multiply_shares(left, right, 1, transcript, seed, label))
        else:
            raise ValueError(f"unknown gate {g.op!r}")
    return get(circuit.output)

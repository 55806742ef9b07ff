"""A tiny expression builder for piecewise linear functions.

Tapes hold inputs, affine combinations, abs, max and min nodes.  They can
be evaluated directly (exact max/min/abs arithmetic) and lowered to an
abs-normal form using the rewrites

    max(u, w) = (u + w + |u - w|) / 2
    min(u, w) = (u + w - |u - w|) / 2

so direct evaluation serves as an independent oracle for everything the
abs-normal machinery computes.  Each abs/max/min occurrence creates one
fresh switching variable in tape order, which keeps L strictly lower
triangular by construction and makes lowering deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import AbsNormalForm

__all__ = ["Tape", "tape_eval", "lower", "schueth_tapes"]


@dataclass(frozen=True)
class _Node:
    kind: str                 # "input" | "affine" | "abs" | "max" | "min"
    args: tuple = ()          # node indices
    weights: tuple = ()       # affine only, aligned with args
    const: float = 0.0        # affine only
    index: int = -1           # input only


@dataclass
class Tape:
    """Ordered DAG of PL operations over n inputs."""

    n: int
    nodes: list = field(default_factory=list)
    outputs: list = field(default_factory=list)

    def _check(self, node: int) -> int:
        if not 0 <= node < len(self.nodes):
            raise ValueError(f"node {node} not on tape")
        return node

    def input(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise ValueError(f"input index {i} out of range for n={self.n}")
        self.nodes.append(_Node("input", index=i))
        return len(self.nodes) - 1

    def affine(self, terms, const: float = 0.0) -> int:
        """Linear combination sum(w * node) + const over earlier nodes."""
        args = tuple(self._check(node) for node, _ in terms)
        weights = tuple(float(w) for _, w in terms)
        self.nodes.append(_Node("affine", args=args, weights=weights, const=float(const)))
        return len(self.nodes) - 1

    def abs(self, v: int) -> int:
        self.nodes.append(_Node("abs", args=(self._check(v),)))
        return len(self.nodes) - 1

    def max(self, a: int, b: int) -> int:
        self.nodes.append(_Node("max", args=(self._check(a), self._check(b))))
        return len(self.nodes) - 1

    def min(self, a: int, b: int) -> int:
        self.nodes.append(_Node("min", args=(self._check(a), self._check(b))))
        return len(self.nodes) - 1

    def output(self, node: int) -> None:
        self.outputs.append(self._check(node))

    # conveniences used all over the tests
    def add(self, a: int, b: int) -> int:
        return self.affine([(a, 1.0), (b, 1.0)])

    def sub(self, a: int, b: int) -> int:
        return self.affine([(a, 1.0), (b, -1.0)])

    def scale(self, a: int, w: float) -> int:
        return self.affine([(a, w)])


def tape_eval(tape: Tape, x) -> np.ndarray:
    """Evaluate the tape directly; the reference semantics for lowering."""
    x = np.asarray(x, dtype=float)
    if x.shape != (tape.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({tape.n},)")
    vals = np.zeros(len(tape.nodes))
    for k, node in enumerate(tape.nodes):
        if node.kind == "input":
            vals[k] = x[node.index]
        elif node.kind == "affine":
            vals[k] = node.const + sum(w * vals[a] for a, w in zip(node.args, node.weights))
        elif node.kind == "abs":
            vals[k] = abs(vals[node.args[0]])
        elif node.kind == "max":
            vals[k] = max(vals[node.args[0]], vals[node.args[1]])
        elif node.kind == "min":
            vals[k] = min(vals[node.args[0]], vals[node.args[1]])
        else:  # pragma: no cover - constructor forbids it
            raise ValueError(f"unknown node kind {node.kind}")
    return vals[tape.outputs].copy()


class _AffineForm:
    """Value of a node as const + ax . x + al . |z| during lowering."""

    __slots__ = ("const", "ax", "al")

    def __init__(self, n: int, const: float = 0.0):
        self.const = const
        self.ax = np.zeros(n)
        self.al: dict[int, float] = {}


def _combine(n: int, terms, const: float = 0.0) -> _AffineForm:
    out = _AffineForm(n, const)
    for form, w in terms:
        out.const += w * form.const
        out.ax += w * form.ax
        for k, v in form.al.items():
            out.al[k] = out.al.get(k, 0.0) + w * v
    return out


def lower(tape: Tape) -> AbsNormalForm:
    """Lower the tape to an abs-normal form with one switch per kink node."""
    n = tape.n
    rows: list[tuple[float, np.ndarray, dict]] = []  # (c_k, Z_k row, L_k coeffs)
    forms: list[_AffineForm] = []

    def new_switch(arg: _AffineForm) -> _AffineForm:
        k = len(rows)
        rows.append((arg.const, arg.ax.copy(), dict(arg.al)))
        basis = _AffineForm(n)
        basis.al[k] = 1.0
        return basis

    for node in tape.nodes:
        if node.kind == "input":
            f = _AffineForm(n)
            f.ax[node.index] = 1.0
        elif node.kind == "affine":
            f = _combine(n, [(forms[a], w) for a, w in zip(node.args, node.weights)],
                         node.const)
        elif node.kind == "abs":
            f = new_switch(forms[node.args[0]])
        else:  # max / min via the half-sum rewrites
            u, w = forms[node.args[0]], forms[node.args[1]]
            box = new_switch(_combine(n, [(u, 1.0), (w, -1.0)]))
            sgn = 0.5 if node.kind == "max" else -0.5
            f = _combine(n, [(u, 0.5), (w, 0.5), (box, sgn)])
        forms.append(f)

    s, m = len(rows), len(tape.outputs)
    c = np.array([r[0] for r in rows]) if s else np.zeros(0)
    Z = np.array([r[1] for r in rows]) if s else np.zeros((0, n))
    L = np.zeros((s, s))
    for i, (_, _, al) in enumerate(rows):
        for j, v in al.items():
            L[i, j] = v
    b = np.zeros(m)
    J = np.zeros((m, n))
    Y = np.zeros((m, s))
    for i, node_id in enumerate(tape.outputs):
        f = forms[node_id]
        b[i] = f.const
        J[i] = f.ax
        for j, v in f.al.items():
            Y[i, j] = v
    return AbsNormalForm(c=c, b=b, Z=Z, L=L, J=J, Y=Y)


def schueth_tapes() -> Tape:
    """The even, simply switched map (|x1|-|x2|, |x1+x2|/2 - |x1-x2|/2)."""
    t = Tape(2)
    x1, x2 = t.input(0), t.input(1)
    a1, a2 = t.abs(x1), t.abs(x2)
    t.output(t.sub(a1, a2))
    a3 = t.abs(t.add(x1, x2))
    a4 = t.abs(t.sub(x1, x2))
    t.output(t.affine([(a3, 0.5), (a4, -0.5)]))
    return t

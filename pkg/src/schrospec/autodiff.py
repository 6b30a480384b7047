"""Exact derivatives for scalar-input networks.

Two cooperating pieces:

* :class:`Jet2` — a scalar truncated Taylor triple (value, d/dx, d2/dx2)
  with chain-rule arithmetic.  It is the slow, obviously-correct path;
  the batched kernels in ``_kernels`` implement the same propagation and
  are cross-checked against it.

* :class:`Var` / :class:`Tape` — a small reverse-mode engine over NumPy
  arrays.  Network applications enter the tape as single primitives
  backed by the kernel forward/backward passes, so a scalar loss built
  from jet components can be differentiated with respect to every
  network parameter.  Nodes are recorded in creation order and the
  reverse sweep visits them in fixed reverse order, which makes gradient
  accumulation deterministic for a fixed (params, batch).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import NumericError

__all__ = [
    "Jet2",
    "jet_variable",
    "Tape",
    "Var",
    "grad",
    "param_leaves",
    "net_jets",
    "net_values",
    "column",
    "element",
]


# ---------------------------------------------------------------------------
# Scalar second-order jets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Jet2:
    """Value and first two derivatives with respect to one scalar input."""

    value: float
    d1: float = 0.0
    d2: float = 0.0

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.value + other.value, self.d1 + other.d1, self.d2 + other.d2)
        return Jet2(self.value + other, self.d1, self.d2)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.d1, -self.d2)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet2):
            return Jet2(
                self.value * other.value,
                self.d1 * other.value + self.value * other.d1,
                self.d2 * other.value + 2.0 * self.d1 * other.d1 + self.value * other.d2,
            )
        return Jet2(self.value * other, self.d1 * other, self.d2 * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other._reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def _reciprocal(self):
        inv = 1.0 / self.value
        return Jet2(inv, -self.d1 * inv * inv, (2.0 * self.d1 * self.d1 * inv - self.d2) * inv * inv)

    def __pow__(self, p):
        f, g1, g2 = self.value, self.d1, self.d2
        fp1 = f ** (p - 1)
        return Jet2(f**p, p * fp1 * g1, p * (p - 1) * f ** (p - 2) * g1 * g1 + p * fp1 * g2)

    def tanh(self):
        t = math.tanh(self.value)
        s = 1.0 - t * t
        return Jet2(t, s * self.d1, s * self.d2 - 2.0 * t * s * self.d1 * self.d1)

    def exp(self):
        e = math.exp(self.value)
        return Jet2(e, e * self.d1, e * (self.d2 + self.d1 * self.d1))

    def sqrt(self):
        return self**0.5


def jet_variable(x: float) -> Jet2:
    """The jet of the identity at x: seed for d/dx propagation."""
    return Jet2(float(x), 1.0, 0.0)


# ---------------------------------------------------------------------------
# Reverse-mode tape over arrays
# ---------------------------------------------------------------------------


class Tape:
    """Creation-ordered operation record; one per training step."""

    __slots__ = ("_nodes",)

    def __init__(self):
        self._nodes: list[Var] = []

    def __len__(self):
        return len(self._nodes)


class Var:
    """Node on a tape: a float scalar or float64 ndarray plus its adjoint."""

    __slots__ = ("value", "grad", "tape", "_parents", "_vjp", "_idx")

    def __init__(self, value, tape: Tape, parents=(), vjp=None):
        self.value = value
        self.grad = None
        self.tape = tape
        self._parents = parents
        self._vjp = vjp
        self._idx = len(tape._nodes)
        tape._nodes.append(self)

    # -- helpers ------------------------------------------------------

    def _is_scalar(self):
        return not isinstance(self.value, np.ndarray)

    def _accumulate(self, g):
        self.grad = g if self.grad is None else self.grad + g

    def _lift(self, other):
        """Treat a non-Var operand as a constant."""
        if isinstance(other, Var):
            if other.tape is not self.tape:
                raise ValueError("operands recorded on different tapes")
            return other, True
        return other, False

    @staticmethod
    def _reduce_to(g, template):
        """Collapse an incoming adjoint onto a scalar operand if needed."""
        if not isinstance(template, np.ndarray):
            return float(np.sum(g))
        return g

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        o, is_var = self._lift(other)
        ov = o.value if is_var else o
        parents = (self, o) if is_var else (self,)

        def vjp(g):
            self._accumulate(self._reduce_to(g, self.value))
            if is_var:
                o._accumulate(self._reduce_to(g, ov))

        return Var(self.value + ov, self.tape, parents, vjp)

    __radd__ = __add__

    def __neg__(self):
        def vjp(g):
            self._accumulate(-g)

        return Var(-self.value, self.tape, (self,), vjp)

    def __sub__(self, other):
        o, is_var = self._lift(other)
        ov = o.value if is_var else o
        parents = (self, o) if is_var else (self,)

        def vjp(g):
            self._accumulate(self._reduce_to(g, self.value))
            if is_var:
                o._accumulate(self._reduce_to(-g, ov))

        return Var(self.value - ov, self.tape, parents, vjp)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o, is_var = self._lift(other)
        ov = o.value if is_var else o
        parents = (self, o) if is_var else (self,)
        sv = self.value

        def vjp(g):
            self._accumulate(self._reduce_to(g * ov, sv))
            if is_var:
                o._accumulate(self._reduce_to(g * sv, ov))

        return Var(sv * ov, self.tape, parents, vjp)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o, is_var = self._lift(other)
        ov = o.value if is_var else o
        sv = self.value

        if not is_var:
            return self * (1.0 / ov)

        def vjp(g):
            self._accumulate(self._reduce_to(g / ov, sv))
            o._accumulate(self._reduce_to(-g * sv / (ov * ov), ov))

        return Var(sv / ov, self.tape, (self, o), vjp)

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            raise TypeError("exponent must be a plain number")
        sv = self.value

        def vjp(g):
            self._accumulate(g * (p * sv ** (p - 1)))

        return Var(sv**p, self.tape, (self,), vjp)

    # -- elementwise functions -----------------------------------------

    def abs(self):
        sv = self.value
        sign = np.sign(sv) if isinstance(sv, np.ndarray) else float(np.sign(sv))

        def vjp(g):
            self._accumulate(g * sign)

        return Var(abs(sv) if not isinstance(sv, np.ndarray) else np.abs(sv), self.tape, (self,), vjp)

    __abs__ = abs

    def exp(self):
        ev = np.exp(self.value) if isinstance(self.value, np.ndarray) else math.exp(self.value)

        def vjp(g):
            self._accumulate(g * ev)

        return Var(ev, self.tape, (self,), vjp)

    def sqrt(self):
        rv = np.sqrt(self.value) if isinstance(self.value, np.ndarray) else math.sqrt(self.value)

        def vjp(g):
            self._accumulate(g * (0.5 / rv))

        return Var(rv, self.tape, (self,), vjp)

    # -- reductions -----------------------------------------------------

    def sum(self):
        sv = self.value

        def vjp(g):
            self._accumulate(np.full_like(sv, g))

        return Var(float(np.sum(sv)), self.tape, (self,), vjp)

    def mean(self):
        sv = self.value
        inv_n = 1.0 / sv.size

        def vjp(g):
            self._accumulate(np.full_like(sv, g * inv_n))

        return Var(float(np.mean(sv)), self.tape, (self,), vjp)


def column(v: Var, j: int) -> Var:
    """Extract column j of a (B, k) Var as a (B,) Var."""

    def vjp(g):
        full = np.zeros_like(v.value)
        full[:, j] = g
        v._accumulate(full)

    return Var(v.value[:, j], v.tape, (v,), vjp)


def element(v: Var, i: int, j: int) -> Var:
    """Extract one entry of a (B, k) Var as a scalar Var."""

    def vjp(g):
        full = np.zeros_like(v.value)
        full[i, j] = g
        v._accumulate(full)

    return Var(float(v.value[i, j]), v.tape, (v,), vjp)


def _plane(pack: Var, k: int) -> Var:
    def vjp(g):
        full = np.zeros_like(pack.value)
        full[k] = g
        pack._accumulate(full)

    return Var(pack.value[k], pack.tape, (pack,), vjp)


# ---------------------------------------------------------------------------
# Network primitives
# ---------------------------------------------------------------------------


def param_leaves(tape: Tape, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]):
    """Wrap raw parameter arrays as tape leaves."""
    wvars = [Var(w, tape) for w in weights]
    bvars = [Var(b, tape) for b in biases]
    return wvars, bvars


def net_jets(tape: Tape, wvars: Sequence[Var], bvars: Sequence[Var], x: np.ndarray):
    """Apply a tanh MLP to a batch, returning (value, d1, d2) Vars of
    shape (B, out) whose adjoints flow back into the parameter leaves."""
    weights = [w.value for w in wvars]
    biases = [b.value for b in bvars]
    val, d1, d2, cache = _kernels.jet_forward(weights, biases, x)
    pack_value = np.stack([val, d1, d2])

    def vjp(g):
        gw, gb = _kernels.jet_backward(weights, cache, g[0], g[1], g[2])
        for wv, gwi in zip(wvars, gw):
            wv._accumulate(gwi)
        for bv, gbi in zip(bvars, gb):
            bv._accumulate(gbi)

    pack = Var(pack_value, tape, tuple(wvars) + tuple(bvars), vjp)
    return _plane(pack, 0), _plane(pack, 1), _plane(pack, 2)


def net_values(tape: Tape, wvars: Sequence[Var], bvars: Sequence[Var], x: np.ndarray) -> Var:
    """Plain (no-jet) MLP application as a single tape primitive."""
    weights = [w.value for w in wvars]
    biases = [b.value for b in bvars]
    val, cache = _kernels.value_forward(weights, biases, x)

    def vjp(g):
        gw, gb = _kernels.value_backward(weights, cache, g)
        for wv, gwi in zip(wvars, gw):
            wv._accumulate(gwi)
        for bv, gbi in zip(bvars, gb):
            bv._accumulate(gbi)

    return Var(val, tape, tuple(wvars) + tuple(bvars), vjp)


# ---------------------------------------------------------------------------
# Reverse sweep
# ---------------------------------------------------------------------------


def grad(loss: Var, leaves: Sequence[Var]) -> list[np.ndarray]:
    """Gradient of a scalar Var with respect to leaf Vars.

    Deterministic: the sweep visits nodes in fixed reverse creation
    order, so identical inputs give bitwise-identical gradients.
    """
    if isinstance(loss.value, np.ndarray):
        raise ValueError("loss must be scalar")
    if not math.isfinite(loss.value):
        raise NumericError("cannot differentiate a non-finite loss")
    tape = loss.tape
    for node in tape._nodes:
        node.grad = None
    loss.grad = 1.0
    for node in reversed(tape._nodes[: loss._idx + 1]):
        if node.grad is not None and node._vjp is not None:
            node._vjp(node.grad)
    return [np.zeros_like(leaf.value) if leaf.grad is None else leaf.grad for leaf in leaves]

"""Reverse-mode automatic differentiation over dense float64 arrays.

Values are plain numpy arrays in row-major order. A :class:`Variable` wraps
one value together with a gradient buffer and, for non-leaf nodes, a record
of the operation that produced it: the parent variables plus a backward rule
mapping the output gradient to per-parent gradients. Running operations
therefore builds a fresh define-by-run graph each forward pass;
:func:`backward` walks that graph once in reverse topological order and
accumulates gradients, resetting accumulators first.

Variables are treated as immutable once created (optimizers assign new value
arrays rather than mutating buffers). A single graph is single-threaded;
disjoint graphs may be evaluated concurrently.
"""

from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np

Tensor = np.ndarray

# Maps d(loss)/d(output) to one gradient per parent (None = no gradient).
BackwardRule = Callable[[Tensor], Sequence["Tensor | None"]]

_node_ids = itertools.count()


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


def as_tensor(value) -> Tensor:
    """Coerce ``value`` to a float64 ndarray (the only dtype used here)."""
    return np.asarray(value, dtype=np.float64)


class Variable:
    """A node of the autodiff graph.

    Attributes
    ----------
    value : ndarray
        Float64 payload.
    grad : ndarray
        Gradient accumulator of identical shape. Starts at zero; populated
        by :func:`backward`. A variable on no path to the loss keeps an
        exactly-zero gradient.
    parents : tuple of Variable
        Inputs of the operation that produced this node (empty for leaves).
    backward_rule : callable or None
        Backward rule of the producing operation (None for leaves).
    """

    __slots__ = ("value", "grad", "parents", "backward_rule", "node_id", "name")

    def __init__(self, value, name: str = ""):
        self.value = as_tensor(value)
        self.grad = np.zeros_like(self.value)
        self.parents: tuple[Variable, ...] = ()
        self.backward_rule: BackwardRule | None = None
        self.node_id = next(_node_ids)
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.value)

    def __repr__(self) -> str:
        tag = self.name or ("leaf" if self.backward_rule is None else "op")
        return f"Variable(#{self.node_id} {tag} shape={self.value.shape})"

    # Arithmetic sugar. Variable-Variable ops require identical shapes;
    # plain numbers/arrays are treated as constants.

    def __add__(self, other):
        if isinstance(other, Variable):
            _check_same_shape("add", self.shape, other.shape)
            return make_op(self.value + other.value, (self, other),
                           lambda g: (g, g), "add")
        c = as_tensor(other)
        return make_op(self.value + c, (self,), lambda g: (g,), "add_const")

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, Variable):
            _check_same_shape("mul", self.shape, other.shape)
            a, b = self.value, other.value
            return make_op(a * b, (self, other),
                           lambda g: (g * b, g * a), "mul")
        c = as_tensor(other)
        return make_op(self.value * c, (self,), lambda g: (g * c,), "mul_const")

    __rmul__ = __mul__

    def __sub__(self, other):
        if isinstance(other, Variable):
            _check_same_shape("sub", self.shape, other.shape)
            return make_op(self.value - other.value, (self, other),
                           lambda g: (g, -g), "sub")
        return self.__add__(-as_tensor(other))

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __neg__(self):
        return make_op(-self.value, (self,), lambda g: (-g,), "neg")

    def __truediv__(self, other):
        if isinstance(other, Variable):
            raise TypeError("variable/variable division is not supported; "
                            "multiply by a reciprocal constant instead")
        c = as_tensor(other)
        return make_op(self.value / c, (self,), lambda g: (g / c,), "div_const")


def make_op(value, parents: Sequence[Variable], backward_rule: BackwardRule,
            name: str = "") -> Variable:
    """Create a non-leaf Variable recording ``parents`` and its backward rule."""
    out = Variable(value, name=name)
    out.parents = tuple(parents)
    out.backward_rule = backward_rule
    return out


def _check_same_shape(op: str, a: tuple, b: tuple) -> None:
    if a != b:
        raise ShapeError(f"{op}: operand shapes {a} and {b} do not match")


def topo_order(root: Variable) -> list[Variable]:
    """Operation records reachable from ``root``, every input before its use."""
    order: list[Variable] = []
    seen: set[int] = set()
    stack: list[tuple[Variable, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            stack.append((parent, False))
    return order


def backward(loss: Variable) -> None:
    """Populate ``grad`` with d(loss)/d(variable) for every reachable variable.

    The loss must be a scalar (shape ``()``). Gradient accumulators of all
    reachable variables are reset before the traversal, so repeated calls do
    not double-count.
    """
    if loss.value.shape != ():
        raise ShapeError(
            f"backward requires a scalar loss, got shape {loss.value.shape}")
    order = topo_order(loss)
    for node in order:
        node.grad = np.zeros_like(node.value)
    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        rule = node.backward_rule
        if rule is None:
            continue
        grads = rule(node.grad)
        for parent, g in zip(node.parents, grads):
            if g is None:
                continue
            if g.shape != parent.grad.shape:
                raise ShapeError(
                    f"backward rule of {node.name!r} returned gradient shape "
                    f"{g.shape} for parent shape {parent.grad.shape}")
            parent.grad += g

"""Vectorized reverse-mode automatic differentiation on a tape.

The engine is intentionally small: a handful of primitives (affine maps,
activation families with closed-form first/second derivatives, elementwise
arithmetic, reductions) recorded on a ``Tape``.  First and second input
derivatives of a network are propagated *forward* through the layers as
ordinary tape values, so the reverse sweep differentiates through them and
any scalar built from them — which is exactly what the PDE/boundary losses
need.  Only diagonal second derivatives are propagated; mixed partials are
unsupported by design.

Everything is double precision and the reduction order is fixed, so a given
tape yields bitwise-identical losses and gradients on one platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Tape",
    "Node",
    "Parameter",
    "ParameterSet",
    "GradientSet",
    "DerivBundle",
    "TaintedTapeError",
    "UnsupportedDerivativeError",
    "register_scalar_param",
    "backward",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "matmul",
    "square",
    "sqrt",
    "sin",
    "cos",
    "mean",
    "act_triple",
    "value_of",
]


class TaintedTapeError(RuntimeError):
    """A recorded primitive produced a non-finite value."""


class UnsupportedDerivativeError(RuntimeError):
    """A derivative the engine does not propagate (mixed partials) was requested."""


class Parameter:
    """A named trainable tensor (float64)."""

    __slots__ = ("name", "value")

    def __init__(self, name: str, value):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


class ParameterSet:
    """Ordered registry of trainable parameters.

    Holds both network weight tensors and registered physics scalars; the
    registration order fixes the order of every downstream reduction
    (gradients, optimizer state), which keeps runs reproducible.
    """

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def add(self, name: str, value) -> Parameter:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name!r}")
        p = Parameter(name, value)
        self._params[name] = p
        return p

    def register_scalar(self, name: str, value: float) -> Parameter:
        """Register a trainable scalar (e.g. an inverse-analysis physics parameter)."""
        return self.add(name, np.float64(value))

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name) -> bool:
        return name in self._params

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def copy(self) -> "ParameterSet":
        out = ParameterSet()
        for p in self:
            out.add(p.name, p.value.copy())
        return out


def register_scalar_param(params: ParameterSet, name: str, value: float) -> Parameter:
    """Register a named trainable scalar; duplicate names are rejected."""
    return params.register_scalar(name, value)


class GradientSet:
    """Gradients keyed by parameter name, in first-touch (reverse-sweep) order."""

    def __init__(self):
        self._grads: dict[str, np.ndarray] = {}

    def _accumulate(self, name: str, g: np.ndarray):
        if name in self._grads:
            self._grads[name] = self._grads[name] + g
        else:
            self._grads[name] = g

    def __getitem__(self, name: str) -> np.ndarray:
        return self._grads[name]

    def get(self, name: str, default=None):
        return self._grads.get(name, default)

    def __contains__(self, name) -> bool:
        return name in self._grads

    def items(self):
        return self._grads.items()

    def all_finite(self) -> bool:
        return all(np.isfinite(g).all() for g in self._grads.values())


class Node:
    """One value recorded on a tape."""

    __slots__ = ("tape", "idx", "value", "op", "_vjp", "grad", "param")
    __array_ufunc__ = None  # force numpy to defer to our reflected operators

    def __init__(self, tape, value, op, vjp):
        self.tape = tape
        self.value = value
        self.op = op
        self._vjp = vjp
        self.grad = None
        self.param = None

    @property
    def shape(self):
        return self.value.shape

    # operator sugar so physics formulas read naturally
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __repr__(self):
        return f"Node(op={self.op!r}, shape={self.value.shape})"


class Tape:
    """Linear record of primitives; the forward values are the record itself."""

    def __init__(self):
        self.nodes: list[Node] = []
        self._param_nodes: dict[str, Node] = {}

    def _record(self, value, op, vjp) -> Node:
        node = Node(self, np.asarray(value, dtype=np.float64), op, vjp)
        node.idx = len(self.nodes)
        self.nodes.append(node)
        return node

    def constant(self, value) -> Node:
        return self._record(value, "const", None)

    def leaf(self, param: Parameter) -> Node:
        """Tape node of a trainable parameter; one shared node per parameter."""
        node = self._param_nodes.get(param.name)
        if node is None:
            node = self._record(param.value, "param", None)
            node.param = param
            self._param_nodes[param.name] = node
        return node

    def first_nonfinite(self) -> Node | None:
        for node in self.nodes:
            if not np.isfinite(node.value).all():
                return node
        return None

    def assert_finite(self):
        bad = self.first_nonfinite()
        if bad is not None:
            raise TaintedTapeError(
                f"non-finite value produced by primitive {bad.op!r} (node {bad.idx})"
            )

    def release(self):
        """Drop the record so the arrays it holds can be reclaimed promptly."""
        self.nodes = []
        self._param_nodes = {}


def _tape_of(*args) -> Tape:
    for a in args:
        if isinstance(a, Node):
            return a.tape
    raise TypeError("expected at least one tape Node argument")


def _wrap(tape: Tape, x) -> Node:
    if isinstance(x, Node):
        if x.tape is not tape:
            raise ValueError("operands were recorded on different tapes")
        return x
    return tape.constant(x)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient over axes that were broadcast in the forward op."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return np.reshape(g, shape)


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------


def add(a, b):
    t = _tape_of(a, b)
    a, b = _wrap(t, a), _wrap(t, b)

    def vjp(g):
        return ((a, _unbroadcast(g, a.value.shape)), (b, _unbroadcast(g, b.value.shape)))

    return t._record(a.value + b.value, "add", vjp)


def sub(a, b):
    t = _tape_of(a, b)
    a, b = _wrap(t, a), _wrap(t, b)

    def vjp(g):
        return ((a, _unbroadcast(g, a.value.shape)), (b, _unbroadcast(-g, b.value.shape)))

    return t._record(a.value - b.value, "sub", vjp)


def neg(a):
    t = _tape_of(a)

    def vjp(g):
        return ((a, -g),)

    return t._record(-a.value, "neg", vjp)


def mul(a, b):
    t = _tape_of(a, b)
    a, b = _wrap(t, a), _wrap(t, b)
    av, bv = a.value, b.value

    def vjp(g):
        return ((a, _unbroadcast(g * bv, av.shape)), (b, _unbroadcast(g * av, bv.shape)))

    return t._record(av * bv, "mul", vjp)


def div(a, b):
    t = _tape_of(a, b)
    a, b = _wrap(t, a), _wrap(t, b)
    av, bv = a.value, b.value

    def vjp(g):
        return (
            (a, _unbroadcast(g / bv, av.shape)),
            (b, _unbroadcast(-g * av / (bv * bv), bv.shape)),
        )

    return t._record(av / bv, "div", vjp)


def matmul(a, b):
    """2-D matrix product; the workhorse behind every affine layer."""
    t = _tape_of(a, b)
    a, b = _wrap(t, a), _wrap(t, b)
    av, bv = a.value, b.value

    def vjp(g):
        return ((a, g @ bv.T), (b, av.T @ g))

    return t._record(av @ bv, "matmul", vjp)


def square(a):
    if not isinstance(a, Node):
        return np.square(a)
    t = a.tape
    av = a.value

    def vjp(g):
        return ((a, 2.0 * av * g),)

    return t._record(av * av, "square", vjp)


def sqrt(a):
    if not isinstance(a, Node):
        return np.sqrt(a)
    t = a.tape
    out = np.sqrt(a.value)

    def vjp(g):
        return ((a, g * (0.5 / out)),)

    return t._record(out, "sqrt", vjp)


def sin(a):
    if not isinstance(a, Node):
        return np.sin(a)
    t = a.tape
    av = a.value

    def vjp(g):
        return ((a, g * np.cos(av)),)

    return t._record(np.sin(av), "sin", vjp)


def cos(a):
    if not isinstance(a, Node):
        return np.cos(a)
    t = a.tape
    av = a.value

    def vjp(g):
        return ((a, -g * np.sin(av)),)

    return t._record(np.cos(av), "cos", vjp)


def mean(a):
    """Mean over all entries, reduced in natural (C-order) sequence."""
    if not isinstance(a, Node):
        return np.mean(a)
    t = a.tape
    n = a.value.size
    shape = a.value.shape

    def vjp(g):
        return ((a, np.full(shape, float(g) / n)),)

    return t._record(np.mean(a.value), "mean", vjp)


def value_of(x) -> np.ndarray:
    """Plain numpy view of a Node or array-like."""
    return x.value if isinstance(x, Node) else np.asarray(x, dtype=np.float64)


# ---------------------------------------------------------------------------
# activation families
# ---------------------------------------------------------------------------

ACTIVATIONS = ("snake", "tanh", "sin", "identity")


def act_triple(a: Node, kind: str = "snake") -> tuple[Node, Node, Node]:
    """Activation value together with its first and second derivative, as nodes.

    Returns ``(f(a), f'(a), f''(a))``.  All three are differentiable tape
    nodes, so derivative-channel propagation stays inside reverse mode.
    Derivative formulas per kind:

    - snake:    f = a + sin^2 a,  f' = 1 + sin 2a,  f'' = 2 cos 2a
    - tanh:     f' = 1 - f^2,     f'' = -2 f (1 - f^2)
    - sin:      f' = cos a,       f'' = -sin a
    - identity: f' = 1,           f'' = 0
    """
    t = a.tape
    av = a.value
    if kind == "snake":
        s = np.sin(av)
        c = np.cos(av)
        sin2 = 2.0 * s * c
        cos2 = 1.0 - 2.0 * s * s

        def vjp_f(g):
            return ((a, g * (1.0 + sin2)),)

        def vjp_d1(g):
            return ((a, g * (2.0 * cos2)),)

        def vjp_d2(g):
            return ((a, g * (-4.0 * sin2)),)

        f = t._record(av + s * s, "snake", vjp_f)
        d1 = t._record(1.0 + sin2, "snake_d1", vjp_d1)
        d2 = t._record(2.0 * cos2, "snake_d2", vjp_d2)
        return f, d1, d2
    if kind == "tanh":
        fv = np.tanh(av)
        d1v = 1.0 - fv * fv
        d2v = -2.0 * fv * d1v

        def vjp_f(g):
            return ((a, g * d1v),)

        def vjp_d1(g):
            return ((a, g * d2v),)

        def vjp_d2(g):
            # d/da of -2 f (1 - f^2) = -2 (1 - 3 f^2) f'
            return ((a, g * (-2.0 * (1.0 - 3.0 * fv * fv) * d1v)),)

        f = t._record(fv, "tanh", vjp_f)
        d1 = t._record(d1v, "tanh_d1", vjp_d1)
        d2 = t._record(d2v, "tanh_d2", vjp_d2)
        return f, d1, d2
    if kind == "sin":
        s = np.sin(av)
        c = np.cos(av)

        def vjp_f(g):
            return ((a, g * c),)

        def vjp_d1(g):
            return ((a, g * (-s)),)

        def vjp_d2(g):
            return ((a, g * (-c)),)

        f = t._record(s, "sin_act", vjp_f)
        d1 = t._record(c, "sin_act_d1", vjp_d1)
        d2 = t._record(-s, "sin_act_d2", vjp_d2)
        return f, d1, d2
    if kind == "identity":
        f = t._record(av, "identity", lambda g: ((a, g),))
        d1 = t.constant(np.ones_like(av))
        d2 = t.constant(np.zeros_like(av))
        return f, d1, d2
    raise ValueError(f"unknown activation kind: {kind!r}")


# ---------------------------------------------------------------------------
# derivative bundles and the reverse sweep
# ---------------------------------------------------------------------------


@dataclass
class DerivBundle:
    """Network output with its first and pure second input derivatives.

    Entries are tape nodes (or plain arrays for mock fields).  Derivative
    slots are ``None`` for directions a network does not take as input
    (e.g. no x-derivatives for the radiation net).  Coordinates are the
    network's normalized inputs unless a caller has rescaled them.
    """

    value: object
    d_dx: object = None
    d_dt: object = None
    d2_dx2: object = None
    d2_dt2: object = None

    @property
    def d2_dxdt(self):
        raise UnsupportedDerivativeError(
            "mixed partial d2/dxdt is not propagated; no loss term needs it"
        )

    def detach(self) -> "DerivBundle":
        """Bundle of plain numpy arrays (drops tape connectivity)."""

        def v(x):
            return None if x is None else value_of(x)

        return DerivBundle(
            value=v(self.value),
            d_dx=v(self.d_dx),
            d_dt=v(self.d_dt),
            d2_dx2=v(self.d2_dx2),
            d2_dt2=v(self.d2_dt2),
        )


def backward(tape: Tape, loss: Node, params: ParameterSet | None = None) -> GradientSet:
    """Reverse sweep from a scalar loss; exact gradients for every parameter.

    Deterministic for a fixed tape: nodes are processed in strictly
    decreasing recording order and contributions accumulate in that order.
    When a ``ParameterSet`` is supplied, parameters the loss never touched
    get explicit zero gradients.
    """
    if not isinstance(loss, Node) or loss.tape is not tape:
        raise ValueError("loss is not a node recorded on this tape")
    if loss.value.size != 1:
        raise ValueError("backward expects a scalar loss node")
    for node in tape.nodes:
        node.grad = None
    loss.grad = np.ones_like(loss.value)
    grads = GradientSet()
    for node in reversed(tape.nodes[: loss.idx + 1]):
        g = node.grad
        if g is None:
            continue
        if node.param is not None:
            grads._accumulate(node.param.name, g)
        if node._vjp is not None:
            for parent, contrib in node._vjp(g):
                if parent.grad is None:
                    parent.grad = contrib
                else:
                    parent.grad = parent.grad + contrib
        node.grad = None
    if params is not None:
        for p in params:
            if p.name not in grads:
                grads._grads[p.name] = np.zeros_like(p.value)
    return grads

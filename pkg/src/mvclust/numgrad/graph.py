"""Dense float64 computation graphs with reverse-mode differentiation.

A ``Graph`` is an ordered list of primitive nodes over named values. Values
live in three namespaces: declared graph inputs (bound per call), declared
parameters (resolved through a ``ParamStore`` or plain mapping), and outputs
of earlier nodes. ``forward`` evaluates every node in order and returns the
complete value table; ``backward`` walks the node list in reverse and
accumulates gradients into the parameter store.

Replaying a graph on the same inputs and parameters is bit-identical: every
primitive is a deterministic sequential numpy operation.
"""

from __future__ import annotations

import numpy as np


class GraphError(ValueError):
    """Graph construction or binding problem (bad shape, unknown name)."""


class NumericError(ArithmeticError):
    """A forward value came out non-finite."""


def as_tensor(value) -> np.ndarray:
    """Coerce to a C-contiguous float64 array (row-major)."""
    return np.ascontiguousarray(value, dtype=np.float64)


class Node:
    __slots__ = ("op", "name", "inputs", "attrs")

    def __init__(self, op, name, inputs, attrs):
        self.op = op
        self.name = name
        self.inputs = tuple(inputs)
        self.attrs = attrs

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"Node({self.op!r}, {self.name!r}, inputs={self.inputs})"


class Graph:
    """Builder and container for an ordered primitive-operation list.

    Builder methods append one node and return its output name, so graphs
    compose as ordinary expressions::

        g = Graph()
        x = g.input("x")
        h = g.relu(g.add(g.matmul(x, g.param("w")), g.param("b")))
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self.inputs: list[str] = []
        self.params: list[str] = []
        self._defined: set[str] = set()
        self._param_set: set[str] = set()
        self._counter = 0

    # -- namespace management -------------------------------------------

    def input(self, name: str) -> str:
        self._claim(name)
        self.inputs.append(name)
        return name

    def param(self, name: str) -> str:
        """Declare a parameter; repeated declarations of the same name are fine."""
        if name in self._param_set:
            return name
        self._claim(name)
        self.params.append(name)
        self._param_set.add(name)
        return name

    def _claim(self, name):
        if not name or not isinstance(name, str):
            raise GraphError(f"invalid value name {name!r}")
        if name in self._defined:
            raise GraphError(f"value name {name!r} already defined")
        self._defined.add(name)

    def _require(self, names):
        for n in names:
            if n not in self._defined:
                raise GraphError(f"reference to undefined value {n!r}")

    def _emit(self, op, inputs, name=None, **attrs) -> str:
        self._require(inputs)
        if name is None:
            self._counter += 1
            name = f"{op}.{self._counter}"
        self._claim(name)
        self.nodes.append(Node(op, name, inputs, attrs))
        return name

    # -- primitives ------------------------------------------------------

    def matmul(self, a, b, name=None):
        return self._emit("matmul", (a, b), name)

    def add(self, a, b, name=None):
        return self._emit("add", (a, b), name)

    def sub(self, a, b, name=None):
        return self._emit("sub", (a, b), name)

    def mul(self, a, b, name=None):
        return self._emit("mul", (a, b), name)

    def div(self, a, b, name=None):
        return self._emit("div", (a, b), name)

    def affine(self, x, scale=1.0, shift=0.0, name=None):
        """Elementwise scale * x + shift with float constants."""
        return self._emit("affine", (x,), name, scale=float(scale), shift=float(shift))

    def relu(self, x, name=None):
        return self._emit("relu", (x,), name)

    def sigmoid(self, x, name=None):
        return self._emit("sigmoid", (x,), name)

    def exp(self, x, name=None):
        return self._emit("exp", (x,), name)

    def log(self, x, name=None):
        return self._emit("log", (x,), name)

    def sqrt(self, x, name=None):
        return self._emit("sqrt", (x,), name)

    def square(self, x, name=None):
        return self._emit("square", (x,), name)

    def clip(self, x, lo, hi, name=None):
        return self._emit("clip", (x,), name, lo=float(lo), hi=float(hi))

    def sum(self, x, axis=None, keepdims=False, name=None):
        return self._emit("sum", (x,), name, axis=axis, keepdims=keepdims)

    def mean(self, x, axis=None, keepdims=False, name=None):
        return self._emit("mean", (x,), name, axis=axis, keepdims=keepdims)

    def logsumexp(self, x, axis=None, keepdims=False, name=None):
        return self._emit("logsumexp", (x,), name, axis=axis, keepdims=keepdims)

    def concat(self, parts, axis=0, name=None):
        if len(parts) < 1:
            raise GraphError("concat needs at least one input")
        return self._emit("concat", tuple(parts), name, axis=int(axis))

    def slice(self, x, axis, start, stop, name=None):
        return self._emit("slice", (x,), name, axis=int(axis), start=int(start), stop=int(stop))

    def expand_dims(self, x, axis, name=None):
        return self._emit("expand_dims", (x,), name, axis=int(axis))


# -- forward ----------------------------------------------------------------


def forward(graph: Graph, inputs, params=None) -> dict:
    """Evaluate every node; returns the full name -> array value table.

    The returned table holds inputs, parameters and all intermediates, which
    is exactly the record ``backward`` needs.
    """
    values: dict[str, np.ndarray] = {}
    inputs = dict(inputs or {})
    unknown = set(inputs) - set(graph.inputs)
    if unknown:
        raise GraphError(f"unknown graph inputs: {sorted(unknown)}")
    for name in graph.inputs:
        if name not in inputs:
            raise GraphError(f"graph input {name!r} not bound")
        arr = as_tensor(inputs[name])
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite values in input {name!r}")
        values[name] = arr
    for name in graph.params:
        if params is None or name not in params:
            raise GraphError(f"parameter {name!r} not bound")
        values[name] = as_tensor(params[name])
    # the isfinite check after every node is the error contract; numpy's own
    # overflow/invalid warnings would only duplicate it
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for node in graph.nodes:
            args = [values[n] for n in node.inputs]
            try:
                out = _EVAL[node.op](node, args)
            except (ValueError, IndexError) as exc:
                raise GraphError(f"node {node.name!r} ({node.op}): {exc}") from exc
            if not np.all(np.isfinite(out)):
                raise NumericError(f"non-finite values produced by node {node.name!r} ({node.op})")
            values[node.name] = out
    return values


def backward(graph: Graph, values, loss: str, params=None, input_grads=()) -> dict:
    """Accumulate d(loss)/d(param) into ``params`` for a scalar loss value.

    ``values`` is the table returned by ``forward``. Gradients for the graph
    inputs named in ``input_grads`` are returned (zeros if the loss does not
    depend on them).
    """
    if loss not in values:
        raise GraphError(f"unknown loss value {loss!r}")
    seed = values[loss]
    if seed.size != 1:
        raise GraphError(f"loss {loss!r} must be scalar, got shape {seed.shape}")
    grads: dict[str, np.ndarray] = {loss: np.ones_like(seed)}
    for node in reversed(graph.nodes):
        g = grads.pop(node.name, None)
        if g is None:
            continue
        args = [values[n] for n in node.inputs]
        for name, contrib in _GRAD[node.op](node, args, values[node.name], g):
            # contributions may alias or view the upstream gradient; that is
            # safe because stored gradients are only ever replaced, never
            # mutated in place (accumulation allocates, adam touches params)
            if name in grads:
                grads[name] = grads[name] + contrib
            else:
                grads[name] = contrib
    if params is not None:
        for name in graph.params:
            if name in grads:
                params.accumulate_grad(name, grads[name])
    out = {}
    for name in input_grads:
        if name not in values:
            raise GraphError(f"unknown input {name!r}")
        out[name] = grads.get(name, np.zeros_like(values[name]))
    return out


# -- primitive implementations ------------------------------------------------


def _unbroadcast(g, shape):
    if g.shape == tuple(shape):
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, (have, want) in enumerate(zip(g.shape, shape)):
        if want == 1 and have != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _expand_reduced(g, x_shape, axis, keepdims):
    if axis is None:
        return np.broadcast_to(g, x_shape)
    if not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, x_shape)


def _eval_matmul(node, args):
    a, b = args
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul needs 2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    return a @ b


def _eval_sigmoid(node, args):
    (x,) = args
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _eval_sum(node, args):
    return np.sum(args[0], axis=node.attrs["axis"], keepdims=node.attrs["keepdims"])


def _eval_mean(node, args):
    return np.mean(args[0], axis=node.attrs["axis"], keepdims=node.attrs["keepdims"])


def _eval_logsumexp(node, args):
    (x,) = args
    axis, keepdims = node.attrs["axis"], node.attrs["keepdims"]
    m = np.max(x, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True)) + m
    if not keepdims:
        out = out.reshape(np.sum(x, axis=axis, keepdims=False).shape)
    return out


def _eval_concat(node, args):
    return np.concatenate(args, axis=node.attrs["axis"])


def _slicer(node):
    sl = [slice(None)] * (node.attrs["axis"] + 1)
    sl[node.attrs["axis"]] = slice(node.attrs["start"], node.attrs["stop"])
    return tuple(sl)


def _eval_slice(node, args):
    (x,) = args
    if node.attrs["axis"] >= x.ndim:
        raise ValueError(f"slice axis {node.attrs['axis']} out of range for shape {x.shape}")
    if node.attrs["stop"] > x.shape[node.attrs["axis"]]:
        raise ValueError(f"slice bounds exceed extent {x.shape[node.attrs['axis']]}")
    return x[_slicer(node)]


_EVAL = {
    "matmul": _eval_matmul,
    "add": lambda n, a: a[0] + a[1],
    "sub": lambda n, a: a[0] - a[1],
    "mul": lambda n, a: a[0] * a[1],
    "div": lambda n, a: a[0] / a[1],
    "affine": lambda n, a: n.attrs["scale"] * a[0] + n.attrs["shift"],
    "relu": lambda n, a: np.maximum(a[0], 0.0),
    "sigmoid": _eval_sigmoid,
    "exp": lambda n, a: np.exp(a[0]),
    "log": lambda n, a: np.log(a[0]),
    "sqrt": lambda n, a: np.sqrt(a[0]),
    "square": lambda n, a: a[0] * a[0],
    "clip": lambda n, a: np.clip(a[0], n.attrs["lo"], n.attrs["hi"]),
    "sum": _eval_sum,
    "mean": _eval_mean,
    "logsumexp": _eval_logsumexp,
    "concat": _eval_concat,
    "slice": _eval_slice,
    "expand_dims": lambda n, a: np.expand_dims(a[0], n.attrs["axis"]),
}


def _grad_matmul(node, args, out, g):
    a, b = args
    return [(node.inputs[0], g @ b.T), (node.inputs[1], a.T @ g)]


def _grad_add(node, args, out, g):
    a, b = args
    return [(node.inputs[0], _unbroadcast(g, a.shape)), (node.inputs[1], _unbroadcast(g, b.shape))]


def _grad_sub(node, args, out, g):
    a, b = args
    return [(node.inputs[0], _unbroadcast(g, a.shape)), (node.inputs[1], _unbroadcast(-g, b.shape))]


def _grad_mul(node, args, out, g):
    a, b = args
    return [(node.inputs[0], _unbroadcast(g * b, a.shape)), (node.inputs[1], _unbroadcast(g * a, b.shape))]


def _grad_div(node, args, out, g):
    a, b = args
    return [
        (node.inputs[0], _unbroadcast(g / b, a.shape)),
        (node.inputs[1], _unbroadcast(-g * out / b, b.shape)),
    ]


def _grad_clip(node, args, out, g):
    (x,) = args
    mask = (x >= node.attrs["lo"]) & (x <= node.attrs["hi"])
    return [(node.inputs[0], g * mask)]


def _grad_sum(node, args, out, g):
    return [(node.inputs[0], _expand_reduced(g, args[0].shape, node.attrs["axis"], node.attrs["keepdims"]))]


def _grad_mean(node, args, out, g):
    x = args[0]
    count = x.size if node.attrs["axis"] is None else x.shape[node.attrs["axis"]]
    ge = _expand_reduced(g, x.shape, node.attrs["axis"], node.attrs["keepdims"])
    return [(node.inputs[0], ge / count)]


def _grad_logsumexp(node, args, out, g):
    x = args[0]
    axis, keepdims = node.attrs["axis"], node.attrs["keepdims"]
    out_k = out if keepdims else (
        out.reshape([1] * x.ndim) if axis is None else np.expand_dims(out, axis)
    )
    g_k = _expand_reduced(g, x.shape, axis, keepdims)
    return [(node.inputs[0], g_k * np.exp(x - out_k))]


def _grad_concat(node, args, out, g):
    axis = node.attrs["axis"]
    grads = []
    offset = 0
    for name, a in zip(node.inputs, args):
        sl = [slice(None)] * (axis + 1)
        sl[axis] = slice(offset, offset + a.shape[axis])
        grads.append((name, g[tuple(sl)]))
        offset += a.shape[axis]
    return grads


def _grad_slice(node, args, out, g):
    z = np.zeros_like(args[0])
    z[_slicer(node)] = g
    return [(node.inputs[0], z)]


_GRAD = {
    "matmul": _grad_matmul,
    "add": _grad_add,
    "sub": _grad_sub,
    "mul": _grad_mul,
    "div": _grad_div,
    "affine": lambda n, a, o, g: [(n.inputs[0], g * n.attrs["scale"])],
    "relu": lambda n, a, o, g: [(n.inputs[0], g * (a[0] > 0))],
    "sigmoid": lambda n, a, o, g: [(n.inputs[0], g * o * (1.0 - o))],
    "exp": lambda n, a, o, g: [(n.inputs[0], g * o)],
    "log": lambda n, a, o, g: [(n.inputs[0], g / a[0])],
    "sqrt": lambda n, a, o, g: [(n.inputs[0], 0.5 * g / o)],
    "square": lambda n, a, o, g: [(n.inputs[0], 2.0 * g * a[0])],
    "clip": _grad_clip,
    "sum": _grad_sum,
    "mean": _grad_mean,
    "logsumexp": _grad_logsumexp,
    "concat": _grad_concat,
    "slice": _grad_slice,
    "expand_dims": lambda n, a, o, g: [(n.inputs[0], np.squeeze(g, axis=n.attrs["axis"]))],
}

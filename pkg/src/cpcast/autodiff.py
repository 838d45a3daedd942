"""Minimal reverse-mode automatic differentiation on float64 numpy arrays.

A ``Value`` wraps a dense array and remembers how it was produced; calling
``backward`` on a scalar loss walks the recorded graph once in reverse
topological order and accumulates gradients. Everything runs in float64 so
analytic gradients can be checked against central finite differences to
tight tolerances.

Broadcasting is deliberately restricted: elementwise ops require identical
shapes or a scalar on one side. The one sanctioned exception is
``add_bias``, an explicit row-broadcast used by linear layers.
"""

from __future__ import annotations

import numpy as np


class Value:
    """Node in the computation graph: an array plus gradient bookkeeping."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=()):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = tuple(_parents)
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Value(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # Operator sugar; the actual math lives in the module-level ops.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_as_value(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return take(self, key)


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible for an op."""


def _as_value(x) -> Value:
    if isinstance(x, Value):
        return x
    return Value(np.asarray(x, dtype=np.float64))


def _is_scalar(v: Value) -> bool:
    return v.data.size == 1


def _check_same_shape(op: str, a: Value, b: Value) -> None:
    # scalar-with-tensor is the only permitted broadcast
    if a.data.shape == b.data.shape or _is_scalar(a) or _is_scalar(b):
        return
    raise ShapeError(f"{op}: incompatible shapes {a.data.shape} and {b.data.shape}")


def _accumulate(v: Value, g: np.ndarray) -> None:
    # reduce a broadcast gradient back to a scalar operand's shape
    if v.data.shape != g.shape:
        g = np.sum(g).reshape(v.data.shape) if v.data.size == 1 else g.reshape(v.data.shape)
    if v.grad is None:
        v.grad = np.zeros_like(v.data)
    v.grad += g


def _make(data: np.ndarray, parents, backward) -> Value:
    requires = any(p.requires_grad for p in parents)
    out = Value(data, requires_grad=requires, _parents=parents if requires else ())
    if requires:
        out._backward = backward
    return out


# ---------------------------------------------------------------------------
# forward ops
# ---------------------------------------------------------------------------

def add(a, b) -> Value:
    a, b = _as_value(a), _as_value(b)
    _check_same_shape("add", a, b)
    out_data = a.data + b.data

    def backward(g):
        _accumulate(a, g)
        _accumulate(b, g)

    return _make(out_data, (a, b), backward)


def sub(a, b) -> Value:
    a, b = _as_value(a), _as_value(b)
    _check_same_shape("sub", a, b)
    out_data = a.data - b.data

    def backward(g):
        _accumulate(a, g)
        _accumulate(b, -g)

    return _make(out_data, (a, b), backward)


def mul(a, b) -> Value:
    a, b = _as_value(a), _as_value(b)
    _check_same_shape("mul", a, b)
    out_data = a.data * b.data

    def backward(g):
        _accumulate(a, g * b.data)
        _accumulate(b, g * a.data)

    return _make(out_data, (a, b), backward)


def matmul(a, b) -> Value:
    a, b = _as_value(a), _as_value(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.data.shape} and {b.data.shape}")
    out_data = a.data @ b.data

    def backward(g):
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    return _make(out_data, (a, b), backward)


def add_bias(x, b) -> Value:
    """Row-broadcast add of a bias vector ``b`` (m,) onto ``x`` (n, m)."""
    x, b = _as_value(x), _as_value(b)
    if x.data.ndim != 2 or b.data.ndim != 1 or x.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"add_bias: incompatible shapes {x.data.shape} and {b.data.shape}")
    out_data = x.data + b.data[None, :]

    def backward(g):
        _accumulate(x, g)
        _accumulate(b, g.sum(axis=0))

    return _make(out_data, (x, b), backward)


def col_scale(x, c) -> Value:
    """Scale each row of ``x`` (n, m) by the matching entry of ``c`` (n, 1)."""
    x, c = _as_value(x), _as_value(c)
    if x.data.ndim != 2 or c.data.shape != (x.data.shape[0], 1):
        raise ShapeError(f"col_scale: incompatible shapes {x.data.shape} and {c.data.shape}")
    out_data = x.data * c.data

    def backward(g):
        _accumulate(x, g * c.data)
        _accumulate(c, (g * x.data).sum(axis=1, keepdims=True))

    return _make(out_data, (x, c), backward)


def sigmoid(x) -> Value:
    x = _as_value(x)
    out_data = 1.0 / (1.0 + np.exp(-np.clip(x.data, -500.0, 500.0)))

    def backward(g):
        _accumulate(x, g * out_data * (1.0 - out_data))

    return _make(out_data, (x,), backward)


def tanh(x) -> Value:
    x = _as_value(x)
    out_data = np.tanh(x.data)

    def backward(g):
        _accumulate(x, g * (1.0 - out_data * out_data))

    return _make(out_data, (x,), backward)


def relu(x) -> Value:
    x = _as_value(x)
    out_data = np.maximum(x.data, 0.0)

    def backward(g):
        _accumulate(x, g * (x.data > 0.0))

    return _make(out_data, (x,), backward)


def elu(x, alpha: float = 1.0) -> Value:
    x = _as_value(x)
    neg = alpha * (np.exp(np.minimum(x.data, 0.0)) - 1.0)
    out_data = np.where(x.data > 0.0, x.data, neg)

    def backward(g):
        _accumulate(x, g * np.where(x.data > 0.0, 1.0, neg + alpha))

    return _make(out_data, (x,), backward)


def softmax(x, axis: int = -1) -> Value:
    x = _as_value(x)
    shifted = x.data - np.max(x.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    out_data = e / np.sum(e, axis=axis, keepdims=True)

    def backward(g):
        dot = np.sum(g * out_data, axis=axis, keepdims=True)
        _accumulate(x, out_data * (g - dot))

    return _make(out_data, (x,), backward)


def concat(values, axis: int = 0) -> Value:
    values = [_as_value(v) for v in values]
    if not values:
        raise ShapeError("concat: empty input")
    out_data = np.concatenate([v.data for v in values], axis=axis)
    sizes = [v.data.shape[axis] for v in values]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for v, lo, hi in zip(values, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            _accumulate(v, g[tuple(idx)])

    return _make(out_data, tuple(values), backward)


def take(x, key) -> Value:
    """Slice/index; the gradient scatter-adds into the source positions."""
    x = _as_value(x)
    out_data = x.data[key]

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, key, g)
        _accumulate(x, full)

    return _make(np.array(out_data, dtype=np.float64), (x,), backward)


def reshape(x, shape) -> Value:
    x = _as_value(x)
    out_data = x.data.reshape(shape)

    def backward(g):
        _accumulate(x, g.reshape(x.data.shape))

    return _make(out_data, (x,), backward)


def transpose(x) -> Value:
    x = _as_value(x)
    if x.data.ndim != 2:
        raise ShapeError(f"transpose: expected 2-d input, got shape {x.data.shape}")
    out_data = x.data.T

    def backward(g):
        _accumulate(x, g.T)

    return _make(out_data, (x,), backward)


def vsum(x) -> Value:
    x = _as_value(x)
    out_data = np.array(np.sum(x.data))

    def backward(g):
        _accumulate(x, np.full_like(x.data, float(g)))

    return _make(out_data, (x,), backward)


def vmean(x) -> Value:
    x = _as_value(x)
    n = x.data.size
    out_data = np.array(np.mean(x.data))

    def backward(g):
        _accumulate(x, np.full_like(x.data, float(g) / n))

    return _make(out_data, (x,), backward)


def maximum(a, b) -> Value:
    """Elementwise max; built from relu so the kink behavior is shared."""
    a, b = _as_value(a), _as_value(b)
    return add(b, relu(sub(a, b)))


# ---------------------------------------------------------------------------
# backward pass
# ---------------------------------------------------------------------------

def backward(loss: Value, params: "ParamStore | None" = None) -> None:
    """Populate ``grad`` on every reachable node from a scalar ``loss``.

    When a ``ParamStore`` is given, parameters the loss never touched get an
    explicit zero gradient so optimizer steps stay well-defined.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.data.shape}")

    topo: list[Value] = []
    visited: set[int] = set()
    stack: list[tuple[Value, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))

    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)

    if params is not None:
        for v in params.values():
            if v.grad is None:
                v.grad = np.zeros_like(v.data)


# ---------------------------------------------------------------------------
# parameters and optimizer
# ---------------------------------------------------------------------------

class ParamStore:
    """Named trainable parameters plus Adam moment state."""

    def __init__(self):
        self._params: dict[str, Value] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def param(self, name: str, data) -> Value:
        if name in self._params:
            return self._params[name]
        v = Value(np.asarray(data, dtype=np.float64), requires_grad=True)
        self._params[name] = v
        self._m[name] = np.zeros_like(v.data)
        self._v[name] = np.zeros_like(v.data)
        return v

    def __getitem__(self, name: str) -> Value:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self):
        return list(self._params.keys())

    def values(self):
        return self._params.values()

    def items(self):
        return self._params.items()

    def zero_grad(self) -> None:
        for v in self._params.values():
            v.grad = None

    def state_dict(self) -> dict:
        return {name: v.data.copy() for name, v in self._params.items()}

    def load_state_dict(self, state: dict) -> None:
        for name, data in state.items():
            arr = np.asarray(data, dtype=np.float64)
            if name in self._params:
                self._params[name].data = arr.reshape(self._params[name].data.shape)
            else:
                self.param(name, arr)


def adam_step(params: ParamStore, lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> ParamStore:
    """One bias-corrected Adam update over every parameter in the store."""
    for name, v in params.items():
        if v.grad is None:
            raise ValueError(f"adam_step: parameter {name!r} has no gradient")
    params.step_count += 1
    t = params.step_count
    for name, v in params.items():
        g = v.grad
        params._m[name] = beta1 * params._m[name] + (1.0 - beta1) * g
        params._v[name] = beta2 * params._v[name] + (1.0 - beta2) * g * g
        m_hat = params._m[name] / (1.0 - beta1 ** t)
        v_hat = params._v[name] / (1.0 - beta2 ** t)
        v.data = v.data - lr * m_hat / (np.sqrt(v_hat) + eps)
    return params


# ---------------------------------------------------------------------------
# finite-difference verification
# ---------------------------------------------------------------------------

def grad_check(f, params: ParamStore, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``f`` must be a deterministic closure over ``params`` returning a scalar
    ``Value``. The relative error denominator is max(1e-8, |a| + |n|).
    """
    params.zero_grad()
    loss = f()
    backward(loss, params)
    analytic = {name: v.grad.copy() for name, v in params.items()}

    max_err = 0.0
    for name, v in params.items():
        flat = v.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = float(f().data)
            flat[i] = orig - eps
            down = float(f().data)
            flat[i] = orig
            numeric = (up - down) / (2.0 * eps)
            a = analytic[name].reshape(-1)[i]
            err = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
            if err > max_err:
                max_err = err
    params.zero_grad()
    return max_err

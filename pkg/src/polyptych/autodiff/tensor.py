"""Reverse-mode autodiff over numpy arrays.

A Tensor wraps an ndarray (float32 by default, float64 for gradient
checking) and records the operations that produced it as backward closures.
``backward()`` walks the recorded graph once in reverse topological order;
accumulation is plain row-major numpy, so a fixed graph always yields the
same gradients bit for bit.

Tensors are treated as immutable once created. The single sanctioned
exception is the optimizer's in-place parameter update, which mutates
``Parameter.tensor.data`` between steps, never inside a recorded graph.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from ..errors import DimensionError

DEFAULT_DTYPE = np.float32


def _as_array(data, dtype=None) -> np.ndarray:
    arr = np.asarray(data)
    if dtype is not None:
        return arr.astype(dtype, copy=False)
    if arr.dtype not in (np.float32, np.float64):
        return arr.astype(DEFAULT_DTYPE)
    return arr


def unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcasted gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward_fn")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        dtype=None,
        _parents: Sequence["Tensor"] = (),
        _backward_fn: Optional[Callable[[np.ndarray], None]] = None,
    ):
        self.data = _as_array(data, dtype)
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in _parents)
        self.grad: Optional[np.ndarray] = None
        self._parents = tuple(_parents)
        self._backward_fn = _backward_fn

    # -- introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, grad={self.requires_grad})"

    # -- graph management ----------------------------------------------

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad = self.grad + g

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Backpropagate from a scalar. Clears and repopulates ``grad`` on
        every tensor in the graph, so repeated calls are deterministic."""
        if self.data.ndim != 0:
            raise DimensionError("backward() requires a 0-dimensional loss tensor")
        order = self._topo_order()
        for t in order:
            t.grad = None
        self.grad = np.ones((), dtype=self.data.dtype)
        for t in reversed(order):
            if t._backward_fn is not None and t.grad is not None:
                t._backward_fn(t.grad)

    def _topo_order(self) -> list:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited and p.requires_grad:
                    stack.append((p, False))
        return order

    # -- elementwise arithmetic ------------------------------------------

    def _coerce(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        if isinstance(other, Parameter):
            return other.tensor
        return Tensor(np.asarray(other, dtype=self.data.dtype))

    def __add__(self, other):
        other = self._coerce(other)
        out = Tensor(self.data + other.data, _parents=(self, other))

        def bw(g):
            if self.requires_grad:
                self.accumulate_grad(unbroadcast(g, self.data.shape))
            if other.requires_grad:
                other.accumulate_grad(unbroadcast(g, other.data.shape))

        out._backward_fn = bw
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor(-self.data, _parents=(self,))

        def bw(g):
            if self.requires_grad:
                self.accumulate_grad(-g)

        out._backward_fn = bw
        return out

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        out = Tensor(self.data * other.data, _parents=(self, other))

        def bw(g):
            if self.requires_grad:
                self.accumulate_grad(unbroadcast(g * other.data, self.data.shape))
            if other.requires_grad:
                other.accumulate_grad(unbroadcast(g * self.data, other.data.shape))

        out._backward_fn = bw
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        out = Tensor(self.data / other.data, _parents=(self, other))

        def bw(g):
            if self.requires_grad:
                self.accumulate_grad(unbroadcast(g / other.data, self.data.shape))
            if other.requires_grad:
                other.accumulate_grad(
                    unbroadcast(-g * self.data / (other.data * other.data), other.data.shape)
                )

        out._backward_fn = bw
        return out

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, exponent: float):
        out = Tensor(self.data**exponent, _parents=(self,))

        def bw(g):
            if self.requires_grad:
                self.accumulate_grad(g * exponent * self.data ** (exponent - 1))

        out._backward_fn = bw
        return out

    def __matmul__(self, other):
        other = self._coerce(other)
        if self.data.ndim != 2 or other.data.ndim != 2:
            raise DimensionError("matmul expects 2-D operands")
        if self.data.shape[1] != other.data.shape[0]:
            raise DimensionError(
                f"matmul inner dims differ: {self.data.shape} @ {other.data.shape}"
            )
        out = Tensor(self.data @ other.data, _parents=(self, other))

        def bw(g):
            if self.requires_grad:
                self.accumulate_grad(g @ other.data.T)
            if other.requires_grad:
                other.accumulate_grad(self.data.T @ g)

        out._backward_fn = bw
        return out

    # -- elementwise functions ------------------------------------------

    def exp(self):
        y = np.exp(self.data)
        out = Tensor(y, _parents=(self,))

        def bw(g):
            if self.requires_grad:
                self.accumulate_grad(g * y)

        out._backward_fn = bw
        return out

    def log(self):
        out = Tensor(np.log(self.data), _parents=(self,))

        def bw(g):
            if self.requires_grad:
                self.accumulate_grad(g / self.data)

        out._backward_fn = bw
        return out

    def sqrt(self):
        y = np.sqrt(self.data)
        out = Tensor(y, _parents=(self,))

        def bw(g):
            if self.requires_grad:
                self.accumulate_grad(g * 0.5 / y)

        out._backward_fn = bw
        return out

    def abs(self):
        out = Tensor(np.abs(self.data), _parents=(self,))

        def bw(g):
            if self.requires_grad:
                self.accumulate_grad(g * np.sign(self.data))

        out._backward_fn = bw
        return out

    # -- reductions -------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), _parents=(self,))

        def bw(g):
            if not self.requires_grad:
                return
            if axis is None:
                self.accumulate_grad(np.broadcast_to(g, self.data.shape).copy())
                return
            if not keepdims:
                g = np.expand_dims(g, axis)
            self.accumulate_grad(np.broadcast_to(g, self.data.shape).copy())

        out._backward_fn = bw
        return out

    def mean(self, axis=None, keepdims: bool = False):
        count = self.data.size if axis is None else np.prod(
            [self.data.shape[a] for a in np.atleast_1d(axis)]
        )
        return self.sum(axis=axis, keepdims=keepdims) / float(count)

    def _extremum(self, axis: int, keepdims: bool, kind: str):
        pick = np.argmax if kind == "max" else np.argmin
        idx = pick(self.data, axis=axis)
        values = np.take_along_axis(self.data, np.expand_dims(idx, axis), axis=axis)
        if not keepdims:
            values = np.squeeze(values, axis=axis)
        out = Tensor(values, _parents=(self,))

        def bw(g):
            if not self.requires_grad:
                return
            if not keepdims:
                g = np.expand_dims(g, axis)
            gx = np.zeros_like(self.data)
            np.put_along_axis(gx, np.expand_dims(idx, axis), g, axis=axis)
            self.accumulate_grad(gx)

        out._backward_fn = bw
        return out

    def max(self, axis: int, keepdims: bool = False):
        """Maximum along one axis; ties route the gradient to the first hit."""
        return self._extremum(axis, keepdims, "max")

    def min(self, axis: int, keepdims: bool = False):
        return self._extremum(axis, keepdims, "min")

    # -- shape ops ---------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = Tensor(self.data.reshape(shape), _parents=(self,))

        def bw(g):
            if self.requires_grad:
                self.accumulate_grad(g.reshape(self.data.shape))

        out._backward_fn = bw
        return out

    def flatten(self):
        return self.reshape(-1)

    def transpose(self, *axes):
        if not axes:
            axes = tuple(reversed(range(self.data.ndim)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inverse = np.argsort(axes)
        out = Tensor(self.data.transpose(axes), _parents=(self,))

        def bw(g):
            if self.requires_grad:
                self.accumulate_grad(g.transpose(inverse))

        out._backward_fn = bw
        return out

    @property
    def T(self):
        return self.transpose()


class Parameter:
    """Named trainable tensor. Names must be unique within a model bundle."""

    __slots__ = ("name", "tensor")

    def __init__(self, name: str, data, dtype=None):
        self.name = name
        self.tensor = Tensor(data, requires_grad=True, dtype=dtype)

    @property
    def data(self) -> np.ndarray:
        return self.tensor.data

    @data.setter
    def data(self, value: np.ndarray) -> None:
        self.tensor.data = _as_array(value, self.tensor.data.dtype)

    @property
    def grad(self) -> Optional[np.ndarray]:
        return self.tensor.grad

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.tensor.shape})"

    # Parameters appear directly in math expressions; delegate to the tensor.
    def __add__(self, other):
        return self.tensor + other

    def __radd__(self, other):
        return self.tensor + other

    def __sub__(self, other):
        return self.tensor - other

    def __rsub__(self, other):
        return (-self.tensor) + other

    def __mul__(self, other):
        return self.tensor * other

    def __rmul__(self, other):
        return self.tensor * other

    def __truediv__(self, other):
        return self.tensor / other

    def __neg__(self):
        return -self.tensor

    def __matmul__(self, other):
        return self.tensor @ (other.tensor if isinstance(other, Parameter) else other)

    def __rmatmul__(self, other):
        left = other if isinstance(other, Tensor) else Tensor(other)
        return left @ self.tensor


def as_tensor(value) -> Tensor:
    """Coerce a Parameter, Tensor, or array-like into a Tensor."""
    if isinstance(value, Tensor):
        return value
    if isinstance(value, Parameter):
        return value.tensor
    return Tensor(value)


def gradient_of(loss: Tensor, params: Iterable[Parameter]) -> list:
    """Gradients of a scalar loss for each parameter.

    Parameters the loss does not depend on get an all-zero gradient rather
    than an error, so optimizers can treat every parameter uniformly.
    """
    loss.backward()
    grads = []
    for p in params:
        g = p.tensor.grad
        grads.append(np.zeros_like(p.tensor.data) if g is None else g.copy())
    return grads

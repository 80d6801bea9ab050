'''
Reverse-mode differentiation over numpy arrays

Every op accepts plain arrays or :py:class:`Tensor` values.  With only
arrays the op returns an array and nothing is recorded, so a forward pass
without a tape runs the exact same numpy expressions as one with a tape and
produces bit-identical outputs.
'''
from __future__ import annotations

import threading

from typing import Any, Callable, Sequence, Union

import numpy as np

from crosslab.exceptions import InvalidInputError, TapeConsumedError

_local = threading.local()


class Tensor:
    __slots__ = ('value', 'parents', 'tape', 'name')

    def __init__(self, value, parents: Sequence[tuple[Tensor, Callable]] = (), tape: GradientTape | None = None,
                 name: str | None = None):
        self.value = value
        self.parents = tuple(parents)
        self.tape = tape
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        return f"Tensor(name={self.name!r}, shape={self.value.shape})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)


ArrayLike = Union[np.ndarray, Tensor, float]


class GradientTape:
    '''
    Records differentiable ops so one backward pass can run over them

    Use as a context manager; inputs to differentiate are registered with
    :py:meth:`watch`.  Ops are appended in creation order, which is a valid
    topological order, so backward just walks the record in reverse.
    '''

    def __init__(self):
        self.nodes: list[Tensor] = []
        self.consumed = False

    def __enter__(self) -> GradientTape:
        stack = getattr(_local, 'stack', None)
        if stack is None:
            stack = _local.stack = []
        stack.append(self)
        return self

    def __exit__(self, *exc):
        _local.stack.pop()

    def watch(self, value, name: str | None = None) -> Tensor:
        return Tensor(np.asarray(value, dtype=np.float64), tape=self, name=name)

    def watch_all(self, params: dict[str, np.ndarray], prefix: str = '') -> dict[str, Tensor]:
        return {name: self.watch(value, name=f"{prefix}{name}") for name, value in params.items()}

    def gradient(self, loss: Tensor, sources: Sequence[Tensor] | dict[str, Tensor]) -> Any:
        '''
        Backpropagate a scalar loss to the watched sources

        :return: gradients shaped like ``sources`` (dict or list); sources the
            loss does not depend on get zero gradients.

        :raises: TapeConsumedError when the tape was already used.
        '''
        if self.consumed:
            raise TapeConsumedError("gradient tape was already consumed by a backward pass")
        if not isinstance(loss, Tensor) or loss.tape is not self:
            raise InvalidInputError("loss was not recorded on this tape")
        if np.size(loss.value) != 1:
            raise InvalidInputError(f"loss must be a scalar, got shape {np.shape(loss.value)}")
        self.consumed = True

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            for parent, vjp in node.parents:
                contribution = vjp(g)
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + contribution
                else:
                    grads[key] = contribution
        self.nodes = []

        def _grad(source):
            found = grads.get(id(source))
            return np.zeros_like(source.value) if found is None else found

        if isinstance(sources, dict):
            return {name: _grad(t) for name, t in sources.items()}
        return [_grad(t) for t in sources]


def backward(tape: GradientTape, loss: Tensor, sources):
    return tape.gradient(loss, sources)


def value_of(x) -> np.ndarray:
    return x.value if isinstance(x, Tensor) else x


def _tape_of(*xs) -> GradientTape | None:
    for x in xs:
        if isinstance(x, Tensor) and x.tape is not None:
            return x.tape
    return None


def _record(value, tape: GradientTape | None, parents) -> Any:
    if tape is None:
        return value
    live = tuple((p, fn) for p, fn in parents if isinstance(p, Tensor) and p.tape is tape)
    node = Tensor(value, live, tape)
    tape.nodes.append(node)
    return node


def unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _shape(x) -> tuple:
    return np.shape(value_of(x))


def add(a, b):
    av, bv = value_of(a), value_of(b)
    out = av + bv
    sa, sb = _shape(a), _shape(b)
    return _record(out, _tape_of(a, b), ((a, lambda g: unbroadcast(g, sa)),
                                          (b, lambda g: unbroadcast(g, sb))))


def sub(a, b):
    av, bv = value_of(a), value_of(b)
    out = av - bv
    sa, sb = _shape(a), _shape(b)
    return _record(out, _tape_of(a, b), ((a, lambda g: unbroadcast(g, sa)),
                                          (b, lambda g: unbroadcast(-g, sb))))


def mul(a, b):
    av, bv = value_of(a), value_of(b)
    out = av * bv
    sa, sb = _shape(a), _shape(b)
    return _record(out, _tape_of(a, b), ((a, lambda g: unbroadcast(g * bv, sa)),
                                          (b, lambda g: unbroadcast(g * av, sb))))


def div(a, b):
    av, bv = value_of(a), value_of(b)
    out = av / bv
    sa, sb = _shape(a), _shape(b)
    return _record(out, _tape_of(a, b), ((a, lambda g: unbroadcast(g / bv, sa)),
                                          (b, lambda g: unbroadcast(-g * av / (bv * bv), sb))))


def square(a):
    av = value_of(a)
    return _record(av * av, _tape_of(a), ((a, lambda g: 2.0 * av * g),))


def matmul(a, w):
    '''
    ``a @ w`` for ``a`` of shape (..., k) and a 2D ``w`` of shape (k, n)
    '''
    av, wv = value_of(a), value_of(w)
    out = av @ wv

    def _grad_a(g):
        return g @ wv.T

    def _grad_w(g):
        k, n = wv.shape
        return av.reshape(-1, k).T @ g.reshape(-1, n)

    return _record(out, _tape_of(a, w), ((a, _grad_a), (w, _grad_w)))


def elu(a):
    av = value_of(a)
    positive = av > 0
    neg = np.expm1(np.minimum(av, 0.0))
    out = np.where(positive, av, neg)
    return _record(out, _tape_of(a), ((a, lambda g: g * np.where(positive, 1.0, neg + 1.0)),))


def tanh(a):
    av = value_of(a)
    out = np.tanh(av)
    return _record(out, _tape_of(a), ((a, lambda g: g * (1.0 - out * out)),))


def sigmoid(a):
    av = value_of(a)
    out = 0.5 * (1.0 + np.tanh(0.5 * av))
    return _record(out, _tape_of(a), ((a, lambda g: g * out * (1.0 - out)),))


def exp(a):
    av = value_of(a)
    out = np.exp(av)
    return _record(out, _tape_of(a), ((a, lambda g: g * out),))


def log(a):
    av = value_of(a)
    out = np.log(av)
    return _record(out, _tape_of(a), ((a, lambda g: g / av),))


def clip(a, lo: float, hi: float):
    av = value_of(a)
    out = np.clip(av, lo, hi)
    inside = (av >= lo) & (av <= hi)
    return _record(out, _tape_of(a), ((a, lambda g: g * inside),))


def minimum(a, b):
    av, bv = value_of(a), value_of(b)
    out = np.minimum(av, bv)
    pick_a = av <= bv
    sa, sb = _shape(a), _shape(b)
    return _record(out, _tape_of(a, b), ((a, lambda g: unbroadcast(g * pick_a, sa)),
                                          (b, lambda g: unbroadcast(g * ~pick_a, sb))))


def maximum(a, b):
    av, bv = value_of(a), value_of(b)
    out = np.maximum(av, bv)
    pick_a = av >= bv
    sa, sb = _shape(a), _shape(b)
    return _record(out, _tape_of(a, b), ((a, lambda g: unbroadcast(g * pick_a, sa)),
                                          (b, lambda g: unbroadcast(g * ~pick_a, sb))))


def reduce_sum(a, axis=None, keepdims: bool = False):
    av = value_of(a)
    out = np.sum(av, axis=axis, keepdims=keepdims)
    shape = av.shape

    def _grad(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, shape).copy()

    return _record(out, _tape_of(a), ((a, _grad),))


def mean(a, axis=None, keepdims: bool = False):
    av = value_of(a)
    count = av.size if axis is None else np.prod([av.shape[i] for i in np.atleast_1d(axis)])
    return mul(reduce_sum(a, axis=axis, keepdims=keepdims), 1.0 / float(count))


def concat(parts: Sequence, axis: int = -1):
    values = [value_of(p) for p in parts]
    out = np.concatenate(values, axis=axis)
    bounds = np.cumsum([0] + [v.shape[axis] for v in values])

    def _slicer(lo, hi):
        def _grad(g):
            index = [slice(None)] * g.ndim
            index[axis] = slice(lo, hi)
            return g[tuple(index)]
        return _grad

    parents = [(p, _slicer(bounds[i], bounds[i + 1])) for i, p in enumerate(parts)]
    return _record(out, _tape_of(*parts), parents)


def _is_basic(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return all(isinstance(p, (slice, int, type(Ellipsis))) or p is None for p in parts)


def getitem(a, index):
    av = value_of(a)
    out = av[index]
    basic = _is_basic(index)

    def _grad(g):
        full = np.zeros_like(av)
        if basic:
            full[index] = g
        else:
            np.add.at(full, index, g)
        return full

    return _record(out, _tape_of(a), ((a, _grad),))


def reshape(a, shape):
    av = value_of(a)
    out = av.reshape(shape)
    return _record(out, _tape_of(a), ((a, lambda g: g.reshape(av.shape)),))


def transpose(a, axes):
    av = value_of(a)
    out = np.transpose(av, axes)
    inverse = np.argsort(axes)
    return _record(out, _tape_of(a), ((a, lambda g: np.transpose(g, inverse)),))


def stack(parts: Sequence, axis: int = 0):
    expanded = [reshape(p, np.expand_dims(value_of(p), axis).shape) for p in parts]
    return concat(expanded, axis=axis)

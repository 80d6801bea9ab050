from __future__ import annotations

import hashlib
import json
import math

from dataclasses import dataclass, field, asdict
from typing import Any, Mapping

import numpy as np

from crosslab.exceptions import InvalidInputError
from crosslab.net import tensor as T

KINDS = ('mlp', 'lstm', 'conv1d', 'vector')
ACTIVATIONS = {
    'elu': T.elu,
    'tanh': T.tanh,
    'linear': lambda x: x,
}


@dataclass(frozen=True)
class NetworkSpec:
    '''
    Shape and activation of one network

    ``mlp``: ``input_size -> hidden... -> output_size``, activation after each
    hidden layer and a linear output.  ``lstm``: stacked cells with the given
    hidden sizes, output is the last hidden state.  ``conv1d``: 1D
    convolutions over a ``window`` of frames with ``input_size`` channels,
    followed by a linear head.  ``vector``: one free parameter vector of
    ``output_size`` entries filled with ``init_value``.
    '''
    kind: str
    input_size: int
    output_size: int
    hidden: tuple = ()
    activation: str = 'elu'
    output_gain: float = 1.0
    window: int = 0
    kernels: tuple = ()
    strides: tuple = ()
    init_value: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'hidden', tuple(int(h) for h in self.hidden))
        object.__setattr__(self, 'kernels', tuple(int(k) for k in self.kernels))
        object.__setattr__(self, 'strides', tuple(int(s) for s in self.strides))
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown network kind {self.kind!r}")
        if self.activation not in ACTIVATIONS:
            raise InvalidInputError(f"unknown activation {self.activation!r}")
        if self.output_size < 1 or (self.kind != 'vector' and self.input_size < 1):
            raise InvalidInputError("network sizes must be positive")
        if any(h < 1 for h in self.hidden):
            raise InvalidInputError("hidden sizes must be positive")
        if self.kind == 'lstm' and not self.hidden:
            raise InvalidInputError("an lstm needs at least one hidden size")
        if self.kind == 'conv1d':
            if not len(self.hidden) == len(self.kernels) == len(self.strides):
                raise InvalidInputError("conv1d channels, kernels and strides must have equal length")
            if self.conv_lengths()[-1] < 1:
                raise InvalidInputError(f"window {self.window} too short for the convolution stack")

    def conv_lengths(self) -> list[int]:
        lengths = [self.window]
        for k, s in zip(self.kernels, self.strides):
            lengths.append((lengths[-1] - k) // s + 1)
        return lengths

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        for key in ('hidden', 'kernels', 'strides'):
            data[key] = list(data[key])
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> NetworkSpec:
        return cls(**data)


def spec_hash(specs: Mapping[str, NetworkSpec]) -> str:
    canonical = json.dumps({name: s.to_dict() for name, s in sorted(specs.items())},
                           sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def orthogonal(rng: np.random.Generator, rows: int, cols: int, gain: float) -> np.ndarray:
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


def _layer_shapes(spec: NetworkSpec) -> list[tuple[str, tuple[int, ...], str]]:
    '''
    Ordered (name, shape, role) of every parameter; role drives initialization
    '''
    shapes: list[tuple[str, tuple[int, ...], str]] = []
    if spec.kind == 'mlp':
        sizes = [spec.input_size, *spec.hidden, spec.output_size]
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            role = 'output' if i == len(sizes) - 2 else 'hidden'
            shapes.append((f"layers.{i}.weight", (n_in, n_out), role))
            shapes.append((f"layers.{i}.bias", (n_out,), 'bias'))
    elif spec.kind == 'lstm':
        n_in = spec.input_size
        for i, h in enumerate(spec.hidden):
            shapes.append((f"lstm.{i}.W_ih", (n_in, 4 * h), 'gate'))
            shapes.append((f"lstm.{i}.W_hh", (h, 4 * h), 'gate'))
            shapes.append((f"lstm.{i}.b", (4 * h,), 'bias'))
            n_in = h
    elif spec.kind == 'conv1d':
        channels = spec.input_size
        for i, (c_out, k) in enumerate(zip(spec.hidden, spec.kernels)):
            shapes.append((f"conv.{i}.weight", (channels * k, c_out), 'hidden'))
            shapes.append((f"conv.{i}.bias", (c_out,), 'bias'))
            channels = c_out
        flat = channels * spec.conv_lengths()[-1]
        shapes.append(("head.weight", (flat, spec.output_size), 'output'))
        shapes.append(("head.bias", (spec.output_size,), 'bias'))
    else:
        shapes.append(("value", (spec.output_size,), 'vector'))
    return shapes


class Network:
    '''
    A network spec together with its named parameter arrays
    '''

    def __init__(self, spec: NetworkSpec, params: dict[str, np.ndarray]):
        expected = {name: shape for name, shape, _ in _layer_shapes(spec)}
        if set(expected) != set(params):
            raise InvalidInputError(f"parameters {sorted(params)} do not match spec {sorted(expected)}")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise InvalidInputError(f"parameter {name} has shape {params[name].shape}, expected {shape}")
        self.spec = spec
        self.params = {name: params[name] for name, _, _ in _layer_shapes(spec)}

    @property
    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy(self) -> Network:
        return Network(self.spec, {name: p.copy() for name, p in self.params.items()})

    def equals(self, other: Network) -> bool:
        return self.spec == other.spec and all(
            np.array_equal(p, other.params[name]) for name, p in self.params.items())

    def __call__(self, x, bound: Mapping[str, Any] | None = None, **kwargs):
        if self.spec.kind == 'mlp':
            return forward_mlp(self, x, bound)
        if self.spec.kind == 'conv1d':
            return forward_conv1d(self, x, bound)
        if self.spec.kind == 'lstm':
            return forward_lstm(self, x, kwargs.get('hidden'), bound, kwargs.get('masks'))
        return (bound or self.params)['value']


def build_network(spec: NetworkSpec, seed: int) -> Network:
    '''
    Initialize a network deterministically from a seed

    Weights are orthogonal with gain sqrt(2) for hidden layers and
    ``spec.output_gain`` for the output layer; LSTM gate blocks use gain 1;
    biases start at zero.
    '''
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    params: dict[str, np.ndarray] = {}
    for name, shape, role in _layer_shapes(spec):
        if role == 'bias':
            params[name] = np.zeros(shape)
        elif role == 'vector':
            params[name] = np.full(shape, float(spec.init_value))
        elif role == 'gate':
            h = shape[1] // 4
            params[name] = np.concatenate([orthogonal(rng, shape[0], h, 1.0) for _ in range(4)], axis=1)
        else:
            gain = spec.output_gain if role == 'output' else math.sqrt(2.0)
            params[name] = orthogonal(rng, shape[0], shape[1], gain)
    return Network(spec, params)


def _check_last_dim(x, size: int, what: str) -> None:
    shape = np.shape(T.value_of(x))
    if not shape or shape[-1] != size:
        raise InvalidInputError(f"{what} expects input of size {size}, got shape {shape}")


def forward_mlp(net: Network, x, bound: Mapping[str, Any] | None = None):
    '''
    Affine plus activation per hidden layer, linear final layer

    :param x: array or Tensor of shape (..., input_size).
    :param bound: optional replacement parameters (e.g. watched Tensors).

    :raises: InvalidInputError on a shape mismatch.
    '''
    _check_last_dim(x, net.spec.input_size, 'mlp')
    params = bound or net.params
    act = ACTIVATIONS[net.spec.activation]
    n_layers = len(net.spec.hidden) + 1
    h = x
    for i in range(n_layers):
        h = T.add(T.matmul(h, params[f"layers.{i}.weight"]), params[f"layers.{i}.bias"])
        if i < n_layers - 1:
            h = act(h)
    return h


def lstm_zero_state(net: Network, batch: int) -> tuple:
    return tuple((np.zeros((batch, h)), np.zeros((batch, h))) for h in net.spec.hidden)


def lstm_cell(x, h, c, w_ih, w_hh, b):
    '''
    One LSTM step with gates ordered input, forget, candidate, output
    '''
    size = T.value_of(h).shape[-1]
    z = T.add(T.add(T.matmul(x, w_ih), T.matmul(h, w_hh)), b)
    i = T.sigmoid(z[..., 0:size])
    f = T.sigmoid(z[..., size:2 * size])
    g = T.tanh(z[..., 2 * size:3 * size])
    o = T.sigmoid(z[..., 3 * size:4 * size])
    c_new = T.add(T.mul(f, c), T.mul(i, g))
    h_new = T.mul(o, T.tanh(c_new))
    return h_new, c_new


def forward_lstm(net: Network, sequence, hidden: tuple | None = None,
                 bound: Mapping[str, Any] | None = None, masks=None):
    '''
    Run a stacked LSTM over a time-major sequence

    :param sequence: shape (T, B, input_size).
    :param hidden: per layer ``(h, c)`` of shape (B, H); zeros when ``None``.
    :param masks: optional (T, B) array; a 0 at step t resets the hidden
        state of that batch entry before the step (episode start).

    :return: ``(outputs, new_hidden)`` with outputs of shape (T, B, H_last).

    :raises: InvalidInputError on a shape mismatch.
    '''
    seq_shape = np.shape(T.value_of(sequence))
    if len(seq_shape) != 3:
        raise InvalidInputError(f"lstm expects a (T, B, features) sequence, got shape {seq_shape}")
    _check_last_dim(sequence, net.spec.input_size, 'lstm')
    steps, batch = seq_shape[0], seq_shape[1]
    params = bound or net.params
    if hidden is None:
        hidden = lstm_zero_state(net, batch)
    if len(hidden) != len(net.spec.hidden):
        raise InvalidInputError(f"lstm expects {len(net.spec.hidden)} hidden layers, got {len(hidden)}")
    for (h, c), size in zip(hidden, net.spec.hidden):
        if np.shape(T.value_of(h)) != (batch, size) or np.shape(T.value_of(c)) != (batch, size):
            raise InvalidInputError(f"hidden state must have shape ({batch}, {size})")

    state = list(hidden)
    outputs = []
    for t in range(steps):
        x = sequence[t]
        if masks is not None:
            keep = np.asarray(masks[t], dtype=np.float64)[:, None]
            state = [(T.mul(h, keep), T.mul(c, keep)) for h, c in state]
        for layer, (h, c) in enumerate(state):
            h, c = lstm_cell(x, h, c, params[f"lstm.{layer}.W_ih"], params[f"lstm.{layer}.W_hh"],
                             params[f"lstm.{layer}.b"])
            state[layer] = (h, c)
            x = h
        outputs.append(x)
    return T.stack(outputs, axis=0), tuple(state)


def forward_conv1d(net: Network, frames, bound: Mapping[str, Any] | None = None):
    '''
    1D convolution stack over a window of frames, then a linear head

    :param frames: shape (B, window, channels), oldest frame first.
    '''
    shape = np.shape(T.value_of(frames))
    if len(shape) != 3 or shape[1] != net.spec.window or shape[2] != net.spec.input_size:
        raise InvalidInputError(
            f"conv1d expects (B, {net.spec.window}, {net.spec.input_size}), got shape {shape}")
    params = bound or net.params
    act = ACTIVATIONS[net.spec.activation]
    batch = shape[0]
    x = frames
    lengths = net.spec.conv_lengths()
    for i, (k, s) in enumerate(zip(net.spec.kernels, net.spec.strides)):
        channels = T.value_of(x).shape[2]
        out_len = lengths[i + 1]
        # (out_len, k) frame indices of every receptive field
        index = np.arange(out_len)[:, None] * s + np.arange(k)[None, :]
        patches = T.getitem(x, (slice(None), index))
        patches = T.reshape(patches, (batch, out_len, k * channels))
        x = act(T.add(T.matmul(patches, params[f"conv.{i}.weight"]), params[f"conv.{i}.bias"]))
    flat = T.reshape(x, (batch, -1))
    return T.add(T.matmul(flat, params["head.weight"]), params["head.bias"])

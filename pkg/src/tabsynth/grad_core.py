"""Minimal reverse-mode autodiff over numpy arrays, plus dense-layer and
optimizer primitives shared by the transform fitters and the VAE.

The tape is a plain DAG of Tensor nodes; backward() runs a topological sweep
and accumulates gradients into ``.grad``. Everything is float64.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class GradientError(RuntimeError):
    """Non-finite value encountered during forward or backward evaluation."""


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum grad down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """A node in the computation graph."""

    __slots__ = ("value", "grad", "_parents", "_backward", "name")

    # make numpy defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(self, value, parents=(), backward=None, name=""):
        self.value = np.asarray(value, dtype=float)
        self.grad = None
        self._parents = parents
        self._backward = backward
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        if self.value.size != 1:
            raise GradientError("backward() requires a scalar loss")
        if not np.isfinite(self.value):
            raise GradientError(f"non-finite loss at node {self.name or '<unnamed>'}")
        order: list[Tensor] = []
        seen = set()

        def visit(node):
            stack = [(node, False)]
            while stack:
                t, done = stack.pop()
                if done:
                    order.append(t)
                    continue
                if id(t) in seen:
                    continue
                seen.add(id(t))
                stack.append((t, True))
                for p in t._parents:
                    stack.append((p, False))

        visit(self)
        for t in order:
            t.grad = None
        self.grad = np.ones_like(self.value)
        for t in reversed(order):
            if t._backward is not None and t.grad is not None:
                t._backward(t.grad)

    def _accum(self, g):
        g = _unbroadcast(np.asarray(g, dtype=float), self.value.shape)
        self.grad = g if self.grad is None else self.grad + g

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        out = Tensor(self.value + other.value, (self, other))
        out._backward = lambda g: (self._accum(g), other._accum(g))
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor(-self.value, (self,))
        out._backward = lambda g: self._accum(-g)
        return out

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        out = Tensor(self.value * other.value, (self, other))
        out._backward = lambda g: (
            self._accum(g * other.value),
            other._accum(g * self.value),
        )
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        out = Tensor(self.value / other.value, (self, other))
        out._backward = lambda g: (
            self._accum(g / other.value),
            other._accum(-g * self.value / other.value**2),
        )
        return out

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __pow__(self, exponent: float):
        out = Tensor(self.value**exponent, (self,))
        out._backward = lambda g: self._accum(g * exponent * self.value ** (exponent - 1))
        return out


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# -- elementwise functions ------------------------------------------------


def exp(t: Tensor) -> Tensor:
    t = as_tensor(t)
    out = Tensor(np.exp(t.value), (t,))
    out._backward = lambda g: t._accum(g * out.value)
    return out


def log(t: Tensor) -> Tensor:
    t = as_tensor(t)
    out = Tensor(np.log(t.value), (t,))
    out._backward = lambda g: t._accum(g / t.value)
    return out


def tanh(t: Tensor) -> Tensor:
    t = as_tensor(t)
    out = Tensor(np.tanh(t.value), (t,))
    out._backward = lambda g: t._accum(g * (1.0 - out.value**2))
    return out


def sigmoid(t: Tensor) -> Tensor:
    t = as_tensor(t)
    out = Tensor(1.0 / (1.0 + np.exp(-t.value)), (t,))
    out._backward = lambda g: t._accum(g * out.value * (1.0 - out.value))
    return out


def absolute(t: Tensor) -> Tensor:
    """|t| with subgradient sign(t) (0 at 0)."""
    t = as_tensor(t)
    out = Tensor(np.abs(t.value), (t,))
    out._backward = lambda g: t._accum(g * np.sign(t.value))
    return out


def sqrt(t: Tensor) -> Tensor:
    return as_tensor(t) ** 0.5


def clip(t: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp; gradient passes only through the unclipped region."""
    t = as_tensor(t)
    mask = (t.value >= lo) & (t.value <= hi)
    out = Tensor(np.clip(t.value, lo, hi), (t,))
    out._backward = lambda g: t._accum(g * mask)
    return out


def where(cond: np.ndarray, a: Tensor, b: Tensor) -> Tensor:
    """Select by a constant boolean mask (no gradient through the mask)."""
    a, b = as_tensor(a), as_tensor(b)
    cond = np.asarray(cond, dtype=bool)
    out = Tensor(np.where(cond, a.value, b.value), (a, b))
    out._backward = lambda g: (
        a._accum(np.where(cond, g, 0.0)),
        b._accum(np.where(cond, 0.0, g)),
    )
    return out


def gather(t: Tensor, indices: np.ndarray) -> Tensor:
    """Index a 1-D tensor with a constant integer array."""
    t = as_tensor(t)
    indices = np.asarray(indices, dtype=int)
    out = Tensor(t.value[indices], (t,))

    def backward(g):
        acc = np.zeros_like(t.value)
        np.add.at(acc, indices, g)
        t._accum(acc)

    out._backward = backward
    return out


def tsum(t: Tensor, axis=None) -> Tensor:
    t = as_tensor(t)
    out = Tensor(np.sum(t.value, axis=axis), (t,))

    def backward(g):
        if axis is None:
            t._accum(np.broadcast_to(g, t.value.shape))
        else:
            t._accum(np.broadcast_to(np.expand_dims(g, axis), t.value.shape))

    out._backward = backward
    return out


def tmean(t: Tensor, axis=None) -> Tensor:
    t = as_tensor(t)
    n = t.value.size if axis is None else t.value.shape[axis]
    return tsum(t, axis=axis) * (1.0 / n)


def affine(x: Tensor, weights: Tensor, biases: Tensor) -> Tensor:
    """x @ W.T + b for x of shape (batch, in) or (in,); W is (out, in)."""
    x, weights, biases = as_tensor(x), as_tensor(weights), as_tensor(biases)
    out = Tensor(x.value @ weights.value.T + biases.value, (x, weights, biases))

    def backward(g):
        g2 = np.atleast_2d(g)
        x2 = np.atleast_2d(x.value)
        x._accum((g @ weights.value).reshape(x.value.shape))
        weights._accum(g2.T @ x2)
        biases._accum(g2.sum(axis=0))

    out._backward = backward
    return out


# -- dense layers ---------------------------------------------------------

ACTIVATIONS = {
    "tanh": tanh,
    "sigmoid": sigmoid,
    "identity": lambda t: t,
    "exponential": exp,
}


@dataclass
class DenseLayer:
    weights: Tensor
    biases: Tensor
    activation: str = "identity"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    def __call__(self, x) -> Tensor:
        x = as_tensor(x)
        if x.value.shape[-1] != self.in_dim:
            raise ValueError(f"input dim {x.value.shape[-1]} != layer dim {self.in_dim}")
        return ACTIVATIONS[self.activation](affine(x, self.weights, self.biases))

    def parameters(self) -> list[Tensor]:
        return [self.weights, self.biases]


def layer_forward(layer: DenseLayer, x) -> np.ndarray:
    """Plain-array forward pass through one layer."""
    return layer(x).value


@dataclass
class Mlp:
    layers: list[DenseLayer] = field(default_factory=list)

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError("layer dimensions do not chain")

    def __call__(self, x) -> Tensor:
        out = as_tensor(x)
        for layer in self.layers:
            out = layer(out)
        return out

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]


def init_params(dims: list[int], seed, activations=None) -> Mlp:
    """Glorot-uniform weights, zero biases; deterministic per seed."""
    rng = np.random.default_rng(seed)
    if activations is None:
        activations = ["tanh"] * (len(dims) - 2) + ["identity"]
    layers = []
    for k, (fan_in, fan_out) in enumerate(zip(dims, dims[1:])):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(
            DenseLayer(
                weights=Tensor(w),
                biases=Tensor(np.zeros(fan_out)),
                activation=activations[k],
            )
        )
    return Mlp(layers)


def grad(loss_fn, params: list[Tensor]) -> list[np.ndarray]:
    """Evaluate loss_fn() (a Tensor-producing closure over params) and return
    the gradient with respect to each parameter."""
    loss = loss_fn()
    if not np.all(np.isfinite(loss.value)):
        raise GradientError("loss is non-finite")
    loss.backward()
    return [np.zeros_like(p.value) if p.grad is None else p.grad for p in params]


# -- optimizers -----------------------------------------------------------


class Optimizer:
    def step(self, params: list[Tensor], grads: list[np.ndarray]) -> None:
        raise NotImplementedError


class Sgd(Optimizer):
    def __init__(self, learning_rate: float):
        if learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        self.learning_rate = learning_rate

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p.value = p.value - self.learning_rate * g


class Adam(Optimizer):
    def __init__(self, learning_rate: float, beta1=0.9, beta2=0.999, eps=1e-8):
        if learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None

    def step(self, params, grads):
        if self.m is None:
            self.m = [np.zeros_like(p.value) for p in params]
            self.v = [np.zeros_like(p.value) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g**2
            mhat = self.m[i] / (1 - b1**self.t)
            vhat = self.v[i] / (1 - b2**self.t)
            p.value = p.value - self.learning_rate * mhat / (np.sqrt(vhat) + self.eps)


def make_optimizer(kind: str, learning_rate: float) -> Optimizer:
    if kind == "sgd":
        return Sgd(learning_rate)
    if kind == "adam":
        return Adam(learning_rate)
    raise ValueError(f"unknown optimizer kind {kind!r}")


# -- serialization --------------------------------------------------------


def mlp_to_dict(mlp: Mlp) -> list[dict]:
    return [
        {
            "in_dim": layer.in_dim,
            "out_dim": layer.out_dim,
            "activation": layer.activation,
            "weights": layer.weights.value.tolist(),
            "biases": layer.biases.value.tolist(),
        }
        for layer in mlp.layers
    ]


def mlp_from_dict(entries: list[dict]) -> Mlp:
    layers = [
        DenseLayer(
            weights=Tensor(np.array(e["weights"], dtype=float)),
            biases=Tensor(np.array(e["biases"], dtype=float)),
            activation=e["activation"],
        )
        for e in entries
    ]
    return Mlp(layers)


def save_mlp(mlp: Mlp, path) -> None:
    with open(path, "w") as fh:
        json.dump(mlp_to_dict(mlp), fh)

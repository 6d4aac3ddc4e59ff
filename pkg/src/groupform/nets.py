"""Three-layer fully connected networks with a hand-written backward pass.

Inputs are batched row-wise: ``x`` has shape ``(batch, in_features)``. A
1-D input is treated as a batch of one and the output is squeezed back.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "tanh", "identity")


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


@dataclass
class DenseNet:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    head_activation: str = "tanh"
    hidden_activation: str = "relu"
    _cache: list | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) != 4 or min(self.layer_sizes) < 1:
            raise ValueError("expected four positive layer sizes (in, h1, h2, out)")
        for act in (self.head_activation, self.hidden_activation):
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_sizes[k + 1], self.layer_sizes[k])
            if w.shape != shape or b.shape != (shape[0],):
                raise ValueError(f"layer {k} parameters do not match sizes {self.layer_sizes}")

    @classmethod
    def init(cls, layer_sizes, rng: np.random.Generator, head_activation: str = "tanh",
             hidden_activation: str = "relu") -> "DenseNet":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases."""
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(tuple(layer_sizes), weights, biases, head_activation, hidden_activation)

    @classmethod
    def zeros(cls, layer_sizes, head_activation: str = "tanh",
              hidden_activation: str = "relu") -> "DenseNet":
        weights = [np.zeros((o, i)) for i, o in zip(layer_sizes[:-1], layer_sizes[1:])]
        biases = [np.zeros(o) for o in layer_sizes[1:]]
        return cls(tuple(layer_sizes), weights, biases, head_activation, hidden_activation)

    def params(self) -> list[np.ndarray]:
        """Parameters in fixed order: W1, b1, W2, b2, W3, b3."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "DenseNet":
        return DenseNet(self.layer_sizes, [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], self.head_activation,
                        self.hidden_activation)

    def forward(self, x: np.ndarray, cache: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.layer_sizes[0]:
            raise ValueError(f"input width {x.shape[1]} != {self.layer_sizes[0]}")
        steps = []
        a = x
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            act = self.head_activation if k == last else self.hidden_activation
            out = _act(act, z)
            steps.append((a, z, out, act))
            a = out
        if cache:
            self._cache = steps
        return a[0] if single else a

    def backward(self, grad_out: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        """Reverse pass for the most recent cached forward.

        Returns parameter gradients (ordered as :meth:`params`) and the
        gradient with respect to the network input.
        """
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        g = np.asarray(grad_out, dtype=float)
        single = g.ndim == 1 and self._cache[0][0].shape[0] == 1
        g = g.reshape(self._cache[-1][2].shape)
        grads: list[np.ndarray] = []
        for k in range(len(self.weights) - 1, -1, -1):
            a_in, z, a_out, act = self._cache[k]
            dz = g * _act_grad(act, z, a_out)
            grads = [dz.T @ a_in, dz.sum(axis=0)] + grads
            g = dz @ self.weights[k]
        return grads, (g[0] if single else g)

    def apply_gradients(self, grads: list[np.ndarray], lr: float) -> None:
        for p, d in zip(self.params(), grads):
            p -= lr * d

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.params())


class SGD:
    """Plain gradient descent with optional heavy-ball momentum."""

    def __init__(self, net: DenseNet, lr: float, momentum: float = 0.0):
        self.net = net
        self.lr = lr
        self.momentum = momentum
        self.velocity = [np.zeros_like(p) for p in net.params()] if momentum else None

    def step(self, grads: list[np.ndarray]) -> None:
        if self.velocity is None:
            self.net.apply_gradients(grads, self.lr)
            return
        for p, v, d in zip(self.net.params(), self.velocity, grads):
            v *= self.momentum
            v += d
            p -= self.lr * v


def soft_update(target: DenseNet, online: DenseNet, soft_tau: float) -> None:
    """Blend online parameters into the target in place."""
    if target.layer_sizes != online.layer_sizes:
        raise ValueError("target and online networks differ in shape")
    for t, o in zip(target.params(), online.params()):
        t *= 1.0 - soft_tau
        t += soft_tau * o


def forward_actor(net: DenseNet, state: np.ndarray) -> np.ndarray:
    return net.forward(state)


def forward_critic(net: DenseNet, state: np.ndarray, joint_actions: np.ndarray) -> np.ndarray:
    """Q estimate for ``state`` concatenated with every agent's action."""
    x = np.concatenate([np.asarray(state, float), np.asarray(joint_actions, float)], axis=-1)
    q = net.forward(x)
    return q[..., 0]

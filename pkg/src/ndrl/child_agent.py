"""DQN for the child level: numpy MLP with hand-written backprop.

The network is three affine layers with ReLU between them. Training is
plain SGD on the mean squared TD error against a periodically synced
target copy.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

CHECKPOINT_VERSION = 1
DIVERGENCE_LIMIT = 1e12


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class DqnHyperparams:
    lr: float = 1e-3
    gamma: float = 0.95
    batch_size: int = 32
    target_sync_interval: int = 100
    buffer_capacity: int = 10_000
    hidden: int = 64
    reward_scale: float = 1e-3  # kg/ha -> t/ha before rewards enter the network

    def __post_init__(self):
        for name in ("lr", "batch_size", "target_sync_interval", "buffer_capacity", "hidden", "reward_scale"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")


class QNetwork:
    """``sizes[0] -> ... -> sizes[-1]`` MLP; ReLU hidden, identity output."""

    def __init__(self, sizes: Sequence[int] = (4, 64, 64, 25), rng: np.random.Generator | None = None):
        self.sizes = tuple(int(s) for s in sizes)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def n_actions(self) -> int:
        return self.sizes[-1]

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = np.asarray(x, dtype=np.float64)
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k < last:
                h = np.maximum(h, 0.0)
        return h

    def forward_cache(self, x: np.ndarray):
        """Batch forward keeping every layer input for backprop."""
        acts = [np.asarray(x, dtype=np.float64)]
        pre = []
        last = len(self.weights) - 1
        h = acts[0]
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            h = np.maximum(z, 0.0) if k < last else z
            acts.append(h)
        return acts, pre

    def backward(self, acts, pre, grad_out: np.ndarray) -> list[np.ndarray]:
        """Gradients ordered like :meth:`params` for an output gradient."""
        grads: list[np.ndarray] = [None] * (2 * len(self.weights))  # type: ignore[list-item]
        g = grad_out
        for k in range(len(self.weights) - 1, -1, -1):
            grads[2 * k] = acts[k].T @ g
            grads[2 * k + 1] = g.sum(axis=0)
            if k > 0:
                g = (g @ self.weights[k].T) * (pre[k - 1] > 0.0)
        return grads

    def copy(self) -> "QNetwork":
        return copy.deepcopy(self)

    def save(self, path: str | Path) -> None:
        arrays = {f"p{i}": p for i, p in enumerate(self.params())}
        np.savez(path, version=CHECKPOINT_VERSION, sizes=np.array(self.sizes), **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "QNetwork":
        with np.load(path) as data:
            if int(data["version"]) != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {int(data['version'])}")
            net = cls(tuple(int(s) for s in data["sizes"]))
            for i in range(len(net.weights)):
                net.weights[i] = data[f"p{2 * i}"].copy()
                net.biases[i] = data[f"p{2 * i + 1}"].copy()
        return net


class Transition(NamedTuple):
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    terminal: bool


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions with uniform sampling."""

    def __init__(self, capacity: int = 10_000):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, t: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(t)
        else:
            self._items[self._next] = t
        self._next = (self._next + 1) % self.capacity

    def contents(self) -> list[Transition]:
        """Oldest first."""
        if len(self._items) < self.capacity:
            return list(self._items)
        return self._items[self._next:] + self._items[: self._next]

    def sample(self, n: int, rng: np.random.Generator) -> list[Transition]:
        if n > len(self._items):
            raise ValueError(f"cannot sample {n} from a buffer of {len(self._items)}")
        idx = rng.choice(len(self._items), size=n, replace=False)
        return [self._items[i] for i in idx]


def _stack(batch: Sequence[Transition]):
    s = np.stack([t.s for t in batch])
    a = np.array([t.a for t in batch], dtype=np.int64)
    r = np.array([t.r for t in batch], dtype=np.float64)
    s2 = np.stack([t.s_next for t in batch])
    done = np.array([t.terminal for t in batch], dtype=bool)
    return s, a, r, s2, done


def td_targets(batch: Sequence[Transition], target_net: QNetwork, gamma: float) -> np.ndarray:
    if not batch:
        raise ValueError("empty batch")
    _, _, r, s2, done = _stack(batch)
    nxt = target_net.forward(s2).max(axis=1)
    return r + gamma * np.where(done, 0.0, nxt)


def batch_loss_and_grads(net: QNetwork, s, a, targets):
    acts, pre = net.forward_cache(s)
    q = acts[-1]
    rows = np.arange(len(a))
    err = q[rows, a] - targets
    loss = float(np.mean(err * err))
    grad_out = np.zeros_like(q)
    grad_out[rows, a] = 2.0 * err / len(a)
    return loss, net.backward(acts, pre, grad_out)


def train_batch(net: QNetwork, target_net: QNetwork, batch: Sequence[Transition], hyper: DqnHyperparams) -> float:
    """One SGD step on the squared TD error; returns the pre-step loss."""
    if not batch:
        raise ValueError("empty batch")
    targets = td_targets(batch, target_net, hyper.gamma)
    s, a, _, _, _ = _stack(batch)
    loss, grads = batch_loss_and_grads(net, s, a, targets)
    if not np.isfinite(loss) or loss > DIVERGENCE_LIMIT:
        raise DivergenceError(f"child network diverged: loss={loss!r}")
    for p, g in zip(net.params(), grads):
        p -= hyper.lr * g
    return loss


def sync_target(net: QNetwork, target_net: QNetwork) -> None:
    if net.sizes != target_net.sizes:
        raise ValueError(f"architecture mismatch: {net.sizes} vs {target_net.sizes}")
    for i in range(len(net.weights)):
        target_net.weights[i] = net.weights[i].copy()
        target_net.biases[i] = net.biases[i].copy()


class DqnLearner:
    """Online/target pair plus replay buffer, trained once the buffer fills a batch."""

    def __init__(self, sizes: Sequence[int], hyper: DqnHyperparams, init_rng: np.random.Generator,
                 sample_rng: np.random.Generator):
        self.hyper = hyper
        self.net = QNetwork(sizes, init_rng)
        self.target = self.net.copy()
        self.buffer = ReplayBuffer(hyper.buffer_capacity)
        self.rng = sample_rng
        self.updates = 0
        self.losses: list[float] = []

    def q(self, x: np.ndarray) -> np.ndarray:
        return self.net.forward(x)

    def observe(self, t: Transition) -> float | None:
        self.buffer.push(t)
        if len(self.buffer) < self.hyper.batch_size:
            return None
        loss = train_batch(self.net, self.target, self.buffer.sample(self.hyper.batch_size, self.rng), self.hyper)
        self.updates += 1
        if self.updates % self.hyper.target_sync_interval == 0:
            sync_target(self.net, self.target)
        self.losses.append(loss)
        return loss

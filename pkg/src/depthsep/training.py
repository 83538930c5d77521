"""Depth-2 baseline training on the hard target, with analytic gradients.

The only trained architecture is the two-layer one, so the gradients of the
squared loss are written out by hand (kept honest by a standing
finite-difference test) instead of pulling in an autodiff stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import InstanceSpec, sample_a4d
from .networks import Activation, DenseNetwork, activation_by_tag

__all__ = [
    "TrainConfig",
    "Depth2Params",
    "loss_and_gradients",
    "train_depth2",
    "estimate_population_loss",
    "constant_network",
]


@dataclass(frozen=True)
class TrainConfig:
    width: int
    activation: str = "relu"
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float = 1e-2
    optimizer: str = "adam"
    weight_clip: float | None = None
    samples_per_epoch: int = 2048
    seed: int = 0

    def __post_init__(self):
        if min(self.width, self.epochs, self.batch_size, self.samples_per_epoch) < 1:
            raise ValueError("hyperparameters must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be 'sgd' or 'adam'")
        if self.weight_clip is not None and self.weight_clip <= 0:
            raise ValueError("weight clip must be positive")


@dataclass
class Depth2Params:
    """Mutable parameter block for the two-layer net out = v . act(W x + b) + b0."""

    W: np.ndarray
    b: np.ndarray
    v: np.ndarray
    b0: float

    @classmethod
    def init(cls, input_dim: int, width: int, rng: np.random.Generator) -> "Depth2Params":
        scale = 1.0 / np.sqrt(input_dim)
        return cls(
            W=rng.normal(0.0, scale, size=(width, input_dim)),
            b=rng.normal(0.0, 0.1, size=width),
            v=rng.normal(0.0, 1.0 / np.sqrt(width), size=width),
            b0=0.0,
        )

    def to_network(self, activation: Activation) -> DenseNetwork:
        return DenseNetwork(
            self.W.shape[1],
            ((self.W.copy(), self.b.copy()),),
            self.v.copy(),
            float(self.b0),
            activation,
        )

    def clip(self, c: float) -> None:
        np.clip(self.W, -c, c, out=self.W)
        np.clip(self.b, -c, c, out=self.b)
        np.clip(self.v, -c, c, out=self.v)
        self.b0 = float(np.clip(self.b0, -c, c))

    def max_weight(self) -> float:
        return max(
            float(np.abs(self.W).max()),
            float(np.abs(self.b).max()),
            float(np.abs(self.v).max()),
            abs(self.b0),
        )


def _act_and_grad(tag: str, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if tag == "relu":
        return np.maximum(z, 0.0), (z > 0).astype(np.float64)
    if tag == "sigmoid":
        s = 1.0 / (1.0 + np.exp(-z))
        return s, s * (1.0 - s)
    raise ValueError(f"activation {tag!r} is not trainable")


def loss_and_gradients(
    params: Depth2Params, X: np.ndarray, y: np.ndarray, activation: str
) -> tuple[float, Depth2Params]:
    """Mean squared loss on the batch and its gradient block."""
    z = X @ params.W.T + params.b
    h, hg = _act_and_grad(activation, z)
    out = h @ params.v + params.b0
    resid = out - y
    n = X.shape[0]
    dout = 2.0 * resid / n
    g_v = h.T @ dout
    g_b0 = float(dout.sum())
    back = (dout[:, None] * params.v[None, :]) * hg
    g_W = back.T @ X
    g_b = back.sum(axis=0)
    loss = float(np.mean(resid**2))
    return loss, Depth2Params(W=g_W, b=g_b, v=g_v, b0=g_b0)


class _Adam:
    def __init__(self, shapes, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.b1 * self.m[i] + (1 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1 - self.b2) * g * g
            mh = self.m[i] / (1 - self.b1**self.t)
            vh = self.v[i] / (1 - self.b2**self.t)
            p -= self.lr * mh / (np.sqrt(vh) + self.eps)


@dataclass
class TrainResult:
    network: DenseNetwork
    history: list[float] = field(default_factory=list)
    best_loss: float = float("inf")
    diverged: bool = False
    max_weight_after_clip: float = float("nan")


def train_depth2(spec: InstanceSpec, cfg: TrainConfig) -> TrainResult:
    """Minibatch gradient descent on squared loss against the target.

    Fresh support samples are drawn per epoch from seeds derived off
    cfg.seed, so identical configurations reproduce identical loss curves.
    A NaN loss is reported as divergence, not raised.
    """
    activation = activation_by_tag(cfg.activation)
    rng = np.random.default_rng([cfg.seed, 2])
    params = Depth2Params.init(4 * spec.d, cfg.width, rng)
    opt = None
    if cfg.optimizer == "adam":
        shapes = [params.W.shape, params.b.shape, params.v.shape, (1,)]
        opt = _Adam(shapes, cfg.learning_rate)
    result = TrainResult(network=params.to_network(activation))
    # divergence is detected and reported below, so numeric overflow along
    # the way is expected rather than worth warning about
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            batch = sample_a4d(
                spec, cfg.samples_per_epoch, seed=int(cfg.seed + 7919 * (epoch + 1))
            )
            X = batch.points
            y = batch.labels.astype(np.float64)
            order = rng.permutation(len(batch))
            epoch_losses = []
            for start in range(0, len(batch), cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                loss, g = loss_and_gradients(params, X[idx], y[idx], cfg.activation)
                if not np.isfinite(loss):
                    result.diverged = True
                    result.history.append(float("nan"))
                    result.network = params.to_network(activation)
                    return result
                epoch_losses.append(loss)
                if cfg.optimizer == "sgd":
                    params.W -= cfg.learning_rate * g.W
                    params.b -= cfg.learning_rate * g.b
                    params.v -= cfg.learning_rate * g.v
                    params.b0 -= cfg.learning_rate * g.b0
                else:
                    b0_arr = np.array([params.b0])
                    opt.step(
                        [params.W, params.b, params.v, b0_arr],
                        [g.W, g.b, g.v, np.array([g.b0])],
                    )
                    params.b0 = float(b0_arr[0])
                if cfg.weight_clip is not None:
                    params.clip(cfg.weight_clip)
            epoch_loss = float(np.mean(epoch_losses))
            result.history.append(epoch_loss)
            result.best_loss = min(result.best_loss, epoch_loss)
    result.network = params.to_network(activation)
    result.max_weight_after_clip = params.max_weight()
    return result


def estimate_population_loss(
    net: DenseNetwork, spec: InstanceSpec, n: int, seed: int
) -> tuple[float, float]:
    """Monte-Carlo mean of (net - target)^2 over the support, with its
    standard error."""
    if n < 1:
        raise ValueError("need at least one sample")
    if net.input_dim != 4 * spec.d:
        raise ValueError(f"network input dim {net.input_dim} != {4 * spec.d}")
    batch = sample_a4d(spec, n, seed)
    preds = net.evaluate_batch(batch.points)
    sq = (preds - batch.labels.astype(np.float64)) ** 2
    mean = float(sq.mean())
    stderr = float(sq.std(ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    return mean, stderr


def constant_network(input_dim: int, value: float) -> DenseNetwork:
    """Width-1 ReLU network computing the constant ``value``."""
    from .networks import RELU

    return DenseNetwork(
        input_dim,
        ((np.zeros((1, input_dim)), np.zeros(1)),),
        np.zeros(1),
        float(value),
        RELU,
    )

"""Full-batch training of a small classifier whose hidden layer is adapted.

Network (batch-major)::

    h1     = relu(x @ w_in + b_in)            # 2 -> 64, trainable
    z      = h1 @ (w_hidden + dW)             # 64 -> 64, base frozen, dW from the adapter
    h2     = relu(z)
    logits = h2 @ w_out + b_out               # 64 -> 8, trainable

Loss is mean softmax cross-entropy over the whole dataset.  Gradients are
computed by hand; ``numeric_grads`` provides the central-difference check.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from .adapter import Adapter, FourierAdapter, GeneralBasisAdapter, LoraAdapter
from .linalg import make_rng
from .sampling import NO_BIAS, BiasSpec

NUM_CLASSES = 8
HIDDEN = 64

DATA_STREAM = 0x400
MODEL_STREAM = 0x500


class DivergenceError(RuntimeError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite loss {loss} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


@dataclass
class SyntheticDataset:
    points: np.ndarray
    labels: np.ndarray
    class_centers: np.ndarray
    noise_sigma: float
    seed: int

    def __len__(self) -> int:
        return len(self.labels)

    def to_csv(self) -> str:
        lines = ["x,y,label"]
        lines += [f"{x!r},{y!r},{int(c)}" for (x, y), c in zip(self.points.tolist(), self.labels)]
        return "\n".join(lines) + "\n"


def gen_synthetic(seed: int = 2024, samples_per_class: int = 100, radius: float = 4.0, noise_sigma: float = 0.4) -> SyntheticDataset:
    """Eight Gaussian blobs centered evenly on a circle, class-major order."""
    if samples_per_class < 1:
        raise ValueError("samples_per_class must be >= 1")
    angles = 2 * np.pi * np.arange(NUM_CLASSES) / NUM_CLASSES
    centers = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    labels = np.repeat(np.arange(NUM_CLASSES), samples_per_class)
    noise = make_rng(seed, DATA_STREAM).standard_normal((labels.size, 2))
    points = centers[labels] + noise_sigma * noise
    return SyntheticDataset(points, labels, centers, float(noise_sigma), int(seed))


@dataclass
class ToyModel:
    w_in: np.ndarray
    b_in: np.ndarray
    w_hidden: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray
    adapter: Adapter
    train_outer: bool = True

    @classmethod
    def init(cls, adapter: Adapter, seed: int = 2024, base: str = "zero", in_dim: int = 2, train_outer: bool = True) -> "ToyModel":
        """He-initialized outer layers; ``base`` picks the frozen hidden weight."""
        rng = make_rng(seed, MODEL_STREAM)
        w_in = rng.standard_normal((in_dim, HIDDEN)) * np.sqrt(2.0 / in_dim)
        w_out = rng.standard_normal((HIDDEN, NUM_CLASSES)) * np.sqrt(2.0 / HIDDEN)
        if base == "zero":
            w_hidden = np.zeros((HIDDEN, HIDDEN))
        elif base == "identity":
            w_hidden = np.eye(HIDDEN)
        elif base == "gaussian":
            w_hidden = rng.standard_normal((HIDDEN, HIDDEN)) * np.sqrt(2.0 / HIDDEN)
        else:
            raise ValueError(f"unknown base weight {base!r}")
        return cls(w_in, np.zeros(HIDDEN), w_hidden, w_out, np.zeros(NUM_CLASSES), adapter, train_outer)

    def trainable(self) -> dict[str, np.ndarray]:
        out = {}
        if self.train_outer:
            out = {"w_in": self.w_in, "b_in": self.b_in, "w_out": self.w_out, "b_out": self.b_out}
        out.update({f"adapter.{k}": v for k, v in self.adapter.params().items()})
        return out

    @property
    def adapter_params(self) -> int:
        return self.adapter.num_params

    def base_digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.w_hidden).tobytes()).hexdigest()

    def logits(self, x: np.ndarray) -> np.ndarray:
        h1 = np.maximum(x @ self.w_in + self.b_in, 0.0)
        h2 = np.maximum(h1 @ (self.w_hidden + self.adapter.delta_w()), 0.0)
        return h2 @ self.w_out + self.b_out

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray):
        dw = self.adapter.delta_w()
        a1 = x @ self.w_in + self.b_in
        h1 = np.maximum(a1, 0.0)
        z = h1 @ (self.w_hidden + dw)
        h2 = np.maximum(z, 0.0)
        logits = h2 @ self.w_out + self.b_out
        loss, g_logits = softmax_cross_entropy(logits, y)
        g_h2 = g_logits @ self.w_out.T
        g_z = g_h2 * (z > 0)
        g_h1 = g_z @ (self.w_hidden + dw).T
        g_a1 = g_h1 * (a1 > 0)
        grads = {
            "w_in": x.T @ g_a1,
            "b_in": g_a1.sum(axis=0),
            "w_out": h2.T @ g_logits,
            "b_out": g_logits.sum(axis=0),
        }
        grads.update({f"adapter.{k}": v for k, v in self.adapter.grads(h1.T @ g_z).items()})
        return loss, grads, logits


def softmax_cross_entropy(logits: np.ndarray, y: np.ndarray):
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logz
    m = len(y)
    loss = -logp[np.arange(m), y].mean()
    g = np.exp(logp)
    g[np.arange(m), y] -= 1.0
    return float(loss), g / m


def evaluate(model: ToyModel, data: SyntheticDataset) -> tuple[float, float]:
    logits = model.logits(data.points)
    loss, _ = softmax_cross_entropy(logits, data.labels)
    return loss, accuracy(logits, data.labels)


def accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.argmax(logits, axis=1) == labels))


@dataclass
class TrainLog:
    epochs: list[int] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    accuracies: list[float] = field(default_factory=list)
    wall_clock: float = 0.0

    def append(self, epoch: int, loss: float, acc: float) -> None:
        self.epochs.append(epoch)
        self.losses.append(loss)
        self.accuracies.append(acc)

    @property
    def final_accuracy(self) -> float:
        return self.accuracies[-1]

    def first_epoch_reaching(self, acc: float = 1.0) -> int | None:
        for e, a in zip(self.epochs, self.accuracies):
            if a >= acc:
                return e
        return None

    def to_csv(self) -> str:
        rows = ["epoch,loss,accuracy"]
        rows += [f"{e},{l!r},{a!r}" for e, l, a in zip(self.epochs, self.losses, self.accuracies)]
        return "\n".join(rows) + "\n"


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, betas[0], betas[1], eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads) -> None:
        self.t += 1
        c1 = 1 - self.b1**self.t
        c2 = 1 - self.b2**self.t
        for k, p in params.items():
            g = grads[k]
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            p -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


class SGD:
    def __init__(self, params, lr: float):
        self.lr = lr

    def step(self, params, grads) -> None:
        for k, p in params.items():
            p -= self.lr * grads[k]


OPTIMIZERS = {"adam": Adam, "sgd": SGD}


def train(model: ToyModel, data: SyntheticDataset, epochs: int, lr: float, optimizer: str = "adam") -> TrainLog:
    """Full-batch training; each log row holds the loss/accuracy after that epoch's update."""
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    params = model.trainable()
    opt = OPTIMIZERS[optimizer](params, lr)
    log = TrainLog()
    start = time.perf_counter()
    x, y = data.points, data.labels
    loss, grads, logits = model.loss_and_grads(x, y)
    for epoch in range(1, epochs + 1):
        if not np.isfinite(loss):
            raise DivergenceError(epoch, loss)
        opt.step(params, grads)
        # the next forward pass doubles as this epoch's post-update evaluation
        loss, grads, logits = model.loss_and_grads(x, y)
        if not np.isfinite(loss):
            raise DivergenceError(epoch, loss)
        log.append(epoch, loss, accuracy(logits, y))
    log.wall_clock = time.perf_counter() - start
    return log


def numeric_grads(model: ToyModel, x, y, h: float = 1e-6) -> dict[str, np.ndarray]:
    """Central differences of the loss for every trainable tensor."""
    out = {}
    for name, p in model.trainable().items():
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            lp, _, _ = model.loss_and_grads(x, y)
            p[idx] = old - h
            lm, _, _ = model.loss_and_grads(x, y)
            p[idx] = old
            g[idx] = (lp - lm) / (2 * h)
        out[name] = g
    return out


def make_adapter(method: str, size: int, alpha: float, seed: int, bias: BiasSpec = NO_BIAS, zero_init: bool = False, d: int = HIDDEN) -> Adapter:
    """Hidden-layer adapter by method name: fourier, lora, random, orthogonal."""
    if method == "fourier":
        return FourierAdapter.init(d, d, size, alpha, seed, bias, zero_init=zero_init)
    if method == "lora":
        return LoraAdapter.init(d, d, size, alpha, seed)
    if method in ("random", "orthogonal"):
        return GeneralBasisAdapter.init(method, d, d, size, alpha, seed, bias, zero_init=zero_init)
    raise ValueError(f"unknown method {method!r}")


DEFAULT_ALPHA = {"fourier": 300.0, "lora": 1.0, "random": 300.0, "orthogonal": 300.0}
SWEEP_SEEDS = (0, 11111, 22222, 33333, 44444)
LR_GRID = (1e-3, 3e-3, 1e-2, 3e-2)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines one synthetic run besides method, size, seed and lr."""

    epochs: int = 2000
    optimizer: str = "adam"
    alpha: float | None = None
    base: str = "gaussian"
    train_outer: bool = False
    zero_init: bool = False
    bias: BiasSpec = NO_BIAS
    samples_per_class: int = 100
    radius: float = 4.0
    noise_sigma: float = 0.4


@dataclass
class RunResult:
    method: str
    size: int
    seed: int
    lr: float
    final_accuracy: float
    final_loss: float
    initial_loss: float
    first_perfect_epoch: int | None
    adapter_params: int


def run_synthetic(method: str, size: int, seed: int, lr: float, cfg: ExperimentConfig = ExperimentConfig()):
    """One training run; returns ``(result, log, model, data)``."""
    data = gen_synthetic(seed, cfg.samples_per_class, cfg.radius, cfg.noise_sigma)
    alpha = DEFAULT_ALPHA[method] if cfg.alpha is None else cfg.alpha
    adapter = make_adapter(method, size, alpha, seed, cfg.bias, cfg.zero_init)
    model = ToyModel.init(adapter, seed, cfg.base, train_outer=cfg.train_outer)
    initial_loss, _ = evaluate(model, data)
    log = train(model, data, cfg.epochs, lr, cfg.optimizer)
    result = RunResult(
        method, size, seed, lr, log.final_accuracy, log.losses[-1], initial_loss,
        log.first_epoch_reaching(1.0), model.adapter_params,
    )
    return result, log, model, data


def _run_result(job) -> RunResult:
    return run_synthetic(*job)[0]


def lr_sweep(method: str, size: int, seeds=SWEEP_SEEDS, lrs=LR_GRID, cfg: ExperimentConfig = ExperimentConfig(), map_fn=map):
    """``{lr: [RunResult per seed]}`` over the grid; ``map_fn`` may run jobs in parallel."""
    jobs = [(method, size, s, lr, cfg) for lr in lrs for s in seeds]
    results = list(map_fn(_run_result, jobs))
    k = len(seeds)
    return {lr: results[i * k : (i + 1) * k] for i, lr in enumerate(lrs)}


def best_lr(sweep: dict[float, list[RunResult]]) -> float:
    """Highest mean final accuracy; ties go to the lower mean final loss."""
    return min(
        sweep,
        key=lambda lr: (-np.mean([r.final_accuracy for r in sweep[lr]]), np.mean([r.final_loss for r in sweep[lr]])),
    )

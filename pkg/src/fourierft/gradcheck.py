"""Central-difference checks of the hand-written gradients."""

from __future__ import annotations

import numpy as np

from .adapter import FourierAdapter, adapter_forward, fourier_grad_coeffs
from .linalg import make_rng
from .train import ToyModel, gen_synthetic, make_adapter, numeric_grads


def rel_err(analytic, numeric) -> float:
    """Max-norm relative error ``|a - n|_inf / max(|a|_inf, |n|_inf)``."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(n), initial=0.0))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(a - n)) / scale)


def fourier_gradcheck(d1: int = 16, d2: int = 16, n: int = 32, batch: int = 4, instances: int = 50,
                      seed: int = 2024, h: float = 1e-6, wrong_sign: bool = False) -> float:
    """Worst relative error of ``fourier_grad_coeffs`` over random instances.

    The loss is ``0.5 * ||x @ (W0 + dW)||^2``, so the upstream gradient is the
    layer output itself.  ``wrong_sign`` flips the analytic gradient (a negative
    control for the harness).
    """
    rng = make_rng(seed, 0x600)
    worst = 0.0
    for i in range(instances):
        ad = FourierAdapter.init(d1, d2, n, alpha=float(rng.uniform(1, 300)), seed=seed + i)
        w0 = rng.standard_normal((d1, d2))
        x = rng.standard_normal((batch, d1))

        def loss(c):
            old = ad.coeffs
            ad.coeffs = c
            out = 0.5 * float(np.sum(adapter_forward(ad, w0, x) ** 2))
            ad.coeffs = old
            return out

        g = fourier_grad_coeffs(ad, w0, x, adapter_forward(ad, w0, x))
        if wrong_sign:
            g = -g
        num = np.empty(n)
        for l in range(n):
            e = np.zeros(n)
            e[l] = h
            num[l] = (loss(ad.coeffs + e) - loss(ad.coeffs - e)) / (2 * h)
        worst = max(worst, rel_err(g, num))
    return worst


def model_gradcheck(method: str = "fourier", size: int = 32, n_samples: int = 10, seed: int = 2024,
                    h: float = 1e-6, train_outer: bool = True) -> dict[str, float]:
    """Per-tensor relative error of ``ToyModel.loss_and_grads`` on ``n_samples`` points."""
    data = gen_synthetic(seed, -(-n_samples // 8))
    pick = np.linspace(0, len(data) - 1, n_samples).round().astype(int)
    x, y = data.points[pick], data.labels[pick]
    alpha = 1.0 if method == "lora" else 300.0
    adapter = make_adapter(method, size, alpha, seed)
    if method == "lora":
        # a zero B would leave A's gradient identically zero
        adapter.b[...] = make_rng(seed, 0x601).standard_normal(adapter.b.shape) * 0.1
    model = ToyModel.init(adapter, seed, "gaussian", train_outer=train_outer)
    _, grads, _ = model.loss_and_grads(x, y)
    numeric = numeric_grads(model, x, y, h)
    return {k: rel_err(grads[k], numeric[k]) for k in numeric}

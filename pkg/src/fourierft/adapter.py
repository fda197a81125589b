"""Weight-change adapters for a frozen ``d1 x d2`` weight.

Orientation: inputs are batch-major ``(batch, d1)``, weights are stored
``(d1, d2)`` and a layer computes ``h = x @ (W0 + dW)``.

* ``FourierAdapter``: ``dW = alpha * Re(ifft2(ToDense(E, c)))``, with ``n``
  trainable coefficients at fixed spectral entries.
* ``LoraAdapter``: ``dW = alpha_lora * B @ A`` with ``B`` (d1 x r), ``A`` (r x d2).
* ``GeneralBasisAdapter``: ``dW = alpha * B1 @ ToDense(E, c) @ B2`` with frozen
  random or orthogonal bases; the ``fourier`` kind reduces to ``FourierAdapter``.

Every adapter exposes ``delta_w()``, ``params()`` and ``grads(g)``, where ``g`` is
the gradient of a scalar loss with respect to ``dW``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dft
from .linalg import ShapeError, as_matrix, make_rng, orthogonalize
from .sampling import NO_BIAS, BiasSpec, EntryMatrix, sample_entries

# sub-streams of the shared seed (0 and 1 belong to entry sampling)
COEFF_STREAM = 0x100
LORA_STREAM = 0x200
BASIS_STREAM = 0x300

BASIS_KINDS = ("fourier", "random", "orthogonal")


def _check_grad_shape(g, d1, d2) -> np.ndarray:
    g = as_matrix(g, "weight gradient")
    if g.shape != (d1, d2):
        raise ShapeError(f"weight gradient is {g.shape[0]}x{g.shape[1]}, adapter is {d1}x{d2}")
    return g


def _check_coeffs(coeffs, n) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64).reshape(-1)
    if c.size != n:
        raise ShapeError(f"{c.size} coefficients for {n} entries")
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    return c


def init_coeffs(seed: int, n: int, layer: int = 0, zero_init: bool = False) -> np.ndarray:
    if zero_init:
        return np.zeros(n)
    return make_rng(seed, COEFF_STREAM + layer).standard_normal(n)


@dataclass
class FourierAdapter:
    entries: EntryMatrix
    coeffs: np.ndarray
    alpha: float = 300.0

    def __post_init__(self):
        self.coeffs = _check_coeffs(self.coeffs, self.entries.n)
        dft.entry_arrays(self.entries, self.d1, self.d2)
        self._factors = None

    @property
    def d1(self) -> int:
        return self.entries.d1

    @property
    def d2(self) -> int:
        return self.entries.d2

    @property
    def factors(self):
        # entries are frozen, so the cosine tables are computed once
        if self._factors is None:
            self._factors = dft.cosine_factors(self.entries, self.d1, self.d2)
        return self._factors

    @classmethod
    def init(
        cls,
        d1: int,
        d2: int,
        n: int,
        alpha: float = 300.0,
        seed: int = 2024,
        bias: BiasSpec = NO_BIAS,
        layer: int = 0,
        zero_init: bool = False,
    ) -> "FourierAdapter":
        """Entries from the shared ``seed``; Gaussian coefficients on a per-layer stream."""
        entries = sample_entries(seed, d1, d2, n, bias)
        return cls(entries, init_coeffs(seed, n, layer, zero_init), alpha)

    def delta_w(self, path: str = "sparse") -> np.ndarray:
        if path == "sparse":
            return self.alpha * dft.sparse_idft_real(self.entries, self.coeffs, self.d1, self.d2, self.factors)
        return self.alpha * dft.spectral_to_spatial(self.entries, self.coeffs, self.d1, self.d2, path)

    def params(self) -> dict[str, np.ndarray]:
        return {"coeffs": self.coeffs}

    def grads(self, g) -> dict[str, np.ndarray]:
        g = _check_grad_shape(g, self.d1, self.d2)
        return {"coeffs": self.alpha * dft.sparse_idft_adjoint(self.entries, g, self.factors)}

    @property
    def num_params(self) -> int:
        return self.entries.n


@dataclass
class LoraAdapter:
    a: np.ndarray
    b: np.ndarray
    alpha_lora: float = 1.0

    def __post_init__(self):
        self.a = as_matrix(self.a, "A")
        self.b = as_matrix(self.b, "B")
        if self.a.shape[0] != self.b.shape[1]:
            raise ShapeError(f"B is {self.b.shape[0]}x{self.b.shape[1]} but A is {self.a.shape[0]}x{self.a.shape[1]}")

    @property
    def rank(self) -> int:
        return self.a.shape[0]

    @property
    def d1(self) -> int:
        return self.b.shape[0]

    @property
    def d2(self) -> int:
        return self.a.shape[1]

    @classmethod
    def init(cls, d1: int, d2: int, r: int, alpha_lora: float = 1.0, seed: int = 2024, layer: int = 0) -> "LoraAdapter":
        """Gaussian ``A``, zero ``B``: the product starts at zero."""
        if r < 1:
            raise ValueError(f"LoRA rank must be >= 1, got {r}")
        a = make_rng(seed, LORA_STREAM + layer).standard_normal((r, d2))
        return cls(a, np.zeros((d1, r)), alpha_lora)

    def delta_w(self) -> np.ndarray:
        return self.alpha_lora * (self.b @ self.a)

    def params(self) -> dict[str, np.ndarray]:
        return {"a": self.a, "b": self.b}

    def grads(self, g) -> dict[str, np.ndarray]:
        g = _check_grad_shape(g, self.d1, self.d2)
        return {"a": self.alpha_lora * (self.b.T @ g), "b": self.alpha_lora * (g @ self.a.T)}

    @property
    def num_params(self) -> int:
        return self.rank * (self.d1 + self.d2)


def make_basis(kind: str, d: int, seed: int, side: int) -> np.ndarray | None:
    """Frozen ``d x d`` basis; ``side`` 1 is the left factor, 2 the right."""
    if kind == "fourier":
        return None
    rng = make_rng(seed, BASIS_STREAM + side)
    m = rng.standard_normal((d, d))
    if kind == "random":
        return m
    if kind == "orthogonal":
        return orthogonalize(m)
    raise ValueError(f"unknown basis kind {kind!r}; expected one of {BASIS_KINDS}")


def fourier_basis(d: int) -> np.ndarray:
    """Complex normalized inverse-DFT matrix ``exp(2*pi*i*p*j/d)/d`` (symmetric)."""
    idx = np.arange(d)
    return np.exp(2j * np.pi * (np.outer(idx, idx) % d) / d) / d


@dataclass
class GeneralBasisAdapter:
    basis_kind: str
    entries: EntryMatrix
    coeffs: np.ndarray
    alpha: float = 300.0
    b1: np.ndarray | None = field(default=None, repr=False)
    b2: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.basis_kind not in BASIS_KINDS:
            raise ValueError(f"unknown basis kind {self.basis_kind!r}")
        self.coeffs = _check_coeffs(self.coeffs, self.entries.n)
        dft.entry_arrays(self.entries, self.d1, self.d2)
        if self.basis_kind == "fourier":
            if self.b1 is not None or self.b2 is not None:
                raise ValueError("the fourier basis is computed, not stored")
        else:
            self.b1 = as_matrix(self.b1, "B1")
            self.b2 = as_matrix(self.b2, "B2")
            if self.b1.shape != (self.d1, self.d1) or self.b2.shape != (self.d2, self.d2):
                raise ShapeError(f"bases {self.b1.shape}, {self.b2.shape} do not fit {self.d1}x{self.d2}")

    @property
    def d1(self) -> int:
        return self.entries.d1

    @property
    def d2(self) -> int:
        return self.entries.d2

    @classmethod
    def init(
        cls,
        basis_kind: str,
        d1: int,
        d2: int,
        n: int,
        alpha: float = 300.0,
        seed: int = 2024,
        bias: BiasSpec = NO_BIAS,
        layer: int = 0,
        zero_init: bool = False,
    ) -> "GeneralBasisAdapter":
        entries = sample_entries(seed, d1, d2, n, bias)
        b1 = make_basis(basis_kind, d1, seed, 1)
        b2 = make_basis(basis_kind, d2, seed, 2)
        return cls(basis_kind, entries, init_coeffs(seed, n, layer, zero_init), alpha, b1, b2)

    def delta_w(self) -> np.ndarray:
        if self.basis_kind == "fourier":
            return self.alpha * dft.sparse_idft_real(self.entries, self.coeffs, self.d1, self.d2)
        rows, cols = self.entries.rows, self.entries.cols
        # B1 @ F @ B2 touches only the occupied columns of B1 and rows of B2
        return self.alpha * ((self.b1[:, rows] * self.coeffs) @ self.b2[cols, :])

    def params(self) -> dict[str, np.ndarray]:
        return {"coeffs": self.coeffs}

    def grads(self, g) -> dict[str, np.ndarray]:
        g = _check_grad_shape(g, self.d1, self.d2)
        if self.basis_kind == "fourier":
            return {"coeffs": self.alpha * dft.sparse_idft_adjoint(self.entries, g)}
        rows, cols = self.entries.rows, self.entries.cols
        return {"coeffs": self.alpha * np.sum((self.b1[:, rows].T @ g) * self.b2[cols, :], axis=1)}

    @property
    def num_params(self) -> int:
        return self.entries.n


Adapter = FourierAdapter | LoraAdapter | GeneralBasisAdapter


def fourier_delta_w(ad: FourierAdapter) -> np.ndarray:
    return ad.delta_w()


def lora_delta_w(ad: LoraAdapter) -> np.ndarray:
    return ad.delta_w()


def general_basis_delta_w(ad: GeneralBasisAdapter) -> np.ndarray:
    return ad.delta_w()


def _check_forward(ad, w0, x):
    w0 = as_matrix(w0, "base weight")
    x = as_matrix(x, "input")
    if w0.shape != (ad.d1, ad.d2):
        raise ShapeError(f"base weight is {w0.shape[0]}x{w0.shape[1]}, adapter is {ad.d1}x{ad.d2}")
    if x.shape[1] != ad.d1:
        raise ShapeError(f"input has {x.shape[1]} features, layer expects {ad.d1}")
    return w0, x


def adapter_forward(ad: Adapter, w0, x) -> np.ndarray:
    """``x @ W0 + x @ dW`` without merging."""
    w0, x = _check_forward(ad, w0, x)
    return x @ w0 + x @ ad.delta_w()


fourier_forward = adapter_forward


def adapter_grads(ad: Adapter, w0, x, upstream_h) -> dict[str, np.ndarray]:
    """Parameter gradients of a loss whose gradient w.r.t. the layer output is ``upstream_h``."""
    w0, x = _check_forward(ad, w0, x)
    upstream_h = as_matrix(upstream_h, "upstream")
    if upstream_h.shape != (x.shape[0], ad.d2):
        raise ShapeError(f"upstream is {upstream_h.shape}, expected {(x.shape[0], ad.d2)}")
    return ad.grads(x.T @ upstream_h)


def fourier_grad_coeffs(ad: FourierAdapter, w0, x, upstream_h) -> np.ndarray:
    return adapter_grads(ad, w0, x, upstream_h)["coeffs"]


def merge(ad: Adapter, w0) -> np.ndarray:
    """``W0 + dW``.  Not idempotent: merging an already merged weight adds ``dW`` again."""
    w0 = as_matrix(w0, "base weight")
    if w0.shape != (ad.d1, ad.d2):
        raise ShapeError(f"base weight is {w0.shape[0]}x{w0.shape[1]}, adapter is {ad.d1}x{ad.d2}")
    return w0 + ad.delta_w()

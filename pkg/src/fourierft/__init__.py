"""Sparse spectral weight-change adapters, a low-rank baseline and their tooling."""

__version__ = "0.1.0"

from .adapter import (
    FourierAdapter,
    GeneralBasisAdapter,
    LoraAdapter,
    adapter_forward,
    fourier_delta_w,
    fourier_forward,
    fourier_grad_coeffs,
    general_basis_delta_w,
    lora_delta_w,
    merge,
)
from .budget import BudgetReport, budget
from .dft import brute_force_idft2, ifft2_real, sparse_idft_adjoint, sparse_idft_real
from .sampling import BiasSpec, EntryMatrix, bandpass_probability, sample_biased, sample_uniform

__all__ = [
    "BiasSpec",
    "BudgetReport",
    "EntryMatrix",
    "FourierAdapter",
    "GeneralBasisAdapter",
    "LoraAdapter",
    "adapter_forward",
    "bandpass_probability",
    "brute_force_idft2",
    "budget",
    "fourier_delta_w",
    "fourier_forward",
    "fourier_grad_coeffs",
    "general_basis_delta_w",
    "ifft2_real",
    "lora_delta_w",
    "merge",
    "sample_biased",
    "sample_uniform",
    "sparse_idft_adjoint",
    "sparse_idft_real",
]

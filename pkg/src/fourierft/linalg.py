"""Dense real matrices and the seeded random streams shared by every module.

Matrices are plain ``float64`` numpy arrays of shape ``(rows, cols)``.  Random
streams use numpy's Philox4x32-10 counter-based bit generator keyed directly by
the 64-bit seed, so a seed fully determines every draw.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
# Golden-ratio increment (splitmix64) used to derive independent sub-streams.
STREAM_MIX = 0x9E3779B97F4A7C15


class ShapeError(ValueError):
    pass


class RankDeficientError(np.linalg.LinAlgError):
    pass


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    return m


def derive_seed(seed: int, stream: int) -> int:
    """Seed of sub-stream ``stream``: ``seed XOR (stream * STREAM_MIX)`` mod 2**64."""
    return (int(seed) ^ ((int(stream) * STREAM_MIX) & MASK64)) & MASK64


def make_rng(seed: int, stream: int | None = None) -> np.random.Generator:
    """Philox generator for ``seed`` (optionally on a derived sub-stream)."""
    if stream is not None:
        seed = derive_seed(seed, stream)
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def randn_matrix(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise ShapeError(f"matrix dims must be >= 1, got {rows}x{cols}")
    return rng.standard_normal((rows, cols))


def orthogonalize(m, tol: float = 1e-12) -> np.ndarray:
    """Q factor of ``m`` with the sign convention ``diag(R) > 0``.

    Raises RankDeficientError when a pivot of R falls below ``tol`` (relative to
    the largest column norm).
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"orthogonalize needs a square matrix, got {m.shape[0]}x{m.shape[1]}")
    q, r = np.linalg.qr(m)
    diag = np.diag(r)
    scale = max(np.max(np.linalg.norm(m, axis=0)), 1.0)
    if np.min(np.abs(diag)) < tol * scale:
        raise RankDeficientError(f"matrix is rank deficient (min |R_ii| = {np.min(np.abs(diag)):.3e})")
    return q * np.sign(diag)

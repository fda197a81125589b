"""Two-dimensional inverse DFT of sparse real spectra.

Conventions: the inverse transform uses ``exp(+2*pi*i*...)`` and is normalized by
``1/(d1*d2)`` (the ``ifft2`` convention).  Only the real part of the spatial
matrix is ever returned.

Three independent routes compute the same thing:

* ``ifft2_real``: densify, then a row pass and a column pass of 1-D FFT plans
  (mixed radix for lengths whose prime factors are all <= 32, Bluestein
  chirp-z otherwise);
* ``sparse_idft_real``: the cosine-only sum over the ``n`` occupied entries,
  evaluated as two separable matrix products;
* ``brute_force_idft2``: the literal double sum, for tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .linalg import ShapeError, as_matrix

BLUESTEIN_PRIME_THRESHOLD = 32
BRUTE_FORCE_MAX_CELLS = 10**6
_POW2_RADICES = (16, 8, 4, 2)


class EntryRangeError(ValueError):
    pass


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        while n % p == 0:
            out.append(p)
            n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def _radices(n: int) -> list[int]:
    primes = _prime_factors(n)
    twos = primes.count(2)
    radices = []
    for r in _POW2_RADICES:
        k = r.bit_length() - 1
        while twos >= k:
            radices.append(r)
            twos -= k
    radices.extend(p for p in primes if p != 2)
    return radices


def _unit_roots(numer: np.ndarray, denom: int, sign: int) -> np.ndarray:
    # reduce the integer phase first so large products keep full precision
    return np.exp(sign * 2j * np.pi * (np.asarray(numer) % denom) / denom)


@dataclass(frozen=True)
class Plan1D:
    """Precomputed tables for a length-``length`` DFT with exponent sign ``sign``."""

    length: int
    sign: int
    strategy: str
    radices: tuple[int, ...] = ()
    # per stage: (radix, twiddle table (p, m), small DFT matrix (p, p))
    stages: tuple = field(default=(), repr=False)
    chirp: np.ndarray | None = field(default=None, repr=False)
    kernel_hat: np.ndarray | None = field(default=None, repr=False)
    inner: "tuple[Plan1D, Plan1D] | None" = field(default=None, repr=False)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Unnormalized DFT along the last axis of ``x``."""
        x = np.asarray(x, dtype=np.complex128)
        if x.shape[-1] != self.length:
            raise ShapeError(f"plan for length {self.length} applied to length {x.shape[-1]}")
        lead = x.shape[:-1]
        flat = x.reshape(-1, self.length)
        if self.strategy == "bluestein":
            out = self._bluestein(flat)
        else:
            out = self._mixed(flat, 0)
        return out.reshape(*lead, self.length)

    def _mixed(self, x: np.ndarray, level: int) -> np.ndarray:
        if level == len(self.stages):
            return x
        p, twiddle, small = self.stages[level]
        batch, n = x.shape
        m = n // p
        if m == 1:
            return x @ small
        # decimation in time: x[t*p + r] -> subsequence r
        sub = x.reshape(batch, m, p).transpose(0, 2, 1).reshape(batch * p, m)
        y = self._mixed(sub, level + 1).reshape(batch, p, m) * twiddle
        return np.einsum("brk,rs->bsk", y, small).reshape(batch, n)

    def _bluestein(self, x: np.ndarray) -> np.ndarray:
        forward, backward = self.inner
        size = forward.length
        a = np.zeros((x.shape[0], size), dtype=np.complex128)
        a[:, : self.length] = x * self.chirp
        conv = backward(forward(a) * self.kernel_hat) / size
        return conv[:, : self.length] * self.chirp


@lru_cache(maxsize=64)
def make_plan(length: int, sign: int = 1) -> Plan1D:
    """Plan a 1-D DFT ``X[k] = sum_j x[j] exp(sign*2*pi*i*j*k/length)``."""
    if length < 1:
        raise ShapeError(f"transform length must be >= 1, got {length}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if length == 1:
        return Plan1D(length, sign, "mixed-radix")
    if max(_prime_factors(length)) > BLUESTEIN_PRIME_THRESHOLD:
        return _bluestein_plan(length, sign)
    radices = _radices(length)
    stages, n = [], length
    for p in radices:
        m = n // p
        twiddle = _unit_roots(np.outer(np.arange(p), np.arange(m)), n, sign)
        small = _unit_roots(np.outer(np.arange(p), np.arange(p)), p, sign)
        stages.append((p, twiddle, small))
        n = m
    return Plan1D(length, sign, "mixed-radix", tuple(radices), tuple(stages))


def _bluestein_plan(length: int, sign: int) -> Plan1D:
    size = 1 << (2 * length - 2).bit_length()
    j = np.arange(length)
    # exp(sign*pi*i*j^2/N) with j^2 reduced mod 2N
    chirp = np.exp(sign * 1j * np.pi * ((j * j) % (2 * length)) / length)
    kernel = np.zeros(size, dtype=np.complex128)
    kernel[:length] = np.conj(chirp)
    kernel[size - length + 1 :] = np.conj(chirp[1:])[::-1]
    forward, backward = make_plan(size, -1), make_plan(size, 1)
    return Plan1D(
        length,
        sign,
        "bluestein",
        chirp=chirp,
        kernel_hat=forward(kernel[None, :])[0],
        inner=(forward, backward),
    )


def fft(x, axis: int = -1) -> np.ndarray:
    """Unnormalized forward DFT (``exp(-...)``) along ``axis``."""
    x = np.moveaxis(np.asarray(x, dtype=np.complex128), axis, -1)
    return np.moveaxis(make_plan(x.shape[-1], -1)(x), -1, axis)


def ifft(x, axis: int = -1) -> np.ndarray:
    """Normalized inverse DFT (``exp(+...)/N``) along ``axis``."""
    x = np.moveaxis(np.asarray(x, dtype=np.complex128), axis, -1)
    n = x.shape[-1]
    return np.moveaxis(make_plan(n, 1)(x) / n, -1, axis)


def ifft2(f) -> np.ndarray:
    """Complex normalized 2-D inverse DFT: row pass, then column pass."""
    f = np.asarray(f, dtype=np.complex128)
    if f.ndim != 2:
        raise ShapeError(f"ifft2 expects a 2-D array, got shape {f.shape}")
    return ifft(ifft(f, axis=1), axis=0)


def ifft2_real(f) -> np.ndarray:
    """``Re(ifft2(f))`` for a real spectral matrix ``f``."""
    return ifft2(as_matrix(f, "spectral matrix")).real


def brute_force_idft2(f) -> np.ndarray:
    """Literal normalized double sum; an O((d1*d2)**2) reference for tests."""
    f = as_matrix(f, "spectral matrix")
    d1, d2 = f.shape
    if d1 * d2 > BRUTE_FORCE_MAX_CELLS:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX_CELLS} cells, got {d1 * d2}")
    j = np.arange(d1)[:, None]
    k = np.arange(d2)[None, :]
    chunk = max(1, 4_000_000 // (d1 * d2))
    out = np.empty((d1, d2), dtype=np.complex128)
    for p in range(d1):
        row_phase = (p * j % d1) / d1
        for q0 in range(0, d2, chunk):
            qs = np.arange(q0, min(d2, q0 + chunk))
            phase = row_phase[None] + (qs[:, None, None] * k[None] % d2) / d2
            out[p, qs] = np.sum(f[None] * np.exp(2j * np.pi * phase), axis=(1, 2))
    return out.real / (d1 * d2)


def entry_arrays(entries, d1: int | None = None, d2: int | None = None):
    """Row/column index arrays from an EntryMatrix or a ``(2, n)`` array, range-checked."""
    if hasattr(entries, "rows") and hasattr(entries, "cols"):
        rows = np.asarray(entries.rows, dtype=np.int64)
        cols = np.asarray(entries.cols, dtype=np.int64)
    else:
        arr = np.asarray(entries, dtype=np.int64).reshape(2, -1)
        rows, cols = arr[0], arr[1]
    if rows.shape != cols.shape:
        raise ShapeError("entry rows and cols differ in length")
    for name, idx, bound in (("row", rows, d1), ("col", cols, d2)):
        if bound is None:
            continue
        bad = np.flatnonzero((idx < 0) | (idx >= bound))
        if bad.size:
            l = int(bad[0])
            raise EntryRangeError(
                f"entry {l} has {name} index {int(idx[l])} outside [0, {bound}) "
                f"(entry ({int(rows[l])}, {int(cols[l])}))"
            )
    return rows, cols


def to_dense(entries, coeffs, d1: int, d2: int) -> np.ndarray:
    """Scatter ``coeffs`` at ``entries`` into a zero ``d1 x d2`` spectral matrix."""
    rows, cols = entry_arrays(entries, d1, d2)
    coeffs = _coeff_array(coeffs, rows.size)
    f = np.zeros((d1, d2))
    np.add.at(f, (rows, cols), coeffs)
    return f


def _coeff_array(coeffs, n: int) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64).reshape(-1)
    if c.size != n:
        raise ShapeError(f"{c.size} coefficients for {n} entries")
    return c


def _cos_sin_factors(rows, cols, d1: int, d2: int):
    # cos(a + b) = cos a cos b - sin a sin b with a = 2pi p j/d1, b = 2pi k q/d2
    a = 2 * np.pi * (np.outer(np.arange(d1), rows) % d1) / d1
    b = 2 * np.pi * (np.outer(cols, np.arange(d2)) % d2) / d2
    return np.cos(a), np.sin(a), np.cos(b), np.sin(b)


def cosine_factors(entries, d1: int, d2: int):
    """Precomputed ``(cos a, sin a, cos b, sin b)`` for repeated sparse evaluations."""
    rows, cols = entry_arrays(entries, d1, d2)
    return _cos_sin_factors(rows, cols, d1, d2)


def sparse_idft_real(entries, coeffs, d1: int, d2: int, factors=None) -> np.ndarray:
    """``(1/(d1*d2)) * sum_l c_l cos(2*pi*(p*j_l/d1 + q*k_l/d2))`` for every (p, q)."""
    rows, cols = entry_arrays(entries, d1, d2)
    c = _coeff_array(coeffs, rows.size)
    if c.size == 0:
        return np.zeros((d1, d2))
    ca, sa, cb, sb = factors if factors is not None else _cos_sin_factors(rows, cols, d1, d2)
    return ((ca * c) @ cb - (sa * c) @ sb) / (d1 * d2)


def sparse_idft_adjoint(entries, upstream, factors=None) -> np.ndarray:
    """Transpose of ``c -> sparse_idft_real(entries, c, *upstream.shape)``."""
    g = as_matrix(upstream, "upstream")
    d1, d2 = g.shape
    for attr, size in (("d1", d1), ("d2", d2)):
        expect = getattr(entries, attr, None)
        if expect is not None and expect != size:
            raise ShapeError(f"upstream is {d1}x{d2} but entries were drawn for {entries.d1}x{entries.d2}")
    rows, cols = entry_arrays(entries, d1, d2)
    if rows.size == 0:
        return np.zeros(0)
    ca, sa, cb, sb = factors if factors is not None else _cos_sin_factors(rows, cols, d1, d2)
    return (np.sum((ca.T @ g) * cb, axis=1) - np.sum((sa.T @ g) * sb, axis=1)) / (d1 * d2)


def prefer_sparse(n: int, d1: int, d2: int) -> bool:
    """Crossover heuristic between the sparse-cosine and dense FFT paths."""
    lg = math.log2(d1) + math.log2(d2)
    return n < 4 * lg * max(d1, d2) / min(d1, d2)


def spectral_to_spatial(entries, coeffs, d1: int, d2: int, path: str = "auto") -> np.ndarray:
    """Real spatial matrix of a sparse spectrum via the chosen path."""
    if path == "auto":
        path = "sparse" if prefer_sparse(len(np.atleast_1d(coeffs)), d1, d2) else "dense"
    if path == "sparse":
        return sparse_idft_real(entries, coeffs, d1, d2)
    if path == "dense":
        return ifft2_real(to_dense(entries, coeffs, d1, d2))
    raise ValueError(f"unknown path {path!r}")

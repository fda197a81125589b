"""Seeded selection of spectral entries.

``sample_uniform`` takes the first ``n`` positions of a seeded Fisher-Yates
shuffle of the flattened ``d1 x d2`` grid.  ``sample_biased`` draws ``n`` distinct
cells without replacement with probability proportional to the Gaussian
band-pass profile, using Gumbel top-k keys on log-probabilities (equivalent to
exponential-key weighted reservoir sampling, and free of underflow).

Flat indices decode as ``(idx // d2, idx % d2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import make_rng

# sub-streams of the shared seed
UNIFORM_STREAM = 0
BIASED_STREAM = 1


@dataclass(frozen=True)
class BiasSpec:
    mode: str = "none"
    f_c: float = 0.0
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.mode not in ("none", "bandpass"):
            raise ValueError(f"unknown bias mode {self.mode!r}")
        if self.mode == "bandpass":
            if self.bandwidth <= 0:
                raise ValueError(f"bandwidth must be > 0, got {self.bandwidth}")
            if self.f_c < 0:
                raise ValueError(f"f_c must be >= 0, got {self.f_c}")

    @classmethod
    def bandpass(cls, f_c: float, bandwidth: float) -> "BiasSpec":
        return cls("bandpass", float(f_c), float(bandwidth))


NO_BIAS = BiasSpec()


@dataclass(frozen=True)
class EntryMatrix:
    rows: np.ndarray
    cols: np.ndarray
    seed: int
    d1: int
    d2: int
    bias: BiasSpec = NO_BIAS

    @property
    def n(self) -> int:
        return int(self.rows.size)

    def as_array(self) -> np.ndarray:
        """The ``2 x n`` entry matrix (row indices, then column indices)."""
        return np.stack([self.rows, self.cols])

    def __eq__(self, other):
        if not isinstance(other, EntryMatrix):
            return NotImplemented
        return (
            (self.seed, self.d1, self.d2, self.bias) == (other.seed, other.d1, other.d2, other.bias)
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
        )

    __hash__ = None


def _check_count(d1: int, d2: int, n: int) -> None:
    if d1 < 1 or d2 < 1:
        raise ValueError(f"spectral shape must be positive, got {d1}x{d2}")
    if not 0 <= n <= d1 * d2:
        raise ValueError(f"cannot select n={n} distinct entries from a {d1}x{d2} grid")


def _decode(flat: np.ndarray, seed, d1, d2, bias) -> EntryMatrix:
    flat = np.asarray(flat, dtype=np.int64)
    return EntryMatrix(flat // d2, flat % d2, int(seed), d1, d2, bias)


def sample_uniform(seed: int, d1: int, d2: int, n: int) -> EntryMatrix:
    """First ``n`` items of a seeded Fisher-Yates permutation of ``range(d1*d2)``."""
    _check_count(d1, d2, n)
    total = d1 * d2
    rng = make_rng(seed, UNIFORM_STREAM)
    # step i swaps position i with a uniform position in [i, total)
    offsets = rng.integers(0, total - np.arange(n, dtype=np.int64)) if n else np.zeros(0, np.int64)
    moved: dict[int, int] = {}
    picked = np.empty(n, dtype=np.int64)
    for i, off in enumerate(offsets.tolist()):
        j = i + off
        picked[i] = moved.get(j, j)
        moved[j] = moved.get(i, i)
    return _decode(picked, seed, d1, d2, NO_BIAS)


def _radius(d1: int, d2: int) -> np.ndarray:
    u = np.arange(d1)[:, None] - (d1 - 1) / 2
    v = np.arange(d2)[None, :] - (d2 - 1) / 2
    return np.sqrt(u * u + v * v)


def bandpass_log_probability(d1: int, d2: int, bias: BiasSpec) -> np.ndarray:
    """Natural log of the unnormalized band-pass profile (``-inf`` where it is 0)."""
    if bias.mode != "bandpass":
        raise ValueError("band-pass probabilities need a bandpass BiasSpec")
    dist = _radius(d1, d2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (dist * dist - bias.f_c**2) / (dist * bias.bandwidth)
        logp = -(z * z)
    # the limit at distance 0 is 1 for f_c == 0 and 0 otherwise
    at_center = dist == 0
    logp[at_center] = 0.0 if bias.f_c == 0 else -np.inf
    return logp


def bandpass_probability(d1: int, d2: int, bias: BiasSpec) -> np.ndarray:
    """``exp(-((D^2 - f_c^2) / (D * W))^2)`` with ``D`` the distance to the grid center."""
    return np.exp(bandpass_log_probability(d1, d2, bias))


def sample_biased(seed: int, d1: int, d2: int, n: int, bias: BiasSpec) -> EntryMatrix:
    """``n`` distinct cells drawn without replacement, weighted by the band-pass profile.

    Zero-probability cells are only taken once every positive cell is used, in a
    seeded uniform order.
    """
    if bias.mode == "none":
        return sample_uniform(seed, d1, d2, n)
    _check_count(d1, d2, n)
    logp = bandpass_log_probability(d1, d2, bias).reshape(-1)
    if not np.any(np.isfinite(logp)):
        raise ValueError("band-pass profile assigns zero probability to every cell")
    rng = make_rng(seed, BIASED_STREAM)
    gumbel = rng.gumbel(size=logp.size)
    tiebreak = rng.random(logp.size)
    keys = logp + gumbel
    # lexsort: last key is primary; sort descending by (keys, tiebreak)
    order = np.lexsort((-tiebreak, -keys))
    return _decode(order[:n], seed, d1, d2, bias)


def sample_entries(seed: int, d1: int, d2: int, n: int, bias: BiasSpec = NO_BIAS) -> EntryMatrix:
    if bias.mode == "none":
        return sample_uniform(seed, d1, d2, n)
    return sample_biased(seed, d1, d2, n, bias)

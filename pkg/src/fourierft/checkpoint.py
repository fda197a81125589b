"""Binary adapter checkpoints (``.spft``).

All integers little-endian, all reals IEEE-754 float32.

Header, 36 bytes::

    magic      4s   b"SPFT"
    version    u16  1
    method     u8   1 fourier, 2 lora, 3 general-basis
    alpha      f32  shared scaling (alpha_lora for lora)
    seed       u64  shared seed
    n_or_r     u32  coefficients per layer, or LoRA rank
    layers     u32
    bias_mode  u8   0 none, 1 bandpass
    f_c        f32
    bandwidth  f32

Then per layer: ``u16`` name length, UTF-8 name, ``u32 d1``, ``u32 d2`` and a payload:

* fourier: ``n`` coefficients.  Entries are not stored; they are regenerated
  from (seed, d1, d2, n, bias).
* lora: ``B`` (d1 x r) then ``A`` (r x d2), row-major.
* general-basis: one ``u8`` basis kind (0 fourier, 1 random, 2 orthogonal),
  then ``n`` coefficients; bases are regenerated from the seed.

Base weights for ``merge`` use a raw format: ``u64 rows``, ``u64 cols``, then
``rows*cols`` float32 values row-major.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adapter import BASIS_KINDS, Adapter, FourierAdapter, GeneralBasisAdapter, LoraAdapter, make_basis
from .budget import BudgetReport
from .sampling import NO_BIAS, BiasSpec, EntryMatrix, sample_entries

MAGIC = b"SPFT"
VERSION = 1
HEADER = struct.Struct("<4sHBfQIIBff")
LAYER_DIMS = struct.Struct("<II")
RAW_HEADER = struct.Struct("<QQ")
METHOD_CODES = {"fourier": 1, "lora": 2, "general-basis": 3}
BIAS_CODES = {"none": 0, "bandpass": 1}
F32 = np.dtype("<f4")


class CheckpointError(ValueError):
    pass


class BadMagicError(CheckpointError):
    pass


class UnsupportedVersionError(CheckpointError):
    pass


class TruncatedError(CheckpointError):
    pass


class DimensionError(CheckpointError):
    pass


class InconsistentConfigError(CheckpointError):
    pass


@dataclass(frozen=True)
class AdapterConfig:
    method: str
    size: int
    alpha: float
    seed: int = 2024
    bias: BiasSpec = NO_BIAS
    basis_kind: str = "fourier"
    zero_init: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.method not in METHOD_CODES:
            raise ValueError(f"unknown method {self.method!r}")
        if self.basis_kind not in BASIS_KINDS:
            raise ValueError(f"unknown basis kind {self.basis_kind!r}")


def _f32(x: float) -> float:
    return float(np.float32(x))


def _layer_payload(adapter: Adapter, config: AdapterConfig, name: str) -> bytes:
    def bad(msg):
        return InconsistentConfigError(f"layer {name!r}: {msg}")

    if config.method == "lora":
        if not isinstance(adapter, LoraAdapter):
            raise bad(f"expected a LoraAdapter, got {type(adapter).__name__}")
        if adapter.rank != config.size:
            raise bad(f"rank {adapter.rank} != configured rank {config.size}")
        if _f32(adapter.alpha_lora) != _f32(config.alpha):
            raise bad(f"alpha {adapter.alpha_lora} != configured alpha {config.alpha}")
        return adapter.b.astype(F32).tobytes() + adapter.a.astype(F32).tobytes()

    expected = FourierAdapter if config.method == "fourier" else GeneralBasisAdapter
    if not isinstance(adapter, expected):
        raise bad(f"expected a {expected.__name__}, got {type(adapter).__name__}")
    if adapter.entries.n != config.size:
        raise bad(f"n {adapter.entries.n} != configured n {config.size}")
    if _f32(adapter.alpha) != _f32(config.alpha):
        raise bad(f"alpha {adapter.alpha} != configured alpha {config.alpha}")
    regenerated = sample_entries(config.seed, adapter.d1, adapter.d2, config.size, config.bias)
    if adapter.entries != regenerated:
        raise bad("entries are not the ones generated by the configured seed and bias")
    payload = adapter.coeffs.astype(F32).tobytes()
    if config.method == "general-basis":
        if adapter.basis_kind != config.basis_kind:
            raise bad(f"basis {adapter.basis_kind!r} != configured basis {config.basis_kind!r}")
        payload = bytes([BASIS_KINDS.index(adapter.basis_kind)]) + payload
    return payload


def encode(adapters: list[tuple[str, Adapter]], config: AdapterConfig) -> bytes:
    bias = config.bias
    parts = [
        HEADER.pack(
            MAGIC, VERSION, METHOD_CODES[config.method], config.alpha, config.seed,
            config.size, len(adapters), BIAS_CODES[bias.mode],
            bias.f_c if bias.mode == "bandpass" else 0.0,
            bias.bandwidth if bias.mode == "bandpass" else 0.0,
        )
    ]
    for name, adapter in adapters:
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise InconsistentConfigError(f"layer name longer than 65535 bytes: {name[:40]!r}...")
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(LAYER_DIMS.pack(adapter.d1, adapter.d2))
        parts.append(_layer_payload(adapter, config, name))
    return b"".join(parts)


def _atomic_write(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(adapters: list[tuple[str, Adapter]], config: AdapterConfig, path) -> int:
    """Write a checkpoint atomically; returns the number of bytes written."""
    data = encode(adapters, config)
    _atomic_write(path, data)
    return len(data)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedError(f"truncated checkpoint: need {n} bytes for {what} at offset {self.pos}, "
                                 f"only {len(self.data) - self.pos} left")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, st: struct.Struct, what: str):
        return st.unpack(self.take(st.size, what))

    def floats(self, count: int, what: str) -> np.ndarray:
        return np.frombuffer(self.take(4 * count, what), dtype=F32).astype(np.float64)


def decode(data: bytes) -> tuple[list[tuple[str, Adapter]], AdapterConfig]:
    r = _Reader(data)
    if len(data) >= 4 and data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    magic, version, method_code, alpha, seed, size, count, bias_code, f_c, bandwidth = r.unpack(HEADER, "header")
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported checkpoint version {version} (this reader handles {VERSION})")
    methods = {v: k for k, v in METHOD_CODES.items()}
    if method_code not in methods:
        raise CheckpointError(f"unknown method code {method_code}")
    method = methods[method_code]
    if bias_code == BIAS_CODES["none"]:
        bias = NO_BIAS
    elif bias_code == BIAS_CODES["bandpass"]:
        bias = BiasSpec.bandpass(f_c, bandwidth)
    else:
        raise CheckpointError(f"unknown bias mode code {bias_code}")
    if size < 1 and method == "lora":
        raise DimensionError("LoRA rank must be >= 1")

    adapters: list[tuple[str, Adapter]] = []
    basis_kind = "fourier"
    entry_cache: dict[tuple[int, int], EntryMatrix] = {}
    for i in range(count):
        (name_len,) = struct.unpack("<H", r.take(2, f"layer {i} name length"))
        name = r.take(name_len, f"layer {i} name").decode("utf-8")
        d1, d2 = r.unpack(LAYER_DIMS, f"layer {name!r} dims")
        if d1 < 1 or d2 < 1:
            raise DimensionError(f"layer {name!r} has invalid shape {d1}x{d2}")
        if method == "lora":
            b = r.floats(d1 * size, f"layer {name!r} B").reshape(d1, size)
            a = r.floats(size * d2, f"layer {name!r} A").reshape(size, d2)
            adapters.append((name, LoraAdapter(a, b, alpha)))
            continue
        if size > d1 * d2:
            raise DimensionError(f"layer {name!r}: n={size} exceeds {d1}x{d2} spectral cells")
        if method == "general-basis":
            (code,) = r.take(1, f"layer {name!r} basis kind")
            if code >= len(BASIS_KINDS):
                raise CheckpointError(f"unknown basis code {code}")
            basis_kind = BASIS_KINDS[code]
        coeffs = r.floats(size, f"layer {name!r} coefficients")
        if (d1, d2) not in entry_cache:
            entry_cache[(d1, d2)] = sample_entries(seed, d1, d2, size, bias)
        entries = entry_cache[(d1, d2)]
        if method == "fourier":
            adapters.append((name, FourierAdapter(entries, coeffs, alpha)))
        else:
            b1 = make_basis(basis_kind, d1, seed, 1)
            b2 = make_basis(basis_kind, d2, seed, 2)
            adapters.append((name, GeneralBasisAdapter(basis_kind, entries, coeffs, alpha, b1, b2)))
    if r.pos != len(data):
        raise CheckpointError(f"{len(data) - r.pos} trailing bytes after the last layer")
    return adapters, AdapterConfig(method, size, alpha, seed, bias, basis_kind)


def load(path) -> tuple[list[tuple[str, Adapter]], AdapterConfig]:
    return decode(Path(path).read_bytes())


def header_size(names: list[str]) -> int:
    """Fixed header plus per-layer name and shape fields (everything but payloads)."""
    return HEADER.size + sum(2 + len(n.encode("utf-8")) + LAYER_DIMS.size for n in names)


def payload_bytes(config: AdapterConfig, shapes: list[tuple[int, int]]) -> int:
    """Parameter payload bytes for layers of the given shapes."""
    if config.method == "lora":
        return sum(4 * config.size * (d1 + d2) for d1, d2 in shapes)
    extra = 1 if config.method == "general-basis" else 0
    return sum(4 * config.size + extra for _ in shapes)


def size_ratio(a: BudgetReport, b: BudgetReport) -> float:
    """Ratio of coefficient payload bytes, ``a / b``."""
    return a.bytes / b.bytes


def read_raw_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < RAW_HEADER.size:
        raise TruncatedError(f"{path}: missing the 16-byte dims header")
    rows, cols = RAW_HEADER.unpack_from(data)
    if rows < 1 or cols < 1:
        raise DimensionError(f"{path}: invalid shape {rows}x{cols}")
    expected = RAW_HEADER.size + 4 * rows * cols
    if len(data) != expected:
        raise TruncatedError(f"{path}: expected {expected} bytes for {rows}x{cols}, found {len(data)}")
    return np.frombuffer(data, dtype=F32, offset=RAW_HEADER.size).reshape(rows, cols).astype(np.float64)


def write_raw_matrix(path, m: np.ndarray) -> int:
    m = np.asarray(m)
    data = RAW_HEADER.pack(*m.shape) + m.astype(F32).tobytes()
    _atomic_write(path, data)
    return len(data)

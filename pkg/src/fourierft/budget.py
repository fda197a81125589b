"""Trainable-parameter and storage budgets.

LoRA adapting ``L`` square ``d x d`` layers at rank ``r`` trains ``2*d*L*r``
parameters; the spectral adapter trains ``n*L`` coefficients (``n*(2+L)`` if the
shared entry coordinates are counted as stored parameters).  Bytes assume
4-byte floats.
"""

from __future__ import annotations

from dataclasses import dataclass

BYTES_PER_PARAM = 4

# name -> (hidden width d, adapted layers L_t); query and value projections of every block
PRESETS: dict[str, tuple[int, int]] = {
    "roberta-base": (768, 24),
    "roberta-large": (1024, 48),
    "gpt2-medium": (1024, 48),
    "gpt2-large": (1280, 72),
    "llama2-7b": (4096, 64),
    "llama2-13b": (5120, 80),
    "vit-base": (768, 24),
    "vit-large": (1024, 48),
}


class UnknownPresetError(KeyError):
    pass


@dataclass(frozen=True)
class BudgetReport:
    method: str
    size: int
    d: int
    layers: int
    trainable_params: int
    preset: str | None = None

    @property
    def bytes(self) -> int:
        return BYTES_PER_PARAM * self.trainable_params

    @property
    def params_with_entries(self) -> int:
        """Coefficients plus the ``2n`` entry coordinates (fourier only)."""
        if self.method != "fourier":
            return self.trainable_params
        return self.size * (2 + self.layers)

    def describe(self) -> str:
        unit = "param" if self.trainable_params == 1 else "params"
        return f"{self.trainable_params} {unit}, {format_bytes(self.bytes)}"


def format_bytes(n: int) -> str:
    if n < 1024:
        return f"{n} B"
    if n < 1024**2:
        return f"{n / 1024:.2f} KiB"
    return f"{n / 1024**2:.2f} MiB"


def resolve(preset: str | None = None, d: int | None = None, layers: int | None = None) -> tuple[int, int]:
    if preset is not None:
        try:
            return PRESETS[preset]
        except KeyError:
            raise UnknownPresetError(f"unknown preset {preset!r}; known: {', '.join(PRESETS)}") from None
    if d is None or layers is None:
        raise ValueError("give a preset or both d and layers")
    if d < 1 or layers < 1:
        raise ValueError("d and layers must be >= 1")
    return d, layers


def budget(preset: str | None = None, *, d: int | None = None, layers: int | None = None,
           lora_r: int | None = None, fourier_n: int | None = None) -> BudgetReport:
    if (lora_r is None) == (fourier_n is None):
        raise ValueError("give exactly one of lora_r or fourier_n")
    d, layers = resolve(preset, d, layers)
    if lora_r is not None:
        if lora_r < 1:
            raise ValueError("lora rank must be >= 1")
        return BudgetReport("lora", lora_r, d, layers, 2 * d * layers * lora_r, preset)
    if fourier_n < 1:
        raise ValueError("n must be >= 1")
    return BudgetReport("fourier", fourier_n, d, layers, fourier_n * layers, preset)


# Reference figures: (preset, method, size, printed params, printed bytes, note).
# The printed byte columns mix unit conventions, so each is checked against the
# closest of several KB/MB scalings (see UNIT_SCALES).
REFERENCE_ROWS: list[tuple[str, str, int, str, str, str]] = [
    ("roberta-base", "lora", 4, "147K", "574KB", ""),
    ("roberta-base", "lora", 8, "295K", "1.13MB", ""),
    ("roberta-base", "fourier", 200, "4.8K", "18.8KB", ""),
    ("roberta-base", "fourier", 200, "24K", "94KB",
     "printed n=200 cannot give 24K (200*24 = 4,800); 24K is n=1000"),
    ("roberta-large", "lora", 4, "393K", "1.5MB", ""),
    ("roberta-large", "lora", 8, "786K", "3MB", ""),
    ("roberta-large", "fourier", 200, "9.6K", "36.5KB", ""),
    ("roberta-large", "fourier", 1000, "48K", "183KB", ""),
    ("gpt2-medium", "lora", 4, "350K", "1.34MB",
     "printed 350K disagrees with 2*1024*48*4 = 393,216"),
    ("gpt2-medium", "lora", 8, "786K", "3MB", ""),
    ("gpt2-medium", "fourier", 500, "24K", "94KB", ""),
    ("gpt2-medium", "fourier", 1000, "48K", "188KB", ""),
    ("gpt2-large", "lora", 4, "737K", "2.81MB", ""),
    ("gpt2-large", "lora", 8, "1.47M", "5.74MB", ""),
    ("gpt2-large", "fourier", 500, "36K", "141KB", ""),
    ("gpt2-large", "fourier", 1000, "72K", "282KB", ""),
    ("llama2-7b", "lora", 16, "8.39M", "32.8MB", ""),
    ("llama2-7b", "lora", 64, "33.5M", "131.1MB", ""),
    ("llama2-7b", "fourier", 1000, "64K", "250KB", ""),
    ("llama2-7b", "fourier", 2000, "128K", "500KB", ""),
    ("llama2-13b", "lora", 16, "13.1M", "51.2MB", ""),
    ("llama2-13b", "lora", 64, "52.4M", "204.8MB", ""),
    ("llama2-13b", "fourier", 1000, "80K", "312KB", ""),
    ("llama2-13b", "fourier", 2000, "160K", "625KB", ""),
    ("vit-base", "lora", 8, "295K", "1.13MB", ""),
    ("vit-base", "lora", 16, "590K", "2.25MB", ""),
    ("vit-base", "fourier", 3000, "72K", "281KB", ""),
    ("vit-base", "fourier", 10000, "239K", "934KB", ""),
    ("vit-large", "lora", 8, "786K", "2.93MB", ""),
    ("vit-large", "lora", 16, "1.57M", "6MB", ""),
    ("vit-large", "fourier", 3000, "144K", "563KB", ""),
    ("vit-large", "fourier", 10000, "480K", "1.83MB", ""),
]

UNIT_SCALES = {
    "KB": (1000, 1024, 1024**2 / 1000),
    "MB": (1000**2, 1024 * 1000, 1024**2),
}
SUFFIX = {"K": 10**3, "M": 10**6, "": 1}


def parse_count(text: str) -> float:
    text = text.strip()
    suffix = text[-1] if text[-1] in "KM" else ""
    return float(text[: len(text) - len(suffix)]) * SUFFIX[suffix]


def byte_candidates(text: str) -> list[float]:
    """Byte counts the printed figure could denote under each unit convention."""
    unit = text[-2:]
    value = float(text[:-2])
    return [value * s for s in UNIT_SCALES[unit]]


@dataclass(frozen=True)
class ReferenceCheck:
    report: BudgetReport
    printed_params: str
    printed_bytes: str
    params_rel_err: float
    bytes_rel_err: float
    note: str

    @property
    def matches(self) -> bool:
        return self.params_rel_err <= 0.01 and self.bytes_rel_err <= 0.01


def compare_reference(tolerance: float = 0.01) -> list[ReferenceCheck]:
    """Recompute every reference row; rows off by more than ``tolerance`` keep a note."""
    out = []
    for preset, method, size, p_txt, b_txt, note in REFERENCE_ROWS:
        kw = {"lora_r": size} if method == "lora" else {"fourier_n": size}
        rep = budget(preset, **kw)
        printed = parse_count(p_txt)
        p_err = abs(rep.trainable_params - printed) / printed
        b_err = min(abs(rep.bytes - c) / c for c in byte_candidates(b_txt))
        if (p_err > tolerance or b_err > tolerance) and not note:
            note = "differs from printed figure beyond rounding"
        out.append(ReferenceCheck(rep, p_txt, b_txt, p_err, b_err, note))
    return out

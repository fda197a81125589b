import pytest
from hypothesis import given
from hypothesis import strategies as st

from fourierft.budget import (
    PRESETS,
    UnknownPresetError,
    budget,
    byte_candidates,
    compare_reference,
    format_bytes,
    parse_count,
)


@pytest.mark.parametrize(
    "preset, kw, expected",
    [
        ("roberta-base", {"fourier_n": 1000}, 24_000),
        ("roberta-base", {"lora_r": 8}, 294_912),
        ("roberta-large", {"lora_r": 8}, 786_432),
        ("roberta-large", {"fourier_n": 1000}, 48_000),
        ("gpt2-medium", {"fourier_n": 500}, 24_000),
        ("gpt2-medium", {"fourier_n": 1000}, 48_000),
        ("gpt2-large", {"lora_r": 4}, 737_280),
        ("gpt2-large", {"fourier_n": 500}, 36_000),
        ("gpt2-large", {"fourier_n": 1000}, 72_000),
        ("llama2-7b", {"lora_r": 64}, 33_554_432),
        ("llama2-7b", {"fourier_n": 1000}, 64_000),
        ("llama2-13b", {"lora_r": 64}, 52_428_800),
        ("llama2-13b", {"fourier_n": 1000}, 80_000),
        ("vit-base", {"lora_r": 8}, 294_912),
        ("vit-base", {"fourier_n": 3000}, 72_000),
        ("vit-large", {"fourier_n": 3000}, 144_000),
        ("vit-large", {"lora_r": 16}, 1_572_864),
    ],
)
def test_preset_counts(preset, kw, expected):
    rep = budget(preset, **kw)
    assert rep.trainable_params == expected
    assert rep.bytes == 4 * expected


@given(st.integers(1, 10_000), st.integers(1, 200), st.integers(1, 128), st.integers(1, 100_000))
def test_formulas(d, layers, r, n):
    assert budget(d=d, layers=layers, lora_r=r).trainable_params == 2 * d * layers * r
    rep = budget(d=d, layers=layers, fourier_n=n)
    assert rep.trainable_params == n * layers
    assert rep.params_with_entries == n * (2 + layers)


def test_describe():
    assert budget("roberta-base", fourier_n=1000).describe() == "24000 params, 93.75 KiB"
    assert budget(d=1, layers=1, fourier_n=1).describe() == "1 param, 4 B"


def test_format_bytes():
    assert format_bytes(1023) == "1023 B"
    assert format_bytes(2048) == "2.00 KiB"
    assert format_bytes(3 * 1024**2) == "3.00 MiB"


def test_unknown_preset():
    with pytest.raises(UnknownPresetError, match="bert-tiny"):
        budget("bert-tiny", lora_r=4)


@pytest.mark.parametrize("kw", [{}, {"lora_r": 1, "fourier_n": 1}, {"lora_r": 0}, {"fourier_n": 0}])
def test_bad_arguments(kw):
    with pytest.raises(ValueError):
        budget("roberta-base", **kw)


def test_custom_needs_both_dims():
    with pytest.raises(ValueError):
        budget(d=768, fourier_n=10)


def test_parse_helpers():
    assert parse_count("4.8K") == 4800
    assert parse_count("33.5M") == 33_500_000
    assert byte_candidates("94KB") == [94_000, 94 * 1024, 94 * 1024**2 / 1000]


def test_presets_known():
    assert PRESETS["llama2-7b"] == (4096, 64)
    assert PRESETS["roberta-base"] == (768, 24)


def test_reference_rows():
    checks = compare_reference()
    assert len(checks) == 32
    mismatched = {(c.report.preset, c.report.method, c.report.size, c.printed_params) for c in checks if not c.matches}
    assert ("gpt2-medium", "lora", 4, "350K") in mismatched
    assert ("roberta-base", "fourier", 200, "24K") in mismatched
    for c in checks:
        if not c.matches:
            assert c.note

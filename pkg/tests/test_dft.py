import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fourierft import dft
from fourierft.dft import (
    EntryRangeError,
    brute_force_idft2,
    ifft,
    ifft2,
    ifft2_real,
    make_plan,
    sparse_idft_adjoint,
    sparse_idft_real,
    spectral_to_spatial,
    to_dense,
)
from fourierft.linalg import ShapeError, make_rng
from fourierft.sampling import sample_uniform


def rand_f(seed, d1, d2):
    return make_rng(seed).standard_normal((d1, d2))


def test_zero_spectrum():
    assert np.array_equal(ifft2_real(np.zeros((5, 7))), np.zeros((5, 7)))


@pytest.mark.parametrize("shape", [(1, 1), (3, 5), (8, 8), (37, 4)])
def test_dc_term(shape):
    f = np.zeros(shape)
    f[0, 0] = 2.5
    assert np.allclose(ifft2_real(f), 2.5 / (shape[0] * shape[1]), atol=1e-15)


def test_brute_force_small_cases():
    assert np.array_equal(brute_force_idft2(np.array([[3.0]])), [[3.0]])
    assert np.allclose(brute_force_idft2(np.array([[1.0, 0], [0, 0]])), 0.25, atol=1e-16)


def test_brute_force_matches_fft_4x4():
    f = rand_f(1, 4, 4)
    assert np.max(np.abs(brute_force_idft2(f) - ifft2_real(f))) < 1e-12


def test_brute_force_size_guard():
    with pytest.raises(ValueError):
        brute_force_idft2(np.zeros((1001, 1000)))


def test_random_12x9():
    f = rand_f(2, 12, 9)
    assert np.max(np.abs(ifft2_real(f) - brute_force_idft2(f))) < 1e-10


@pytest.mark.parametrize("n", [1, 2, 3, 5, 7, 12, 16, 31, 37, 53, 61, 64, 97, 100, 127, 768, 1000, 1024, 4099])
def test_1d_matches_numpy(n):
    rng = make_rng(n)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert np.max(np.abs(ifft(x) - np.fft.ifft(x))) < 1e-12 * max(1, np.sqrt(n))


def test_plan_strategies():
    assert make_plan(1024).strategy == "mixed-radix"
    assert make_plan(97).strategy == "bluestein"
    assert make_plan(768).strategy == "mixed-radix"


@pytest.mark.parametrize("shape", [(37, 53), (61, 2), (97, 5), (48, 48)])
def test_bluestein_and_mixed_2d_match_oracle(shape):
    f = rand_f(3, *shape)
    assert np.max(np.abs(ifft2_real(f) - brute_force_idft2(f))) < 1e-10


def test_complex_ifft2_matches_numpy():
    f = rand_f(6, 37, 24) + 1j * rand_f(7, 37, 24)
    assert np.max(np.abs(ifft2(f) - np.fft.ifft2(f))) < 1e-13


def test_parseval():
    f = rand_f(4, 20, 24) + 1j * rand_f(5, 20, 24)
    s = ifft2(f)
    assert np.isclose(np.sum(np.abs(s) ** 2), np.sum(np.abs(f) ** 2) / (20 * 24), rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 20), st.integers(1, 20), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, d1, d2, a, b):
    f, g = rand_f(seed, d1, d2), rand_f(seed + 1, d1, d2)
    lhs = ifft2_real(a * f + b * g)
    rhs = a * ifft2_real(f) + b * ifft2_real(g)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


@pytest.mark.parametrize("path", ["sparse", "dense"])
def test_full_size_paths_agree(path):
    e = sample_uniform(7, 768, 768, 300)
    c = make_rng(8).standard_normal(300)
    ref = sparse_idft_real(e, c, 768, 768) if path == "dense" else ifft2_real(to_dense(e, c, 768, 768))
    assert np.max(np.abs(spectral_to_spatial(e, c, 768, 768, path) - ref)) < 1e-9


def test_sparse_empty_and_dc():
    assert np.array_equal(sparse_idft_real(np.zeros((2, 0), int), [], 4, 6), np.zeros((4, 6)))
    out = sparse_idft_real(np.array([[0], [0]]), [1.0], 3, 3)
    assert np.allclose(out, 1 / 9, atol=1e-16)


def test_sparse_matches_dense_64():
    e = sample_uniform(0, 64, 64, 128)
    c = make_rng(1).standard_normal(128)
    assert np.max(np.abs(sparse_idft_real(e, c, 64, 64) - ifft2_real(to_dense(e, c, 64, 64)))) < 1e-10


def test_out_of_range_names_offender():
    with pytest.raises(EntryRangeError, match="entry 1 has row index 5"):
        sparse_idft_real(np.array([[0, 5], [0, 0]]), [1.0, 1.0], 4, 4)
    with pytest.raises(EntryRangeError, match="col index -1"):
        to_dense(np.array([[0], [-1]]), [1.0], 4, 4)


def test_adjoint_zero_upstream():
    e = sample_uniform(0, 8, 8, 10)
    assert np.array_equal(sparse_idft_adjoint(e, np.zeros((8, 8))), np.zeros(10))


def test_adjoint_shape_mismatch():
    e = sample_uniform(0, 8, 8, 10)
    with pytest.raises(ShapeError):
        sparse_idft_adjoint(e, np.zeros((8, 9)))


def test_adjoint_identity_many():
    rng = make_rng(11)
    for i in range(100):
        d1, d2 = int(rng.integers(1, 40)), int(rng.integers(1, 40))
        n = int(rng.integers(0, d1 * d2 + 1))
        e = sample_uniform(i, d1, d2, n)
        c, g = rng.standard_normal(n), rng.standard_normal((d1, d2))
        lhs = np.sum(sparse_idft_real(e, c, d1, d2) * g)
        rhs = np.dot(c, sparse_idft_adjoint(e, g))
        assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), abs(rhs), 1e-300) + 1e-15


def test_adjoint_finite_difference():
    e = sample_uniform(3, 12, 10, 20)
    c = make_rng(3).standard_normal(20)
    h = 1e-6

    def loss(v):
        return 0.5 * np.sum(sparse_idft_real(e, v, 12, 10) ** 2)

    g = sparse_idft_adjoint(e, sparse_idft_real(e, c, 12, 10))
    num = np.array([(loss(c + h * np.eye(20)[l]) - loss(c - h * np.eye(20)[l])) / (2 * h) for l in range(20)])
    assert np.max(np.abs(g - num)) / np.max(np.abs(g)) < 1e-6


def test_duplicate_entries_accumulate():
    e = np.array([[1, 1], [2, 2]])
    assert np.allclose(sparse_idft_real(e, [1.0, 2.0], 5, 5), sparse_idft_real(e[:, :1], [3.0], 5, 5))


def test_prefer_sparse_threshold():
    assert dft.prefer_sparse(10, 768, 768)
    assert not dft.prefer_sparse(100000, 768, 768)

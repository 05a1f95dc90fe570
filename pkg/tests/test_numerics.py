import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dpst import numerics as nm
from oracles import bisect, j0_series, random_complex, singular_values_oracle, sinc_direct


@pytest.mark.parametrize("x, expected", [(0.0, 1.0), (1.0, 0.0), (0.5, 2 / math.pi)])
def test_sinc_values(x, expected):
    assert nm.sinc(x) == pytest.approx(expected, abs=1e-12)


def test_sinc_integer_zeros_are_exact():
    k = np.arange(-50, 51)
    out = nm.sinc(k.astype(float))
    assert out[50] == 1.0
    assert np.all(out[k != 0] == 0.0)


@given(st.floats(-40, 40, allow_nan=False))
def test_sinc_matches_direct_formula(x):
    assert nm.sinc(x) == pytest.approx(sinc_direct(x), abs=1e-12)


def test_bessel_j0_at_zero():
    assert nm.bessel_j0(0.0) == 1.0


def test_bessel_j0_first_root_against_series_bisection():
    root = bisect(j0_series, 2.0, 3.0)
    assert root == pytest.approx(2.404826, abs=1e-6)
    assert abs(nm.bessel_j0(root)) < 1e-6


def test_bessel_j0_at_pi():
    assert nm.bessel_j0(math.pi) == pytest.approx(-0.304242, abs=1e-6)
    assert nm.bessel_j0(math.pi) == pytest.approx(j0_series(math.pi), abs=1e-12)


@given(st.floats(0, 20))
def test_bessel_j0_matches_series(x):
    assert nm.bessel_j0(x) == pytest.approx(j0_series(x), abs=1e-9)


def test_svd_simple_cases():
    np.testing.assert_allclose(nm.svd(np.eye(2)).sigma, [1, 1])
    np.testing.assert_allclose(nm.svd(np.diag([3.0, 1.0])).sigma, [3, 1])


def test_svd_matches_jacobi_oracle(rng):
    a = random_complex(rng, (3, 3))
    np.testing.assert_allclose(nm.svd(a).sigma, singular_values_oracle(a), atol=1e-8)


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_svd_reconstructs_and_sorts(m, n, seed):
    a = random_complex(np.random.default_rng(seed), (m, n))
    dec = nm.svd(a)
    err = np.linalg.norm(dec.reconstruct() - a) / np.linalg.norm(a)
    assert err < 1e-10
    assert np.all(np.diff(dec.sigma) <= 0)


def test_svd_rejects_non_finite():
    with pytest.raises(ValueError):
        nm.svd(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_condition_number_cases():
    assert nm.condition_number(np.eye(3)) == 1.0
    assert nm.condition_number(np.diag([10.0, 1.0])) == pytest.approx(10.0)
    assert nm.condition_number(np.ones((2, 2))) == math.inf
    assert nm.condition_number(np.zeros((2, 2))) == math.inf


@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-3, 1e3))
def test_condition_number_scale_and_unitary_invariant(seed, c):
    r = np.random.default_rng(seed)
    a = random_complex(r, (3, 3))
    q, _ = np.linalg.qr(random_complex(r, (3, 3)))
    k = nm.condition_number(a)
    assert k >= 1.0
    assert nm.condition_number(c * a) == pytest.approx(k, rel=1e-8)
    assert nm.condition_number(q @ a) == pytest.approx(k, rel=1e-8)


def test_frobenius_norm_cases():
    assert nm.frobenius_norm(np.eye(2)) == pytest.approx(1.414214, abs=1e-6)
    assert nm.frobenius_norm(np.zeros((2, 2))) == 0.0
    assert nm.frobenius_norm(np.array([[3.0, 4.0], [0.0, 0.0]])) == 5.0


def test_numerical_rank():
    assert nm.numerical_rank(np.ones((2, 2))) == 1
    assert nm.numerical_rank(np.eye(4)) == 4
    assert nm.numerical_rank(np.zeros((3, 2))) == 0


def test_as_matrix_rejects_bad_shapes():
    with pytest.raises(ValueError):
        nm.as_matrix(np.zeros(3))
    with pytest.raises(ValueError):
        nm.as_matrix(np.zeros((0, 2)))


@given(st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_psd_sqrt_squares_back(n, seed):
    b = random_complex(np.random.default_rng(seed), (n, n))
    r = b @ b.conj().T
    s = nm.psd_sqrt(r)
    np.testing.assert_allclose(s @ s, r, atol=1e-9 * max(1.0, np.abs(r).max()))
    np.testing.assert_allclose(s, s.conj().T, atol=1e-12 * max(1.0, np.abs(s).max()))


def test_psd_sqrt_rejects_indefinite():
    with pytest.raises(ValueError):
        nm.psd_sqrt(np.diag([1.0, -0.1]))


def test_psd_sqrt_real_input_gives_real_output():
    assert np.isrealobj(nm.psd_sqrt(np.array([[2.0, 1.0], [1.0, 2.0]])))

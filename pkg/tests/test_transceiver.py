import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dpst import transceiver as tr
from dpst.channel import ChannelParams, assemble_channel
from dpst.config import DelaySearchConfig
from dpst.delay_opt import optimize_delays, reference_ensemble
from dpst.numerics import svd
from dpst.shaping import ShapingConfig, virtual_channel
from oracles import random_complex

seeds = st.integers(0, 2 ** 32 - 1)


def test_precoder_identity():
    w = tr.precoder(np.eye(2), 1.0)
    np.testing.assert_allclose(np.abs(w), np.eye(2) / np.sqrt(2), atol=1e-12)


def test_precoder_diagonal_channel():
    w = tr.precoder(np.diag([3.0, 1.0]), 2.0)
    np.testing.assert_allclose(np.abs(w), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(w.conj().T @ w, np.eye(2), atol=1e-12)


@given(seeds, st.integers(1, 4), st.floats(1e-3, 1e3))
def test_precoder_power(seed, n, p):
    w = tr.precoder(random_complex(np.random.default_rng(seed), (n, n)), p)
    assert np.linalg.norm(w) ** 2 == pytest.approx(p, rel=1e-9)


def test_precoder_rejects_zero_channel():
    with pytest.raises(ValueError):
        tr.precoder(np.zeros((2, 2)), 1.0)


def test_mmse_cases():
    np.testing.assert_allclose(tr.mmse_filter(np.eye(2), None, 1.0), 0.5 * np.eye(2), atol=1e-15)
    np.testing.assert_allclose(tr.mmse_filter(np.diag([2.0, 1.0]), np.zeros((2, 2)), 1e-9),
                               np.diag([0.5, 1.0]), atol=1e-8)
    np.testing.assert_array_equal(tr.mmse_filter(np.zeros((2, 2)), None, 1.0), np.zeros((2, 2)))


@given(seeds)
def test_mmse_zero_noise_is_pseudo_inverse(seed):
    h = random_complex(np.random.default_rng(seed), (3, 2))
    f = tr.mmse_filter(h, None, 1e-9)
    pinv = np.linalg.pinv(h)
    np.testing.assert_allclose(f, pinv, atol=1e-5 * np.abs(pinv).max())


def test_stream_sinr_diagonal():
    h = np.diag([10.0, 10.0])
    f = tr.mmse_filter(h, None, 1.0)
    # f = 10/101 per stream: |f h|^2 / (N0 f^2) = 100
    np.testing.assert_allclose(np.diag(f), 10 / 101, rtol=1e-12)
    np.testing.assert_allclose(tr.stream_sinr(f, h, None, 1.0), 100.0, atol=1e-6)


def test_stream_sinr_zero_channel():
    h = np.zeros((2, 2))
    f = tr.mmse_filter(h, None, 1.0)
    np.testing.assert_array_equal(tr.stream_sinr(f, h, None, 1.0), [0.0, 0.0])


@given(seeds)
def test_stream_sinr_interference_limit(seed):
    r = np.random.default_rng(seed)
    h = random_complex(r, (2, 2))
    s2 = 1e6
    phi = s2 * np.eye(2)
    f = tr.mmse_filter(h, phi, 1.0)
    got = tr.stream_sinr(f, h, phi, 1.0)
    limit = np.abs(np.diag(f @ h)) ** 2 / (s2 * np.sum(np.abs(f) ** 2, axis=1))
    np.testing.assert_allclose(got, limit, rtol=0.01)


def test_detect_zero_symbols(rng):
    h = random_complex(rng, (8, 2))
    u = np.linalg.qr(h)[0]
    assert not np.any(tr.detect(np.eye(2), u, h, np.zeros(2)))


def test_detect_dimension_check():
    with pytest.raises(ValueError):
        tr.detect(np.eye(2), np.eye(4)[:, :2], np.ones((4, 3)), np.ones(2))


def _qpsk(rng, n):
    bits = rng.integers(0, 2, size=(2, n))
    return ((2 * bits[0] - 1) + 1j * (2 * bits[1] - 1)) / np.sqrt(2)


def _slice(x):
    return (np.sign(x.real) + 1j * np.sign(x.imag)) / np.sqrt(2)


def test_end_to_end_zero_noise_detection():
    hs = reference_ensemble(2, 50, 2024)
    cfg = ShapingConfig()
    tau = optimize_delays(hs, 2, DelaySearchConfig(ensemble_size=50), cfg).delays
    rng = np.random.default_rng(99)
    h = assemble_channel(ChannelParams(distance_m=8.0), rng).h
    vc = virtual_channel(h, cfg.with_delays(tau))
    n0 = 1e-12
    st_ = tr.link(vc.h_n, None, n0, 1.0)
    # streams ride on the composite channel's right singular vectors
    tx = svd(vc.h_os_symbol).v[:, :2] @ st_.w
    errors = 0
    for _ in range(500):
        s = _qpsk(rng, 2)
        est = tr.detect(st_.f, vc.u_os_trunc, vc.h_os_symbol, s, tx, vc.scale)
        errors += int(np.sum(_slice(est) != s))
    assert errors == 0


def test_rank_one_los_second_stream_unrecoverable():
    h = np.ones((2, 2), dtype=complex)
    vc = virtual_channel(h, ShapingConfig(delays=(0.0, 0.0)), full=False)
    state = tr.link(vc.h_n, None, 1e-3, 1.0)
    with np.errstate(divide="ignore"):
        assert 10 * np.log10(state.sinr[1]) < 0.0


def test_link_state_invariants(rng):
    h = random_complex(rng, (2, 2))
    b = random_complex(rng, (2, 2))
    phi = b @ b.conj().T
    state = tr.link(h, phi, 0.1, 3.0)
    np.testing.assert_allclose(state.phi, state.phi.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(state.phi).min() >= -1e-10
    assert np.linalg.norm(state.w) ** 2 == pytest.approx(3.0, rel=1e-9)


def test_throughput_cases():
    assert tr.throughput([1.0], 1.0) == 1.0
    assert tr.throughput([3.0, 3.0], 1e7) == pytest.approx(4e7)
    assert tr.throughput([], 1e7) == 0.0
    assert tr.throughput([3.0, 3.0], 1.0, se_cap=1.5) == 3.0


def test_effective_sinr():
    assert tr.effective_sinr([]) == 0.0
    assert tr.effective_sinr([3.0, 3.0]) == pytest.approx(3.0)
    # capacity-equivalent: 2 log2(1 + s_eff) = log2(2) + log2(16)
    assert tr.effective_sinr([1.0, 15.0]) == pytest.approx(np.sqrt(32) - 1)

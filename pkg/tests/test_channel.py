import numpy as np
import pytest
from scipy import stats

from rlblas.channel import (CHANNEL, NOISE, ChannelInstance, RngStream, draw_channel,
                            draw_noise, make_received, snr_to_sigma2)


def test_channel_moments():
    h = draw_channel(1000, 1000, RngStream(1, (0, CHANNEL)))
    assert abs(np.mean(np.abs(h) ** 2) - 1) < 0.01
    assert abs(h.real.mean()) < 0.01 and abs(h.imag.mean()) < 0.01
    # circular symmetry: equal real/imag power, no pseudo-covariance
    assert abs(np.var(h.real) - 0.5) < 0.01 and abs(np.var(h.imag) - 0.5) < 0.01
    assert abs(np.mean(h * h)) < 0.01


def test_stream_determinism():
    s = RngStream(42, (3, CHANNEL))
    assert np.array_equal(draw_channel(4, 3, s), draw_channel(4, 3, s))
    assert not np.array_equal(draw_channel(4, 3, s), draw_channel(4, 3, RngStream(42, (4, CHANNEL))))
    assert not np.array_equal(draw_channel(4, 3, s), draw_channel(4, 3, RngStream(43, (3, CHANNEL))))
    assert s.child(1, 2) == RngStream(42, (3, CHANNEL, 1, 2))


@pytest.mark.parametrize("snr_db, K, expected", [(10, 20, 2.0), (0, 1, 1.0), (20, 100, 1.0)])
def test_snr_to_sigma2(snr_db, K, expected):
    assert snr_to_sigma2(snr_db, K, 1.0) == pytest.approx(expected, rel=1e-12)


def test_snr_to_sigma2_scales_with_energy():
    assert snr_to_sigma2(10, 20, 2.0) == pytest.approx(4.0)


def test_noise_norm_statistics():
    N, sigma2, trials = 8, 0.7, 10 ** 4
    gen = np.random.default_rng(11)
    e = np.array([np.sum(np.abs(draw_noise(N, sigma2, gen)) ** 2) for _ in range(trials)])
    assert abs(e.mean() - N * sigma2) <= 3 * sigma2 * np.sqrt(N / trials)
    assert e.var() == pytest.approx(N * sigma2 ** 2, rel=0.10)
    # 2 ||n||^2 / sigma2 is chi-square with 2N degrees of freedom
    p = stats.kstest(2 * e / sigma2, stats.chi2(2 * N).cdf).pvalue
    assert p > 0.01


def test_zero_noise():
    assert np.array_equal(draw_noise(5, 0.0, RngStream(0, (0, NOISE))), np.zeros(5))


def test_make_received():
    assert make_received(np.array([[2]]), np.array([1 + 1j]), np.zeros(1)).tolist() == [2 + 2j]
    gen = np.random.default_rng(3)
    H = draw_channel(6, 4, gen)
    n = draw_noise(6, 0.3, gen)
    assert np.array_equal(make_received(H, np.zeros(4), n), n)
    x = gen.standard_normal(4) + 1j
    assert np.array_equal(make_received(H, x, n), H @ x + n)
    with pytest.raises(ValueError):
        make_received(H, np.zeros(3), n)


def test_channel_instance_invariants():
    inst = ChannelInstance(np.ones((4, 2)), 0.5)
    assert (inst.N, inst.K) == (4, 2)
    with pytest.raises(ValueError):
        ChannelInstance(np.ones((2, 4)), 0.5)
    with pytest.raises(ValueError):
        ChannelInstance(np.ones((4, 2)), -1.0)
    with pytest.raises(ValueError):
        ChannelInstance(np.full((4, 2), np.nan), 1.0)

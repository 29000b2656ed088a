import numpy as np
import pytest

from blindofdm.channel import (
    ChannelPdp,
    ChannelRealization,
    NoiseModel,
    StreamingChannel,
    complex_gaussian,
    draw_channel,
    is_degenerate,
    received_stream_to_freq_blocks,
    transmit_stream,
)
from blindofdm.constellation import constellation_from_name, random_symbols, split_constellation
from blindofdm.errors import ConfigurationError
from blindofdm.ofdm import OfdmConfig, modulate_frame
from blindofdm.precoding import build_precoder

from conftest import crandn


def direct_convolution(s, h):
    """Independent O(T L) loop: r[t] = sum_l h[l] s[t-l], zero before t = 0."""
    r = np.zeros(len(s), complex)
    for t in range(len(s)):
        for l in range(len(h)):
            if t - l >= 0:
                r[t] += h[l] * s[t - l]
    return r


def test_pdp_variances():
    np.testing.assert_allclose(ChannelPdp("exponential", 2).variances(), [1, 0.90484, 0.81873], atol=5e-6)
    np.testing.assert_array_equal(ChannelPdp("uniform", 2).variances(), [1, 1, 1])
    with pytest.raises(ConfigurationError):
        ChannelPdp("rayleigh", 2)


@pytest.mark.parametrize("kind", ["exponential", "uniform"])
def test_tap_sample_variances(kind):
    pdp = ChannelPdp(kind, 2)
    rng = np.random.default_rng(5)
    taps = np.array([draw_channel(pdp, rng, 64)[0].h for _ in range(100_000)])
    np.testing.assert_allclose(np.mean(np.abs(taps) ** 2, axis=0), pdp.variances(), rtol=0.02)
    assert abs(np.mean(taps[:, 0])) < 0.01


def test_same_seed_same_channel():
    a, _ = draw_channel(ChannelPdp(), np.random.default_rng(3))
    b, _ = draw_channel(ChannelPdp(), np.random.default_rng(3))
    np.testing.assert_array_equal(a.h, b.h)


def test_realization_keeps_response_in_sync(rng):
    ch = ChannelRealization(crandn(rng, 3), 64)
    np.testing.assert_allclose(ch.H, np.fft.fft(ch.h, 64))
    with pytest.raises(ValueError):
        ch.h[0] = 0


def test_degenerate_detection():
    assert is_degenerate(ChannelRealization([1, 1], 8).H)  # null at the Nyquist bin
    assert not is_degenerate(ChannelRealization([1, 0.5], 8).H)


def test_redraw_on_null():
    class NullFirst:
        calls = 0

        def standard_normal(self, shape):
            NullFirst.calls += 1
            if NullFirst.calls <= 2:
                return np.ones(shape)
            return np.array([1.0, 0.2])

    pdp = ChannelPdp("uniform", 1)
    ch, redraws = draw_channel(pdp, NullFirst(), 8)
    assert redraws == 1 and not is_degenerate(ch.H)


def test_complex_gaussian_moments(rng):
    z = complex_gaussian(rng, 200_000, 2.0)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(2.0, rel=0.02)
    assert abs(np.mean(z ** 2)) < 0.02  # circular


def test_noise_model():
    assert NoiseModel(30).sigma_n2 == pytest.approx(1e-3)
    assert NoiseModel(0, signal_energy=2).sigma_n2 == pytest.approx(2.0)
    assert NoiseModel(np.inf).sigma_n2 == 0.0


def test_noise_calibration(rng):
    s2 = NoiseModel(10).sigma_n2
    r = transmit_stream(np.zeros(200_000), [1.0], NoiseModel(10), rng)
    assert np.var(r) == pytest.approx(s2, rel=0.02)


def test_noisy_link_needs_rng():
    with pytest.raises(ValueError):
        transmit_stream(np.zeros(4), [1.0], NoiseModel(10))


def test_identity_and_impulse(rng):
    s = crandn(rng, 50)
    np.testing.assert_array_equal(transmit_stream(s, [1.0], NoiseModel(np.inf)), s)
    h = crandn(rng, 3)
    imp = np.zeros(10, complex)
    imp[0] = 1
    np.testing.assert_allclose(transmit_stream(imp, h, NoiseModel(np.inf))[:3], h)
    np.testing.assert_allclose(transmit_stream(imp, h, NoiseModel(np.inf))[3:], 0)


def test_stream_matches_direct_convolution(rng):
    s = crandn(rng, 4, 66)
    h = np.array([0.6, 0.8j])
    r = transmit_stream(s, h, NoiseModel(np.inf))
    assert np.max(np.abs(r - direct_convolution(s.ravel(), h))) < 1e-12


def test_blockwise_state_equals_concatenation(rng):
    h = crandn(rng, 3)
    s = crandn(rng, 500)
    ch = StreamingChannel(h)
    pieces = [ch(part) for part in np.array_split(s, 7)]
    assert np.max(np.abs(np.concatenate(pieces) - direct_convolution(s, h))) < 1e-12


def _run(cfg, h, n_blocks, rng, p=0.5):
    part = split_constellation(constellation_from_name(cfg.modulation), cfg.splitting)
    W = build_precoder(cfg.n_subcarriers, p)
    x = W.precode(random_symbols(rng, n_blocks, cfg.n_subcarriers, part))
    r = transmit_stream(modulate_frame(x, cfg), h, NoiseModel(np.inf))
    return x, received_stream_to_freq_blocks(r, cfg)


def test_frequency_model_residual(rng):
    cfg = OfdmConfig()
    h = crandn(rng, 3)
    x, y = _run(cfg, h, 50, rng)
    assert np.max(np.abs(y - np.fft.fft(h, 64) * x)) < 1e-9


def test_short_prefix_breaks_the_model(rng):
    cfg = OfdmConfig(cp_len=1)
    h = crandn(rng, 3)
    x, y = _run(cfg, h, 50, rng)
    assert np.max(np.abs(y - np.fft.fft(h, 64) * x)) > 1e-9


def test_trivial_link(rng):
    cfg = OfdmConfig(n_subcarriers=16)
    x, y = _run(cfg, [1.0], 10, rng, p=0.0)
    np.testing.assert_allclose(y, x, atol=1e-13)


def test_partial_block_rejected():
    with pytest.raises(ValueError):
        received_stream_to_freq_blocks(np.zeros(100), OfdmConfig())


def test_transmitted_energy_with_precoding(rng):
    """E||x||^2 = N s2 + ||W mu||^2 when the symbols have a nonzero mean."""
    N = 16
    part = split_constellation(constellation_from_name("qam16"), "quadrant")
    W = build_precoder(N, 0.5)
    x = W.precode(random_symbols(rng, 40_000, N, part))
    expected = N * part.centered_variance + np.sum(np.abs(W.precode(part.subcarrier_means(N))) ** 2)
    assert np.mean(np.sum(np.abs(x) ** 2, axis=1)) == pytest.approx(expected, rel=0.01)
    d = random_symbols(rng, 40_000, N, split_constellation(constellation_from_name("qam16"), "none"))
    assert np.mean(np.sum(np.abs(W.precode(d)) ** 2, axis=1)) == pytest.approx(N, rel=0.01)


def test_precoder_eigenstructure(rng):
    N, p = 16, 0.5
    W = build_precoder(N, p)
    one = np.ones(N)
    np.testing.assert_allclose(W.precode(one), np.sqrt(1 + (N - 1) * p) * one)
    v = crandn(rng, N)
    v -= v.mean()
    np.testing.assert_allclose(W.precode(v), np.sqrt(1 - p) * v, atol=1e-13)

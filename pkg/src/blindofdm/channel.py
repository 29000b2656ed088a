"""Random FIR channels, streaming convolution and AWGN."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .kernels import fir_stream
from .ofdm import OfdmConfig, channel_freq_response, demodulate_frame

PDP_KINDS = ("exponential", "uniform")


@dataclass(frozen=True)
class ChannelPdp:
    kind: str = "exponential"
    order: int = 2

    def __post_init__(self):
        if self.kind not in PDP_KINDS:
            raise ConfigurationError(f"unknown power-delay profile {self.kind!r}")
        if self.order < 0:
            raise ConfigurationError("channel order must be non-negative")

    def variances(self) -> np.ndarray:
        lags = np.arange(self.order + 1)
        if self.kind == "exponential":
            return np.exp(-lags / 10.0)
        return np.ones(self.order + 1)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    h: np.ndarray
    n_subcarriers: int
    H: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.complex128)
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        H = channel_freq_response(h, self.n_subcarriers)
        H.setflags(write=False)
        object.__setattr__(self, "H", H)

    @property
    def order(self) -> int:
        return self.h.size - 1


def complex_gaussian(rng: np.random.Generator, shape, variance=1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with ``E|z|^2 = variance``."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def is_degenerate(H: np.ndarray, rel_floor: float = 1e-6) -> bool:
    """True if some bin sits (numerically) in a spectral null."""
    rms = np.linalg.norm(H) / np.sqrt(H.size)
    return bool(np.min(np.abs(H)) < rel_floor * rms)


def draw_channel(pdp: ChannelPdp, rng: np.random.Generator, n_subcarriers: int = 64,
                 max_redraws: int = 100):
    """Draw independent Gaussian taps per ``pdp``; redraw if a bin is a null.

    Returns ``(realization, redraws)``.
    """
    var = pdp.variances()
    for redraws in range(max_redraws + 1):
        ch = ChannelRealization(complex_gaussian(rng, var.shape, var), n_subcarriers)
        if not is_degenerate(ch.H):
            return ch, redraws
    raise RuntimeError("could not draw a non-degenerate channel")


@dataclass(frozen=True)
class NoiseModel:
    """AWGN calibrated against the average transmitted sample energy.

    ``snr_db = inf`` gives a noiseless link.
    """

    snr_db: float
    signal_energy: float = 1.0

    @property
    def sigma_n2(self) -> float:
        if np.isposinf(self.snr_db):
            return 0.0
        return self.signal_energy / 10.0 ** (self.snr_db / 10.0)


class StreamingChannel:
    """FIR channel whose memory carries over between successive calls."""

    def __init__(self, h):
        self.h = np.asarray(h, dtype=np.complex128)
        self.state = np.zeros(self.h.size - 1, dtype=np.complex128)

    def __call__(self, samples) -> np.ndarray:
        y, self.state = fir_stream(np.ravel(samples), self.h, self.state)
        return y


def transmit_stream(blocks, h, noise: NoiseModel, rng: np.random.Generator | None = None):
    """Send contiguous time blocks through ``h`` and add noise.

    ``r[t] = sum_l h[l] s[t - l] + n[t]`` over the concatenated stream, with
    zero samples before ``t = 0``.
    """
    s = np.ascontiguousarray(blocks, dtype=np.complex128).ravel()
    r = StreamingChannel(h)(s)
    if noise.sigma_n2 > 0:
        if rng is None:
            raise ValueError("a random generator is required for a noisy link")
        r = r + complex_gaussian(rng, r.shape, noise.sigma_n2)
    return r


def received_stream_to_freq_blocks(r, cfg: OfdmConfig):
    r = np.asarray(r, dtype=np.complex128)
    if r.size % cfg.block_len:
        raise ValueError(
            f"stream of {r.size} samples is not a whole number of {cfg.block_len}-sample blocks"
        )
    return demodulate_frame(r.reshape(-1, cfg.block_len), cfg)

"""OFDM modulation and demodulation with a cyclic prefix.

Both transforms are unitary, so a unit-energy constellation gives unit
energy per time-domain sample and white noise keeps its variance per bin.
The channel frequency response uses the plain (non-unitary) DFT of the
zero-padded taps; with that pairing ``y[k] = H[k] * x[k]`` holds exactly.

Frames are arrays whose last axis is the subcarrier (or sample) axis, so a
stack of blocks with shape ``(M, N)`` is processed in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constellation import MODULATIONS, SPLIT_MODES
from .errors import ConfigurationError


@dataclass(frozen=True)
class OfdmConfig:
    n_subcarriers: int = 64
    channel_order: int = 2
    cp_len: Optional[int] = None
    precoding_p: float = 0.5
    modulation: str = "qam16"
    splitting: str = "none"

    def __post_init__(self):
        if self.cp_len is None:
            object.__setattr__(self, "cp_len", self.channel_order)
        n, L, P = self.n_subcarriers, self.channel_order, self.cp_len
        if n < 1 or n & (n - 1):
            raise ConfigurationError(f"n_subcarriers must be a power of two, got {n}")
        if L < 0 or P < 0:
            raise ConfigurationError("channel_order and cp_len must be non-negative")
        if P > n:
            raise ConfigurationError(f"cp_len {P} exceeds n_subcarriers {n}")
        if n <= 2 * (L + 1):
            raise ConfigurationError("need n_subcarriers > 2 * (channel_order + 1)")
        if not 0.0 <= self.precoding_p < 1.0:
            raise ConfigurationError(f"precoding_p must lie in [0, 1), got {self.precoding_p}")
        if self.modulation not in MODULATIONS:
            raise ConfigurationError(f"unknown modulation {self.modulation!r}")
        if self.splitting not in SPLIT_MODES:
            raise ConfigurationError(f"unknown splitting {self.splitting!r}")

    @property
    def block_len(self) -> int:
        return self.n_subcarriers + self.cp_len

    def check_cp(self):
        """Raise unless the prefix covers the channel memory."""
        if self.cp_len < self.channel_order:
            raise ConfigurationError(
                f"cp_len {self.cp_len} shorter than channel order {self.channel_order}"
            )


def _check_len(v, n, what="vector"):
    if n is not None and v.shape[-1] != n:
        raise ValueError(f"{what} has length {v.shape[-1]}, expected {n}")


def unitary_idft(x, n=None):
    x = np.asarray(x, dtype=np.complex128)
    _check_len(x, n)
    return np.fft.ifft(x, axis=-1, norm="ortho")


def unitary_dft(u, n=None):
    u = np.asarray(u, dtype=np.complex128)
    _check_len(u, n)
    return np.fft.fft(u, axis=-1, norm="ortho")


def add_cp(body, cp_len: int):
    body = np.asarray(body)
    if cp_len > body.shape[-1]:
        raise ValueError(f"cp_len {cp_len} longer than block {body.shape[-1]}")
    if cp_len == 0:
        return body.copy()
    return np.concatenate([body[..., -cp_len:], body], axis=-1)


def remove_cp(block, cp_len: int):
    block = np.asarray(block)
    return block[..., cp_len:].copy()


def modulate_frame(x, cfg: OfdmConfig):
    """Precoded frame(s) ``x`` -> time block(s) with prefix, length ``N + P``."""
    return add_cp(unitary_idft(x, cfg.n_subcarriers), cfg.cp_len)


def demodulate_frame(received, cfg: OfdmConfig):
    """Received block(s) of length ``N + P`` -> frequency-domain ``y``."""
    received = np.asarray(received, dtype=np.complex128)
    _check_len(received, cfg.block_len, "received block")
    return unitary_dft(remove_cp(received, cfg.cp_len))


def channel_freq_response(h, n: int):
    """``H[k] = sum_l h[l] exp(-2j pi k l / n)``."""
    h = np.asarray(h, dtype=np.complex128)
    if h.size > n:
        raise ValueError(f"{h.size} taps do not fit in {n} bins")
    return np.fft.fft(h, n)

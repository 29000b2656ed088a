"""Second-order-statistics channel estimators.

* :func:`subspace_estimate` works on the covariance of composite
  time-domain windows (two consecutive received OFDM symbols minus the
  first ``L`` samples).  The cyclic prefix makes the windows live in a
  ``2N``-dimensional signal subspace of a ``2N + L`` dimensional space;
  the ``L`` noise-subspace vectors are orthogonal to the channel's
  convolution matrix, which pins the taps down up to a complex scalar.
* :func:`precoding_estimate` works on the frequency-domain covariance.
  The precoder makes ``C[k, l] = s2 * p * H[k] conj(H[l])`` off the
  diagonal, a rank-one matrix that yields ``H`` up to a common phase.

Covariances are always centered: with constellation splitting each
subcarrier's symbol has a non-zero mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EstimatorFailure
from .ofdm import OfdmConfig, channel_freq_response
from .precoding import PrecoderMatrix

AMBIGUITIES = ("complex_scalar", "phase_only", "resolved")


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    """Sample mean and centered covariance ``(1/M) sum (v - m)(v - m)^H``."""

    count: int
    mean: np.ndarray
    matrix: np.ndarray

    @property
    def dimension(self) -> int:
        return self.mean.size

    @property
    def second_moment_diag(self) -> np.ndarray:
        """``E|v_k|^2`` (uncentered) per component."""
        return self.matrix.diagonal().real + np.abs(self.mean) ** 2


class CovarianceAccumulator:
    """Streaming centered covariance; batches merge exactly (Chan et al.)."""

    def __init__(self, dimension: int):
        self.dimension = dimension
        self.count = 0
        self._mean = np.zeros(dimension, dtype=np.complex128)
        self._scatter = np.zeros((dimension, dimension), dtype=np.complex128)

    def update(self, vectors) -> "CovarianceAccumulator":
        v = np.atleast_2d(np.asarray(vectors, dtype=np.complex128))
        if v.shape[1] != self.dimension:
            raise ValueError(f"vectors have length {v.shape[1]}, expected {self.dimension}")
        m = v.shape[0]
        if m == 0:
            return self
        b_mean = v.mean(axis=0)
        dv = v - b_mean
        b_scatter = dv.T @ dv.conj()
        n = self.count
        delta = b_mean - self._mean
        total = n + m
        self._scatter += b_scatter + (n * m / total) * np.outer(delta, delta.conj())
        self._mean += delta * (m / total)
        self.count = total
        return self

    def finalize(self) -> CovarianceEstimate:
        if self.count == 0:
            raise EstimatorFailure("no vectors accumulated")
        c = self._scatter / self.count
        c = 0.5 * (c + c.conj().T)
        return CovarianceEstimate(self.count, self._mean.copy(), c)


def sample_covariance(vectors) -> CovarianceEstimate:
    v = np.atleast_2d(np.asarray(vectors, dtype=np.complex128))
    return CovarianceAccumulator(v.shape[1]).update(v).finalize()


@dataclass(eq=False)
class ChannelEstimate:
    H_hat: np.ndarray
    ambiguity: str
    h_hat: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ambiguity not in AMBIGUITIES:
            raise ValueError(f"unknown ambiguity {self.ambiguity!r}")


# ---------------------------------------------------------------- subspace

def composite_blocks(r, cfg: OfdmConfig) -> np.ndarray:
    """Overlapping two-symbol windows with the first ``L`` samples dropped.

    ``M`` received blocks give ``M - 1`` vectors of length ``2N + L``.
    """
    N, L, P = cfg.n_subcarriers, cfg.channel_order, cfg.cp_len
    if P != L:
        raise ValueError("composite windows need cp_len == channel_order")
    r = np.asarray(r, dtype=np.complex128)
    if r.size % cfg.block_len:
        raise ValueError("stream is not a whole number of blocks")
    blocks = r.reshape(-1, cfg.block_len)
    if blocks.shape[0] < 2:
        raise ValueError("need at least two received blocks")
    return np.concatenate([blocks[:-1, L:], blocks[1:]], axis=1)


def _cp_rows(cfg: OfdmConfig):
    """For each of the 2N body samples: stream row of the body copy and of
    the prefix copy (-1 when the sample is not repeated in the prefix)."""
    N, L = cfg.n_subcarriers, cfg.channel_order
    j = np.arange(2 * N)
    blk, i = np.divmod(j, N)
    body = blk * (N + L) + L + i
    prefix = np.where(i >= N - L, blk * (N + L) + i - (N - L), -1)
    return body, prefix


def cp_insertion_matrix(cfg: OfdmConfig) -> np.ndarray:
    """``T``: two IFFT bodies (2N) -> two prefixed blocks (2(N + L))."""
    N, L = cfg.n_subcarriers, cfg.channel_order
    T = np.zeros((2 * (N + L), 2 * N))
    body, prefix = _cp_rows(cfg)
    cols = np.arange(2 * N)
    T[body, cols] = 1
    has = prefix >= 0
    T[prefix[has], cols[has]] = 1
    return T


def build_conv_matrix(h, cfg: OfdmConfig) -> np.ndarray:
    """Composite-window channel matrix of shape ``(2N + L, 2N)``."""
    h = np.asarray(h, dtype=np.complex128)
    N, L = cfg.n_subcarriers, cfg.channel_order
    if h.size != L + 1 or cfg.cp_len != L:
        raise ValueError("taps/prefix do not match the configured channel order")
    rows = 2 * N + L
    Ch = np.zeros((rows, 2 * (N + L)), dtype=np.complex128)
    for m in range(rows):
        Ch[m, m:m + L + 1] = h[::-1]
    return Ch @ cp_insertion_matrix(cfg)


def _noise_constraint(g, cfg: OfdmConfig) -> np.ndarray:
    """``A`` with ``g^H H(h) = h^T A`` for a length-(2N + L) vector ``g``."""
    N, L = cfg.n_subcarriers, cfg.channel_order
    n_cols = 2 * (N + L)
    c = np.arange(n_cols)
    G = np.zeros((L + 1, n_cols), dtype=np.complex128)
    gc = g.conj()
    for l in range(L + 1):
        idx = c - L + l
        ok = (idx >= 0) & (idx < g.size)
        G[l, ok] = gc[idx[ok]]
    body, prefix = _cp_rows(cfg)
    A = G[:, body]
    has = prefix >= 0
    A[:, has] += G[:, prefix[has]]
    return A


def poe_threshold(cfg: OfdmConfig) -> int:
    """Composite-window count needed for a full-rank signal subspace."""
    return 2 * cfg.n_subcarriers


def subspace_estimate(cov: CovarianceEstimate, cfg: OfdmConfig,
                      enforce_poe: bool = False) -> ChannelEstimate:
    """Blind noise-subspace estimate of the taps, up to a complex scalar.

    Returns unit-norm taps.  Below the persistence-of-excitation threshold
    the sample covariance cannot span the signal subspace; the estimate is
    still returned (flagged in ``diagnostics["poe_satisfied"]``) unless
    ``enforce_poe`` is set, in which case :class:`EstimatorFailure` is
    raised.
    """
    N, L = cfg.n_subcarriers, cfg.channel_order
    dim = 2 * N + L
    if cov.dimension != dim:
        raise ValueError(f"covariance dimension {cov.dimension} != {dim}")
    poe_ok = cov.count >= poe_threshold(cfg)
    if enforce_poe and not poe_ok:
        raise EstimatorFailure(
            f"{cov.count} composite windows < {poe_threshold(cfg)} needed"
        )
    if not np.all(np.isfinite(cov.matrix)):
        raise EstimatorFailure("non-finite covariance")

    evals, evecs = np.linalg.eigh(cov.matrix)
    Q = np.zeros((L + 1, L + 1), dtype=np.complex128)
    for i in range(L):
        A = _noise_constraint(evecs[:, i], cfg)
        Q += A @ A.conj().T
    # ||h^T A||^2 = h^H conj(A A^H) h
    q_vals, q_vecs = np.linalg.eigh(Q.conj())
    h_hat = q_vecs[:, 0]
    return ChannelEstimate(
        H_hat=channel_freq_response(h_hat, N),
        ambiguity="complex_scalar",
        h_hat=h_hat,
        diagnostics={
            "q_min_eig": float(q_vals[0]),
            "noise_eigs": evals[:L].copy(),
            "poe_satisfied": poe_ok,
        },
    )


def estimate_noise_variance(cov: CovarianceEstimate, cfg: OfdmConfig) -> float:
    """Mean of the ``L`` smallest eigenvalues of the composite covariance."""
    L = cfg.channel_order
    evals = np.linalg.eigvalsh(cov.matrix)
    return float(max(evals[:max(L, 1)].mean(), 0.0))


# ---------------------------------------------------------------- precoding

def tap_basis(n: int, channel_order: int) -> np.ndarray:
    """``F_L`` with ``H = F_L h``: the first ``L + 1`` non-unitary DFT columns."""
    k = np.arange(n)[:, None]
    l = np.arange(channel_order + 1)[None, :]
    return np.exp(-2j * np.pi * k * l / n)


def precoding_estimate(cov: CovarianceEstimate, W: PrecoderMatrix, sigma_n2: float,
                       sigma_c2: float, channel_order: int | None = None) -> ChannelEstimate:
    """Channel response up to a common phase from the precoded-frame covariance.

    ``G`` holds ``C[k, l] / (s2 p)`` off the diagonal and the noise-corrected
    received power ``(C[k, k] - sigma_n2) / s2`` on it, so ``G ~ H H^H``.

    With ``channel_order`` given, all ``N^2`` correlations are averaged onto
    the ``(L + 1) x (L + 1)`` tap-domain matrix ``F_L^H G F_L / N^2``; its
    principal eigenvector gives the shape of ``H`` and the total received
    power gives its norm.  Without it, ``H_hat = sqrt(lambda_1) v_1`` from
    ``G`` itself.

    The phase of the result is referenced so that ``H_hat[0]`` is real and
    positive; the true common phase is not identifiable here.
    """
    if W.p <= 0:
        raise EstimatorFailure("precoding estimator needs p > 0")
    if cov.dimension != W.n:
        raise ValueError("covariance and precoder sizes differ")
    n = W.n
    C = cov.matrix
    power = np.maximum(C.diagonal().real - sigma_n2, 0.0) / sigma_c2
    G = C / (sigma_c2 * W.p)
    np.fill_diagonal(G, power)

    if channel_order is None:
        evals, evecs = np.linalg.eigh(G)
        H_hat = np.sqrt(max(evals[-1], 0.0)) * evecs[:, -1]
        h_hat = None
        diagnostics = {"principal_eig": float(evals[-1]), "second_eig": float(evals[-2])}
    else:
        F = tap_basis(n, channel_order)
        R = F.conj().T @ G @ F / n ** 2
        evals, evecs = np.linalg.eigh(0.5 * (R + R.conj().T))
        h_hat = evecs[:, -1]
        shape = F @ h_hat
        scale = np.sqrt(power.sum() / np.sum(np.abs(shape) ** 2))
        h_hat = h_hat * scale
        H_hat = shape * scale
        diagnostics = {"principal_eig": float(evals[-1]),
                       "second_eig": float(evals[-2]) if evals.size > 1 else 0.0}
    if abs(H_hat[0]) > 0:
        rot = np.exp(-1j * np.angle(H_hat[0]))
        H_hat = H_hat * rot
        if h_hat is not None:
            h_hat = h_hat * rot
    return ChannelEstimate(H_hat=H_hat, ambiguity="phase_only", h_hat=h_hat,
                           diagnostics=diagnostics)


def estimate_bin_magnitudes(cov: CovarianceEstimate, W: PrecoderMatrix, mu,
                            sigma_n2: float, sigma_c2: float) -> np.ndarray:
    """Per-bin ``|H_k|`` from uncentered received power.

    ``E|y_k|^2 = |H_k|^2 (s2 + |(W mu)_k|^2) + sigma_n2`` where ``mu`` is the
    per-subcarrier symbol mean (zeros when splitting is off).
    """
    wmu = W.precode(np.asarray(mu, dtype=np.complex128))
    power = cov.second_moment_diag
    return np.sqrt(np.maximum(power - sigma_n2, 0.0) / (sigma_c2 + np.abs(wmu) ** 2))


# ---------------------------------------------------------------- scoring

def oracle_align_scalar(H_hat, H_true):
    """Least-squares complex scalar ``alpha`` minimizing ``||alpha H_hat - H||``."""
    H_hat = np.asarray(H_hat)
    energy = np.vdot(H_hat, H_hat).real
    if energy == 0:
        raise ValueError("cannot align a zero estimate")
    alpha = np.vdot(H_hat, H_true) / energy
    return alpha * H_hat, complex(alpha)


def oracle_align_phase(H_hat, H_true):
    """Unit-modulus rotation ``exp(j theta)`` minimizing ``||e^{j theta} H_hat - H||``."""
    H_hat = np.asarray(H_hat)
    inner = np.vdot(H_hat, H_true)
    if np.vdot(H_hat, H_hat).real == 0:
        raise ValueError("cannot align a zero estimate")
    theta = float(np.angle(inner))
    return np.exp(1j * theta) * H_hat, theta


def nmse(H_hat, H_true) -> float:
    H_true = np.asarray(H_true)
    return float(np.sum(np.abs(np.asarray(H_hat) - H_true) ** 2) / np.sum(np.abs(H_true) ** 2))


# ---------------------------------------------------------------- exact statistics

def exact_freq_covariance(H, W: PrecoderMatrix, sigma_c2: float, sigma_n2: float,
                          mu=None) -> CovarianceEstimate:
    """Analytic mean and covariance of ``y = diag(H) W d + n``."""
    H = np.asarray(H, dtype=np.complex128)
    C = sigma_c2 * (H[:, None] * W.correlation() * H.conj()[None, :])
    C = C + sigma_n2 * np.eye(H.size)
    mean = np.zeros(H.size, complex) if mu is None else H * W.precode(mu)
    return CovarianceEstimate(np.iinfo(np.int64).max, mean, C)


def exact_composite_covariance(h, cfg: OfdmConfig, W: PrecoderMatrix, sigma_c2: float,
                               sigma_n2: float, mu=None) -> CovarianceEstimate:
    """Analytic mean and covariance of the composite windows."""
    N = cfg.n_subcarriers
    Hmat = build_conv_matrix(h, cfg)
    F = np.fft.fft(np.eye(N), axis=0, norm="ortho")
    body_cov = sigma_c2 * (F.conj().T @ W.correlation() @ F)
    s_cov = np.zeros((2 * N, 2 * N), dtype=np.complex128)
    s_cov[:N, :N] = body_cov
    s_cov[N:, N:] = body_cov
    C = Hmat @ s_cov @ Hmat.conj().T + sigma_n2 * np.eye(Hmat.shape[0])
    if mu is None:
        mean = np.zeros(Hmat.shape[0], complex)
    else:
        body_mean = np.fft.ifft(W.precode(mu), norm="ortho")
        mean = Hmat @ np.concatenate([body_mean, body_mean])
    return CovarianceEstimate(np.iinfo(np.int64).max, mean, C)

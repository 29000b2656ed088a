"""Completely blind estimation: first approximation + phase resolution.

The transmitter assigns constellation regions to subcarriers by position,
so every equalized symbol's phase should sit near a known sector center.
The common phase offset left by a second-order estimator is read off as
the circular mean of the residuals against those centers.  Because the
receiver knows which region each subcarrier uses, the offset is
identifiable over the full circle rather than modulo the constellation's
rotational symmetry.  An optional decision-directed stage then refines
every bin with region-constrained hard decisions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellation import RegionPartition, hard_decide_in_region
from .errors import ConfigurationError, EstimatorFailure
from .estimators import (
    ChannelEstimate,
    CovarianceEstimate,
    estimate_bin_magnitudes,
    precoding_estimate,
    subspace_estimate,
)
from .ofdm import OfdmConfig
from .precoding import PrecoderMatrix


@dataclass(frozen=True)
class MpdConfig:
    first_approx: str = "subspace"
    max_iters: int = 10
    phase_tol: float = 1e-4
    equalization_floor: float = 1e-3
    refinement: bool = True
    amplitude: str = "global"

    def __post_init__(self):
        if self.amplitude not in ("global", "per_bin"):
            raise ConfigurationError(f"unknown amplitude mode {self.amplitude!r}")
        if self.first_approx not in ("subspace", "precoding"):
            raise ConfigurationError(f"unknown first approximation {self.first_approx!r}")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")
        if self.equalization_floor <= 0:
            raise ConfigurationError("equalization_floor must be positive")


def wrap(phase):
    """Wrap to (-pi, pi]."""
    return -((-np.asarray(phase) + np.pi) % (2 * np.pi) - np.pi)


def reliable_bins(H_hat, floor: float) -> np.ndarray:
    mag = np.abs(H_hat)
    top = mag.max()
    if top == 0:
        return np.zeros(mag.shape, bool)
    return mag >= floor * top


def equalize_and_deprecode(y, H_hat, W: PrecoderMatrix, floor: float = 1e-3):
    """One-tap equalization followed by inverse precoding.

    Returns ``(d_hat, reliable)`` where ``reliable`` flags the bins whose
    estimated gain clears ``floor * max|H_hat|``.  Unreliable bins are
    divided by ``floor * max|H_hat|`` instead of their own tiny gain.
    """
    H_hat = np.asarray(H_hat, dtype=np.complex128)
    reliable = reliable_bins(H_hat, floor)
    if not reliable.any():
        raise EstimatorFailure("every bin is below the equalization floor")
    safe = np.where(reliable, H_hat, floor * np.abs(H_hat).max())
    return W.deprecode(np.asarray(y) / safe), reliable


def estimate_common_phase(d_hat, partition: RegionPartition, reliable=None) -> float:
    """Common phase offset ``theta`` of ``d_hat ~ exp(-j theta) d``.

    With ``H_hat = H exp(j theta)``, the estimate that removes the offset is
    ``H_hat * exp(-j theta_hat)``.
    """
    d_hat = np.atleast_2d(d_hat)
    n = d_hat.shape[-1]
    centers = partition.centers[partition.subcarrier_regions(n)]
    mask = np.ones(n, bool) if reliable is None else np.asarray(reliable, bool)
    z = d_hat[:, mask]
    z = z[z != 0]  # a zero symbol carries no phase
    if z.size == 0:
        raise EstimatorFailure("no reliable symbols for phase estimation")
    phasors = np.broadcast_to(np.exp(-1j * centers[mask]), d_hat[:, mask].shape)
    phasors = phasors[d_hat[:, mask] != 0]
    resid = z / np.abs(z) * phasors
    return float(-np.angle(resid.sum()))


def _decision_phase(d_hat, decided, reliable) -> float:
    z = (d_hat * decided.conj())[:, reliable]
    return float(-np.angle(z.sum()))


def mpd_refine(y, H_hat, W: PrecoderMatrix, partition: RegionPartition,
               cfg: MpdConfig = MpdConfig()):
    """Region-constrained decision-directed refinement of ``H_hat``.

    Each pass equalizes, projects every symbol onto the nearest point of its
    subcarrier's region, re-precodes the decisions and re-fits every bin by
    least squares.  The pass ends by measuring the common phase of the new
    equalized symbols against the decisions; iteration stops once that
    increment falls below ``cfg.phase_tol``.  A sector-center phase
    correction is applied once before the first pass.

    Returns ``(H_final, iterations)``.
    """
    y = np.atleast_2d(np.asarray(y, dtype=np.complex128))
    n = y.shape[-1]
    regions = np.broadcast_to(partition.subcarrier_regions(n), y.shape)
    floor = cfg.equalization_floor

    d_hat, reliable = equalize_and_deprecode(y, H_hat, W, floor)
    H = np.asarray(H_hat, dtype=np.complex128) * np.exp(
        -1j * estimate_common_phase(d_hat, partition, reliable))

    best_H, best_cost = H, np.inf
    rising = 0
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        d_hat, _ = equalize_and_deprecode(y, H, W, floor)
        decided = hard_decide_in_region(d_hat, regions, partition)
        x_hat = W.precode(decided)
        energy = np.sum(np.abs(x_hat) ** 2, axis=0)
        H_ls = np.sum(y * x_hat.conj(), axis=0) / np.where(energy > 0, energy, 1.0)
        H_ls = np.where(energy > 0, H_ls, H)

        cost = float(np.mean(np.abs(y - H_ls * x_hat) ** 2))
        if cost < best_cost:
            best_cost, rising = cost, 0
        else:
            rising += 1
            if rising >= 2:
                break

        d_new, reliable = equalize_and_deprecode(y, H_ls, W, floor)
        step = _decision_phase(d_new, decided, reliable)
        H = H_ls * np.exp(-1j * step)
        if rising == 0:
            best_H = H
        if abs(step) < cfg.phase_tol:
            break
    return best_H, iterations


def hybrid_blind_estimate(y, composite_cov: CovarianceEstimate | None,
                          freq_cov: CovarianceEstimate, cfg: OfdmConfig,
                          W: PrecoderMatrix, partition: RegionPartition,
                          sigma_n2: float, mpd_cfg: MpdConfig = MpdConfig()) -> ChannelEstimate:
    """Fully blind channel estimate with no residual ambiguity.

    1. first approximation: unit-norm subspace estimate (or the precoding
       estimate when ``mpd_cfg.first_approx == "precoding"``);
    2. amplitude from the received per-bin power: one global scale, or
       (``mpd_cfg.amplitude == "per_bin"``) per-bin magnitudes with the
       first approximation's phases;
    3. common phase from the known region sectors;
    4. optional region-constrained decision-directed refinement.
    """
    if partition.mode == "none":
        raise ConfigurationError("the blind resolver needs constellation splitting")
    n = cfg.n_subcarriers
    sigma_c2 = partition.centered_variance
    mu = partition.subcarrier_means(n)
    diag = {}

    if mpd_cfg.first_approx == "subspace":
        if composite_cov is None:
            raise ValueError("subspace first approximation needs the composite covariance")
        first = subspace_estimate(composite_cov, cfg)
        mags = estimate_bin_magnitudes(freq_cov, W, mu, sigma_n2, sigma_c2)
        if mpd_cfg.amplitude == "per_bin":
            H_hat = mags * np.exp(1j * np.angle(first.H_hat))
        else:
            energy = np.sum(np.abs(first.H_hat) ** 2)
            H_hat = first.H_hat * np.sqrt(np.sum(mags ** 2) / energy)
        diag["poe_satisfied"] = first.diagnostics["poe_satisfied"]
    else:
        first = precoding_estimate(freq_cov, W, sigma_n2, sigma_c2, cfg.channel_order)
        H_hat = first.H_hat

    d_hat, reliable = equalize_and_deprecode(y, H_hat, W, mpd_cfg.equalization_floor)
    theta = estimate_common_phase(d_hat, partition, reliable)
    H_hat = H_hat * np.exp(-1j * theta)
    diag["theta_hat"] = theta
    diag["iterations"] = 0

    if mpd_cfg.refinement:
        H_hat, its = mpd_refine(y, H_hat, W, partition, mpd_cfg)
        diag["iterations"] = its
    return ChannelEstimate(H_hat=H_hat, ambiguity="resolved", diagnostics=diag)

"""Unit-energy constellations and generalized constellation splitting.

A constellation can be partitioned into phase-disjoint regions (two
half-planes or four quadrants).  Regions are then assigned to subcarriers
by position, ``region = k mod n_regions``, so the receiver knows which
phase sector every subcarrier's symbol lives in.

Region indices are 0-based throughout: with ``mode="quadrant"`` region 0
is the first quadrant (Re > 0, Im > 0) and numbering runs counter-clockwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, MappingError, SplittingError
from .kernels import region_decide

SPLIT_MODES = ("none", "half_i", "half_q", "quadrant")

_SUPPORTED = {
    "qam": (4, 16, 64),
    "psk": (2, 4, 8),
    "pam": (2, 4, 8),
}

#: config-key spelling -> (kind, order)
MODULATIONS = {
    f"{kind}{order}": (kind, order)
    for kind, orders in _SUPPORTED.items()
    for order in orders
}


def gray(i):
    """Binary-reflected Gray code of ``i`` (works on ints and int arrays)."""
    return i ^ (i >> 1)


def _pam_levels(m: int) -> np.ndarray:
    return np.arange(-(m - 1), m, 2, dtype=float)


@dataclass(frozen=True, eq=False)
class ConstellationSpec:
    """A finite symbol alphabet normalized to unit average energy.

    ``labels[i]`` is the Gray-coded bit pattern (as an integer with
    ``bits_per_symbol`` bits) of ``points[i]``.
    """

    kind: str
    order: int
    points: np.ndarray
    labels: np.ndarray

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @property
    def name(self) -> str:
        return f"{self.kind}{self.order}"

    def point_for_label(self, label: int) -> complex:
        idx = np.flatnonzero(self.labels == label)
        if idx.size != 1:
            raise MappingError(f"label {label} not in {self.name}")
        return complex(self.points[idx[0]])


def build_constellation(kind: str, order: int) -> ConstellationSpec:
    """Build a Gray-labelled, unit-energy QAM, PSK or PAM constellation.

    PSK constellations of order >= 4 are rotated by ``pi / order`` so that
    no point sits on an axis (QPSK lands on the odd multiples of pi/4);
    BPSK stays on the real axis.
    """
    kind = kind.lower()
    if kind not in _SUPPORTED or order not in _SUPPORTED[kind]:
        raise ConfigurationError(f"unsupported constellation {kind}{order}")

    if kind == "qam":
        m = int(round(np.sqrt(order)))
        bits_axis = int(np.log2(m))
        lv = _pam_levels(m)
        i_idx, q_idx = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        i_idx, q_idx = i_idx.ravel(), q_idx.ravel()
        points = lv[i_idx] + 1j * lv[q_idx]
        labels = (gray(i_idx) << bits_axis) | gray(q_idx)
    elif kind == "psk":
        idx = np.arange(order)
        offset = 0.0 if order == 2 else np.pi / order
        points = np.exp(1j * (2 * np.pi * idx / order + offset))
        labels = gray(idx)
    else:
        idx = np.arange(order)
        points = _pam_levels(order).astype(complex)
        labels = gray(idx)

    points = points / np.sqrt(np.mean(np.abs(points) ** 2))
    # Snap exact zeros so axis tests are not fooled by rounding.
    points = np.where(np.abs(points.real) < 1e-15, 1j * points.imag, points)
    points = np.where(np.abs(points.imag) < 1e-15, points.real + 0j, points)
    points.setflags(write=False)
    labels = np.asarray(labels, dtype=np.int64)
    labels.setflags(write=False)
    return ConstellationSpec(kind, order, points, labels)


def constellation_from_name(name: str) -> ConstellationSpec:
    try:
        kind, order = MODULATIONS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown modulation {name!r}; expected one of {sorted(MODULATIONS)}"
        ) from None
    return build_constellation(kind, order)


@dataclass(frozen=True, eq=False)
class RegionPartition:
    """Split of a constellation into equal-size, phase-disjoint regions.

    Attributes
    ----------
    mode : str
        One of ``none``, ``half_i``, ``half_q``, ``quadrant``.
    regions : tuple of ndarray
        Point indices (into ``constellation.points``) of each region, ordered
        so that position ``j`` carries in-region label ``gray(j)``.
    centroids : ndarray
        Complex mean of each region.
    centers : ndarray
        Phase of each centroid (the sector center used by the phase resolver).
    centered_variances : ndarray
        Mean ``|point - centroid|**2`` within each region.
    """

    constellation: ConstellationSpec
    mode: str
    regions: tuple
    centroids: np.ndarray
    centers: np.ndarray
    centered_variances: np.ndarray
    table: np.ndarray = field(repr=False)
    label_table: np.ndarray = field(repr=False)

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    @property
    def points_per_region(self) -> int:
        return len(self.regions[0])

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.points_per_region))

    @property
    def centered_variance(self) -> float:
        """Centered symbol variance, averaged over regions."""
        return float(np.mean(self.centered_variances))

    def region_of_subcarrier(self, k):
        """Region assigned to subcarrier ``k`` (scalar or array)."""
        return np.asarray(k) % self.n_regions if np.ndim(k) else int(k) % self.n_regions

    def subcarrier_regions(self, n_subcarriers: int) -> np.ndarray:
        return np.arange(n_subcarriers) % self.n_regions

    def subcarrier_means(self, n_subcarriers: int) -> np.ndarray:
        """Expected symbol on each subcarrier (the assigned region centroid)."""
        return self.centroids[self.subcarrier_regions(n_subcarriers)]

    def relabeled(self, order) -> "RegionPartition":
        """Same partition with regions renumbered: new region ``i`` is old ``order[i]``."""
        order = list(order)
        if sorted(order) != list(range(self.n_regions)):
            raise ConfigurationError(f"{order} is not a permutation of the regions")
        return _make_partition(
            self.constellation, self.mode, [self.regions[i] for i in order]
        )


def _make_partition(c: ConstellationSpec, mode: str, regions) -> RegionPartition:
    regions = tuple(np.asarray(r, dtype=np.int64) for r in regions)
    table = np.array([c.points[r] for r in regions])
    centroids = table.mean(axis=1)
    centroids = np.where(np.abs(centroids) < 1e-15, 0, centroids)
    centers = np.angle(centroids)
    variances = np.mean(np.abs(table - centroids[:, None]) ** 2, axis=1)
    label_table = np.empty(table.shape, dtype=np.int64)
    if mode == "none":
        label_table[0] = c.labels[regions[0]]
    else:
        label_table[:] = gray(np.arange(table.shape[1]))
    for arr in (table, centroids, centers, variances, label_table):
        arr.setflags(write=False)
    return RegionPartition(
        c, mode, regions, centroids, centers, variances, table, label_table
    )


def split_constellation(c: ConstellationSpec, mode: str = "quadrant") -> RegionPartition:
    """Partition ``c`` by the sign of its real part, imaginary part, or both.

    Raises
    ------
    SplittingError
        If a point lies on a split axis or the regions come out unequal.
    """
    if mode not in SPLIT_MODES:
        raise ConfigurationError(f"unknown splitting mode {mode!r}")
    pts = c.points
    if mode == "none":
        return _make_partition(c, mode, [np.arange(c.order)])

    re_zero = np.abs(pts.real) < 1e-12
    im_zero = np.abs(pts.imag) < 1e-12
    if mode in ("half_i", "quadrant") and re_zero.any():
        raise SplittingError(f"{c.name} has points on the imaginary axis")
    if mode in ("half_q", "quadrant") and im_zero.any():
        raise SplittingError(f"{c.name} has points on the real axis")

    if mode == "half_i":
        masks = [pts.real > 0, pts.real < 0]
    elif mode == "half_q":
        masks = [pts.imag > 0, pts.imag < 0]
    else:
        re, im = pts.real > 0, pts.imag > 0
        masks = [re & im, ~re & im, ~re & ~im, re & ~im]

    regions = []
    for mask in masks:
        idx = np.flatnonzero(mask)
        # lexicographic (real, imag) order fixes the in-region Gray labelling
        idx = idx[np.lexsort((pts[idx].imag, pts[idx].real))]
        regions.append(idx)
    sizes = {len(r) for r in regions}
    if len(sizes) != 1 or 0 in sizes:
        raise SplittingError(f"{c.name} does not split evenly in mode {mode!r}")
    if len(regions[0]) & (len(regions[0]) - 1):
        raise SplittingError("region size must be a power of two")
    return _make_partition(c, mode, regions)


def _bits_to_int(bits) -> int:
    value = 0
    for b in bits:
        if b not in (0, 1):
            raise MappingError(f"bit values must be 0 or 1, got {b!r}")
        value = (value << 1) | int(b)
    return value


def map_bits(bits, k: int, partition: RegionPartition) -> complex:
    """Map one subcarrier's bits to a symbol inside the region assigned to ``k``."""
    bits = list(np.asarray(bits, dtype=np.int64).ravel())
    if len(bits) != partition.bits_per_symbol:
        raise MappingError(
            f"expected {partition.bits_per_symbol} bits, got {len(bits)}"
        )
    label = _bits_to_int(bits)
    region = partition.region_of_subcarrier(k)
    pos = np.flatnonzero(partition.label_table[region] == label)[0]
    return complex(partition.table[region, pos])


def map_labels(labels: np.ndarray, partition: RegionPartition) -> np.ndarray:
    """Vectorized mapping of in-region labels, shape ``(..., N)``, to symbols.

    Subcarrier ``k`` is the last axis position.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.shape[-1]
    if labels.size and (labels.min() < 0 or labels.max() >= partition.points_per_region):
        raise MappingError("label out of range for region size")
    regions = np.broadcast_to(partition.subcarrier_regions(n), labels.shape)
    # invert label -> position within the region row
    inv = np.argsort(partition.label_table, axis=1)
    pos = inv[regions, labels]
    return partition.table[regions, pos]


def random_symbols(rng: np.random.Generator, n_blocks: int, n_subcarriers: int,
                   partition: RegionPartition) -> np.ndarray:
    """Uniformly random symbols for ``n_blocks`` frames under the partition."""
    labels = rng.integers(0, partition.points_per_region, size=(n_blocks, n_subcarriers))
    return map_labels(labels, partition)


def hard_decide_in_region(z, region, partition: RegionPartition):
    """Nearest constellation point to ``z`` among the points of ``region``.

    ``z`` and ``region`` broadcast against each other; a scalar ``z`` returns
    a Python complex.
    """
    z_arr = np.asarray(z, dtype=np.complex128)
    reg = np.broadcast_to(np.asarray(region, dtype=np.int64), z_arr.shape)
    out = region_decide(
        np.ascontiguousarray(z_arr).ravel(),
        np.ascontiguousarray(reg).ravel(),
        np.ascontiguousarray(partition.table, dtype=np.complex128),
    ).reshape(z_arr.shape)
    return complex(out) if out.ndim == 0 else out

"""Monte-Carlo driver: trials, sweeps, NMSE aggregation and CSV/plot output.

Every trial draws one static channel, transmits ``n_blocks`` OFDM symbols
(plus one leading warm-up symbol that only serves as the predecessor of
the first composite window) and scores each selected estimator:

* subspace  -> best complex-scalar alignment (stands in for pilots),
* precoding -> best phase-only alignment,
* hybrid    -> no correction at all.

Trial ``t`` of sweep point ``i`` draws all its randomness from
``SeedSequence([seed, i, t])``, so results do not depend on execution
order or on the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelPdp, NoiseModel, draw_channel, received_stream_to_freq_blocks, transmit_stream
from .constellation import constellation_from_name, random_symbols, split_constellation
from .errors import ConfigurationError, EstimatorFailure
from .estimators import (
    ChannelEstimate,
    composite_blocks,
    estimate_noise_variance,
    exact_composite_covariance,
    exact_freq_covariance,
    oracle_align_phase,
    oracle_align_scalar,
    precoding_estimate,
    sample_covariance,
    subspace_estimate,
)
from .mpd import MpdConfig, hybrid_blind_estimate
from .ofdm import OfdmConfig, modulate_frame
from .precoding import build_precoder

log = logging.getLogger(__name__)

ESTIMATORS = ("subspace", "precoding", "hybrid")
DEFAULT_GRIDS = {
    "blocks": (25, 50, 100, 250, 500, 1000),
    "snr": (0, 5, 10, 15, 20, 25, 30, 35),
}
CSV_HEADER = ("axis", "axis_value", "estimator", "nmse", "nmse_db", "stderr", "trials", "failures")


class ScoringError(RuntimeError):
    """An oracle correction stronger than the estimate's ambiguity allows."""


@dataclass(frozen=True)
class SimConfig:
    n_subcarriers: int = 64
    channel_order: int = 2
    cp_len: Optional[int] = None
    precoding_p: float = 0.5
    modulation: str = "qam16"
    splitting: str = "none"
    pdp: str = "exponential"
    snr_db: float = 30.0
    n_blocks: int = 1000
    n_trials: int = 250
    estimators: tuple = ("subspace", "precoding")
    noise_knowledge: str = "known"
    mse_normalization: str = "normalized"
    statistics: str = "sample"
    seed: int = 0
    mpd: MpdConfig = field(default_factory=MpdConfig)

    def __post_init__(self):
        if isinstance(self.estimators, str):
            object.__setattr__(self, "estimators", (self.estimators,))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        self.ofdm  # validates the PHY fields
        ChannelPdp(self.pdp, self.channel_order)
        if self.n_trials < 1:
            raise ConfigurationError("n_trials must be >= 1")
        if self.n_blocks < 2:
            raise ConfigurationError("n_blocks must be >= 2")
        if not self.estimators:
            raise ConfigurationError("select at least one estimator")
        for name in self.estimators:
            if name not in ESTIMATORS:
                raise ConfigurationError(f"unknown estimator {name!r}")
        if len(set(self.estimators)) != len(self.estimators):
            raise ConfigurationError("duplicate estimator")
        if "hybrid" in self.estimators and self.splitting == "none":
            raise ConfigurationError("the hybrid estimator needs splitting != 'none'")
        if self.noise_knowledge not in ("known", "estimated"):
            raise ConfigurationError(f"unknown noise_knowledge {self.noise_knowledge!r}")
        if self.mse_normalization not in ("normalized", "absolute"):
            raise ConfigurationError(f"unknown mse_normalization {self.mse_normalization!r}")
        if self.statistics not in ("sample", "exact"):
            raise ConfigurationError(f"unknown statistics mode {self.statistics!r}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.cp_len is not None and self.cp_len != self.channel_order and "subspace" in self.estimators:
            raise ConfigurationError("the subspace estimator needs cp_len == channel_order")

    @property
    def ofdm(self) -> OfdmConfig:
        return OfdmConfig(self.n_subcarriers, self.channel_order, self.cp_len,
                          self.precoding_p, self.modulation, self.splitting)


# ---------------------------------------------------------------- config files

_FLAT_KEYS = {f.name for f in fields(SimConfig)} - {"mpd", "estimators"} | {"estimator"}
_MPD_KEYS = {f.name for f in fields(MpdConfig)}


def _flatten(data: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name + "."))
        else:
            flat[name] = value
    return flat


def config_from_dict(data: dict, base: SimConfig = SimConfig()) -> SimConfig:
    """Build a config from flat keys (``mpd.max_iters``) or a nested ``mpd`` table.

    Unknown keys are rejected.
    """
    flat = _flatten(data)
    top, mpd = {}, {}
    for key, value in flat.items():
        if key.startswith("mpd."):
            sub = key[4:]
            if sub not in _MPD_KEYS:
                raise ConfigurationError(f"unknown config key {key!r}")
            mpd[sub] = value
        elif key in _FLAT_KEYS:
            top["estimators" if key == "estimator" else key] = value
        else:
            raise ConfigurationError(f"unknown config key {key!r}")
    if "refinement" in mpd and isinstance(mpd["refinement"], str):
        if mpd["refinement"] not in ("on", "off"):
            raise ConfigurationError("mpd.refinement must be on/off")
        mpd["refinement"] = mpd["refinement"] == "on"
    if "snr_db" in top:
        top["snr_db"] = float(top["snr_db"])
    try:
        return replace(base, mpd=replace(base.mpd, **mpd), **top)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def load_config(path) -> SimConfig:
    """Read a JSON config file."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    return config_from_dict(data)


def config_to_dict(cfg: SimConfig) -> dict:
    data = asdict(cfg)
    data["estimator"] = list(data.pop("estimators"))
    data["mpd"] = asdict(cfg.mpd)
    return data


# ---------------------------------------------------------------- scoring

_LEGAL = {
    "complex_scalar": ("none", "phase", "scalar"),
    "phase_only": ("none", "phase"),
    "resolved": ("none",),
}
_DEFAULT_CORRECTION = {"complex_scalar": "scalar", "phase_only": "phase", "resolved": "none"}


def oracle_correct(est: ChannelEstimate, H_true, correction: Optional[str] = None):
    """Apply the genie correction allowed by ``est.ambiguity``.

    Raises :class:`ScoringError` if ``correction`` is stronger than the
    estimate's ambiguity class permits.
    """
    correction = correction or _DEFAULT_CORRECTION[est.ambiguity]
    if correction not in _LEGAL[est.ambiguity]:
        raise ScoringError(f"{correction!r} correction not allowed for a {est.ambiguity} estimate")
    if correction == "scalar":
        return oracle_align_scalar(est.H_hat, H_true)[0]
    if correction == "phase":
        return oracle_align_phase(est.H_hat, H_true)[0]
    return est.H_hat


def score(H_corr, H_true, normalization: str = "normalized") -> float:
    err = float(np.sum(np.abs(np.asarray(H_corr) - H_true) ** 2))
    if normalization == "normalized":
        return err / float(np.sum(np.abs(H_true) ** 2))
    return err / H_true.size


# ---------------------------------------------------------------- trials

@dataclass
class TrialResult:
    nmse: dict
    failures: dict
    redraws: int = 0


def trial_seed(seed: int, point: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, point, trial])


def run_trial(cfg: SimConfig, seed_seq: np.random.SeedSequence) -> TrialResult:
    """Simulate one channel realization and score every selected estimator."""
    ofdm = cfg.ofdm
    ofdm.check_cp()
    n, L, M = cfg.n_subcarriers, cfg.channel_order, cfg.n_blocks
    ch_seq, data_seq, noise_seq = seed_seq.spawn(3)

    channel, redraws = draw_channel(ChannelPdp(cfg.pdp, L), np.random.default_rng(ch_seq), n)
    partition = split_constellation(constellation_from_name(cfg.modulation), cfg.splitting)
    sigma_c2 = partition.centered_variance
    mu = partition.subcarrier_means(n)
    d = random_symbols(np.random.default_rng(data_seq), M + 1, n, partition)
    noise = NoiseModel(cfg.snr_db)

    streams = {}

    def stream(p):
        # identical data and noise samples for every precoder
        if p not in streams:
            W = build_precoder(n, p)
            r = transmit_stream(modulate_frame(W.precode(d), ofdm), channel.h, noise,
                                np.random.default_rng(noise_seq))
            y = received_stream_to_freq_blocks(r, ofdm)[1:]
            if cfg.statistics == "exact":
                comp = exact_composite_covariance(channel.h, ofdm, W, sigma_c2, noise.sigma_n2, mu) \
                    if ofdm.cp_len == L else None
                freq = exact_freq_covariance(channel.H, W, sigma_c2, noise.sigma_n2, mu)
            else:
                comp = sample_covariance(composite_blocks(r, ofdm)) if ofdm.cp_len == L else None
                freq = sample_covariance(y)
            if cfg.noise_knowledge == "estimated" and comp is not None:
                s2 = estimate_noise_variance(comp, ofdm)
            else:
                s2 = noise.sigma_n2
            streams[p] = (W, y, comp, freq, s2)
        return streams[p]

    result = TrialResult({}, {}, redraws)
    for name in cfg.estimators:
        try:
            if name == "subspace":
                _, _, comp, _, _ = stream(0.0)
                est = subspace_estimate(comp, ofdm)
            elif name == "precoding":
                W, _, _, freq, s2 = stream(cfg.precoding_p)
                est = precoding_estimate(freq, W, s2, sigma_c2, L)
            else:
                W, y, comp, freq, s2 = stream(cfg.precoding_p)
                est = hybrid_blind_estimate(y, comp, freq, ofdm, W, partition, s2, cfg.mpd)
            value = score(oracle_correct(est, channel.H), channel.H, cfg.mse_normalization)
            if not math.isfinite(value):
                raise EstimatorFailure("non-finite error")
        except EstimatorFailure as exc:
            log.debug("trial failure (%s): %s", name, exc)
            result.failures[name] = str(exc)
            continue
        result.nmse[name] = value
    return result


# ---------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple

    def __post_init__(self):
        if self.axis not in DEFAULT_GRIDS:
            raise ConfigurationError(f"unknown sweep axis {self.axis!r}")
        values = tuple(self.values)
        if not values:
            raise ConfigurationError("sweep needs at least one value")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigurationError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", values)

    @classmethod
    def default(cls, axis: str) -> "SweepSpec":
        if axis not in DEFAULT_GRIDS:
            raise ConfigurationError(f"unknown sweep axis {axis!r}")
        return cls(axis, DEFAULT_GRIDS[axis])

    def apply(self, cfg: SimConfig, value) -> SimConfig:
        if self.axis == "blocks":
            return replace(cfg, n_blocks=int(value))
        return replace(cfg, snr_db=float(value))


@dataclass(frozen=True)
class SimPoint:
    axis: str
    axis_value: float
    estimator: str
    nmse: float
    stderr: float
    trials: int
    failures: int

    @property
    def nmse_db(self) -> float:
        return 10 * math.log10(self.nmse) if self.nmse > 0 else -math.inf


@dataclass
class SimReport:
    config: SimConfig
    sweep: SweepSpec
    points: list
    redraws: int = 0

    def get(self, estimator: str, axis_value) -> SimPoint:
        for pt in self.points:
            if pt.estimator == estimator and pt.axis_value == axis_value:
                return pt
        raise KeyError((estimator, axis_value))

    def curve(self, estimator: str) -> list:
        return [pt for pt in self.points if pt.estimator == estimator]


def _run_task(args):
    cfg, seed, point, trial = args
    return run_trial(cfg, trial_seed(seed, point, trial))


def aggregate(values: Sequence[float], n_trials: int, failures: int):
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        return math.nan, math.nan
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
    return mean, stderr


def run_sweep(cfg: SimConfig, sweep: SweepSpec, workers: int = 1) -> SimReport:
    """Run ``cfg.n_trials`` trials at every sweep value and aggregate."""
    if workers < 1:
        raise ConfigurationError("workers must be >= 1")
    point_cfgs = [sweep.apply(cfg, v) for v in sweep.values]
    tasks = [(pc, cfg.seed, i, t) for i, pc in enumerate(point_cfgs) for t in range(cfg.n_trials)]
    if workers == 1:
        results = [_run_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=chunk))

    points, redraws = [], 0
    for i, value in enumerate(sweep.values):
        block = results[i * cfg.n_trials:(i + 1) * cfg.n_trials]
        redraws += sum(r.redraws for r in block)
        for name in cfg.estimators:
            vals = [r.nmse[name] for r in block if name in r.nmse]
            failures = cfg.n_trials - len(vals)
            mean, stderr = aggregate(vals, cfg.n_trials, failures)
            points.append(SimPoint(sweep.axis, value, name, mean, stderr, cfg.n_trials, failures))
    if redraws:
        log.info("redrew %d degenerate channel realizations", redraws)
    return SimReport(cfg, sweep, points, redraws)


def run_point(cfg: SimConfig, workers: int = 1) -> SimReport:
    return run_sweep(cfg, SweepSpec("blocks", (cfg.n_blocks,)), workers)


# ---------------------------------------------------------------- outputs

def _fmt(x) -> str:
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("-inf" if x < 0 else "inf")
    if isinstance(x, float):
        return f"{x:.12e}"
    return str(x)


def report_csv(report: SimReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for pt in report.points:
        value = pt.axis_value
        value = int(value) if float(value).is_integer() else float(value)
        writer.writerow([pt.axis, value, pt.estimator, _fmt(pt.nmse), _fmt(pt.nmse_db),
                         _fmt(pt.stderr), pt.trials, pt.failures])
    return buf.getvalue()


_PLOT_TEMPLATE = """\
# gnuplot script; run as: gnuplot {script}
set datafile separator ","
set terminal pngcairo size 800,600
set output "{png}"
set logscale y
set format y "10^{{%L}}"
set grid
set xlabel "{xlabel}"
set ylabel "{ylabel}"
set key top right
plot {plots}
"""


def plot_script(report: SimReport, csv_name: str, png_name: str, script_name: str = "plot.gp") -> str:
    xlabel = "OFDM blocks M" if report.sweep.axis == "blocks" else "SNR (dB)"
    ylabel = "NMSE" if report.config.mse_normalization == "normalized" else "MSE"
    plots = ", \\\n     ".join(
        f'"{csv_name}" using (strcol(3) eq "{name}" ? $2 : 1/0):4 every ::1 '
        f'with linespoints title "{name}"'
        for name in report.config.estimators
    )
    return _PLOT_TEMPLATE.format(script=script_name, png=png_name, xlabel=xlabel,
                                 ylabel=ylabel, plots=plots)


def emit_outputs(report: SimReport, out_dir, stem: str = "results") -> tuple:
    """Write ``<stem>.csv`` and a gnuplot script ``<stem>.gp`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    gp_path = out / f"{stem}.gp"
    csv_path.write_text(report_csv(report))
    gp_path.write_text(plot_script(report, csv_path.name, f"{stem}.png", gp_path.name))
    return csv_path, gp_path

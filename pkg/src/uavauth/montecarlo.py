"""Seeded Monte Carlo trials, empirical FAR/SDR and ROC sweeps.

Every trial draws from its own generator keyed by (master_seed, hypothesis,
trial index), so results do not depend on how trials are split across threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .array_channel import ArrayGeometry, DomainError, TerminalProfile
from .detector import GcsKnowledge, statistic_from_parts
from .estimator import GridSpec, grid_peaks
from .signal_model import Hypothesis, NoiseParams, transmit_batch

CHUNK = 2048

_STREAM_TAG = {Hypothesis.H0: 0, Hypothesis.H1: 1}


@dataclass(frozen=True)
class TrialConfig:
    n_trials: int
    master_seed: int
    hypothesis: Hypothesis
    gcs: GcsKnowledge
    grid: GridSpec
    noise: NoiseParams
    geom: ArrayGeometry
    ma_profile: TerminalProfile | None = None
    psi: float = 0.0

    def __post_init__(self):
        if self.n_trials < 0:
            raise DomainError("n_trials must be nonnegative")
        if (self.ma_profile is not None) != (self.hypothesis is Hypothesis.H1):
            raise DomainError("ma_profile is required under H1 and forbidden under H0")
        if self.hypothesis is Hypothesis.H0 and self.psi != 0:
            raise DomainError("psi must be 0 under H0")

    @property
    def source(self) -> TerminalProfile:
        return self.ma_profile if self.ma_profile is not None else self.gcs.profile


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    std_err: float
    n: int

    @classmethod
    def from_count(cls, hits: int, n: int) -> "RateEstimate":
        if n == 0:
            return cls(float("nan"), float("nan"), 0)
        p = hits / n
        return cls(p, math.sqrt(p * (1.0 - p) / n), n)


def trial_rng(master_seed: int, hypothesis: Hypothesis, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=(_STREAM_TAG[hypothesis], index))
    return np.random.default_rng(ss)


def draw_packets(cfg: TrialConfig, start: int, stop: int) -> np.ndarray:
    rngs = [trial_rng(cfg.master_seed, cfg.hypothesis, i) for i in range(start, stop)]
    return transmit_batch(cfg.source, cfg.psi, cfg.noise, cfg.geom, rngs)


@dataclass
class TrialStats:
    """Per-trial detector outputs, in trial order."""

    statistic: np.ndarray
    peak: np.ndarray
    omega_hat: np.ndarray
    mu_hat: np.ndarray
    floored: np.ndarray


def _chunk_stats(cfg: TrialConfig, start: int, stop: int):
    y = draw_packets(cfg, start, stop)
    peak, om, mu, _ = grid_peaks(y, cfg.geom, cfg.grid)
    t, floored = statistic_from_parts(y, peak, cfg.gcs)
    return t, peak, om, mu, floored


def compute_statistics(cfg: TrialConfig, threads: int = 1) -> TrialStats:
    bounds = [(s, min(s + CHUNK, cfg.n_trials)) for s in range(0, cfg.n_trials, CHUNK)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: _chunk_stats(cfg, *b), bounds))
    else:
        parts = [_chunk_stats(cfg, *b) for b in bounds]
    if not parts:
        empty = np.empty(0)
        return TrialStats(empty, empty, empty, empty, np.empty(0, dtype=bool))
    cols = [np.concatenate(c) for c in zip(*parts)]
    return TrialStats(*cols)


def exceedance(stats: np.ndarray, threshold: float) -> RateEstimate:
    return RateEstimate.from_count(int(np.count_nonzero(stats > threshold)), stats.size)


def run_trials(cfg: TrialConfig, threshold: float, threads: int = 1) -> RateEstimate:
    """Fraction of trials whose statistic exceeds ``threshold``."""
    return exceedance(compute_statistics(cfg, threads).statistic, threshold)


def sweep_rates(stats: np.ndarray, thresholds) -> np.ndarray:
    """Exceedance rate of cached statistics at each threshold."""
    s = np.sort(stats)
    thr = np.asarray(thresholds, dtype=float)
    above = s.size - np.searchsorted(s, thr, side="right")
    return above / s.size if s.size else np.full(thr.shape, np.nan)


def roc_curve(
    cfg_h0: TrialConfig, cfg_h1: TrialConfig, thresholds, threads: int = 1
) -> list[tuple[float, float]]:
    """(FAR, SDR) at each threshold; statistics are computed once per trial."""
    if cfg_h0.geom != cfg_h1.geom or cfg_h0.noise != cfg_h1.noise:
        raise DomainError("H0 and H1 configs must share geometry and noise")
    thresholds = np.asarray(thresholds, dtype=float)
    if np.any(np.diff(thresholds) < 0):
        raise DomainError("thresholds must be ascending")
    far = sweep_rates(compute_statistics(cfg_h0, threads).statistic, thresholds)
    sdr = sweep_rates(compute_statistics(cfg_h1, threads).statistic, thresholds)
    return list(zip(far.tolist(), sdr.tolist()))

"""Simplified GLLR statistic and threshold decision."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .array_channel import (
    ArrayGeometry,
    DirectionCosines,
    LinkConstants,
    TerminalProfile,
    link_constants,
    normalized_steering,
)
from .estimator import EstimateSet, GridSpec, estimates_from_peak, grid_peaks
from .signal_model import Hypothesis, ReceivedVector

# log-argument floor, relative to sigma^2
LOG_FLOOR_REL = 1e-6


@dataclass(frozen=True)
class GcsKnowledge:
    """What the UAV knows a priori about the legitimate ground station."""

    profile: TerminalProfile
    consts: LinkConstants
    a0_bar: np.ndarray
    sigma_sq: float

    @classmethod
    def build(cls, profile: TerminalProfile, sigma_sq: float, geom: ArrayGeometry):
        return cls(
            profile=profile,
            consts=link_constants(profile, sigma_sq),
            a0_bar=normalized_steering(geom, profile.direction),
            sigma_sq=sigma_sq,
        )


@dataclass(frozen=True)
class Verdict:
    statistic: float
    threshold: float
    decision: Hypothesis
    estimates: EstimateSet | None = None
    floored: bool = False


def statistic_from_parts(
    y_bars: np.ndarray, peaks: np.ndarray, know: GcsKnowledge
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized T given precomputed grid peaks. Returns ``(T, floored)``."""
    eps_sq = know.consts.eps_sq
    resid = y_bars - know.consts.los_amp * know.a0_bar
    term1 = np.sum(resid.real**2 + resid.imag**2, axis=-1) / eps_sq
    y_sq = np.sum(y_bars.real**2 + y_bars.imag**2, axis=-1)
    arg = y_sq - peaks
    floor = know.sigma_sq * LOG_FLOOR_REL
    floored = arg <= floor
    arg = np.where(floored, floor, arg)
    return term1 - np.log(arg / eps_sq), floored


def glr_statistic(
    y_bar: ReceivedVector, know: GcsKnowledge, geom: ArrayGeometry, grid: GridSpec
) -> float:
    peaks, _, _, _ = grid_peaks(y_bar.y_bar, geom, grid)
    t, _ = statistic_from_parts(np.atleast_2d(y_bar.y_bar), peaks, know)
    return float(t[0])


def decide(statistic: float, threshold: float) -> Verdict:
    # ties go to H0
    hyp = Hypothesis.H1 if statistic > threshold else Hypothesis.H0
    return Verdict(statistic=float(statistic), threshold=float(threshold), decision=hyp)


def authenticate(
    y_bar: ReceivedVector,
    know: GcsKnowledge,
    geom: ArrayGeometry,
    grid: GridSpec,
    threshold: float,
) -> Verdict:
    """Run the full test on one packet; the verdict carries the H1 estimates."""
    yb = np.atleast_2d(y_bar.y_bar)
    peaks, om, mu, corr = grid_peaks(yb, geom, grid)
    t, floored = statistic_from_parts(yb, peaks, know)
    est = estimates_from_peak(
        float(np.vdot(yb[0], yb[0]).real), float(peaks[0]), complex(corr[0]),
        DirectionCosines(float(om[0]), float(mu[0])), y_bar.sigma_sq,
    )
    v = decide(float(t[0]), threshold)
    return Verdict(v.statistic, v.threshold, v.decision, est, bool(floored[0]))

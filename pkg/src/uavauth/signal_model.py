"""Training sequences, packet transmission under H0/H1 and matched filtering."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .array_channel import (
    ArrayGeometry,
    DomainError,
    TerminalProfile,
    complex_normal,
    steering_vector,
    synth_channel,
)


class Hypothesis(enum.Enum):
    H0 = "H0"  # packet sent by the ground control station
    H1 = "H1"  # packet forged by the attacker


@dataclass(frozen=True)
class TrainingSequence:
    s: np.ndarray

    def __post_init__(self):
        if abs(np.vdot(self.s, self.s).real - 1.0) > 1e-12:
            raise DomainError("training sequence must have unit norm")

    @property
    def length(self) -> int:
        return self.s.size


@dataclass(frozen=True)
class NoiseParams:
    """Post-matched-filter noise variance per array element (mW)."""

    sigma_sq: float

    def __post_init__(self):
        if not self.sigma_sq > 0:
            raise DomainError("sigma_sq must be positive")


@dataclass
class ReceivedVector:
    y_bar: np.ndarray
    sigma_sq: float

    @classmethod
    def from_y(cls, y: np.ndarray, sigma_sq: float) -> "ReceivedVector":
        return cls(y_bar=np.asarray(y) / math.sqrt(y.size), sigma_sq=sigma_sq)


def gen_training(length: int, rng: np.random.Generator) -> TrainingSequence:
    if length < 1:
        raise DomainError("training length must be at least 1")
    s = complex_normal(rng, length)
    return TrainingSequence(s / np.linalg.norm(s))


def matched_filter(packet: np.ndarray, s: TrainingSequence) -> np.ndarray:
    """y = Y s."""
    packet = np.asarray(packet)
    if packet.ndim != 2 or packet.shape[1] != s.length:
        raise DomainError(
            f"packet shape {packet.shape} does not match training length {s.length}"
        )
    return packet @ s.s


def _check_phase(hyp: Hypothesis, psi: float) -> None:
    if hyp is Hypothesis.H0 and psi != 0:
        raise DomainError("the GCS does not rotate its phase; psi must be 0 under H0")


def transmit(
    hyp: Hypothesis,
    profile: TerminalProfile,
    psi: float,
    s: TrainingSequence | None,
    noise: NoiseParams,
    geom: ArrayGeometry,
    rng: np.random.Generator,
    explicit: bool = False,
) -> ReceivedVector:
    """Simulate one received packet and return the normalized vector y/sqrt(L).

    By default the post-matched-filter vector is drawn directly,
    ``y = sqrt(P) f e^{j psi} + n`` with ``n ~ CN(0, sigma^2 I)``.

    With ``explicit=True`` the full L x L_s packet is formed. The sequence is
    sent at unit average power per symbol (``sqrt(L_s) s``), each noise entry
    has variance ``sigma^2 L_s`` and the filter output is rescaled by
    ``1/sqrt(L_s)``, which leaves noise variance ``sigma^2`` after filtering.
    """
    _check_phase(hyp, psi)
    L = geom.n_elements
    ch = synth_channel(profile, geom, rng)
    rot = np.exp(1j * psi) if hyp is Hypothesis.H1 else 1.0
    signal = math.sqrt(profile.power) * ch.f * rot
    if not explicit:
        y = signal + math.sqrt(noise.sigma_sq) * complex_normal(rng, L)
        return ReceivedVector.from_y(y, noise.sigma_sq)
    if s is None:
        raise DomainError("the explicit path needs a training sequence")
    ls = s.length
    sigma_n_sq = noise.sigma_sq * ls
    tx = math.sqrt(ls) * s.s
    packet = np.outer(signal, tx.conj()) + math.sqrt(sigma_n_sq) * complex_normal(
        rng, (L, ls)
    )
    y = matched_filter(packet, s) / math.sqrt(ls)
    return ReceivedVector.from_y(y, noise.sigma_sq)


def transmit_batch(
    profile: TerminalProfile,
    psi: float,
    noise: NoiseParams,
    geom: ArrayGeometry,
    rngs,
) -> np.ndarray:
    """Direct-path draws for a sequence of per-trial generators; rows are y_bar."""
    L = geom.n_elements
    a = steering_vector(geom, profile.direction)
    lam = math.sqrt(profile.rician_lambda_sq)
    delta = math.sqrt(profile.delta_sq)
    x = profile.amplitude
    rot = np.exp(1j * psi)
    sig = math.sqrt(noise.sigma_sq)
    out = np.empty((len(rngs), L), dtype=complex)
    for i, rng in enumerate(rngs):
        # same draw order as transmit(): channel scatter first, then noise
        h = complex_normal(rng, L)
        n = complex_normal(rng, L)
        out[i] = x * (lam * a + delta * h) * rot + sig * n
    return out / math.sqrt(L)

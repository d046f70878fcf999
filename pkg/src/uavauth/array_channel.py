"""Array geometry, steering vectors and Rician ground-to-air channels."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when an argument falls outside the domain of an operation."""


@dataclass(frozen=True)
class ArrayGeometry:
    """T-shaped array: 2M+1 elements on the x-axis, N on the y-axis.

    Elements are spaced half a wavelength apart.
    """

    m_half: int = 6
    n_y: int = 12

    def __post_init__(self):
        if self.m_half < 0 or self.n_y < 0:
            raise DomainError("element counts must be nonnegative")
        if self.n_elements < 2:
            raise DomainError("array needs at least two elements")

    @property
    def n_x(self) -> int:
        return 2 * self.m_half + 1

    @property
    def n_elements(self) -> int:
        return 2 * self.m_half + 1 + self.n_y

    def x_exponents(self) -> np.ndarray:
        # a_X(w)_k = exp(j*pi*k*w) for k = M, M-1, ..., -M
        return np.arange(self.m_half, -self.m_half - 1, -1, dtype=float)

    def y_exponents(self) -> np.ndarray:
        # a_Y(m)_k = exp(-j*pi*k*m) for k = 1..N
        return -np.arange(1, self.n_y + 1, dtype=float)


@dataclass(frozen=True)
class DirectionCosines:
    omega: float
    mu: float

    def __post_init__(self):
        if not (-1.0 <= self.omega <= 1.0 and -1.0 <= self.mu <= 1.0):
            raise DomainError(
                f"direction cosines out of range: omega={self.omega}, mu={self.mu}"
            )


@dataclass(frozen=True)
class AnglePair:
    """Arrival angles in radians.

    Only ever consumed through ``angles_to_cosines``; ``theta`` behaves as the
    polar (zenith) angle measured from the array normal.
    """

    theta: float
    phi: float

    @classmethod
    def from_degrees(cls, theta_deg: float, phi_deg: float) -> "AnglePair":
        return cls(math.radians(theta_deg), math.radians(phi_deg))


def angles_to_cosines(angles: AnglePair) -> DirectionCosines:
    st = math.sin(angles.theta)
    omega = st * math.cos(angles.phi)
    mu = st * math.sin(angles.phi)
    # guard against 1 + ulp from rounding
    return DirectionCosines(min(1.0, max(-1.0, omega)), min(1.0, max(-1.0, mu)))


@dataclass(frozen=True)
class TerminalProfile:
    """Physical parameters of one transmitter (GCS or attacker).

    Attributes
    ----------
    power : float
        Transmit power in mW.
    distance : float
        Distance to the UAV in meters.
    rician_lambda_sq : float
        LOS power fraction, 1/(1+kappa).
    direction : DirectionCosines
        Arrival direction at the UAV array.
    path_loss_exp : float
        Path-loss exponent, 2.0 for free space.
    """

    power: float
    distance: float
    rician_lambda_sq: float
    direction: DirectionCosines
    path_loss_exp: float = 2.0

    def __post_init__(self):
        if not self.power > 0:
            raise DomainError("power must be positive")
        if not self.distance > 0:
            raise DomainError("distance must be positive")
        if not 0.0 <= self.rician_lambda_sq <= 1.0:
            raise DomainError("rician_lambda_sq must lie in [0, 1]")
        if not self.path_loss_exp > 0:
            raise DomainError("path_loss_exp must be positive")

    @property
    def delta_sq(self) -> float:
        return 1.0 - self.rician_lambda_sq

    @property
    def kappa(self) -> float:
        """Rician factor 1/lambda^2 - 1; infinite without a LOS component."""
        if self.rician_lambda_sq == 0.0:
            return math.inf
        return 1.0 / self.rician_lambda_sq - 1.0

    @property
    def amplitude(self) -> float:
        """sqrt(P) * d^(-alpha/2)."""
        return math.sqrt(self.power) * self.distance ** (-self.path_loss_exp / 2)


def distance_from_height(height: float, angles: AnglePair) -> float:
    """Slant range for a terminal seen at ``angles`` from a UAV at ``height``.

    Scenario-construction helper only; assumes flat ground and theta measured
    from the vertical.
    """
    c = math.cos(angles.theta)
    if not c > 0:
        raise DomainError("theta must be below 90 degrees")
    return height / c


@dataclass(frozen=True)
class LinkConstants:
    los_amp: float
    eps_sq: float
    x_amp: float


def link_constants(profile: TerminalProfile, sigma_sq: float) -> LinkConstants:
    if not sigma_sq > 0:
        raise DomainError("sigma_sq must be positive")
    x_amp = profile.amplitude
    los_amp = x_amp * math.sqrt(profile.rician_lambda_sq)
    eps_sq = x_amp**2 * profile.delta_sq + sigma_sq
    return LinkConstants(los_amp=los_amp, eps_sq=eps_sq, x_amp=x_amp)


def steering_vector(geom: ArrayGeometry, direction: DirectionCosines) -> np.ndarray:
    """Array response ``[a_X(omega); a_Y(mu)]`` with unit-modulus entries."""
    if not isinstance(direction, DirectionCosines):
        direction = DirectionCosines(*direction)
    ax = np.exp(1j * np.pi * geom.x_exponents() * direction.omega)
    ay = np.exp(1j * np.pi * geom.y_exponents() * direction.mu)
    return np.concatenate([ax, ay])


def normalized_steering(geom: ArrayGeometry, direction: DirectionCosines) -> np.ndarray:
    return steering_vector(geom, direction) / math.sqrt(geom.n_elements)


@dataclass
class ChannelRealization:
    f: np.ndarray
    h: np.ndarray


def complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Draws from CN(0, 1)."""
    z = rng.standard_normal(size=(2,) + tuple(np.atleast_1d(size)))
    return (z[0] + 1j * z[1]) * math.sqrt(0.5)


def synth_channel(
    profile: TerminalProfile, geom: ArrayGeometry, rng: np.random.Generator
) -> ChannelRealization:
    L = geom.n_elements
    a = steering_vector(geom, profile.direction)
    h = complex_normal(rng, L)
    scale = profile.distance ** (-profile.path_loss_exp / 2)
    lam = math.sqrt(profile.rician_lambda_sq)
    delta = math.sqrt(profile.delta_sq)
    f = scale * (lam * a + delta * h)
    return ChannelRealization(f=f, h=h)


def unitary_completion(u: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Unitary matrix whose first column is the unit vector ``u``.

    Built from a single Householder reflector, so the result is deterministic.
    """
    u = np.asarray(u, dtype=complex).ravel()
    if abs(np.linalg.norm(u) - 1.0) > tol:
        raise DomainError("unitary_completion needs a unit-norm vector")
    L = u.size
    # Phase-align u[0] so that Q e1 = u exactly: Q = D H with H the reflector
    # mapping e1 -> e^{-j arg u0} u, D = e^{j arg u0} I.
    phase = u[0] / abs(u[0]) if abs(u[0]) > 0 else 1.0
    w = u / phase
    v = w.copy()
    v[0] -= 1.0
    nv = np.linalg.norm(v)
    if nv < 1e-300:
        H = np.eye(L, dtype=complex)
    else:
        v /= nv
        # w[0] is real and <= 1, so H = I - 2 v v^H maps e1 to w exactly
        H = np.eye(L, dtype=complex) - 2.0 * np.outer(v, v.conj())
    return phase * H

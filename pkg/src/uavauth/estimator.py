"""Maximum-likelihood estimation of the attacker's channel parameters.

The direction is found by exhaustive search of |y_bar^H a_bar(omega, mu)|^2 over
a square grid; power, Rician fraction and phase then follow in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

from .array_channel import (
    ArrayGeometry,
    DirectionCosines,
    DomainError,
    normalized_steering,
)
from .signal_model import ReceivedVector


@dataclass(frozen=True)
class GridSpec:
    """Square search grid over (omega, mu) in [-1, 1]^2.

    ``refine`` enables one extra pass at step/10 around the coarse peak.
    """

    step: float = 0.005
    refine: bool = False

    def __post_init__(self):
        if not 0 < self.step < 2:
            raise DomainError("grid step must lie in (0, 2)")

    def points(self) -> np.ndarray:
        return _grid_points(self.step)


@lru_cache(maxsize=16)
def _grid_points(step: float) -> np.ndarray:
    n = int(math.floor(2.0 / step + 1e-9))
    pts = -1.0 + step * np.arange(n + 1)
    pts.setflags(write=False)
    return pts


@lru_cache(maxsize=16)
def _grid_basis(geom: ArrayGeometry, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis normalized steering responses, shape (n_points, n_axis_elements)."""
    g = _grid_points(step)
    rs = 1.0 / math.sqrt(geom.n_elements)
    ex = np.exp(1j * np.pi * np.outer(g, geom.x_exponents())) * rs
    ey = np.exp(1j * np.pi * np.outer(g, geom.y_exponents())) * rs
    return ex, ey


@numba.njit(cache=True, nogil=True)
def _scan(ar, ai, br, bi):
    # max over (i, j) of |A_i + B_j|^2, smallest (i, j) on ties.
    # Rows are visited by decreasing |A_i| and skipped once the
    # Cauchy-Schwarz bound (|A_i| + max|B|)^2 cannot beat the incumbent.
    amag = np.sqrt(ar * ar + ai * ai)
    bmax = np.sqrt(np.max(br * br + bi * bi))
    order = np.argsort(-amag, kind="mergesort")
    best = -1.0
    best_i = -1
    best_j = -1
    nb = br.size
    for k in range(order.size):
        i = order[k]
        bound = (amag[i] + bmax) ** 2 * (1.0 + 1e-12)
        if bound < best:
            break
        xr = ar[i]
        xi = ai[i]
        for j in range(nb):
            re = xr + br[j]
            im = xi + bi[j]
            v = re * re + im * im
            if v > best or (v == best and (i < best_i or (i == best_i and j < best_j))):
                best = v
                best_i = i
                best_j = j
    return best, best_i, best_j


def _axis_correlations(y_bar: np.ndarray, geom: ArrayGeometry, step: float):
    ex, ey = _grid_basis(geom, step)
    yc = np.conj(y_bar)
    nx = geom.n_x
    a = yc[..., :nx] @ ex.T
    b = yc[..., nx:] @ ey.T
    return a, b


def grid_peaks(y_bars: np.ndarray, geom: ArrayGeometry, grid: GridSpec):
    """Batch grid search.

    Returns ``(peak, omega, mu, corr)`` arrays where ``corr`` is the complex
    correlation ``y_bar^H a_bar`` at the selected point.
    """
    y_bars = np.atleast_2d(y_bars)
    a, b = _axis_correlations(y_bars, geom, grid.step)
    g = grid.points()
    n = y_bars.shape[0]
    peak = np.empty(n)
    om = np.empty(n)
    mu = np.empty(n)
    corr = np.empty(n, dtype=complex)
    for t in range(n):
        at, bt = a[t], b[t]
        p, i, j = _scan(
            np.ascontiguousarray(at.real), np.ascontiguousarray(at.imag),
            np.ascontiguousarray(bt.real), np.ascontiguousarray(bt.imag),
        )
        peak[t] = p
        om[t] = g[i]
        mu[t] = g[j]
        corr[t] = at[i] + bt[j]
    if grid.refine:
        for t in range(n):
            peak[t], om[t], mu[t], corr[t] = _refine(
                y_bars[t], geom, grid.step, om[t], mu[t], peak[t], corr[t]
            )
    return peak, om, mu, corr


def _refine(y_bar, geom, step, om0, mu0, peak0, corr0):
    fine = step / 10.0
    offs = fine * np.arange(-10, 11)
    oms = np.clip(om0 + offs, -1.0, 1.0)
    mus = np.clip(mu0 + offs, -1.0, 1.0)
    rs = 1.0 / math.sqrt(geom.n_elements)
    ex = np.exp(1j * np.pi * np.outer(oms, geom.x_exponents())) * rs
    ey = np.exp(1j * np.pi * np.outer(mus, geom.y_exponents())) * rs
    yc = np.conj(y_bar)
    a = ex @ yc[: geom.n_x]
    b = ey @ yc[geom.n_x:]
    c = a[:, None] + b[None, :]
    obj = c.real**2 + c.imag**2
    k = int(np.argmax(obj))
    i, j = divmod(k, mus.size)
    if obj[i, j] <= peak0:
        return peak0, om0, mu0, corr0
    return obj[i, j], oms[i], mus[j], c[i, j]


def grid_search_direction(
    y_bar: ReceivedVector, geom: ArrayGeometry, grid: GridSpec
) -> tuple[DirectionCosines, float]:
    peak, om, mu, _ = grid_peaks(y_bar.y_bar, geom, grid)
    return DirectionCosines(float(om[0]), float(mu[0])), float(peak[0])


def objective_grid(y_bar: np.ndarray, geom: ArrayGeometry, grid: GridSpec) -> np.ndarray:
    """Full |y_bar^H a_bar|^2 surface, indexed [omega, mu]. For diagnostics."""
    a, b = _axis_correlations(np.asarray(y_bar), geom, grid.step)
    c = a[:, None] + b[None, :]
    return c.real**2 + c.imag**2


@dataclass(frozen=True)
class EstimateSet:
    dir_hat: DirectionCosines
    x_sq_hat: float
    lambda_sq_hat: float
    psi_hat: float
    xi_star: float
    peak: float
    low_confidence: bool = False

    @property
    def x_hat(self) -> float:
        return math.sqrt(self.x_sq_hat)

    @property
    def lambda_hat(self) -> float:
        return math.sqrt(self.lambda_sq_hat)


def estimates_from_peak(
    y_norm_sq: float, peak: float, corr: complex, direction: DirectionCosines,
    sigma_sq: float,
) -> EstimateSet:
    """Closed-form power, Rician fraction and phase given the direction peak.

    With z = |y^H a| and t = x^2 - z^2 the profile objective is minimized at
    t = max(Xi, 0), hence x^2 = t + z^2 and lambda^2 = z^2 / x^2.
    """
    xi = y_norm_sq - peak - sigma_sq
    low = y_norm_sq <= sigma_sq
    if xi >= 0:
        x_sq = y_norm_sq - sigma_sq
        lam_sq = peak / x_sq
    else:
        x_sq = peak
        lam_sq = 1.0
    lam_sq = min(1.0, max(0.0, lam_sq))
    # exp(-j psi) = y^H a / |y^H a|
    psi = float(np.mod(-np.angle(corr), 2 * np.pi)) if abs(corr) > 0 else 0.0
    return EstimateSet(
        dir_hat=direction, x_sq_hat=float(x_sq), lambda_sq_hat=float(lam_sq),
        psi_hat=psi, xi_star=float(xi), peak=float(peak), low_confidence=bool(low),
    )


def estimate_all(y_bar: ReceivedVector, geom: ArrayGeometry, grid: GridSpec) -> EstimateSet:
    peak, om, mu, corr = grid_peaks(y_bar.y_bar, geom, grid)
    y_norm_sq = float(np.vdot(y_bar.y_bar, y_bar.y_bar).real)
    return estimates_from_peak(
        y_norm_sq, float(peak[0]), complex(corr[0]),
        DirectionCosines(float(om[0]), float(mu[0])), y_bar.sigma_sq,
    )


def nll_objective(
    y_bar: ReceivedVector | np.ndarray,
    x: float,
    lam: float,
    direction: DirectionCosines,
    psi: float,
    geom: ArrayGeometry,
    sigma_sq: float,
) -> float:
    """Negative log-likelihood (up to constants) of y_bar under H1."""
    if x < 0 or not 0.0 <= lam <= 1.0:
        raise DomainError("need x >= 0 and 0 <= lambda <= 1")
    yb = y_bar.y_bar if isinstance(y_bar, ReceivedVector) else np.asarray(y_bar)
    a_bar = normalized_steering(geom, direction)
    r = yb - x * lam * a_bar * np.exp(1j * psi)
    var = x * x * (1.0 - lam * lam) + sigma_sq
    return float(np.vdot(r, r).real / var + math.log(var))

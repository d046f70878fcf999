"""Semi-closed-form false-alarm and detection-rate approximations.

Under H0 the statistic is approximated by ``X_k + Y_k - ln Y_k`` with
``X_k ~ Gamma(k, 1/L)`` and ``Y_k ~ Gamma(L-k, 1/L)``; under H1 by
``X + Y - ln Y`` with ``X`` a scaled non-central chi-square (4 real degrees of
freedom) and ``Y ~ Gamma(L-2, 1/rho)``. Both CDFs integrate over the region
``{x + y - ln y < tau}``, whose u = x + y extent is bounded by the two roots of
``exp(q - tau) = q``.

Everything that can overflow is carried in log space.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .array_channel import (
    ArrayGeometry,
    DomainError,
    TerminalProfile,
    link_constants,
    normalized_steering,
    unitary_completion,
)
from .detector import GcsKnowledge


class AccuracyWarning(RuntimeWarning):
    """A series hit its term cap before reaching the requested tolerance."""


# ---------------------------------------------------------------------------
# gamma segments


def _logsumexp(logs: np.ndarray) -> float:
    m = np.max(logs)
    if not np.isfinite(m):
        return float(m)
    return float(m + math.log(math.fsum(np.exp(logs - m))))


def _log_diff(la: float, lb: float) -> float:
    """log(exp(la) - exp(lb)) for la >= lb."""
    if lb == -math.inf:
        return la
    d = lb - la
    if d >= 0:
        return -math.inf
    return la + math.log(-math.expm1(d))


def _log_lower(n: int, a: float, x: float) -> float:
    """log of int_0^x t^n exp(-a t) dt via a positive-term series."""
    if x <= 0:
        return -math.inf
    z = abs(a) * x
    lx = math.log(x)
    if z == 0:
        return (n + 1) * lx - math.log(n + 1)
    lz = math.log(z)
    peak = max(0.0, z - n) if a > 0 else z
    m = np.arange(int(peak + 12.0 * math.sqrt(z + 1.0) + 60.0))
    if a > 0:
        # x^{n+1} e^{-z} sum_m z^m / ((n+1)(n+2)...(n+1+m))
        logs = m * lz + special.gammaln(n + 1) - special.gammaln(n + 2 + m)
        return (n + 1) * lx - z + _logsumexp(logs)
    # x^{n+1} sum_m z^m / (m! (n+1+m))
    logs = m * lz - special.gammaln(m + 1) - np.log(n + 1 + m)
    return (n + 1) * lx + _logsumexp(logs)


def _log_upper(n: int, a: float, x: float) -> float:
    """log of int_x^inf t^n exp(-a t) dt for a > 0 (finite sum, positive terms)."""
    j = np.arange(n + 1)
    logs = special.gammaln(n + 1) - special.gammaln(n - j + 1) - (j + 1) * math.log(a)
    if x > 0:
        logs = logs + (n - j) * math.log(x)
    else:
        logs = np.where(j == n, logs, -np.inf)
    return -a * x + _logsumexp(logs)


def log_gamma_segment(n: int, a: float, b: float, c: float) -> float:
    """Natural log of ``gamma_segment(n, a, b, c)``; ``-inf`` for an empty segment."""
    if n < 0 or int(n) != n:
        raise DomainError("n must be a nonnegative integer")
    if b < 0 or b > c:
        raise DomainError("need 0 <= b <= c")
    n = int(n)
    if b == c:
        return -math.inf
    if a == 0:
        lc = (n + 1) * math.log(c)
        lb = (n + 1) * math.log(b) if b > 0 else -math.inf
        return _log_diff(lc, lb) - math.log(n + 1)
    if a < 0:
        return _log_diff(_log_lower(n, a, c), _log_lower(n, a, b))
    mode = n / a
    if c <= mode:
        return _log_diff(_log_lower(n, a, c), _log_lower(n, a, b))
    if b >= mode:
        return _log_diff(_log_upper(n, a, b), _log_upper(n, a, c))
    left = _log_diff(_log_lower(n, a, mode), _log_lower(n, a, b))
    right = _log_diff(_log_upper(n, a, mode), _log_upper(n, a, c))
    return float(np.logaddexp(left, right))


def gamma_segment(n: int, a: float, b: float, c: float) -> float:
    """int_b^c x^n exp(-a x) dx for integer n >= 0 and 0 <= b <= c.

    For a > 0 and a window above the integrand's mode this is the finite sum
    ``sum_j n!/((n-j)! a^{j+1}) (b^{n-j} e^{-ab} - c^{n-j} e^{-ac})``; below the
    mode (and for a < 0) the equivalent lower incomplete gamma series is used,
    since the finite sum cancels catastrophically there.
    """
    return math.exp(log_gamma_segment(n, a, b, c))


# ---------------------------------------------------------------------------
# fixed points of exp(q - tau) = q


@dataclass(frozen=True)
class RootPair:
    q_lo: float
    q_hi: float


def _polish(q: float, tau: float) -> float:
    # Newton on q - ln q - tau, which is well scaled on both branches
    for _ in range(4):
        if q <= 0 or q == 1.0:
            break
        step = (q - math.log(q) - tau) / (1.0 - 1.0 / q)
        if not math.isfinite(step):
            break
        q_new = q - step
        if q_new <= 0 or q_new == q:
            break
        q = q_new
    return q


def fixed_points(tau: float) -> RootPair:
    """Roots of exp(q - tau) = q in (0, 1] and [1, inf); requires tau >= 1."""
    if not tau >= 1.0:
        raise DomainError("exp(q - tau) = q has no real roots for tau < 1")
    if tau == 1.0:
        return RootPair(1.0, 1.0)

    def h(q):
        return q - math.log(q) - tau

    lo_bracket = (math.exp(-tau), 1.0)
    hi_bracket = (1.0, tau + 2.0 * math.log(tau + 1.0) + 2.0)
    kw = dict(xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    q_lo = _polish(optimize.brentq(h, *lo_bracket, **kw), tau) if h(lo_bracket[0]) > 0 else lo_bracket[0]
    q_hi = _polish(optimize.brentq(h, *hi_bracket, **kw), tau)
    return RootPair(q_lo, q_hi)


def root_residual(q: float, tau: float) -> float:
    return abs(math.exp(q - tau) - q)


# ---------------------------------------------------------------------------
# false-alarm approximation


@dataclass(frozen=True)
class FarModel:
    l_ant: int
    k_split: int = 2

    def __post_init__(self):
        if not 2 <= self.k_split <= self.l_ant - 1:
            raise DomainError("k_split must lie in {2, ..., L-1}")


def _signed_sum(logs: list[float], signs: list[float]) -> tuple[float, float, float]:
    """Return (max log, signed sum, magnitude sum); both sums are scaled by exp(-max)."""
    arr = np.asarray(logs)
    m = float(np.max(arr))
    if not np.isfinite(m):
        return -math.inf, 0.0, 0.0
    mags = np.exp(arr - m)
    return m, math.fsum(np.asarray(signs) * mags), math.fsum(mags)


def far_cdf(tau: float, model: FarModel) -> float:
    """P{X_k + Y_k - ln Y_k < tau}."""
    if tau <= 1.0:
        return 0.0
    L, k = model.l_ant, model.k_split
    r = fixed_points(tau)
    log_pref = L * math.log(L) - special.gammaln(k) - special.gammaln(L - k)
    lg_common = log_gamma_segment(L - 1, L, r.q_lo, r.q_hi)
    logs, signs = [], []
    for j in range(k):
        lbin = special.gammaln(k) - special.gammaln(j + 1) - special.gammaln(k - j)
        sgn = -1.0 if (k - j - 1) % 2 else 1.0
        e = L - j - 1
        logs.append(lbin + lg_common - math.log(e))
        signs.append(sgn)
        logs.append(lbin + log_gamma_segment(j, j + 1, r.q_lo, r.q_hi) - e * tau - math.log(e))
        signs.append(-sgn)
    m, total, _ = _signed_sum(logs, signs)
    if total <= 0:
        return 0.0
    val = math.exp(log_pref + m + math.log(total))
    return min(1.0, max(0.0, val))


def far_ccdf(tau: float, model: FarModel) -> float:
    return 1.0 - far_cdf(tau, model)


def far_threshold(eta: float, model: FarModel, tol: float = 1e-9) -> float:
    """Threshold at which the approximate false-alarm rate equals ``eta``."""
    if not 0.0 < eta < 1.0:
        raise DomainError("eta must lie in (0, 1)")
    target = 1.0 - eta

    def g(t):
        return far_cdf(t, model) - target

    lo, hi = 1.0, 2.0
    while g(hi) < 0:
        lo, hi = hi, hi * 2.0
        if hi > 1e6:
            raise DomainError("eta too small to bracket a threshold")
    tau = optimize.brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(g(tau)) > tol:
        # brentq stops on the bracket width; finish with plain bisection
        a, b = lo, hi
        for _ in range(200):
            mid = 0.5 * (a + b)
            if g(mid) < 0:
                a = mid
            else:
                b = mid
            if abs(g(mid)) <= tol:
                tau = mid
                break
    return float(tau)


# ---------------------------------------------------------------------------
# detection-rate approximation


@dataclass(frozen=True)
class SdrModel:
    """Parameters of the H1 surrogate ``X + Y - ln Y``.

    ``rho_factor`` is eps0^2 L / eps1^2 (inverse per-component variance of the
    normalized residual), ``beta_norm_sq`` the non-centrality of ``X``.
    """

    l_ant: int
    rho_factor: float
    beta_norm_sq: float
    beta1: complex = 0j
    rho_tail: float = 0.0

    def __post_init__(self):
        if not self.rho_factor > 0:
            raise DomainError("rho_factor must be positive")
        if self.beta_norm_sq < 0:
            raise DomainError("beta_norm_sq must be nonnegative")
        if self.l_ant < 3:
            raise DomainError("need at least three antennas")
        if abs(abs(self.beta1) ** 2 + self.rho_tail**2 - self.beta_norm_sq) > 1e-10 * max(
            1.0, self.beta_norm_sq
        ):
            raise DomainError("|beta1|^2 + rho_tail^2 must equal beta_norm_sq")

    @classmethod
    def central(cls, l_ant: int, rho_factor: float, beta_norm_sq: float) -> "SdrModel":
        """Model with all non-centrality on the first coordinate."""
        return cls(l_ant, rho_factor, beta_norm_sq, complex(math.sqrt(beta_norm_sq)), 0.0)


def build_sdr_model(
    gcs: GcsKnowledge,
    ma_profile: TerminalProfile,
    psi: float,
    sigma_sq: float,
    geom: ArrayGeometry,
) -> SdrModel:
    L = geom.n_elements
    c0 = gcs.consts
    c1 = link_constants(ma_profile, sigma_sq)
    eps0 = math.sqrt(c0.eps_sq)
    a1_bar = normalized_steering(geom, ma_profile.direction)
    delta = (c1.los_amp * a1_bar * np.exp(1j * psi) - c0.los_amp * gcs.a0_bar) / eps0
    u1 = unitary_completion(a1_bar)
    beta = u1.conj().T @ delta
    rho_tail = float(np.linalg.norm(beta[1:]))
    beta1 = complex(beta[0])
    return SdrModel(
        l_ant=L,
        rho_factor=c0.eps_sq * L / c1.eps_sq,
        beta_norm_sq=abs(beta1) ** 2 + rho_tail**2,
        beta1=beta1,
        rho_tail=rho_tail,
    )


def noncentral_pdf(x, model: SdrModel):
    """Density of ``X = |beta1 + v1|^2 + |rho + z2|^2`` with v1, z2 ~ CN(0, 1/rho)."""
    x = np.asarray(x, dtype=float)
    r = model.rho_factor
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    if model.beta_norm_sq == 0:
        out[pos] = r * r * xp * np.exp(-r * xp)
    else:
        bn = math.sqrt(model.beta_norm_sq)
        w = 2.0 * r * bn * np.sqrt(xp)
        # e^{-r(x+|b|^2)} I1(w) = e^{-r(sqrt x - |b|)^2} ive(1, w)
        out[pos] = (
            (r / bn) * np.sqrt(xp) * np.exp(-r * (np.sqrt(xp) - bn) ** 2) * special.ive(1, w)
        )
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SeriesResult:
    ccdf: float
    n_terms: int
    converged: bool
    literal_terms: int = 0


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _log_inner_literal(k: int, L: int, r: float, tau: float, q: RootPair):
    """log J_k from the binomial expansion; None when cancellation eats the result."""
    lg_common = log_gamma_segment(k + L - 1, r, q.q_lo, q.q_hi)
    logs, signs = [], []
    for j in range(k + 2):
        lbin = special.gammaln(k + 2) - special.gammaln(j + 1) - special.gammaln(k + 2 - j)
        sgn = -1.0 if (k + 1 - j) % 2 else 1.0
        e = k - j + L - 1
        logs.append(lbin + lg_common - math.log(e))
        signs.append(sgn)
        logs.append(
            lbin + log_gamma_segment(j, r + j + 1 - k - L, q.q_lo, q.q_hi) - e * tau - math.log(e)
        )
        signs.append(-sgn)
    m, total, mag = _signed_sum(logs, signs)
    if total <= 0 or total < 1e-6 * mag:
        return None
    return m + math.log(total)


def _log_inner_stable(ks: np.ndarray, L: int, r: float, tau: float, q: RootPair) -> np.ndarray:
    """log J_k = log B(L-2, k+2) + log int e^{-r u} u^{k+L-1} I_{1-w/u}(k+2, L-2) du.

    w = exp(u - tau). Composite Gauss-Legendre over [q_lo, q_hi].
    """
    panels = 24
    edges = np.linspace(q.q_lo, q.q_hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    u = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    frac = np.clip(1.0 - np.exp(u - tau) / u, 0.0, 1.0)
    kk = ks[:, None].astype(float)
    with np.errstate(divide="ignore"):
        lb = np.log(special.betainc(kk + 2.0, L - 2.0, frac[None, :]))
        logs = -r * u[None, :] + (kk + L - 1) * np.log(u)[None, :] + lb + np.log(wts)[None, :]
    mx = np.max(logs, axis=1, keepdims=True)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    s = np.sum(np.exp(logs - safe), axis=1)
    with np.errstate(divide="ignore"):
        out = safe[:, 0] + np.log(s)
    out = np.where(np.isfinite(mx[:, 0]), out, -np.inf)
    return out + special.betaln(L - 2.0, kk[:, 0] + 2.0)


def sdr_series(
    tau: float, model: SdrModel, rel_tol: float = 1e-12, max_terms: int = 500
) -> SeriesResult:
    """Bessel-series evaluation of P{X + Y - ln Y > tau}.

    Term k of the outer sum carries (rho^2 |beta|^2)^k / (k! (k+1)!) times the
    region integral J_k of (u - v)^{k+1} v^{L-3} e^{-rho u}. J_k is taken from
    the binomial expansion into gamma segments while that is well conditioned,
    and from an equivalent incomplete-beta quadrature afterwards.
    """
    if tau <= 1.0:
        return SeriesResult(1.0, 0, True)
    L = model.l_ant
    r = model.rho_factor
    B = model.beta_norm_sq
    q = fixed_points(tau)
    log_pref = 2 * math.log(r) - r * B + (L - 2) * math.log(r) - special.gammaln(L - 2)
    log_z = math.log(r * r * B) if B > 0 else -math.inf

    literal_ok = True
    n_literal = 0
    log_terms: list[float] = []
    stable_cache: dict[int, float] = {}
    block = 64
    converged = False
    prev = -math.inf
    for k in range(max_terms):
        if k > 0 and B == 0:
            converged = True
            break
        lj = None
        if literal_ok:
            lj = _log_inner_literal(k, L, r, tau, q)
            if lj is None:
                literal_ok = False
            else:
                n_literal += 1
        if lj is None:
            if k not in stable_cache:
                ks = np.arange(k, min(k + block, max_terms))
                stable_cache.update(zip(ks.tolist(), _log_inner_stable(ks, L, r, tau, q).tolist()))
            lj = stable_cache[k]
        lt = (k * log_z if k else 0.0) - special.gammaln(k + 1) - special.gammaln(k + 2) + lj
        log_terms.append(lt)
        partial = _logsumexp(np.asarray(log_terms))
        if k > 0 and lt < prev and lt < partial + math.log(rel_tol):
            converged = True
            break
        prev = lt
    else:
        converged = False
    cdf = math.exp(log_pref + _logsumexp(np.asarray(log_terms))) if log_terms else 0.0
    if not converged:
        warnings.warn(
            f"SDR series not converged after {max_terms} terms (tau={tau})",
            AccuracyWarning,
            stacklevel=2,
        )
    ccdf = min(1.0, max(0.0, 1.0 - cdf))
    return SeriesResult(ccdf, len(log_terms), converged, n_literal)


def sdr_ccdf(tau: float, model: SdrModel) -> float:
    """Approximate detection rate at threshold ``tau``."""
    return sdr_series(tau, model).ccdf

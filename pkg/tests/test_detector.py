import math

import numpy as np
import pytest

from uavauth.array_channel import DirectionCosines, normalized_steering
from uavauth.detector import (
    LOG_FLOOR_REL,
    GcsKnowledge,
    authenticate,
    decide,
    glr_statistic,
    statistic_from_parts,
)
from uavauth.estimator import GridSpec, estimate_all, objective_grid
from uavauth.signal_model import Hypothesis, NoiseParams, ReceivedVector, transmit

from conftest import profile_deg


def two_pass_statistic(y, know, geom, grid):
    """Independent recomputation from the full objective surface."""
    surf = objective_grid(y, geom, grid)
    c = know.consts
    r = y - c.los_amp * know.a0_bar
    t1 = np.vdot(r, r).real / c.eps_sq
    arg = max(np.vdot(y, y).real - surf.max(), know.sigma_sq * LOG_FLOOR_REL)
    return t1 - math.log(arg / c.eps_sq)


def test_tie_goes_to_h0():
    assert decide(1.5, 1.5).decision is Hypothesis.H0
    assert decide(math.nextafter(1.5, 2), 1.5).decision is Hypothesis.H1
    assert decide(1.0, 1.5).decision is Hypothesis.H0


def test_matches_two_pass(geom, grid, gcs, gcs_profile):
    rng = np.random.default_rng(5)
    ma = profile_deg(17, 33, 0.75)
    for hyp, prof in ((Hypothesis.H0, gcs_profile), (Hypothesis.H1, ma)):
        for _ in range(10):
            y = transmit(hyp, prof, 0.0, None, NoiseParams(0.01), geom, rng)
            t = glr_statistic(y, gcs, geom, grid)
            assert t == pytest.approx(two_pass_statistic(y.y_bar, gcs, geom, grid), rel=1e-12)


def test_lower_bound_with_grid_aligned_gcs(geom, grid):
    # the grid maximum dominates the GCS direction, so the log argument is
    # at most ||y||^2 - |y^H a0|^2
    d = DirectionCosines(-1.0 + 0.005 * 230, -1.0 + 0.005 * 210)
    from uavauth.array_channel import TerminalProfile

    prof = TerminalProfile(100.0, 20.0, 0.9, d)
    know = GcsKnowledge.build(prof, 0.01, geom)
    rng = np.random.default_rng(6)
    for _ in range(50):
        y = transmit(Hypothesis.H0, prof, 0.0, None, NoiseParams(0.01), geom, rng).y_bar
        c = know.consts
        r = y - c.los_amp * know.a0_bar
        bound = np.vdot(r, r).real / c.eps_sq - math.log(
            (np.vdot(y, y).real - abs(np.vdot(y, know.a0_bar)) ** 2) / c.eps_sq
        )
        assert glr_statistic(ReceivedVector(y, 0.01), know, geom, grid) >= bound - 1e-12


def test_h0_first_term_mean(geom, gcs, gcs_profile):
    # under H0 the residual is CN(0, eps0^2/L I), so the first term has mean 1
    from uavauth.signal_model import transmit_batch

    n = 100_000
    y = transmit_batch(gcs_profile, 0.0, NoiseParams(0.01), geom,
                       [np.random.default_rng([3, i]) for i in range(n)])
    r = y - gcs.consts.los_amp * gcs.a0_bar
    t1 = np.sum(np.abs(r) ** 2, axis=1) / gcs.consts.eps_sq
    assert abs(t1.mean() - 1.0) < 3 * t1.std(ddof=1) / math.sqrt(n)


def test_vectorized_equals_scalar(geom, grid, gcs, gcs_profile):
    from uavauth.estimator import grid_peaks

    rng = np.random.default_rng(7)
    ys = np.array([transmit(Hypothesis.H0, gcs_profile, 0.0, None, NoiseParams(0.01), geom,
                            rng).y_bar for _ in range(20)])
    peaks = grid_peaks(ys, geom, grid)[0]
    t, fl = statistic_from_parts(ys, peaks, gcs)
    assert not fl.any()
    for i in range(20):
        assert t[i] == pytest.approx(glr_statistic(ReceivedVector(ys[i], 0.01), gcs, geom, grid), rel=1e-13)


def test_log_floor(geom, grid, gcs):
    d = DirectionCosines(-1.0 + 0.005 * 100, -1.0 + 0.005 * 300)
    y = ReceivedVector(0.3 * normalized_steering(geom, d), 0.01)
    v = authenticate(y, gcs, geom, grid, 2.0)
    assert v.floored
    assert math.isfinite(v.statistic)


def test_authenticate_carries_estimates(geom, grid, gcs):
    rng = np.random.default_rng(11)
    ma = profile_deg(17, 33, 0.75)
    y = transmit(Hypothesis.H1, ma, 0.5, None, NoiseParams(0.01), geom, rng)
    v = authenticate(y, gcs, geom, grid, 1.8)
    assert v.statistic == glr_statistic(y, gcs, geom, grid)
    assert v.estimates == estimate_all(y, geom, grid)
    assert v.decision is (Hypothesis.H1 if v.statistic > 1.8 else Hypothesis.H0)
    assert not v.floored


def test_eps_scaling_identity(geom, grid, gcs, gcs_profile):
    from dataclasses import replace

    rng = np.random.default_rng(12)
    y = transmit(Hypothesis.H0, gcs_profile, 0.0, None, NoiseParams(0.01), geom, rng)
    scale = 3.7
    scaled = replace(gcs, consts=replace(gcs.consts, eps_sq=gcs.consts.eps_sq * scale))
    c = gcs.consts
    r = y.y_bar - c.los_amp * gcs.a0_bar
    t1 = np.vdot(r, r).real / c.eps_sq
    t = glr_statistic(y, gcs, geom, grid)
    ts = glr_statistic(y, scaled, geom, grid)
    assert ts == pytest.approx(t - t1 + t1 / scale + math.log(scale), rel=1e-12)


def test_threshold_crossing_flips_once(geom, grid, gcs, gcs_profile):
    rng = np.random.default_rng(13)
    y = transmit(Hypothesis.H0, gcs_profile, 0.0, None, NoiseParams(0.01), geom, rng)
    t = glr_statistic(y, gcs, geom, grid)
    taus = np.linspace(t - 1, t + 1, 101)
    d = [authenticate(y, gcs, geom, grid, float(x)).decision is Hypothesis.H1 for x in taus]
    flips = sum(a != b for a, b in zip(d, d[1:]))
    assert flips == 1 and d[0] and not d[-1]


def test_calibrated_h0_mostly_accepted(geom, grid, gcs, gcs_profile):
    from uavauth.analytic import FarModel, far_threshold

    tau = far_threshold(0.05, FarModel(25, 2))
    rng = np.random.default_rng(14)
    n = 400
    hits = sum(
        authenticate(transmit(Hypothesis.H0, gcs_profile, 0.0, None, NoiseParams(0.01), geom, rng),
                     gcs, geom, grid, tau).decision is Hypothesis.H1
        for _ in range(n)
    )
    assert abs(hits / n - 0.05) < 4 * math.sqrt(0.05 * 0.95 / n)


def test_distant_strong_attacker_detected(geom, grid, gcs):
    from uavauth.analytic import FarModel, far_threshold

    tau = far_threshold(0.05, FarModel(25, 2))
    ma = profile_deg(40, 120, 0.95, power=1000.0)
    rng = np.random.default_rng(15)
    hits = sum(
        authenticate(transmit(Hypothesis.H1, ma, 0.0, None, NoiseParams(0.01), geom, rng),
                     gcs, geom, grid, tau).decision is Hypothesis.H1
        for _ in range(200)
    )
    assert hits >= 198

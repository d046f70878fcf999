import math

import numpy as np
import pytest

from uavauth.array_channel import DomainError
from uavauth.montecarlo import (
    CHUNK,
    RateEstimate,
    TrialConfig,
    compute_statistics,
    draw_packets,
    exceedance,
    roc_curve,
    run_trials,
    sweep_rates,
    trial_rng,
)
from uavauth.signal_model import Hypothesis, NoiseParams, transmit

from conftest import profile_deg


@pytest.fixture
def h0_cfg(gcs, grid, noise, geom):
    return TrialConfig(3000, 42, Hypothesis.H0, gcs, grid, noise, geom)


@pytest.fixture
def h1_cfg(gcs, grid, noise, geom):
    return TrialConfig(3000, 42, Hypothesis.H1, gcs, grid, noise, geom,
                       ma_profile=profile_deg(17, 33, 0.75))


def test_config_validation(gcs, grid, noise, geom):
    with pytest.raises(DomainError):
        TrialConfig(10, 1, Hypothesis.H1, gcs, grid, noise, geom)
    with pytest.raises(DomainError):
        TrialConfig(10, 1, Hypothesis.H0, gcs, grid, noise, geom, psi=0.2)
    with pytest.raises(DomainError):
        TrialConfig(-1, 1, Hypothesis.H0, gcs, grid, noise, geom)


def test_deterministic(h0_cfg):
    a = compute_statistics(h0_cfg)
    b = compute_statistics(h0_cfg)
    np.testing.assert_array_equal(a.statistic, b.statistic)


def test_thread_count_independent(h0_cfg):
    a = compute_statistics(h0_cfg, threads=1)
    b = compute_statistics(h0_cfg, threads=3)
    for f in ("statistic", "peak", "omega_hat", "mu_hat", "floored"):
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))
    assert h0_cfg.n_trials > CHUNK  # more than one chunk actually ran


def test_trial_streams_match_single_packet(h1_cfg, geom, noise):
    y = draw_packets(h1_cfg, 5, 8)
    for k, i in enumerate(range(5, 8)):
        ref = transmit(Hypothesis.H1, h1_cfg.ma_profile, 0.0, None, noise, geom,
                       trial_rng(42, Hypothesis.H1, i))
        np.testing.assert_allclose(y[k], ref.y_bar, rtol=1e-13, atol=1e-16)


def test_hypothesis_streams_distinct():
    a = trial_rng(1, Hypothesis.H0, 0).standard_normal(4)
    b = trial_rng(1, Hypothesis.H1, 0).standard_normal(4)
    assert not np.array_equal(a, b)


def test_extreme_thresholds(h0_cfg):
    st = compute_statistics(h0_cfg).statistic
    assert exceedance(st, -math.inf).rate == 1.0
    assert exceedance(st, math.inf).rate == 0.0
    assert run_trials(h0_cfg, math.inf).rate == 0.0


def test_sweep_matches_direct_count(h0_cfg):
    st = compute_statistics(h0_cfg).statistic
    thr = np.linspace(1.0, 2.5, 31)
    rates = sweep_rates(st, thr)
    for t, r in zip(thr, rates):
        assert r == np.count_nonzero(st > t) / st.size
    # an exact tie counts as not exceeding
    assert sweep_rates(st, [st[0]])[0] == np.count_nonzero(st > st[0]) / st.size


def test_rate_estimate():
    r = RateEstimate.from_count(30, 1000)
    assert r.rate == 0.03
    assert r.std_err == pytest.approx(math.sqrt(0.03 * 0.97 / 1000))
    assert math.isnan(RateEstimate.from_count(0, 0).rate)


def test_empty_run(gcs, grid, noise, geom):
    cfg = TrialConfig(0, 1, Hypothesis.H0, gcs, grid, noise, geom)
    assert compute_statistics(cfg).statistic.size == 0


def test_roc_monotone(h0_cfg, h1_cfg):
    thr = np.linspace(1.0, 3.0, 21)
    roc = roc_curve(h0_cfg, h1_cfg, thr)
    far = [f for f, _ in roc]
    sdr = [s for _, s in roc]
    assert far == sorted(far, reverse=True)
    assert sdr == sorted(sdr, reverse=True)


def test_roc_rejects_descending(h0_cfg, h1_cfg):
    with pytest.raises(DomainError):
        roc_curve(h0_cfg, h1_cfg, [2.0, 1.0])


def test_identical_attacker_on_diagonal(gcs, grid, noise, geom, gcs_profile):
    n = 4000
    h0 = TrialConfig(n, 9, Hypothesis.H0, gcs, grid, noise, geom)
    h1 = TrialConfig(n, 9, Hypothesis.H1, gcs, grid, noise, geom, ma_profile=gcs_profile)
    for far, sdr in roc_curve(h0, h1, np.linspace(1.05, 2.0, 10)):
        se = math.sqrt(max(far * (1 - far), 1e-4) * 2 / n)
        assert abs(far - sdr) <= 4 * se

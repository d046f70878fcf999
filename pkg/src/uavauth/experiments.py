"""Experiment recipes behind the CLI subcommands.

Each ``cmd_*`` function takes a :class:`Scenario` and returns the text it
emits (CSV or JSON), so outputs can be compared byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numba
import numpy as np
import scipy

from . import __version__
from .analytic import FarModel, build_sdr_model, far_ccdf, far_threshold, sdr_ccdf
from .array_channel import link_constants
from .detector import GcsKnowledge, authenticate
from .estimator import GridSpec
from .montecarlo import (
    TrialConfig,
    compute_statistics,
    draw_packets,
    sweep_rates,
)
from .scenario import Scenario, mw_to_dbm
from .signal_model import Hypothesis, NoiseParams, ReceivedVector

_SWEEP_COLUMN = {
    "theta1": "theta1_deg",
    "phi1": "phi1_deg",
    "lambda1_sq": "lambda1_sq",
    "p1": "p1_dbm",
}


def _fmt(x: float) -> str:
    if isinstance(x, str):
        return x
    return format(float(x), ".10g")


def metadata_line(command: str, sc: Scenario) -> str:
    return (
        f"# uavauth={__version__} numpy={np.__version__} scipy={scipy.__version__} "
        f"numba={numba.__version__} command={command} seed={sc.seed} "
        f"grid_step={sc.grid_step} grid_refine={str(sc.grid_refine).lower()} "
        f"trials={sc.trials} k_split={sc.k_split} sigma_sq={sc.sigma_sq}"
    )


def _csv(meta: list[str], header: list[str], rows) -> str:
    buf = io.StringIO()
    for m in meta:
        buf.write(m + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


class _Setup:
    """Objects shared by every recipe, derived once from the scenario."""

    def __init__(self, sc: Scenario):
        self.sc = sc
        self.geom = sc.geometry
        self.noise = NoiseParams(sc.sigma_sq)
        self.grid = GridSpec(sc.grid_step, sc.grid_refine)
        self.gcs = GcsKnowledge.build(sc.gcs_profile(), sc.sigma_sq, self.geom)
        self.far_model = FarModel(self.geom.n_elements, sc.k_split)
        self.psi = math.radians(sc.ma_psi)

    def h0_config(self, n: int) -> TrialConfig:
        return TrialConfig(
            n, self.sc.seed, Hypothesis.H0, self.gcs, self.grid, self.noise, self.geom
        )

    def h1_config(self, n: int, profile) -> TrialConfig:
        return TrialConfig(
            n, self.sc.seed, Hypothesis.H1, self.gcs, self.grid, self.noise, self.geom,
            ma_profile=profile, psi=self.psi,
        )


def threshold_table(sc: Scenario) -> list[tuple[float, float]]:
    model = FarModel(sc.geometry.n_elements, sc.k_split)
    return [(eta, far_threshold(eta, model)) for eta in sc.eta]


def cmd_threshold(sc: Scenario) -> str:
    return _csv([metadata_line("threshold", sc)], ["eta", "tau"], threshold_table(sc))


def tau_grid(sc: Scenario) -> np.ndarray:
    return np.linspace(sc.tau_min, sc.tau_max, sc.tau_points)


def roc_table(sc: Scenario) -> tuple[list[str], list[list]]:
    s = _Setup(sc)
    taus = tau_grid(sc)
    empirical = sc.trials > 0
    far_an = [far_ccdf(t, s.far_model) for t in taus]
    if empirical:
        far_emp = sweep_rates(compute_statistics(s.h0_config(sc.trials), sc.threads).statistic, taus)
    header = ["profile", "tau", "far_analytic"]
    header += ["far_empirical", "sdr_analytic", "sdr_empirical"] if empirical else ["sdr_analytic"]
    rows = []
    for name, prof in sc.roc_attackers():
        model = build_sdr_model(s.gcs, prof, s.psi, sc.sigma_sq, s.geom)
        sdr_an = [sdr_ccdf(t, model) for t in taus]
        if empirical:
            st = compute_statistics(s.h1_config(sc.trials, prof), sc.threads).statistic
            sdr_emp = sweep_rates(st, taus)
            for i, t in enumerate(taus):
                rows.append([name, t, far_an[i], far_emp[i], sdr_an[i], sdr_emp[i]])
        else:
            for i, t in enumerate(taus):
                rows.append([name, t, far_an[i], sdr_an[i]])
    return header, rows


def cmd_roc(sc: Scenario) -> str:
    header, rows = roc_table(sc)
    return _csv([metadata_line("roc", sc)], header, rows)


def _sweep_profile(sc: Scenario, var: str, value: float):
    key = {"theta1": "theta", "phi1": "phi", "lambda1_sq": "lambda_sq", "p1": "power"}[var]
    return sc.ma_profile(**{key: value})


def sweep_table(sc: Scenario) -> tuple[list[str], list[list], list[tuple[float, float]]]:
    s = _Setup(sc)
    thresholds = [(eta, far_threshold(eta, s.far_model)) for eta in sc.eta]
    empirical = sc.trials > 0
    header = [_SWEEP_COLUMN[sc.sweep_var]]
    for eta, _ in thresholds:
        if empirical:
            header.append(f"sdr_empirical_eta{_fmt(eta)}")
        header.append(f"sdr_analytic_eta{_fmt(eta)}")
    taus = [t for _, t in thresholds]
    rows = []
    for value in sc.sweep_points():
        prof = _sweep_profile(sc, sc.sweep_var, value)
        model = build_sdr_model(s.gcs, prof, s.psi, sc.sigma_sq, s.geom)
        an = [sdr_ccdf(t, model) for t in taus]
        if empirical:
            st = compute_statistics(s.h1_config(sc.trials, prof), sc.threads).statistic
            emp = sweep_rates(st, taus)
        label = mw_to_dbm(value) if sc.sweep_var == "p1" else value
        row = [label]
        for i in range(len(taus)):
            if empirical:
                row.append(emp[i])
            row.append(an[i])
        rows.append(row)
    return header, rows, thresholds


def cmd_sweep(sc: Scenario) -> str:
    header, rows, thresholds = sweep_table(sc)
    thr = " ".join(f"eta={_fmt(e)}:tau={_fmt(t)}" for e, t in thresholds)
    meta = [metadata_line(f"sweep:{sc.sweep_var}", sc), f"# thresholds {thr}"]
    return _csv(meta, header, rows)


def estimate_demo(sc: Scenario) -> dict:
    """True and estimated attacker parameters for trial 0 of the seeded H1 stream."""
    s = _Setup(sc)
    prof = sc.ma_profile()
    cfg = s.h1_config(1, prof)
    y_bar = draw_packets(cfg, 0, 1)[0]
    verdict = authenticate(
        ReceivedVector(y_bar, sc.sigma_sq), s.gcs, s.geom, s.grid, threshold=math.inf
    )
    est = verdict.estimates
    consts = link_constants(prof, sc.sigma_sq)
    return {
        "seed": sc.seed,
        "grid_step": sc.grid_step,
        "sigma_sq": sc.sigma_sq,
        "truth": {
            "omega": prof.direction.omega,
            "mu": prof.direction.mu,
            "x_sq": consts.x_amp**2,
            "lambda_sq": prof.rician_lambda_sq,
            "psi": s.psi % (2 * math.pi),
        },
        "estimate": {
            "omega": est.dir_hat.omega,
            "mu": est.dir_hat.mu,
            "x_sq": est.x_sq_hat,
            "lambda_sq": est.lambda_sq_hat,
            "psi": est.psi_hat,
            "xi_star": est.xi_star,
            "peak": est.peak,
            "low_confidence": est.low_confidence,
        },
        "direction_error": max(
            abs(est.dir_hat.omega - prof.direction.omega), abs(est.dir_hat.mu - prof.direction.mu)
        ),
        "statistic": verdict.statistic,
    }


def cmd_estimate_demo(sc: Scenario) -> str:
    return json.dumps(estimate_demo(sc), indent=2) + "\n"

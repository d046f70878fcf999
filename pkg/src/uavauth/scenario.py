"""Line-oriented ``key = value`` scenario files.

Angles take a ``deg`` or ``rad`` suffix (bare numbers are degrees), powers a
``mW`` or ``dBm`` suffix (bare numbers are mW), distances an optional ``m``.
Everything after ``#`` on a line is a comment. Unknown keys are rejected.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .array_channel import (
    AnglePair,
    ArrayGeometry,
    TerminalProfile,
    angles_to_cosines,
    distance_from_height,
)


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * math.log10(mw)


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QTY = re.compile(rf"^\s*({_NUM})\s*([A-Za-z°]*)\s*$")


def _quantity(text: str, kind: str) -> float:
    m = _QTY.match(text)
    if not m:
        raise ValueError(f"cannot parse {kind} value {text!r}")
    val, unit = float(m.group(1)), m.group(2).lower()
    if kind == "angle":
        if unit in ("", "deg", "°"):
            return val
        if unit == "rad":
            return math.degrees(val)
    elif kind == "power":
        if unit in ("", "mw"):
            return val
        if unit == "dbm":
            return dbm_to_mw(val)
    elif kind == "dbm":
        if unit in ("", "dbm", "db"):
            return val
    elif kind == "distance":
        if unit in ("", "m"):
            return val
    elif kind == "number":
        if unit == "":
            return val
    raise ValueError(f"unit {unit!r} not valid for a {kind}")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list(text: str, kind: str) -> tuple[float, ...]:
    items = [s for s in (p.strip() for p in text.split(",")) if s]
    return tuple(_quantity(s, kind) for s in items)


def _names(text: str) -> tuple[str, ...]:
    return tuple(s for s in (p.strip() for p in text.split(",")) if s)


# key -> (parser kind, attribute). Angles are stored in degrees, powers in mW.
_KEYS = {
    "m_half": "int", "n_y": "int",
    "sigma_sq": "power", "path_loss_exp": "number", "height": "distance",
    "gcs_theta": "angle", "gcs_phi": "angle", "gcs_power": "power",
    "gcs_lambda_sq": "number", "gcs_distance": "distance",
    "ma_theta": "angle", "ma_phi": "angle", "ma_power": "power",
    "ma_lambda_sq": "number", "ma_distance": "distance", "ma_psi": "angle",
    "roc_profiles": "names",
    "grid_step": "number", "grid_refine": "bool", "k_split": "int",
    "trials": "int", "seed": "int", "threads": "int",
    "eta": "numbers",
    "tau_min": "number", "tau_max": "number", "tau_points": "int",
    "sweep_var": "name", "sweep_start": "sweepq", "sweep_stop": "sweepq",
    "sweep_step": "sweepq", "sweep_values": "sweepqs",
}

SWEEP_VARS = ("theta1", "phi1", "lambda1_sq", "p1")
_SWEEP_KIND = {"theta1": "angle", "phi1": "angle", "lambda1_sq": "number", "p1": "power"}

# theta/phi ranges bracket the GCS direction; the p1 range is in dBm
SWEEP_DEFAULTS = {
    "theta1": (5.0, 25.0, 1.0),
    "phi1": (20.0, 40.0, 1.0),
    "lambda1_sq": (0.5, 1.0, 0.05),
    "p1": (10.0, 30.0, 2.0),
}


@dataclass(frozen=True)
class MaPreset:
    name: str
    theta: float
    phi: float
    lambda_sq: float
    power: float


# Attacker placements for ROC plots: small, moderate and larger angular
# offsets from the default GCS direction (15 deg, 30 deg).
MA_PRESETS = {
    "near": MaPreset("near", 16.0, 32.0, 0.80, 100.0),
    "mid": MaPreset("mid", 17.0, 33.0, 0.75, 100.0),
    "far": MaPreset("far", 18.0, 35.0, 0.70, 100.0),
}


@dataclass(frozen=True)
class Scenario:
    m_half: int = 6
    n_y: int = 12
    sigma_sq: float = 0.01
    path_loss_exp: float = 2.0
    height: float = 20.0
    gcs_theta: float = 15.0
    gcs_phi: float = 30.0
    gcs_power: float = 100.0
    gcs_lambda_sq: float = 0.8
    gcs_distance: float | None = None
    ma_theta: float | None = None
    ma_phi: float | None = None
    ma_power: float | None = None
    ma_lambda_sq: float | None = None
    ma_distance: float | None = None
    ma_psi: float = 0.0
    roc_profiles: tuple[str, ...] = ("near", "mid", "far")
    grid_step: float = 0.005
    grid_refine: bool = False
    k_split: int = 2
    trials: int = 20000
    seed: int = 1
    threads: int = 1
    eta: tuple[float, ...] = (0.02, 0.05, 0.1)
    tau_min: float = 1.0
    tau_max: float = 3.0
    tau_points: int = 41
    sweep_var: str = "theta1"
    sweep_start: float | None = None
    sweep_stop: float | None = None
    sweep_step: float | None = None
    sweep_values: tuple[float, ...] | None = None
    source: str = field(default="<defaults>", compare=False)

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.m_half, self.n_y)

    def _profile(self, theta, phi, power, lambda_sq, distance) -> TerminalProfile:
        ang = AnglePair.from_degrees(theta, phi)
        if distance is None:
            distance = distance_from_height(self.height, ang)
        return TerminalProfile(
            power=power, distance=distance, rician_lambda_sq=lambda_sq,
            direction=angles_to_cosines(ang), path_loss_exp=self.path_loss_exp,
        )

    def gcs_profile(self) -> TerminalProfile:
        return self._profile(
            self.gcs_theta, self.gcs_phi, self.gcs_power, self.gcs_lambda_sq, self.gcs_distance
        )

    def ma_params(self) -> dict:
        """Attacker parameters, falling back to the GCS values."""
        pick = lambda v, d: d if v is None else v  # noqa: E731
        return dict(
            theta=pick(self.ma_theta, self.gcs_theta),
            phi=pick(self.ma_phi, self.gcs_phi),
            power=pick(self.ma_power, self.gcs_power),
            lambda_sq=pick(self.ma_lambda_sq, self.gcs_lambda_sq),
            distance=self.ma_distance,
        )

    def ma_profile(self, **override) -> TerminalProfile:
        p = self.ma_params()
        p.update(override)
        return self._profile(p["theta"], p["phi"], p["power"], p["lambda_sq"], p["distance"])

    def roc_attackers(self) -> list[tuple[str, TerminalProfile]]:
        out = []
        for name in self.roc_profiles:
            if name == "custom":
                out.append(("custom", self.ma_profile()))
                continue
            pr = MA_PRESETS[name]
            out.append((name, self._profile(pr.theta, pr.phi, pr.power, pr.lambda_sq, None)))
        return out

    def sweep_points(self) -> tuple[float, ...]:
        if self.sweep_values is not None:
            pts = self.sweep_values
            return tuple(dbm_to_mw(x) for x in pts) if self.sweep_var == "p1" else pts
        dflt = SWEEP_DEFAULTS[self.sweep_var]
        start = self.sweep_start if self.sweep_start is not None else dflt[0]
        stop = self.sweep_stop if self.sweep_stop is not None else dflt[1]
        step = self.sweep_step if self.sweep_step is not None else dflt[2]
        if step <= 0 or stop < start:
            raise ScenarioError("sweep range must be ascending with a positive step")
        n = int(math.floor((stop - start) / step + 1e-9))
        pts = tuple(round(start + i * step, 12) for i in range(n + 1))
        if self.sweep_var == "p1":
            return tuple(dbm_to_mw(x) for x in pts)
        return pts

    def with_overrides(self, **kw) -> "Scenario":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


def _convert(key: str, raw: str, sweep_kind: str):
    kind = _KEYS[key]
    if kind == "int":
        v = _quantity(raw, "number")
        if v != int(v):
            raise ValueError(f"{key} must be an integer")
        return int(v)
    if kind == "bool":
        return _bool(raw)
    if kind == "names":
        return _names(raw)
    if kind == "name":
        return raw.strip()
    if kind == "numbers":
        return _list(raw, "number")
    if kind == "sweepq":
        # power ranges are stepped in dB
        return _quantity(raw, "dbm" if sweep_kind == "power" else sweep_kind)
    if kind == "sweepqs":
        return _list(raw, "dbm" if sweep_kind == "power" else sweep_kind)
    return _quantity(raw, kind)


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    entries: dict[str, tuple[int, str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ScenarioError(f"expected 'key = value', got {body!r}", lineno)
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in _KEYS:
            raise ScenarioError(f"unknown key {key!r}", lineno)
        if key in entries:
            raise ScenarioError(f"duplicate key {key!r}", lineno)
        entries[key] = (lineno, raw)

    sweep_var = entries.get("sweep_var", (0, Scenario.sweep_var))[1].strip()
    if sweep_var not in SWEEP_VARS:
        raise ScenarioError(
            f"unknown sweep_var {sweep_var!r}; expected one of {', '.join(SWEEP_VARS)}",
            entries.get("sweep_var", (None,))[0],
        )
    values = {}
    for key, (lineno, raw) in entries.items():
        try:
            values[key] = _convert(key, raw, _SWEEP_KIND[sweep_var])
        except ValueError as exc:
            raise ScenarioError(str(exc), lineno) from None
    try:
        sc = Scenario(source=source, **values)
        _validate(sc)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    return sc


def _validate(sc: Scenario) -> None:
    for name in sc.roc_profiles:
        if name != "custom" and name not in MA_PRESETS:
            raise ScenarioError(f"unknown roc profile {name!r}")
    if sc.trials < 0:
        raise ScenarioError("trials must be nonnegative")
    if sc.threads < 1:
        raise ScenarioError("threads must be at least 1")
    if sc.tau_points < 2 or sc.tau_max <= sc.tau_min:
        raise ScenarioError("tau grid needs tau_max > tau_min and at least two points")
    for e in sc.eta:
        if not 0 < e < 1:
            raise ScenarioError(f"eta values must lie in (0, 1), got {e}")
    # building the profiles checks their invariants
    sc.geometry
    sc.gcs_profile()
    sc.ma_profile()


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    return parse_scenario(p.read_text(), source=str(p))


def scenario_fields() -> list[str]:
    return [f.name for f in fields(Scenario) if f.name != "source"]

"""Scenario files: flat ``section.key = value`` documents turned into model objects."""
import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from models.drive import CouplingDrive, DriveProfile
from models.oscillator import FockTruncation, OscillatorPair, ThermalEnsemble
from shared.errors import ConfigError, ParameterDomainError

ROUTES = ("kubo", "perturbative", "spectral", "timedomain", "exact", "barton")
MAX_SWEEP_AXES = 2
REQUIRED = object()


def _float(text):
    return float(text)


def _beta(text):
    return math.inf if text.strip().lower() in ("inf", "infinity") else float(text)


def _int(text):
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text}")
    return int(value)


def _vector(text):
    parts = [float(part) for part in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected 3 comma-separated numbers, got {len(parts)}")
    return tuple(parts)


def _routes(text):
    routes = tuple(part.strip() for part in text.split(",") if part.strip())
    unknown = [route for route in routes if route not in ROUTES]
    if unknown:
        raise ValueError(f"unknown route(s) {', '.join(unknown)}; expected a subset of {', '.join(ROUTES)}")
    if not routes:
        raise ValueError("at least one route is required")
    return routes


def _positive(value):
    return None if value > 0 and math.isfinite(value) else "must be finite and > 0"


def _positive_or_inf(value):
    return None if value > 0 else "must be > 0 or inf"


def _unit_interval(value):
    return None if 0 < value < 1 else "must lie in (0, 1)"


def _tolerance(value):
    return None if 1e-14 < value < 1e-4 else "must lie in (1e-14, 1e-4)"


def _at_least_two(value):
    return None if value >= 2 else "must be >= 2"


def _odd_points(value):
    return None if value >= 5 and value % 2 == 1 else "must be an odd integer >= 5"


def _drive_kind(value):
    return None if value in ("ramp_damped", "sampled") else "must be ramp_damped or sampled"


# key: (parser, validator, default)
SCHEMA = {
    "pair.m1": (_float, _positive, 1.0),
    "pair.m2": (_float, _positive, 1.0),
    "pair.omega1": (_float, _positive, 1.0),
    "pair.omega2": (_float, _positive, 1.0),
    "pair.hbar": (_float, _positive, 1.0),
    "ensemble.beta": (_beta, _positive_or_inf, REQUIRED),
    "drive.kind": (str.strip, _drive_kind, "ramp_damped"),
    "drive.eta": (_float, _positive, None),
    "drive.samples": (str.strip, None, None),
    "drive.psi0": (_float, None, 0.0),
    "drive.grad_psi": (_vector, None, (1.0, 0.0, 0.0)),
    "drive.v": (_vector, None, (1.0, 0.0, 0.0)),
    "truncation.levels": (_int, _at_least_two, None),
    "truncation.tail_tolerance": (_float, _unit_interval, 1e-12),
    "exact.lambda": (_float, _positive, 1e-3),
    "exact.tolerance": (_float, _tolerance, 1e-10),
    "timedomain.tolerance": (_float, _positive, 1e-6),
    "detuning.half_width": (_float, _positive, None),
    "detuning.points": (_int, _odd_points, 2001),
    "routes": (_routes, None, ("perturbative", "spectral")),
    "output.dir": (str.strip, None, "output"),
}

SWEEPABLE = (
    "pair.m1", "pair.m2", "pair.omega1", "pair.omega2", "pair.hbar",
    "ensemble.beta", "drive.eta", "drive.psi0", "exact.lambda",
)


@dataclass(frozen=True)
class SweepAxis:
    param: str
    start: float
    stop: float
    points: int
    spacing: str = "linear"

    def values(self) -> np.ndarray:
        if self.spacing == "geometric":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class ScenarioConfig:
    values: Dict[str, object]
    sweeps: Tuple[SweepAxis, ...] = ()
    base_dir: str = field(default=".", compare=False)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def routes(self) -> Tuple[str, ...]:
        # run in the fixed column order whatever order the file lists them
        return tuple(route for route in ROUTES if route in self.values["routes"])

    @property
    def output_dir(self) -> str:
        return self.values["output.dir"]

    def updated(self, mapping: Dict[str, object]) -> "ScenarioConfig":
        values = dict(self.values)
        values.update(mapping)
        return ScenarioConfig(values, self.sweeps, self.base_dir)

    def sweep_points(self) -> List[Dict[str, float]]:
        """Sweep coordinates in row-major order (first axis outermost); one empty point if unswept."""
        if not self.sweeps:
            return [{}]
        names = [axis.param for axis in self.sweeps]
        grids = [axis.values() for axis in self.sweeps]
        return [dict(zip(names, map(float, combo))) for combo in itertools.product(*grids)]


def _parse_sweep(key, text, line, violations):
    parts = text.split()
    if len(parts) not in (4, 5):
        violations.append((line, key, "expected '<param> <start> <stop> <points> [linear|geometric]'"))
        return None
    param, spacing = parts[0], parts[4] if len(parts) == 5 else "linear"
    if param not in SWEEPABLE:
        violations.append((line, key, f"'{param}' is not a sweepable parameter"))
        return None
    if spacing not in ("linear", "geometric"):
        violations.append((line, key, f"spacing must be linear or geometric, got '{spacing}'"))
        return None
    try:
        parser, validator, _ = SCHEMA[param]
        start, stop, points = parser(parts[1]), parser(parts[2]), _int(parts[3])
    except ValueError as exc:
        violations.append((line, key, str(exc)))
        return None
    if points < 1:
        violations.append((line, key, "points must be >= 1"))
        return None
    for bound in (start, stop):
        problem = validator(bound) if validator else None
        if problem:
            violations.append((line, key, f"bound {bound} of {param} {problem}"))
            return None
    if spacing == "geometric" and (start == 0 or stop == 0 or (start > 0) != (stop > 0)):
        violations.append((line, key, "geometric spacing needs nonzero bounds of equal sign"))
        return None
    if not (math.isfinite(start) and math.isfinite(stop)):
        violations.append((line, key, "sweep bounds must be finite"))
        return None
    return SweepAxis(param, start, stop, points, spacing)


def parse_config(text: str, base_dir: str = ".") -> ScenarioConfig:
    violations = []
    values, seen, sweeps = {}, {}, []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            violations.append((line_no, line, "expected 'key = value'"))
            continue
        key, text_value = (part.strip() for part in line.split("=", 1))
        if key in seen:
            violations.append((line_no, key, f"duplicate key (first set on line {seen[key]})"))
            continue
        seen[key] = line_no
        if key.startswith("sweep."):
            axis = _parse_sweep(key, text_value, line_no, violations)
            if axis is not None:
                sweeps.append((line_no, axis))
            continue
        if key not in SCHEMA:
            violations.append((line_no, key, "unknown key"))
            continue
        parser, validator, _ = SCHEMA[key]
        try:
            value = parser(text_value)
        except ValueError as exc:
            violations.append((line_no, key, f"cannot parse '{text_value}': {exc}"))
            continue
        problem = validator(value) if validator else None
        if problem:
            violations.append((line_no, key, f"{key} {problem}, got {text_value}"))
            continue
        values[key] = value

    params = [axis.param for _, axis in sweeps]
    swept = set(params)
    for key, (_, _, default) in SCHEMA.items():
        if key in values:
            continue
        if default is REQUIRED:
            if key not in swept:
                violations.append((None, key, "missing required key"))
            values[key] = None
        else:
            values[key] = default

    if len(sweeps) > MAX_SWEEP_AXES:
        violations.append((sweeps[MAX_SWEEP_AXES][0], "sweep", f"at most {MAX_SWEEP_AXES} sweep axes"))
    if len(swept) != len(params):
        violations.append((None, "sweep", "the same parameter is swept twice"))
    # keys already reported above (bad value) are not reported again as missing
    if values.get("drive.kind") == "ramp_damped" and "drive.eta" not in seen and "drive.eta" not in swept:
        violations.append((None, "drive.eta", "required for drive.kind = ramp_damped"))
    if values.get("drive.kind") == "sampled" and "drive.samples" not in seen:
        violations.append((None, "drive.samples", "required for drive.kind = sampled"))

    if violations:
        raise ConfigError(violations)
    return ScenarioConfig(values, tuple(axis for _, axis in sweeps), base_dir)


def load_config(path: str) -> ScenarioConfig:
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


def build_pair(config: ScenarioConfig) -> OscillatorPair:
    return OscillatorPair(
        config["pair.m1"], config["pair.m2"], config["pair.omega1"], config["pair.omega2"], config["pair.hbar"]
    )


def build_ensemble(config: ScenarioConfig) -> ThermalEnsemble:
    return ThermalEnsemble(config["ensemble.beta"])


def build_drive(config: ScenarioConfig) -> Optional[CouplingDrive]:
    """The linearized coupling drive; None for sampled drives without an eta."""
    eta = config["drive.eta"]
    if eta is None:
        return None
    return CouplingDrive(config["drive.psi0"], config["drive.grad_psi"], config["drive.v"], eta)


def coupling_strength(config: ScenarioConfig) -> float:
    """g = v . grad psi, the scale of A = -g x1 x2."""
    return float(np.dot(config["drive.v"], config["drive.grad_psi"]))


def build_profile(config: ScenarioConfig) -> DriveProfile:
    kind = config["drive.kind"]
    if kind == "ramp_damped":
        return DriveProfile.ramp_damped(config["drive.eta"])
    elif kind == "sampled":
        path = config["drive.samples"]
        if not os.path.isabs(path):
            path = os.path.join(config.base_dir, path)
        try:
            data = pd.read_csv(path, sep=r"[\s,]+", engine="python", header=None, comment="#").to_numpy(float)
        except (OSError, ValueError) as exc:
            raise ParameterDomainError(f"{path}: cannot read drive samples: {exc}") from exc
        if data.ndim != 2 or data.shape[1] != 2:
            raise ParameterDomainError(f"{path}: expected two columns t, q")
        return DriveProfile.sampled(data[:, 0], data[:, 1])
    else:
        raise ParameterDomainError(f"Unsupported drive kind: {kind}. ")


def build_truncation(config: ScenarioConfig, pair: OscillatorPair, ensemble: ThermalEnsemble) -> FockTruncation:
    levels = config["truncation.levels"]
    tolerance = config["truncation.tail_tolerance"]
    if levels is None:
        return FockTruncation.for_ensemble(pair, ensemble, tolerance)
    return FockTruncation(levels, tolerance)

"""Route dispatch, sweeps and the equivalence / convergence reports."""
import itertools
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

import scenario
from models.drive import CouplingDrive, DriveProfile
from models.oscillator import FockTruncation, LevelSystem, OscillatorPair, ThermalEnsemble, product_coupling_operator
from shared.barton import BartonSetup, barton_energy
from shared.errors import CasimirError, ParameterDomainError, RouteError, error_code
from shared.kernel import detuning_integral, friction_force
from shared.log import log
from shared.perturbation import dissipated_energy_perturbative
from shared.propagator import PropagationConfig, exact_dissipation
from shared.spectral import dissipation_spectral, dissipation_timedomain

logger = logging.getLogger(__name__)

ROUTES = scenario.ROUTES
ROUTE_TOLERANCES = {
    "kubo": 1e-8,
    "perturbative": 1e-12,
    "spectral": 1e-12,
    "timedomain": 1e-6,
    "exact": 1e-2,
    "barton": 1e-12,
}
DIAGNOSTICS = ("levels", "tail_weight", "max_B", "pert_valid", "norm_drift", "timedomain_residual", "error_codes")
LEVEL_ROUTES = ("perturbative", "spectral", "timedomain", "exact")


@dataclass(frozen=True, eq=False)
class PointSetup:
    config: scenario.ScenarioConfig
    pair: OscillatorPair
    ensemble: ThermalEnsemble
    drive: Optional[CouplingDrive]
    profile: DriveProfile
    g: float
    truncation: FockTruncation
    system: LevelSystem


@dataclass(frozen=True)
class EquivalenceLine:
    pair: str
    max_rel_dev: float
    tolerance: float
    passed: bool

    def __str__(self):
        return f"{self.pair} {self.max_rel_dev:.3e} {self.tolerance:.0e} {'PASS' if self.passed else 'FAIL'}"


@dataclass(frozen=True, eq=False)
class ScenarioReport:
    results: pd.DataFrame
    equivalence: List[EquivalenceLine]

    @property
    def passed(self) -> bool:
        return all(line.passed for line in self.equivalence)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 2


def build_point(config: scenario.ScenarioConfig, levels: Optional[int] = None) -> PointSetup:
    pair = scenario.build_pair(config)
    ensemble = scenario.build_ensemble(config)
    drive = scenario.build_drive(config)
    profile = scenario.build_profile(config)
    g = scenario.coupling_strength(config)
    if levels is None:
        truncation = scenario.build_truncation(config, pair, ensemble)
    else:
        truncation = scenario.build_truncation(config.updated({"truncation.levels": levels}), pair, ensemble)
    system = product_coupling_operator(pair, truncation, strength=g)
    return PointSetup(config, pair, ensemble, drive, profile, g, truncation, system)


def _kubo(setup: PointSetup, diagnostics):
    if setup.drive is None or setup.profile.kind != "ramp_damped":
        raise RouteError("kubo route needs a ramp_damped drive")
    friction = friction_force(setup.pair, setup.ensemble, setup.drive)
    return -float(setup.drive.v @ friction.f_friction) / (4.0 * setup.drive.eta)


def _perturbative(setup: PointSetup, diagnostics):
    result = dissipated_energy_perturbative(setup.system, setup.ensemble, setup.profile, setup.pair.hbar)
    diagnostics["max_B"] = result.max_B
    diagnostics["pert_valid"] = result.valid
    return result.dE


def _spectral(setup: PointSetup, diagnostics):
    return dissipation_spectral(setup.system, setup.ensemble, setup.profile, setup.pair.hbar)


def _timedomain(setup: PointSetup, diagnostics):
    result = dissipation_timedomain(
        setup.system, setup.ensemble, setup.profile, setup.pair.hbar,
        tolerance=setup.config["timedomain.tolerance"],
    )
    diagnostics["timedomain_residual"] = result.residual
    return result.dE


def _exact(setup: PointSetup, diagnostics):
    lam = setup.config["exact.lambda"]
    config = PropagationConfig(lam=lam, local_tolerance=setup.config["exact.tolerance"])
    # +2 levels must leave dE_exact unchanged to 1e-8, else E_TRUNC
    levels = setup.truncation.n_levels_per_oscillator + 2
    larger = product_coupling_operator(
        setup.pair, FockTruncation(levels, setup.truncation.tail_tolerance), strength=setup.g
    )
    result = exact_dissipation(
        setup.system, setup.ensemble, setup.profile, config, setup.pair.hbar, check_system=larger
    )
    diagnostics["norm_drift"] = result.norm_drift
    return result.dE_exact / lam**2


def _barton(setup: PointSetup, diagnostics):
    pair = setup.pair
    if not setup.ensemble.is_zero_temperature:
        raise RouteError("barton route is a T = 0 treatment")
    if pair.omega1 != pair.omega2 or pair.m1 != pair.m2:
        raise RouteError("barton route needs equal masses and frequencies")
    return barton_energy(BartonSetup(pair.omega1, pair.m1, setup.profile, pair.hbar, setup.g))


ROUTE_FUNCTIONS = {
    "kubo": _kubo,
    "perturbative": _perturbative,
    "spectral": _spectral,
    "timedomain": _timedomain,
    "exact": _exact,
    "barton": _barton,
}


def route_value(route: str, setup: PointSetup, diagnostics: Optional[dict] = None) -> float:
    if route not in ROUTE_FUNCTIONS:
        raise ParameterDomainError(f"Unsupported route: {route}. ")
    return ROUTE_FUNCTIONS[route](setup, {} if diagnostics is None else diagnostics)


def run_point(config: scenario.ScenarioConfig, coordinates: dict) -> dict:
    row = dict(coordinates)
    diagnostics = {name: math.nan for name in DIAGNOSTICS}
    errors = []
    try:
        setup = build_point(config.updated(coordinates))
    except CasimirError as exc:
        logger.warning(f"point {coordinates}: {exc}")
        row.update({route: math.nan for route in config.routes})
        diagnostics["error_codes"] = f"setup:{error_code(exc)}"
        row.update(diagnostics)
        return row

    diagnostics["levels"] = setup.truncation.n_levels_per_oscillator
    diagnostics["tail_weight"] = setup.truncation.tail_weight(setup.pair, setup.ensemble)
    if diagnostics["tail_weight"] >= setup.truncation.tail_tolerance:
        errors.append("truncation:E_TRUNC")
    for route in config.routes:
        try:
            row[route] = route_value(route, setup, diagnostics)
        except CasimirError as exc:
            logger.warning(f"point {coordinates}, route {route}: {exc}")
            row[route] = math.nan
            errors.append(f"{route}:{error_code(exc)}")
    diagnostics["error_codes"] = ";".join(errors)
    row.update(diagnostics)
    return row


def relative_deviation(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def equivalence_report(results: pd.DataFrame, routes) -> List[EquivalenceLine]:
    lines = []
    codes = results["error_codes"].fillna("").astype(str)
    for first, second in itertools.combinations(routes, 2):
        tolerance = max(ROUTE_TOLERANCES[first], ROUTE_TOLERANCES[second])
        deviations, failed = [], False
        for (_, row), row_codes in zip(results.iterrows(), codes):
            not_applicable = f"{first}:E_ROUTE" in row_codes or f"{second}:E_ROUTE" in row_codes
            if not_applicable:
                continue
            a, b = row[first], row[second]
            if not (np.isfinite(a) and np.isfinite(b)):
                failed = True
                continue
            deviations.append(relative_deviation(a, b))
        worst = max(deviations) if deviations else math.nan
        passed = not failed and (not deviations or worst <= tolerance)
        lines.append(EquivalenceLine(f"{first}:{second}", worst, tolerance, passed))
    return lines


def write_csv(frame: pd.DataFrame, path: str):
    frame.to_csv(path, index=False, float_format="%.16e", na_rep="nan", lineterminator="\n")


def run_scenario(
    config: scenario.ScenarioConfig,
    out_dir: Optional[str] = None,
    threads: int = 1,
    writer=None,
    progress: bool = False,
) -> ScenarioReport:
    """Evaluate every sweep point, write results.csv and equivalence.txt."""
    out_dir = config.output_dir if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    points = config.sweep_points()
    routes = config.routes
    columns = [axis.param for axis in config.sweeps] + list(routes) + list(DIAGNOSTICS)

    rows = []
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        results = executor.map(lambda point: run_point(config, point), points)
        with tqdm(total=len(points), desc="Sweep", disable=not progress) as t:
            for step, row in enumerate(results):
                rows.append(row)
                values = {route: row[route] for route in routes}
                log(step, **points[step], **values)
                if writer is not None:
                    for route, value in values.items():
                        if np.isfinite(value):
                            writer.add_scalar(f"dE/{route}", value, step)
                t.set_postfix(values)
                t.update(1)

    frame = pd.DataFrame(rows, columns=columns)
    write_csv(frame, os.path.join(out_dir, "results.csv"))
    equivalence = equivalence_report(frame, routes)
    with open(os.path.join(out_dir, "equivalence.txt"), "w", encoding="utf-8", newline="\n") as handle:
        for line in equivalence:
            handle.write(f"{line}\n")
    return ScenarioReport(frame, equivalence)


def _status(ratio: float, change: float, scale: float, floor: float) -> str:
    if not np.isfinite(ratio) or change <= floor * abs(scale):
        return "PASS"
    return "PASS" if ratio <= 1.0 else "FAIL"


def convergence_report(config: scenario.ScenarioConfig, mode: str, steps: int) -> pd.DataFrame:
    """Observable against refinement level; FAIL rows mark growing successive errors."""
    if steps < 2:
        raise ParameterDomainError(f"steps must be >= 2, got {steps}")
    config = config.updated(config.sweep_points()[0])
    setup = build_point(config)
    rows = []
    if mode == "halve_eta":
        if setup.drive is None:
            raise RouteError("halve_eta needs drive.eta")
        for k in range(steps):
            drive = setup.drive.with_eta(setup.drive.eta / 2**k)
            weight = detuning_integral(
                setup.pair, setup.ensemble, drive, config["detuning.half_width"], config["detuning.points"]
            )
            rows.append([k, drive.eta, weight.value, abs(weight.value - weight.reference)])
    elif mode == "add_levels":
        route = next((r for r in config.routes if r in LEVEL_ROUTES), "perturbative")
        previous = None
        for k in range(steps):
            levels = setup.truncation.n_levels_per_oscillator + 2 * k
            value = route_value(route, build_point(config, levels))
            change = math.nan if previous is None else abs(value - previous)
            rows.append([k, levels, value, change])
            previous = value
    elif mode == "halve_tolerance":
        previous = None
        for k in range(steps):
            tolerance = config["exact.tolerance"] / 2**k
            if not tolerance > 1e-14:
                raise ParameterDomainError(f"{steps} halvings push exact.tolerance below 1e-14")
            value = route_value("exact", build_point(config.updated({"exact.tolerance": tolerance})))
            change = math.nan if previous is None else abs(value - previous)
            rows.append([k, tolerance, value, change])
            previous = value
    else:
        raise ParameterDomainError(f"Unsupported convergence mode: {mode}. ")

    table = pd.DataFrame(rows, columns=["step", "refinement", "observable", "error"])
    table["ratio"] = table["error"] / table["error"].shift(1)
    floor = 1e-10 if mode == "add_levels" else 1e-14
    table["status"] = [
        _status(ratio, error, observable, floor)
        for ratio, error, observable in zip(table["ratio"], table["error"], table["observable"])
    ]
    table.attrs["mode"] = mode
    return table

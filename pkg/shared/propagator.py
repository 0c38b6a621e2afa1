"""Exact dynamics of H(t) = H0 - lam A (q(t) + psi0) in a truncated level space.

Amplitudes are propagated in the interaction picture, c = exp(i H0 t / hbar) psi,

    dc/dt = (i/hbar) lam f(t) U(t) A U(t)^* c,   U(t) = diag(exp(i E t / hbar)),

with all thermally relevant initial eigenstates stacked as columns of a single
matrix ODE. Unitarity is monitored, never enforced.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from models.drive import DriveProfile
from models.oscillator import LevelSystem, ThermalEnsemble, boltzmann_weights
from shared.errors import ConvergenceError, ParameterDomainError, PropagationError, TruncationError
from shared.perturbation import dissipated_energy_perturbative

logger = logging.getLogger(__name__)

NORM_BUDGET = 1e-9
MIN_POPULATION = 1e-14
MONITOR_POINTS = 50


@dataclass(frozen=True)
class PropagationConfig:
    lam: float = 1e-3
    t_start: Optional[float] = None
    t_end: Optional[float] = None
    initial_step: Optional[float] = None
    local_tolerance: float = 1e-10
    include_static: bool = False
    static_coupling: float = 0.0

    def __post_init__(self):
        if not (self.lam >= 0) or not math.isfinite(self.lam):
            raise ParameterDomainError(f"lambda must be finite and >= 0, got {self.lam}")
        if not (1e-14 < self.local_tolerance < 1e-4):
            raise ParameterDomainError(
                f"local_tolerance must lie in (1e-14, 1e-4), got {self.local_tolerance}"
            )
        if self.t_start is not None and self.t_end is not None and not self.t_end > self.t_start:
            raise ParameterDomainError(f"t_end={self.t_end} must exceed t_start={self.t_start}")

    def span(self, profile: DriveProfile):
        t0 = profile.t_start if self.t_start is None else self.t_start
        t1 = profile.decay_time if self.t_end is None else self.t_end
        if not t1 > t0:
            raise ParameterDomainError(f"t_end={t1} must exceed t_start={t0}")
        return t0, t1

    def with_lambda(self, lam: float) -> "PropagationConfig":
        return PropagationConfig(
            lam, self.t_start, self.t_end, self.initial_step, self.local_tolerance,
            self.include_static, self.static_coupling,
        )

    def with_tolerance(self, local_tolerance: float) -> "PropagationConfig":
        return PropagationConfig(
            self.lam, self.t_start, self.t_end, self.initial_step, local_tolerance,
            self.include_static, self.static_coupling,
        )


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    # interaction-picture amplitudes, one column per initial eigenstate
    final_amplitudes: np.ndarray
    initial_indices: np.ndarray
    norm_drift: float
    dE_exact: float
    n_evaluations: int

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.final_amplitudes) ** 2


def _propagate(system: LevelSystem, profile: DriveProfile, config: PropagationConfig, indices, hbar):
    n, k = system.dimension, len(indices)
    t0, t1 = config.span(profile)
    c0 = np.zeros((n, k), dtype=complex)
    c0[indices, np.arange(k)] = 1.0
    if config.lam == 0.0:
        return c0, 0.0, 0

    energies = system.energies - system.energies.min()
    coupling = system.coupling.astype(complex)
    static = config.static_coupling if config.include_static else 0.0

    def rhs(t, flat):
        c = flat.reshape(n, k)
        u = np.exp(1j * energies * t / hbar)
        strength = config.lam * (float(profile.q(np.asarray(t))) + static)
        return ((1j / hbar) * strength * (u[:, None] * (coupling @ (u.conj()[:, None] * c)))).ravel()

    t_eval = np.linspace(t0, t1, MONITOR_POINTS)
    options = dict(method="DOP853", rtol=config.local_tolerance, atol=config.local_tolerance * 1e-3)
    if config.initial_step is not None:
        options["first_step"] = config.initial_step
    sol = solve_ivp(rhs, (t0, t1), c0.ravel(), t_eval=t_eval, **options)
    if not sol.success:
        raise PropagationError(f"propagation stopped at t={sol.t[-1] if sol.t.size else t0}: {sol.message}")

    states = sol.y.reshape(n, k, -1)
    drift = float(np.max(np.abs(np.linalg.norm(states, axis=0) - 1.0)))
    if drift > NORM_BUDGET:
        raise PropagationError(
            f"norm drift {drift:.2e} exceeds {NORM_BUDGET:.0e} at local_tolerance "
            f"{config.local_tolerance:.0e} after {sol.nfev} evaluations"
        )
    logger.debug(f"propagated {k} states over [{t0}, {t1}]: {sol.nfev} evaluations, drift {drift:.1e}")
    return states[:, :, -1], drift, sol.nfev


def evolve_state(
    system: LevelSystem,
    profile: DriveProfile,
    config: PropagationConfig,
    initial_index: int,
    hbar: float = 1.0,
) -> np.ndarray:
    """Schroedinger-picture amplitudes at t_end, starting from eigenstate ``initial_index``."""
    if not 0 <= initial_index < system.dimension:
        raise ParameterDomainError(f"initial_index {initial_index} outside 0..{system.dimension - 1}")
    c, _, _ = _propagate(system, profile, config, [initial_index], hbar)
    _, t1 = config.span(profile)
    return np.exp(-1j * system.energies * t1 / hbar) * c[:, 0]


def _dissipation(system, ensemble, profile, config, hbar):
    weights = boltzmann_weights(ensemble, system.energies)
    indices = np.flatnonzero(weights.probabilities >= MIN_POPULATION)
    c, drift, nfev = _propagate(system, profile, config, indices, hbar)
    gain = system.energies[:, None] - system.energies[indices][None, :]
    per_state = np.sum(np.abs(c) ** 2 * gain, axis=0)
    dE = float(np.sum(weights.probabilities[indices] * per_state))
    return EvolutionResult(c, indices, drift, dE, nfev)


def exact_dissipation(
    system: LevelSystem,
    ensemble: ThermalEnsemble,
    profile: DriveProfile,
    config: PropagationConfig,
    hbar: float = 1.0,
    check_system: Optional[LevelSystem] = None,
    truncation_rtol: float = 1e-8,
) -> EvolutionResult:
    """Thermal average of <H0> gained by each initial eigenstate (phases dropped)."""
    result = _dissipation(system, ensemble, profile, config, hbar)
    if check_system is not None:
        reference = _dissipation(check_system, ensemble, profile, config, hbar).dE_exact
        if abs(result.dE_exact - reference) > truncation_rtol * abs(reference):
            raise TruncationError(
                f"dE changes from {result.dE_exact!r} to {reference!r} with a larger truncation",
                value=result.dE_exact,
                reference=reference,
            )
    return result


def quadratic_scaling_check(
    system: LevelSystem,
    ensemble: ThermalEnsemble,
    profile: DriveProfile,
    lambda_list,
    config: Optional[PropagationConfig] = None,
    hbar: float = 1.0,
    rtol: float = 0.01,
) -> pd.DataFrame:
    """Table of dE_exact(lam)/lam^2 against the unit-coupling perturbative dE."""
    lambdas = [float(lam) for lam in lambda_list]
    if len(lambdas) < 3:
        raise ParameterDomainError(f"need at least 3 lambda values, got {len(lambdas)}")
    if any(not lam > 0 for lam in lambdas):
        raise ParameterDomainError("lambda values must be > 0")
    if any(a <= b for a, b in zip(lambdas, lambdas[1:])):
        raise ParameterDomainError("lambda values must be strictly descending")
    config = PropagationConfig() if config is None else config
    reference = dissipated_energy_perturbative(system, ensemble, profile, hbar).dE_symmetric

    rows = []
    for lam in lambdas:
        result = exact_dissipation(system, ensemble, profile, config.with_lambda(lam), hbar)
        rows.append([lam, result.dE_exact, result.dE_exact / lam**2, result.norm_drift])
    table = pd.DataFrame(rows, columns=["lam", "dE_exact", "ratio", "norm_drift"])
    table["relative_change"] = table["ratio"].pct_change().abs()
    table["deviation"] = (table["ratio"] - reference).abs() / abs(reference)
    table.attrs["reference"] = reference

    last_change = table["relative_change"].iloc[-1]
    if not (last_change < rtol and table["deviation"].iloc[-1] < rtol):
        raise ConvergenceError(
            f"dE/lam^2 not converged: last change {last_change:.3e}, "
            f"deviation from perturbative {table['deviation'].iloc[-1]:.3e}",
            table=table,
        )
    return table

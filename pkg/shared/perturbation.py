"""First-order perturbation theory for a level system driven by -A q(t)."""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from models.drive import DriveProfile
from models.oscillator import LevelSystem, ThermalEnsemble, boltzmann_weights, sinh_weight_matrix
from shared.errors import ConsistencyError, ParameterDomainError
from shared.quadrature import checked_quad

logger = logging.getLogger(__name__)

VALIDITY_THRESHOLD = 0.1
FORM_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class TransitionTable:
    b: np.ndarray
    B: np.ndarray
    omega: np.ndarray

    @property
    def max_offdiagonal(self) -> float:
        off = self.B.copy()
        np.fill_diagonal(off, 0.0)
        return float(off.max(initial=0.0))


@dataclass(frozen=True, eq=False)
class PopulationVector:
    P: np.ndarray
    P1: np.ndarray
    max_B: float
    valid: bool


@dataclass(frozen=True, eq=False)
class PerturbativeResult:
    dE: float
    dE_symmetric: float
    populations: PopulationVector
    table: TransitionTable
    degeneracy_note: Optional[str] = None

    @property
    def valid(self) -> bool:
        return self.populations.valid

    @property
    def max_B(self) -> float:
        return self.populations.max_B


@dataclass(frozen=True)
class DriveEnergyIntegrals:
    q_dot_squared: float
    q_dot_q: float
    q_dot_squared_error: float
    q_dot_q_error: float


def fourier_of_drive(profile: DriveProfile, omega):
    value = profile.qhat(omega)
    return complex(value) if np.ndim(value) == 0 else value


def qhat_on_support(system: LevelSystem, profile: DriveProfile, omega: np.ndarray) -> np.ndarray:
    """q-hat(-omega_nm) wherever A_nm != 0, each distinct frequency evaluated once."""
    qhat = np.zeros(omega.shape, dtype=complex)
    support = system.coupling != 0
    if not support.any():
        return qhat
    frequencies, inverse = np.unique(-omega[support], return_inverse=True)
    qhat[support] = profile.qhat(frequencies)[inverse.ravel()]
    return qhat


def transition_amplitudes(system: LevelSystem, profile: DriveProfile, hbar: float = 1.0) -> TransitionTable:
    """b_nm = -(1/(i hbar)) A_nm q-hat(-omega_nm), B_nm = |b_nm|^2."""
    omega = system.omega_matrix(hbar)
    b = (1j / hbar) * system.coupling * qhat_on_support(system, profile, omega)
    return TransitionTable(b=b, B=np.abs(b) ** 2, omega=omega)


def perturbed_populations(
    P, table: TransitionTable, validity_threshold: float = VALIDITY_THRESHOLD
) -> PopulationVector:
    P = np.asarray(P, dtype=float)
    if P.shape != table.B.shape[:1]:
        raise ParameterDomainError(f"{P.size} populations for {table.B.shape[0]} levels")
    if abs(P.sum() - 1.0) > 1e-12:
        raise ParameterDomainError(f"populations must sum to 1, got {P.sum()!r}")
    # transfer[n, m] = (P_m - P_n) B_nm, antisymmetric for symmetric B
    transfer = (P[None, :] - P[:, None]) * table.B
    P1 = P + transfer.sum(axis=1)
    max_B = table.max_offdiagonal
    valid = max_B <= validity_threshold
    if not valid:
        logger.warning(f"max B = {max_B:.3g} > {validity_threshold}: first-order populations suspect")
    return PopulationVector(P, P1, max_B, valid)


def dissipated_energy_perturbative(
    system: LevelSystem, ensemble: ThermalEnsemble, profile: DriveProfile, hbar: float = 1.0
) -> PerturbativeResult:
    weights = boltzmann_weights(ensemble, system.energies)
    table = transition_amplitudes(system, profile, hbar)
    populations = perturbed_populations(weights.probabilities, table)

    delta = system.energies[:, None] - system.energies[None, :]
    terms = delta * weights.probabilities[None, :] * table.B
    dE = float(np.sum(terms))
    dE_symmetric = float(np.sum(delta * sinh_weight_matrix(ensemble, system.energies) * table.B))
    scale = float(np.sum(np.abs(terms)))
    if abs(dE - dE_symmetric) > FORM_RTOL * max(scale, abs(dE_symmetric)):
        raise ConsistencyError(
            f"population-change energy {dE!r} disagrees with symmetric form {dE_symmetric!r}"
        )

    note = None
    if ensemble.is_zero_temperature and weights.ground_degeneracy > 1:
        note = f"{weights.ground_degeneracy}-fold degenerate ground level, uniform weights"
        logger.info(note)
    return PerturbativeResult(dE, dE_symmetric, populations, table, note)


def drive_energy_integrals(profile: DriveProfile, t_max: Optional[float] = None) -> DriveEnergyIntegrals:
    """int q_dot^2 dt and int q_dot q dt over the drive's support."""
    t_end = profile.decay_time if t_max is None else float(t_max)

    def q_dot_squared(t):
        return float(profile.q_dot(np.asarray(t))) ** 2

    def q_dot_q(t):
        t = np.asarray(t)
        return float(profile.q_dot(t)) * float(profile.q(t))

    kwargs = dict(epsabs=0.0, epsrel=1e-13, limit=500)
    sq, sq_err = checked_quad(q_dot_squared, profile.t_start, t_end, **kwargs)
    cross, cross_err = checked_quad(
        q_dot_q, profile.t_start, t_end, epsabs=1e-14 * sq * t_end, epsrel=1e-13, limit=500
    )
    return DriveEnergyIntegrals(sq, cross, sq_err, cross_err)

"""Spectral (linear-response) route to the dissipated energy.

phi_AA(t) = (1/(i hbar)) sum_nm M_nm (exp(-i w_nm t) - exp(i w_nm t)) with
M_nm = -(1/Z) exp(-beta(E_n+E_m)/2) sinh(beta Delta_nm/2) |A_nm|^2, evaluated as
(P_n - P_m)|A_nm|^2 / 2 so beta -> inf never overflows.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from models.drive import CouplingDrive, DriveProfile
from models.oscillator import (
    FockTruncation,
    LevelSystem,
    OscillatorPair,
    ThermalEnsemble,
    boltzmann_weights,
    channel_mask,
    product_coupling_operator,
    sinh_weight_matrix,
)
from shared.errors import ConsistencyError, ParameterDomainError, QuadratureError
from shared.kernel import detuning_integral
from shared.perturbation import dissipated_energy_perturbative, drive_energy_integrals, qhat_on_support
from shared.quadrature import integrate_nodes, lorentzian_nodes

logger = logging.getLogger(__name__)

DECAY_FRACTION = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralResponse:
    M: np.ndarray
    omega: np.ndarray
    Z: float
    hbar: float = 1.0

    def response(self, t):
        """phi_AA(t) from the literal exponential sum (complex dtype)."""
        t = np.asarray(t, dtype=float)[..., None, None]
        phase = self.omega * t
        total = np.sum(self.M * (np.exp(-1j * phase) - np.exp(1j * phase)), axis=(-2, -1))
        return total / (1j * self.hbar)

    def phi(self, t):
        t = np.asarray(t, dtype=float)[..., None, None]
        return -(2.0 / self.hbar) * np.sum(self.M * np.sin(self.omega * t), axis=(-2, -1))

    def positive_frequency_weights(self, rtol: float = 1e-12):
        """phi_AA(t) = sum_k w_k sin(omega_k t) over distinct omega_k > 0."""
        mask = (self.omega > 0) & (self.M != 0)
        if not mask.any():
            return np.zeros(0), np.zeros(0)
        freqs = self.omega[mask]
        weights = -(4.0 / self.hbar) * self.M[mask]
        order = np.argsort(freqs, kind="stable")
        freqs, weights = freqs[order], weights[order]
        starts = np.flatnonzero(np.r_[True, np.diff(freqs) > rtol * freqs[-1]])
        return freqs[starts], np.add.reduceat(weights, starts)


@dataclass(frozen=True)
class TimeDomainResult:
    dE: float
    residual: float
    t_max: float
    n_frequencies: int
    n_steps: int


@dataclass(frozen=True, eq=False)
class ResonantClosedForm:
    delta_weight_dE: float
    q_dot_squared: float
    q_dot_q: float
    drive_energy_dE: float
    detuning_force: np.ndarray
    # T = 0 sum-channel dissipation of the abrupt switch-on, finite at every eta
    zero_temperature_remnant: float


@dataclass(frozen=True, eq=False)
class DetuningDissipation:
    dE: float
    eta: float
    half_width: float
    detunings: np.ndarray
    values: np.ndarray
    levels: np.ndarray


def spectral_response(system: LevelSystem, ensemble: ThermalEnsemble, hbar: float = 1.0) -> SpectralResponse:
    weights = boltzmann_weights(ensemble, system.energies)
    M = -sinh_weight_matrix(ensemble, system.energies) * np.abs(system.coupling) ** 2
    return SpectralResponse(M=M, omega=system.omega_matrix(hbar), Z=weights.partition_function, hbar=hbar)


def dissipation_spectral(
    system: LevelSystem, ensemble: ThermalEnsemble, profile: DriveProfile, hbar: float = 1.0
) -> float:
    """dE = -(1/hbar) sum_nm M_nm w_nm |q-hat(w_nm)|^2."""
    response = spectral_response(system, ensemble, hbar)
    qhat = qhat_on_support(system, profile, response.omega)
    return float(-np.sum(response.M * response.omega * np.abs(qhat) ** 2) / hbar)


def _check_decayed(profile: DriveProfile, t_max: float):
    t = np.linspace(profile.t_start, t_max, 4001)
    peak = float(np.max(np.abs(profile.q(t))))
    tail = abs(float(profile.q(np.asarray(t_max))))
    if tail > DECAY_FRACTION * peak:
        raise ParameterDomainError(
            f"t_max={t_max} too small: |q(t_max)|={tail:.3e} vs peak {peak:.3e}"
        )


def _integrate_dissipation(frequencies, weights, profile, t_max, rtol):
    """Nested integral -int q_dot(t) int phi(t - t') q(t') dt' dt as an ODE.

    y_k(t) = int exp(i w_k (t - t')) q(t') dt' obeys y_k' = i w_k y_k + q(t).
    """
    n = frequencies.size
    rotation = 1j * frequencies

    def rhs(t, state):
        q = float(profile.q(np.asarray(t)))
        y = state[:n]
        conv = float(weights @ y.imag)
        out = np.empty_like(state)
        out[:n] = rotation * y + q
        out[n] = -float(profile.q_dot(np.asarray(t))) * conv
        return out

    y0 = np.zeros(n + 1, dtype=complex)
    sol = solve_ivp(
        rhs, (profile.t_start, t_max), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-4
    )
    if not sol.success:
        raise QuadratureError(f"time-domain integration failed: {sol.message}", residual=math.inf)
    return float(sol.y[n, -1].real), sol.t.size


def dissipation_timedomain(
    system: LevelSystem,
    ensemble: ThermalEnsemble,
    profile: DriveProfile,
    hbar: float = 1.0,
    t_max: Optional[float] = None,
    tolerance: float = 1e-6,
) -> TimeDomainResult:
    t_max = profile.decay_time if t_max is None else float(t_max)
    if not t_max > profile.t_start:
        raise ParameterDomainError(f"t_max={t_max} must exceed the drive start {profile.t_start}")
    _check_decayed(profile, t_max)
    frequencies, weights = spectral_response(system, ensemble, hbar).positive_frequency_weights()
    if frequencies.size == 0:
        return TimeDomainResult(0.0, 0.0, t_max, 0, 0)
    rtol = min(1e-10, tolerance * 1e-4)
    dE, n_steps = _integrate_dissipation(frequencies, weights, profile, t_max, rtol)
    refined, _ = _integrate_dissipation(frequencies, weights, profile, t_max, rtol * 0.01)
    residual = abs(refined - dE)
    logger.debug(f"time-domain dE={refined!r} residual={residual:.2e} steps={n_steps}")
    if residual > tolerance * max(abs(refined), 1e-300):
        raise QuadratureError(
            f"time-domain dE not converged to {tolerance:.0e}: residual {residual:.3e}", residual=residual
        )
    return TimeDomainResult(refined, residual, t_max, frequencies.size, n_steps)


def resonant_closed_form(
    pair: OscillatorPair,
    ensemble: ThermalEnsemble,
    drive: CouplingDrive,
    half_width: Optional[float] = None,
    n_points: int = 2001,
) -> ResonantClosedForm:
    """Delta-weight dissipation and the dE = -v . F_f / (4 eta) relation for q = t exp(-eta t)."""
    eta, hbar = drive.eta, pair.hbar
    if ensemble.is_zero_temperature:
        weight = 0.0
    else:
        x = 0.5 * ensemble.beta * hbar * pair.omega1
        inv_sinh_sq = 4.0 * math.exp(-2 * x) / math.expm1(-2 * x) ** 2
        D_resonant = hbar / (2.0 * pair.m1 * pair.m2 * pair.omega1**2)
        gamma_sq = 0.5 * D_resonant * hbar * drive.g**2
        weight = math.pi * ensemble.beta * gamma_sq * inv_sinh_sq / (8.0 * eta)

    integrals = drive_energy_integrals(drive.profile())
    if abs(integrals.q_dot_squared - 0.25 / eta) > 1e-12 * (0.25 / eta):
        raise ConsistencyError(f"int q_dot^2 = {integrals.q_dot_squared!r}, expected {0.25 / eta!r}")

    if ensemble.is_zero_temperature:
        force = np.zeros(3)
    else:
        force = detuning_integral(pair, ensemble, drive, half_width, n_points).force
    drive_energy_dE = -float(drive.v @ force) / (4.0 * eta)

    big = pair.omega1 + pair.omega2
    remnant = drive.g**2 * pair.D * big / (2.0 * (eta**2 + big**2) ** 2)
    return ResonantClosedForm(
        weight, integrals.q_dot_squared, integrals.q_dot_q, drive_energy_dE, force, remnant
    )


def detuning_sweep_dissipation(
    pair: OscillatorPair,
    ensemble: ThermalEnsemble,
    drive: CouplingDrive,
    half_width: Optional[float] = None,
    n_points: int = 401,
    channel: str = "exchange",
    tail_tolerance: float = 1e-6,
) -> DetuningDissipation:
    """int dE_pert d(omega1 - omega2) on the Lorentzian-adapted grid used by detuning_integral."""
    half_width = 0.5 * pair.omega1 if half_width is None else float(half_width)
    if half_width >= pair.omega1:
        raise ParameterDomainError(
            f"detuning half width {half_width} must stay below omega1={pair.omega1}"
        )
    x, theta, jacobian = lorentzian_nodes(half_width, drive.eta, n_points)
    profile = drive.profile()
    values = np.empty(x.size)
    levels = np.empty(x.size, dtype=int)
    for i, detuning in enumerate(x):
        detuned = pair.with_omega2(pair.omega1 - detuning)
        trunc = FockTruncation.for_ensemble(detuned, ensemble, tail_tolerance)
        system = product_coupling_operator(detuned, trunc, strength=drive.g)
        system = system.restricted(channel_mask(system, channel))
        values[i] = dissipated_energy_perturbative(system, ensemble, profile, pair.hbar).dE_symmetric
        levels[i] = trunc.n_levels_per_oscillator
    dE = integrate_nodes(values, theta, jacobian)
    logger.debug(f"detuning sweep eta={drive.eta}: dE={dE!r}, up to {levels.max()} levels")
    return DetuningDissipation(dE, drive.eta, half_width, x, values, levels)

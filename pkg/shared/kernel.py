"""Kubo-route friction for two moving oscillators at finite regularization eta.

phi(t) is the commutator kernel of x1 x2, the force response is G phi(t) with
G = (grad psi)(v . grad psi). Every eta -> 0 statement (the delta function at
omega1 = omega2) is realized as a finite-eta closed form plus a detuning
integral; no delta function is ever evaluated.
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from models.drive import CouplingDrive
from models.oscillator import OscillatorPair, ThermalEnsemble, thermal_occupation
from shared.errors import ConsistencyError, ParameterDomainError
from shared.quadrature import integrate_nodes, lorentzian_nodes

logger = logging.getLogger(__name__)

MIN_RANGE_WIDTHS = 20.0


class ChannelBreakdown(NamedTuple):
    # coefficients c such that the channel force is G * c
    omega1_plus_omega2_term: float
    omega1_minus_omega2_term: float


@dataclass(frozen=True, eq=False)
class FrictionResult:
    f_reversible: np.ndarray
    f_friction: np.ndarray
    eta_used: float
    channel_breakdown: ChannelBreakdown


@dataclass(frozen=True, eq=False)
class DetuningWeight:
    value: float
    force: np.ndarray
    reference: float
    eta: float
    half_width: float
    n_points: int
    warning: Optional[str] = None

    @property
    def relative_error(self) -> float:
        if self.reference == 0.0:
            return abs(self.value)
        return abs(self.value - self.reference) / abs(self.reference)


def _check_eta(eta):
    if not (eta > 0) or not math.isfinite(eta):
        raise ParameterDomainError(f"eta must be finite and > 0, got {eta}")


def _coth(beta, omega, hbar):
    """coth(beta hbar omega / 2), vectorized over omega; 1 at T = 0."""
    omega = np.asarray(omega, dtype=float)
    if math.isinf(beta):
        return np.ones_like(omega)
    return 1.0 / np.tanh(0.5 * beta * hbar * omega)


def _S(a, eta):
    return 2.0 * eta * a / (eta**2 + a**2) ** 2


def _L(a, eta):
    return a / (eta**2 + a**2)


def phi_kernel(t, pair: OscillatorPair, ensemble: ThermalEnsemble):
    c1 = thermal_occupation(ensemble.beta, pair.omega1, pair.hbar).coth_factor
    c2 = thermal_occupation(ensemble.beta, pair.omega2, pair.hbar).coth_factor
    t = np.asarray(t, dtype=float)
    w1t, w2t = pair.omega1 * t, pair.omega2 * t
    return pair.D * (c1 * np.cos(w1t) * np.sin(w2t) + c2 * np.cos(w2t) * np.sin(w1t))


def damped_first_moment(omega1, omega2, eta):
    """int_0^inf t exp(-eta t) cos(omega1 t) sin(omega2 t) dt."""
    _check_eta(eta)
    big, small = omega1 + omega2, omega1 - omega2
    return eta * big / (eta**2 + big**2) ** 2 - eta * small / (eta**2 + small**2) ** 2


def _coth_difference_stable(a, b):
    """coth a - coth b via exp(-2x) so large arguments do not overflow."""
    ea, eb = math.exp(-2 * a), math.exp(-2 * b)
    return -2.0 * (eb - ea) / (-math.expm1(-2 * a) * -math.expm1(-2 * b))


def coth_prefactor_difference(ensemble: ThermalEnsemble, omega1, omega2, hbar=1.0) -> float:
    if ensemble.is_zero_temperature:
        raise ParameterDomainError("coth prefactor identity needs finite beta")
    a = 0.5 * ensemble.beta * hbar * omega1
    b = 0.5 * ensemble.beta * hbar * omega2
    c1, c2 = 1.0 / math.tanh(a), 1.0 / math.tanh(b)
    lhs = c1 - c2
    # -sinh(a - b) / (sinh a sinh b)
    rhs = _coth_difference_stable(a, b)
    if abs(lhs - rhs) > 1e-12 * max(abs(c1), abs(c2)):
        raise ConsistencyError(f"coth identity violated: {lhs!r} != {rhs!r}")
    return rhs


def friction_channels(pair: OscillatorPair, ensemble: ThermalEnsemble, eta, omega2=None):
    """Sum- and exchange-channel coefficients, vectorized over omega2.

    f_friction = G * (sum_term + exchange_term).
    """
    _check_eta(eta)
    omega2 = pair.omega2 if omega2 is None else np.asarray(omega2, dtype=float)
    D = pair.hbar / (2.0 * pair.m1 * pair.m2 * pair.omega1 * omega2)
    c1 = _coth(ensemble.beta, pair.omega1, pair.hbar)
    c2 = _coth(ensemble.beta, omega2, pair.hbar)
    sum_term = -D * 0.5 * (c1 + c2) * _S(pair.omega1 + omega2, eta)
    exchange_term = -D * 0.5 * (c2 - c1) * _S(pair.omega1 - omega2, eta)
    return sum_term, exchange_term


def _reversible_coefficient(pair, ensemble, eta):
    """int_0^inf phi(u) exp(-eta u) du."""
    c1 = thermal_occupation(ensemble.beta, pair.omega1, pair.hbar).coth_factor
    c2 = thermal_occupation(ensemble.beta, pair.omega2, pair.hbar).coth_factor
    big, small = pair.omega1 + pair.omega2, pair.omega1 - pair.omega2
    return pair.D * 0.5 * ((c1 + c2) * _L(big, eta) + (c2 - c1) * _L(small, eta))


def reversible_force(pair: OscillatorPair, ensemble: ThermalEnsemble, drive: CouplingDrive, t):
    _check_eta(drive.eta)
    return drive.G * float(t) * _reversible_coefficient(pair, ensemble, drive.eta)


def friction_force(
    pair: OscillatorPair, ensemble: ThermalEnsemble, drive: CouplingDrive, t: float = 0.0
) -> FrictionResult:
    sum_term, exchange_term = friction_channels(pair, ensemble, drive.eta)
    sum_term, exchange_term = float(sum_term), float(exchange_term)
    if pair.omega1 == pair.omega2:
        exchange_term = 0.0
    f_friction = drive.G * (sum_term + exchange_term)
    return FrictionResult(
        f_reversible=reversible_force(pair, ensemble, drive, t),
        f_friction=f_friction,
        eta_used=drive.eta,
        channel_breakdown=ChannelBreakdown(sum_term, exchange_term),
    )


def _kernel_components(pair, ensemble):
    """phi(t) = D sum_k a_k sin(kappa_k t)."""
    c1 = thermal_occupation(ensemble.beta, pair.omega1, pair.hbar).coth_factor
    c2 = thermal_occupation(ensemble.beta, pair.omega2, pair.hbar).coth_factor
    amplitudes = pair.D * 0.5 * np.array([c1 + c2, c2 - c1])
    kappas = np.array([pair.omega1 + pair.omega2, pair.omega1 - pair.omega2])
    return amplitudes, kappas


def phi_tilde(omega, pair: OscillatorPair, ensemble: ThermalEnsemble, eta):
    """int_0^inf phi(t) exp(-i omega t) exp(-eta t) dt."""
    _check_eta(eta)
    amplitudes, kappas = _kernel_components(pair, ensemble)
    s = eta + 1j * np.asarray(omega, dtype=float)[..., None]
    return np.sum(amplitudes * kappas / (s**2 + kappas**2), axis=-1)


def phi_tilde_derivative(omega, pair: OscillatorPair, ensemble: ThermalEnsemble, eta):
    _check_eta(eta)
    amplitudes, kappas = _kernel_components(pair, ensemble)
    s = eta + 1j * np.asarray(omega, dtype=float)[..., None]
    return np.sum(amplitudes * kappas * (-2j * s) / (s**2 + kappas**2) ** 2, axis=-1)


def friction_via_spectral_derivative(
    pair: OscillatorPair, ensemble: ThermalEnsemble, drive: CouplingDrive
) -> np.ndarray:
    value = complex(-1j * phi_tilde_derivative(0.0, pair, ensemble, drive.eta))
    if abs(value.imag) > 1e-12 * max(abs(value), 1e-300):
        raise ConsistencyError(f"-i dphi/domega at 0 is not real: {value!r}")
    return drive.G * value.real


def delta_weight_reference(pair: OscillatorPair, ensemble: ThermalEnsemble, drive: CouplingDrive) -> float:
    """Coefficient of delta(omega1 - omega2) in the eta -> 0 friction force, along grad psi."""
    if ensemble.is_zero_temperature:
        return 0.0
    x = 0.5 * ensemble.beta * pair.hbar * pair.omega1
    inv_sinh_sq = 4.0 * math.exp(-2 * x) / math.expm1(-2 * x) ** 2
    grad_norm = float(np.linalg.norm(drive.grad_psi))
    return (
        -math.pi * ensemble.beta * pair.hbar**2 * grad_norm * drive.g * inv_sinh_sq
        / (8.0 * pair.m1 * pair.m2 * pair.omega1**2)
    )


def detuning_integral(
    pair: OscillatorPair,
    ensemble: ThermalEnsemble,
    drive: CouplingDrive,
    half_width: Optional[float] = None,
    n_points: int = 2001,
) -> DetuningWeight:
    """int f_friction dOmega2 over the exchange channel, omega2 = omega1 - Omega2 swept.

    omega2 of ``pair`` is ignored; the sweep is centred on resonance.
    """
    _check_eta(drive.eta)
    half_width = 0.5 * pair.omega1 if half_width is None else float(half_width)
    if half_width >= pair.omega1:
        raise ParameterDomainError(
            f"detuning half width {half_width} must stay below omega1={pair.omega1}"
        )
    warning = None
    if 2 * half_width < MIN_RANGE_WIDTHS * drive.eta:
        warning = f"detuning range {2 * half_width:.3g} narrower than {MIN_RANGE_WIDTHS:g} eta"
        logger.warning(warning)
    x, theta, jacobian = lorentzian_nodes(half_width, drive.eta, n_points)
    _, exchange = friction_channels(pair, ensemble, drive.eta, omega2=pair.omega1 - x)
    coefficient = integrate_nodes(exchange, theta, jacobian)
    force = drive.G * coefficient
    grad_norm = float(np.linalg.norm(drive.grad_psi))
    value = float(force @ drive.grad_psi) / grad_norm if grad_norm > 0 else 0.0
    reference = delta_weight_reference(pair, ensemble, drive)
    logger.debug(f"detuning integral eta={drive.eta}: {value!r} vs {reference!r}")
    return DetuningWeight(value, force, reference, drive.eta, half_width, theta.size, warning)


def eta_sweep(omega1: float, n: int = 4) -> np.ndarray:
    return np.geomspace(1e-1, 1e-4, n) * omega1

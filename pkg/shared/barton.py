"""Zero-temperature normal-mode treatment of two equal oscillators.

H_int = q(t) y1 y2 = (q/2) y+^2 - (q/2) y-^2 with y+- = (y1 +- y2)/sqrt(2). From
the ground state each mode can only be lifted by two quanta, which is compared
with the single |00> -> |11> transition of the product-basis machinery.
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import pandas as pd

from models.drive import DriveProfile
from models.oscillator import FockTruncation, OscillatorPair, position_matrix, product_coupling_operator
from shared.errors import ParameterDomainError
from shared.perturbation import transition_amplitudes
from shared.quadrature import checked_quad

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BartonSetup:
    omega: float
    mass: float
    profile: DriveProfile
    hbar: float = 1.0
    # multiplies q(t); v . grad psi when built from a scenario
    coupling: float = 1.0

    def __post_init__(self):
        for name in ("omega", "mass", "hbar"):
            value = getattr(self, name)
            if not (value > 0) or not math.isfinite(value):
                raise ParameterDomainError(f"{name} must be finite and > 0, got {value}")

    @property
    def b(self) -> float:
        return self.hbar / (2.0 * self.mass * self.omega)

    @property
    def pair(self) -> OscillatorPair:
        return OscillatorPair(self.mass, self.mass, self.omega, self.omega, self.hbar)

    def with_profile(self, profile: DriveProfile) -> "BartonSetup":
        return BartonSetup(self.omega, self.mass, profile, self.hbar, self.coupling)


class ModeDrive(NamedTuple):
    # H_mode = coupling * q(t) * operator
    coupling: float
    operator: np.ndarray


class NormalModeDrives(NamedTuple):
    plus_mode: ModeDrive
    minus_mode: ModeDrive
    product: np.ndarray


def from_gaussian_units(charge: float, separation, t_grid) -> DriveProfile:
    """Sampled drive q = e^2 / s^3 from a separation history s(t) (callable or samples)."""
    t_grid = np.asarray(t_grid, dtype=float)
    s = np.asarray(separation(t_grid) if callable(separation) else separation, dtype=float)
    if s.shape != t_grid.shape:
        raise ParameterDomainError(f"separation has shape {s.shape}, t_grid {t_grid.shape}")
    if np.any(s <= 0):
        raise ParameterDomainError("separation must stay > 0")
    return DriveProfile.sampled(t_grid, charge**2 / s**3)


def normal_mode_drives(setup: BartonSetup, n_levels: int = 8) -> NormalModeDrives:
    x = position_matrix(setup.mass, setup.omega, n_levels, setup.hbar)
    identity = np.eye(n_levels)
    y1, y2 = np.kron(x, identity), np.kron(identity, x)
    y_plus = (y1 + y2) / math.sqrt(2.0)
    y_minus = (y1 - y2) / math.sqrt(2.0)
    return NormalModeDrives(
        plus_mode=ModeDrive(0.5 * setup.coupling, y_plus @ y_plus),
        minus_mode=ModeDrive(-0.5 * setup.coupling, y_minus @ y_minus),
        product=y1 @ y2,
    )


def mode_matrix_element(setup: BartonSetup, n_levels: int = 4) -> float:
    """<2|y^2|0> of a single mode, sqrt(2) b."""
    x = position_matrix(setup.mass, setup.omega, n_levels, setup.hbar)
    return float((x @ x)[2, 0])


def transfer_integral(setup: BartonSetup, quadrature: bool = False) -> complex:
    """I = -(i / (2 hbar)) int coupling q(t) exp(2 i omega t) dt."""
    profile, w = setup.profile, 2.0 * setup.omega
    if quadrature:
        t_end = profile.decay_time
        re, err_re = checked_quad(
            lambda t: float(profile.q(np.asarray(t))) * math.cos(w * t),
            profile.t_start, t_end, epsabs=0.0, epsrel=1e-13, limit=4000,
        )
        im, err_im = checked_quad(
            lambda t: float(profile.q(np.asarray(t))) * math.sin(w * t),
            profile.t_start, t_end, epsabs=0.0, epsrel=1e-13, limit=4000,
        )
        logger.debug(f"transfer integral by quadrature, error {math.hypot(err_re, err_im):.1e}")
        spectrum = complex(re, im)
    else:
        spectrum = complex(profile.qhat(-w))
    return -0.5j / setup.hbar * setup.coupling * spectrum


def barton_energy(setup: BartonSetup, quadrature: bool = False) -> float:
    """Sum over the two normal modes of 2 hbar omega |first-order 0 -> 2 amplitude|^2."""
    # int q exp(2 i omega t) dt recovered from I
    spectrum = 2j * setup.hbar * transfer_integral(setup, quadrature)
    element = mode_matrix_element(setup)
    dE = 0.0
    for sign in (0.5, -0.5):
        amplitude = -1j / setup.hbar * sign * element * spectrum
        dE += 2.0 * setup.hbar * setup.omega * abs(amplitude) ** 2
    return dE


def b1100_route_energy(setup: BartonSetup) -> float:
    """2 hbar omega B_{11,00} from the general transition table."""
    system = product_coupling_operator(setup.pair, FockTruncation(3), strength=setup.coupling)
    labels = [tuple(label) for label in system.labels]
    ground, target = labels.index((0, 0)), labels.index((1, 1))
    table = transition_amplitudes(system, setup.profile, setup.hbar)
    return 2.0 * setup.hbar * setup.omega * float(table.B[target, ground])


def slow_coupling_null(setup: BartonSetup, eta_sequence) -> pd.DataFrame:
    """dE(eta) for q = t exp(-eta t) and the friction-power proxy 4 eta dE(eta)."""
    etas = [float(eta) for eta in eta_sequence]
    if any(not eta > 0 for eta in etas):
        raise ParameterDomainError("eta values must be > 0")
    if any(a <= b for a, b in zip(etas, etas[1:])):
        raise ParameterDomainError("eta values must be strictly descending")
    w = setup.omega
    rows = []
    for eta in etas:
        dE = barton_energy(setup.with_profile(DriveProfile.ramp_damped(eta)))
        rows.append([eta, dE, 4.0 * eta * dE, dE * (eta**2 + 4 * w**2) ** 2])
    table = pd.DataFrame(rows, columns=["eta", "dE", "eta_times_dE", "scaled_dE"])
    limit = setup.b**2 * setup.coupling**2 / (8.0 * setup.hbar * w**3)
    table["bounded"] = table["dE"] <= limit * (1 + 1e-12)
    table["monotone"] = table["eta_times_dE"].diff().fillna(-1.0) < 0
    table.attrs["limit"] = limit
    return table

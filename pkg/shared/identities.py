"""Closed forms checked against independent quadrature or arithmetic."""
import math
from dataclasses import dataclass
from typing import List

from models.drive import DriveProfile
from models.oscillator import ThermalEnsemble
from shared.barton import BartonSetup, mode_matrix_element
from shared.kernel import coth_prefactor_difference, damped_first_moment
from shared.perturbation import drive_energy_integrals
from shared.quadrature import fourier_quad


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance

    def __str__(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} {self.deviation:.3e} {self.tolerance:.0e}"


def _relative(value, reference):
    return abs(value - reference) / abs(reference)


def first_moment_integral(omega1=2.0, omega2=1.0, eta=0.1) -> IdentityCheck:
    # t cos(w1 t) sin(w2 t) = t [sin((w1+w2) t) - sin((w1-w2) t)] / 2
    def half_ramp(t):
        return 0.5 * t * math.exp(-eta * t)

    sine_part = [-fourier_quad(half_ramp, w, 0.0, math.inf)[0].imag for w in (omega1 + omega2, omega1 - omega2)]
    reference = sine_part[0] - sine_part[1]
    return IdentityCheck("damped_first_moment", _relative(damped_first_moment(omega1, omega2, eta), reference), 1e-10)


def coth_identity(a=1.0, b=0.5) -> IdentityCheck:
    value = coth_prefactor_difference(ThermalEnsemble(1.0), 2 * a, 2 * b)
    return IdentityCheck("coth_prefactor_difference", _relative(value, -1.0 / math.sinh(a)), 1e-12)


def drive_energy_factor(eta=0.5) -> IdentityCheck:
    integrals = drive_energy_integrals(DriveProfile.ramp_damped(eta))
    return IdentityCheck("q_dot_squared_is_one_over_four_eta", _relative(integrals.q_dot_squared, 0.25 / eta), 1e-12)


def mode_element(omega=1.0, mass=1.0) -> IdentityCheck:
    setup = BartonSetup(omega, mass, DriveProfile.ramp_damped(1.0))
    return IdentityCheck("mode_matrix_element", _relative(mode_matrix_element(setup) / setup.b, math.sqrt(2.0)), 1e-13)


def ramp_fourier_pair(eta=0.2, omega=2.0) -> IdentityCheck:
    profile = DriveProfile.ramp_damped(eta)
    numeric, _ = fourier_quad(lambda t: t * math.exp(-eta * t), omega, 0.0, math.inf)
    analytic = complex(profile.qhat(omega))
    return IdentityCheck("ramp_fourier_pair", abs(numeric - analytic) / abs(analytic), 1e-9)


def run_identities() -> List[IdentityCheck]:
    return [first_moment_integral(), coth_identity(), drive_energy_factor(), mode_element(), ramp_fourier_pair()]


def all_passed(checks) -> bool:
    return all(check.passed for check in checks)

import logging
import math

import numpy as np
import pytest

from models.drive import DriveProfile
from models.oscillator import (
    FockTruncation,
    LevelSystem,
    OscillatorPair,
    ThermalEnsemble,
    boltzmann_weights,
    product_coupling_operator,
)
from shared.errors import ParameterDomainError
from shared.perturbation import (
    dissipated_energy_perturbative,
    drive_energy_integrals,
    fourier_of_drive,
    perturbed_populations,
    transition_amplitudes,
)


def _two_level(gap, element):
    return LevelSystem([0.0, gap], np.array([[0.0, element], [element, 0.0]]))


def test_fourier_of_drive():
    ramp = DriveProfile.ramp_damped(0.5)
    assert isinstance(fourier_of_drive(ramp, 1.0), complex)
    assert fourier_of_drive(ramp, 0.0) == pytest.approx(4.0)
    values = fourier_of_drive(ramp, np.array([0.0, 1.0]))
    assert values.shape == (2,)
    assert values[1] == pytest.approx(1 / (0.5 + 1j) ** 2)


def test_transition_amplitudes_vanish_without_coupling():
    system = LevelSystem([0.0, 1.0, 2.5], np.zeros((3, 3)))
    table = transition_amplitudes(system, DriveProfile.ramp_damped(0.3))
    assert np.all(table.B == 0)
    assert table.max_offdiagonal == 0.0


def test_two_level_transition_probability():
    omega, b, eta = 1.0, 0.2, 0.3
    table = transition_amplitudes(_two_level(2 * omega, -b), DriveProfile.ramp_damped(eta))
    assert table.B[1, 0] == pytest.approx(b**2 / (eta**2 + 4 * omega**2) ** 2, rel=1e-14)
    assert table.B[0, 1] == pytest.approx(table.B[1, 0], rel=1e-14)
    assert table.b[1, 0] == pytest.approx(1j * -b / (eta - 2j * omega) ** 2, rel=1e-14)


def test_transition_probabilities_symmetric(random_level_system):
    system = random_level_system()
    table = transition_amplitudes(system, DriveProfile.ramp_damped(0.2))
    assert table.B == pytest.approx(table.B.T, rel=1e-13)
    assert np.diag(table.B) == pytest.approx(np.abs(np.diag(system.coupling)) ** 2 * 25.0**2, rel=1e-13)


def test_populations_conserve_probability(random_level_system):
    system = random_level_system(coupling_scale=0.05)
    P = boltzmann_weights(ThermalEnsemble(0.7), system.energies).probabilities
    populations = perturbed_populations(P, transition_amplitudes(system, DriveProfile.ramp_damped(1.0)))
    assert populations.P1.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.array_equal(populations.P, P)


def test_populations_unchanged_without_transitions():
    system = LevelSystem([0.0, 1.0, 2.0], np.zeros((3, 3)))
    table = transition_amplitudes(system, DriveProfile.ramp_damped(1.0))
    P = np.array([0.5, 0.3, 0.2])
    assert np.array_equal(perturbed_populations(P, table).P1, P)


def test_populations_flag_large_transitions(random_level_system, caplog):
    system = random_level_system(coupling_scale=100.0)
    P = boltzmann_weights(ThermalEnsemble(1.0), system.energies).probabilities
    with caplog.at_level(logging.WARNING):
        populations = perturbed_populations(P, transition_amplitudes(system, DriveProfile.ramp_damped(0.5)))
    assert not populations.valid
    assert populations.max_B > 0.1
    assert "first-order populations suspect" in caplog.text


def test_populations_reject_bad_input():
    table = transition_amplitudes(_two_level(1.0, 0.1), DriveProfile.ramp_damped(1.0))
    with pytest.raises(ParameterDomainError):
        perturbed_populations([0.6, 0.6], table)
    with pytest.raises(ParameterDomainError):
        perturbed_populations([1.0, 0.0, 0.0], table)


def test_no_coupling_no_dissipation():
    system = LevelSystem([0.0, 1.0, 2.0], np.zeros((3, 3)))
    result = dissipated_energy_perturbative(system, ThermalEnsemble(1.0), DriveProfile.ramp_damped(0.1))
    assert result.dE == 0.0 and result.dE_symmetric == 0.0


def test_degenerate_levels_do_not_dissipate():
    system = LevelSystem([1.0, 1.0], np.array([[0.0, 0.3], [0.3, 0.0]]))
    result = dissipated_energy_perturbative(system, ThermalEnsemble(2.0), DriveProfile.ramp_damped(0.1))
    assert result.dE == 0.0


def test_zero_temperature_resonant_pair():
    omega, g, eta = 1.0, 0.5, 0.3
    pair = OscillatorPair(omega1=omega, omega2=omega)
    system = product_coupling_operator(pair, FockTruncation(3), strength=g)
    result = dissipated_energy_perturbative(system, ThermalEnsemble.zero_temperature(), DriveProfile.ramp_damped(eta))
    b = pair.b1
    B = g**2 * b**2 / (eta**2 + 4 * omega**2) ** 2
    assert result.dE == pytest.approx(2 * omega * B, rel=1e-12)
    assert result.dE_symmetric == pytest.approx(2 * omega * B, rel=1e-12)
    labels = [tuple(label) for label in system.labels]
    assert result.populations.P1[labels.index((1, 1))] == pytest.approx(B, rel=1e-12)
    assert result.populations.P1[labels.index((0, 0))] == pytest.approx(1 - B, rel=1e-12)


def test_dissipation_is_nonnegative(rng, random_level_system):
    for _ in range(1000):
        system = random_level_system()
        ensemble = ThermalEnsemble(rng.uniform(0.1, 10.0))
        result = dissipated_energy_perturbative(system, ensemble, DriveProfile.ramp_damped(rng.uniform(0.05, 1.0)))
        scale = float(np.sum(np.abs(system.omega_matrix()) * result.table.B))
        assert result.dE_symmetric >= 0.0
        assert result.dE >= -1e-13 * scale


def test_population_and_symmetric_forms_agree(rng, random_level_system):
    for _ in range(100):
        system = random_level_system()
        ensemble = ThermalEnsemble(rng.uniform(0.2, 10.0))
        result = dissipated_energy_perturbative(system, ensemble, DriveProfile.ramp_damped(rng.uniform(0.05, 1.0)))
        assert result.dE == pytest.approx(result.dE_symmetric, rel=1e-10, abs=1e-14)


def test_uniform_populations_absorb_nothing(random_level_system):
    system = random_level_system()
    table = transition_amplitudes(system, DriveProfile.ramp_damped(0.4))
    P = np.full(system.dimension, 1.0 / system.dimension)
    delta = system.omega_matrix()
    scale = float(np.sum(np.abs(delta) * table.B))
    assert abs(float(np.sum(delta * P[None, :] * table.B))) <= 1e-13 * scale
    assert perturbed_populations(P, table).P1 == pytest.approx(P, abs=1e-15)


def test_degenerate_ground_note():
    system = LevelSystem([0.0, 0.0, 1.0], np.array([[0, 0, 0.2], [0, 0, 0.1], [0.2, 0.1, 0]]))
    result = dissipated_energy_perturbative(system, ThermalEnsemble.zero_temperature(), DriveProfile.ramp_damped(0.5))
    assert result.degeneracy_note is not None
    assert list(result.populations.P) == [0.5, 0.5, 0.0]
    expected = 0.5 * (0.04 + 0.01) / (0.25 + 1.0) ** 2
    assert result.dE == pytest.approx(expected, rel=1e-12)


def test_hbar_scaling():
    # E -> hbar E at fixed omega and A -> hbar A leave B and dE / hbar unchanged
    system = _two_level(2.0, 0.3)
    plain = dissipated_energy_perturbative(system, ThermalEnsemble(1.0), DriveProfile.ramp_damped(0.2))
    scaled = LevelSystem(2.5 * system.energies, 2.5 * system.coupling)
    result = dissipated_energy_perturbative(scaled, ThermalEnsemble(1.0 / 2.5), DriveProfile.ramp_damped(0.2), hbar=2.5)
    assert result.table.B == pytest.approx(plain.table.B, rel=1e-13)
    assert result.dE == pytest.approx(2.5 * plain.dE, rel=1e-13)


def test_drive_energy_integrals_ramp():
    integrals = drive_energy_integrals(DriveProfile.ramp_damped(0.5))
    assert integrals.q_dot_squared == pytest.approx(0.5, rel=1e-12)
    assert integrals.q_dot_q == pytest.approx(0.0, abs=1e-12)


def test_drive_energy_integrals_gaussian():
    integrals = drive_energy_integrals(DriveProfile.gaussian_pulse())
    assert integrals.q_dot_squared == pytest.approx(math.sqrt(math.pi / 2), rel=1e-6)
    assert integrals.q_dot_q == pytest.approx(0.0, abs=1e-9)

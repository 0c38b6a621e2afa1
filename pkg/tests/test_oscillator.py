import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import eval_hermite

from models.oscillator import (
    FockTruncation,
    LevelSystem,
    OscillatorPair,
    ThermalEnsemble,
    boltzmann_weights,
    channel_mask,
    position_matrix,
    product_coupling_operator,
    sinh_weight_matrix,
    thermal_occupation,
)
from shared.errors import ParameterDomainError, TruncationError


def _eigenfunction(n, mass, omega, hbar=1.0):
    alpha = mass * omega / hbar
    norm = (alpha / math.pi) ** 0.25 / math.sqrt(2.0**n * math.factorial(n))
    return lambda x: norm * eval_hermite(n, math.sqrt(alpha) * x) * math.exp(-0.5 * alpha * x * x)


def test_position_matrix_two_levels():
    x = position_matrix(1.0, 1.0, 2)
    assert x[0, 1] == pytest.approx(1 / math.sqrt(2))
    assert x[1, 0] == pytest.approx(1 / math.sqrt(2))
    assert x[0, 0] == 0 and x[1, 1] == 0


def test_position_matrix_sqrt_rule():
    x = position_matrix(1.0, 1.0, 3)
    assert x[1, 2] == pytest.approx(1.0)
    assert np.array_equal(x, x.T)


def test_position_matrix_matches_hermite_overlap():
    psi0, psi1 = _eigenfunction(0, 2.0, 3.0), _eigenfunction(1, 2.0, 3.0)
    overlap, _ = quad(lambda x: psi0(x) * x * psi1(x), -np.inf, np.inf, epsabs=1e-14)
    x = position_matrix(2.0, 3.0, 4)
    assert x[0, 1] == pytest.approx(math.sqrt(1 / 12), rel=1e-12)
    assert x[0, 1] == pytest.approx(overlap, rel=1e-10)


@pytest.mark.parametrize("mass, omega", [(0.0, 1.0), (1.0, -2.0)])
def test_position_matrix_rejects_bad_parameters(mass, omega):
    with pytest.raises(ParameterDomainError):
        position_matrix(mass, omega, 3)


def test_product_coupling_matrix_elements():
    pair = OscillatorPair()
    system = product_coupling_operator(pair, FockTruncation(3), strength=1.0)
    labels = [tuple(label) for label in system.labels]
    ground, both_up, one_up = labels.index((0, 0)), labels.index((1, 1)), labels.index((2, 0))
    assert system.coupling[both_up, ground] == pytest.approx(-0.5)
    assert system.coupling[ground, ground] == 0
    assert system.coupling[one_up, ground] == 0


def test_product_coupling_selection_rule_and_hermiticity():
    pair = OscillatorPair(m1=1.3, m2=0.7, omega1=1.1, omega2=2.3)
    system = product_coupling_operator(pair, FockTruncation(5), strength=0.8)
    d1 = np.abs(system.labels[:, 0][:, None] - system.labels[:, 0][None, :])
    d2 = np.abs(system.labels[:, 1][:, None] - system.labels[:, 1][None, :])
    assert np.all(system.coupling[(d1 != 1) | (d2 != 1)] == 0)
    assert np.array_equal(system.coupling, system.coupling.conj().T)
    assert np.all(np.diff(system.energies) >= 0)
    n1, n2 = system.labels[:, 0], system.labels[:, 1]
    expected = pair.omega1 * (n1 + 0.5) + pair.omega2 * (n2 + 0.5)
    assert np.allclose(system.energies, expected, rtol=0, atol=1e-14)


def test_thermal_occupation_values():
    assert thermal_occupation(math.inf, 1.0) == (0.0, 1.0)
    occupation = thermal_occupation(1.0, 1.0)
    assert occupation.mean_n == pytest.approx(0.581976706869326, rel=1e-12)
    assert occupation.coth_factor == pytest.approx(2.163953413738653, rel=1e-12)
    occupation = thermal_occupation(math.log(2.0), 1.0)
    assert occupation.mean_n == pytest.approx(1.0, rel=1e-12)
    assert occupation.coth_factor == pytest.approx(3.0, rel=1e-12)


def test_thermal_occupation_coth_series(rng):
    for x in rng.uniform(0.05, 30.0, 20):
        # coth(x/2) = 1 + 2 sum_k exp(-k x)
        k = np.arange(1, 4000)
        series = 1.0 + 2.0 * math.fsum(np.exp(-k * x))
        assert thermal_occupation(x, 1.0).coth_factor == pytest.approx(series, rel=1e-12)


def test_boltzmann_weights_examples():
    weights = boltzmann_weights(ThermalEnsemble(1.0), [0.0, math.log(2.0)])
    assert weights.probabilities == pytest.approx([2 / 3, 1 / 3], rel=1e-14)
    assert weights.partition_function == pytest.approx(1.5, rel=1e-14)
    weights = boltzmann_weights(ThermalEnsemble.zero_temperature(), [1.0, 2.0, 3.0])
    assert list(weights.probabilities) == [1.0, 0.0, 0.0]


def test_boltzmann_weights_shift_invariance(rng):
    shifted = boltzmann_weights(ThermalEnsemble(2.0), [0.5, 1.5, 2.5]).probabilities
    plain = boltzmann_weights(ThermalEnsemble(2.0), [0.0, 1.0, 2.0]).probabilities
    assert shifted == pytest.approx(plain, rel=1e-14)
    energies = np.sort(rng.uniform(0, 5, 8))
    for shift in rng.uniform(-1e3, 1e3, 5):
        moved = boltzmann_weights(ThermalEnsemble(0.7), energies + shift).probabilities
        assert moved == pytest.approx(boltzmann_weights(ThermalEnsemble(0.7), energies).probabilities, rel=1e-10)


def test_boltzmann_weights_large_beta_does_not_overflow():
    weights = boltzmann_weights(ThermalEnsemble(1e4), [1e3, 1e3 + 1.0])
    assert np.all(np.isfinite(weights.probabilities))
    assert weights.probabilities.sum() == pytest.approx(1.0, abs=1e-15)


def test_zero_temperature_degenerate_ground_is_uniform():
    weights = boltzmann_weights(ThermalEnsemble.zero_temperature(), [0.0, 0.0, 1.0])
    assert list(weights.probabilities) == [0.5, 0.5, 0.0]
    assert weights.ground_degeneracy == 2


def test_sinh_weight_matrix_matches_exponential_form(rng):
    energies = np.sort(rng.uniform(0, 3, 6))
    beta = 1.3
    z = np.sum(np.exp(-beta * energies))
    delta = energies[:, None] - energies[None, :]
    direct = np.exp(-beta * (energies[:, None] + energies[None, :]) / 2) * np.sinh(beta * delta / 2) / z
    assert sinh_weight_matrix(ThermalEnsemble(beta), energies) == pytest.approx(direct, abs=1e-15)


def test_fock_truncation_tail_criterion():
    pair, ensemble = OscillatorPair(), ThermalEnsemble(1.0)
    trunc = FockTruncation.for_ensemble(pair, ensemble, tail_tolerance=1e-12)
    assert trunc.tail_weight(pair, ensemble) < 1e-12
    assert FockTruncation(trunc.n_levels_per_oscillator - 3).tail_weight(pair, ensemble) >= 1e-12
    with pytest.raises(TruncationError) as info:
        FockTruncation(4, 1e-12).check(pair, ensemble)
    assert info.value.value > 1e-12
    assert FockTruncation(2).tail_weight(pair, ThermalEnsemble.zero_temperature()) == 0.0


def test_tail_weight_against_direct_sum():
    pair, ensemble = OscillatorPair(omega1=1.0, omega2=1.7), ThermalEnsemble(0.8)
    n = 6
    big = 400
    e1 = np.arange(big) * pair.omega1
    e2 = np.arange(big) * pair.omega2
    w = np.exp(-ensemble.beta * (e1[:, None] + e2[None, :]))
    kept = w[:n, :n].sum() / w.sum()
    assert FockTruncation(n).tail_weight(pair, ensemble) == pytest.approx(1 - kept, rel=1e-10)


def test_level_system_validation():
    with pytest.raises(ParameterDomainError):
        LevelSystem([1.0, 0.0], np.zeros((2, 2)))
    with pytest.raises(ParameterDomainError):
        LevelSystem([0.0, 1.0], np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ParameterDomainError):
        LevelSystem([0.0, 1.0], np.zeros((3, 3)))


def test_channel_masks_partition_the_coupling():
    system = product_coupling_operator(OscillatorPair(omega2=1.4), FockTruncation(4))
    summed = channel_mask(system, "sum")
    exchange = channel_mask(system, "exchange")
    support = system.coupling != 0
    assert not np.any(summed & exchange & support)
    assert np.array_equal((summed | exchange) & support, support)
    with pytest.raises(ParameterDomainError):
        channel_mask(system, "diagonal")


def test_restricted_systems_add_up():
    system = product_coupling_operator(OscillatorPair(omega2=1.4), FockTruncation(4))
    summed = system.restricted(channel_mask(system, "sum"))
    exchange = system.restricted(channel_mask(system, "exchange"))
    assert np.array_equal(summed.coupling + exchange.coupling, system.coupling)
    assert np.array_equal(summed.energies, system.energies)


@pytest.mark.parametrize("beta", [0.0, -1.0])
def test_ensemble_rejects_nonpositive_beta(beta):
    with pytest.raises(ParameterDomainError):
        ThermalEnsemble(beta)

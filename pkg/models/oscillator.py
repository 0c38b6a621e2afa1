"""Two harmonic oscillators in a truncated Fock space.

Natural units: hbar is a field (default 1) and k_B is absorbed into beta.
Matrices are dense; product spaces stay below a few thousand states.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from shared.errors import ParameterDomainError, TruncationError

__all__ = [
    "OscillatorPair",
    "ThermalEnsemble",
    "LevelSystem",
    "FockTruncation",
    "ThermalOccupation",
    "BoltzmannWeights",
    "position_matrix",
    "product_coupling_operator",
    "thermal_occupation",
    "boltzmann_weights",
    "sinh_weight_matrix",
    "channel_mask",
]

logger = logging.getLogger(__name__)

DEGENERACY_RTOL = 1e-12


def _require_positive(**values):
    for name, value in values.items():
        if not (value > 0) or not math.isfinite(value):
            raise ParameterDomainError(f"{name} must be finite and > 0, got {value}")


@dataclass(frozen=True)
class OscillatorPair:
    m1: float = 1.0
    m2: float = 1.0
    omega1: float = 1.0
    omega2: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        _require_positive(
            m1=self.m1, m2=self.m2, omega1=self.omega1, omega2=self.omega2, hbar=self.hbar
        )

    @property
    def b1(self) -> float:
        return self.hbar / (2.0 * self.m1 * self.omega1)

    @property
    def b2(self) -> float:
        return self.hbar / (2.0 * self.m2 * self.omega2)

    @property
    def D(self) -> float:
        return self.hbar / (2.0 * self.m1 * self.m2 * self.omega1 * self.omega2)

    def with_omega2(self, omega2: float) -> "OscillatorPair":
        return OscillatorPair(self.m1, self.m2, self.omega1, omega2, self.hbar)


@dataclass(frozen=True)
class ThermalEnsemble:
    """beta = math.inf is the T = 0 flag."""

    beta: float

    def __post_init__(self):
        if not (self.beta > 0):
            raise ParameterDomainError(f"beta must be > 0 or inf, got {self.beta}")

    @classmethod
    def zero_temperature(cls) -> "ThermalEnsemble":
        return cls(math.inf)

    @property
    def is_zero_temperature(self) -> bool:
        return math.isinf(self.beta)


@dataclass(frozen=True)
class LevelSystem:
    energies: np.ndarray
    coupling: np.ndarray
    # quantum numbers (n1, n2) per state when built from an oscillator pair
    labels: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=float)
        coupling = np.asarray(self.coupling)
        if energies.ndim != 1 or energies.size == 0:
            raise ParameterDomainError("energies must be a non-empty 1-D array")
        if not np.all(np.isfinite(energies)):
            raise ParameterDomainError("energies must be finite")
        if np.any(np.diff(energies) < 0):
            raise ParameterDomainError("energies must be sorted ascending")
        if coupling.shape != (energies.size, energies.size):
            raise ParameterDomainError(
                f"coupling shape {coupling.shape} does not match {energies.size} levels"
            )
        scale = max(float(np.max(np.abs(coupling), initial=0.0)), 1.0)
        if not np.allclose(coupling, coupling.conj().T, rtol=0.0, atol=1e-12 * scale):
            raise ParameterDomainError("coupling matrix must be Hermitian")
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "coupling", coupling)

    @property
    def dimension(self) -> int:
        return self.energies.size

    def omega_matrix(self, hbar: float = 1.0) -> np.ndarray:
        """omega_nm = (E_n - E_m)/hbar."""
        return (self.energies[:, None] - self.energies[None, :]) / hbar

    def restricted(self, mask: np.ndarray) -> "LevelSystem":
        return LevelSystem(self.energies, np.where(mask, self.coupling, 0.0), self.labels)

    def scaled(self, factor: float) -> "LevelSystem":
        return LevelSystem(self.energies, factor * self.coupling, self.labels)


class ThermalOccupation(NamedTuple):
    mean_n: float
    coth_factor: float


@dataclass(frozen=True)
class BoltzmannWeights:
    probabilities: np.ndarray
    # partition function of the spectrum shifted to E_min = 0
    z: float
    shift: float
    beta: float
    ground_degeneracy: int

    @property
    def partition_function(self) -> float:
        """Z = sum exp(-beta E_n); at T = 0 the ground degeneracy (shifted convention)."""
        if math.isinf(self.beta):
            return self.z
        return self.z * math.exp(-self.beta * self.shift)


def position_matrix(mass: float, omega: float, n_levels: int, hbar: float = 1.0) -> np.ndarray:
    """sqrt(hbar/(2 m omega)) (a + a^dagger) in the lowest n_levels Fock states."""
    _require_positive(mass=mass, omega=omega, hbar=hbar)
    if n_levels < 2:
        raise ParameterDomainError(f"n_levels must be >= 2, got {n_levels}")
    n = np.arange(1, n_levels)
    off = np.sqrt(hbar * n / (2.0 * mass * omega))
    return np.diag(off, 1) + np.diag(off, -1)


@dataclass(frozen=True)
class FockTruncation:
    n_levels_per_oscillator: int
    tail_tolerance: float = 1e-12

    def __post_init__(self):
        if self.n_levels_per_oscillator < 2:
            raise ParameterDomainError(
                f"n_levels_per_oscillator must be >= 2, got {self.n_levels_per_oscillator}"
            )
        if not (0 < self.tail_tolerance < 1):
            raise ParameterDomainError(f"tail_tolerance must be in (0, 1), got {self.tail_tolerance}")

    @staticmethod
    def _tail(pair: OscillatorPair, ensemble: ThermalEnsemble, n_levels: int) -> float:
        if ensemble.is_zero_temperature:
            return 0.0
        x1 = math.exp(-ensemble.beta * pair.hbar * pair.omega1)
        x2 = math.exp(-ensemble.beta * pair.hbar * pair.omega2)
        # 1 - (1 - x1^N)(1 - x2^N) without cancellation
        t1, t2 = x1**n_levels, x2**n_levels
        return t1 + t2 - t1 * t2

    def tail_weight(self, pair: OscillatorPair, ensemble: ThermalEnsemble) -> float:
        return self._tail(pair, ensemble, self.n_levels_per_oscillator)

    def check(self, pair: OscillatorPair, ensemble: ThermalEnsemble) -> float:
        tail = self.tail_weight(pair, ensemble)
        if tail >= self.tail_tolerance:
            raise TruncationError(
                f"Boltzmann tail {tail:.3e} of {self.n_levels_per_oscillator} levels "
                f"exceeds tolerance {self.tail_tolerance:.1e}",
                value=tail,
                reference=self.tail_tolerance,
            )
        return tail

    @classmethod
    def for_ensemble(
        cls,
        pair: OscillatorPair,
        ensemble: ThermalEnsemble,
        tail_tolerance: float = 1e-12,
        margin: int = 2,
        max_levels: int = 200,
    ) -> "FockTruncation":
        n = 1
        while cls._tail(pair, ensemble, n) >= tail_tolerance:
            n += 1
            if n > max_levels:
                raise TruncationError(
                    f"tail tolerance {tail_tolerance:.1e} needs more than {max_levels} levels",
                    value=cls._tail(pair, ensemble, max_levels),
                    reference=tail_tolerance,
                )
        levels = max(n + margin, 2)
        logger.debug(f"Fock truncation: {levels} levels per oscillator (beta={ensemble.beta})")
        return cls(levels, tail_tolerance)


def product_coupling_operator(
    pair: OscillatorPair, trunc: FockTruncation, strength: float = 1.0
) -> LevelSystem:
    """LevelSystem for A = -strength * x1 x2 on the product Fock space, sorted by energy."""
    n = trunc.n_levels_per_oscillator
    x1 = position_matrix(pair.m1, pair.omega1, n, pair.hbar)
    x2 = position_matrix(pair.m2, pair.omega2, n, pair.hbar)
    coupling = -strength * np.kron(x1, x2)
    n1, n2 = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    n1, n2 = n1.ravel(), n2.ravel()
    energies = pair.hbar * pair.omega1 * (n1 + 0.5) + pair.hbar * pair.omega2 * (n2 + 0.5)
    order = np.argsort(energies, kind="stable")
    labels = np.stack([n1[order], n2[order]], axis=1)
    return LevelSystem(energies[order], coupling[np.ix_(order, order)], labels)


def thermal_occupation(beta: float, omega: float, hbar: float = 1.0) -> ThermalOccupation:
    _require_positive(omega=omega, hbar=hbar)
    if math.isinf(beta):
        return ThermalOccupation(0.0, 1.0)
    x = beta * hbar * omega
    if not (x > 0):
        raise ParameterDomainError(f"beta*hbar*omega must be > 0, got {x}")
    mean_n = 1.0 / math.expm1(x)
    return ThermalOccupation(mean_n, 1.0 / math.tanh(0.5 * x))


def _ground_mask(energies: np.ndarray) -> np.ndarray:
    e0 = energies.min()
    return np.isclose(energies, e0, rtol=DEGENERACY_RTOL, atol=DEGENERACY_RTOL * max(abs(e0), 1.0))


def boltzmann_weights(ensemble: ThermalEnsemble, energies) -> BoltzmannWeights:
    energies = np.asarray(energies, dtype=float)
    if energies.size == 0:
        raise ParameterDomainError("at least one energy is required")
    shift = float(energies.min())
    ground = _ground_mask(energies)
    degeneracy = int(ground.sum())
    if ensemble.is_zero_temperature:
        p = ground.astype(float) / degeneracy
        return BoltzmannWeights(p, float(degeneracy), shift, ensemble.beta, degeneracy)
    w = np.exp(-ensemble.beta * (energies - shift))
    z = float(np.sum(w))
    return BoltzmannWeights(w / z, z, shift, ensemble.beta, degeneracy)


def sinh_weight_matrix(ensemble: ThermalEnsemble, energies) -> np.ndarray:
    """(1/Z) exp(-beta(E_n+E_m)/2) sinh(beta Delta_nm/2), grouped as (P_m - P_n)/2."""
    p = boltzmann_weights(ensemble, energies).probabilities
    return 0.5 * (p[None, :] - p[:, None])


def channel_mask(system: LevelSystem, channel: str) -> np.ndarray:
    if channel == "all":
        return np.ones(system.coupling.shape, dtype=bool)
    if system.labels is None:
        raise ParameterDomainError("channel selection needs oscillator quantum-number labels")
    d1 = system.labels[:, 0][:, None] - system.labels[:, 0][None, :]
    d2 = system.labels[:, 1][:, None] - system.labels[:, 1][None, :]
    if channel == "sum":
        return d1 == d2
    elif channel == "exchange":
        return d1 == -d2
    else:
        raise ParameterDomainError(f"Unsupported channel: {channel}. ")

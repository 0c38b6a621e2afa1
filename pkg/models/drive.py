"""Classical drives q(t) multiplying the coupling operator."""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from shared.errors import ParameterDomainError, QuadratureError
from shared.quadrature import fourier_quad

__all__ = ["DriveProfile", "CouplingDrive", "DECAY_TIMES"]

logger = logging.getLogger(__name__)

# t_max = DECAY_TIMES / eta leaves t e^{-eta t} below 1e-11 of its peak
DECAY_TIMES = 30.0
SAMPLED_REL_ERROR = 1e-8


@dataclass(eq=False)
class DriveProfile:
    kind: str
    q_fn: Callable
    q_dot_fn: Optional[Callable] = None
    qhat_fn: Optional[Callable] = None
    t_start: float = 0.0
    t_end: float = math.inf
    eta: Optional[float] = None
    t_grid: Optional[np.ndarray] = None
    _qhat_cache: dict = field(default_factory=dict, repr=False)
    _l1_scale: Optional[float] = field(default=None, repr=False)

    @classmethod
    def ramp_damped(cls, eta: float) -> "DriveProfile":
        """q(t) = t exp(-eta t) for t > 0, zero before; switched on abruptly at t = 0."""
        if not (eta > 0):
            raise ParameterDomainError(f"drive.eta must be > 0, got {eta}")

        def q(t):
            t = np.asarray(t, dtype=float)
            return np.where(t > 0, t * np.exp(-eta * np.clip(t, 0, None)), 0.0)

        def q_dot(t):
            t = np.asarray(t, dtype=float)
            return np.where(t > 0, (1 - eta * t) * np.exp(-eta * np.clip(t, 0, None)), 0.0)

        def qhat(omega):
            return 1.0 / (eta + 1j * np.asarray(omega, dtype=float)) ** 2

        return cls("ramp_damped", q, q_dot, qhat, 0.0, DECAY_TIMES / eta, eta)

    @classmethod
    def analytic_table(cls, q, qhat, q_dot=None, t_start=0.0, t_end=math.inf) -> "DriveProfile":
        return cls("analytic_table", q, q_dot, qhat, t_start, t_end)

    @classmethod
    def sampled(cls, t_grid, q_values) -> "DriveProfile":
        t_grid = np.asarray(t_grid, dtype=float)
        q_values = np.asarray(q_values, dtype=float)
        if t_grid.ndim != 1 or t_grid.shape != q_values.shape or t_grid.size < 4:
            raise ParameterDomainError("sampled drive needs matching 1-D t and q arrays (>= 4 points)")
        if np.any(np.diff(t_grid) <= 0):
            raise ParameterDomainError("sampled drive times must be strictly increasing")
        spline = CubicSpline(t_grid, q_values)
        derivative = spline.derivative()
        t0, t1 = t_grid[0], t_grid[-1]

        def q(t):
            t = np.asarray(t, dtype=float)
            return np.where((t >= t0) & (t <= t1), spline(np.clip(t, t0, t1)), 0.0)

        def q_dot(t):
            t = np.asarray(t, dtype=float)
            return np.where((t >= t0) & (t <= t1), derivative(np.clip(t, t0, t1)), 0.0)

        return cls("sampled", q, q_dot, None, t0, t1, t_grid=t_grid)

    @classmethod
    def gaussian_pulse(cls, center=3.0, width=1.0, amplitude=1.0, n_samples=4001) -> "DriveProfile":
        t_grid = np.linspace(center - 8 * width, center + 8 * width, n_samples)
        return cls.sampled(t_grid, amplitude * np.exp(-(((t_grid - center) / width) ** 2)))

    def q(self, t):
        return self.q_fn(t)

    def q_dot(self, t):
        if self.q_dot_fn is not None:
            return self.q_dot_fn(t)
        # five-point stencil
        t = np.asarray(t, dtype=float)
        h = 1e-4 * max(1.0, float(np.max(np.abs(t), initial=0.0)))
        return (
            -self.q_fn(t + 2 * h) + 8 * self.q_fn(t + h) - 8 * self.q_fn(t - h) + self.q_fn(t - 2 * h)
        ) / (12 * h)

    @property
    def decay_time(self) -> float:
        if math.isinf(self.t_end):
            raise ParameterDomainError(f"{self.kind} drive has no finite decay time; pass t_max")
        return self.t_end

    def _scalar(self, t) -> float:
        return float(self.q_fn(np.asarray(t, dtype=float)))

    def l1_scale(self) -> float:
        if self._l1_scale is None:
            t = np.linspace(self.t_start, self.decay_time, 20001)
            self._l1_scale = float(trapezoid(np.abs(self.q(t)), x=t))
        return self._l1_scale

    def qhat_with_error(self, omega: float):
        """q-hat(omega) = int q(t) exp(-i omega t) dt with an absolute error bound."""
        if self.qhat_fn is not None:
            return complex(self.qhat_fn(omega)), 0.0
        key = abs(float(omega))
        if key not in self._qhat_cache:
            value, err = fourier_quad(self._scalar, key, self.t_start, self.t_end)
            scale = max(abs(value), self.l1_scale())
            if err > SAMPLED_REL_ERROR * scale:
                raise QuadratureError(
                    f"Fourier quadrature at omega={key} has error {err:.2e} > "
                    f"{SAMPLED_REL_ERROR:.0e} relative",
                    residual=err,
                )
            logger.debug(f"qhat({key}) = {value} +/- {err:.1e}")
            self._qhat_cache[key] = (value, err)
        value, err = self._qhat_cache[key]
        return (value.conjugate() if omega < 0 else value), err

    def qhat(self, omega):
        omega = np.asarray(omega, dtype=float)
        if self.qhat_fn is not None:
            return np.asarray(self.qhat_fn(omega), dtype=complex)
        flat = [self.qhat_with_error(w)[0] for w in omega.ravel()]
        return np.asarray(flat, dtype=complex).reshape(omega.shape)


@dataclass(eq=False)
class CouplingDrive:
    """Linearized coupling psi(r0 + v t) = psi0 + (v . grad psi) t, damped by eta."""

    psi0: float
    grad_psi: np.ndarray
    v: np.ndarray
    eta: float

    def __post_init__(self):
        self.grad_psi = np.asarray(self.grad_psi, dtype=float).reshape(3)
        self.v = np.asarray(self.v, dtype=float).reshape(3)
        if not (self.eta > 0):
            raise ParameterDomainError(f"drive.eta must be > 0, got {self.eta}")
        if not (np.all(np.isfinite(self.grad_psi)) and np.all(np.isfinite(self.v))):
            raise ParameterDomainError("grad_psi and v must be finite")

    @property
    def g(self) -> float:
        """v . grad psi, the scalar coupling of the drive."""
        return float(self.v @ self.grad_psi)

    @property
    def G(self) -> np.ndarray:
        return self.grad_psi * self.g

    def with_eta(self, eta: float) -> "CouplingDrive":
        return CouplingDrive(self.psi0, self.grad_psi, self.v, eta)

    def with_v(self, v) -> "CouplingDrive":
        return CouplingDrive(self.psi0, self.grad_psi, v, self.eta)

    def profile(self) -> DriveProfile:
        return DriveProfile.ramp_damped(self.eta)

"""Quadrature helpers for damped oscillatory integrands and Lorentzian peaks."""
import logging
import math
import warnings

import numpy as np
from scipy import integrate

from shared.errors import ParameterDomainError, QuadratureError

logger = logging.getLogger(__name__)


def checked_quad(func, a, b, **kwargs):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, err = integrate.quad(func, a, b, **kwargs)
    for warning in caught:
        logger.debug(f"quad on [{a}, {b}]: {warning.message}")
    if not (math.isfinite(value) and math.isfinite(err)):
        raise QuadratureError(f"quad returned a non-finite result on [{a}, {b}]", residual=err)
    return value, err


def fourier_quad(func, omega, a, b, epsrel=1e-11, limit=4000):
    """int_a^b func(t) exp(-i omega t) dt and an absolute error estimate.

    QUADPACK's QAWO (finite b) / QAWF (b = inf) with extrapolation.
    """
    w = abs(omega)
    if w == 0.0:
        value, err = checked_quad(func, a, b, epsabs=0.0, epsrel=epsrel, limit=limit)
        return complex(value), err
    if math.isinf(b):
        re, err_re = checked_quad(func, a, b, weight="cos", wvar=w, epsabs=1e-14, limlst=200, limit=limit)
        im, err_im = checked_quad(func, a, b, weight="sin", wvar=w, epsabs=1e-14, limlst=200, limit=limit)
    else:
        re, err_re = checked_quad(func, a, b, weight="cos", wvar=w, epsabs=0.0, epsrel=epsrel, limit=limit)
        im, err_im = checked_quad(func, a, b, weight="sin", wvar=w, epsabs=0.0, epsrel=epsrel, limit=limit)
    value = complex(re, -im)
    if omega < 0:
        value = value.conjugate()
    return value, math.hypot(err_re, err_im)


def lorentzian_nodes(half_width, eta, n_points):
    """Nodes x = eta*tan(theta) on [-half_width, half_width] and dx/dtheta.

    A peak of width eta at x = 0 becomes smooth in theta, so a uniform theta grid
    with Simpson weights resolves it with a few hundred points.
    """
    if not (eta > 0):
        raise ParameterDomainError(f"eta must be > 0, got {eta}")
    if not (half_width > 0):
        raise ParameterDomainError(f"half_width must be > 0, got {half_width}")
    n_points = int(n_points)
    if n_points < 5:
        raise ParameterDomainError(f"n_points must be >= 5, got {n_points}")
    if n_points % 2 == 0:
        n_points += 1
    theta_max = math.atan(half_width / eta)
    theta = np.linspace(-theta_max, theta_max, n_points)
    x = eta * np.tan(theta)
    jacobian = eta / np.cos(theta) ** 2
    return x, theta, jacobian


def integrate_nodes(values, theta, jacobian):
    return float(integrate.simpson(np.asarray(values) * jacobian, x=theta))

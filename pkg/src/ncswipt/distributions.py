"""Densities and samplers for Gaussian x Rayleigh + Gaussian observations.

The relay-to-destination observations have the generic forms

    X0 = X1 |X2| [1, c] + x0        (DPSK, a complex pair)
    Y0 = X1 |X2| e_p + y0           (FSK, a complex M-vector)

with ``X1 ~ CN(0, omega1)``, ``X2 ~ CN(0, omega2)`` and white CSCG noise of
variance ``omega0``.  Their densities reduce to the integral ``I`` of
:mod:`ncswipt.specfun`.  These functions evaluate ``I`` with the scalar adaptive
quadrature so they can act as an oracle independent of the vectorised
detector path.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .specfun import QuadratureError, log_integral_I_exact


@dataclass(frozen=True)
class ProductModelParams:
    omega0: float
    omega1: float
    omega2: float = 1.0
    c: complex = 1.0 + 0.0j
    p: int = 1
    M: int = 2

    def __post_init__(self):
        for name in ("omega0", "omega1", "omega2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if not abs(self.c) > 0:
            raise ValueError("c must be nonzero")
        if not (1 <= self.p <= self.M):
            raise ValueError(f"p must be in 1..M, got p={self.p}, M={self.M}")

    @property
    def eps(self):
        return self.omega1 * self.omega2 / self.omega0


@dataclass(frozen=True)
class PhaseModelParams:
    gamma: float
    c: complex = 1.0 + 0.0j

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise ValueError(f"gamma must be non-negative, got {self.gamma!r}")


def log_pdf_product_dpsk(x, params, rel_tol=1e-12):
    """Log-density of ``X0 = X1|X2|[1, c] + x0`` at the complex pair ``x``."""
    x1, x2 = complex(x[0]), complex(x[1])
    c = complex(params.c)
    w0 = params.omega0
    norm = 1.0 + abs(c) ** 2
    off_axis = abs(x2 - c * x1) ** 2 / (w0 * norm)
    beta = abs(x1 + c.conjugate() * x2) ** 2 / (w0 * norm)
    log_i = log_integral_I_exact(params.eps * norm, beta, rel_tol)
    return -off_axis - 2.0 * math.log(math.pi * w0) + log_i


def pdf_product_dpsk(x, params, rel_tol=1e-12):
    return math.exp(log_pdf_product_dpsk(x, params, rel_tol))


def log_pdf_product_fsk(y, params, rel_tol=1e-12):
    """Log-density of ``Y0 = X1|X2| e_p + y0`` at the complex M-vector ``y``."""
    y = np.asarray(y, dtype=complex)
    if y.shape != (params.M,):
        raise ValueError(f"expected a vector of length M={params.M}, got shape {y.shape}")
    w0 = params.omega0
    energy = np.abs(y) ** 2
    on = energy[params.p - 1]
    off = float(energy.sum() - on)
    log_i = log_integral_I_exact(params.eps, on / w0, rel_tol)
    return -params.M * math.log(math.pi * w0) - off / w0 + log_i


def pdf_product_fsk(y, params, rel_tol=1e-12):
    return math.exp(log_pdf_product_fsk(y, params, rel_tol))


def phase_pdf(theta, params):
    """Density of the phase difference ``angle(Y1* Y2) - angle(c)``.

    ``[Y1, Y2] = X1 [1, c] + x0`` with ``gamma = omega1 / omega0``.  Periodic
    and even in ``theta``; any real ``theta`` is accepted and reduced to
    ``[-pi, pi)``.
    """
    theta = np.asarray(theta, dtype=float)
    theta = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    g = params.gamma
    ga = g * abs(complex(params.c))
    base = g * (1.0 + abs(complex(params.c)) ** 2) + 1.0
    R = math.sqrt(ga * ga + base)
    r = ga / R
    # w = r cos(theta); 1 - |w| is formed without cancellation
    abs_t = np.abs(theta)
    psi = np.minimum(abs_t, np.pi - abs_t)
    d = base / (R * (R + ga)) + r * 2.0 * np.sin(0.5 * psi) ** 2
    phi = 2.0 * np.arcsin(np.sqrt(np.minimum(0.5 * d, 1.0)))     # |w| = cos(phi)
    sin_phi = np.sqrt(d * (2.0 - d))
    with np.errstate(divide="ignore", invalid="ignore"):
        aligned = 1.0 + np.cos(phi) * (np.pi - phi) / sin_phi
        p2 = phi * phi
        series = p2 * (1 / 3 + p2 * (1 / 45 + p2 * (2 / 945 + p2 * (1 / 4725 + p2 * 2 / 93555))))
        opposed = np.where(phi < 0.1, series, 1.0 - phi * np.cos(phi) / sin_phi)
    bracket = np.where(abs_t <= 0.5 * np.pi, aligned, opposed)
    out = bracket / (2.0 * np.pi * (1.0 + ga * ga * np.sin(theta) ** 2 / base))
    return float(out) if out.ndim == 0 else out


def sample_cscg(rng, variance, n):
    """I.i.d. ``CN(0, variance)`` draws of shape ``n``."""
    if not variance > 0:
        raise ValueError(f"variance must be positive, got {variance!r}")
    shape = (n,) if np.isscalar(n) else tuple(n)
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5 * variance)


def sample_rayleigh_coeff(rng, size=()):
    """Unit-variance CSCG fading coefficient(s)."""
    return sample_cscg(rng, 1.0, size)


def _bessel_moment_closed_form(a, b):
    """``int_0^inf x exp(-a x) K0(b x) dx`` in closed form, ``b > 0``, ``a > -b``.

    Written as ``G(r) / b**2`` with ``r = a / b``; for ``r > 1`` the arccos
    ratio continues to arccosh, and near ``r = 1`` a series avoids the 0/0.
    """
    r = a / b
    e = 1.0 - r
    if abs(e) < 1e-2:
        g = 1 / 3 + e * (4 / 15 + e * (6 / 35 + e * (32 / 315 + e * 40 / 693)))
    else:
        if r < 1:
            ratio = math.acos(r) / math.sqrt(1.0 - r * r)
        else:
            ratio = math.acosh(r) / math.sqrt(r * r - 1.0)
        g = (1.0 - r * ratio) / (1.0 - r * r)
    return g / (b * b)


def bessel_identity_check(a, b, rel_tol=1e-11):
    """Return ``(numeric, closed_form)`` for ``int_0^inf x e^{-ax} K0(bx) dx``."""
    if not b > 0:
        raise ValueError("b must be positive")
    if not a + b > 0:
        raise ValueError("a + b must be positive")
    decay = a + b

    # substitute u = (a + b) x so the exponential scale is unity
    def f(u):
        x = u / decay
        return x * special.k0e(b * x) * math.exp(-u) / decay

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        res = integrate.quad(f, 0.0, math.inf, epsabs=0.0, epsrel=rel_tol, limit=400,
                             full_output=1)
    if len(res) > 3:
        raise QuadratureError(f"Bessel moment at a={a}, b={b}: {res[3]}", res[0], res[1])
    return res[0], _bessel_moment_closed_form(a, b)

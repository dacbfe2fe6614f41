"""The relay-link integral ``I(eps, beta)`` and its closed-form approximations.

``I(eps, beta)`` is the expectation of ``g(t) = exp(-beta / (1 + eps t)) / (1 + eps t)``
over a unit-mean exponential ``t``.  As a function of ``beta`` it is itself a
probability density on ``[0, inf)``, and it decays like ``exp(-2 sqrt(beta / eps))``,
so for the statistics met in a receiver it routinely underflows.  Every routine
therefore has a ``log_`` form, which is what the detectors use; the plain-value
functions are ``exp`` wrappers.

Two independent exact evaluators are provided:

* :func:`log_integral_I_exact` -- scalar, QUADPACK adaptive subdivision of the
  bounded integrand, split at its mode.  Used as the reference.
* :func:`log_integral_I` -- vectorised double-exponential quadrature with
  step halving.  Used on the Monte Carlo hot path.
"""

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, special

BOUNDARY_TOL = 1e-12
MAX_RULE_ORDER = 64
MAX_TAYLOR_ORDER = 24

# double-exponential quadrature: nodes u in [-_DE_SPAN, _DE_SPAN], h = 2**-level / 2
_DE_SPAN = 4.0
_DE_MIN_LEVEL = 3
_DE_MAX_LEVEL = 9
_DE_CHUNK = 2048


class QuadratureError(ArithmeticError):
    """Numerical integration did not reach the requested tolerance.

    ``estimate`` is the best available value (in whatever units the raising
    routine works in, documented there) and ``error_bound`` the achieved
    relative error estimate.
    """

    def __init__(self, message, estimate, error_bound):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class BoundaryCaseError(ValueError):
    """``beta * eps == 1``: the N-th order approximation is undefined there."""


@dataclass(frozen=True)
class IntegralArgs:
    eps: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.eps) and self.eps > 0):
            raise ValueError(f"eps must be positive and finite, got {self.eps!r}")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"beta must be non-negative and finite, got {self.beta!r}")


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on ``[-1, 1]``."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f, a, b):
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        return half * np.sum(self.weights * f(half * self.nodes + mid))


@lru_cache(maxsize=None)
def gauss_legendre_rule(N):
    if not (isinstance(N, (int, np.integer)) and 1 <= N <= MAX_RULE_ORDER):
        raise ValueError(f"Gauss-Legendre order must be in [1, {MAX_RULE_ORDER}], got {N!r}")
    x, w = np.polynomial.legendre.leggauss(int(N))
    # enforce exact symmetry; leggauss is accurate to a few ulps
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    if N == 2:
        x = np.array([-math.sqrt(3.0) / 3.0, math.sqrt(3.0) / 3.0])
        w = np.array([1.0, 1.0])
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(int(N), x, w)


def _as_float_array(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def _scalar_or_array(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def bessel_K0(x):
    """Modified Bessel function of the second kind, order zero (``x > 0``)."""
    x = _as_float_array(x, "x")
    if np.any(x <= 0):
        raise ValueError("K0 is defined here for x > 0 only")
    return _scalar_or_array(special.k0(x))


def bessel_K0_scaled(x):
    """``exp(x) * K0(x)``, finite over the whole positive axis."""
    x = _as_float_array(x, "x")
    if np.any(x <= 0):
        raise ValueError("K0 is defined here for x > 0 only")
    return _scalar_or_array(special.k0e(x))


# --- exact evaluation ---------------------------------------------------------

def _log_integrand(t, eps, beta):
    return -t - beta / (1.0 + eps * t) - np.log1p(eps * t)


def _mode(eps, beta):
    """Location of the maximum of the log-integrand on ``t >= 0``.

    Solves ``v**2 + eps v - beta eps = 0`` for ``v = 1 + eps t``, written so
    that small ``beta`` does not cancel.
    """
    v = 2.0 * beta * eps / (eps + np.sqrt(eps * eps + 4.0 * beta * eps))
    return np.maximum(0.0, (v - 1.0) / eps)


def log_integral_I_exact(eps, beta, rel_tol=1e-12):
    """``log I(eps, beta)`` by adaptive quadrature of the bounded integrand.

    On failure raises :class:`QuadratureError` whose ``estimate`` is the best
    log-value found.
    """
    IntegralArgs(eps, beta)
    if not 0 < rel_tol <= 1e-3:
        raise ValueError(f"rel_tol must be in (0, 1e-3], got {rel_tol!r}")
    eps = float(eps)
    beta = float(beta)
    t_hat = float(_mode(eps, beta))
    peak = -t_hat - beta / (1.0 + eps * t_hat) - math.log1p(eps * t_hat)

    def f(t):
        return math.exp(-t - beta / (1.0 + eps * t) - math.log1p(eps * t) - peak)

    pieces = [(0.0, t_hat), (t_hat, math.inf)] if t_hat > 0 else [(0.0, math.inf)]
    total = 0.0
    abserr = 0.0
    failure = None
    for lo, hi in pieces:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            res = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rel_tol, limit=200, full_output=1)
        total += res[0]
        abserr += res[1]
        if len(res) > 3:
            failure = res[3]
    log_value = math.log(total) + peak
    if failure is not None or abserr > rel_tol * total:
        raise QuadratureError(
            f"I({eps!r}, {beta!r}) did not converge: {failure or 'error bound exceeded'}",
            estimate=log_value,
            error_bound=abserr / total,
        )
    return log_value


def integral_I_exact(eps, beta, rel_tol=1e-12):
    return math.exp(log_integral_I_exact(eps, beta, rel_tol))


def _de_partial_sums(u, t_hat, sigma, eps, beta, peak):
    """Trapezoid sums (without the step factor) over DE nodes ``u`` for each element.

    Right of the mode: ``t = t_hat + sigma exp(pi/2 sinh u)`` (exp-sinh).
    Left of the mode: ``t = t_hat expit(pi sinh u)`` (tanh-sinh on ``[0, t_hat]``).
    """
    x = 0.5 * np.pi * np.sinh(u)
    log_cosh = np.log(0.5 * np.pi * np.cosh(u))
    e = eps[:, None]
    b = beta[:, None]
    th = t_hat[:, None]
    pk = peak[:, None]

    t_right = th + sigma[:, None] * np.exp(x)
    log_w_right = np.log(sigma)[:, None] + x + log_cosh
    right = np.exp(_log_integrand(t_right, e, b) - pk + log_w_right).sum(axis=1)

    left = np.zeros_like(right)
    has_left = t_hat > 0
    if np.any(has_left):
        th_l = th[has_left]
        t_left = th_l * special.expit(2.0 * x)
        log_w_left = (np.log(th_l) + np.log(2.0) + special.log_expit(2.0 * x)
                      + special.log_expit(-2.0 * x) + log_cosh)
        left[has_left] = np.exp(
            _log_integrand(t_left, e[has_left], b[has_left]) - pk[has_left] + log_w_left
        ).sum(axis=1)
    return right + left


def _log_integral_I_de(eps, beta, rel_tol):
    t_hat = _mode(eps, beta)
    peak = _log_integrand(t_hat, eps, beta)
    v = 1.0 + eps * t_hat
    curvature = np.abs(eps * eps / v**2 - 2.0 * beta * eps * eps / v**3)
    slope = np.abs(1.0 - beta * eps / v**2 + eps / v)
    scale = np.where(t_hat > 0, np.sqrt(curvature), np.maximum(slope, np.sqrt(curvature)))
    sigma = 1.0 / np.maximum(scale, 1e-300)

    h = 0.5
    u = np.arange(-_DE_SPAN, _DE_SPAN + 0.5 * h, h)
    total = _de_partial_sums(u, t_hat, sigma, eps, beta, peak) * h
    err = np.full_like(total, np.inf)
    active = np.ones(total.shape, dtype=bool)
    for level in range(1, _DE_MAX_LEVEL + 1):
        h *= 0.5
        u_new = np.arange(-_DE_SPAN + h, _DE_SPAN, 2.0 * h)
        idx = np.flatnonzero(active)
        refined = 0.5 * total[idx] + h * _de_partial_sums(
            u_new, t_hat[idx], sigma[idx], eps[idx], beta[idx], peak[idx])
        err[idx] = np.abs(refined - total[idx]) / refined
        total[idx] = refined
        if level >= _DE_MIN_LEVEL:
            active[idx] = err[idx] > rel_tol
            if not active.any():
                break
    log_value = np.log(total) + peak
    if active.any():
        raise QuadratureError(
            f"{int(active.sum())} of {active.size} evaluations of I did not reach rel_tol={rel_tol}",
            estimate=log_value,
            error_bound=err,
        )
    return log_value


def log_integral_I(eps, beta, rel_tol=1e-9):
    """Vectorised ``log I(eps, beta)``; ``eps`` and ``beta`` broadcast.

    ``eps == 0`` is accepted and gives the limit ``-beta`` (no second-hop
    signal).  Raises :class:`QuadratureError` (``estimate`` holds the array
    of log-values) if any element fails to converge.
    """
    eps = _as_float_array(eps, "eps")
    beta = _as_float_array(beta, "beta")
    if np.any(eps < 0) or np.any(beta < 0):
        raise ValueError("eps and beta must be non-negative")
    if not 0 < rel_tol <= 1e-3:
        raise ValueError(f"rel_tol must be in (0, 1e-3], got {rel_tol!r}")
    eps, beta = np.broadcast_arrays(eps, beta)
    shape = eps.shape
    eps = eps.ravel()
    beta = beta.ravel()
    out = -beta.copy()
    pos = np.flatnonzero(eps > 0)
    for start in range(0, pos.size, _DE_CHUNK):
        sel = pos[start:start + _DE_CHUNK]
        out[sel] = _log_integral_I_de(eps[sel], beta[sel], rel_tol)
    return _scalar_or_array(out.reshape(shape))


# --- closed-form approximations -----------------------------------------------

@lru_cache(maxsize=None)
def _central_moment(n):
    """``E[(t - 1)**n]`` for unit exponential ``t``: ``n! sum_i (-1)**i / i!``."""
    d = 1
    for k in range(1, n + 1):
        d = k * d + (-1) ** k
    return d


@lru_cache(maxsize=None)
def _partition_weights(n):
    """``{parts: sum 1/prod(m_j!)}`` over integer partitions of ``n``.

    A partition is given by multiplicities ``m_i`` with ``sum i m_i = n``;
    ``parts = sum m_i``.  Returned as a tuple of ``(parts, weight)``.
    """
    weights = {}

    def walk(remaining, largest, parts, inv_fact):
        if remaining == 0:
            weights[parts] = weights.get(parts, Fraction(0)) + inv_fact
            return
        for size in range(min(largest, remaining), 0, -1):
            for mult in range(1, remaining // size + 1):
                walk(remaining - size * mult, size - 1, parts + mult,
                     inv_fact / math.factorial(mult))

    walk(n, n, 0, Fraction(1))
    return tuple(sorted((k, float(v)) for k, v in weights.items()))


def _taylor_bracket(eps, beta, N):
    tau = 1.0 / (1.0 + eps)
    bt = beta * tau
    et = eps * tau
    bracket = np.ones_like(bt)
    for n in range(2, N + 1):
        inner = np.zeros_like(bt)
        for parts, weight in _partition_weights(n):
            inner += weight * (parts - bt) * (-bt) ** (parts - 1)
        bracket += (-1) ** n * et**n * _central_moment(n) * inner
    return bracket


def _approx_log_terms(eps, beta, N):
    """Signed log-magnitude of ``I_N`` plus a mask of boundary elements.

    Returns ``(log_abs, sign, boundary)``; boundary entries hold the closed
    form ``beta e^beta K0(2 beta)``.
    """
    eps, beta = np.broadcast_arrays(np.asarray(eps, float), np.asarray(beta, float))
    log_abs = np.empty(eps.shape)
    sign = np.ones(eps.shape)

    zero = eps == 0
    log_abs[zero] = -beta[zero]

    e = np.where(zero, 1.0, eps)
    be = e * beta
    boundary = ~zero & (np.abs(be - 1.0) < BOUNDARY_TOL)
    with np.errstate(over="ignore", divide="ignore"):
        log_c = 1.0 / e - np.log(e)
    taylor = ~zero & ~boundary & (be < 1) & (log_c > 0)
    lower = ~zero & ~boundary & (be < 1) & (log_c <= 0)
    upper = ~zero & ~boundary & (be > 1)

    if taylor.any():
        ee, bb = e[taylor], beta[taylor]
        tau = 1.0 / (1.0 + ee)
        br = _taylor_bracket(ee, bb, N)
        with np.errstate(divide="ignore"):
            log_abs[taylor] = np.log(tau) - bb * tau + np.log(np.abs(br))
        sign[taylor] = np.sign(br)

    quad = lower | upper
    if quad.any():
        rule = gauss_legendre_rule(N)
        ee, bb = e[quad], beta[quad]
        root = np.sqrt(bb / ee)
        a = np.where(lower[quad], bb, 1.0 / ee)
        half = 0.5 * (root - a)
        nodes = half[:, None] * rule.nodes + (0.5 * (root + a))[:, None]
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            psi = np.exp(2.0 * root[:, None] - nodes - bb[:, None] / (ee[:, None] * nodes)) / nodes
            psi_sum = half * (psi @ rule.weights)
            direction = np.where(lower[quad], -1.0, 1.0)
            scaled = special.k0e(2.0 * root) + direction * psi_sum
            log_abs[quad] = log_c[quad] - 2.0 * root + np.log(np.abs(scaled))
        sign[quad] = np.sign(scaled)

    if boundary.any():
        bb = beta[boundary]
        log_abs[boundary] = np.log(bb) - bb + np.log(special.k0e(2.0 * bb))
    return log_abs, sign, boundary


def _check_approx_args(eps, beta):
    eps = _as_float_array(eps, "eps")
    beta = _as_float_array(beta, "beta")
    if np.any(eps < 0) or np.any(beta < 0):
        raise ValueError("eps and beta must be non-negative")
    return eps, beta


def integral_I_approxN(eps, beta, N):
    """N-th order piecewise approximation ``I_N(eps, beta)``.

    Taylor expansion of the exponential expectation around ``t = 1`` when
    ``beta eps < 1`` and ``e^(1/eps)/eps > 1``; otherwise ``K0`` plus or minus an
    N-point Gauss-Legendre estimate of the remaining sub-integral.  The value
    can be non-positive for unlucky orders; it is returned as computed.
    """
    if not (isinstance(N, (int, np.integer)) and 1 <= N <= MAX_TAYLOR_ORDER):
        raise ValueError(f"N must be an integer in [1, {MAX_TAYLOR_ORDER}], got {N!r}")
    eps, beta = _check_approx_args(eps, beta)
    log_abs, sign, boundary = _approx_log_terms(eps, beta, int(N))
    if boundary.any():
        raise BoundaryCaseError("beta*eps == 1: use the closed form beta e^beta K0(2 beta)")
    with np.errstate(over="ignore"):
        return _scalar_or_array(sign * np.exp(log_abs))


def log_integral_I_approx2(eps, beta):
    """Vectorised ``log I_2(eps, beta)``, the second-order closed form.

    At ``beta eps == 1`` the exact closed form is used.  ``eps == 0`` gives
    ``-beta``.  A non-positive approximation maps to ``-inf``.  Note that in
    the ``e^(1/eps)/eps <= 1`` branch ``I_2`` diverges logarithmically as
    ``beta -> 0`` (``+inf`` at ``beta == 0``).
    """
    eps, beta = _check_approx_args(eps, beta)
    log_abs, sign, _ = _approx_log_terms(eps, beta, 2)
    return _scalar_or_array(np.where(sign > 0, log_abs, -np.inf))


def integral_I_approx2(eps, beta):
    eps, beta = _check_approx_args(eps, beta)
    log_abs, sign, _ = _approx_log_terms(eps, beta, 2)
    with np.errstate(over="ignore"):
        value = sign * np.exp(log_abs)
    return _scalar_or_array(np.maximum(value, 0.0))


def integral_I_boundary(beta):
    """Closed form of ``I(1/beta, beta) = beta e^beta K0(2 beta)``."""
    beta = _as_float_array(beta, "beta")
    if np.any(beta <= 0):
        raise ValueError("beta must be positive")
    return _scalar_or_array(beta * np.exp(-beta) * special.k0e(2.0 * beta))


def approx2_branch(eps, beta):
    """Which piece of ``I_2`` applies: 'taylor', 'bessel_minus', 'bessel_plus' or 'boundary'."""
    eps, beta = float(eps), float(beta)
    IntegralArgs(eps, beta)
    if abs(eps * beta - 1.0) < BOUNDARY_TOL:
        return "boundary"
    if eps * beta > 1.0:
        return "bessel_plus"
    return "taylor" if 1.0 / eps - math.log(eps) > 0 else "bessel_minus"


def accuracy_grid(eps_db, beta_db, rel_tol=1e-12):
    """Compare ``I_2`` with the adaptive-quadrature ``I`` on a dB grid.

    Returns a dict of flat arrays: ``eps_db``, ``beta_db``, ``log_exact``,
    ``log_approx`` and ``rel_err = |I_2 / I - 1|``.
    """
    e_db, b_db = np.meshgrid(np.asarray(eps_db, float), np.asarray(beta_db, float), indexing="ij")
    e_db, b_db = e_db.ravel(), b_db.ravel()
    eps = 10.0 ** (e_db / 10.0)
    beta = 10.0 ** (b_db / 10.0)
    log_exact = np.array([log_integral_I_exact(e, b, rel_tol) for e, b in zip(eps, beta)])
    log_approx = log_integral_I_approx2(eps, beta)
    with np.errstate(over="ignore", invalid="ignore"):
        rel_err = np.abs(np.expm1(log_approx - log_exact))
    return {"eps_db": e_db, "beta_db": b_db, "eps": eps, "beta": beta,
            "log_exact": log_exact, "log_approx": log_approx, "rel_err": rel_err}

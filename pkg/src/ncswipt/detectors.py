"""Relay and destination maximum-likelihood detectors.

All detectors work on batches: received vectors carry a leading trial axis
and decisions come back as integer arrays.  Destination metrics are
accumulated as log-likelihoods (up to message-independent constants) and
decided by ``argmax``, which resolves ties toward the smallest index.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from . import specfun
from .transition import relay_table

EXACT_REL_TOL = 1e-9


@lru_cache(maxsize=None)
def _unit_phasors(M):
    """``(cos, sin)`` of ``2 pi m / M`` with the axis crossings made exact."""
    angle = 2.0 * np.pi * np.arange(M) / M
    cos, sin = np.cos(angle), np.sin(angle)
    for v in (cos, sin):
        v[np.abs(v) < 1e-15] = 0.0
        v[np.abs(v - 1.0) < 1e-15] = 1.0
        v[np.abs(v + 1.0) < 1e-15] = -1.0
    cos.setflags(write=False)
    sin.setflags(write=False)
    return cos, sin


def _rotate(z, M):
    """``e^{j 2 pi m / M} z`` for every m, appended as a last axis."""
    cos, sin = _unit_phasors(M)
    z = np.asarray(z)[..., None]
    return (z.real * cos - z.imag * sin) + 1j * (z.real * sin + z.imag * cos)


def relay_detect_dpsk(y, M):
    """Differential detection of ``y[..., :] = [y(l-1), y(l)]``."""
    y = np.asarray(y, dtype=complex)
    z = np.conj(y[..., 1]) * y[..., 0]
    metric = _rotate(z, M).real
    return np.argmax(metric, axis=-1)


def relay_detect_fsk(y):
    """Largest-energy subband."""
    return np.argmax(np.abs(np.asarray(y)) ** 2, axis=-1)


@dataclass(frozen=True, eq=False)
class DecisionStatistics:
    """Per-candidate statistics entering the destination metrics.

    ``direct[n, m]`` is ``beta_0(m)`` (DPSK) or ``|y_0d(m)|^2 / sigma_0d^2``
    (FSK).  For each relay ``r`` and candidate relay message ``q``:
    DPSK ``beta_plus/beta_minus[n, r, q]``; FSK ``energy[n, r, q] =
    |y_rd(q)|^2 / sigma_rd^2`` (``beta_minus`` then holds
    ``(||y_rd||^2 - |y_rd(q)|^2) / sigma_rd^2`` and ``beta_plus`` the energy).
    """

    direct: np.ndarray
    beta_plus: np.ndarray
    beta_minus: np.ndarray


def dpsk_statistics(block, params):
    M = block.M
    y0d = block.y_0d
    beta0 = _rotate(y0d[:, 0] * np.conj(y0d[:, 1]), M).real / params.sigma_0d_sq
    prev = _rotate(block.y_rd[..., 0], M)          # y_rd(l-1) e^{j 2 pi q / M}
    cur = block.y_rd[..., 1][..., None]
    scale = 2.0 * params.sigma_rd_sq[None, :, None]
    beta_plus = np.abs(cur + prev) ** 2 / scale
    beta_minus = np.abs(cur - prev) ** 2 / scale
    return DecisionStatistics(beta0, beta_plus, beta_minus)


def fsk_statistics(block, params):
    direct = np.abs(block.y_0d) ** 2 / params.sigma_0d_sq
    energy = np.abs(block.y_rd) ** 2 / params.sigma_rd_sq[None, :, None]
    rest = energy.sum(axis=-1, keepdims=True) - energy
    return DecisionStatistics(direct, energy, rest)


def _direct_weight(block, params):
    g = params.gamma_0d
    return 2.0 * g / (1.0 + 2.0 * g) if block.modulation == "DPSK" else g / (1.0 + g)


def _eps(block, params):
    factor = 2.0 if block.modulation == "DPSK" else 1.0
    return factor * params.gamma_rd[None, :, None]


def _statistics(block, params):
    return dpsk_statistics(block, params) if block.modulation == "DPSK" else fsk_statistics(block, params)


def relay_log_terms(stats, eps, log_integral):
    """``log[e^{-beta_minus(q)} I(eps, beta_plus(q))]`` per trial, relay and q."""
    return -stats.beta_minus + log_integral(np.broadcast_to(eps, stats.beta_plus.shape),
                                            stats.beta_plus)


def table_metrics(block, params, tables, log_integral):
    """Destination metrics using full transition tables (one per relay)."""
    stats = _statistics(block, params)
    terms = relay_log_terms(stats, _eps(block, params), log_integral)   # (n, K, q)
    metric = _direct_weight(block, params) * stats.direct
    for r, table in enumerate(tables):
        # log sum_q Pr(q | m) T_r(q) for every candidate m
        weighted = table.log_probs()[None, :, :] + terms[:, r, None, :]
        metric = metric + logsumexp(weighted, axis=-1)
    return metric


def neighbour_metrics(block, params, tables, log_integral):
    """DPSK metrics with the transition sum truncated to the nearest neighbours.

    ``(1 - e) T(m) + e T(m + 1)`` for M = 2 and
    ``(1 - e) T(m) + e (T(m + 1) + T(m - 1)) / 2`` for M >= 4, indices mod M,
    where the weights are read from each table's offset row.
    """
    M = block.M
    stats = _statistics(block, params)
    terms = relay_log_terms(stats, _eps(block, params), log_integral)
    metric = _direct_weight(block, params) * stats.direct
    m = np.arange(M)
    shifts = (0, 1) if M == 2 else (0, 1, M - 1)
    for r, table in enumerate(tables):
        row = table.offsets
        parts = [np.log(row[s]) + terms[:, r, (m + s) % M] for s in shifts if row[s] > 0]
        metric = metric + logsumexp(np.stack(parts), axis=0)
    return metric


def _default_tables(block, params, variant):
    mod = block.modulation
    return [relay_table(mod, variant, g, block.M) for g in params.gamma_0r]


def _exact_log_integral(rel_tol):
    return lambda eps, beta: specfun.log_integral_I(eps, beta, rel_tol)


def dest_detect_dpsk_exact(block, params, tables=None, log_integral=None,
                           rel_tol=EXACT_REL_TOL):
    if tables is None:
        tables = _default_tables(block, params, "exact")
    log_integral = log_integral or _exact_log_integral(rel_tol)
    return np.argmax(table_metrics(block, params, tables, log_integral), axis=-1)


def dest_detect_fsk_exact(block, params, tables=None, log_integral=None,
                          rel_tol=EXACT_REL_TOL):
    if tables is None:
        tables = _default_tables(block, params, "exact")
    log_integral = log_integral or _exact_log_integral(rel_tol)
    return np.argmax(table_metrics(block, params, tables, log_integral), axis=-1)


def dest_detect_dpsk_approx(block, params, tables=None, log_integral=None):
    if tables is None:
        tables = _default_tables(block, params, "approx")
    log_integral = log_integral or specfun.log_integral_I_approx2
    return np.argmax(neighbour_metrics(block, params, tables, log_integral), axis=-1)


def dest_detect_fsk_approx(block, params, tables=None, log_integral=None):
    if tables is None:
        tables = _default_tables(block, params, "approx")
    log_integral = log_integral or specfun.log_integral_I_approx2
    return np.argmax(table_metrics(block, params, tables, log_integral), axis=-1)


def dest_detect_direct(block, params):
    """Direct-link-only noncoherent detection (relays ignored)."""
    stats = _statistics(block, params)
    return np.argmax(stats.direct, axis=-1)


def dest_detect(block, params, variant, tables=None, rel_tol=EXACT_REL_TOL):
    """Dispatch on modulation for ``variant`` in {'exact', 'approx'}."""
    if variant == "exact":
        fn = dest_detect_dpsk_exact if block.modulation == "DPSK" else dest_detect_fsk_exact
        return fn(block, params, tables, rel_tol=rel_tol)
    if variant == "approx":
        fn = dest_detect_dpsk_approx if block.modulation == "DPSK" else dest_detect_fsk_approx
        return fn(block, params, tables)
    raise ValueError(f"unknown detector variant {variant!r}")

"""Relay decision transition probabilities ``Pr(m_r | m)`` and relay SERs."""

import io
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .distributions import PhaseModelParams, phase_pdf
from .specfun import QuadratureError

SOURCES = ("dpsk_exact", "dpsk_approx", "fsk")
LOG_FLOOR = 1e-300


def _check_M(M, power_of_two=True):
    if not isinstance(M, (int, np.integer)) or M < 2:
        raise ValueError(f"M must be an integer >= 2, got {M!r}")
    if power_of_two and M & (M - 1):
        raise ValueError(f"M must be a power of two, got {M}")
    return int(M)


def _check_gamma(gamma):
    gamma = float(gamma)
    if not (math.isfinite(gamma) and gamma >= 0):
        raise ValueError(f"gamma must be non-negative and finite, got {gamma!r}")
    return gamma


@dataclass(frozen=True, eq=False)
class TransitionTable:
    """``probs[m, m_r] = Pr(m_r | m)``, circulant in ``m_r - m``."""

    M: int
    probs: np.ndarray
    source: str
    gamma: float

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if self.probs.shape != (self.M, self.M):
            raise ValueError(f"probs must be {self.M}x{self.M}")
        self.probs.setflags(write=False)

    @classmethod
    def from_offsets(cls, row, source, gamma):
        """Build the circulant table from ``row[n] = Pr(m_r = m + n mod M | m)``."""
        row = np.asarray(row, dtype=float)
        M = row.size
        idx = (np.arange(M)[None, :] - np.arange(M)[:, None]) % M
        return cls(M, row[idx], source, gamma)

    @property
    def offsets(self):
        return self.probs[0]

    def log_probs(self, floor=LOG_FLOOR):
        return np.log(np.maximum(self.probs, floor))

    def to_csv(self, path=None):
        """Write (or return, when ``path`` is None) the table as CSV text."""
        buf = io.StringIO()
        buf.write(f"gamma={self.gamma!r},M={self.M},source={self.source}\n")
        for row in self.probs:
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w") as fh:
            fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines:
            raise ValueError(f"{path}: empty transition table file")
        try:
            meta = dict(item.split("=", 1) for item in lines[0].split(","))
            M = int(meta["M"])
            gamma = float(meta["gamma"])
            source = meta["source"]
        except (KeyError, ValueError) as exc:
            raise ValueError(f"{path}:1: bad header {lines[0]!r}") from exc
        rows = []
        for lineno, line in enumerate(lines[1:], start=2):
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
        return cls(M, np.array(rows), source, gamma)


def _phase_mass(gamma, M, n, rel_tol):
    params = PhaseModelParams(gamma)
    lo = (2 * n - 1) * math.pi / M
    hi = (2 * n + 1) * math.pi / M
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        res = integrate.quad(lambda t: phase_pdf(t, params), lo, hi,
                             epsabs=0.0, epsrel=rel_tol, limit=200, full_output=1)
    if len(res) > 3:
        raise QuadratureError(f"P_{n}(gamma={gamma}) with M={M}: {res[3]}", res[0], res[1])
    return res[0]


@lru_cache(maxsize=4096)
def _dpsk_offsets_exact(gamma, M, rel_tol):
    half = [_phase_mass(gamma, M, n, rel_tol) for n in range(M // 2 + 1)]
    return tuple(half + half[1:M - M // 2][::-1])


def dpsk_transition_exact(gamma, M, rel_tol=1e-12):
    """Exact M-DPSK relay transition table at first-hop SNR ``gamma``.

    Each offset probability is the mass of the phase-difference density over
    the decision sector ``[(2n - 1) pi / M, (2n + 1) pi / M]``; only
    ``n <= M/2`` is integrated, the rest follows from ``P_n = P_{M-n}``.
    """
    gamma = _check_gamma(gamma)
    M = _check_M(M)
    if not 0 < rel_tol <= 1e-3:
        raise ValueError(f"rel_tol must be in (0, 1e-3], got {rel_tol!r}")
    offsets = _dpsk_offsets_exact(round(gamma, 9), M, rel_tol)
    return TransitionTable.from_offsets(offsets, "dpsk_exact", gamma)


def dpsk_relay_ser(gamma, M):
    """Closed-form M-DPSK relay SER; the M >= 4 bound is capped at ``(M-1)/M``."""
    gamma = _check_gamma(gamma)
    M = _check_M(M)
    if M == 2:
        return 1.0 / (2.0 * (1.0 + gamma))
    c = math.cos(math.pi / M)
    q = (1.0 - c) * gamma
    bound = 1.03 * math.sqrt((1.0 + c) / (2.0 * c)) * (1.0 - math.sqrt(q / (1.0 + q)))
    return min(bound, (M - 1) / M)


def dpsk_transition_approx(gamma, M):
    """Nearest-neighbour M-DPSK transition table built from the relay SER."""
    gamma = _check_gamma(gamma)
    M = _check_M(M)
    ser = dpsk_relay_ser(gamma, M)
    row = np.zeros(M)
    row[0] = 1.0 - ser
    if M == 2:
        row[1] = ser
    else:
        row[1] = row[M - 1] = 0.5 * ser
    return TransitionTable.from_offsets(row, "dpsk_approx", gamma)


def fsk_relay_ser(gamma, M):
    """Noncoherent M-FSK SER in Rayleigh fading at average SNR ``gamma``."""
    gamma = _check_gamma(gamma)
    M = _check_M(M, power_of_two=False)
    return sum((-1) ** (m + 1) * math.comb(M - 1, m) / (1.0 + m * (1.0 + gamma))
               for m in range(1, M))


def fsk_transition(gamma, M):
    gamma = _check_gamma(gamma)
    M = _check_M(M, power_of_two=False)
    ser = fsk_relay_ser(gamma, M)
    row = np.full(M, ser / (M - 1))
    row[0] = 1.0 - ser
    return TransitionTable.from_offsets(row, "fsk", gamma)


def relay_table(modulation, variant, gamma, M, rel_tol=1e-12):
    """Table used by a destination detector: ``variant`` is 'exact' or 'approx'."""
    if modulation == "FSK":
        return fsk_transition(gamma, M)
    if variant == "exact":
        return dpsk_transition_exact(gamma, M, rel_tol)
    return dpsk_transition_approx(gamma, M)

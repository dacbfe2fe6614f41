"""Scenario description, link budgets and block generation.

Both relaying protocols are mapped onto one observation model per
modulation through per-link SNRs ``gamma_ij`` and noise variances
``sigma_ij^2``:

    y_0r = sigma_0r (sqrt(gamma_0r) h_0r s   + n_0r)
    y_0d = sigma_0d (sqrt(gamma_0d) h_0d s   + n_0d)
    y_rd = sigma_rd (sqrt(gamma_rd) |h_0r| h_rd s_r + n_rd)

where ``s`` is the DPSK pair ``[1, e^{j 2 pi m / M}]`` or the FSK unit vector
``e_m``.  The harvested-power factor ``|h_0r|`` is drawn per block, so
``gamma_rd`` excludes it.
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .detectors import relay_detect_dpsk, relay_detect_fsk
from .distributions import sample_cscg

PROTOCOLS = ("PS", "TS")
MODULATIONS = ("DPSK", "FSK")

# simulation defaults
DEFAULT_ETA = 0.6
DEFAULT_PATHLOSS_EXP = 2.7
DEFAULT_D0D = 3.0


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    protocol: str
    modulation: str
    M: int = 2
    K: int = 1
    rho: float = None
    alpha: float = None
    eta: float = DEFAULT_ETA
    P0: float = 1000.0
    sigma0_sq: float = 1.0
    rate_R: float = None
    D0d: float = DEFAULT_D0D
    D0r: tuple = (1.5,)
    pathloss_exp: float = DEFAULT_PATHLOSS_EXP
    noise_split: float = 0.5

    def __post_init__(self):
        # normalise the mutable / loosely typed fields
        D0r = self.D0r
        if np.isscalar(D0r):
            D0r = (D0r,)
        object.__setattr__(self, "D0r", tuple(float(d) for d in D0r))
        if self.rate_R is None and isinstance(self.M, (int, np.integer)) and self.M >= 2:
            object.__setattr__(self, "rate_R", math.log2(self.M))
        self.validate()

    def validate(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.modulation not in MODULATIONS:
            raise ConfigError(f"modulation must be one of {MODULATIONS}, got {self.modulation!r}")
        if not isinstance(self.M, (int, np.integer)) or self.M < 2 or self.M & (self.M - 1):
            raise ConfigError(f"M must be a power of two >= 2, got {self.M!r}")
        if not isinstance(self.K, (int, np.integer)) or self.K < 1:
            raise ConfigError(f"K must be a positive integer, got {self.K!r}")
        if self.protocol == "PS":
            if self.alpha is not None:
                raise ConfigError("alpha is a TS parameter; leave it unset for PS")
            if self.rho is None or not 0 < self.rho < 1:
                raise ConfigError(f"PS needs rho in (0, 1), got {self.rho!r}")
        else:
            if self.rho is not None:
                raise ConfigError("rho is a PS parameter; leave it unset for TS")
            if self.alpha is None or not 0 < self.alpha < 1:
                raise ConfigError(f"TS needs alpha in (0, 1), got {self.alpha!r}")
        if not 0 < self.eta < 1:
            raise ConfigError(f"eta must be in (0, 1), got {self.eta!r}")
        for name in ("P0", "sigma0_sq", "rate_R", "D0d", "pathloss_exp"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive and finite, got {value!r}")
        if not 0 < self.noise_split < 1:
            raise ConfigError(f"noise_split must be in (0, 1), got {self.noise_split!r}")
        if len(self.D0r) != self.K:
            raise ConfigError(f"D0r needs K={self.K} distances, got {len(self.D0r)}")
        for d in self.D0r:
            if not 0 < d < self.D0d:
                raise ConfigError(f"each D0r must lie in (0, D0d={self.D0d}), got {d}")

    @property
    def snr_db(self):
        return 10.0 * math.log10(self.P0 / self.sigma0_sq)

    def with_snr_db(self, snr_db):
        return self.replace(P0=self.sigma0_sq * 10.0 ** (snr_db / 10.0))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


_INT_KEYS = ("M", "K")
_STR_KEYS = ("protocol", "modulation")
_FIELDS = tuple(f.name for f in dataclasses.fields(ScenarioConfig))


def load_config(path):
    """Read a ``key = value`` scenario file (``#`` starts a comment)."""
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    values = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            if key in _STR_KEYS:
                values[key] = value.upper()
            elif key in _INT_KEYS:
                values[key] = int(value)
            elif key == "D0r":
                values[key] = tuple(float(v) for v in value.split(",") if v.strip())
            elif value.lower() in ("", "none"):
                values[key] = None
            else:
                values[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    for key in ("protocol", "modulation"):
        if key not in values:
            raise ConfigError(f"{path}: missing required key {key!r}")
    try:
        return ScenarioConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def dump_config(config, path):
    with open(path, "w") as fh:
        for name in _FIELDS:
            value = getattr(config, name)
            if name == "D0r":
                value = ", ".join(repr(d) for d in value)
            elif isinstance(value, float):
                value = repr(value)
            fh.write(f"{name} = {value}\n")


def path_loss(D, exponent=DEFAULT_PATHLOSS_EXP):
    """Bounded path loss ``1 / (1 + D**exponent)``."""
    D = np.asarray(D, dtype=float)
    if np.any(D < 0):
        raise ValueError("distance must be non-negative")
    out = 1.0 / (1.0 + D**exponent)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class LinkParams:
    gamma_0d: float
    gamma_0r: np.ndarray
    gamma_rd: np.ndarray
    sigma_0d_sq: float
    sigma_0r_sq: np.ndarray
    sigma_rd_sq: np.ndarray
    Ts: float

    @property
    def K(self):
        return len(self.gamma_0r)


def symbol_time(config):
    Ts = math.log2(config.M) / ((config.K + 1) * config.rate_R)
    if config.protocol == "TS":
        Ts *= 1.0 - config.alpha
    return Ts


def derive_link_params(config):
    config.validate()
    Ts = symbol_time(config)
    s1 = config.noise_split * config.sigma0_sq   # receive-antenna noise
    s2 = config.sigma0_sq - s1                   # conversion-circuit noise
    D0r = np.array(config.D0r)
    L0d = path_loss(config.D0d, config.pathloss_exp)
    L0r = path_loss(D0r, config.pathloss_exp)
    Lrd = path_loss(config.D0d - D0r, config.pathloss_exp)
    energy = config.P0 * Ts

    sigma_0d_sq = s1 + s2
    sigma_rd_sq = np.full(config.K, s1 + s2)
    if config.protocol == "PS":
        rho = config.rho
        sigma_0r_sq = np.full(config.K, (1.0 - rho) * s1 + s2)
        gamma_0r = (1.0 - rho) * energy * L0r / sigma_0r_sq
        gamma_rd = config.eta * rho * energy * L0r * Lrd / sigma_rd_sq
    else:
        a = config.alpha
        sigma_0r_sq = np.full(config.K, s1 + s2)
        gamma_0r = energy * L0r / sigma_0r_sq
        gamma_rd = a * (config.K + 1) * config.eta * energy * L0r * Lrd / ((1.0 - a) * sigma_rd_sq)
    return LinkParams(
        gamma_0d=energy * L0d / sigma_0d_sq,
        gamma_0r=gamma_0r,
        gamma_rd=gamma_rd,
        sigma_0d_sq=sigma_0d_sq,
        sigma_0r_sq=sigma_0r_sq,
        sigma_rd_sq=sigma_rd_sq,
        Ts=Ts,
    )


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Fading coefficients for a batch of ``n`` independent blocks."""

    h_0d: np.ndarray   # (n,)
    h_0r: np.ndarray   # (n, K)
    h_rd: np.ndarray   # (n, K)


@dataclass(frozen=True, eq=False)
class ReceivedBlock:
    """Observations for a batch of blocks; leading axis indexes the trial.

    DPSK vectors hold the symbol pair ``[y(l-1), y(l)]``; FSK vectors the M
    correlator outputs.
    """

    modulation: str
    M: int
    m: np.ndarray      # (n,)
    m_r: np.ndarray    # (n, K)
    y_0d: np.ndarray   # (n, L)
    y_0r: np.ndarray   # (n, K, L)
    y_rd: np.ndarray   # (n, K, L)
    channel: ChannelRealization = field(repr=False, default=None)

    def __len__(self):
        return len(self.m)


def draw_channel(rng, n, K):
    return ChannelRealization(
        h_0d=sample_cscg(rng, 1.0, n),
        h_0r=sample_cscg(rng, 1.0, (n, K)),
        h_rd=sample_cscg(rng, 1.0, (n, K)),
    )


def dpsk_symbols(m, M):
    """Differentially encoded pair ``[1, e^{j 2 pi m / M}]`` for each message."""
    m = np.asarray(m)
    s = np.ones(m.shape + (2,), dtype=complex)
    s[..., 1] = np.exp(2j * np.pi * m / M)
    return s


def fsk_symbols(m, M):
    m = np.asarray(m)
    s = np.zeros(m.shape + (M,), dtype=complex)
    np.put_along_axis(s, m[..., None], 1.0, axis=-1)
    return s


def _simulate(params, config, rng, m, channel, encode, detect, L):
    m = np.atleast_1d(np.asarray(m, dtype=np.int64))
    if np.any((m < 0) | (m >= config.M)):
        raise ValueError("messages must lie in 0..M-1")
    n, K = m.size, params.K
    if channel is None:
        channel = draw_channel(rng, n, K)
    s = encode(m, config.M)
    sig_0r = np.sqrt(params.sigma_0r_sq)[None, :, None]
    sig_0d = math.sqrt(params.sigma_0d_sq)
    sig_rd = np.sqrt(params.sigma_rd_sq)[None, :, None]

    n_0r = sample_cscg(rng, 1.0, (n, K, L))
    n_0d = sample_cscg(rng, 1.0, (n, L))
    y_0r = sig_0r * (np.sqrt(params.gamma_0r)[None, :, None]
                     * channel.h_0r[:, :, None] * s[:, None, :] + n_0r)
    y_0d = sig_0d * (math.sqrt(params.gamma_0d) * channel.h_0d[:, None] * s + n_0d)

    m_r = detect(y_0r, config.M)
    s_r = encode(m_r, config.M)
    n_rd = sample_cscg(rng, 1.0, (n, K, L))
    amp = np.sqrt(params.gamma_rd)[None, :] * np.abs(channel.h_0r) * channel.h_rd
    y_rd = sig_rd * (amp[:, :, None] * s_r + n_rd)
    return ReceivedBlock(config.modulation, config.M, m, m_r, y_0d, y_0r, y_rd, channel)


def simulate_block_dpsk(params, config, rng, m, channel=None):
    """Simulate DPSK blocks for the message array ``m``.

    Draw order from ``rng``: channel (unless given), first-hop noise, direct
    noise, second-hop noise.  Relays decide before forwarding.
    """
    return _simulate(params, config, rng, m, channel, dpsk_symbols,
                     lambda y, M: relay_detect_dpsk(y, M), 2)


def simulate_block_fsk(params, config, rng, m, channel=None):
    """FSK counterpart of :func:`simulate_block_dpsk`."""
    return _simulate(params, config, rng, m, channel, fsk_symbols,
                     lambda y, M: relay_detect_fsk(y), config.M)


def simulate_block(params, config, rng, m, channel=None):
    if config.modulation == "DPSK":
        return simulate_block_dpsk(params, config, rng, m, channel)
    return simulate_block_fsk(params, config, rng, m, channel)

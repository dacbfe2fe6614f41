"""Named experiment presets.

Each preset is a list of sweeps over one scenario axis.  ``fig2`` is the
integral-accuracy grid and has no sweeps.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import DEFAULT_D0D, DEFAULT_ETA, DEFAULT_PATHLOSS_EXP, ScenarioConfig

DEFAULT_TRIALS = 100_000
EXACT_TRIALS_CAP = 100_000

FIG2_EPS_DB = np.arange(-10, 21)
FIG2_BETA_DB = np.arange(-50, 51)


@dataclass(frozen=True)
class SweepSpec:
    config: ScenarioConfig
    axis: str
    values: tuple
    detectors: tuple


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    sweeps: tuple = field(default_factory=tuple)


def _grid(start, stop, step):
    return tuple(float(v) for v in np.round(np.arange(start, stop + 0.5 * step, step), 10))


SNR_FIG3 = _grid(0, 40, 2)
SNR_FIG5 = _grid(10, 56, 2)
EH_GRID = _grid(0.05, 0.95, 0.05)


def _pair(protocol, modulations=("DPSK", "FSK"), **kw):
    return [ScenarioConfig(protocol, mod, **kw) for mod in modulations]


def _fig3a():
    cfgs = _pair("TS", M=2, K=1, alpha=0.5, D0r=(1.5,), rate_R=1.0)
    return tuple(SweepSpec(c, "snr_db", SNR_FIG3, ("exact", "approx")) for c in cfgs)


def _fig3b():
    cfgs = _pair("PS", M=2, K=2, rho=0.5, D0r=(1.0, 2.0), rate_R=1.0)
    return tuple(SweepSpec(c, "snr_db", SNR_FIG3, ("exact", "approx")) for c in cfgs)


def _fig4(M, snr_db):
    rate = float(np.log2(M))
    ts = _pair("TS", M=M, K=1, alpha=0.5, D0r=(1.5,), rate_R=rate)
    ps = _pair("PS", M=M, K=1, rho=0.5, D0r=(1.5,), rate_R=rate)
    return (tuple(SweepSpec(c.with_snr_db(snr_db), "alpha", EH_GRID, ("approx",)) for c in ts)
            + tuple(SweepSpec(c.with_snr_db(snr_db), "rho", EH_GRID, ("approx",)) for c in ps))


def _fig5(M):
    cfgs = (_pair("PS", M=M, K=1, rho=0.8, D0r=(1.5,))
            + _pair("TS", M=M, K=1, alpha=0.4, D0r=(1.5,)))
    return tuple(SweepSpec(c, "snr_db", SNR_FIG5, ("approx",)) for c in cfgs)


PRESETS = {
    p.name: p
    for p in [
        Preset("fig2", "I_2 vs exact I over eps in [-10, 20] dB, beta in [-50, 50] dB"),
        Preset("fig3a", "exact vs approximate MLD, TS alpha=0.5, K=1, D0r=1.5, M=2, R=1",
               _fig3a()),
        Preset("fig3b", "exact vs approximate MLD, PS rho=0.5, K=2, D0r=(1, 2), M=2, R=1",
               _fig3b()),
        Preset("fig4a", "SER vs alpha (TS) and rho (PS), K=1, D0r=1.5, M=2, 30 dB, R=1",
               _fig4(2, 30.0)),
        Preset("fig4b", "SER vs alpha (TS) and rho (PS), K=1, D0r=1.5, M=8, 40 dB, R=3",
               _fig4(8, 40.0)),
    ]
    + [Preset(f"fig5-m{M}", f"SER vs SNR, PS rho=0.8 and TS alpha=0.4, K=1, D0r=1.5, M={M}",
              _fig5(M)) for M in (2, 4, 8, 16)]
}


def describe():
    lines = ["presets:"]
    lines += [f"  {p.name:<9} {p.description}" for p in PRESETS.values()]
    lines += [
        "defaults:",
        f"  eta={DEFAULT_ETA}  pathloss_exp={DEFAULT_PATHLOSS_EXP}  D0d={DEFAULT_D0D} m  "
        "sigma0_sq=1 (noise split 50/50)  rate_R=log2(M)  SNR=P0/sigma0_sq",
        f"  trials per point={DEFAULT_TRIALS} (exact detector capped at {EXACT_TRIALS_CAP})",
    ]
    return "\n".join(lines)

"""Seeded Monte Carlo SER estimation, parameter sweeps and CSV persistence.

Trials are grouped in fixed-size chunks.  Chunk ``c`` draws from its own
Philox stream keyed by ``(seed, c)``, and worker ``w`` of ``W`` processes
chunks ``w, w + W, ...``; error counts are integers summed at the end, so the
result is identical for any worker count.  All detectors evaluated in one
call see the same blocks.
"""

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import derive_link_params, simulate_block
from .detectors import EXACT_REL_TOL, dest_detect, dest_detect_direct
from .specfun import QuadratureError
from .transition import relay_table

DETECTORS = ("exact", "approx", "relay", "direct", "genie")
AXES = ("snr_db", "alpha", "rho", "M")
CHUNK_SIZE = 10_000
MIN_TRIALS = 1_000

CSV_COLUMNS = ("axis_name", "axis_value", "detector", "protocol", "modulation", "M", "K",
               "snr_db", "alpha", "rho", "trials", "errors", "ser", "ci_halfwidth", "seed")


@dataclass(frozen=True)
class SerEstimate:
    trials: int
    errors: int
    seed: int
    wallclock: float = field(default=0.0, compare=False)

    @property
    def ser(self):
        return self.errors / self.trials if self.trials else 0.0

    @property
    def ci_halfwidth(self):
        """95% normal-approximation binomial half-width."""
        if not self.trials:
            return 0.0
        p = self.ser
        return 1.96 * math.sqrt(p * (1.0 - p) / self.trials)


class SimulationAborted(RuntimeError):
    """A chunk failed; ``partial`` maps detector -> SerEstimate over finished chunks."""

    def __init__(self, message, partial=None):
        super().__init__(message, partial)
        self.partial = partial or {}

    def __str__(self):
        return self.args[0]


def chunk_rng(seed, chunk):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _chunk_bounds(n_trials, chunk_size):
    n_chunks = -(-n_trials // chunk_size)
    return [(c, min(chunk_size, n_trials - c * chunk_size)) for c in range(n_chunks)]


def _run_chunk(config, link, tables, detectors, seed, chunk, size, rel_tol):
    rng = chunk_rng(seed, chunk)
    m = rng.integers(0, config.M, size=size)
    block = simulate_block(link, config, rng, m)
    errors = {}
    for det in detectors:
        if det == "genie":
            decided = block.m
        elif det == "relay":
            decided = block.m_r[:, 0]
        elif det == "direct":
            decided = dest_detect_direct(block, link)
        else:
            decided = dest_detect(block, link, det, tables[det], rel_tol=rel_tol)
        errors[det] = int(np.count_nonzero(decided != block.m))
    return errors


def _run_chunks(args):
    """Worker entry point: run a list of chunks, stop at the first failure."""
    config, link, tables, detectors, seed, chunks, rel_tol = args
    done = []
    for chunk, size in chunks:
        try:
            done.append((chunk, size, _run_chunk(config, link, tables, detectors, seed,
                                                 chunk, size, rel_tol)))
        except QuadratureError as exc:
            return done, f"chunk {chunk}: {exc}"
    return done, None


def estimate_ser_multi(config, detectors, n_trials, seed, workers=1, chunk_size=CHUNK_SIZE,
                       rel_tol=EXACT_REL_TOL):
    """SER of several detectors on common random blocks; returns {detector: SerEstimate}."""
    detectors = tuple(detectors)
    for det in detectors:
        if det not in DETECTORS:
            raise ValueError(f"unknown detector {det!r}; choose from {DETECTORS}")
    n_trials = int(n_trials)
    if n_trials < MIN_TRIALS:
        raise ValueError(f"n_trials must be at least {MIN_TRIALS}, got {n_trials}")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    start = time.perf_counter()
    link = derive_link_params(config)
    tables = {det: [relay_table(config.modulation, det, g, config.M) for g in link.gamma_0r]
              for det in detectors if det in ("exact", "approx")}
    chunks = _chunk_bounds(n_trials, chunk_size)
    jobs = [(config, link, tables, detectors, seed, chunks[w::workers], rel_tol)
            for w in range(workers)]
    if workers == 1:
        outcomes = [_run_chunks(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_chunks, jobs))

    trials = 0
    errors = dict.fromkeys(detectors, 0)
    failure = None
    for done, err in outcomes:
        for _, size, errs in done:
            trials += size
            for det in detectors:
                errors[det] += errs[det]
        failure = failure or err
    elapsed = time.perf_counter() - start
    result = {det: SerEstimate(trials, errors[det], seed, elapsed) for det in detectors}
    if failure:
        raise SimulationAborted(
            f"quadrature failure after {trials} of {n_trials} trials ({failure})", result)
    return result


def estimate_ser(config, detector, n_trials, seed, workers=1, chunk_size=CHUNK_SIZE,
                 rel_tol=EXACT_REL_TOL):
    return estimate_ser_multi(config, (detector,), n_trials, seed, workers, chunk_size,
                              rel_tol)[detector]


def trials_for_target(target_ser, floor=1_000_000):
    """Enough trials for about 100 expected errors, and at least ``floor``."""
    return max(floor, math.ceil(100.0 / target_ser))


@dataclass(frozen=True)
class SweepRow:
    axis_name: str
    axis_value: float
    detector: str
    protocol: str
    modulation: str
    M: int
    K: int
    snr_db: float
    alpha: float
    rho: float
    estimate: SerEstimate


@dataclass
class SweepResult:
    axis_name: str
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def curve(self, detector, **match):
        """``(axis_values, SerEstimates)`` for one detector.

        Keyword arguments filter on other row fields, e.g. ``modulation="FSK"``.
        """
        rows = [r for r in self.rows if r.detector == detector
                and all(getattr(r, k) == v for k, v in match.items())]
        return [r.axis_value for r in rows], [r.estimate for r in rows]

    def extend(self, other):
        self.rows.extend(other.rows)
        self.failures.extend(other.failures)
        return self


def config_at(config, axis_name, value):
    if axis_name == "snr_db":
        return config.with_snr_db(value)
    if axis_name == "M":
        M = int(value)
        return config.replace(M=M, rate_R=math.log2(M))
    return config.replace(**{axis_name: value})


def sweep(config, axis_name, values, detectors, n_trials, seed, workers=1,
          chunk_size=CHUNK_SIZE, rel_tol=EXACT_REL_TOL):
    """Estimate SER for each axis value and detector.

    ``n_trials`` is an int or a mapping detector -> int (for example fewer
    trials for the slow exact detector).  Detectors sharing a trial count
    share blocks.  A failing point is recorded in ``failures`` and skipped.
    """
    if axis_name not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis_name!r}")
    values = list(values)
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("axis values must be strictly increasing")
    if axis_name in ("alpha", "rho") and not all(0 < v < 1 for v in values):
        raise ValueError(f"{axis_name} values must lie in (0, 1)")
    counts = n_trials if isinstance(n_trials, dict) else dict.fromkeys(detectors, n_trials)
    groups = {}
    for det in detectors:
        groups.setdefault(int(counts[det]), []).append(det)

    result = SweepResult(axis_name)
    for value in values:
        point = config_at(config, axis_name, value)
        estimates = {}
        for count, dets in groups.items():
            try:
                estimates.update(estimate_ser_multi(point, dets, count, seed, workers,
                                                    chunk_size, rel_tol))
            except (SimulationAborted, ValueError) as exc:
                result.failures.append((value, ",".join(dets), str(exc)))
        for det in detectors:
            if det in estimates:
                result.rows.append(SweepRow(axis_name, float(value), det, point.protocol,
                                            point.modulation, point.M, point.K, point.snr_db,
                                            point.alpha, point.rho, estimates[det]))
    return result


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_results(result):
    """CSV text for a sweep (header only when empty)."""
    lines = [",".join(CSV_COLUMNS)]
    for r in result.rows:
        est = r.estimate
        fields = (r.axis_name, r.axis_value, r.detector, r.protocol, r.modulation, r.M, r.K,
                  r.snr_db, r.alpha, r.rho, est.trials, est.errors, est.ser, est.ci_halfwidth,
                  est.seed)
        lines.append(",".join(_fmt(v) for v in fields))
    return "\n".join(lines) + "\n"


def persist_results(result, path):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(format_results(result))
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror}") from exc


def _opt_float(text):
    return float(text) if text else None


def load_results(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror}") from exc
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError(f"{path}:1: expected header {','.join(CSV_COLUMNS)}")
    result = None
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_COLUMNS):
            raise ValueError(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
        rec = dict(zip(CSV_COLUMNS, row))
        try:
            est = SerEstimate(int(rec["trials"]), int(rec["errors"]), int(rec["seed"]))
            sweep_row = SweepRow(rec["axis_name"], float(rec["axis_value"]), rec["detector"],
                                 rec["protocol"], rec["modulation"], int(rec["M"]), int(rec["K"]),
                                 float(rec["snr_db"]), _opt_float(rec["alpha"]),
                                 _opt_float(rec["rho"]), est)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
        if rec["axis_name"] not in AXES:
            raise ValueError(f"{path}:{lineno}: unknown axis {rec['axis_name']!r}")
        if result is None:
            result = SweepResult(rec["axis_name"])
        result.rows.append(sweep_row)
    return result if result is not None else SweepResult("snr_db")

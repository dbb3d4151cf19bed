"""Waveform-level simulation of two synchronized OOK users.

Each symbol lasts ``Ts`` and is sampled ``samples_per_symbol`` times. A
sample carries the combination mean G for the two bits plus Gaussian
noise; the first ``discard_window`` of every symbol is dropped and the rest
averaged into one decision statistic. Per-sample noise is
``sigma * sqrt(retained)`` so the averaged statistic has standard deviation
``sigma``.

Noise is drawn block-wise: block ``b`` of ``block_size`` symbols uses block
``b`` of its labeled stream, so any partition of the work gives identical
output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import beta

from .errors import ConfigError, DomainError
from .link import COMBOS, CombinationMeans, NoiseModel
from .rng import Stream

SYMBOL_PERIOD = 100e-6
SAMPLES_PER_SYMBOL = 100
DISCARD_WINDOW = 20e-6
BLOCK_SIZE = 4096

# combinations that can occur, and the user whose bit is decided
CASE_COMBOS = {1: ("10", "11"), 2: ("01", "11"), 3: COMBOS, 4: COMBOS}
CASE_USER = {1: 2, 2: 1, 3: 2, 4: 1}
DETECTION_MODES = ("nearest-mean", "midpoint-thresholds")


def _check_case(case):
    if case not in CASE_COMBOS:
        raise DomainError(f"case must be 1..4, got {case!r}")
    return int(case)


@dataclass(frozen=True)
class OokFrame:
    bits_user1: np.ndarray
    bits_user2: np.ndarray
    symbol_period: float = SYMBOL_PERIOD
    samples_per_symbol: int = SAMPLES_PER_SYMBOL
    discard_window: float = DISCARD_WINDOW

    def __post_init__(self):
        b1 = np.asarray(self.bits_user1, dtype=np.int8)
        b2 = np.asarray(self.bits_user2, dtype=np.int8)
        if b1.ndim != 1 or b1.shape != b2.shape or b1.size < 1:
            raise DomainError("user bit sequences must be 1-D, non-empty and of equal length")
        if np.any((b1 != 0) & (b1 != 1)) or np.any((b2 != 0) & (b2 != 1)):
            raise DomainError("bits must be 0 or 1")
        if not self.symbol_period > 0 or self.samples_per_symbol < 1:
            raise DomainError("symbol period and samples per symbol must be positive")
        if not 0 <= self.discard_window < self.symbol_period:
            raise DomainError("discard window must lie in [0, Ts)")
        object.__setattr__(self, "bits_user1", b1)
        object.__setattr__(self, "bits_user2", b2)

    @property
    def n_symbols(self) -> int:
        return self.bits_user1.size

    @property
    def sample_interval(self) -> float:
        return self.symbol_period / self.samples_per_symbol

    @property
    def n_discard(self) -> int:
        """Samples dropped at the start of each symbol (sample m sits at m * dt)."""
        return min(self.samples_per_symbol,
                   math.ceil(self.discard_window / self.sample_interval - 1e-9))

    @property
    def n_retained(self) -> int:
        return self.samples_per_symbol - self.n_discard

    def combo_index(self) -> np.ndarray:
        """Index into ``COMBOS`` (``2 * b1 + b2``) for each symbol."""
        return 2 * self.bits_user1.astype(np.int64) + self.bits_user2


def generate_frame(n_symbols, seed, case, label="", symbol_period=SYMBOL_PERIOD,
                   samples_per_symbol=SAMPLES_PER_SYMBOL, discard_window=DISCARD_WINDOW) -> OokFrame:
    """Bit sequences for one interference case.

    Cases 1 and 2 hold one user at a constant "1" (its field is always on)
    and draw the other uniformly; cases 3 and 4 draw both users.
    """
    case = _check_case(case)
    n = int(n_symbols)
    if n < 1:
        raise DomainError("n_symbols must be >= 1")
    ones = np.ones(n, dtype=np.int8)
    b1 = ones if case == 1 else Stream(seed, f"bits:u1:{label}").bits(n)
    b2 = ones if case == 2 else Stream(seed, f"bits:u2:{label}").bits(n)
    return OokFrame(b1, b2, symbol_period, samples_per_symbol, discard_window)


def combination_levels(surface, e_s1, e_s2) -> np.ndarray:
    """G for combinations 00, 01, 10, 11 at fields ``(b1 e_s1, b2 e_s2)``."""
    from .link import means_from_surface

    return means_from_surface(surface, e_s1, e_s2).as_array()


def _clean_levels(frame: OokFrame, levels, tau, start=0, stop=None, initial=None):
    """Noise-free samples for symbols ``start:stop``, shape (symbols, samples).

    With ``tau > 0`` the level relaxes exponentially from the value reached at
    the end of the previous symbol; the first symbol starts settled.
    """
    stop = frame.n_symbols if stop is None else stop
    target = np.asarray(levels)[frame.combo_index()[start:stop]]
    sps = frame.samples_per_symbol
    if tau <= 0:
        return np.repeat(target[:, None], sps, axis=1), None
    t = np.arange(sps) * frame.sample_interval
    decay = np.exp(-t / tau)
    end_decay = math.exp(-frame.symbol_period / tau)
    starts = np.empty(target.size)
    level = target[0] if initial is None else initial
    for k, tgt in enumerate(target):
        starts[k] = level
        level = tgt + (level - tgt) * end_decay
    clean = target[:, None] + (starts - target)[:, None] * decay[None, :]
    return clean, level


@dataclass(frozen=True)
class Trace:
    """Sampled normalized detector voltage."""

    time: np.ndarray
    voltage: np.ndarray


def _noise_block(seed, label, block, size, sigma_sample):
    return sigma_sample * Stream(seed, f"noise:{label}", block).normals(size)


def synthesize_trace(frame: OokFrame, surface, e_s1, e_s2, noise: NoiseModel, seed,
                     tau=0.0, label="", block_size=BLOCK_SIZE) -> Trace:
    """Full trace for ``frame`` with fields in V/m (see module docstring)."""
    levels = combination_levels(surface, e_s1, e_s2)
    return _synthesize(frame, levels, noise.sigma, seed, tau, label, block_size)


def _synthesize(frame, levels, sigma, seed, tau, label, block_size):
    sps = frame.samples_per_symbol
    volts = np.empty((frame.n_symbols, sps))
    sigma_sample = sigma * math.sqrt(frame.n_retained) if sigma > 0 else 0.0
    state = None
    for b, start in enumerate(range(0, frame.n_symbols, block_size)):
        stop = min(start + block_size, frame.n_symbols)
        clean, state = _clean_levels(frame, levels, tau, start, stop, state)
        if sigma_sample > 0:
            clean = clean + _noise_block(seed, label, b, clean.size, sigma_sample).reshape(clean.shape)
        volts[start:stop] = clean
    time = np.arange(frame.n_symbols * sps) * frame.sample_interval
    return Trace(time, volts.ravel())


@dataclass(frozen=True)
class DetectionScheme:
    """Decision rule for one case. Means are sorted descending internally;
    ties go to the lower sorted index (the larger mean)."""

    mode: str
    means: CombinationMeans
    case: int

    def __post_init__(self):
        if self.mode not in DETECTION_MODES:
            raise DomainError(f"unknown detection mode {self.mode!r}")
        _check_case(self.case)

    @property
    def user(self) -> int:
        return CASE_USER[self.case]

    def candidates(self):
        """Feasible combination indices sorted by descending mean (stable)."""
        feasible = [COMBOS.index(c) for c in CASE_COMBOS[self.case]]
        vals = self.means.as_array()[feasible]
        order = np.argsort(-vals, kind="stable")
        return np.asarray(feasible)[order], vals[order]

    def classify(self, stat) -> np.ndarray:
        """Combination index decided for each decision statistic."""
        stat = np.asarray(stat, dtype=float)
        idx, levels = self.candidates()
        if self.mode == "nearest-mean":
            # (x - g)^2 less the common x^2 term keeps nearly equal levels
            # distinguishable when x lies far from both
            k = np.argmin(levels[None, :] * (levels[None, :] - 2.0 * stat[:, None]), axis=1)
            return idx[k]
        # thresholds between distinct neighbouring levels; a tied level can never win
        keep = np.concatenate([[True], levels[1:] != levels[:-1]])
        idx, levels = idx[keep], levels[keep]
        th = 0.5 * (levels[:-1] + levels[1:])
        k = (stat[:, None] < th[None, :]).sum(axis=1)
        return idx[k]


def decision_statistics(voltage, frame: OokFrame) -> np.ndarray:
    """Mean of the retained samples of each symbol."""
    if frame.n_retained < 1:
        raise ConfigError("discard window leaves no samples for detection")
    v = np.asarray(voltage).reshape(-1, frame.samples_per_symbol)
    return v[:, frame.n_discard:].mean(axis=1)


@dataclass(frozen=True)
class Decisions:
    combos: np.ndarray

    @property
    def user1(self):
        return (self.combos >> 1).astype(np.int8)

    @property
    def user2(self):
        return (self.combos & 1).astype(np.int8)

    def bits(self, user):
        return self.user1 if user == 1 else self.user2


def detect(trace: Trace, frame: OokFrame, scheme: DetectionScheme) -> Decisions:
    """Average retained samples per symbol and classify."""
    return Decisions(scheme.classify(decision_statistics(trace.voltage, frame)))


def clopper_pearson(k, n, level=0.95):
    """Exact binomial confidence interval."""
    alpha = 1.0 - level
    lo = 0.0 if k == 0 else float(beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


@dataclass(frozen=True)
class EmpiricalReport:
    """Empirical error rates with 95% Clopper-Pearson intervals."""

    user: int
    n_symbols: int
    bit_errors: int
    symbol_errors: int
    ber: float
    ber_ci: tuple
    ser: float
    ser_ci: tuple


def estimate_error_rates(decided_u1, decided_u2, truth_u1, truth_u2, user) -> EmpiricalReport:
    """BER of the user of interest and SER (either user's bit wrong)."""
    arrays = [np.asarray(a) for a in (decided_u1, decided_u2, truth_u1, truth_u2)]
    n = arrays[0].size
    if n == 0:
        raise DomainError("no symbols to evaluate")
    if any(a.shape != arrays[0].shape for a in arrays):
        raise DomainError("decided and truth sequences differ in length")
    d1, d2, t1, t2 = arrays
    wrong = (d1 != t1) if user == 1 else (d2 != t2)
    k_bit = int(np.count_nonzero(wrong))
    k_sym = int(np.count_nonzero((d1 != t1) | (d2 != t2)))
    return EmpiricalReport(user, n, k_bit, k_sym, k_bit / n, clopper_pearson(k_bit, n),
                           k_sym / n, clopper_pearson(k_sym, n))


def simulate(levels, case, sigma, n_symbols, seed, mode="nearest-mean", tau=0.0, label="",
             discard_window=DISCARD_WINDOW, samples_per_symbol=SAMPLES_PER_SYMBOL,
             symbol_period=SYMBOL_PERIOD, block_size=BLOCK_SIZE, keep=0):
    """Frame, trace, detection and counting, processed in blocks.

    ``levels`` are the four combination means (00, 01, 10, 11). Returns the
    :class:`EmpiricalReport` and, when ``keep > 0``, the frame, the first
    ``keep`` symbols of trace and the matching decisions for export.
    """
    case = _check_case(case)
    levels = np.asarray(levels, dtype=float)
    frame = generate_frame(n_symbols, seed, case, label, symbol_period, samples_per_symbol, discard_window)
    scheme = DetectionScheme(mode, CombinationMeans(*levels), case)
    if frame.n_retained < 1:
        raise ConfigError("discard window leaves no samples for detection")
    sigma_sample = sigma * math.sqrt(frame.n_retained)
    combos = np.empty(frame.n_symbols, dtype=np.int64)
    kept = None
    state = None
    for b, start in enumerate(range(0, frame.n_symbols, block_size)):
        stop = min(start + block_size, frame.n_symbols)
        clean, state = _clean_levels(frame, levels, tau, start, stop, state)
        if sigma_sample > 0:
            clean = clean + _noise_block(seed, label, b, clean.size, sigma_sample).reshape(clean.shape)
        combos[start:stop] = scheme.classify(clean[:, frame.n_discard:].mean(axis=1))
        if keep and start < keep:
            part = clean[: max(0, min(stop, keep) - start)].ravel()
            kept = part if kept is None else np.concatenate([kept, part])
    dec = Decisions(combos)
    report = estimate_error_rates(dec.user1, dec.user2, frame.bits_user1, frame.bits_user2, scheme.user)
    if not keep:
        return report
    n_keep = min(keep, frame.n_symbols)
    trace = Trace(np.arange(kept.size) * frame.sample_interval, kept)
    return report, frame, trace, Decisions(combos[:n_keep])


def write_trace_csv(trace: Trace, path):
    with open(path, "w") as fh:
        fh.write("time_s,voltage_norm\n")
        for t, v in zip(trace.time, trace.voltage):
            fh.write(f"{t:.17g},{v:.17g}\n")


def write_decisions_csv(frame: OokFrame, decisions: Decisions, user, path):
    with open(path, "w") as fh:
        fh.write("symbol_index,truth_u1,truth_u2,decided_bit\n")
        bits = decisions.bits(user)
        for k in range(bits.size):
            fh.write(f"{k},{frame.bits_user1[k]},{frame.bits_user2[k]},{bits[k]}\n")

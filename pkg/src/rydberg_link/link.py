"""Closed-form bit and symbol error rates for two OOK users sharing one receiver.

Four mean levels ``g_ab`` (user-1 bit ``a``, user-2 bit ``b``) with common
Gaussian noise ``sigma``. The four interference cases:

1. user 1 transmits a constant field, user 2 carries data; only the
   combinations 10 and 11 occur and the user-2 bit is decided.
2. the roles are swapped: combinations 01 and 11, user-1 bit decided.
3. both users carry data; four levels, the user-2 bit is decided.
4. as case 3 with the user-1 bit decided; the outer two levels are assumed
   error free and only the confusion of the middle pair counts.

Cases 3 and 4 are stated for the ordering ``g00 > g01 > g10 > g11``. The
means are sorted here and the permutation is recorded, so the formulas act
on the sorted levels ``s0 >= s1 >= s2 >= s3`` whatever physical combination
sits where. ``ordered`` reports whether the nominal ordering held.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .errors import DomainError

COMBOS = ("00", "01", "10", "11")
NOMINAL_ORDER = (0, 1, 2, 3)


def q_function(x):
    """Gaussian tail probability ``Q(x) = erfc(x / sqrt(2)) / 2``."""
    if np.ndim(x):
        return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(0.5 * erfc(float(x) / math.sqrt(2.0)))


@dataclass(frozen=True)
class CombinationMeans:
    """Mean normalized levels for bit pairs (user 1, user 2).

    ``order`` lists combination indices (into ``COMBOS``) from the largest
    mean to the smallest; ties keep the nominal index order.
    """

    g00: float
    g01: float
    g10: float
    g11: float
    order: tuple = field(init=False)

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise DomainError("combination means must be finite")
        order = tuple(int(k) for k in np.argsort(-vals, kind="stable"))
        object.__setattr__(self, "order", order)

    def as_array(self) -> np.ndarray:
        return np.array([self.g00, self.g01, self.g10, self.g11], dtype=float)

    def sorted_levels(self) -> np.ndarray:
        return self.as_array()[list(self.order)]

    @property
    def ordered(self) -> bool:
        """True when ``g00 > g01 > g10 > g11`` strictly."""
        v = self.as_array()
        return bool(v[0] > v[1] > v[2] > v[3])

    def sorted_combos(self) -> tuple:
        return tuple(COMBOS[k] for k in self.order)

    def shifted(self, c):
        return CombinationMeans(self.g00 + c, self.g01 + c, self.g10 + c, self.g11 + c)


@dataclass(frozen=True)
class NoiseModel:
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError(f"sigma must be finite and > 0, got {self.sigma!r}")


@dataclass(frozen=True)
class ErrorRateReport:
    """Error rate with its per-combination breakdown.

    ``per_combination`` maps combination labels to the error probability
    conditioned on that combination; ``weights`` are the prior weights with
    which they add up to ``ber``. ``thresholds`` are decision boundaries on
    the normalized level axis.
    """

    case: str
    ber: float
    per_combination: dict
    weights: dict
    thresholds: tuple
    asymptote: float | None = None
    order: tuple = NOMINAL_ORDER
    ordered: bool = True
    note: str = ""

    def __post_init__(self):
        probs = [self.ber, *self.per_combination.values()]
        if not all(0.0 <= p <= 1.0 for p in probs):
            raise DomainError(f"probabilities outside [0, 1] in case {self.case}")

    def recombined(self) -> float:
        """``sum_c w_c p_c``; equals ``ber`` up to rounding."""
        return sum(self.weights[c] * self.per_combination[c] for c in self.per_combination)


def _two_level(hi, lo, sigma):
    """Error per side and midpoint threshold for two equiprobable levels."""
    d = abs(hi - lo)
    return q_function(d / (2.0 * sigma)), 0.5 * (hi + lo)


def ber_case1(means: CombinationMeans, noise: NoiseModel) -> ErrorRateReport:
    """User 1 constant-on, user 2 data: ``Q(|g11 - g10| / 2 sigma)``."""
    p, th = _two_level(means.g10, means.g11, noise.sigma)
    return ErrorRateReport(
        "1", p, {"10": p, "11": p}, {"10": 0.5, "11": 0.5}, (th,), asymptote=0.5,
        order=means.order, ordered=means.ordered)


def ber_case2(means: CombinationMeans, noise: NoiseModel) -> ErrorRateReport:
    """User 2 constant-on, user 1 data: ``Q(|g11 - g01| / 2 sigma)``."""
    p, th = _two_level(means.g01, means.g11, noise.sigma)
    return ErrorRateReport(
        "2", p, {"01": p, "11": p}, {"01": 0.5, "11": 0.5}, (th,),
        asymptote=q_function(means.g01 / (2.0 * noise.sigma)),
        order=means.order, ordered=means.ordered)


def _case3_terms(means: CombinationMeans, sigma):
    s = means.sorted_levels()
    q01 = q_function(abs(s[0] - s[1]) / (2.0 * sigma))
    q12 = q_function(abs(s[1] - s[2]) / (2.0 * sigma))
    q23 = q_function(abs(s[2] - s[3]) / (2.0 * sigma))
    ber = 0.5 * q01 + 0.5 * q12 + 0.5 * q23
    thresholds = tuple(0.5 * (s[k] + s[k + 1]) for k in range(3))
    return ber, (q01, q12, q23), thresholds


def _case3_report(means, noise, case, note):
    ber, (q01, q12, q23), th = _case3_terms(means, noise.sigma)
    combos = means.sorted_combos()
    # under the nominal ordering adjacent levels differ in the user-2 bit, so
    # each sorted level errs across each neighbouring threshold
    per_sorted = (q01, q01 + q12, q12 + q23, q23)
    per = {combos[k]: min(1.0, per_sorted[k]) for k in range(4)}
    weights = {c: 0.25 for c in COMBOS}
    return ErrorRateReport(
        case, ber, per, weights, th,
        asymptote=asymptotes(means, noise)["case3"],
        order=means.order, ordered=means.ordered, note=note)


def ber_case3(means: CombinationMeans, noise: NoiseModel) -> ErrorRateReport:
    """Both users active, user-2 bit: ``sum over adjacent sorted pairs of Q(gap / 2 sigma) / 2``."""
    return _case3_report(means, noise, "3", "")


def ber_case4(means: CombinationMeans, noise: NoiseModel) -> ErrorRateReport:
    """Both users active, user-1 bit: ``Q(|s1 - s2| / 2 sigma) / 2`` (outer levels treated as error free)."""
    s = means.sorted_levels()
    q12 = q_function(abs(s[1] - s[2]) / (2.0 * noise.sigma))
    combos = means.sorted_combos()
    per = {combos[0]: 0.0, combos[1]: q12, combos[2]: q12, combos[3]: 0.0}
    return ErrorRateReport(
        "4", 0.5 * q12, per, {c: 0.25 for c in COMBOS}, (0.5 * (s[1] + s[2]),),
        asymptote=asymptotes(means, noise)["case4"],
        order=means.order, ordered=means.ordered)


def ser(means: CombinationMeans, noise: NoiseModel) -> ErrorRateReport:
    """Symbol error rate, taken equal to the case-3 expression."""
    return _case3_report(means, noise, "ser", "identical to case 3")


def asymptotes(means: CombinationMeans, noise: NoiseModel) -> dict:
    """Limits as the user-1 field saturates (``g10, g11 -> 0``)."""
    two_s = 2.0 * noise.sigma
    q_g01 = q_function(means.g01 / two_s)
    return {
        "case1": 0.5,
        "case2": q_g01,
        "case3": 0.25 + 0.5 * q_function(abs(means.g00 - means.g01) / two_s) + 0.5 * q_g01,
        "case4": 0.5 * q_g01,
    }


BER_FUNCTIONS = {1: ber_case1, 2: ber_case2, 3: ber_case3, 4: ber_case4}


def ber(case: int, means: CombinationMeans, noise: NoiseModel) -> ErrorRateReport:
    try:
        return BER_FUNCTIONS[int(case)](means, noise)
    except KeyError:
        raise DomainError(f"case must be 1..4, got {case!r}") from None


def means_from_surface(surface, e_s1, e_s2) -> CombinationMeans:
    """Combination means looked up on a response surface (fields in V/m)."""
    from .surface import lookup_many

    g = lookup_many(surface, [0.0, 0.0, e_s1, e_s1], [0.0, e_s2, 0.0, e_s2])
    return CombinationMeans(*map(float, g))

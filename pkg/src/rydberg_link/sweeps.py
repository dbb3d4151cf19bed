"""Analytic and Monte Carlo sweeps over the user-1 field amplitude."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .link import NoiseModel, ber, means_from_surface, ser
from .montecarlo import simulate

MIN_MC_SYMBOLS = 1000

BASE_COLUMNS = ("log10_e_s1_mVpcm", "e_s1_mVpcm", "e_s2_mVpcm", "sigma",
                "g00", "g01", "g10", "g11", "ordered")


def columns(metric="ber", monte_carlo=False):
    """CSV columns for a ``ber`` or ``ser`` sweep."""
    cols = BASE_COLUMNS + (metric, "asymptote")
    if monte_carlo:
        cols += (f"{metric}_empirical", "ci_low", "ci_high", "errors", "n_symbols")
    return cols


@dataclass(frozen=True)
class SweepSpec:
    """Sweep of ``e_s1`` (mV/cm, log-spaced list) at fixed ``e_s2`` (mV/cm)."""

    case: int
    e_s2: float
    e_s1: tuple
    sigmas: tuple
    n_symbols: int = 2048
    seed: int = 0
    mode: str = "nearest-mean"
    tau: float = 0.0

    def __post_init__(self):
        if self.case not in (1, 2, 3, 4):
            raise DomainError(f"case must be 1..4, got {self.case!r}")
        if not self.e_s1:
            raise DomainError("e_s1 axis is empty")
        if any(not (math.isfinite(x) and x > 0) for x in self.e_s1):
            raise DomainError("e_s1 values must be positive (log axis)")
        if not (math.isfinite(self.e_s2) and self.e_s2 >= 0):
            raise DomainError("e_s2 must be >= 0")
        if not self.sigmas or any(not (math.isfinite(s) and s > 0) for s in self.sigmas):
            raise DomainError("sigma list must be non-empty and positive")

    def check_bounds(self, surface):
        top1 = surface.axis1[-1] * 10.0
        top2 = surface.axis2[-1] * 10.0
        if max(self.e_s1) > top1 * (1 + 1e-12) or self.e_s2 > top2 * (1 + 1e-12):
            raise DomainError(
                f"sweep fields exceed the surface range ({top1:g}, {top2:g} mV/cm)")


def log_axis(start_mvpcm, stop_mvpcm, points):
    if not (0 < start_mvpcm <= stop_mvpcm) or points < 1:
        raise DomainError("log axis needs 0 < start <= stop and points >= 1")
    return tuple(float(x) for x in np.geomspace(start_mvpcm, stop_mvpcm, points))


def _analytic_row(surface, case, e1, e2, sigma, symbol=False):
    means = means_from_surface(surface, 0.1 * e1, 0.1 * e2)
    report = ser(means, NoiseModel(sigma)) if symbol else ber(case, means, NoiseModel(sigma))
    return {
        "log10_e_s1_mVpcm": math.log10(e1), "e_s1_mVpcm": e1, "e_s2_mVpcm": e2, "sigma": sigma,
        "g00": means.g00, "g01": means.g01, "g10": means.g10, "g11": means.g11,
        "ordered": int(means.ordered), "ser" if symbol else "ber": report.ber,
        "asymptote": report.asymptote if report.asymptote is not None else float("nan"),
    }, means


def ber_sweep(surface, spec: SweepSpec, symbol=False):
    """Rows of analytic BER (or SER with ``symbol=True``) over ``e_s1`` x ``sigma``."""
    spec.check_bounds(surface)
    return [_analytic_row(surface, spec.case, e1, spec.e_s2, s, symbol)[0]
            for s in spec.sigmas for e1 in spec.e_s1]


def mc_sweep(surface, spec: SweepSpec, symbol=False, keep=0):
    """Analytic rows extended with Monte Carlo estimates.

    For ``symbol=True`` the empirical column is the symbol error rate of a
    four-level (case 3) simulation. Returns ``(rows, exports)`` where
    ``exports`` holds per-point frames, traces and decisions when ``keep > 0``.
    """
    if spec.n_symbols < MIN_MC_SYMBOLS:
        raise DomainError(f"Monte Carlo sweeps need n_symbols >= {MIN_MC_SYMBOLS}")
    spec.check_bounds(surface)
    rows, exports = [], []
    sim_case = 3 if symbol else spec.case
    for j, s in enumerate(spec.sigmas):
        for k, e1 in enumerate(spec.e_s1):
            row, means = _analytic_row(surface, spec.case, e1, spec.e_s2, s, symbol)
            label = f"case{sim_case}:p{k}:s{j}"
            out = simulate(means.as_array(), sim_case, s, spec.n_symbols, spec.seed,
                           mode=spec.mode, tau=spec.tau, label=label, keep=keep)
            report = out[0] if keep else out
            if symbol:
                k_err, (lo, hi) = report.symbol_errors, report.ser_ci
            else:
                k_err, (lo, hi) = report.bit_errors, report.ber_ci
            row.update({"ser_empirical" if symbol else "ber_empirical": k_err / report.n_symbols,
                        "ci_low": lo, "ci_high": hi, "errors": k_err, "n_symbols": report.n_symbols})
            rows.append(row)
            if keep:
                exports.append((k, j, out[1], out[2], out[3], report.user))
    return rows, exports


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def write_rows_csv(rows, columns, path):
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")

"""Acceptance criteria, shared by the ``validate`` command and the test suite.

Each ``criterion_N`` takes an :class:`AcceptanceContext` and returns a
:class:`CriterionResult`. Criteria never relax their tolerances; a criterion
that cannot be met reports ``passed=False`` with the evidence in ``detail``.
"""

from __future__ import annotations

import filecmp
import math
import tempfile
import time
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import integrate

from .atomic import (
    DecayModel,
    DetuningSet,
    RabiSet,
    check_density_matrix,
    ground_state,
    solve_steady_state,
    time_evolve,
)
from .config import load_preset
from .constants import mhz_to_rad
from .errors import InvalidStateError
from .link import (
    CombinationMeans,
    NoiseModel,
    ber,
    ber_case1,
    ber_case3,
    means_from_surface,
    q_function,
    ser,
)
from .montecarlo import DetectionScheme, generate_frame, simulate, _clean_levels
from .rng import Stream
from .surface import build_surface, normalize, raw_response_many

SIGMA = 0.02
E_S2_MVPCM = 0.4
MC_E1_MVPCM = tuple(10.0 ** x for x in (-1.0, -0.5, 0.0, 0.5, 1.0))
MC_SYMBOLS = 100_000
SLICES_MVPCM = (1.0, 2.0, 4.0)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"criterion {self.number:2d} {'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


class AcceptanceContext:
    """Lazily built shared fixtures (preset scenario, surface, random physics sets)."""

    def __init__(self, scenario=None, seed=20240611):
        self.scenario = load_preset() if scenario is None else scenario
        self.seed = seed

    @cached_property
    def surface(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return build_surface(self.scenario)

    @cached_property
    def physics_sets(self):
        """20 random (rabi, detuning) pairs; Omega/2pi in [0, 20] MHz, Delta/2pi in [-20, 20] MHz."""
        u = Stream(self.seed, "acceptance:physics").uniforms(20 * 8).reshape(20, 8)
        sets = []
        for row in u:
            om = [mhz_to_rad(20.0 * x) for x in row[:4]]
            de = [mhz_to_rad(40.0 * x - 20.0) for x in row[4:]]
            sets.append((RabiSet(*om), DetuningSet(*de)))
        return sets

    @cached_property
    def decay(self) -> DecayModel:
        return self.scenario.decay()

    @cached_property
    def physics_results(self):
        """Steady states and long-time RK4 states for the random sets, plus elapsed time."""
        t0 = time.perf_counter()
        t_final = 50.0 / min(self.decay.gamma2, self.decay.gamma3, self.decay.gamma4, self.decay.gamma5)
        out = []
        for rabi, det in self.physics_sets:
            rho_ss = solve_steady_state(rabi, det, self.decay)
            rho_t = time_evolve(ground_state(), rabi, det, self.decay, t_final)
            out.append((rho_ss, rho_t))
        return out, time.perf_counter() - t0

    def means(self, e1_mvpcm, e2_mvpcm=E_S2_MVPCM) -> CombinationMeans:
        return means_from_surface(self.surface, 0.1 * e1_mvpcm, 0.1 * e2_mvpcm)


def _timed(fn):
    def wrapper(ctx):
        t0 = time.perf_counter()
        res = fn(ctx)
        return CriterionResult(res.number, res.name, res.passed, res.detail, time.perf_counter() - t0)
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def criterion_1(ctx):
    """Steady state against fourth-order time evolution, 20 random sets, < 30 s."""
    results, elapsed = ctx.physics_results
    worst = max(float(np.max(np.abs(a - b))) for a, b in results)
    ok = worst <= 1e-7 and elapsed < 30.0
    return CriterionResult(1, "steady state vs time evolution", ok,
                           f"max elementwise difference {worst:.2e} (tol 1e-7), {elapsed:.1f} s (limit 30 s)")


@_timed
def criterion_2(ctx):
    """Hermiticity, trace and positivity of every criterion-1 steady state."""
    results, _ = ctx.physics_results
    herm = max(float(np.max(np.abs(r - r.conj().T))) for r, _ in results)
    tr = max(abs(complex(np.trace(r)) - 1.0) for r, _ in results)
    eig = min(float(np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0]) for r, _ in results)
    ok = herm <= 1e-10 and tr < 1e-10 and eig >= -1e-8
    try:
        for r, _ in results:
            check_density_matrix(r)
    except InvalidStateError:
        ok = False
    return CriterionResult(2, "density matrix validity", ok,
                           f"max |rho - rho^H| {herm:.1e}, max |tr - 1| {tr:.1e}, min eigenvalue {eig:.1e}")


@_timed
def criterion_3(ctx):
    """Boundary values of G on the preset surface and saturation stability."""
    surf = ctx.surface
    a = surf.anchors
    g00 = surf.g[0, 0]
    # G along the saturation edges e_s1 = e_sat and e_s2 = e_sat, at every grid node
    grid = surf.axis2
    sat = np.full(grid.size, a.e_sat)
    edge = normalize(raw_response_many(np.concatenate([sat, grid]), np.concatenate([grid, sat]),
                                       ctx.scenario), a)
    corner = float(normalize(a.vs, a))
    drift = a.saturation_drift()
    ok = g00 == 1.0 and abs(corner) <= 0.02 and np.max(np.abs(edge)) <= 0.02 and drift < 1e-3
    return CriterionResult(3, "normalization boundaries", ok,
                           f"G(0,0) = {float(g00)!r}, G(e_sat,e_sat) = {corner:.2e}, max |G| on saturation "
                           f"edges {np.max(np.abs(edge)):.2e}, vs drift on doubling e_sat {drift:.2e} (tol 1e-3)")


def slice_ranges(surface, slices_mvpcm=SLICES_MVPCM):
    """(node in mV/cm, max - min of G[node, :]) for grid nodes nearest the requested values."""
    out = []
    for target in slices_mvpcm:
        i = int(np.argmin(np.abs(surface.axis1 - 0.1 * target)))
        out.append((10.0 * surface.axis1[i], float(np.ptp(surface.g[i, :]))))
    return out


@_timed
def criterion_4(ctx):
    """Slice ranges shrink through the knee."""
    (e1, r1), (e2, r2), (e3, r3) = slice_ranges(ctx.surface)
    ok = (r1 - r2) >= -1e-3 and (r2 - r3) >= -1e-3
    return CriterionResult(4, "slice flattening", ok,
                           f"ranges {r1:.4f} @ {e1:.3g}, {r2:.4f} @ {e2:.3g}, {r3:.4f} @ {e3:.3g} mV/cm")


def q_oracle(x):
    """Gaussian tail by adaptive quadrature of the density over [x, x + 40]."""
    val, _ = integrate.quad(lambda t: math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi),
                            x, x + 40.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


@_timed
def criterion_5(ctx):
    """Q(0) exactly 0.5; Q against quadrature within 1e-10."""
    errs = {x: abs(q_function(x) - q_oracle(x)) for x in (-3.0, -1.0, 0.0, 1.0, 3.0)}
    worst = max(errs.values())
    ok = abs(q_function(0.0) - 0.5) == 0.0 and worst < 1e-10
    return CriterionResult(5, "Q function", ok, f"Q(0) = {q_function(0.0)!r}, max quadrature error {worst:.1e}")


@_timed
def criterion_6(ctx):
    """Case-1 BER at saturation."""
    forced = ber_case1(CombinationMeans(1.0, 0.8, 0.3, 0.3), NoiseModel(SIGMA)).ber
    e1 = 0.5 * ctx.surface.anchors.e_sat
    e2 = 0.1 * E_S2_MVPCM
    raw = raw_response_many([0.0, 0.0, e1, e1], [0.0, e2, 0.0, e2], ctx.scenario)
    g = normalize(raw, ctx.surface.anchors)
    pipe = ber_case1(CombinationMeans(*map(float, g)), NoiseModel(SIGMA)).ber
    ok = forced == 0.5 and pipe >= 0.45
    return CriterionResult(6, "case-1 saturation limit", ok,
                           f"forced g10 = g11 gives {forced!r}; preset at |E_s1| = e_sat/2 = {e1:g} V/m "
                           f"gives {pipe:.6f} (>= 0.45)")


#: |E_s2| values (mV/cm) where the preset keeps g00 > g01 > 0, as the saturation expression presumes
ORDERED_E2_MVPCM = (1.0, 2.0)


@_timed
def criterion_7(ctx):
    """Case-3 floor at the crossing and the saturation limit.

    Means come from the preset at |E_s1| = 1 mV/cm and the |E_s2| values in
    ``ORDERED_E2_MVPCM``; at 0.4 mV/cm the preset has g01 > g00 and the
    saturation expression does not describe the sorted four-level rule.
    """
    parts = []
    ok = True
    for e2 in ORDERED_E2_MVPCM:
        m = ctx.means(1.0, e2)
        worst_diff, min_excess = 0.0, 1.0
        for sigma in (0.005, SIGMA, 0.1, 1.0):
            noise = NoiseModel(sigma)
            crossing = CombinationMeans(m.g00, m.g01, m.g01, m.g11)
            p_cross = ber_case3(crossing, noise).ber
            s = crossing.sorted_levels()
            # the part above 1/4; at small sigma it drops below the resolution of doubles near 0.25
            excess = 0.5 * q_function(abs(s[0] - s[1]) / (2 * sigma)) + 0.5 * q_function(abs(s[2] - s[3]) / (2 * sigma))
            p_sat = ber_case3(CombinationMeans(m.g00, m.g01, 0.0, 0.0), noise).ber
            direct = (0.25 + 0.5 * q_function(abs(1.0 - m.g01) / (2 * sigma))
                      + 0.5 * q_function(m.g01 / (2 * sigma)))
            worst_diff = max(worst_diff, abs(p_sat - direct))
            min_excess = min(min_excess, excess)
            resolvable = excess > 4 * np.spacing(0.25)
            ok &= excess > 0 and (p_cross > 0.25 or not resolvable) and abs(p_sat - direct) <= 1e-12
        parts.append(f"|E_s2| = {e2:g} mV/cm (g01 = {m.g01:.4f}): smallest crossing excess over 1/4 "
                     f"{min_excess:.2e}, max saturation diff {worst_diff:.1e}")
    return CriterionResult(7, "case-3 floor", ok, "; ".join(parts))


@_timed
def criterion_8(ctx):
    """SER equals case-3 BER bitwise on 100 random tuples."""
    u = Stream(ctx.seed, "acceptance:ser").uniforms(500).reshape(100, 5)
    same = 0
    for row in u:
        means = CombinationMeans(*(1.2 * row[:4] - 0.1))
        noise = NoiseModel(10.0 ** (-3.0 + 3.0 * row[4]))
        same += ser(means, noise).ber == ber_case3(means, noise).ber
    return CriterionResult(8, "SER identity", same == 100, f"{same}/100 bitwise equal")


def mc_points(ctx, n_symbols=MC_SYMBOLS, seed=None):
    """Analytic and empirical error rates for the criterion-9 sweep, per case."""
    seed = ctx.seed if seed is None else seed
    rows = []
    for case in (1, 2, 3, 4):
        for k, e1 in enumerate(MC_E1_MVPCM):
            m = ctx.means(e1)
            p = ber(case, m, NoiseModel(SIGMA)).ber
            rep = simulate(m.as_array(), case, SIGMA, n_symbols, seed, label=f"acceptance:case{case}:p{k}")
            bound = 4.0 * math.sqrt(p * (1.0 - p) / n_symbols)
            if case == 4:
                bound = max(bound, 0.1 * p)
            assessed = 1e-3 <= p <= 0.5
            rows.append(dict(case=case, e1=e1, analytic=p, empirical=rep.ber, bound=bound,
                             assessed=assessed, ok=(not assessed) or abs(rep.ber - p) <= bound,
                             ordered=m.ordered, order="".join(f"{c} " for c in m.sorted_combos()).strip()))
    return rows


@_timed
def criterion_9(ctx):
    """Analytic vs Monte Carlo, 5-point sweep per case, sigma 0.02, 1e5 symbols, < 5 min."""
    t0 = time.perf_counter()
    rows = mc_points(ctx)
    elapsed = time.perf_counter() - t0
    failed = [r for r in rows if not r["ok"]]
    n_assessed = sum(r["assessed"] for r in rows)
    ok = not failed and elapsed < 300.0
    detail = f"{n_assessed} points assessed, {len(failed)} outside bound, {elapsed:.1f} s"
    if failed:
        detail += "; " + "; ".join(
            f"case {r['case']} E1={r['e1']:.3g}: analytic {r['analytic']:.4f} vs MC {r['empirical']:.4f} "
            f"(bound {r['bound']:.4f}, levels {r['order']})" for r in failed)
    return CriterionResult(9, "analytic vs Monte Carlo", ok, detail)


def peak_sweep(ctx, case, sigma=SIGMA):
    """BER and |g01 - g10| over the nonzero e_s1 grid nodes at |E_s2| = 0.4 mV/cm."""
    nodes = ctx.surface.axis1[1:]
    bers, gaps = [], []
    for e1 in nodes:
        m = means_from_surface(ctx.surface, e1, 0.1 * E_S2_MVPCM)
        bers.append(ber(case, m, NoiseModel(sigma)).ber)
        gaps.append(abs(m.g01 - m.g10))
    return nodes, np.array(bers), np.array(gaps)


def interior_maxima(values):
    """Indices of interior local maxima (non-strict)."""
    v = np.asarray(values)
    return [i for i in range(1, v.size - 1) if v[i] >= v[i - 1] and v[i] >= v[i + 1]]


@_timed
def criterion_10(ctx):
    """BER peak coincides with the grid node minimizing |g01 - g10| (cases 3 and 4).

    The peak is the highest interior local maximum of the sweep; the end
    points are excluded because at the smallest |E_s1| the two user-1
    levels merge and the BER is high for reasons unrelated to interference.
    """
    ok = True
    parts = []
    for case in (3, 4):
        nodes, b, gap = peak_sweep(ctx, case)
        k = int(np.argmin(gap))
        maxima = interior_maxima(b)
        peak = max(maxima, key=lambda i: b[i]) if maxima else -1
        ok &= peak == k
        parts.append(f"case {case}: argmin |g01-g10| at {10 * nodes[k]:.4g} mV/cm, "
                     f"peak at {10 * nodes[peak]:.4g} mV/cm (BER {b[peak]:.4f})")
    return CriterionResult(10, "interference peak location", ok, "; ".join(parts))


@_timed
def criterion_11(ctx):
    """Nearest-mean and midpoint-threshold decisions agree on 1e4 noisy symbols per case."""
    n = 10_000
    mismatches = 0
    for case in (1, 2, 3, 4):
        m = ctx.means(1.0)
        levels = m.as_array()
        frame = generate_frame(n, ctx.seed, case, label=f"acceptance:detect:{case}")
        clean, _ = _clean_levels(frame, levels, 0.0)
        stat = clean[:, frame.n_discard:].mean(axis=1) + 0.05 * Stream(
            ctx.seed, f"acceptance:detect-noise:{case}").normals(n)
        a = DetectionScheme("nearest-mean", m, case).classify(stat)
        b = DetectionScheme("midpoint-thresholds", m, case).classify(stat)
        mismatches += int(np.count_nonzero(a != b))
    return CriterionResult(11, "detection equivalence", mismatches == 0,
                           f"{mismatches} mismatching decisions over 4 x {n} symbols")


@_timed
def criterion_12(ctx):
    """Two mc-sweep runs with one seed give byte-identical CSVs."""
    from .cli import run_mc_sweep

    with tempfile.TemporaryDirectory() as tmp:
        dirs = [Path(tmp) / "a", Path(tmp) / "b"]
        for d in dirs:
            run_mc_sweep(ctx.scenario, ctx.surface, d, cases=(1, 2, 3, 4), e_s2=E_S2_MVPCM,
                         e_s1=MC_E1_MVPCM, sigmas=(SIGMA,), n_symbols=2000, seed=ctx.seed)
        names = sorted(p.name for p in dirs[0].iterdir())
        same = [filecmp.cmp(dirs[0] / nm, dirs[1] / nm, shallow=False) for nm in names]
    return CriterionResult(12, "mc-sweep determinism", bool(names) and all(same),
                           f"{sum(same)}/{len(names)} files byte-identical")


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12)


def run_all(ctx=None, only=None):
    ctx = AcceptanceContext() if ctx is None else ctx
    results = []
    for k, fn in enumerate(CRITERIA, start=1):
        if only and k not in only:
            continue
        results.append(fn(ctx))
    return results

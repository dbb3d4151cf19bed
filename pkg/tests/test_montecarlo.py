import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from rydberg_link.errors import ConfigError, DomainError
from rydberg_link.link import COMBOS, CombinationMeans, NoiseModel, ber, means_from_surface
from rydberg_link.montecarlo import (
    CASE_COMBOS,
    CASE_USER,
    DetectionScheme,
    OokFrame,
    clopper_pearson,
    decision_statistics,
    detect,
    estimate_error_rates,
    generate_frame,
    simulate,
    synthesize_trace,
    write_decisions_csv,
    write_trace_csv,
)

SIGMA = 0.02


def preset_levels(surface, e1_mvpcm, e2_mvpcm=0.4):
    return means_from_surface(surface, 0.1 * e1_mvpcm, 0.1 * e2_mvpcm)


def exact_nearest_mean_ber(levels, case, sigma):
    """Bit error probability of nearest-mean detection among the feasible
    combinations, integrating the Gaussian density over each decision cell
    (ties to the larger mean, as documented)."""
    feasible = [COMBOS.index(c) for c in CASE_COMBOS[case]]
    user = CASE_USER[case]
    vals = np.asarray(levels)[feasible]
    order = np.argsort(-vals, kind="stable")
    idx, lv = np.asarray(feasible)[order], vals[order]
    keep = np.concatenate([[True], lv[1:] != lv[:-1]])
    idx, lv = idx[keep], lv[keep]
    edges = np.concatenate([[np.inf], 0.5 * (lv[:-1] + lv[1:]), [-np.inf]])
    bit = (lambda c: c >> 1) if user == 1 else (lambda c: c & 1)
    total = 0.0
    for true in feasible:
        mu = levels[true]
        for k, dec in enumerate(idx):
            if bit(dec) != bit(true):
                total += stats.norm.cdf(edges[k], mu, sigma) - stats.norm.cdf(edges[k + 1], mu, sigma)
    return total / len(feasible)


# -- frames -------------------------------------------------------------------------

def test_frame_timing_defaults():
    f = generate_frame(10, 0, 3)
    assert f.n_discard == 20 and f.n_retained == 80
    assert f.sample_interval == pytest.approx(1e-6)


def test_frame_reproducible():
    a = generate_frame(2 ** 11, 42, 3)
    b = generate_frame(2 ** 11, 42, 3)
    assert np.array_equal(a.bits_user1, b.bits_user1)
    assert np.array_equal(a.bits_user2, b.bits_user2)
    assert not np.array_equal(a.bits_user1, generate_frame(2 ** 11, 43, 3).bits_user1)


def test_constant_user_per_case():
    assert np.all(generate_frame(500, 1, 1).bits_user1 == 1)
    assert np.all(generate_frame(500, 1, 2).bits_user2 == 1)


@pytest.mark.parametrize("case,user", [(1, 2), (2, 1), (3, 1), (3, 2), (4, 1)])
def test_ones_fraction(case, user):
    n = 20000
    f = generate_frame(n, 9, case)
    bits = f.bits_user1 if user == 1 else f.bits_user2
    assert abs(bits.mean() - 0.5) <= 4 * math.sqrt(0.25 / n)


def test_frame_validation():
    with pytest.raises(DomainError):
        generate_frame(0, 0, 1)
    with pytest.raises(DomainError):
        generate_frame(10, 0, 5)
    with pytest.raises(DomainError):
        OokFrame(np.array([0, 2]), np.array([0, 1]))


# -- traces ---------------------------------------------------------------------------

def test_noiseless_trace_piecewise_constant():
    levels = np.array([1.0, 0.7, 0.4, 0.1])
    rep, frame, trace, _ = simulate(levels, 3, 0.0, 1000, 4, keep=50)
    v = trace.voltage.reshape(50, -1)
    assert np.array_equal(v, np.repeat(levels[frame.combo_index()[:50]][:, None], 100, axis=1))
    assert trace.time[1] == pytest.approx(1e-6)
    assert rep.bit_errors == 0


def test_case3_trace_shows_four_levels(surface):
    m = preset_levels(surface, 1.0, 1.0)
    frame = generate_frame(200, 1, 3)
    trace = synthesize_trace(frame, surface, 0.1, 0.1, NoiseModel(1e-9), 1)
    stat = decision_statistics(trace.voltage, frame)
    assert np.unique(np.round(stat, 6)).size == 4
    assert np.allclose(np.sort(np.unique(np.round(stat, 6))), np.sort(np.round(m.as_array(), 6)))


def test_decision_statistic_mean_and_variance(surface):
    n_sym = 20000
    frame = generate_frame(n_sym, 3, 3)
    trace = synthesize_trace(frame, surface, 0.1, 0.04, NoiseModel(SIGMA), 3)
    stat = decision_statistics(trace.voltage, frame)
    m = preset_levels(surface, 1.0).as_array()
    for combo in range(4):
        x = stat[frame.combo_index() == combo]
        assert abs(x.mean() - m[combo]) < 4 * SIGMA / math.sqrt(x.size)
        # sample variance of n normals: sd of s^2 is sigma^2 sqrt(2/(n-1))
        assert abs(x.var(ddof=1) - SIGMA ** 2) < 4 * SIGMA ** 2 * math.sqrt(2 / (x.size - 1))


def test_trace_out_of_surface_range(surface):
    frame = generate_frame(10, 0, 3)
    with pytest.raises(DomainError):
        synthesize_trace(frame, surface, 10.0, 0.0, NoiseModel(SIGMA), 0)


def test_simulate_matches_trace_pipeline(surface):
    levels = preset_levels(surface, 0.7).as_array()
    frame = generate_frame(3000, 8, 3, label="z")
    trace = synthesize_trace(frame, surface, 0.07, 0.04, NoiseModel(0.05), 8, label="z")
    dec = detect(trace, frame, DetectionScheme("nearest-mean", CombinationMeans(*levels), 3))
    direct = estimate_error_rates(dec.user1, dec.user2, frame.bits_user1, frame.bits_user2, 2)
    assert simulate(levels, 3, 0.05, 3000, 8, label="z") == direct


# -- detection ----------------------------------------------------------------------

@pytest.mark.parametrize("case", [1, 2, 3, 4])
def test_noiseless_detection_error_free(case):
    rep = simulate([1.0, 0.7, 0.4, 0.1], case, 0.0, 2000, 5)
    assert rep.bit_errors == 0 and rep.symbol_errors == 0


def test_tie_goes_to_larger_mean():
    m = CombinationMeans(1.0, 0.75, 0.5, 0.25)
    for mode in ("nearest-mean", "midpoint-thresholds"):
        scheme = DetectionScheme(mode, m, 3)
        assert list(scheme.classify([0.625, 0.875, 0.375])) == [1, 0, 2]


def test_feasible_sets_per_case():
    m = CombinationMeans(1.0, 0.75, 0.5, 0.25)
    assert sorted(DetectionScheme("nearest-mean", m, 1).candidates()[0]) == [2, 3]
    assert sorted(DetectionScheme("nearest-mean", m, 2).candidates()[0]) == [1, 3]
    assert DetectionScheme("nearest-mean", m, 1).user == 2
    assert DetectionScheme("nearest-mean", m, 4).user == 1


level = st.floats(-0.1, 1.1, allow_nan=False)


@given(level, level, level, level, st.integers(1, 4),
       st.lists(st.floats(-0.5, 1.5, allow_nan=False), min_size=1, max_size=50))
@settings(max_examples=200)
def test_detection_modes_agree(a, b, c, d, case, stat):
    m = CombinationMeans(a, b, c, d)
    # the rules coincide in exact arithmetic; within rounding of a midpoint the
    # two distances can compare equal while the threshold still separates them
    _, lv = DetectionScheme("nearest-mean", m, case).candidates()
    mid = 0.5 * (lv[:-1] + lv[1:])
    stat = np.asarray(stat)
    tol = 8 * np.spacing(np.maximum(np.abs(stat), 1.0))
    clear = np.all(np.abs(stat[:, None] - mid[None, :]) > tol[:, None], axis=1) if mid.size else \
        np.ones(stat.size, bool)
    near = DetectionScheme("nearest-mean", m, case).classify(stat)
    thr = DetectionScheme("midpoint-thresholds", m, case).classify(stat)
    assert np.array_equal(near[clear], thr[clear])


def test_detection_modes_agree_on_noisy_symbols(surface):
    for e1 in (0.2, 0.4, 1.0, 3.0):
        levels = preset_levels(surface, e1).as_array()
        for case in (1, 2, 3, 4):
            a = simulate(levels, case, 0.05, 10_000, 6, mode="nearest-mean", keep=10_000)
            b = simulate(levels, case, 0.05, 10_000, 6, mode="midpoint-thresholds", keep=10_000)
            assert np.array_equal(a[3].combos, b[3].combos)


def test_empty_retained_window():
    frame = OokFrame(np.array([1]), np.array([0]), samples_per_symbol=1, discard_window=50e-6)
    assert frame.n_retained == 0
    with pytest.raises(ConfigError):
        decision_statistics(np.zeros(1), frame)
    with pytest.raises(ConfigError):
        simulate([1.0, 0.7, 0.4, 0.1], 3, 0.01, 10, 0, samples_per_symbol=1, discard_window=50e-6)


# -- error counting -------------------------------------------------------------------

def test_estimate_identical_and_complementary():
    t1 = np.array([0, 1, 1, 0, 1])
    t2 = np.array([1, 1, 0, 0, 1])
    rep = estimate_error_rates(t1, t2, t1, t2, 2)
    assert rep.ber == 0.0 and rep.ber_ci[0] == 0.0 and 0 < rep.ber_ci[1] < 1
    rep = estimate_error_rates(t1, 1 - t2, t1, t2, 2)
    assert rep.ber == 1.0 and rep.ser == 1.0
    rep = estimate_error_rates(1 - t1, t2, t1, t2, 2)
    assert rep.ber == 0.0 and rep.ser == 1.0


def test_estimate_rejects_bad_input():
    with pytest.raises(DomainError):
        estimate_error_rates([], [], [], [], 1)
    with pytest.raises(DomainError):
        estimate_error_rates([0, 1], [0], [0, 1], [0, 1], 1)


@pytest.mark.parametrize("k,n", [(0, 10), (3, 10), (10, 10), (57, 100_000), (4999, 10_000)])
def test_clopper_pearson_matches_scipy(k, n):
    ci = stats.binomtest(k, n).proportion_ci(confidence_level=0.95, method="exact")
    lo, hi = clopper_pearson(k, n)
    assert lo == pytest.approx(ci.low, abs=1e-12)
    assert hi == pytest.approx(ci.high, abs=1e-12)


# -- statistical agreement ------------------------------------------------------------

def test_case1_matches_analytic(surface):
    n = 100_000
    m = preset_levels(surface, 1.0)
    p = ber(1, m, NoiseModel(SIGMA)).ber
    rep = simulate(m.as_array(), 1, SIGMA, n, 21, label="case1")
    assert abs(rep.ber - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_case3_sweep_ordered_regime(surface):
    # with |E_s2| = 1 mV/cm the nominal ordering g00 > g01 > g10 > g11 holds
    # for |E_s1| between 1.6 and 3 mV/cm; the four-level formula applies there
    n = 100_000
    checked = 0
    for k, e1 in enumerate(np.geomspace(1.6, 3.0, 5)):
        m = preset_levels(surface, e1, 1.0)
        assert m.ordered
        p = ber(3, m, NoiseModel(SIGMA)).ber
        if not 1e-3 <= p <= 0.5:
            continue
        checked += 1
        rep = simulate(m.as_array(), 3, SIGMA, n, 22, label=f"ordered:{k}")
        assert abs(rep.ber - p) <= 4 * math.sqrt(p * (1 - p) / n)
    assert checked >= 3


def test_case3_sweep_reproduces_crossing_peak(surface):
    # peak of the simulated case-3 curve sits at the g01/g10 crossing
    n = 100_000
    e1 = np.geomspace(0.1, 10.0, 21)
    emp, gap = [], []
    for k, x in enumerate(e1):
        m = preset_levels(surface, x)
        gap.append(abs(m.g01 - m.g10))
        emp.append(simulate(m.as_array(), 3, SIGMA, n, 23, label=f"peak:{k}").ber)
    emp = np.array(emp)
    cross = int(np.argmin(gap))
    assert emp[cross] > 0.25
    assert emp[cross] >= emp[cross - 1] and emp[cross] >= emp[cross + 1]


@pytest.mark.parametrize("case", [1, 2, 3, 4])
@pytest.mark.parametrize("e1", [0.1, 10 ** -0.5, 1.0, 10 ** 0.5])
def test_matches_exact_nearest_mean_probability(surface, case, e1):
    # includes points where the means leave the nominal order; the exact
    # probability of the implemented detector is the oracle there
    n = 100_000
    levels = preset_levels(surface, e1).as_array()
    p = exact_nearest_mean_ber(levels, case, SIGMA)
    rep = simulate(levels, case, SIGMA, n, 24, label=f"exact:{case}:{e1:.3f}")
    bound = 4 * math.sqrt(max(p * (1 - p), 1 / n) / n)
    assert abs(rep.ber - p) <= bound


def test_ser_equals_ber_when_one_bit_per_symbol(surface):
    m = preset_levels(surface, 1.0)
    rep = simulate(m.as_array(), 1, SIGMA, 50_000, 25)
    assert rep.symbol_errors == rep.bit_errors


def test_discard_window_helps_with_transients():
    levels = [1.0, 0.7, 0.4, 0.1]
    for tau in (5e-6, 15e-6):
        full = simulate(levels, 3, 0.05, 20_000, 26, tau=tau, discard_window=0.0)
        cut = simulate(levels, 3, 0.05, 20_000, 26, tau=tau, discard_window=20e-6)
        assert cut.ber <= full.ber


def test_simulation_deterministic(tmp_path):
    levels = [1.0, 0.8, 0.5, 0.45]
    a = simulate(levels, 3, 0.05, 5000, 27, tau=3e-6, keep=20)
    b = simulate(levels, 3, 0.05, 5000, 27, tau=3e-6, keep=20)
    assert a[0] == b[0]
    assert np.array_equal(a[2].voltage, b[2].voltage)
    assert simulate(levels, 3, 0.05, 5000, 27, tau=3e-6) == a[0]
    write_trace_csv(a[2], tmp_path / "t1.csv")
    write_trace_csv(b[2], tmp_path / "t2.csv")
    assert (tmp_path / "t1.csv").read_bytes() == (tmp_path / "t2.csv").read_bytes()
    assert (tmp_path / "t1.csv").read_text().splitlines()[0] == "time_s,voltage_norm"
    write_decisions_csv(a[1], a[3], 2, tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "symbol_index,truth_u1,truth_u2,decided_bit"
    assert len(lines) == 21

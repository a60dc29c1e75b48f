"""Estimator tests: counting, arithmetic examples, and error propagation."""

import math

import numpy as np
import pytest

from dlczsim import analysis, model
from dlczsim.analysis import (CountsTable, EstimateWithError,
                              InsufficientStatisticsError, SettingCounts,
                              bell_s, correlation_e, g2_estimate,
                              merge_counts, retrieval_estimate,
                              singles_probability, tally,
                              violation_significance)
from dlczsim.params import AngleSettings, ExperimentParams
from dlczsim.trialsim import EventLog, TrialMode, run_campaign


def tiny_log(events, n_trials=1, theta_s=0.0, theta_as=0.0):
    """Build a log directly from (trial, det, t, win) tuples."""
    trial = np.array([e[0] for e in events], dtype=np.int64)
    det = np.array([e[1] for e in events], dtype=np.int8)
    t = np.array([e[2] for e in events], dtype=np.float64)
    win = np.array([e[3] for e in events], dtype=np.int8)
    return EventLog(ExperimentParams(), theta_s, theta_as, TrialMode.G2,
                    seed=0, n_trials=n_trials, trial=trial, det=det,
                    t_ns=t, win=win)


def counts_from(coincidences, n_trials=100, singles=None,
                theta_s=0.0, theta_as=0.0):
    """CountsTable with the four pair counts given as a tuple."""
    c11, c12, c21, c22 = coincidences
    if singles is None:
        singles = {"S1": c11 + c12, "S2": c21 + c22,
                   "AS1": c11 + c21, "AS2": c12 + c22}
    table = CountsTable()
    table.add(SettingCounts(theta_s, theta_as, n_trials, singles, {
        ("S1", "AS1"): c11, ("S1", "AS2"): c12,
        ("S2", "AS1"): c21, ("S2", "AS2"): c22,
    }))
    return table


def test_tally_single_coincidence():
    log = tiny_log([(0, 0, 5.0, 0), (0, 2, 7.0, 1)])
    sec = tally(log).section(0.0, 0.0)
    assert sec.singles == {"S1": 1, "S2": 0, "AS1": 1, "AS2": 0}
    assert sec.coincidences[("S1", "AS1")] == 1
    assert sec.total_coincidences == 1


def test_tally_lone_stokes_click():
    log = tiny_log([(0, 0, 5.0, 0)])
    sec = tally(log).section(0.0, 0.0)
    assert sec.singles == {"S1": 1, "S2": 0, "AS1": 0, "AS2": 0}
    assert sec.total_coincidences == 0


def test_tally_saturates_multiple_clicks():
    # Two clicks on one detector in one window count once.
    log = tiny_log([(0, 0, 1.0, 0), (0, 0, 2.0, 0), (0, 3, 1.0, 1)])
    sec = tally(log).section(0.0, 0.0)
    assert sec.singles["S1"] == 1
    assert sec.coincidences[("S1", "AS2")] == 1


def test_tally_requires_trials():
    log = tiny_log([], n_trials=0)
    with pytest.raises(InsufficientStatisticsError):
        tally(log)


def test_tally_simulated_log_matches_model():
    p = ExperimentParams(chi=0.01, tau_w=100.0, t_storage=0.0, eta_s=0.3,
                         eta_as=0.3, gamma0=0.15, alpha_write=0.0,
                         k_bg=1e-5, c_bg=1e-4, xi=0.27)
    n = 1_000_000
    log = run_campaign(p, 0.0, 0.0, TrialMode.G2, n, seed=31)
    table = tally(log)
    for channel, expect in (("S", model.prob_stokes(p)),
                            ("AS", model.prob_antistokes(p))):
        est = singles_probability(table, channel)
        assert abs(est.value - expect) < 4 * math.sqrt(expect / n)


def test_merge_counts_rejects_duplicates():
    t1 = counts_from((1, 0, 0, 1))
    t2 = counts_from((1, 0, 0, 1))
    with pytest.raises(ValueError):
        merge_counts([t1, t2])


def test_g2_estimate_arithmetic():
    singles = {"S1": 10_000, "S2": 0, "AS1": 10_000, "AS2": 0}
    table = counts_from((100, 0, 0, 0), n_trials=1_000_000, singles=singles)
    est = g2_estimate(table)
    assert est.value == pytest.approx(1.0)
    assert est.sigma == pytest.approx(0.101, abs=5e-4)


def test_g2_estimate_needs_coincidences():
    table = counts_from((0, 0, 0, 0))
    with pytest.raises(InsufficientStatisticsError):
        g2_estimate(table)


def test_g2_estimate_simulated_log():
    p = ExperimentParams(chi=0.01, tau_w=100.0, t_storage=0.0, eta_s=0.3,
                         eta_as=0.3, gamma0=0.15, alpha_write=0.0,
                         k_bg=1e-5, c_bg=1e-4, xi=0.27)
    log = run_campaign(p, 0.0, 0.0, TrialMode.G2, 2_000_000, seed=41)
    est = g2_estimate(tally(log))
    assert abs(est.value - 36.01) < 4 * est.sigma


def test_retrieval_estimate_noiseless_algebra():
    # B = 0, xi = 0: estimator reduces to gamma at first order.
    chi, gamma, eta_s, eta_as = 0.01, 0.15, 0.3, 0.3
    n = 10**9
    n_s = round(n * chi * eta_s)
    n_as = round(n * chi * gamma * eta_as)
    n_c = round(n * (chi * gamma * eta_s * eta_as
                     + chi * eta_s * chi * gamma * eta_as))
    singles = {"S1": n_s, "S2": 0, "AS1": n_as, "AS2": 0}
    table = counts_from((n_c, 0, 0, 0), n_trials=n, singles=singles)
    est = retrieval_estimate(table, eta_as, eta_s, background_mean=0.0)
    assert est.value == pytest.approx(gamma, rel=1e-6)


def test_retrieval_estimate_simulated_log():
    p = ExperimentParams(chi=0.01, tau_w=100.0, t_storage=0.0, eta_s=0.3,
                         eta_as=0.3, gamma0=0.15, alpha_write=0.0,
                         k_bg=1e-5, c_bg=1e-4, xi=0.27)
    log = run_campaign(p, 0.0, 0.0, TrialMode.G2, 10_000_000, seed=51)
    b = model.background_b(p.tau_w, p.k_bg)
    est = retrieval_estimate(tally(log), p.eta_as, p.eta_s, b)
    assert abs(est.value - 0.15) < 0.01
    assert abs(est.value - 0.15) < 4 * est.sigma


def test_retrieval_estimate_degenerate_denominator():
    singles = {"S1": 100, "S2": 0, "AS1": 50, "AS2": 0}
    table = counts_from((10, 0, 0, 0), n_trials=1000, singles=singles)
    # Measured Stokes rate equals the background rate: nothing attributable
    # to real excitations.
    with pytest.raises(InsufficientStatisticsError):
        retrieval_estimate(table, 0.3, 0.5, background_mean=0.2)


def test_correlation_examples():
    est = correlation_e(counts_from((50, 0, 0, 50)), 0.0, 0.0)
    assert (est.value, est.sigma) == (1.0, 0.0)
    est = correlation_e(counts_from((25, 25, 25, 25)), 0.0, 0.0)
    assert est.value == 0.0
    assert est.sigma == pytest.approx(0.1)
    est = correlation_e(counts_from((85, 15, 15, 85)), 0.0, 0.0)
    assert est.value == pytest.approx(0.7)
    assert est.sigma == pytest.approx(0.0505, abs=5e-4)


def test_correlation_needs_coincidences():
    with pytest.raises(InsufficientStatisticsError):
        correlation_e(counts_from((0, 0, 0, 0)), 0.0, 0.0)
    with pytest.raises(InsufficientStatisticsError):
        correlation_e(counts_from((1, 0, 0, 1)), 10.0, 20.0)


def test_violation_significance_examples():
    assert violation_significance(EstimateWithError(2.64, 0.02)) \
        == pytest.approx(32.0, rel=1e-12)
    assert violation_significance(EstimateWithError(2.26, 0.05)) \
        == pytest.approx(5.2, rel=1e-12)
    assert violation_significance(EstimateWithError(2.0, 0.3)) == 0.0


def test_bell_s_combination():
    settings = AngleSettings()
    tables = []
    # Four settings with correlations +e, -e, +e, +e.
    e_counts = {(0.0, 22.5): (85, 15, 15, 85),
                (0.0, 67.5): (15, 85, 85, 15),
                (45.0, 22.5): (85, 15, 15, 85),
                (45.0, 67.5): (85, 15, 15, 85)}
    for (ts, tas), c in e_counts.items():
        tables.append(counts_from(c, theta_s=ts, theta_as=tas))
    table = merge_counts(tables)
    est, significance = bell_s(table, settings)
    assert est.value == pytest.approx(2.8)
    assert est.sigma == pytest.approx(2 * 0.0505, abs=1e-3)
    assert significance == pytest.approx((est.value - 2.0) / est.sigma)


def test_counts_validation():
    with pytest.raises(ValueError):
        SettingCounts(0.0, 0.0, 100, {"S1": 1, "S2": 0, "AS1": 0, "AS2": 0},
                      {("S1", "AS1"): 2, ("S1", "AS2"): 0,
                       ("S2", "AS1"): 0, ("S2", "AS2"): 0})
    with pytest.raises(ValueError):
        EstimateWithError(1.0, -0.1)
    with pytest.raises(InsufficientStatisticsError):
        CountsTable().section(0.0, 0.0)

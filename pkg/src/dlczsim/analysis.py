"""Estimators turning event logs into measured quantities.

All estimators report one-standard-deviation counting-statistics
uncertainties, propagated at first order assuming independent Poisson
counts.  Coincidences are defined per trial: at least one click on the
Stokes detector in the write window and at least one on the anti-Stokes
detector in the read window of the same trial.  Multiple clicks on one
detector within one window saturate to a single count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import AngleSettings
from .trialsim import DETECTOR_NAMES, EventLog

S_DETECTORS = ("S1", "S2")
AS_DETECTORS = ("AS1", "AS2")
PAIRS = tuple((s, a) for s in S_DETECTORS for a in AS_DETECTORS)


class InsufficientStatisticsError(ValueError):
    """Counts are too sparse (or degenerate) for the requested estimator."""


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    sigma: float

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ValueError(f"sigma={self.sigma!r} must be >= 0")


@dataclass(frozen=True)
class SettingCounts:
    """Singles and pair-coincidence counts at one analyzer setting."""

    theta_s: float
    theta_as: float
    n_trials: int
    singles: dict[str, int]
    coincidences: dict[tuple[str, str], int]

    def __post_init__(self):
        for (s, a), c in self.coincidences.items():
            if c < 0 or c > min(self.singles[s], self.singles[a]):
                raise ValueError(
                    f"coincidence count {c} for ({s},{a}) exceeds its singles")

    @property
    def total_coincidences(self) -> int:
        return sum(self.coincidences.values())


@dataclass
class CountsTable:
    """Counts grouped by analyzer setting; the sufficient statistic."""

    sections: dict[tuple[float, float], SettingCounts] = field(
        default_factory=dict)

    def section(self, theta_s: float, theta_as: float) -> SettingCounts:
        key = (float(theta_s), float(theta_as))
        if key not in self.sections:
            raise InsufficientStatisticsError(
                f"no counts recorded at setting (theta_s={theta_s}, "
                f"theta_as={theta_as})")
        return self.sections[key]

    def add(self, section: SettingCounts) -> None:
        key = (section.theta_s, section.theta_as)
        if key in self.sections:
            raise ValueError(f"duplicate angle setting {key}")
        self.sections[key] = section


def tally(log: EventLog) -> CountsTable:
    """Count singles and per-pair coincidences in one event log."""
    if log.n_trials < 1:
        raise InsufficientStatisticsError("event log covers no trials")
    # Per-detector sets of trials with >= 1 click in the proper window.
    trial_sets: dict[str, np.ndarray] = {}
    for code, name in enumerate(DETECTOR_NAMES):
        want_win = 0 if code <= 1 else 1
        mask = (log.det == code) & (log.win == want_win)
        trial_sets[name] = np.unique(log.trial[mask])
    singles = {name: int(len(trial_sets[name])) for name in DETECTOR_NAMES}
    coinc = {
        (s, a): int(len(np.intersect1d(trial_sets[s], trial_sets[a],
                                       assume_unique=True)))
        for s, a in PAIRS
    }
    table = CountsTable()
    table.add(SettingCounts(log.theta_s, log.theta_as, log.n_trials,
                            singles, coinc))
    return table


def merge_counts(tables: list[CountsTable]) -> CountsTable:
    """Combine single-setting tables from one campaign into one table."""
    merged = CountsTable()
    for t in tables:
        for sec in t.sections.values():
            merged.add(sec)
    return merged


def _g2_counts(counts: CountsTable, theta_s: float, theta_as: float):
    sec = counts.section(theta_s, theta_as)
    n_c = sec.total_coincidences
    n_s = sec.singles["S1"] + sec.singles["S2"]
    n_as = sec.singles["AS1"] + sec.singles["AS2"]
    return sec, n_c, n_s, n_as


def g2_estimate(counts: CountsTable, theta_s: float = 0.0,
                theta_as: float = 0.0) -> EstimateWithError:
    """Cross-correlation estimate g2 = N_c * n / (N_S * N_AS).

    Uses the setting with both analyzers at zero by default, summing the
    four detector pairs.
    """
    sec, n_c, n_s, n_as = _g2_counts(counts, theta_s, theta_as)
    if n_c == 0 or n_s == 0 or n_as == 0:
        raise InsufficientStatisticsError(
            "insufficient coincidences: need N_coinc, N_S, N_AS all > 0")
    value = n_c * sec.n_trials / (n_s * n_as)
    sigma = value * math.sqrt(1.0 / n_c + 1.0 / n_s + 1.0 / n_as)
    return EstimateWithError(value, sigma)


def retrieval_estimate(counts: CountsTable, eta_as: float, eta_s: float,
                       background_mean: float, theta_s: float = 0.0,
                       theta_as: float = 0.0) -> EstimateWithError:
    """Retrieval-efficiency estimate from accidental-subtracted coincidences.

    ``gamma = (P_coinc - P_S * P_AS) / (eta_as * (P_S - B * eta_s))`` with
    ``B = background_mean``, the mean Stokes background per pulse before
    detection losses.
    """
    if not 0.0 < eta_as <= 1.0 or not 0.0 < eta_s <= 1.0:
        raise ValueError("detection efficiencies must lie in (0, 1]")
    sec, n_c, n_s, n_as = _g2_counts(counts, theta_s, theta_as)
    n = sec.n_trials
    if n_c == 0:
        raise InsufficientStatisticsError("insufficient coincidences")
    den = eta_as * (n_s / n - background_mean * eta_s)
    if den <= 0.0:
        raise InsufficientStatisticsError(
            "background exceeds the measured Stokes rate")
    num = n_c / n - n_s * n_as / n**2
    value = num / den
    # First-order propagation over independent Poisson N_c, N_S, N_AS.
    d_nc = 1.0 / (n * den)
    d_ns = (-n_as / n**2) / den - num * (eta_as / n) / den**2
    d_nas = (-n_s / n**2) / den
    var = d_nc**2 * n_c + d_ns**2 * n_s + d_nas**2 * n_as
    return EstimateWithError(value, math.sqrt(var))


def correlation_e(counts: CountsTable, theta_s: float,
                  theta_as: float) -> EstimateWithError:
    """Correlation E from the four pair-coincidence counts at one setting."""
    sec = counts.section(theta_s, theta_as)
    c11 = sec.coincidences[("S1", "AS1")]
    c12 = sec.coincidences[("S1", "AS2")]
    c21 = sec.coincidences[("S2", "AS1")]
    c22 = sec.coincidences[("S2", "AS2")]
    total = c11 + c12 + c21 + c22
    if total == 0:
        raise InsufficientStatisticsError(
            f"insufficient coincidences at setting ({theta_s}, {theta_as})")
    e = (c11 + c22 - c12 - c21) / total
    sigma = math.sqrt(max(0.0, 1.0 - e * e) / total)
    return EstimateWithError(e, sigma)


def violation_significance(s: EstimateWithError) -> float:
    """Number of standard deviations by which S exceeds the local bound 2."""
    if s.sigma > 0.0:
        return (s.value - 2.0) / s.sigma
    return math.inf if s.value > 2.0 else -math.inf


def bell_s(counts: CountsTable,
           settings: AngleSettings) -> tuple[EstimateWithError, float]:
    """CHSH Bell parameter with uncertainty and violation significance.

    Returns ``(S estimate, (S - 2) / sigma_S)``.
    """
    combos = settings.chsh_combinations()
    estimates = [correlation_e(counts, ts, tas) for ts, tas in combos]
    e = [est.value for est in estimates]
    s = abs(e[0] - e[1] + e[2] + e[3])
    sigma = math.sqrt(sum(est.sigma**2 for est in estimates))
    result = EstimateWithError(s, sigma)
    return result, violation_significance(result)


def singles_probability(counts: CountsTable, channel: str,
                        theta_s: float = 0.0,
                        theta_as: float = 0.0) -> EstimateWithError:
    """Per-trial detection probability of one channel ("S" or "AS")."""
    sec = counts.section(theta_s, theta_as)
    dets = S_DETECTORS if channel == "S" else AS_DETECTORS
    count = sum(sec.singles[d] for d in dets)
    p = count / sec.n_trials
    return EstimateWithError(p, math.sqrt(max(count, 1)) / sec.n_trials)

"""Seeded Monte Carlo engine producing time-tagged detection-event logs.

Trials are simulated in fixed-size blocks of ``BLOCK_TRIALS`` trials.  Each
block draws from its own counter-based Philox stream keyed by
``(master seed, block index)``, and the random draws inside a block happen
in a fixed order over full-length arrays.  The event log is therefore a
pure function of (params, angles, mode, n_trials, seed), no matter how the
blocks are partitioned across workers.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import model
from .params import ExperimentParams, ParameterError

FORMAT_VERSION = 1
BLOCK_TRIALS = 65536

DETECTOR_NAMES = ("S1", "S2", "AS1", "AS2")
DETECTOR_CODES = {name: i for i, name in enumerate(DETECTOR_NAMES)}
WINDOW_NAMES = ("W", "R")

_MASK64 = (1 << 64) - 1


class TrialMode(enum.Enum):
    """Trial sequence: feed-forward heralded, or fixed write-clean-read."""

    SWPE = "swpe"
    G2 = "g2"


@dataclass(frozen=True)
class DetectionEvent:
    trial_id: int
    detector: str        # one of S1, S2, AS1, AS2
    time_ns: float       # time within the declared window
    window: str          # "W" or "R"


class EventLog:
    """Immutable, columnar log of detection events plus its header.

    Events are stored sorted by (trial_id, window, time_ns, detector).
    Event times are measured from the start of their window; the write
    window spans [0, tau_w] and the read window [0, tau_w] as well.
    """

    def __init__(self, params: ExperimentParams, theta_s: float,
                 theta_as: float, mode: TrialMode, seed: int, n_trials: int,
                 trial: np.ndarray, det: np.ndarray, t_ns: np.ndarray,
                 win: np.ndarray, truncate_on_herald: bool = True):
        self.params = params
        self.theta_s = float(theta_s)
        self.theta_as = float(theta_as)
        self.mode = mode
        self.seed = int(seed)
        self.n_trials = int(n_trials)
        self.truncate_on_herald = bool(truncate_on_herald)
        self.version = FORMAT_VERSION
        order = np.lexsort((det, t_ns, win, trial))
        self.trial = np.ascontiguousarray(trial[order])
        self.det = np.ascontiguousarray(det[order])
        self.t_ns = np.ascontiguousarray(t_ns[order])
        self.win = np.ascontiguousarray(win[order])
        for arr in (self.trial, self.det, self.t_ns, self.win):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.trial)

    def __iter__(self):
        for i in range(len(self.trial)):
            yield DetectionEvent(
                int(self.trial[i]), DETECTOR_NAMES[self.det[i]],
                float(self.t_ns[i]), WINDOW_NAMES[self.win[i]])

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventLog):
            return NotImplemented
        return (self.params == other.params
                and self.theta_s == other.theta_s
                and self.theta_as == other.theta_as
                and self.mode == other.mode
                and self.seed == other.seed
                and self.n_trials == other.n_trials
                and np.array_equal(self.trial, other.trial)
                and np.array_equal(self.det, other.det)
                and np.array_equal(self.t_ns, other.t_ns)
                and np.array_equal(self.win, other.win))


def _block_rng(seed: int, block: int) -> np.random.Generator:
    key = ((seed & _MASK64) << 64) | (block & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


# Inverse CDF of the raised-cosine (Hann) envelope on [0, 1], tabulated once.
_RC_GRID = np.linspace(0.0, 1.0, 4097)
_RC_CDF = _RC_GRID - np.sin(2.0 * np.pi * _RC_GRID) / (2.0 * np.pi)


def _emission_times(u: np.ndarray, tau_w: float, envelope: str) -> np.ndarray:
    if envelope == "rectangular":
        return u * tau_w
    return np.interp(u, _RC_CDF, _RC_GRID) * tau_w


def _simulate_block(params: ExperimentParams, pjoint: np.ndarray,
                    gamma: float, mode: TrialMode, truncate: bool,
                    seed: int, block: int, m: int):
    """Simulate one block of m trials; returns local event arrays."""
    rng = _block_rng(seed, block)
    tau_w = params.tau_w
    b_mean = model.background_b(tau_w, params.k_bg) * params.eta_s
    cum = np.cumsum(pjoint)

    # Fixed draw order; every draw uses full-length arrays so the stream
    # consumption is independent of the parameter values.
    u_exc = rng.random(m)
    u_time = rng.random(m)
    u_sdet = rng.random(m)
    u_joint = rng.random(m)
    n_bgs = rng.poisson(b_mean, m)
    tot_bgs = int(n_bgs.sum())
    bg_t = rng.random(tot_bgs) * tau_w
    bg_route = rng.random(tot_bgs)
    u_ret = rng.random(m)
    u_ast = rng.random(m)
    u_asdet = rng.random(m)
    u_xi = rng.random(m)
    u_xi_route = rng.random(m)
    u_xi_t = rng.random(m)
    n_bga = rng.poisson(params.c_bg * params.eta_as, m)
    tot_bga = int(n_bga.sum())
    bga_t = rng.random(tot_bga) * tau_w
    bga_route = rng.random(tot_bga)

    has_exc = u_exc < params.chi
    t_sig = _emission_times(u_time, tau_w, params.envelope)
    sig_det = has_exc & (u_sdet < params.eta_s)
    outcome = np.searchsorted(cum, u_joint, side="right")
    outcome = np.minimum(outcome, 3)
    s_route = (outcome >> 1).astype(np.int8)      # 0 -> S1, 1 -> S2
    as_route = (outcome & 1).astype(np.int8)      # 0 -> AS1, 1 -> AS2

    bg_trial = np.repeat(np.arange(m, dtype=np.int64), n_bgs)
    bg_det = (bg_route >= 0.5).astype(np.int8)

    herald_t = np.full(m, np.inf)
    sig_idx = np.nonzero(sig_det)[0]
    np.minimum.at(herald_t, sig_idx, t_sig[sig_idx])
    np.minimum.at(herald_t, bg_trial, bg_t)
    heralded = np.isfinite(herald_t)

    if mode is TrialMode.SWPE and truncate:
        # The write pulse stops at the heralding click: only the earliest
        # click of a trial survives, and an excitation whose Stokes photon
        # would have been emitted later is never created.
        keep_bg = bg_t <= herald_t[bg_trial]
        bg_trial, bg_t, bg_det = bg_trial[keep_bg], bg_t[keep_bg], bg_det[keep_bg]
        sig_det = sig_det & (t_sig <= herald_t)
        sig_idx = np.nonzero(sig_det)[0]
        exc_eff = has_exc & (~heralded | (t_sig <= herald_t))
    else:
        exc_eff = has_exc

    read_open = heralded if mode is TrialMode.SWPE else np.ones(m, dtype=bool)

    # Retrieved anti-Stokes photon from the stored excitation.
    retrieved = exc_eff & read_open & (u_ret < gamma) \
        & (u_asdet < params.eta_as)
    ret_idx = np.nonzero(retrieved)[0]

    # Imperfect-readout noise: occurs per read pulse at the rate
    # chi*(1-gamma)*xi, independent of this trial's stored excitation, so
    # its coincidences stay at the accidental-product level.
    p_xi = params.chi * (1.0 - gamma) * params.xi * params.eta_as
    xi_click = read_open & (u_xi < p_xi)
    xi_idx = np.nonzero(xi_click)[0]

    bga_trial = np.repeat(np.arange(m, dtype=np.int64), n_bga)
    keep_bga = read_open[bga_trial]
    bga_trial, bga_t, bga_route = (bga_trial[keep_bga], bga_t[keep_bga],
                                   bga_route[keep_bga])

    trials = [sig_idx.astype(np.int64), bg_trial,
              ret_idx.astype(np.int64), xi_idx.astype(np.int64), bga_trial]
    dets = [s_route[sig_idx], bg_det,
            as_route[ret_idx] + np.int8(2),
            (u_xi_route[xi_idx] >= 0.5).astype(np.int8) + np.int8(2),
            (bga_route >= 0.5).astype(np.int8) + np.int8(2)]
    times = [t_sig[sig_idx], bg_t,
             u_ast[ret_idx] * tau_w, u_xi_t[xi_idx] * tau_w, bga_t]
    wins = [np.zeros(len(sig_idx), np.int8), np.zeros(len(bg_trial), np.int8),
            np.ones(len(ret_idx), np.int8), np.ones(len(xi_idx), np.int8),
            np.ones(len(bga_trial), np.int8)]
    return (np.concatenate(trials), np.concatenate(dets),
            np.concatenate(times), np.concatenate(wins))


def run_campaign(params: ExperimentParams, theta_s: float, theta_as: float,
                 mode: TrialMode, n_trials: int, seed: int,
                 partitions: int = 1,
                 truncate_on_herald: bool = True) -> EventLog:
    """Simulate ``n_trials`` trials at one analyzer setting.

    ``partitions`` only controls how blocks are spread over worker threads;
    the resulting log is identical for any partition count.
    """
    if n_trials < 1:
        raise ParameterError(f"n_trials={n_trials!r} must be >= 1")
    if partitions < 1:
        raise ParameterError(f"partitions={partitions!r} must be >= 1")
    gamma = model.retrieval_gamma(params)
    pjoint = np.asarray(model.joint_click_probabilities(
        params.theta_asym, params.v0, theta_s, theta_as))

    n_blocks = math.ceil(n_trials / BLOCK_TRIALS)
    sizes = [min(BLOCK_TRIALS, n_trials - b * BLOCK_TRIALS)
             for b in range(n_blocks)]

    def do_block(b: int):
        tr, de, ti, wi = _simulate_block(
            params, pjoint, gamma, mode, truncate_on_herald, seed, b, sizes[b])
        return tr + b * BLOCK_TRIALS, de, ti, wi

    if partitions == 1 or n_blocks == 1:
        results = [do_block(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=partitions) as pool:
            results = list(pool.map(do_block, range(n_blocks)))

    trial = np.concatenate([r[0] for r in results]) if results else \
        np.empty(0, np.int64)
    det = np.concatenate([r[1] for r in results])
    t_ns = np.concatenate([r[2] for r in results])
    win = np.concatenate([r[3] for r in results])
    return EventLog(params, theta_s, theta_as, mode, seed, n_trials,
                    trial, det, t_ns, win, truncate_on_herald)


def histogram(log: EventLog, detector_class: str,
              bin_ns: float) -> list[tuple[float, int]]:
    """Bin the arrival times of one detector class over its window.

    ``detector_class`` is ``"S"`` (write window) or ``"AS"`` (read window).
    Returns ``(bin start, count)`` pairs covering [0, tau_w].
    """
    if bin_ns <= 0.0:
        raise ParameterError(f"bin_ns={bin_ns!r} must be positive")
    if detector_class not in ("S", "AS"):
        raise ParameterError(
            f"detector_class={detector_class!r} must be 'S' or 'AS'")
    tau_w = log.params.tau_w
    n_bins = max(1, math.ceil(tau_w / bin_ns))
    if detector_class == "S":
        mask = (log.win == 0) & (log.det <= 1)
    else:
        mask = (log.win == 1) & (log.det >= 2)
    idx = np.minimum((log.t_ns[mask] / bin_ns).astype(np.int64), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return [(i * bin_ns, int(counts[i])) for i in range(n_bins)]

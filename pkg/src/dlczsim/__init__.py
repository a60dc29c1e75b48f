"""Monte Carlo simulation and analysis of spin-wave-photon entanglement
experiments with tunable write-pulse duration."""

from .analysis import (CountsTable, EstimateWithError,
                       InsufficientStatisticsError, bell_s, correlation_e,
                       g2_estimate, merge_counts, retrieval_estimate, tally)
from .fitting import (FitError, FitResult, SweepPoint, fit_background_slope,
                      fit_memory_decay, fit_v0, fit_xi,
                      gamma_lookup_from_points)
from .model import (background_b, chsh_s_from_e, correlation_e_analytic,
                    g2_analytic, joint_click_probabilities, prob_antistokes,
                    prob_coincidence, prob_stokes, retrieval_gamma, s_vs_g2)
from .params import AngleSettings, ExperimentParams, ParameterError
from .trialsim import (DetectionEvent, EventLog, TrialMode, histogram,
                       run_campaign)

__version__ = "0.1.0"

__all__ = [
    "AngleSettings", "CountsTable", "DetectionEvent", "EstimateWithError",
    "EventLog", "ExperimentParams", "FitError", "FitResult",
    "InsufficientStatisticsError", "ParameterError", "SweepPoint",
    "TrialMode", "background_b", "bell_s", "chsh_s_from_e", "correlation_e",
    "correlation_e_analytic", "fit_background_slope", "fit_memory_decay",
    "fit_v0", "fit_xi", "g2_analytic", "g2_estimate",
    "gamma_lookup_from_points", "histogram", "joint_click_probabilities",
    "merge_counts", "prob_antistokes", "prob_coincidence", "prob_stokes",
    "retrieval_estimate", "retrieval_gamma", "run_campaign", "s_vs_g2",
    "tally",
]

"""Closed-form detection-probability and correlation model.

These are the analytic counterparts of the Monte Carlo engine in
:mod:`dlczsim.trialsim`: singles and coincidence probabilities per trial,
the cross-correlation g2, polarization-correlation functions of the
two-photon state, and the CHSH Bell parameter.
"""

from __future__ import annotations

import math

from .params import ExperimentParams, ParameterError

TWO_SQRT_TWO = 2.0 * math.sqrt(2.0)


def background_b(tau_w: float, k_bg: float) -> float:
    """Mean Stokes-channel background count per write pulse of length tau_w.

    Linear in the pulse duration; interpreted as a Poisson mean, so it is
    not clamped to 1 for very long pulses.
    """
    if tau_w < 0.0:
        raise ParameterError(f"tau_w={tau_w!r} must be >= 0")
    if k_bg < 0.0:
        raise ParameterError(f"k_bg={k_bg!r} must be >= 0")
    return k_bg * tau_w


def retrieval_gamma(params: ExperimentParams) -> float:
    """Retrieval efficiency after storage and write-pulse decoherence.

    Exponential decay with the memory lifetime; a fraction ``alpha_write``
    of the write duration counts as additional decoherence time accrued
    while the spin wave is created.
    """
    elapsed = params.t_storage + params.alpha_write * params.tau_w
    gamma = params.gamma0 * math.exp(-elapsed / params.tau_mem)
    return min(max(gamma, 0.0), 1.0)


def prob_stokes(params: ExperimentParams) -> float:
    """Probability of a Stokes-channel detection per write pulse."""
    b = background_b(params.tau_w, params.k_bg)
    return (params.chi + b) * params.eta_s


def prob_antistokes(params: ExperimentParams) -> float:
    """Probability of an anti-Stokes-channel detection per read pulse.

    Three contributions: retrieved signal, imperfect-readout noise with
    branching ratio xi, and channel background.
    """
    gamma = retrieval_gamma(params)
    chi = params.chi
    return (chi * gamma + chi * (1.0 - gamma) * params.xi + params.c_bg) * params.eta_as


def prob_coincidence(params: ExperimentParams) -> float:
    """Joint Stokes/anti-Stokes detection probability per trial.

    Correlated-pair term plus the accidental product of the singles.
    """
    gamma = retrieval_gamma(params)
    signal = params.chi * gamma * params.eta_s * params.eta_as
    return signal + prob_stokes(params) * prob_antistokes(params)


def g2_analytic(params: ExperimentParams) -> float:
    """Cross-correlation g2 = P_coincidence / (P_stokes * P_antistokes).

    Evaluated in the algebraically reduced form, which is independent of
    the detection efficiencies.
    """
    chi = params.chi
    b = background_b(params.tau_w, params.k_bg)
    c = params.c_bg
    if chi == 0.0:
        raise ParameterError("g2 is undefined for zero excitation probability")
    gamma = retrieval_gamma(params)
    denom = (b + chi) * gamma + (b + chi) * (1.0 - gamma) * params.xi \
        + c + b * c / chi
    if denom <= 0.0:
        raise ParameterError(
            "g2 is undefined: no noise and no retrieval (denominator is zero)")
    return 1.0 + gamma / denom


def _analyzer(theta_deg: float) -> tuple[float, float]:
    th = math.radians(theta_deg)
    return math.cos(th), math.sin(th)


def joint_click_probabilities(
    theta_asym: float, v0: float, theta_s: float, theta_as: float
) -> tuple[float, float, float, float]:
    """Joint detector probabilities for one detected photon pair.

    Returns ``(p11, p12, p21, p22)`` for the (S1/S2, AS1/AS2) detector
    combinations, conditioned on one photon being detected in each channel.
    The pair state is the partially depolarized state
    ``v0 * |psi><psi| + (1 - v0) * I/4`` with
    ``|psi> = cos(theta_asym)|HH> + sin(theta_asym)|VV>``; detector 1 of a
    channel projects onto ``cos(theta)|H> + sin(theta)|V>`` and detector 2
    onto the orthogonal state.  Angles ``theta_s``/``theta_as`` are in
    degrees, ``theta_asym`` in radians.
    """
    if not 0.0 <= v0 <= 1.0:
        raise ParameterError(f"v0={v0!r} must lie in [0, 1]")
    for name, val in (("theta_asym", theta_asym), ("theta_s", theta_s),
                      ("theta_as", theta_as)):
        if not math.isfinite(val):
            raise ParameterError(f"{name}={val!r} must be finite")
    ca, sa = math.cos(theta_asym), math.sin(theta_asym)
    cs, ss = _analyzer(theta_s)
    cas, sas = _analyzer(theta_as)
    # Analyzer basis vectors (H, V components); index 1 transmits, 2 reflects.
    s_vecs = ((cs, ss), (-ss, cs))
    as_vecs = ((cas, sas), (-sas, cas))
    probs = []
    for sh, sv in s_vecs:
        for ah, av in as_vecs:
            amp = ca * sh * ah + sa * sv * av
            probs.append(v0 * amp * amp + (1.0 - v0) / 4.0)
    return tuple(probs)


def correlation_e_analytic(
    theta_asym: float, v0: float, theta_s: float, theta_as: float
) -> float:
    """Polarization correlation E(theta_s, theta_as) of the pair state.

    Equals p11 - p12 - p21 + p22 of :func:`joint_click_probabilities`;
    closed form ``v0 * (cos 2t_s cos 2t_as + sin 2theta_asym sin 2t_s sin 2t_as)``.
    """
    if not 0.0 <= v0 <= 1.0:
        raise ParameterError(f"v0={v0!r} must lie in [0, 1]")
    ts = math.radians(theta_s)
    tas = math.radians(theta_as)
    return v0 * (
        math.cos(2 * ts) * math.cos(2 * tas)
        + math.sin(2 * theta_asym) * math.sin(2 * ts) * math.sin(2 * tas)
    )


def chsh_s_from_e(e1: float, e2: float, e3: float, e4: float) -> float:
    """CHSH Bell parameter S = |e1 - e2 + e3 + e4|."""
    for e in (e1, e2, e3, e4):
        if abs(e) > 1.0:
            raise ParameterError(f"correlation {e!r} outside [-1, 1]")
    return abs(e1 - e2 + e3 + e4)


def s_vs_g2(g2: float, v0: float) -> float:
    """Predicted Bell parameter from the cross-correlation g2.

    ``S = 2*sqrt(2) * v0 * (g2 - 1) / (g2 + 1)``.
    """
    if g2 < 1.0:
        raise ParameterError(f"g2={g2!r} must be >= 1")
    if not 0.0 <= v0 <= 1.0:
        raise ParameterError(f"v0={v0!r} must lie in [0, 1]")
    if math.isinf(g2):
        return TWO_SQRT_TWO * v0
    return TWO_SQRT_TWO * v0 * (g2 - 1.0) / (g2 + 1.0)

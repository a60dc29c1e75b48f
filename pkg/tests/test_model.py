"""Closed-form model tests.

The correlation functions are checked against an independent brute-force
density-matrix oracle: build the 4x4 two-qubit state explicitly, apply
rank-1 projector tensor products, take traces.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlczsim import model
from dlczsim.params import ExperimentParams, ParameterError

TWO_SQRT_TWO = 2.0 * math.sqrt(2.0)


def make_params(**kw):
    base = dict(chi=0.01, tau_w=100.0, t_storage=0.0, eta_s=0.3, eta_as=0.3,
                gamma0=0.15, tau_mem=50_000.0, alpha_write=0.0, k_bg=0.0,
                c_bg=0.0, xi=0.0)
    base.update(kw)
    return ExperimentParams(**base)


# ---------------------------------------------------------------- oracle

def density_matrix_probs(theta_asym, v0, theta_s, theta_as):
    """Brute-force oracle for the four joint click probabilities."""
    psi = np.zeros(4)
    psi[0] = math.cos(theta_asym)   # |HH>
    psi[3] = math.sin(theta_asym)   # |VV>
    rho = v0 * np.outer(psi, psi) + (1.0 - v0) * np.eye(4) / 4.0

    def analyzer(theta_deg):
        th = math.radians(theta_deg)
        t = np.array([math.cos(th), math.sin(th)])    # transmit port
        r = np.array([-math.sin(th), math.cos(th)])   # reflect port
        return t, r

    s1, s2 = analyzer(theta_s)
    a1, a2 = analyzer(theta_as)
    out = []
    for s in (s1, s2):
        for a in (a1, a2):
            proj = np.kron(np.outer(s, s), np.outer(a, a))
            out.append(float(np.trace(rho @ proj).real))
    return tuple(out)


def density_matrix_e(theta_asym, v0, theta_s, theta_as):
    p11, p12, p21, p22 = density_matrix_probs(theta_asym, v0,
                                              theta_s, theta_as)
    return p11 - p12 - p21 + p22


# ------------------------------------------------------- singles and g2

def test_background_examples():
    assert model.background_b(100.0, 4.84e-5) == pytest.approx(4.84e-3)
    assert model.background_b(0.0, 123.0) == 0.0
    assert model.background_b(200.0, 4.84e-5) == pytest.approx(9.68e-3)


def test_background_rejects_negative():
    with pytest.raises(ParameterError):
        model.background_b(-1.0, 1e-5)
    with pytest.raises(ParameterError):
        model.background_b(1.0, -1e-5)


@given(st.floats(1e-3, 1e5), st.floats(0.0, 1e-3), st.floats(0.1, 10.0))
def test_background_is_linear(tau, k, scale):
    lhs = model.background_b(scale * tau, k)
    rhs = scale * model.background_b(tau, k)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_retrieval_gamma_examples():
    p = make_params(gamma0=0.20, t_storage=0.0, tau_w=1e-9)
    assert model.retrieval_gamma(p) == pytest.approx(0.20, rel=1e-9)
    p = make_params(gamma0=0.20, t_storage=50_000.0, tau_w=1e-9)
    assert model.retrieval_gamma(p) == pytest.approx(0.20 / math.e, rel=1e-9)
    # alpha_write tuned so gamma drops from 0.20 to ~0.15 when the write
    # duration equals the memory lifetime.
    p = make_params(gamma0=0.20, t_storage=1000.0, tau_w=50_000.0,
                    alpha_write=0.28, tau_mem=50_000.0)
    assert model.retrieval_gamma(p) == pytest.approx(0.15, abs=0.005)


def test_retrieval_gamma_clamped():
    p = make_params(gamma0=1.0, t_storage=0.0, tau_w=1e-12, tau_mem=1e12)
    assert model.retrieval_gamma(p) <= 1.0


def test_prob_stokes_examples():
    assert model.prob_stokes(make_params()) == pytest.approx(3.0e-3)
    p = make_params(tau_w=100.0, k_bg=4.84e-5)
    assert model.prob_stokes(p) == pytest.approx(4.452e-3, rel=1e-12)
    assert model.prob_stokes(make_params(chi=0.0)) == 0.0


def test_prob_antistokes_examples():
    p = make_params(gamma0=1.0, xi=0.5)
    assert model.prob_antistokes(p) == pytest.approx(3.0e-3, rel=1e-12)
    p = make_params(gamma0=0.15, xi=0.27, c_bg=1e-4)
    assert model.prob_antistokes(p) == pytest.approx(1.1685e-3, rel=1e-12)
    assert model.prob_antistokes(make_params(chi=0.0)) == 0.0


def test_prob_coincidence_examples():
    p = make_params(gamma0=0.15)
    expect = 1.35e-4 + 3.0e-3 * 4.5e-4
    assert model.prob_coincidence(p) == pytest.approx(expect, rel=1e-12)
    assert model.prob_coincidence(make_params(chi=0.0)) == 0.0
    assert model.prob_coincidence(make_params(gamma0=0.0)) == 0.0


def test_g2_examples():
    p = make_params(gamma0=0.15, xi=0.27, tau_w=100.0, k_bg=1e-5, c_bg=1e-4)
    assert model.g2_analytic(p) == pytest.approx(36.01, abs=0.005)
    p = make_params(gamma0=0.123)
    assert model.g2_analytic(p) == pytest.approx(1.0 + 1.0 / 0.01, rel=1e-12)
    p = make_params(gamma0=0.0, xi=0.27, c_bg=1e-4)
    assert model.g2_analytic(p) == pytest.approx(1.0, rel=1e-12)


def test_g2_degenerate_inputs():
    with pytest.raises(ParameterError):
        model.g2_analytic(make_params(chi=0.0))
    with pytest.raises(ParameterError):
        model.g2_analytic(make_params(gamma0=0.0, xi=0.0, c_bg=0.0))


@settings(max_examples=100, deadline=None)
@given(
    chi=st.floats(1e-4, 0.1),
    gamma0=st.floats(1e-3, 1.0),
    xi=st.floats(0.0, 1.0),
    k_bg=st.floats(0.0, 1e-4),
    c_bg=st.floats(0.0, 1e-2),
    tau_w=st.floats(1.0, 1e5),
    eta_s=st.floats(0.05, 1.0),
    eta_as=st.floats(0.05, 1.0),
)
def test_g2_identity(chi, gamma0, xi, k_bg, c_bg, tau_w, eta_s, eta_as):
    """g2 equals P_coinc / (P_S * P_AS) for any valid parameter set."""
    p = make_params(chi=chi, gamma0=gamma0, xi=xi, k_bg=k_bg, c_bg=c_bg,
                    tau_w=tau_w, eta_s=eta_s, eta_as=eta_as)
    ratio = model.prob_coincidence(p) / (
        model.prob_stokes(p) * model.prob_antistokes(p))
    assert model.g2_analytic(p) == pytest.approx(ratio, rel=1e-12)


def test_g2_independent_of_efficiencies():
    p1 = make_params(gamma0=0.15, xi=0.27, eta_s=0.3, eta_as=0.3)
    p2 = make_params(gamma0=0.15, xi=0.27, eta_s=0.9, eta_as=0.05)
    assert model.g2_analytic(p1) == pytest.approx(model.g2_analytic(p2),
                                                  rel=1e-12)


def test_g2_decreases_with_write_duration():
    g2s = [model.g2_analytic(make_params(gamma0=0.15, xi=0.27, k_bg=1e-5,
                                         tau_w=t))
           for t in (10.0, 100.0, 1000.0, 10_000.0)]
    assert all(a > b for a, b in zip(g2s, g2s[1:]))


# ----------------------------------------------- polarization correlations

def test_joint_probabilities_examples():
    probs = model.joint_click_probabilities(math.pi / 4, 1.0, 0.0, 0.0)
    assert probs == pytest.approx((0.5, 0.0, 0.0, 0.5), abs=1e-15)
    probs = model.joint_click_probabilities(math.pi / 4, 1.0, 0.0, 90.0)
    assert probs == pytest.approx((0.0, 0.5, 0.5, 0.0), abs=1e-15)
    probs = model.joint_click_probabilities(0.81 * math.pi / 4, 1.0,
                                            45.0, 22.5)
    e = probs[0] - probs[1] - probs[2] + probs[3]
    assert e == pytest.approx(0.6759, abs=1e-4)


@settings(max_examples=100, deadline=None)
@given(
    theta_asym=st.floats(0.01, math.pi / 2 - 0.01),
    v0=st.floats(0.0, 1.0),
    theta_s=st.floats(-180.0, 180.0),
    theta_as=st.floats(-180.0, 180.0),
)
def test_joint_probabilities_match_density_matrix(theta_asym, v0,
                                                  theta_s, theta_as):
    ours = model.joint_click_probabilities(theta_asym, v0, theta_s, theta_as)
    oracle = density_matrix_probs(theta_asym, v0, theta_s, theta_as)
    assert ours == pytest.approx(oracle, abs=1e-12)
    assert min(ours) >= 0.0
    assert sum(ours) == pytest.approx(1.0, abs=1e-12)


def test_correlation_examples():
    assert model.correlation_e_analytic(math.pi / 4, 1.0, 0.0, 0.0) \
        == pytest.approx(1.0, abs=1e-15)
    assert model.correlation_e_analytic(math.pi / 4, 1.0, 0.0, 22.5) \
        == pytest.approx(math.cos(math.radians(45.0)), rel=1e-12)
    assert model.correlation_e_analytic(0.81 * math.pi / 4, 1.0, 45.0, 22.5) \
        == pytest.approx(0.6759, abs=1e-4)


def test_correlation_matches_density_matrix_100_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        th = rng.uniform(0.01, math.pi / 2 - 0.01)
        v0 = rng.uniform(0.0, 1.0)
        ts = rng.uniform(-180.0, 180.0)
        tas = rng.uniform(-180.0, 180.0)
        assert model.correlation_e_analytic(th, v0, ts, tas) \
            == pytest.approx(density_matrix_e(th, v0, ts, tas), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(v0=st.floats(0.0, 1.0), theta_s=st.floats(0.0, 180.0),
       theta_as=st.floats(0.0, 180.0))
def test_correlation_linear_in_visibility(v0, theta_s, theta_as):
    full = model.correlation_e_analytic(0.7, 1.0, theta_s, theta_as)
    partial = model.correlation_e_analytic(0.7, v0, theta_s, theta_as)
    assert partial == pytest.approx(v0 * full, abs=1e-12)


def test_symmetric_state_rotation_invariance():
    # At theta_asym = pi/4 the state is rotation invariant: E depends on
    # the analyzer angle difference only.
    for delta in (0.0, 10.0, 22.5, 47.0):
        base = model.correlation_e_analytic(math.pi / 4, 1.0, 0.0, delta)
        for offset in (5.0, 30.0, 111.0):
            rotated = model.correlation_e_analytic(
                math.pi / 4, 1.0, offset, offset + delta)
            assert rotated == pytest.approx(base, abs=1e-12)


def test_chsh_examples():
    s = model.chsh_s_from_e(0.70711, -0.70711, 0.70711, 0.70711)
    assert s == pytest.approx(2.82843, abs=1e-4)
    assert model.chsh_s_from_e(1.0, 1.0, 1.0, 1.0) == 2.0
    assert model.chsh_s_from_e(0.0, 0.0, 0.0, 0.0) == 0.0
    with pytest.raises(ParameterError):
        model.chsh_s_from_e(1.2, 0.0, 0.0, 0.0)


def test_canonical_chsh_reaches_quantum_bound():
    # Symmetric state, canonical angles: S = 2*sqrt(2)*v0 exactly.
    for v0 in (1.0, 0.957, 0.5):
        combos = [(0.0, 22.5), (0.0, 67.5), (45.0, 22.5), (45.0, 67.5)]
        e = [model.correlation_e_analytic(math.pi / 4, v0, ts, tas)
             for ts, tas in combos]
        s = model.chsh_s_from_e(*e)
        assert s == pytest.approx(TWO_SQRT_TWO * v0, rel=1e-12)


def test_s_vs_g2_examples():
    assert model.s_vs_g2(math.inf, 1.0) == pytest.approx(TWO_SQRT_TWO)
    assert model.s_vs_g2(1.0, 0.5) == 0.0
    assert model.s_vs_g2(80.0, 0.957) == pytest.approx(2.640, abs=1e-3)
    assert model.s_vs_g2(11.1, 0.957) == pytest.approx(2.260, abs=1e-3)
    with pytest.raises(ParameterError):
        model.s_vs_g2(0.5, 1.0)
    with pytest.raises(ParameterError):
        model.s_vs_g2(10.0, 1.5)

"""Least-squares fits of the calibration curves.

Four fits: the background slope k (linear through the origin), the memory
decay (gamma0, tau_mem) (damped Gauss-Newton), the readout-noise branching
ratio xi (bracketed 1-D minimization of the g2 model), and the visibility
v0 (closed-form regression of S against its g2 basis function).

Fits are weighted by 1/sigma_y**2 when point uncertainties are given and
unweighted otherwise.  Parameter uncertainties come from the weight matrix
in the weighted case; unweighted fits scale the covariance by the residual
variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import model
from .params import ParameterError

MAX_ITERATIONS = 200
GRADIENT_RTOL = 1e-10
XI_TOL = 1e-6


class FitError(ValueError):
    """Fit input is degenerate or empty."""


@dataclass(frozen=True)
class SweepPoint:
    x: float                 # tau_w or storage time, ns
    y: float                 # B, gamma, g2 or S
    sigma_y: float | None = None

    def __post_init__(self):
        if self.x < 0.0:
            raise ParameterError(f"x={self.x!r} must be >= 0")
        if self.sigma_y is not None and self.sigma_y <= 0.0:
            raise ParameterError(f"sigma_y={self.sigma_y!r} must be > 0")


@dataclass(frozen=True)
class FitResult:
    names: tuple[str, ...]
    values: tuple[float, ...]
    sigmas: tuple[float, ...]
    rss: float
    iterations: int
    converged: bool
    at_bound: bool = False

    def __getitem__(self, name: str) -> float:
        return self.values[self.names.index(name)]

    def sigma(self, name: str) -> float:
        return self.sigmas[self.names.index(name)]


def _unpack(points: Sequence[SweepPoint]):
    x = np.array([p.x for p in points], dtype=float)
    y = np.array([p.y for p in points], dtype=float)
    sigmas = [p.sigma_y for p in points]
    if all(s is not None for s in sigmas):
        w = 1.0 / np.array(sigmas, dtype=float) ** 2
        weighted = True
    else:
        w = np.ones_like(x)
        weighted = False
    return x, y, w, weighted


def gamma_lookup_from_points(points: Sequence[SweepPoint]) -> Callable:
    """Linear-interpolation retrieval-efficiency curve gamma(tau_w)."""
    if len(points) < 1:
        raise FitError("need at least one (tau_w, gamma) point")
    pts = sorted(points, key=lambda p: p.x)
    xs = np.array([p.x for p in pts])
    ys = np.array([p.y for p in pts])
    return lambda tau: float(np.interp(tau, xs, ys))


def fit_background_slope(points: Sequence[SweepPoint]) -> FitResult:
    """Weighted least squares of B = k * tau_w through the origin."""
    if len(points) < 1:
        raise FitError("need at least one point")
    x, y, w, weighted = _unpack(points)
    sxx = float(np.sum(w * x * x))
    if sxx == 0.0:
        raise FitError("all abscissae are zero; slope is unidentifiable")
    k = float(np.sum(w * x * y)) / sxx
    resid = y - k * x
    rss = float(np.sum(w * resid**2))
    if weighted:
        sigma_k = math.sqrt(1.0 / sxx)
    elif len(points) > 1:
        sigma_k = math.sqrt(rss / (len(points) - 1) / sxx)
    else:
        sigma_k = 0.0
    return FitResult(("k",), (k,), (sigma_k,), rss, 0, True)


def fit_memory_decay(points: Sequence[SweepPoint]) -> FitResult:
    """Fit gamma(t) = gamma0 * exp(-t / tau_mem) by damped Gauss-Newton."""
    if len(points) < 3:
        raise FitError("need at least three points to fit two parameters")
    x, y, w, weighted = _unpack(points)
    if np.any(y <= 0.0):
        raise ParameterError("retrieval efficiencies must be positive")

    # Log-linear start: log y = log gamma0 - t / tau_mem.
    coef = np.polyfit(x, np.log(y), 1)
    tau0 = -1.0 / coef[0] if coef[0] < 0.0 else (x.max() - x.min() + 1.0)
    theta = np.array([math.exp(coef[1]), tau0])

    def residuals(th):
        g0, tau = th
        pred = g0 * np.exp(-x / tau)
        return pred - y, pred

    def jac(th, pred):
        g0, tau = th
        e = pred / g0
        return np.column_stack([e, pred * x / tau**2])

    r, pred = residuals(theta)
    rss = float(np.sum(w * r**2))
    converged = False
    it = 0
    for it in range(1, MAX_ITERATIONS + 1):
        j = jac(theta, pred)
        grad = j.T @ (w * r)
        scale = max(1.0, float(np.sum(w * y**2)))
        if np.linalg.norm(grad) < GRADIENT_RTOL * scale:
            converged = True
            break
        jtj = j.T @ (w[:, None] * j)
        try:
            step = np.linalg.solve(jtj, -grad)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        improved = False
        for _ in range(30):
            cand = theta + lam * step
            if cand[0] > 0.0 and cand[1] > 0.0:
                r_new, pred_new = residuals(cand)
                rss_new = float(np.sum(w * r_new**2))
                if rss_new <= rss:
                    theta, r, pred, rss = cand, r_new, pred_new, rss_new
                    improved = True
                    break
            lam *= 0.5
        if not improved:
            converged = np.linalg.norm(grad) < 1e-8 * scale
            break
    else:
        it = MAX_ITERATIONS

    j = jac(theta, pred)
    jtj = j.T @ (w[:, None] * j)
    try:
        cov = np.linalg.inv(jtj)
        if not weighted and len(points) > 2:
            cov = cov * rss / (len(points) - 2)
        sig = tuple(math.sqrt(max(0.0, cov[i, i])) for i in range(2))
    except np.linalg.LinAlgError:
        sig = (math.inf, math.inf)
    return FitResult(("gamma0", "tau_mem"), tuple(theta), sig, rss, it,
                     converged)


def _g2_of_tau(tau, xi, gamma_of_tau, chi, k_bg, c_bg):
    gamma = gamma_of_tau(tau)
    b = k_bg * tau
    denom = (b + chi) * gamma + (b + chi) * (1.0 - gamma) * xi \
        + c_bg + b * c_bg / chi
    return 1.0 + gamma / denom


def fit_xi(points: Sequence[SweepPoint], gamma_of_tau: Callable,
           chi: float, k_bg: float, c_bg: float) -> FitResult:
    """Fit the readout-noise branching ratio xi in [0, 1].

    1-D weighted least squares of the g2(tau_w) model by golden-section
    search to an absolute tolerance of 1e-6.
    """
    if len(points) < 1:
        raise FitError("need at least one (tau_w, g2) point")
    if chi <= 0.0:
        raise ParameterError(f"chi={chi!r} must be positive")
    x, y, w, weighted = _unpack(points)

    def sse(xi):
        pred = np.array([_g2_of_tau(t, xi, gamma_of_tau, chi, k_bg, c_bg)
                         for t in x])
        return float(np.sum(w * (pred - y) ** 2))

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, 1.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = sse(c), sse(d)
    it = 0
    while b - a > XI_TOL:
        it += 1
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = sse(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = sse(d)
    xi_hat = 0.5 * (a + b)
    rss = sse(xi_hat)
    at_bound = xi_hat < 10 * XI_TOL or xi_hat > 1.0 - 10 * XI_TOL
    if at_bound:
        xi_hat = 0.0 if xi_hat < 0.5 else 1.0
        rss = sse(xi_hat)

    # Curvature-based uncertainty from the model derivative in xi.
    eps = 1e-6
    xi_lo = max(0.0, xi_hat - eps)
    xi_hi = min(1.0, xi_hat + eps)
    dpred = np.array([
        (_g2_of_tau(t, xi_hi, gamma_of_tau, chi, k_bg, c_bg)
         - _g2_of_tau(t, xi_lo, gamma_of_tau, chi, k_bg, c_bg))
        / (xi_hi - xi_lo) for t in x])
    jtj = float(np.sum(w * dpred**2))
    if jtj > 0.0:
        var = 1.0 / jtj
        if not weighted and len(points) > 1:
            var *= rss / (len(points) - 1)
        sigma = math.sqrt(var)
    else:
        sigma = math.inf
    return FitResult(("xi",), (xi_hat,), (sigma,), rss, it, True, at_bound)


def fit_v0(points: Sequence[SweepPoint]) -> FitResult:
    """Closed-form fit of S against the basis 2*sqrt(2)*(g2-1)/(g2+1).

    Points carry x = g2 and y = S.  The estimate is clamped to [0, 1].
    """
    if len(points) < 1:
        raise FitError("need at least one (g2, S) pair")
    for p in points:
        if p.x < 1.0:
            raise ParameterError(f"g2={p.x!r} must be >= 1")
    x, y, w, weighted = _unpack(points)
    basis = model.TWO_SQRT_TWO * (x - 1.0) / (x + 1.0)
    sbb = float(np.sum(w * basis**2))
    if sbb == 0.0:
        raise FitError("all g2 equal 1; visibility is unidentifiable")
    v = float(np.sum(w * y * basis)) / sbb
    at_bound = v < 0.0 or v > 1.0
    v = min(max(v, 0.0), 1.0)
    resid = y - v * basis
    rss = float(np.sum(w * resid**2))
    if weighted:
        sigma = math.sqrt(1.0 / sbb)
    elif len(points) > 1:
        sigma = math.sqrt(rss / (len(points) - 1) / sbb)
    else:
        sigma = 0.0
    return FitResult(("v0",), (v,), (sigma,), rss, 0, True, at_bound)

"""Experiment parameter containers and validation.

All durations are in nanoseconds, all probabilities and efficiencies are
dimensionless.  The defaults correspond to the operating point of the
experiment this simulator models: ~1% excitation probability, 30% channel
efficiencies, a 50 us memory lifetime and a 20% intrinsic retrieval
efficiency.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields

ENVELOPES = ("rectangular", "raised-cosine")

# Fraction of the write-pulse duration that counts as extra decoherence time
# while the spin wave is being created.  ln(4/3) reproduces a drop of the
# retrieval efficiency from 0.20 at negligible write duration to 0.15 at a
# write duration equal to the memory lifetime.
DEFAULT_ALPHA_WRITE = math.log(4.0 / 3.0)


class ParameterError(ValueError):
    """An experiment parameter is outside its allowed range."""


@dataclass(frozen=True)
class ExperimentParams:
    """Effective physical parameters of one simulated configuration."""

    chi: float = 0.01            # excitation probability per write pulse
    tau_w: float = 100.0         # write-pulse duration [ns]
    t_storage: float = 1000.0    # herald-to-read storage time [ns]
    eta_s: float = 0.3           # Stokes channel detection efficiency
    eta_as: float = 0.3          # anti-Stokes channel detection efficiency
    gamma0: float = 0.20         # intrinsic retrieval efficiency
    tau_mem: float = 50_000.0    # memory 1/e lifetime [ns]
    alpha_write: float = DEFAULT_ALPHA_WRITE
    k_bg: float = 4.84e-5        # Stokes background slope [counts/ns per pulse]
    c_bg: float = 0.0            # anti-Stokes background mean per read pulse
    xi: float = 0.27             # branching ratio of imperfect-readout noise
    theta_asym: float = 0.81 * math.pi / 4.0   # state asymmetry angle [rad]
    v0: float = 0.957            # depolarizing visibility
    envelope: str = "rectangular"

    def __post_init__(self):
        for name in ("chi", "eta_s", "eta_as", "gamma0", "xi", "v0"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ParameterError(f"{name}={val!r} must lie in [0, 1]")
        if self.tau_w <= 0.0:
            raise ParameterError(f"tau_w={self.tau_w!r} must be positive")
        if self.tau_mem <= 0.0:
            raise ParameterError(f"tau_mem={self.tau_mem!r} must be positive")
        if self.t_storage < 0.0:
            raise ParameterError(f"t_storage={self.t_storage!r} must be >= 0")
        if self.k_bg < 0.0:
            raise ParameterError(f"k_bg={self.k_bg!r} must be >= 0")
        if self.c_bg < 0.0:
            raise ParameterError(f"c_bg={self.c_bg!r} must be >= 0")
        if not 0.0 <= self.alpha_write <= 1.0:
            raise ParameterError(
                f"alpha_write={self.alpha_write!r} must lie in [0, 1]")
        if not 0.0 < self.theta_asym < math.pi / 2.0:
            raise ParameterError(
                f"theta_asym={self.theta_asym!r} must lie in (0, pi/2)")
        if self.envelope not in ENVELOPES:
            raise ParameterError(
                f"envelope={self.envelope!r} must be one of {ENVELOPES}")
        if self.chi > 0.1:
            warnings.warn(
                f"chi={self.chi:g} exceeds 0.1; the detection-probability "
                "model is first order in chi and loses accuracy here",
                stacklevel=2,
            )

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class AngleSettings:
    """Polarization analysis angles, in degrees.

    Defaults are the canonical CHSH settings.
    """

    theta_s: float = 0.0
    theta_s_prime: float = 45.0
    theta_as: float = 22.5
    theta_as_prime: float = 67.5

    def __post_init__(self):
        for name in ("theta_s", "theta_s_prime", "theta_as", "theta_as_prime"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise ParameterError(f"{name}={val!r} must be finite")

    def chsh_combinations(self) -> list[tuple[float, float]]:
        """The four (theta_s, theta_as) pairs entering the S combination.

        Ordered so that S = |E1 - E2 + E3 + E4|.
        """
        return [
            (self.theta_s, self.theta_as),
            (self.theta_s, self.theta_as_prime),
            (self.theta_s_prime, self.theta_as),
            (self.theta_s_prime, self.theta_as_prime),
        ]

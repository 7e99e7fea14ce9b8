"""Wave-pinning reaction kinetics, external stimulus, and parameter scaling.

All functions here are pure and operate on scalars or numpy arrays alike.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

# Documented plausible ranges for the rescaled parameters; used for
# warnings only, never errors.
_PARAM_RANGES = {
    "D_u": (0.1, 0.5),
    "D_v": (10.0, 50.0),
    "K": (100.0, 500.0),
    "chi": (0.1, 0.3),
    "u_star": (0.2, 0.45),
    "M": (6.0, 8.0),
}


@dataclass(frozen=True)
class Params:
    """Rescaled model parameters."""

    D_u: float
    D_v: float
    K: float
    C: float
    chi: float
    u_star: float
    M: float

    def __post_init__(self):
        for name in ("D_u", "D_v", "K", "C", "chi", "u_star", "M"):
            if getattr(self, name) <= 0:
                raise ValueError(f"parameter {name} must be positive")
        if not (0.0 < self.C <= 1.0):
            raise ValueError("C must lie in (0, 1]")

    def warn_if_unusual(self):
        for name, (lo, hi) in _PARAM_RANGES.items():
            val = getattr(self, name)
            if not (lo <= val <= hi):
                warnings.warn(
                    f"{name}={val} outside the documented range [{lo}, {hi}]",
                    stacklevel=2,
                )


@dataclass(frozen=True)
class DimensionalParams:
    """Physical parameters before rescaling.

    Units: diffusivities um^2/s, alpha/beta pN/um, tau pN s/um^2, gamma pN,
    k 1/s, c concentration, V0 um/s, R um, N_tot concentration*area.
    """

    D_u: float
    D_v: float
    alpha: float
    beta: float
    tau: float
    gamma: float
    k: float
    c: float
    C: float
    V0: float
    R: float
    N_tot: float

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if getattr(self, name) <= 0:
                raise ValueError(f"parameter {name} must be positive")


def nondimensionalize(dp: DimensionalParams, warn: bool = True) -> Params:
    """Rescale by the typical speed V0 and radius R.

    D -> D/(V0 R), K = k R c^2 / V0, chi = gamma/(V0 tau R),
    u* = beta/(c alpha), M = N_tot/(c R^2).
    """
    p = Params(
        D_u=dp.D_u / (dp.V0 * dp.R),
        D_v=dp.D_v / (dp.V0 * dp.R),
        K=dp.k * dp.R * dp.c**2 / dp.V0,
        C=dp.C,
        chi=dp.gamma / (dp.V0 * dp.tau * dp.R),
        u_star=dp.beta / (dp.c * dp.alpha),
        M=dp.N_tot / (dp.c * dp.R**2),
    )
    if warn:
        p.warn_if_unusual()
    return p


def reaction_f(u, v, K: float, C: float):
    """Bistable interconversion rate -K u (u - 0.5)(u - C v)."""
    return -K * u * (u - 0.5) * (u - C * v)


@dataclass(frozen=True)
class StimulusConfig:
    """Two time-gated spatially graded stimulus pulses.

    The first pulse is strong toward small (x, y) during window1, the
    second toward large (x, y) during window2; each holds a plateau for the
    first half of its window and ramps linearly to zero over the second.
    """

    amplitude: float = 0.07
    window1: tuple[float, float] = (0.0, 1.0)
    window2: tuple[float, float] = (10.0, 11.0)
    enabled: bool = True

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("stimulus amplitude must be nonnegative")
        if self.window1[1] > self.window2[0]:
            raise ValueError("stimulus windows must be disjoint")


def _pulse(t, t0, t1, amplitude):
    """Plateau on [t0, mid], linear ramp to zero on (mid, t1]."""
    mid = 0.5 * (t0 + t1)
    if t < t0 or t > t1:
        return 0.0
    if t <= mid:
        return amplitude
    return amplitude * (1.0 - (t - mid) / (t1 - mid))


def stimulus(x, y, t: float, cfg: StimulusConfig):
    """Stimulus rate coefficient S(x, y, t); multiplies v in the kinetics."""
    if not cfg.enabled:
        return np.zeros_like(np.asarray(x, dtype=float))
    t0, t1 = cfg.window1
    if t0 <= t <= t1:
        s = _pulse(t, t0, t1, cfg.amplitude)
        return s * (1.3 - np.asarray(y, dtype=float)) * (0.7 - np.asarray(x, dtype=float))
    t0, t1 = cfg.window2
    if t0 <= t <= t1:
        s = _pulse(t, t0, t1, cfg.amplitude)
        return s * (np.asarray(y, dtype=float) + 1.3) * (np.asarray(x, dtype=float) + 0.7)
    return np.zeros_like(np.asarray(x, dtype=float))

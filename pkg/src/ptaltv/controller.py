"""Prescribed-time state feedback for the fourth-order SISO example and its
state-triggered switching variant.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import DimensionError, ParameterError, SingularityDomainError

# Controllable canonical plant with open-loop poles in the right half-plane.
EXAMPLE_F = np.array([
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [10.0, 20.0, 30.0, 40.0],
])
EXAMPLE_G = np.array([[0.0], [0.0], [0.0], [1.0]])


@dataclass(frozen=True)
class PtGainParams:
    tau: float
    alpha: float

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ParameterError(f"tau must be positive, got {self.tau!r}")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterError(f"alpha must be positive, got {self.alpha!r}")

    def coefficients(self) -> np.ndarray:
        """Numerators of the four gain entries; entry j is divided by (tau - t)**(4 - j)."""
        a = self.alpha
        return np.array([
            -1.0 / a**4,
            -4.0 / a**3 + 6.0 / a**2 - 4.0 / a + 1.0,
            -6.0 / a**2 + 12.0 / a - 7.0,
            -4.0 / a + 6.0,
        ])


def pt_gain(t: float, params: PtGainParams) -> np.ndarray:
    """Time-varying prescribed-time gain K(t, tau) as a 1x4 row.

    The entries scale as (tau - t)^-4, ^-3, ^-2 and ^-1.

    Raises
    ------
    SingularityDomainError
        If ``t >= tau``.
    """
    d = params.tau - t
    if not d > 0:
        raise SingularityDomainError(
            f"prescribed-time gain is singular at t={t!r} >= tau={params.tau!r}")
    c = params.coefficients()
    return np.array([[c[0] / d**4, c[1] / d**3, c[2] / d**2, c[3] / d]])


@dataclass(frozen=True)
class SwitchState:
    """Latch for the switching controller.

    Once latched, ``t_s`` and ``frozen_gain`` are fixed and the latch never
    releases.
    """

    sigma: float
    latched: bool = False
    t_s: Optional[float] = None
    frozen_gain: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ParameterError(f"sigma must be positive, got {self.sigma!r}")
        if self.latched != (self.t_s is not None) or self.latched != (self.frozen_gain is not None):
            raise ValueError("latched, t_s and frozen_gain must be set together")


def switching_gain(t: float, x_norm: float, params: PtGainParams,
                   state: SwitchState) -> tuple[np.ndarray, SwitchState]:
    """Gain of the switching controller and the (possibly latched) next state.

    While ``x_norm > sigma`` the time-varying gain is used. At the first call
    with ``x_norm <= sigma`` the gain at that instant is frozen and used for
    every later call, whatever the norm does afterwards.
    """
    if state.latched:
        return state.frozen_gain, state
    k = pt_gain(t, params)
    if x_norm > state.sigma:
        return k, state
    k.setflags(write=False)
    return k, replace(state, latched=True, t_s=float(t), frozen_gain=k)


def control_input(k, x) -> float:
    """Scalar input u = K x for a 1xn gain row."""
    k = np.asarray(k, dtype=float)
    x = np.asarray(x, dtype=float).reshape(-1)
    if k.ndim == 1:
        k = k[None, :]
    if k.shape != (1, x.size):
        raise DimensionError(f"gain shape {k.shape} does not match state length {x.size}")
    return float(k[0] @ x)

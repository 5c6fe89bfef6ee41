"""Adaptive Runge-Kutta integration of LTV systems and the switched closed loop.

The stepper is the Dormand-Prince 5(4) pair with FSAL and a PI step-size
controller. Singular systems are never sampled past ``tau - terminal_gap``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .controller import PtGainParams, SwitchState, control_input, pt_gain, switching_gain
from .errors import DimensionError, NoSwitchError, PreconditionError, SingularityDomainError, StiffnessError
from .systems import LtiPlant, LtvSystem, constant_system, eval_A, make_closed_loop

# Dormand & Prince (1980) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between 5th and embedded 4th order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0
_PI_ALPHA = 0.7 / 5
_PI_BETA = 0.4 / 5


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    min_step: float = 1e-12
    terminal_gap: Optional[float] = None  # default 1e-6 * tau
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise PreconditionError("tolerances must be positive")
        if not 0 < self.min_step < self.max_step:
            raise PreconditionError("need 0 < min_step < max_step")
        if self.terminal_gap is not None and not self.terminal_gap > 0:
            raise PreconditionError("terminal_gap must be positive")

    def gap(self, tau: float) -> float:
        return self.terminal_gap if self.terminal_gap is not None else 1e-6 * tau


@dataclass
class Trajectory:
    """Accepted steps of an integration run."""

    times: np.ndarray
    states: np.ndarray
    inputs: Optional[np.ndarray] = None
    gains: Optional[np.ndarray] = None
    latched: Optional[np.ndarray] = None
    switch_event: Optional[tuple[float, np.ndarray]] = None
    accepted: int = 0
    rejected: int = 0
    norms: np.ndarray = field(init=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float).reshape(len(self.times), -1)
        self.norms = np.linalg.norm(self.states, axis=1)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def t_s(self) -> Optional[float]:
        return None if self.switch_event is None else self.switch_event[0]

    def at(self, t: float) -> np.ndarray:
        """State at a recorded time (exact match required)."""
        i = int(np.searchsorted(self.times, t))
        if i >= len(self.times) or self.times[i] != t:
            raise KeyError(f"time {t!r} was not a recorded step")
        return self.states[i]


def _initial_step(f, t, y, f0, direction_span, rtol, atol):
    sc = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / sc) ** 2))
    d1 = np.sqrt(np.mean((f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    y1 = y + h0 * f0
    f1 = f(t + h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, direction_span)


def _rk_step(f, t, y, h, k1):
    """One Dormand-Prince step; returns (y_new, error_vector, f(t+h, y_new))."""
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks) if a != 0.0)
        ks.append(f(t + _C[i] * h, yi))
    # stage 7 is evaluated at y_new (FSAL)
    y_new = y + h * sum(b * k for b, k in zip(_B, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
    return y_new, err, ks[6]


def _err_norm(err, y, y_new, rtol, atol):
    sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.max(np.abs(err) / sc))


@dataclass
class _Run:
    times: list
    states: list
    accepted: int = 0
    rejected: int = 0

    def trajectory(self) -> Trajectory:
        return Trajectory(np.array(self.times), np.array(self.states),
                          accepted=self.accepted, rejected=self.rejected)


def _drive(f, t0, y0, t_end, cfg: IntegratorConfig, stops=(), event=None, run=None):
    """Core adaptive loop.

    ``event(y)`` returns True when the crossing condition holds at ``y``; the
    loop then bisects the crossing step and stops there, returning the
    crossing time. Returns (run, t_event or None).
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    if run is None:
        run = _Run([t], [y.copy()])
    stops = sorted(s for s in stops if t0 < s < t_end) + [t_end]
    si = 0
    k1 = f(t, y)
    span = t_end - t
    h = min(_initial_step(f, t, y, k1, span, cfg.rel_tol, cfg.abs_tol), cfg.max_step)
    h = max(h, cfg.min_step)
    prev_err = 1.0
    steps = 0
    while t < t_end:
        target = stops[si]
        last = False
        h_free = h
        if t + h >= target or target - (t + h) < cfg.min_step:
            h = target - t
            last = True
        y_new, err, k_new = _rk_step(f, t, y, h, k1)
        en = _err_norm(err, y, y_new, cfg.rel_tol, cfg.abs_tol)
        steps += 1
        if steps > cfg.max_steps:
            raise StiffnessError(f"step budget {cfg.max_steps} exhausted at t={t!r}",
                                 trajectory=run.trajectory())
        if not np.all(np.isfinite(y_new)):
            en = math.inf
        if en <= 1.0:
            if event is not None and event(y_new):
                t_ev, y_ev = _bisect_crossing(f, t, y, h, k1, event)
                run.accepted += 1
                run.times.append(t_ev)
                run.states.append(y_ev)
                return run, t_ev
            t_next = target if last else t + h
            run.accepted += 1
            run.times.append(t_next)
            run.states.append(y_new.copy())
            t, y, k1 = t_next, y_new, k_new
            if last:
                si += 1
                if si == len(stops):
                    break
            fac = _SAFETY * max(en, 1e-10) ** -_PI_ALPHA * prev_err ** _PI_BETA
            prev_err = max(en, 1e-4)
            # a step clipped onto a stop should not shrink the next one
            h = max(h, h_free) if last else h
            h = h * min(_FAC_MAX, max(_FAC_MIN, fac))
        else:
            run.rejected += 1
            fac = _SAFETY * en ** -(1 / 5) if math.isfinite(en) else _FAC_MIN
            h = h * max(_FAC_MIN, min(1.0, fac))
        h = min(h, cfg.max_step)
        if h < cfg.min_step:
            raise StiffnessError(f"step size {h:.3e} below min_step at t={t!r}",
                                 trajectory=run.trajectory())
    return run, None


def _bisect_crossing(f, t, y, h, k1, event, t_tol=None, max_iter=200):
    """Locate the first point in (t, t+h] where ``event`` becomes true.

    Partial steps restart from (t, y) so every trial state carries the
    full-step accuracy of the pair.
    """
    lo, hi = 0.0, h
    y_hi = None
    tol = t_tol if t_tol is not None else 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        y_mid, _, _ = _rk_step(f, t, y, mid, k1)
        if event(y_mid):
            hi, y_hi = mid, y_mid
        else:
            lo = mid
        if hi - lo <= tol:
            break
    if y_hi is None:
        y_hi, _, _ = _rk_step(f, t, y, hi, k1)
    return t + hi, y_hi


def _check_x0(sys_dim, x0):
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.size != sys_dim:
        raise DimensionError(f"initial state has length {x.size}, system dimension is {sys_dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("initial state must be finite")
    return x


def integrate(sys: LtvSystem, x0, t0: float, t_end: float,
              cfg: Optional[IntegratorConfig] = None, *,
              stops: Sequence[float] = ()) -> Trajectory:
    """Integrate x' = A(t) x from ``t0`` to ``t_end``.

    Every accepted step is recorded. Times in ``stops`` are hit exactly.

    Raises
    ------
    SingularityDomainError
        ``t_end`` is closer to tau than the terminal gap on a singular system.
    StiffnessError
        Step size underflow; carries the partial trajectory.
    """
    cfg = cfg or IntegratorConfig()
    if not t0 < t_end:
        raise PreconditionError(f"need t0 < t_end, got {t0!r}, {t_end!r}")
    if sys.singular and t_end > sys.tau - cfg.gap(sys.tau):
        raise SingularityDomainError(
            f"t_end={t_end!r} violates terminal gap {cfg.gap(sys.tau):g} before tau={sys.tau!r}")
    x = _check_x0(sys.dim, x0)

    def f(t, y):
        return eval_A(sys, t) @ y

    run, _ = _drive(f, t0, x, t_end, cfg, stops=stops)
    return run.trajectory()


def simulate_switched(plant: LtiPlant, x0, params: PtGainParams, sigma: float,
                      cfg: Optional[IntegratorConfig] = None, *, t0: float = 0.0,
                      t_end: Optional[float] = None,
                      stops: Sequence[float] = ()) -> Trajectory:
    """Closed loop under the switching prescribed-time controller.

    The time-varying gain drives the plant until the state 2-norm first
    reaches ``sigma``; the gain at that instant is then frozen and the
    resulting LTI loop is integrated to ``t_end`` (default ``2 tau``).

    Raises
    ------
    NoSwitchError
        The norm stays above ``sigma`` up to ``tau - terminal_gap``.
    """
    cfg = cfg or IntegratorConfig()
    if plant.n != 4 or plant.m != 1:
        raise DimensionError("switching controller requires a 4-state single-input plant")
    tau = params.tau
    t_end = 2 * tau if t_end is None else float(t_end)
    x = _check_x0(4, x0)
    state = SwitchState(sigma)
    sigma = state.sigma

    def record(run_times, run_states, latch_state, start=0):
        gains, inputs, flags = [], [], []
        for t, y in zip(run_times[start:], run_states[start:]):
            if latch_state.latched:
                k = latch_state.frozen_gain
            else:
                k = pt_gain(t, params)
            gains.append(k[0])
            inputs.append(control_input(k, y))
            flags.append(latch_state.latched)
        return gains, inputs, flags

    gains: list = []
    inputs: list = []
    flags: list = []
    run = _Run([t0], [x.copy()])

    if np.linalg.norm(x) > sigma:
        t_stop = tau - cfg.gap(tau)
        if not t0 < t_stop:
            raise SingularityDomainError("t0 lies inside the terminal gap")
        loop = make_closed_loop(plant, lambda t: pt_gain(t, params), tau)

        def f(t, y):
            return eval_A(loop, t) @ y

        run, t_ev = _drive(f, t0, x, t_stop, cfg,
                           stops=[s for s in stops if s < t_stop],
                           event=lambda y: np.linalg.norm(y) <= sigma, run=run)
        g, u, fl = record(run.times[:-1], run.states[:-1], state)
        gains += g
        inputs += u
        flags += fl
        if t_ev is None:
            k_last = pt_gain(run.times[-1], params)
            gains.append(k_last[0])
            inputs.append(control_input(k_last, run.states[-1]))
            flags.append(False)
            traj = _assemble(run, gains, inputs, flags, None)
            raise NoSwitchError(
                f"||x|| = {np.linalg.norm(run.states[-1]):.3e} > sigma = {sigma:g} "
                f"at t = {run.times[-1]!r}; no switch before the terminal gap",
                trajectory=traj)
        t_s, x_s = run.times[-1], run.states[-1]
    else:
        t_s, x_s = t0, x

    k_s, state = switching_gain(t_s, float(np.linalg.norm(x_s)), params, state)
    assert state.latched
    gains.append(k_s[0])
    inputs.append(control_input(k_s, x_s))
    flags.append(True)

    if t_s < t_end:
        frozen = constant_system(plant.F + plant.G @ k_s, tau=tau, name="frozen")

        def f2(t, y):
            return frozen.evaluator(t) @ y

        n_before = len(run.times)
        run, _ = _drive(f2, t_s, x_s, t_end, cfg, stops=[s for s in stops if s > t_s], run=run)
        for t, y in zip(run.times[n_before:], run.states[n_before:]):
            k, state = switching_gain(t, float(np.linalg.norm(y)), params, state)
            gains.append(k[0])
            inputs.append(control_input(k, y))
            flags.append(True)
    return _assemble(run, gains, inputs, flags, (t_s, k_s.copy()))


def _assemble(run: _Run, gains, inputs, flags, event) -> Trajectory:
    tr = run.trajectory()
    tr.gains = np.array(gains)
    tr.inputs = np.array(inputs)
    tr.latched = np.array(flags, dtype=bool)
    tr.switch_event = event
    return tr

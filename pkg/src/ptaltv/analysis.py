"""Numerical attractivity tests for LTV systems.

Limit statements about t -> tau^- are checked along finite schedules of
distances to tau. A passing verdict is numerical evidence; an inconclusive
verdict never claims the opposite property.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import PreconditionError, QuadratureError, StepSizeError
from .linalg import eig, induced_norm, log_norm, parse_p, require_symmetric, sym_part
from .systems import LtvSystem, eval_A

DEFAULT_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4)


class DegenerateWindowWarning(RuntimeWarning):
    """The frozen spectrum only turns Hurwitz within refine_tol of tau, or not at all."""


@dataclass
class Verdict:
    name: str
    verdict: str
    evidence: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.verdict in ("holds", "diverging", "passes")


# -- quadrature ----------------------------------------------------------------

def _simpson(fa, fm, fb, w):
    return w * (fa + 4.0 * fm + fb) / 6.0


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, *, n_panels: int = 16,
                     rel_tol: float = 1e-4, abs_tol: float = 1e-6,
                     max_evals: int = 400_000) -> float:
    """Globally adaptive composite Simpson rule.

    Panels whose halved-vs-whole Simpson difference exceeds their share of
    the tolerance are bisected. Refinement stops once two successive
    composite estimates differ by less than max(abs_tol, rel_tol*|I|) and
    the summed error indicator is below the same bound.
    """
    if not b > a:
        if b == a:
            return 0.0
        raise PreconditionError(f"need a < b, got {a!r}, {b!r}")
    edges = np.linspace(a, b, 2 * n_panels + 1)
    fv = [f(x) for x in edges]
    evals = len(fv)
    # each panel: [a, b, fa, fm, fb]; quarter points evaluated lazily
    panels = [(edges[2 * i], edges[2 * i + 2], fv[2 * i], fv[2 * i + 1], fv[2 * i + 2])
              for i in range(n_panels)]

    def expand(p):
        pa, pb, fa, fm, fb = p
        w = pb - pa
        fl = f(pa + 0.25 * w)
        fr = f(pa + 0.75 * w)
        whole = _simpson(fa, fm, fb, w)
        fine = _simpson(fa, fl, fm, 0.5 * w) + _simpson(fm, fr, fb, 0.5 * w)
        # Richardson-corrected estimate and its error indicator
        return [pa, pb, fa, fl, fm, fr, fb, fine + (fine - whole) / 15.0, abs(fine - whole) / 15.0]

    live = [expand(p) for p in panels]
    evals += 2 * len(live)
    total_w = b - a
    prev = None
    while True:
        est = math.fsum(p[7] for p in live)
        err = math.fsum(p[8] for p in live)
        tol = max(abs_tol, rel_tol * abs(est))
        if prev is not None and abs(est - prev) < tol and err < tol:
            return est
        if not math.isfinite(est):
            raise QuadratureError("integrand is not finite on the interval", best=est)
        nxt = []
        split = 0
        for p in live:
            pa, pb = p[0], p[1]
            if p[8] > tol * (pb - pa) / total_w:
                m = 0.5 * (pa + pb)
                nxt.append(expand((pa, m, p[2], p[3], p[4])))
                nxt.append(expand((m, pb, p[4], p[5], p[6])))
                split += 1
            else:
                nxt.append(p)
        evals += 4 * split
        if split == 0:
            # all panels within their share; the estimate is stable
            if prev is None or abs(est - prev) < tol:
                return est
        if evals > max_evals:
            raise QuadratureError(
                f"refinement budget exhausted ({evals} evaluations)", best=est)
        prev = est
        live = nxt


def _log_norm_fn(sys: LtvSystem, p, sign: float = 1.0):
    p = parse_p(p)
    return lambda s: log_norm(sign * eval_A(sys, s), p)


def log_norm_integral(sys: LtvSystem, p, t_end: float, n_panels: int = 16, *,
                      t_start: float = 0.0, rel_tol: float = 1e-4, abs_tol: float = 1e-6) -> float:
    """Integral of mu_p[A(s)] over [t_start, t_end] by adaptive Simpson."""
    if n_panels < 16:
        raise PreconditionError("n_panels must be at least 16")
    if sys.singular and not t_end < sys.tau:
        raise PreconditionError(f"t_end must be < tau={sys.tau!r}")
    return adaptive_simpson(_log_norm_fn(sys, p), t_start, t_end, n_panels=n_panels,
                            rel_tol=rel_tol, abs_tol=abs_tol)


def _cumulative(f, grid, n_panels, rel_tol, abs_tol):
    out = np.zeros(len(grid))
    acc = 0.0
    for i in range(1, len(grid)):
        acc += adaptive_simpson(f, grid[i - 1], grid[i], n_panels=n_panels,
                                rel_tol=rel_tol, abs_tol=abs_tol)
        out[i] = acc
    return out


def _schedule_times(sys, schedule):
    sched = [float(d) for d in schedule]
    if any(d <= 0 for d in sched) or any(b >= a for a, b in zip(sched, sched[1:])):
        raise PreconditionError("delta schedule must be strictly decreasing positive reals")
    if sched[0] >= sys.tau:
        raise PreconditionError("first delta must be smaller than tau")
    return sched


def check_sufficient_pta(sys: LtvSystem, p=2, delta_schedule: Sequence[float] = DEFAULT_SCHEDULE,
                         threshold: float = -50.0, n_panels: int = 16) -> Verdict:
    """Integral test: int_0^{tau-delta} mu_p[A] ds should fall without bound.

    ``holds`` when the integrals strictly decrease along the schedule and the
    last one is below ``threshold``; ``inconclusive`` otherwise.
    """
    sched = _schedule_times(sys, delta_schedule)
    times = [sys.tau - d for d in sched]
    f = _log_norm_fn(sys, p)
    values = []
    acc = adaptive_simpson(f, 0.0, times[0], n_panels=n_panels)
    values.append(acc)
    for a, b in zip(times, times[1:]):
        acc += adaptive_simpson(f, a, b, n_panels=n_panels)
        values.append(acc)
    decreasing = all(b < a for a, b in zip(values, values[1:]))
    holds = decreasing and values[-1] < threshold
    return Verdict("pta_sufficient", "holds" if holds else "inconclusive", {
        "p": _p_label(p), "deltas": sched, "integrals": values,
        "strictly_decreasing": decreasing, "threshold": threshold,
    })


def _p_label(p):
    p = parse_p(p)
    return "inf" if p == np.inf else int(p)


def vector_norm(x, p) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float), parse_p(p)))


def norm_envelopes(sys: LtvSystem, x0, p, grid: Sequence[float], *, n_panels: int = 4,
                   rel_tol: float = 1e-10, abs_tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Exponential lower/upper envelopes on ||x(t)||_p along ``grid``.

    lower = ||x0|| exp(-int mu_p[-A]), upper = ||x0|| exp(int mu_p[A]).
    ``grid`` must start at 0 and be increasing. Envelopes may overflow to
    inf or underflow to 0 for violently growing log norms.
    """
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise PreconditionError("grid must start at 0 and be strictly increasing")
    if sys.singular and grid[-1] >= sys.tau:
        raise PreconditionError("grid must stay below tau")
    n0 = vector_norm(x0, p)
    up = _cumulative(_log_norm_fn(sys, p), grid, n_panels, rel_tol, abs_tol)
    lo = _cumulative(_log_norm_fn(sys, p, -1.0), grid, n_panels, rel_tol, abs_tol)
    with np.errstate(over="ignore", under="ignore"):
        return n0 * np.exp(-lo), n0 * np.exp(up)


def envelope_violations(norms, lower, upper, slack: float = 1e-4) -> int:
    norms = np.asarray(norms)
    with np.errstate(invalid="ignore"):
        bad = (norms < lower * (1 - slack)) | (norms > upper * (1 + slack))
    return int(np.count_nonzero(bad))


# -- frozen-time spectra ----------------------------------------------------------

@dataclass
class EigenTrace:
    times: np.ndarray
    spectra: np.ndarray  # (len(times), n) complex, descending real part per row

    @property
    def max_real_curve(self) -> np.ndarray:
        return self.spectra.real[:, 0]


def frozen_eig_trace(sys: LtvSystem, grid: Sequence[float]) -> EigenTrace:
    """Frozen-time eigenvalues of A(t) at each grid time."""
    grid = np.asarray(grid, dtype=float)
    spectra = np.array([eig(eval_A(sys, t)).values for t in grid])
    return EigenTrace(grid, spectra.reshape(len(grid), sys.dim))


def _max_real(sys, t):
    return eig(eval_A(sys, t)).max_real


def window_grid(sys: LtvSystem, points: int, terminal_gap: Optional[float] = None) -> np.ndarray:
    gap = 1e-6 * sys.tau if terminal_gap is None else terminal_gap
    return np.linspace(0.0, sys.tau - gap, points)


def hurwitz_crossing(sys: LtvSystem, coarse_grid_points: int = 1000, refine_tol: float = 1e-4,
                     terminal_gap: Optional[float] = None) -> tuple[Optional[float], EigenTrace]:
    """Last time the frozen spectral abscissa changes sign from >= 0 to < 0.

    Returns ``(t_star, trace)``; ``t_star`` is None when the abscissa is
    negative on the whole grid.
    """
    if coarse_grid_points < 2:
        raise PreconditionError("need at least two grid points")
    trace = frozen_eig_trace(sys, window_grid(sys, coarse_grid_points, terminal_gap))
    curve = trace.max_real_curve
    unstable = np.nonzero(curve >= 0)[0]
    if unstable.size == 0:
        return None, trace
    i = int(unstable[-1])
    if i == len(curve) - 1:
        warnings.warn(f"{sys.name}: frozen spectrum is not Hurwitz at the last grid point",
                      DegenerateWindowWarning, stacklevel=2)
        return float(trace.times[-1]), trace
    lo, hi = float(trace.times[i]), float(trace.times[i + 1])
    while hi - lo > refine_tol:
        mid = 0.5 * (lo + hi)
        if _max_real(sys, mid) >= 0:
            lo = mid
        else:
            hi = mid
    return hi, trace


def hurwitz_window(sys: LtvSystem, coarse_grid_points: int = 1000, refine_tol: float = 1e-4,
                   terminal_gap: Optional[float] = None) -> float:
    """Length eps of the terminal interval [tau - eps, tau) with a Hurwitz frozen matrix.

    Returns tau when the frozen matrix is Hurwitz on the whole grid.
    """
    t_star, _ = hurwitz_crossing(sys, coarse_grid_points, refine_tol, terminal_gap)
    if t_star is None:
        return float(sys.tau)
    eps = sys.tau - t_star
    if eps <= refine_tol:
        warnings.warn(f"{sys.name}: Hurwitz window {eps:g} is within refine_tol of tau",
                      DegenerateWindowWarning, stacklevel=2)
    return float(eps)


def singularity_check(sys: LtvSystem, p=2, delta_schedule: Sequence[float] = DEFAULT_SCHEDULE) -> Verdict:
    """``diverging`` if ||A(tau - delta)||_p strictly grows along the schedule by over 10^3x."""
    sched = _schedule_times(sys, delta_schedule)
    norms = [induced_norm(eval_A(sys, sys.tau - d), parse_p(p)) for d in sched]
    increasing = all(b > a for a, b in zip(norms, norms[1:]))
    diverging = increasing and norms[-1] > 1e3 * norms[0]
    return Verdict("singularity", "diverging" if diverging else "bounded", {
        "p": _p_label(p), "deltas": sched, "norms": norms, "strictly_increasing": increasing,
    })


def symmetric_lambda_gap(sys: LtvSystem, grid: Sequence[float]) -> float:
    """Largest |mu_2(A) - lambda_max(A)| over the grid (zero for symmetric A)."""
    gap = 0.0
    for t in grid:
        a = eval_A(sys, t)
        gap = max(gap, abs(log_norm(a, 2) - eig(a).max_real))
    return gap


# -- Lyapunov certificates ----------------------------------------------------------

@dataclass(frozen=True)
class LyapunovCertificate:
    """Candidate P(t) for the differential Lyapunov inequality on [window_start, tau).

    ``fd_step`` of None means 1e-7 * (tau - t) at each point.
    """

    P_fn: Callable[[float], np.ndarray]
    window_start: float
    fd_step: Optional[float] = None


def lyapunov_certificate_check(sys: LtvSystem, cert: LyapunovCertificate, grid: Sequence[float],
                               margin: float = 1e-6, growth: float = 1e3) -> Verdict:
    """Check P' + A^T P + P A < -margin on the grid and unbounded growth of lambda_min(P).

    Growth is accepted when lambda_min(P) strictly increases over the second
    half of the grid and ends above ``growth`` times its value at
    ``window_start``.

    Raises
    ------
    PreconditionError
        P_fn returns a non-symmetric matrix.
    StepSizeError
        The second difference of P is not small against the first.
    """
    grid = np.asarray(grid, dtype=float)
    if grid[0] < cert.window_start or (sys.singular and grid[-1] >= sys.tau):
        raise PreconditionError("grid must lie in [window_start, tau)")

    def P(t):
        m = np.atleast_2d(np.asarray(cert.P_fn(t), dtype=float))
        require_symmetric(m, name="P(t)")
        return sym_part(m)

    lmax_lyap = []
    lmin_p = []
    for t in grid:
        h = cert.fd_step if cert.fd_step is not None else 1e-7 * (sys.tau - t)
        if sys.singular and t + h >= sys.tau:
            raise StepSizeError(f"fd_step {h:g} crosses tau at t={t!r}")
        p_plus, p_0, p_minus = P(t + h), P(t), P(t - h)
        first = p_plus - p_minus
        second = p_plus - 2.0 * p_0 + p_minus
        scale = np.abs(first).max()
        if np.abs(second).max() > 0.1 * scale and scale > 0:
            raise StepSizeError(f"fd_step {h:g} too large for P near t={t!r}")
        pdot = first / (2.0 * h)
        a = eval_A(sys, t)
        lmax_lyap.append(float(np.linalg.eigvalsh(sym_part(pdot + a.T @ p_0 + p_0 @ a))[-1]))
        lmin_p.append(float(np.linalg.eigvalsh(p_0)[0]))
    derivative_ok = max(lmax_lyap) < -margin
    p_start = float(np.linalg.eigvalsh(P(cert.window_start))[0])
    tail = lmin_p[len(lmin_p) // 2:]
    monotone = all(b > a for a, b in zip(tail, tail[1:]))
    growth_ok = monotone and lmin_p[-1] > growth * p_start
    return Verdict("certificate", "passes" if derivative_ok and growth_ok else "fails", {
        "derivative_condition": derivative_ok, "growth_condition": growth_ok,
        "max_lyapunov_eig": max(lmax_lyap), "lambda_min_start": p_start,
        "lambda_min_end": lmin_p[-1], "margin": margin,
    })


# -- report -------------------------------------------------------------------------

@dataclass
class AnalysisReport:
    system: str
    params: dict
    pta_sufficient: Optional[Verdict] = None
    singularity: Optional[Verdict] = None
    hurwitz_epsilon: Optional[float] = None
    certificate: Optional[Verdict] = None
    envelope_violations: Optional[int] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: v for k, v in d.items() if v is not None and v != {}}

"""Linear time-varying systems x' = A(t, tau) x and the built-in catalog."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .controller import EXAMPLE_F, EXAMPLE_G, PtGainParams, pt_gain
from .errors import CatalogError, DimensionError, ParameterError, PreconditionError, SingularityDomainError
from .linalg import as_mat

Evaluator = Callable[[float], np.ndarray]
Oracle = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LtvSystem:
    """A time-varying system matrix with metadata.

    ``evaluator`` maps a time to the n x n system matrix. For singular
    systems it is only evaluated on [0, tau); :meth:`A` enforces this.
    ``oracle(t, x0)``, when present, is the closed-form solution.
    """

    name: str
    dim: int
    tau: float
    evaluator: Evaluator = field(repr=False)
    singular: bool
    oracle: Optional[Oracle] = field(default=None, repr=False)
    params: Mapping[str, float] = field(default_factory=dict)
    symmetric: bool = False

    def A(self, t: float) -> np.ndarray:
        return eval_A(self, t)

    def remaining(self, t: float) -> float:
        return self.tau - t


def eval_A(sys: LtvSystem, t: float) -> np.ndarray:
    """System matrix at time ``t``.

    Raises
    ------
    SingularityDomainError
        If ``sys`` is singular and ``t >= tau``.
    """
    if t < 0:
        raise PreconditionError(f"time must be nonnegative, got {t!r}")
    if sys.singular and not t < sys.tau:
        raise SingularityDomainError(
            f"{sys.name}: evaluation at t={t!r} is outside [0, tau={sys.tau!r})")
    a = sys.evaluator(t)
    if a.shape != (sys.dim, sys.dim):
        raise DimensionError(f"{sys.name}: evaluator returned shape {a.shape}")
    return a


def eval_oracle(sys: LtvSystem, t: float, x0) -> np.ndarray:
    if sys.oracle is None:
        raise PreconditionError(f"{sys.name} has no analytic solution")
    if sys.singular and t > sys.tau:
        raise SingularityDomainError(f"{sys.name}: oracle requested past tau")
    return sys.oracle(t, np.asarray(x0, dtype=float).reshape(-1))


@dataclass(frozen=True)
class LtiPlant:
    """x' = F x + G u."""

    F: np.ndarray
    G: np.ndarray

    def __post_init__(self):
        f = as_mat(self.F, square=True)
        g = np.asarray(self.G, dtype=float)
        if g.ndim == 1:
            g = g[:, None]
        g = as_mat(g)
        if g.shape[0] != f.shape[0]:
            raise DimensionError(f"G has {g.shape[0]} rows, F is {f.shape[0]}x{f.shape[0]}")
        object.__setattr__(self, "F", f)
        object.__setattr__(self, "G", g)

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def m(self) -> int:
        return self.G.shape[1]


EXAMPLE_PLANT = LtiPlant(EXAMPLE_F, EXAMPLE_G)


def make_closed_loop(plant: LtiPlant, gain: Callable[[float], np.ndarray], tau: float,
                     *, singular: bool = True, name: str = "closed-loop",
                     params: Optional[Mapping[str, float]] = None) -> LtvSystem:
    """Closed loop x' = (F + G K(t)) x as an :class:`LtvSystem`."""
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau!r}")
    shape = (plant.m, plant.n)
    k0 = np.asarray(gain(0.0), dtype=float)
    if k0.shape != shape:
        raise DimensionError(f"gain has shape {k0.shape}, expected {shape}")
    F, G = plant.F, plant.G

    def evaluator(t: float) -> np.ndarray:
        k = np.asarray(gain(t), dtype=float)
        if k.shape != shape:
            raise DimensionError(f"gain has shape {k.shape}, expected {shape}")
        return F + G @ k

    return LtvSystem(name=name, dim=plant.n, tau=float(tau), evaluator=evaluator,
                     singular=singular, params=dict(params or {}))


def constant_system(a, tau: float = 1.0, name: str = "constant") -> LtvSystem:
    """Time-invariant system wrapped as a (nonsingular) LTV system."""
    a = as_mat(a, square=True)
    a.setflags(write=False)
    n = a.shape[0]

    def oracle(t, x0):
        from scipy.linalg import expm
        return expm(a * t) @ x0

    return LtvSystem(name=name, dim=n, tau=float(tau), evaluator=lambda t: a.copy(),
                     singular=False, oracle=oracle, params={"tau": float(tau)})


# -- catalog -----------------------------------------------------------------

def remark1_phi(u):
    """Antiderivative in u = 1/(tau - t) of the remark1-oscillating exponent: -u^2/4 + sin u - u cos u."""
    return -0.25 * u * u + np.sin(u) - u * np.cos(u)


def _positive(params, key):
    if key not in params:
        raise ParameterError(f"missing parameter {key!r}")
    try:
        v = float(params[key])
    except (TypeError, ValueError):
        raise ParameterError(f"parameter {key!r} must be a number, got {params[key]!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise ParameterError(f"parameter {key!r} must be positive, got {v!r}")
    return v


def _paper_example(params):
    tau = _positive(params, "tau")
    alpha = _positive(params, "alpha")
    gp = PtGainParams(tau, alpha)
    sys = make_closed_loop(EXAMPLE_PLANT, lambda t: pt_gain(t, gp), tau,
                           name="paper-example", params={"tau": tau, "alpha": alpha})
    return sys


def _remark1(params):
    tau = _positive(params, "tau")

    def evaluator(t):
        d = tau - t
        return np.array([[-(0.5 - math.sin(1.0 / d)) / d**3]])

    phi0 = remark1_phi(1.0 / tau)

    def oracle(t, x0):
        if t == 0:
            return x0.copy()
        d = tau - t
        if d <= 0:
            return np.zeros_like(x0)
        return x0 * math.exp(remark1_phi(1.0 / d) - phi0)

    return LtvSystem("remark1-oscillating", 1, tau, evaluator, True, oracle, {"tau": tau})


def _remark2(params):
    tau = _positive(params, "tau")

    def evaluator(t):
        return np.array([[-1.0, 0.0], [0.0, -1.0 / (tau - t)]])

    def oracle(t, x0):
        return np.array([x0[0] * math.exp(-t), x0[1] * (tau - t) / tau])

    return LtvSystem("remark2-diagonal", 2, tau, evaluator, True, oracle, {"tau": tau},
                     symmetric=True)


def _scalar_power(params):
    tau = _positive(params, "tau")
    k = _positive(params, "k")

    def evaluator(t):
        return np.array([[-k / (tau - t)]])

    def oracle(t, x0):
        return x0 * ((tau - t) / tau) ** k

    return LtvSystem("scalar-power", 1, tau, evaluator, True, oracle, {"tau": tau, "k": k},
                     symmetric=True)


def _symmetric_demo(params):
    tau = _positive(params, "tau")

    def evaluator(t):
        d = tau - t
        return np.array([[-1.0 / d, 0.0], [0.0, -2.0 / d]])

    def oracle(t, x0):
        r = (tau - t) / tau
        return np.array([x0[0] * r, x0[1] * r * r])

    return LtvSystem("symmetric-demo", 2, tau, evaluator, True, oracle, {"tau": tau},
                     symmetric=True)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    dim: int
    required: tuple[str, ...]
    realizes: str
    tag: str
    build: Callable[[Mapping[str, float]], LtvSystem] = field(repr=False)


CATALOG: dict[str, CatalogEntry] = {e.name: e for e in [
    CatalogEntry("paper-example", 4, ("tau", "alpha"),
                 "fourth-order canonical plant under the prescribed-time gain",
                 "PTA closed loop, Hurwitz only near tau", _paper_example),
    CatalogEntry("remark1-oscillating", 1, ("tau",),
                 "oscillating entry without a limit at tau",
                 "PTA, oscillating eigenvalue", _remark1),
    CatalogEntry("remark2-diagonal", 2, ("tau",),
                 "diverging entry with stable frozen spectrum",
                 "not PTA despite Hurwitz frozen spectrum", _remark2),
    CatalogEntry("scalar-power", 1, ("tau", "k"),
                 "Scalar prescribed-time decay x' = -k x / (tau - t)",
                 "PTA, power-law decay", _scalar_power),
    CatalogEntry("symmetric-demo", 2, ("tau",),
                 "symmetric system, lambda_max test",
                 "PTA, symmetric", _symmetric_demo),
]}


def catalog_names() -> list[str]:
    return list(CATALOG)


def catalog_get(name: str, params: Optional[Mapping[str, float]] = None) -> LtvSystem:
    """Build a catalog system.

    Raises
    ------
    CatalogError
        Unknown ``name``.
    ParameterError
        Missing or non-positive parameter.
    """
    try:
        entry = CATALOG[name]
    except KeyError:
        raise CatalogError(
            f"unknown system {name!r}; valid names: {', '.join(CATALOG)}") from None
    return entry.build(dict(params or {}))

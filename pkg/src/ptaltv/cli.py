"""Command-line front end.

Subcommands: simulate, analyze, reproduce-example, catalog. A scenario is a
JSON document; any field can be overridden with ``--key=value`` (dotted keys
reach nested fields, e.g. ``--params.tau=5``). Exit codes: 0 success,
2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import (AnalysisReport, DEFAULT_SCHEDULE, check_sufficient_pta, envelope_violations,
                       frozen_eig_trace, hurwitz_crossing, norm_envelopes, singularity_check, vector_norm)
from .controller import PtGainParams, pt_gain
from .errors import NoSwitchError, PtaError
from .export import ensure_dir, write_eigtrace_csv, write_json, write_trajectory_csv
from .linalg import eig, parse_p
from .sim import IntegratorConfig, Trajectory, integrate, simulate_switched
from .svgplot import line_plot
from .systems import CATALOG, EXAMPLE_PLANT, LtiPlant, catalog_get, constant_system

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
ANALYSIS_FLAGS = ("pta", "singularity", "eigtrace", "window", "envelopes")
CONFIG_KEYS = {"system", "params", "x0", "sigma", "integrator", "analysis", "grid_points",
               "output_dir", "matrix", "plant", "t_end", "p", "threshold", "deltas", "seed",
               "refine_tol", "random_x0"}

# Example scenario constants; sigma is a choice, not a published value.
EXAMPLE_TAU, EXAMPLE_ALPHA, EXAMPLE_SIGMA = 10.0, 0.1, 1e-2
EXAMPLE_X0 = (1.0, 1.0, 1.0, 1.0)


class ConfigError(PtaError, ValueError):
    def __init__(self, field_name: str, message: str, line: Optional[int] = None):
        self.field = field_name
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}field {field_name!r}: {message}")


@dataclass
class ScenarioConfig:
    system: str
    params: dict
    x0: Optional[list] = None
    sigma: Optional[float] = None
    integrator: dict = field(default_factory=dict)
    analysis: list = field(default_factory=list)
    grid_points: int = 1000
    output_dir: str = "."
    matrix: Optional[list] = None
    plant: Optional[dict] = None
    t_end: Optional[float] = None
    p: object = 2
    threshold: float = -50.0
    deltas: list = field(default_factory=lambda: list(DEFAULT_SCHEDULE))
    seed: int = 0
    refine_tol: float = 1e-4
    random_x0: int = 10

    def build_system(self):
        if self.system == "constant":
            return constant_system(self.matrix, tau=self.params.get("tau", 1.0))
        return catalog_get(self.system, self.params)

    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(**self.integrator)

    def plant_obj(self) -> LtiPlant:
        if self.plant is None:
            return EXAMPLE_PLANT
        return LtiPlant(np.array(self.plant["F"], dtype=float), np.array(self.plant["G"], dtype=float))


# -- configuration ----------------------------------------------------------------------

def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", exc.msg, line=exc.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError("--config", "top level must be a JSON object")
    return data


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        if "," in text:
            return [_parse_value(t) for t in text.split(",")]
        return text


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    out = json.loads(json.dumps(data))
    for item in overrides:
        if not item.startswith("--") or "=" not in item:
            raise ConfigError(item, "overrides must look like --key=value")
        key, value = item[2:].split("=", 1)
        parts = key.replace("-", "_").split(".")
        node = out
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(key, "cannot descend into a non-object field")
        node[parts[-1]] = _parse_value(value)
    return out


def validate(data: dict) -> ScenarioConfig:
    """Turn a raw config mapping into a checked :class:`ScenarioConfig`."""
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(unknown[0], f"unknown field; allowed: {', '.join(sorted(CONFIG_KEYS))}")
    name = data.get("system")
    if name is None:
        raise ConfigError("system", "required")
    if name != "constant" and name not in CATALOG:
        raise ConfigError("system", f"unknown system {name!r}; valid names: {', '.join(CATALOG)}")
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params", "must be an object")
    analysis = data.get("analysis", [])
    if isinstance(analysis, str):
        analysis = [analysis]
    bad = [a for a in analysis if a not in ANALYSIS_FLAGS]
    if bad:
        raise ConfigError("analysis", f"unknown flag {bad[0]!r}; allowed: {', '.join(ANALYSIS_FLAGS)}")
    kwargs = {k: v for k, v in data.items() if k in CONFIG_KEYS}
    kwargs["params"] = params
    kwargs["analysis"] = list(analysis)
    try:
        cfg = ScenarioConfig(**kwargs)
        if name == "constant" and cfg.matrix is None:
            raise ConfigError("matrix", "required for the constant system")
        system = cfg.build_system()
        cfg.integrator_config()
        parse_p(cfg.p)
    except ConfigError:
        raise
    except (PtaError, TypeError, ValueError) as exc:
        field_name = getattr(exc, "field", None) or _guess_field(exc)
        raise ConfigError(field_name, str(exc)) from None
    if cfg.x0 is not None:
        try:
            x0 = [float(v) for v in cfg.x0]
        except (TypeError, ValueError):
            raise ConfigError("x0", "must be a list of numbers") from None
        if len(x0) != system.dim:
            raise ConfigError("x0", f"length {len(x0)} does not match system dimension {system.dim}")
        cfg.x0 = x0
    if cfg.sigma is not None:
        if name != "paper-example":
            raise ConfigError("sigma", "switching is only defined for the paper-example closed loop")
        if not (isinstance(cfg.sigma, (int, float)) and cfg.sigma > 0):
            raise ConfigError("sigma", "must be a positive number")
        cfg.sigma = float(cfg.sigma)
    if not (isinstance(cfg.grid_points, int) and cfg.grid_points >= 2):
        raise ConfigError("grid_points", "must be an integer >= 2")
    return cfg


def _guess_field(exc) -> str:
    msg = str(exc)
    for key in ("tau", "alpha", "k", "rel_tol", "abs_tol", "min_step", "max_step", "terminal_gap"):
        if repr(key) in msg or f"{key} " in msg:
            return key
    if isinstance(exc, TypeError) and "IntegratorConfig" in msg:
        return "integrator"
    return "params"


# -- commands -----------------------------------------------------------------------------

def _write_meta(out: Path, command: str, extra: Optional[dict] = None) -> None:
    meta = {"command": command, "version": __version__,
            "created": _dt.datetime.now(_dt.timezone.utc).isoformat()}
    meta.update(extra or {})
    write_json(out / "meta.json", meta)


def _numeric_failure(out: Path, exc: Exception) -> int:
    write_json(out / "error.json", {"error": type(exc).__name__, "message": str(exc)})
    print(f"numeric error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_NUMERIC


def _annotate_gains(tr: Trajectory, params: PtGainParams) -> Trajectory:
    gains = np.array([pt_gain(t, params)[0] for t in tr.times])
    tr.gains = gains
    tr.inputs = np.einsum("ij,ij->i", gains, tr.states)
    tr.latched = np.zeros(len(tr.times), dtype=bool)
    return tr


def _default_t_end(system, icfg: IntegratorConfig) -> float:
    return system.tau - icfg.gap(system.tau) if system.singular else system.tau


def cmd_simulate(config: ScenarioConfig) -> int:
    """Integrate the scenario (switched when ``sigma`` is set) and write trajectory.csv."""
    out = ensure_dir(config.output_dir)
    system = config.build_system()
    icfg = config.integrator_config()
    x0 = config.x0 if config.x0 is not None else [1.0] * system.dim
    try:
        if config.sigma is not None:
            params = PtGainParams(system.tau, system.params["alpha"])
            tr = simulate_switched(config.plant_obj(), x0, params, config.sigma, icfg, t_end=config.t_end)
        else:
            t_end = config.t_end if config.t_end is not None else _default_t_end(system, icfg)
            tr = integrate(system, x0, 0.0, t_end, icfg)
            if system.name == "paper-example":
                _annotate_gains(tr, PtGainParams(system.tau, system.params["alpha"]))
    except NoSwitchError as exc:
        if exc.trajectory is not None:
            write_trajectory_csv(out / "trajectory.csv", exc.trajectory)
        return _numeric_failure(out, exc)
    except PtaError as exc:
        return _numeric_failure(out, exc)
    write_trajectory_csv(out / "trajectory.csv", tr)
    _write_meta(out, "simulate", {"accepted_steps": tr.accepted, "rejected_steps": tr.rejected})
    return EXIT_OK


def eig_grid(system, points: int) -> np.ndarray:
    """Uniform grid i*tau/points, i < points, clipped to the terminal gap."""
    grid = np.arange(points) * system.tau / points
    if system.singular:
        grid = grid[grid <= system.tau * (1 - 1e-6)]
    return grid


def _run_analysis(config: ScenarioConfig, system, out: Path) -> AnalysisReport:
    report = AnalysisReport(system=system.name, params=dict(system.params))
    p = config.p
    if "pta" in config.analysis:
        report.pta_sufficient = check_sufficient_pta(system, p, config.deltas, config.threshold)
    if "singularity" in config.analysis:
        report.singularity = singularity_check(system, p, config.deltas)
    if "window" in config.analysis:
        if system.singular:
            t_star, _ = hurwitz_crossing(system, config.grid_points, config.refine_tol)
            report.hurwitz_epsilon = system.tau if t_star is None else system.tau - t_star
            report.extra["hurwitz_t_star"] = t_star
        else:
            report.extra["hurwitz_window"] = "not applicable to a nonsingular system"
    if "eigtrace" in config.analysis:
        trace = frozen_eig_trace(system, eig_grid(system, config.grid_points))
        write_eigtrace_csv(out / "eigtrace.csv", trace)
    if "envelopes" in config.analysis:
        report.envelope_violations = _envelope_scan(config, system)
    return report


def _envelope_scan(config: ScenarioConfig, system) -> int:
    rng = np.random.default_rng(config.seed)
    starts = [np.asarray(config.x0)] if config.x0 is not None else []
    starts += [rng.uniform(-1.0, 1.0, system.dim) for _ in range(config.random_x0)]
    horizon = config.t_end if config.t_end is not None else system.tau * (0.99 if system.singular else 1.0)
    grid = np.linspace(0.0, horizon, min(config.grid_points, 200))
    icfg = IntegratorConfig(**{"rel_tol": 1e-10, "abs_tol": 1e-300, **config.integrator})
    violations = 0
    for x0 in starts:
        tr = integrate(system, x0, 0.0, grid[-1], icfg, stops=grid[1:-1])
        states = np.array([tr.at(t) for t in grid])
        lower, upper = norm_envelopes(system, x0, config.p, grid)
        norms = [vector_norm(s, config.p) for s in states]
        violations += envelope_violations(norms, lower, upper)
    return violations


def cmd_analyze(config: ScenarioConfig) -> int:
    """Run the flagged analyses and write report.json (and eigtrace.csv)."""
    out = ensure_dir(config.output_dir)
    system = config.build_system()
    try:
        report = _run_analysis(config, system, out)
    except PtaError as exc:
        return _numeric_failure(out, exc)
    write_json(out / "report.json", report.to_dict())
    _write_meta(out, "analyze")
    return EXIT_OK


def _switching_summary(tr: Trajectory, params: PtGainParams, sigma: float) -> dict:
    t_s, k_s = tr.switch_event
    frozen = eig(EXAMPLE_PLANT.F + EXAMPLE_PLANT.G @ k_s)
    after = tr.times >= t_s
    pre_u = np.abs(tr.inputs[~after]) if np.any(~after) else np.abs(tr.inputs[:1])
    return {
        "status": "switched", "sigma": sigma, "t_s": t_s, "frozen_gain": k_s[0],
        "frozen_eigenvalues": [[z.real, z.imag] for z in frozen.values],
        "frozen_max_real": frozen.max_real,
        "norm_at_switch": float(np.linalg.norm(tr.at(t_s))),
        "max_norm_after_switch": float(tr.norms[after].max()),
        "final_time": float(tr.times[-1]), "final_norm": float(tr.norms[-1]),
        "max_abs_u_before_switch": float(pre_u.max()),
        "max_abs_u": float(np.abs(tr.inputs).max()),
        "accepted_steps": tr.accepted, "rejected_steps": tr.rejected,
    }


def cmd_reproduce_example(output_dir: str, grid_points: int = 10_000,
                          sigma: float = EXAMPLE_SIGMA, icfg: Optional[IntegratorConfig] = None) -> int:
    """Full example scenario: eigtrace.csv, trajectory.csv, report.json, fig1.svg.

    Returns 3 (after writing every file) when the switching run fails.
    """
    out = ensure_dir(output_dir)
    icfg = icfg or IntegratorConfig()
    params = PtGainParams(EXAMPLE_TAU, EXAMPLE_ALPHA)
    system = catalog_get("paper-example", {"tau": EXAMPLE_TAU, "alpha": EXAMPLE_ALPHA})

    trace = frozen_eig_trace(system, eig_grid(system, grid_points))
    write_eigtrace_csv(out / "eigtrace.csv", trace)
    t_star, _ = hurwitz_crossing(system, grid_points + 1, 1e-4)
    eps = EXAMPLE_TAU if t_star is None else EXAMPLE_TAU - t_star

    report = AnalysisReport(system="paper-example", params={"tau": EXAMPLE_TAU, "alpha": EXAMPLE_ALPHA})
    report.hurwitz_epsilon = eps
    report.singularity = singularity_check(system, 2)
    report.pta_sufficient = check_sufficient_pta(system, 2)
    report.extra["hurwitz_t_star"] = t_star
    report.extra["x0"] = list(EXAMPLE_X0)
    report.extra["sigma_is_paper_value"] = False

    code = EXIT_OK
    try:
        tr = simulate_switched(EXAMPLE_PLANT, EXAMPLE_X0, params, sigma, icfg)
        report.extra["switching"] = _switching_summary(tr, params, sigma)
    except NoSwitchError as exc:
        tr = exc.trajectory
        report.extra["switching"] = {
            "status": "no_switch", "sigma": sigma, "message": str(exc),
            "last_time": float(tr.times[-1]), "last_norm": float(tr.norms[-1]),
            "max_norm": float(tr.norms.max()), "terminal_gap": icfg.gap(EXAMPLE_TAU),
        }
        code = EXIT_NUMERIC
    write_trajectory_csv(out / "trajectory.csv", tr)
    write_json(out / "report.json", report.to_dict())

    series = [(f"Re(lambda{i + 1})", trace.times, trace.spectra[:, i].real)
              for i in range(trace.spectra.shape[1])]
    svg = line_plot(series, title="Frozen-time eigenvalues, tau = 10, alpha = 0.1",
                    xlabel="t [s]", ylabel="Re(lambda)  (symlog)", yscale="symlog",
                    vlines=[(EXAMPLE_TAU - eps, f"tau - eps = {EXAMPLE_TAU - eps:.3f}")])
    (out / "fig1.svg").write_text(svg, encoding="utf-8")
    _write_meta(out, "reproduce-example", {"exit_code": code})
    if code != EXIT_OK:
        print(f"switching run failed: {report.extra['switching']['message']}", file=sys.stderr)
    return code


def cmd_catalog(stream=None) -> int:
    stream = stream or sys.stdout
    print(f"{'name':<22}{'dim':>4}  {'params':<12}{'tag':<42}realizes", file=stream)
    for e in CATALOG.values():
        print(f"{e.name:<22}{e.dim:>4}  {','.join(e.required):<12}{e.tag:<42}{e.realizes}", file=stream)
    return EXIT_OK


# -- entry point --------------------------------------------------------------------------

def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=d, help="scenario JSON file")
    parser.add_argument("--output-dir", metavar="PATH", default=d, help="directory for output files")
    parser.add_argument("--grid", metavar="N", type=int, default=d, help="grid points for traces and windows")
    parser.add_argument("--seed", metavar="N", type=int, default=d, help="seed for random initial states")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptaltv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [("simulate", "integrate a scenario and write trajectory.csv"),
                            ("analyze", "run analyses and write report.json"),
                            ("reproduce-example", "reproduce the fourth-order example end to end"),
                            ("catalog", "list built-in systems")]:
        sp = sub.add_parser(name, help=help_text)
        _global_flags(sp, suppress=True)
    return parser


def _scenario(args, overrides) -> ScenarioConfig:
    data = load_config(args.config) if args.config else {}
    data = apply_overrides(data, overrides)
    if args.output_dir is not None:
        data["output_dir"] = args.output_dir
    if args.grid is not None:
        data["grid_points"] = args.grid
    if args.seed is not None:
        data["seed"] = args.seed
    return validate(data)


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        if args.command == "catalog":
            return cmd_catalog()
        if args.command == "reproduce-example":
            if extra:
                raise ConfigError(extra[0], "reproduce-example takes no overrides")
            return cmd_reproduce_example(args.output_dir or ".", grid_points=args.grid or 10_000)
        config = _scenario(args, extra)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "simulate":
        return cmd_simulate(config)
    return cmd_analyze(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

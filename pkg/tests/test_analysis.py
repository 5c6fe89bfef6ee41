import math
import warnings

import numpy as np
import pytest

from conftest import CATALOG_PARAMS
from oracles import lyapunov_2x2
from ptaltv.analysis import (DegenerateWindowWarning, LyapunovCertificate, adaptive_simpson,
                             check_sufficient_pta, envelope_violations, frozen_eig_trace, hurwitz_crossing,
                             hurwitz_window, log_norm_integral, lyapunov_certificate_check, norm_envelopes,
                             singularity_check, symmetric_lambda_gap, vector_norm)
from ptaltv.errors import PreconditionError, QuadratureError, StepSizeError
from ptaltv.sim import IntegratorConfig, integrate
from ptaltv.systems import catalog_get, constant_system, eval_oracle, remark1_phi

TIGHT = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-300)


def scalar_power(k=2.0, tau=1.0):
    return catalog_get("scalar-power", {"tau": tau, "k": k})


def test_simpson_on_smooth_integrand():
    assert adaptive_simpson(math.exp, 0.0, 1.0, rel_tol=1e-12, abs_tol=1e-14) == pytest.approx(math.e - 1, rel=1e-12)


def test_simpson_budget():
    with pytest.raises(QuadratureError) as info:
        adaptive_simpson(lambda s: math.sin(1 / (1 - s)) / (1 - s) ** 2, 0.0, 1 - 1e-9, max_evals=500)
    assert info.value.best is not None


@pytest.mark.parametrize("delta", [1e-2, 1e-3, 1e-4])
def test_log_norm_integral_scalar_power(delta):
    assert log_norm_integral(scalar_power(), 2, 1 - delta) == pytest.approx(2 * math.log(delta), abs=1e-4)


def test_log_norm_integral_remark1():
    tau = 10.0
    sys = catalog_get("remark1-oscillating", {"tau": tau})
    t_end = tau - 1e-2
    expected = remark1_phi(1 / (tau - t_end)) - remark1_phi(1 / tau)
    assert log_norm_integral(sys, 2, t_end) == pytest.approx(expected, abs=1e-3)


@pytest.mark.parametrize("p", [1, 2, np.inf])
def test_log_norm_integral_constant(p):
    assert log_norm_integral(constant_system(-np.eye(3)), p, 1.0) == pytest.approx(-1.0, abs=1e-12)


def test_log_norm_integral_preconditions():
    with pytest.raises(PreconditionError):
        log_norm_integral(scalar_power(), 2, 0.5, n_panels=8)
    with pytest.raises(PreconditionError):
        log_norm_integral(scalar_power(), 2, 1.0)


def test_sufficient_pta_scalar_power():
    v = check_sufficient_pta(scalar_power(), 2, threshold=-15)
    assert v.verdict == "holds"
    assert v.evidence["integrals"][-1] == pytest.approx(2 * math.log(1e-4), abs=1e-3)
    # default threshold is out of reach at delta = 1e-4
    assert check_sufficient_pta(scalar_power(), 2).verdict == "inconclusive"


def test_sufficient_pta_remark2_inconclusive():
    tau = 1.0
    v = check_sufficient_pta(catalog_get("remark2-diagonal", {"tau": tau}), 2)
    assert v.verdict == "inconclusive"
    np.testing.assert_allclose(v.evidence["integrals"], [-(tau - d) for d in (1e-1, 1e-2, 1e-3, 1e-4)],
                               atol=1e-6)


def test_sufficient_pta_constant_inconclusive():
    assert check_sufficient_pta(constant_system(-np.eye(2), tau=1.0), 2).verdict == "inconclusive"


def test_schedule_must_decrease():
    with pytest.raises(PreconditionError):
        check_sufficient_pta(scalar_power(), 2, [1e-3, 1e-2])


def test_envelopes_minus_identity():
    grid = np.linspace(0, 2, 21)
    x0 = [3.0, 4.0]
    lo, up = norm_envelopes(constant_system(-np.eye(2), tau=2.0), x0, 2, grid)
    np.testing.assert_allclose(lo, 5 * np.exp(-grid), rtol=1e-12)
    np.testing.assert_allclose(up, 5 * np.exp(-grid), rtol=1e-12)


@pytest.mark.parametrize("name", ["scalar-power", "remark1-oscillating"])
def test_envelopes_collapse_for_scalars(name):
    sys = catalog_get(name, CATALOG_PARAMS[name])
    grid = np.linspace(0, 0.95 * sys.tau, 40)
    lo, up = norm_envelopes(sys, [2.0], 2, grid)
    exact = np.array([abs(eval_oracle(sys, t, [2.0])[0]) for t in grid])
    np.testing.assert_allclose(lo, exact, rtol=1e-6)
    np.testing.assert_allclose(up, exact, rtol=1e-6)


def test_envelopes_paper_example(paper_system):
    grid = np.linspace(0, 10 - 1e-5, 200)
    x0 = np.ones(4)
    tr = integrate(paper_system, x0, 0.0, grid[-1], TIGHT, stops=grid[1:-1])
    lo, up = norm_envelopes(paper_system, x0, 2, grid)
    norms = [np.linalg.norm(tr.at(t)) for t in grid]
    assert envelope_violations(norms, lo, up, 1e-4) == 0


def test_envelope_grid_checked():
    with pytest.raises(PreconditionError):
        norm_envelopes(scalar_power(), [1.0], 2, [0.1, 0.2])


def test_frozen_trace_remark2():
    tr = frozen_eig_trace(catalog_get("remark2-diagonal", {"tau": 1.0}), [0.5])
    np.testing.assert_allclose(tr.spectra[0], [-1.0, -2.0])
    assert tr.max_real_curve[0] == -1.0


def test_frozen_trace_paper_example(paper_system):
    tr = frozen_eig_trace(paper_system, [0.0, 9.5])
    assert tr.spectra.shape == (2, 4)
    assert tr.spectra[0].real.max() > 0
    assert np.all(tr.spectra[1].real < 0)
    assert np.all(np.diff(tr.spectra.real, axis=1) <= 0)


def test_hurwitz_window_paper_example(paper_system):
    eps = hurwitz_window(paper_system, 10_001, 1e-4)
    assert 0.64 <= eps <= 0.68
    assert eps == pytest.approx(0.66, abs=0.02)


def test_hurwitz_window_refinement_stable(paper_system):
    coarse = hurwitz_window(paper_system, 2_001, 1e-4)
    fine = hurwitz_window(paper_system, 4_001, 1e-4)
    assert abs(coarse - fine) < 1e-4


def test_hurwitz_window_tail_is_stable(paper_system):
    t_star, trace = hurwitz_crossing(paper_system, 2_000, 1e-4)
    assert np.all(trace.max_real_curve[trace.times > t_star] < 0)


@pytest.mark.parametrize("name", ["remark2-diagonal", "scalar-power", "symmetric-demo"])
def test_hurwitz_window_full_horizon(name):
    sys = catalog_get(name, CATALOG_PARAMS[name])
    assert hurwitz_window(sys, 1000, 1e-4) == sys.tau


def test_hurwitz_window_degenerate():
    unstable = catalog_get("scalar-power", {"tau": 1.0, "k": 2.0})
    flipped = type(unstable)(**{**unstable.__dict__, "evaluator": lambda t: -unstable.evaluator(t)})
    with pytest.warns(DegenerateWindowWarning):
        assert hurwitz_window(flipped, 100, 1e-4) <= 1e-5


def test_singularity_examples(paper_system):
    assert singularity_check(paper_system).verdict == "diverging"
    assert singularity_check(catalog_get("remark2-diagonal", {"tau": 1.0})).verdict == "diverging"
    assert singularity_check(constant_system([[0.0, 1.0], [-2.0, -3.0]], tau=1.0)).verdict == "bounded"


def test_sufficient_condition_implies_window():
    for name, params in CATALOG_PARAMS.items():
        sys = catalog_get(name, params)
        if check_sufficient_pta(sys, 2, threshold=-5).verdict == "holds":
            assert hurwitz_window(sys, 1000, 1e-4) > 0


def test_symmetric_lambda_equivalence():
    sys = catalog_get("symmetric-demo", {"tau": 1.0})
    assert symmetric_lambda_gap(sys, np.linspace(0, 1 - 1e-6, 1000)) <= 1e-8


def power_cert(m, tau=1.0):
    return LyapunovCertificate(lambda t: np.array([[(tau - t) ** (-m)]]), window_start=0.0)


def test_certificate_power_law_passes():
    grid = np.linspace(0.0, 1 - 1e-3, 400)
    v = lyapunov_certificate_check(scalar_power(), power_cert(2), grid)
    assert v.verdict == "passes"
    assert v.evidence["derivative_condition"] and v.evidence["growth_condition"]


def test_certificate_too_fast_growth_fails():
    grid = np.linspace(0.0, 1 - 1e-3, 400)
    v = lyapunov_certificate_check(scalar_power(), power_cert(6), grid)
    assert v.verdict == "fails"
    assert not v.evidence["derivative_condition"]


def test_certificate_lti_fails_growth():
    a = np.array([[0.0, 1.0], [-2.0, -3.0]])
    p = lyapunov_2x2(a)
    sys = constant_system(a, tau=1.0)
    v = lyapunov_certificate_check(sys, LyapunovCertificate(lambda t: p, 0.0, fd_step=1e-4),
                                   np.linspace(0, 1, 50))
    assert v.evidence["derivative_condition"]
    assert not v.evidence["growth_condition"]
    assert v.verdict == "fails"


def test_certificate_rejects_asymmetric_p():
    cert = LyapunovCertificate(lambda t: np.array([[1.0, 2.0], [0.0, 1.0]]), 0.0, fd_step=1e-3)
    with pytest.raises(PreconditionError):
        lyapunov_certificate_check(catalog_get("remark2-diagonal", {"tau": 1.0}), cert, [0.1, 0.2])


def test_certificate_coarse_step():
    cert = LyapunovCertificate(lambda t: np.array([[(1 - t) ** -2]]), 0.0, fd_step=0.05)
    with pytest.raises(StepSizeError):
        lyapunov_certificate_check(scalar_power(), cert, [0.5, 0.9])


def test_vector_norm_variants():
    x = [3.0, -4.0]
    assert vector_norm(x, 1) == 7.0
    assert vector_norm(x, 2) == 5.0
    assert vector_norm(x, "inf") == 4.0

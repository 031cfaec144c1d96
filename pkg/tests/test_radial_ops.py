import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from inflap import (NonlinearitySpec, Profile, apply_operator_radial, counterexample_eval,
                    kink_viscosity_check, operator_values, residual_report)
from inflap.errors import CriticalPointError, DomainError, UsageError
from inflap.radial_ops import ResidualReport

GRID = np.linspace(0.0, 2.0, 2001)


def exact_profile(phi, d1, d2, grid=GRID, **kw):
    return Profile(grid, phi(grid), d1(grid), d2(grid), **kw)


def test_operator_examples():
    p = exact_profile(np.exp, np.exp, np.exp)
    assert apply_operator_radial("L1", p, 1.0) == pytest.approx(math.e ** 3, rel=1e-14)
    lin = Profile.from_function(lambda r: r, GRID)
    assert all(abs(apply_operator_radial("L1", lin, r)) < 1e-9 for r in (0.3, 1.0, 1.7))
    sq = Profile.from_function(lambda r: r ** 2, GRID)
    assert apply_operator_radial("L1", sq, 1.0) == pytest.approx(8.0, rel=1e-9)
    assert apply_operator_radial("L0", sq, 1.0) == pytest.approx(2.0, rel=1e-9)


def test_operator_preconditions():
    sq = Profile.from_function(lambda r: r ** 2, GRID)
    bowl = exact_profile(lambda r: (r - 1) ** 2, lambda r: 2 * (r - 1), lambda r: 2 + 0 * r)
    with pytest.raises(CriticalPointError):
        apply_operator_radial("L0", bowl, 1.0)
    assert apply_operator_radial("L1", bowl, 1.0) == 0.0
    with pytest.raises(DomainError):
        apply_operator_radial("L1", sq, 2.0)
    with pytest.raises(UsageError):
        apply_operator_radial("L2", sq, 1.0)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), c=st.floats(-3, 3), r=st.floats(0.05, 1.95))
def test_operator_consistency(a, b, c, r):
    p = exact_profile(lambda x: a * x ** 3 + b * x ** 2 + c * x + 100,
                      lambda x: 3 * a * x ** 2 + 2 * b * x + c, lambda x: 6 * a * x + 2 * b)
    d1 = p.at(r)[1]
    if abs(d1) < 1e-8:
        return
    assert apply_operator_radial("L1", p, r) == pytest.approx(
        d1 ** 2 * apply_operator_radial("L0", p, r), rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(s=st.floats(-5, 5), k1=st.floats(-5, 5), k2=st.floats(-5, 5), lam=st.floats(-3, 3))
def test_linearity_in_second_derivative(s, k1, k2, lam):
    grid = np.linspace(0.0, 1.0, 5)
    ones = np.ones(5)

    def value(k):
        return apply_operator_radial("L1", Profile(grid, ones, s * ones, k * ones), 0.5)

    assert value(k1 + lam * k2) == pytest.approx(value(k1) + lam * value(k2), abs=1e-9)


def test_operator_values_marks_critical_points():
    p = exact_profile(lambda r: (r - 1) ** 2, lambda r: 2 * (r - 1), lambda r: 2 + 0 * r)
    vals = operator_values("L0", p)
    assert np.isnan(vals[1000]) and np.all(np.isfinite(np.delete(vals, 1000)))


def test_counterexample_values():
    assert counterexample_eval(0.5, 1.0) == pytest.approx(35.6894, abs=1e-3)
    assert counterexample_eval(0.3, 0.0) == 1.0
    r = np.linspace(0.0, 10.0, 10_000)
    for alpha in (0.1, 0.5, 0.9):
        assert counterexample_eval(alpha, r).min() > 0
    with pytest.raises(DomainError):
        counterexample_eval(1.0, 1.0)
    with pytest.raises(DomainError):
        counterexample_eval(0.5, -1.0)


def test_counterexample_matches_operator():
    # u = e^r, G(s) = s^3, f(s) = s^{3 alpha}: operator + gradient - absorption
    p = exact_profile(np.exp, np.exp, np.exp)
    alpha = 0.4
    f = NonlinearitySpec.power_law(3 * alpha)
    lhs = operator_values("L1", p) + p.first_derivative ** 3 - f(p.values)
    assert np.allclose(lhs, counterexample_eval(alpha, GRID), rtol=1e-13)


def test_zero_profile_has_zero_residual():
    z = Profile.from_values(GRID, np.zeros_like(GRID))
    f = NonlinearitySpec.power_law(1.0)
    for target in ("csp_ode", "compact_solution", "equation", "comparison_profile"):
        rep = residual_report(target, z, f, 1.0)
        assert rep.passed and rep.max_abs_residual == 0.0


def test_residual_report_modes_and_errors():
    p = Profile.from_function(lambda r: r ** 2, GRID)
    f = NonlinearitySpec.power_law(1.0)
    # (2r)^2 * 2 - r^2 = 7 r^2 >= 0
    rep = residual_report("absorption_supersolution", p, f)
    assert not rep.passed and rep.sign_mode == "<=0"
    assert residual_report("absorption_supersolution", p, f, sign_mode=">=0").passed
    with pytest.raises(UsageError):
        residual_report("nope", p, f)
    with pytest.raises(UsageError):
        residual_report("barrier_ode", p, f, 0.0)
    with pytest.raises(UsageError):
        residual_report("equation", p, f, sign_mode="<")
    sub = residual_report("absorption_supersolution", p, f, interval=(0.5, 0.6), sign_mode=">=0")
    assert np.count_nonzero(np.isfinite(sub.residuals)) == 101


def test_report_pass_rule():
    r = ResidualReport.from_residuals("x", [np.nan, -2.0, 0.5, np.nan], 1.0, "<=0")
    assert r.passed and r.max_abs_residual == 2.0
    assert not ResidualReport.from_residuals("x", [0.0, -2.0], 1.0, "equality").passed
    assert ResidualReport.from_residuals("x", [0.0, -2.0], 1.0, ">=0").worst_node == 1


def test_kink_checks():
    g = np.linspace(0.0, 2.0, 201)
    f = NonlinearitySpec.power_law(1.0)
    smooth = Profile.from_values(g, np.maximum(1.0 - g, 0.0) ** 3, support_edge=1.0)
    assert kink_viscosity_check(smooth, f).ok
    slope = 0.01 * np.where(g <= 1.0, -1.0, 0.0)
    kinked = Profile(g, smooth.values, slope, smooth.second_derivative)
    rep = kink_viscosity_check(kinked, f, edge=1.0)
    assert not rep.ok and rep.failing == ["slope_mismatch"]
    raised = Profile(g, smooth.values + 0.5, smooth.first_derivative, smooth.second_derivative)
    assert set(kink_viscosity_check(raised, f, edge=1.0).failing) == {"value_mismatch",
                                                                      "absorption_nonzero"}
    assert kink_viscosity_check(Profile.from_values(g, g), f).failing == ["no_support_edge"]
    assert kink_viscosity_check(smooth, f, edge=1.005).failing == ["edge_not_a_node"]

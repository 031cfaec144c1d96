import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from inflap import (CONVERGES, DIVERGES, INCONCLUSIVE, GradientTermSpec, Integrand,
                    NonlinearitySpec, classify_integral, eval_F, eval_Gamma, invert_Gamma)
from inflap.errors import DomainError, InvariantViolation, UsageError


def test_power_law_primitive():
    assert eval_F(NonlinearitySpec.power_law(2.0), 1.0) == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert eval_F(NonlinearitySpec.power_law(2.0, 3.0), 2.0) == pytest.approx(8.0, rel=1e-15)


@pytest.mark.parametrize("spec", [
    NonlinearitySpec.power_law(1.5),
    NonlinearitySpec.table([0, 0.5, 1], [0, 1, 1]),
    NonlinearitySpec.piecewise([(0, 1, 1), (1, 2, 1)]),
    NonlinearitySpec.zero(),
])
def test_primitive_vanishes_at_zero(spec):
    assert eval_F(spec, 0.0) == 0.0


def test_table_primitive_matches_trapezoid():
    s = np.linspace(0.0, 1.0, 11)
    assert eval_F(NonlinearitySpec.table(s, s), 1.0) == pytest.approx(0.5, abs=1e-12)


def test_piecewise_evaluation_and_primitive():
    f = NonlinearitySpec.piecewise([(0, 1, 1), (1, 2, 1)])
    assert f(0.5) == 0.5
    assert f(2.0) == 4.0
    # int_0^1 s + int_1^2 s^2
    assert eval_F(f, 2.0) == pytest.approx(0.5 + 7.0 / 3.0, rel=1e-12)


def test_domain_checks():
    f = NonlinearitySpec.power_law(1.0, domain_cap=2.0)
    with pytest.raises(DomainError):
        f(-0.1)
    with pytest.raises(DomainError):
        eval_F(f, 3.0)


@pytest.mark.parametrize("bad", [
    lambda: NonlinearitySpec.power_law(0.0),
    lambda: NonlinearitySpec.power_law(1.0, -1.0),
    lambda: NonlinearitySpec.table([0, 1, 0.5], [0, 1, 2]),
    lambda: NonlinearitySpec.table([0, 1, 2], [0, 2, 1]),
    lambda: NonlinearitySpec.table([0.1, 1], [0, 1]),
    lambda: NonlinearitySpec.piecewise([(0, 1, 1), (1, 2, 5)]),
])
def test_invalid_specs_rejected(bad):
    with pytest.raises(InvariantViolation):
        bad()


def test_scaled_nonlinearity():
    f = NonlinearitySpec.power_law(2.0, 3.0).scaled(0.5)
    assert f(2.0) == pytest.approx(6.0)
    assert NonlinearitySpec.table([0, 1], [0, 2]).scaled(2.0)(0.5) == pytest.approx(2.0)


def test_gamma_examples():
    assert eval_Gamma(GradientTermSpec.zero("L1"), 1.0) == 0.25
    assert eval_Gamma(GradientTermSpec.power_law(1.0), 1.0) == pytest.approx(2.25)
    assert eval_Gamma(GradientTermSpec.zero("L0"), 2.0) == 2.0


def test_gamma_inverse_examples():
    g = GradientTermSpec.zero()
    assert invert_Gamma(g, 0.25) == pytest.approx(1.0, rel=1e-15)
    assert invert_Gamma(g, 4.0) == pytest.approx(2.0, rel=1e-15)
    assert invert_Gamma(GradientTermSpec.power_law(3.0), 0.0) == 0.0


def test_gamma_rejects_negative():
    with pytest.raises(DomainError):
        eval_Gamma(GradientTermSpec.zero(), -1.0)
    with pytest.raises(DomainError):
        invert_Gamma(GradientTermSpec.zero(), -1.0)


def test_gradient_term_tag_checked():
    with pytest.raises(UsageError):
        GradientTermSpec.zero("L2")


@settings(max_examples=200, deadline=None)
@given(y=st.floats(1e-12, 1e6), q=st.floats(0.2, 4.0), tag=st.sampled_from(["L1", "L0"]))
def test_gamma_round_trip(y, q, tag):
    g = GradientTermSpec.power_law(q, 1.0, tag)
    assert eval_Gamma(g, invert_Gamma(g, y)) == pytest.approx(y, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(t1=st.floats(0.0, 50.0), t2=st.floats(0.0, 50.0), q=st.floats(0.1, 5.0))
def test_monotonicity(t1, t2, q):
    lo, hi = sorted((t1, t2))
    f = NonlinearitySpec.power_law(q)
    g = GradientTermSpec.power_law(q)
    assert eval_F(f, lo) <= eval_F(f, hi)
    if 0 < lo < hi:
        assert eval_Gamma(g, lo) < eval_Gamma(g, hi)


@settings(max_examples=300, deadline=None)
@given(a=st.floats(0.0, 1.0), t=st.floats(0.0, 20.0),
       kind=st.sampled_from(["power", "table", "piecewise"]), q=st.floats(0.1, 5.0))
def test_subhomogeneity(a, t, kind, q):
    if kind == "power":
        f = NonlinearitySpec.power_law(q)
    elif kind == "table":
        f = NonlinearitySpec.table([0, 1, 5, 20], [0, 0.5, 4, 30])
    else:
        f = NonlinearitySpec.piecewise([(0, q, 1), (2, 1, 2 ** q / 2)])
    assert eval_F(f, a * t) <= a * eval_F(f, t) * (1 + 1e-12) + 1e-300


def test_classifier_examples():
    f3, f1 = NonlinearitySpec.power_law(3.0), NonlinearitySpec.power_law(1.0)
    assert classify_integral(f3, Integrand.F_power(4)).verdict == DIVERGES
    res = classify_integral(f1, Integrand.F_power(4))
    assert res.verdict == CONVERGES
    # F = s^2/2, integrand 2^{1/4} s^{-1/2}, integral 2 * 2^{1/4}
    assert res.integral_estimate == pytest.approx(2.0 * 2 ** 0.25, rel=1e-8)
    assert res.estimated_singularity_exponent == pytest.approx(0.5, abs=1e-6)
    assert classify_integral(f1, Integrand.F_power(2)).verdict == DIVERGES


@pytest.mark.parametrize("p", [2, 4])
@pytest.mark.parametrize("q", [0.3, 0.5, 0.8, 1.5, 2.0, 2.5, 3.5, 5.0])
def test_dichotomy_ladder(q, p):
    if abs((q + 1) / p - 1) < 0.05:
        pytest.skip("inside the boundary margin")
    res = classify_integral(NonlinearitySpec.power_law(q), Integrand.F_power(p))
    assert res.verdict == (DIVERGES if (q + 1) / p >= 1 else CONVERGES)
    if res.verdict == DIVERGES:
        assert math.isinf(res.integral_estimate)
    else:
        assert 0 < res.integral_estimate < math.inf


def test_boundary_case_never_converges():
    for q, p in ((3.0, 4), (1.0, 2), (2.99, 4)):
        res = classify_integral(NonlinearitySpec.power_law(q), Integrand.F_power(p))
        assert res.verdict in (DIVERGES, INCONCLUSIVE)


def test_classifier_vanishing_flag():
    f = NonlinearitySpec.table([0, 0.5, 1], [0, 0, 1])
    res = classify_integral(f, Integrand.F_power(4))
    assert res.verdict == DIVERGES
    assert "f_vanishes_near_zero" in res.flags


def test_classifier_rejects_bad_delta_and_selector():
    with pytest.raises(DomainError):
        classify_integral(NonlinearitySpec.power_law(1.0), Integrand.F_power(4), 0.0)
    with pytest.raises(UsageError):
        classify_integral(NonlinearitySpec.power_law(1.0), "nope")


def test_named_selectors():
    f = NonlinearitySpec.power_law(1.0)
    assert classify_integral(f, "Finv4").verdict == CONVERGES
    assert classify_integral(f, "Finv2").verdict == DIVERGES
    g = GradientTermSpec.zero()
    assert classify_integral(f, Integrand.named("GammaInvF", g=g)).verdict == CONVERGES
    with pytest.raises(UsageError):
        Integrand.named("Finvp")


@pytest.mark.parametrize("q", [0.5, 1.0, 2.0, 4.0, 6.0])
@pytest.mark.parametrize("tag", ["L1", "L0"])
def test_scaled_integrand_agreement(q, tag):
    f = NonlinearitySpec.power_law(q)
    g = GradientTermSpec.zero(tag)
    plain = classify_integral(f, Integrand.gamma_inverse(g, 1.0)).verdict
    quarter = classify_integral(f, Integrand.gamma_inverse(g, 0.25)).verdict
    assert plain == quarter


def test_result_to_dict_uses_infinity_marker():
    d = classify_integral(NonlinearitySpec.power_law(3.0), "Finv4").to_dict()
    assert d["integral_estimate"] == "infinity"
    assert d["verdict"] == DIVERGES

"""Dead-core supersolution profiles.

The profile phi is defined implicitly by

    t = int_0^phi(t) ds / Gamma^-1(F(s)/4),

so that Gamma(phi') = F(phi)/4 with phi(0) = phi'(0) = 0.  Near t = 0 it
satisfies (phi')^2 phi'' + G(phi') - f(phi)/2 <= 0 (phi'' + ... for the
normalized operator), and v(x) = phi(R + r_circ - |x|), extended by zero,
is a compactly supported supersolution outside the ball of radius R.
"""

import warnings

import numpy as np

from .errors import DivergentIntegral, DomainError, GluingError, NoValidRadius
from .nonlinearity import CONVERGES, DIVERGES, Integrand, classify_integral
from .profile import GLUING_TOL, Profile
from .radial_ops import kink_viscosity_check
from ._quadrature import SingularPrimitive

__all__ = ["Profile", "build_deadcore_profile", "determine_r_circ",
           "assemble_radial_supersolution", "deadcore_inequality", "deadcore_time_to"]


def _primitive_covering(integrand, horizon, cap):
    upper = min(1.0, cap)
    while True:
        prim = SingularPrimitive(integrand, upper)
        if prim.total >= horizon:
            return prim
        if upper >= cap:
            raise DomainError(f"horizon {horizon} exceeds the tabulated range "
                              f"(t reaches {prim.total:.6g} at phi = {upper:.3g})")
        upper = min(10.0 * upper, cap)


def _integrand(f, g):
    def integrand(s):
        return 1.0 / g.gamma_inverse(0.25 * f.primitive(s))
    return integrand


def deadcore_time_to(f, g, level=1.0):
    """The t at which the dead-core profile reaches ``level``, i.e.
    int_0^level ds / Gamma^-1(F(s)/4)."""
    if not 0 < level <= f.domain_cap:
        raise DomainError("level must lie in (0, domain_cap]")
    return float(SingularPrimitive(_integrand(f, g), level).total)


def build_deadcore_profile(f, g, horizon, n=2001):
    """Tabulate phi on a uniform grid of ``n`` nodes over [0, horizon].

    phi' comes from the exact relation phi' = Gamma^-1(F(phi)/4) and phi''
    from its derivative, phi'' = f(phi) phi' / (4 Gamma'(phi')), which holds
    for any continuous f.  At t = 0 the latter is 0/0 and phi'' is
    extrapolated linearly from the next two nodes.
    """
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    if n < 3:
        raise DomainError("need at least 3 nodes")
    selector = Integrand.gamma_inverse(g, 0.25)
    res = classify_integral(f, selector, min(1.0, f.domain_cap))
    if res.verdict == DIVERGES:
        raise DivergentIntegral("int_0 ds / Gamma^-1(F(s)/4) diverges; no dead-core profile "
                                f"exists (flags: {res.flags})")
    if res.verdict != CONVERGES:
        warnings.warn("the integral classifier is inconclusive; building the profile anyway",
                      RuntimeWarning, stacklevel=2)

    prim = _primitive_covering(_integrand(f, g), horizon, f.domain_cap)
    t = np.linspace(0.0, horizon, n)
    phi = prim.inverse(t)
    phi[0] = 0.0
    d1 = g.gamma_inverse(0.25 * f.primitive(phi))
    d2 = np.empty_like(phi)
    with np.errstate(divide="ignore", invalid="ignore"):
        d2[1:] = f(phi[1:]) * d1[1:] / (4.0 * g.gamma_prime(d1[1:]))
    d2[0] = 2.0 * d2[1] - d2[2]
    meta = {"operator_tag": g.operator_tag, "horizon": float(horizon), "f": f.describe(),
            "G": g.term.describe()}
    return Profile(t, phi, d1, d2, None, "deadcore", meta)


def deadcore_inequality(profile, f, g):
    """Nodewise value of (phi')^2 phi'' + G(phi') - f(phi)/2 (L1) or
    phi'' + G(phi') - f(phi)/2 (L0)."""
    d1, d2 = profile.first_derivative, profile.second_derivative
    op = d1 * d1 * d2 if g.operator_tag == "L1" else d2
    return op + g(d1) - 0.5 * f(profile.values)


def determine_r_circ(profile, f, g, *, report=False):
    """Largest node r such that the dead-core inequality holds at every node
    of (0, r].

    With ``report=True`` also returns a dict of diagnostics: where the two
    intermediate bounds G(phi') <= f(phi)/4 and (phi')^2 phi'' <= f(phi)/4
    (phi'' <= f(phi)/4 for L0) first fail, and the bound phi <= phi' on t <= 1.
    """
    t = profile.grid
    phi, d1, d2 = profile.values, profile.first_derivative, profile.second_derivative
    val = deadcore_inequality(profile, f, g)
    quarter = 0.25 * f(phi)
    op = d1 * d1 * d2 if g.operator_tag == "L1" else d2
    scale = np.abs(op) + np.abs(g(d1)) + 0.5 * np.abs(f(phi))
    ok = val <= 1e-12 * scale
    if not ok[1]:
        raise NoValidRadius(f"the dead-core inequality already fails at t={t[1]:.6g}")
    bad = np.flatnonzero(~ok[1:])
    k = int(bad[0]) if bad.size else t.size - 1
    r_circ = float(t[k])
    if not report:
        return r_circ

    def first_failure(mask):
        idx = np.flatnonzero(~mask[1:])
        return None if idx.size == 0 else float(t[1 + idx[0]])

    gradient_ok = g(d1) <= quarter * (1 + 1e-12)
    operator_ok = op <= quarter * (1 + 1e-12) + 1e-300
    small = t <= 1.0
    diag = {
        "r_circ": r_circ,
        "gradient_bound_first_failure": first_failure(gradient_ok),
        "operator_bound_first_failure": first_failure(operator_ok),
        "phi_below_slope_on_unit": bool(np.all(phi[small] <= d1[small] * (1 + 1e-12))),
        "inequality_first_failure": first_failure(ok),
    }
    return r_circ, diag


def assemble_radial_supersolution(profile, R, r_circ, tail=None, f=None):
    """Radial profile r -> phi(R + r_circ - r) on [R, R + r_circ], zero
    beyond, sampled on the spacing of ``profile``.

    ``tail`` is the length of the zero extension (default r_circ).  The
    viscosity clause at the edge is recorded in the metadata; pass ``f`` to
    include f(v) = 0 there in that check.  Raises
    GluingError if phi(0) or phi'(0) exceed the gluing tolerance.
    """
    if not R > 0:
        raise DomainError("R must be positive")
    k = profile.node_index(r_circ)
    if k is None or k == 0:
        raise DomainError(f"r_circ={r_circ} must be a positive node of the profile")
    if abs(profile.values[0]) > GLUING_TOL or abs(profile.first_derivative[0]) > GLUING_TOL:
        raise GluingError(f"phi(0)={profile.values[0]:.3e}, phi'(0)="
                          f"{profile.first_derivative[0]:.3e} exceed the gluing tolerance")
    h = profile.h
    tail = r_circ if tail is None else tail
    m = max(2, int(round(tail / h)))
    t = profile.grid[: k + 1][::-1]
    edge = R + r_circ
    r = np.concatenate([R + (r_circ - t), edge + h * np.arange(1, m + 1)])
    r[k] = edge
    zeros = np.zeros(m)
    values = np.concatenate([profile.values[: k + 1][::-1], zeros])
    d1 = np.concatenate([-profile.first_derivative[: k + 1][::-1], zeros])
    d2 = np.concatenate([profile.second_derivative[: k + 1][::-1], zeros])
    meta = dict(profile.metadata, R=float(R), r_circ=float(r_circ))
    out = Profile(r, values, d1, d2, edge, "deadcore", meta)
    kink = kink_viscosity_check(out, f if f is not None else (lambda s: 0.0))
    out.metadata["viscosity_clause_at_edge"] = kink.ok
    return out

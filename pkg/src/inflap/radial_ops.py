"""Radial calculus for the infinity Laplacian and its normalized version.

For u(x) = phi(|x - x0|) the gradient is parallel to x - x0, so the
infinity Laplacian reduces to (phi')**2 * phi'' in every dimension and the
normalized operator to phi'' wherever phi' != 0.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CriticalPointError, DomainError, UsageError
from .nonlinearity import GradientTermSpec
from .profile import GLUING_TOL, split_fd

SIGN_MODES = ("equality", "<=0", ">=0")


@dataclass
class ResidualReport:
    """Pointwise residuals of one (in)equality, aligned with the profile grid.

    Nodes that were not evaluated hold NaN.  ``checks`` collects additional
    named pass/fail conditions folded into ``passed``.
    """

    target: str
    residuals: np.ndarray
    max_abs_residual: float
    worst_node: int
    tolerance: float
    passed: bool
    sign_mode: str
    checks: dict = field(default_factory=dict)
    failure_location: float = None
    skipped_nodes: int = 0

    @classmethod
    def from_residuals(cls, target, residuals, tolerance, sign_mode, skipped=0):
        r = np.asarray(residuals, dtype=float)
        finite = np.isfinite(r)
        if not finite.any():
            return cls(target, r, 0.0, -1, tolerance, True, sign_mode, skipped_nodes=skipped)
        absr = np.where(finite, np.abs(r), -np.inf)
        if sign_mode == "equality":
            viol = absr
        elif sign_mode == "<=0":
            viol = np.where(finite, r, -np.inf)
        else:
            viol = np.where(finite, -r, -np.inf)
        worst = int(np.argmax(viol))
        passed = bool(viol[worst] <= tolerance)
        return cls(target, r, float(absr.max()), worst, tolerance, passed, sign_mode,
                   skipped_nodes=skipped)

    def add_check(self, name, ok, location=None):
        self.checks[name] = bool(ok)
        if not ok:
            self.passed = False
            if self.failure_location is None:
                self.failure_location = location

    def to_dict(self, include_residuals=False):
        out = {
            "target": self.target,
            "max_abs_residual": self.max_abs_residual,
            "worst_node": self.worst_node,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "sign_mode": self.sign_mode,
            "checks": dict(self.checks),
            "failure_location": self.failure_location,
            "skipped_nodes": self.skipped_nodes,
        }
        if include_residuals:
            out["residuals"] = [None if not math.isfinite(v) else float(v) for v in self.residuals]
        return out


def _check_tag(tag):
    if tag not in ("L1", "L0"):
        raise UsageError(f"operator tag must be 'L1' or 'L0', got {tag!r}")


def apply_operator_radial(operator_tag, profile, r, critical_tol=0.0):
    """Value of the radial operator at an interior point ``r``.

    L1 gives (phi')**2 phi''; L0 gives phi'' and refuses points where the
    slope vanishes, since there only the viscosity clause applies.
    """
    _check_tag(operator_tag)
    if not profile.grid[0] < r < profile.grid[-1]:
        raise DomainError(f"r={r} is not strictly inside the profile grid")
    _, d1, d2 = profile.at(r)
    if operator_tag == "L1":
        return float(d1 * d1 * d2)
    if abs(d1) <= critical_tol:
        raise CriticalPointError(
            f"normalized operator undefined at r={r} (phi'=0); use kink_viscosity_check")
    return float(d2)


def operator_values(operator_tag, profile, critical_tol=0.0):
    """Radial operator at every node; NaN where L0 meets a critical point."""
    _check_tag(operator_tag)
    d1, d2 = profile.first_derivative, profile.second_derivative
    if operator_tag == "L1":
        return d1 * d1 * d2
    return np.where(np.abs(d1) > critical_tol, d2, np.nan)


def _gradient(g_or_K, tag):
    if isinstance(g_or_K, GradientTermSpec):
        return g_or_K
    return GradientTermSpec.from_K(float(g_or_K or 0.0), tag)


def _K(g_or_K):
    if isinstance(g_or_K, GradientTermSpec):
        raise UsageError("this target needs a constant K, not a gradient term")
    return float(g_or_K or 0.0)


def _f_ext(f, x):
    return f(np.maximum(x, 0.0))


# Each target maps a context to a residual array; the second entry is the
# default sign mode.
def _barrier_ode(p, c):
    K, alpha = _K(c["g"]), c["alpha"]
    d1 = p.first_derivative
    # f(max(phi, 0)) has a kink where phi crosses 0; differentiate on each side
    R = p.metadata.get("R", p.grid[-1])
    if c["tag"] == "L0":
        return split_fd(d1, p.grid, R) + K * d1 - _f_ext(c["f"], p.values) + alpha
    w = d1 ** 3
    dw = split_fd(w, p.grid, R)
    if c.get("form", "divergence") == "radial":
        dw = dw / 3.0
    return dw + K * w - _f_ext(c["f"], p.values) + alpha


def _smp_barrier(p, c):
    K = _K(c["g"])
    d1 = p.first_derivative
    grad = np.abs(d1) ** 3 if c["tag"] == "L1" else np.abs(d1)
    return operator_values(c["tag"], p) - K * grad - _f_ext(c["f"], p.values)


def _deadcore_identity(p, c):
    g = _gradient(c["g"], c["tag"])
    return g.gamma(p.first_derivative) - 0.25 * c["f"].primitive(p.values)


def _half_absorption(p, c):
    g = _gradient(c["g"], c["tag"])
    return operator_values(c["tag"], p) + g(np.abs(p.first_derivative)) - 0.5 * c["f"](p.values)


def _comparison_profile(p, c):
    h = 4.0 * c["kappa"] * c["f"](p.values)
    return operator_values(c["tag"], p) - 0.25 * h


def _csp_ode(p, c):
    K = _K(c["g"])
    d1 = p.first_derivative
    h = 4.0 * c["kappa"] * c["f"](p.values)
    if c["tag"] == "L1":
        return d1 * d1 * p.second_derivative - K * d1 ** 3 - 2.0 * h
    return p.second_derivative - K * d1 - 2.0 * h


def _compact_solution(p, c):
    K = _K(c["g"])
    d1 = np.abs(p.first_derivative)
    grad = d1 ** 3 if c["tag"] == "L1" else d1
    return operator_values(c["tag"], p) + K * grad - c["f"](p.values)


def _absorption_supersolution(p, c):
    return operator_values(c["tag"], p) - c["f"](p.values)


def _equation(p, c):
    g = _gradient(c["g"], c["tag"])
    return operator_values(c["tag"], p) + g(np.abs(p.first_derivative)) - c["f"](p.values)


TARGETS = {
    "barrier_ode": (_barrier_ode, "equality"),
    "smp_barrier": (_smp_barrier, ">=0"),
    "deadcore_identity": (_deadcore_identity, "equality"),
    "deadcore_supersolution": (_half_absorption, "<=0"),
    "radial_supersolution": (_half_absorption, "<=0"),
    "comparison_profile": (_comparison_profile, "equality"),
    "csp_ode": (_csp_ode, "equality"),
    "compact_solution": (_compact_solution, "equality"),
    "absorption_supersolution": (_absorption_supersolution, "<=0"),
    "equation": (_equation, "equality"),
}


def residual_report(target, profile, f, g_or_K=None, operator_tag="L1", sign_mode=None, *,
                    tolerance=1e-8, alpha=None, kappa=0.125, form=None, nodes="interior",
                    interval=None):
    """Evaluate a named (in)equality on a profile.

    ``nodes`` selects ``'interior'`` (drop the two end nodes) or ``'all'``;
    ``interval=(a, b)`` further restricts evaluation to a <= t <= b.
    Barrier targets need ``alpha``; the constant-K targets take a float in
    ``g_or_K``, the others a :class:`GradientTermSpec` (a float K is turned
    into K s^3 for L1 and K s for L0).
    """
    if target not in TARGETS:
        raise UsageError(f"unknown residual target {target!r}; known: {sorted(TARGETS)}")
    _check_tag(operator_tag)
    func, default_mode = TARGETS[target]
    mode = sign_mode or default_mode
    if mode not in SIGN_MODES:
        raise UsageError(f"sign mode must be one of {SIGN_MODES}")
    if target in ("barrier_ode",) and alpha is None:
        raise UsageError("barrier targets need alpha")
    ctx = {"f": f, "g": g_or_K, "tag": operator_tag, "alpha": alpha, "kappa": kappa,
           "form": form or profile.metadata.get("form", "divergence")}
    with np.errstate(invalid="ignore"):
        r = np.asarray(func(profile, ctx), dtype=float)
    mask = np.ones(r.size, dtype=bool)
    if nodes == "interior":
        mask[[0, -1]] = False
    elif nodes != "all":
        raise UsageError("nodes must be 'interior' or 'all'")
    if interval is not None:
        a, b = interval
        mask &= (profile.grid >= a - 1e-12) & (profile.grid <= b + 1e-12)
    skipped = int(np.count_nonzero(mask & ~np.isfinite(r)))
    r = np.where(mask, r, np.nan)
    return ResidualReport.from_residuals(target, r, tolerance, mode, skipped)


def counterexample_eval(alpha, r):
    """2 e^{3r} - e^{3 alpha r}: the value of Delta_inf u + |Du|^3 - u^{3 alpha}
    for u = e^{|x|} at |x| = r, which stays positive for unbounded u."""
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("r must be nonnegative")
    out = 2.0 * np.exp(3.0 * r) - np.exp(3.0 * alpha * r)
    return float(out) if out.ndim == 0 else out


@dataclass
class KinkReport:
    ok: bool
    edge: float
    value: float
    slope: float
    f_value: float
    failing: list = field(default_factory=list)

    def __bool__(self):
        return self.ok

    def to_dict(self):
        return {"ok": self.ok, "edge": self.edge, "value": self.value, "slope": self.slope,
                "f_value": self.f_value, "failing": list(self.failing)}


def kink_viscosity_check(profile, f, edge=None, tol=GLUING_TOL):
    """Check the gradient-vanishing viscosity clause at a support edge.

    Any C^2 test touching a C^1 profile at the edge has zero gradient there;
    if in addition the value (hence f of it) vanishes, every operator term
    and the absorption vanish and the clause holds for all admissible
    touchings.  So the check reduces to: value, one-sided slopes and f(value)
    vanish at the edge.
    """
    edge = profile.support_edge if edge is None else edge
    if edge is None:
        return KinkReport(False, math.nan, math.nan, math.nan, math.nan, ["no_support_edge"])
    k = profile.node_index(edge)
    if k is None:
        return KinkReport(False, edge, math.nan, math.nan, math.nan, ["edge_not_a_node"])
    value = float(profile.values[k])
    slope = float(profile.first_derivative[k])
    fval = float(f(max(value, 0.0)))
    failing = []
    if abs(value) > tol:
        failing.append("value_mismatch")
    if abs(slope) > tol:
        failing.append("slope_mismatch")
    if abs(fval) > tol:
        failing.append("absorption_nonzero")
    return KinkReport(not failing, float(edge), value, slope, fval, failing)

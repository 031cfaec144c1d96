"""Barrier profiles used to prove positivity of supersolutions.

For alpha < 0 the barrier solves the terminal value problem

    ((phi')^3)' + K (phi')^3 - f(phi) + alpha = 0,   phi(R) = 0, phi'(R) = alpha   (L1)
    phi''       + K phi'     - f(phi) + alpha = 0,   phi(R) = 0, phi'(R) = alpha   (L0)

on (R/2, R + eps1), with 0 < phi < eps and phi' < 0 on (R/2, R).  It is
built window by window from R towards R/2 by Picard iteration of the
integrated form

    phi(t) = xi - int_t^t0 ( e^{K(t0-s)} gamma^3 - int_s^t0 e^{K(z-s)} f_alpha(phi(z)) dz )^{1/3} ds,

where f_alpha = f - alpha, extended by -alpha for negative arguments.
Whenever phi reaches eps (or |phi'| its cap) before R/2, |alpha| is halved
and the construction restarts.

``form='radial'`` solves (phi')^2 phi'' + K (phi')^3 - f(phi) + alpha = 0
instead, which is the identity the radial barrier u = phi(|x - x0|) needs
to satisfy  Delta_inf u - K |Du|^3 - f(u) = -alpha > 0.  The two L1 forms
differ by a factor 3 on the derivative term.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConvergenceFailure, InvariantViolation, NoBarrier, UsageError
from .nonlinearity import CONVERGES, Integrand, classify_integral
from .profile import Profile, split_fd
from .radial_ops import ResidualReport, residual_report


@dataclass(frozen=True)
class BarrierConfig:
    operator_tag: str = "L1"
    K: float = 0.0
    R: float = 0.8
    eps: float = 0.5
    alpha_init: float = -0.1
    M1: float = 1.0
    M2: float = None
    step_cap: float = None
    grid_resolution: int = 4000
    form: str = "divergence"
    fixed_point_tol: float = 1e-12
    max_iterations: int = 500
    alpha_floor: float = None

    def __post_init__(self):
        if self.operator_tag not in ("L1", "L0"):
            raise UsageError("operator_tag must be 'L1' or 'L0'")
        if self.form not in ("divergence", "radial"):
            raise UsageError("form must be 'divergence' or 'radial'")
        if not 0.0 < self.R < 1.0:
            raise InvariantViolation("R must lie in (0, 1)")
        if not 0.0 < self.eps < 1.0:
            raise InvariantViolation("eps must lie in (0, 1)")
        if not self.alpha_init < 0.0:
            raise InvariantViolation("alpha_init must be negative")
        if self.M1 < self.eps:
            raise InvariantViolation("M1 must be at least eps")
        if self.K < 0:
            raise InvariantViolation("K must be nonnegative")
        if self.grid_resolution < 4:
            raise InvariantViolation("grid_resolution too small")

    @property
    def coefficient(self):
        # factor on K and on the absorption once w = (phi')^3 is isolated
        return 3.0 if (self.operator_tag == "L1" and self.form == "radial") else 1.0

    @property
    def window(self):
        return self.step_cap if self.step_cap is not None else min(0.05, self.R / 20.0)

    def slope_cap(self, f, alpha):
        """Default cap on |phi'|: the energy bound on [R/2, R] plus one."""
        if self.M2 is not None:
            return self.M2
        F1 = float(f.primitive(min(1.0, f.domain_cap))) - alpha
        if self.operator_tag == "L1":
            Kt = 4.0 * self.coefficient * self.K / 3.0
            e = math.exp(Kt * self.R / 2.0)
            return (e * alpha ** 4 + 4.0 * self.coefficient / 3.0 * e * F1) ** 0.25 + 1.0
        e = math.exp(self.K * self.R)
        return (e * (alpha ** 2 + 2.0 * F1)) ** 0.5 + 1.0


@dataclass
class BarrierResult:
    profile: Profile
    alpha: float
    eps1: float
    residual: ResidualReport
    shrink_iterations: int
    verdict: str = None


def _f_alpha(f, alpha):
    def fa(x):
        return f(np.maximum(x, 0.0)) - alpha
    return fa


def _solve_window(nodes, xi, gamma, fa, K, a, tag, tol, max_iter):
    """Fixed point of the integral map on one window.  ``nodes`` start at
    the window anchor t0 and run away from it (either direction)."""
    E = np.exp(a * K * (nodes - nodes[0]))
    g = xi + gamma * (nodes - nodes[0])
    damping, prev = 1.0, math.inf
    for it in range(max_iter):
        inner = -cumulative_trapezoid(E * fa(g), nodes, initial=0.0) / E
        if tag == "L1":
            d = np.cbrt(gamma ** 3 / E - a * inner)
        else:
            d = gamma / E - inner
        new = xi + cumulative_trapezoid(d, nodes, initial=0.0)
        change = float(np.max(np.abs(new - g)))
        if change <= tol:
            return new, d
        if change > prev:
            damping = 0.5
        g = g + damping * (new - g)
        prev = change
    raise ConvergenceFailure(f"barrier window at t0={nodes[0]:.6g} did not converge "
                             f"(last change {change:.3e})", last_iterate=g)


def _attempt(cfg, f, alpha):
    R = cfg.R
    N = cfg.grid_resolution
    h = (R / 2.0) / N
    m = max(1, int(round(cfg.window / h)))
    t = R / 2.0 + h * np.arange(N + 1)
    t[-1] = R
    phi = np.empty(N + 1)
    dphi = np.empty(N + 1)
    phi[-1], dphi[-1] = 0.0, alpha
    fa = _f_alpha(f, alpha)
    a = cfg.coefficient
    M2 = cfg.slope_cap(f, alpha)

    i0 = N
    while i0 > 0:
        i1 = max(0, i0 - m)
        if abs(phi[i0]) > cfg.M1:
            return None
        nodes = t[i1:i0 + 1][::-1]
        v, d = _solve_window(nodes, phi[i0], dphi[i0], fa, cfg.K, a, cfg.operator_tag,
                             cfg.fixed_point_tol, cfg.max_iterations)
        phi[i1:i0 + 1] = v[::-1]
        dphi[i1:i0 + 1] = d[::-1]
        if np.max(v) >= cfg.eps or np.max(np.abs(d)) >= M2:
            return None
        i0 = i1

    right = R + h * np.arange(m + 1)
    v, d = _solve_window(right, 0.0, alpha, fa, cfg.K, a, cfg.operator_tag,
                         cfg.fixed_point_tol, cfg.max_iterations)
    # past R the slope climbs towards 0, where phi'' blows up (L1); stop while phi' <= alpha/2
    keep = 1 + int(np.argmax(d[1:] > alpha / 2.0)) if np.any(d[1:] > alpha / 2.0) else m + 1
    keep = max(keep, 2)
    grid = np.concatenate([t, right[1:keep]])
    values = np.concatenate([phi, v[1:keep]])
    slopes = np.concatenate([dphi, d[1:keep]])
    return grid, values, slopes, (keep - 1) * h


def build_barrier(cfg, f):
    """Construct the barrier for ``cfg`` and absorption ``f``.

    The construction is guaranteed to terminate with a small enough |alpha|
    when the matching integral (F^-1/4 for L1, F^-1/2 for L0) diverges; if
    the classifier says it converges a warning is issued and the attempt
    proceeds anyway.
    """
    selector = Integrand.F_power(4.0 if cfg.operator_tag == "L1" else 2.0)
    verdict = classify_integral(f, selector, 1.0 if f.domain_cap >= 1 else f.domain_cap).verdict
    if verdict == CONVERGES:
        warnings.warn("the divergence hypothesis fails for this f; the barrier may not exist "
                      "for small eps", RuntimeWarning, stacklevel=2)

    floor = cfg.alpha_floor if cfg.alpha_floor is not None else 1e-8 * abs(cfg.alpha_init)
    alpha = cfg.alpha_init
    shrinks = 0
    while abs(alpha) >= floor:
        out = _attempt(cfg, f, alpha)
        if out is not None:
            grid, values, slopes, eps1 = out
            meta = {"alpha": alpha, "R": cfg.R, "K": cfg.K, "operator_tag": cfg.operator_tag,
                    "form": cfg.form, "eps": cfg.eps}
            profile = Profile(grid, values, slopes, split_fd(slopes, grid, cfg.R), None,
                              "barrier", meta)
            result = BarrierResult(profile, alpha, eps1, None, shrinks, verdict)
            result.residual = verify_barrier(result, cfg, f)
            return result
        alpha /= 2.0
        shrinks += 1
    raise NoBarrier(f"|alpha| fell below {floor:.3g} after {shrinks} halvings; the divergence "
                    "condition is likely violated or the grid is too coarse")


def verify_barrier(result, cfg, f, tolerance=1e-6, energy_rtol=1e-6):
    """ODE residual plus terminal, sign, convexity and energy checks.

    The energy check is (phi')^4 <= e^{Kt R/2} (alpha^4 + (4c/3) F_alpha(phi))
    with Kt = 4cK/3 (c = 1, or 3 for the radial form) for L1, and
    (phi')^2 <= e^{K R} (alpha^2 + 2 F_alpha(phi)) for L0, on [R/2, R].
    For K = 0 both hold with equality, so quadrature error in phi needs the
    relative slack ``energy_rtol``.
    """
    p = result.profile
    alpha = result.alpha
    R = cfg.R
    rep = residual_report("barrier_ode", p, f, cfg.K, cfg.operator_tag, alpha=alpha,
                          form=cfg.form, nodes="all", tolerance=tolerance)
    kR = p.node_index(R)
    if kR is None:
        rep.add_check("terminal_node", False, R)
        return rep
    rep.add_check("terminal_value", abs(p.values[kR]) <= 1e-12, R)
    rep.add_check("terminal_slope", abs(p.first_derivative[kR] - alpha) <= 1e-12 * max(1.0, abs(alpha)), R)

    inside = (p.grid > R / 2.0 + 1e-12) & (p.grid < R - 1e-12)
    phi, d1, d2 = p.values, p.first_derivative, p.second_derivative
    ok = (phi > 0) & (phi < cfg.eps) & (d1 < 0)
    bad = np.flatnonzero(inside & ~ok)
    rep.add_check("sign", bad.size == 0, float(p.grid[bad[0]]) if bad.size else None)
    bad = np.flatnonzero(inside & ~(d2 > 0))
    rep.add_check("convexity", bad.size == 0, float(p.grid[bad[0]]) if bad.size else None)

    closed = (p.grid >= R / 2.0 - 1e-12) & (p.grid <= R + 1e-12)
    F_alpha = f.primitive(np.maximum(phi[closed], 0.0)) - alpha * np.maximum(phi[closed], 0.0)
    if cfg.operator_tag == "L1":
        c = cfg.coefficient
        e = math.exp(4.0 * c * cfg.K / 3.0 * R / 2.0)
        lhs, rhs = d1[closed] ** 4, e * (alpha ** 4 + 4.0 * c / 3.0 * F_alpha)
    else:
        e = math.exp(cfg.K * R)
        lhs, rhs = d1[closed] ** 2, e * (alpha ** 2 + 2.0 * F_alpha)
    bad = np.flatnonzero(lhs > rhs * (1.0 + energy_rtol))
    rep.add_check("energy", bad.size == 0, float(p.grid[closed][bad[0]]) if bad.size else None)
    return rep

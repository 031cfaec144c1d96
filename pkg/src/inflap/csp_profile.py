"""Compactly supported radial solutions outside the unit ball.

With h = 4 kappa f and H(t) = int_0^t h, the comparison profile phi on
[0, R] is defined by r = int_phi(r)^1 H(s)^{-1/4} ds, so phi(0) = 1,
phi(R) = phi'(R) = 0 and (phi')^2 phi'' = h(phi)/4.  The solution profile
psi is the fixed point on [R - delta, R] of

    (Tg)(t) = int_t^R [ int_s^R 6 e^{3K(s - z)} h(g(z)) dz ]^{1/3} ds,

which solves (psi')^2 psi'' - K (psi')^3 - 2 h(psi) = 0 with
psi(R) = psi'(R) = 0.  Since 2h = 8 kappa f, the glued function
v(x) = psi(|x| + r_circ), r_circ = R - delta - 1, solves
Delta_inf v + K |Dv|^3 - 8 kappa f(v) = 0 for |x| > 1.

For the normalized operator (tag ``L0``) the same pipeline uses
phi' = -(H/2)^{1/2}, the map with kernel 2 e^{K(s - z)} and no cube root,
and the ODE psi'' - K psi' - 2 h(psi) = 0.  This normalized variant is
derived here by analogy with the L1 construction rather than taken from a
published formula.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline

from .errors import (ConvergenceFailure, DivergentIntegral, DomainError, GeometryError,
                     InvariantViolation, UsageError)
from .nonlinearity import DIVERGES, Integrand, classify_integral
from .profile import Profile, fd_first
from .radial_ops import ResidualReport, kink_viscosity_check, residual_report
from ._quadrature import SingularPrimitive

LN8 = math.log(8.0)


@dataclass(frozen=True)
class CspConfig:
    K: float = 1.0
    kappa: float = 0.125
    delta: float = None
    fixed_point_tolerance: float = 1e-12
    max_iterations: int = 500
    n: int = 2048
    operator_tag: str = "L1"
    residual_tolerance: float = 1e-6

    def __post_init__(self):
        if self.operator_tag not in ("L1", "L0"):
            raise UsageError("operator_tag must be 'L1' or 'L0'")
        if self.K < 0:
            raise InvariantViolation("K must be nonnegative")
        if not self.kappa > 0:
            raise InvariantViolation("kappa must be positive")
        if self.delta is not None:
            if not self.delta > 0:
                raise InvariantViolation("delta must be positive")
            if self.delta > self.delta_kernel_cap * (1 + 1e-12):
                raise InvariantViolation(
                    f"delta={self.delta} violates the kernel condition delta <= "
                    f"{self.delta_kernel_cap:.6g}")
        if self.n < 5:
            raise InvariantViolation("n must be at least 5")

    @property
    def kernel_rate(self):
        return 3.0 * self.K if self.operator_tag == "L1" else self.K

    @property
    def delta_kernel_cap(self):
        """Largest delta with 8 e^{-3K delta} >= 1 (8 e^{-K delta} >= 1 for L0)."""
        return math.inf if self.K == 0 else LN8 / self.kernel_rate

    def delta_sup_cap(self, M):
        """Largest delta keeping every iterate below 1, given M = sup h on [0, 1]."""
        if M <= 0:
            return math.inf
        if self.operator_tag == "L1":
            return (4.0 / (3.0 * (6.0 * M) ** (1.0 / 3.0))) ** 0.75
        return M ** -0.5

    def lipschitz_bound(self, M, delta):
        if self.operator_tag == "L1":
            return (6.0 * M * delta) ** (1.0 / 3.0)
        return 2.0 * M * delta

    def sup_bound(self, M, delta):
        if self.operator_tag == "L1":
            return 0.75 * (6.0 * M) ** (1.0 / 3.0) * delta ** (4.0 / 3.0)
        return M * delta * delta


@dataclass
class CspResult:
    support_radius_R: float
    phi: Profile
    psi: Profile
    r_circ: float
    assembled: Profile
    residual: ResidualReport
    iterations: int
    lipschitz_bound: float
    delta: float
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "support_radius_R": self.support_radius_R,
            "r_circ": self.r_circ,
            "delta": self.delta,
            "iterations": self.iterations,
            "lipschitz_bound": self.lipschitz_bound,
            "support_edge": self.assembled.support_edge,
            "residual": self.residual.to_dict(),
            "notes": list(self.notes),
        }


def _h(f, kappa):
    return f.scaled(4.0 * kappa)


def compute_support_radius(f, kappa=0.125, operator_tag="L1", n=2049):
    """Support radius R and the comparison profile phi on [0, R].

    R = int_0^1 H^{-1/4} (L1) or int_0^1 (H/2)^{-1/2} (L0).  phi is sampled
    on ``n`` uniform nodes; phi' is the exact -H(phi)^{1/4}
    (-(H(phi)/2)^{1/2}) and phi'' the exact h/(4 H^{1/2}) (h/4).
    """
    if f.domain_cap < 1.0:
        raise DomainError("f must be defined on [0, 1]")
    h = _h(f, kappa)
    if operator_tag == "L1":
        selector = Integrand.F_power(4.0, 4.0 * kappa)
    elif operator_tag == "L0":
        selector = Integrand.F_power(2.0, 2.0 * kappa)
    else:
        raise UsageError("operator_tag must be 'L1' or 'L0'")
    res = classify_integral(f, selector, 1.0)
    if res.verdict == DIVERGES:
        raise DivergentIntegral(f"{selector.label()} is not integrable at 0; no finite support "
                                f"radius (flags: {res.flags})")

    def integrand(s):
        return selector(f, s)

    prim = SingularPrimitive(integrand, 1.0)
    R = float(prim.total)
    r = np.linspace(0.0, R, n)
    phi = prim.inverse(np.clip(R - r, 0.0, R))
    phi[0], phi[-1] = 1.0, 0.0
    H = h.primitive(phi)
    if operator_tag == "L1":
        d1 = -H ** 0.25
        with np.errstate(divide="ignore", invalid="ignore"):
            d2 = h(phi) / (4.0 * np.sqrt(H))
    else:
        d1 = -np.sqrt(0.5 * H)
        d2 = 0.25 * h(phi)
    if not np.isfinite(d2[-1]):
        d2[-1] = 2.0 * d2[-2] - d2[-3]
    meta = {"operator_tag": operator_tag, "kappa": kappa, "R": R, "role": "comparison"}
    return R, Profile(r, phi, d1, d2, None, "csp", meta)


def _apply_map(g, t, hf, K, tag):
    """One application of the fixed-point map; returns (Tg, slope of Tg)."""
    R = t[-1]
    rate = 3.0 * K if tag == "L1" else K
    weight = 6.0 if tag == "L1" else 2.0
    # integrals over [s, R] accumulated in the distance x = R - s
    x = (R - t)[::-1]
    e = np.exp(-rate * (t - t[0]))
    W = weight * cumulative_simpson((e * hf(g))[::-1], x=x, initial=0.0)[::-1] / e
    W = np.maximum(W, 0.0)
    slope = -np.cbrt(W) if tag == "L1" else -W
    # Simpson sums can dip a few ulps below 0 where the integrand vanishes
    Tg = np.maximum(cumulative_simpson(-slope[::-1], x=x, initial=0.0)[::-1], 0.0)
    return Tg, slope


def _phi_on(phi, t):
    spline = CubicHermiteSpline(phi.grid, phi.values, phi.first_derivative)
    return np.maximum(spline(t), 0.0)


def build_psi(f, cfg, R, phi, delta=None):
    """Iterate the fixed-point map from g0 = phi on [R - delta, R].

    Both integrals use cumulative Simpson sums: the linearized map is
    neutral along (R - t), so an O(h) error in the first cells next to R
    would persist in the fixed point.  psi' is taken from the map itself (so psi'(R) = 0 exactly) and psi''
    by finite differences of psi', which keeps the ODE residual an
    independent check.  Each iterate is checked against the admissible
    set (psi >= phi, |psi| <= 1, Lipschitz bound).
    """
    delta = delta if delta is not None else default_delta(f, cfg)
    if delta > R:
        raise DomainError(f"delta={delta} exceeds the support radius {R}")
    t = np.linspace(R - delta, R, cfg.n)
    t[-1] = R
    hf = _h(f, cfg.kappa)
    M = float(hf(1.0))
    lip = cfg.lipschitz_bound(M, delta)
    lower = _phi_on(phi, t)
    g = lower.copy()
    tol = 1e-9
    for it in range(1, cfg.max_iterations + 1):
        new, slope = _apply_map(g, t, hf, cfg.K, cfg.operator_tag)
        where = None
        if np.any(new < lower - tol):
            where = "below the comparison profile"
        elif np.max(new) > 1.0 + tol:
            where = "above 1"
        elif np.max(np.abs(np.diff(new)) / np.diff(t)) > lip + 1e-6:
            where = "beyond the Lipschitz bound"
        if where is not None:
            raise InvariantViolation(f"iterate {it} left the admissible set ({where})")
        change = float(np.max(np.abs(new - g)))
        g = new
        if change <= cfg.fixed_point_tolerance:
            break
    else:
        raise ConvergenceFailure(f"fixed-point map did not converge in {cfg.max_iterations} "
                                 f"iterations (last change {change:.3e})", last_iterate=g)
    meta = {"operator_tag": cfg.operator_tag, "K": cfg.K, "kappa": cfg.kappa, "R": R,
            "delta": delta, "iterations": it, "lipschitz_bound": lip}
    return Profile(t, g, slope, fd_first(slope, t), None, "csp", meta)


def default_delta(f, cfg):
    """delta from the config, or the largest value meeting both the kernel
    condition and the sup bound."""
    if cfg.delta is not None:
        return cfg.delta
    M = float(_h(f, cfg.kappa)(1.0))
    return min(cfg.delta_kernel_cap, cfg.delta_sup_cap(M))


def assemble_compact_solution(psi, cfg, R):
    """Glue v(r) = psi(r + r_circ) on [1, 1 + delta] to zero on
    [1 + delta, 1 + 2 delta], with r_circ = R - delta - 1."""
    delta = float(psi.grid[-1] - psi.grid[0])
    r_circ = R - delta - 1.0
    if r_circ <= 0:
        raise GeometryError(f"R - delta = {R - delta:.6g} <= 1; increase lambda to shrink R "
                            "or choose a smaller delta")
    h = psi.h
    m = psi.grid.size - 1
    r = np.concatenate([psi.grid - r_circ, 1.0 + delta + h * np.arange(1, m + 1)])
    r[0], r[m] = 1.0, 1.0 + delta
    zeros = np.zeros(m)
    values = np.concatenate([psi.values, zeros])
    d1 = np.concatenate([psi.first_derivative, zeros])
    d2 = np.concatenate([psi.second_derivative, zeros])
    meta = dict(psi.metadata, r_circ=r_circ)
    return Profile(r, values, d1, d2, 1.0 + delta, "csp", meta)


def solve_compact_support(f, cfg):
    """Run the whole construction and verify the glued solution."""
    notes = []
    R, phi = compute_support_radius(f, cfg.kappa, cfg.operator_tag)
    hf = _h(f, cfg.kappa)
    M = float(hf(1.0))
    delta = default_delta(f, cfg)
    if cfg.sup_bound(M, delta) > 1.0 + 1e-12:
        shrunk = cfg.delta_sup_cap(M)
        notes.append(f"delta shrunk from {delta:.6g} to {shrunk:.6g} to keep iterates below 1")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
        delta = shrunk
    psi = build_psi(f, cfg, R, phi, delta)
    v = assemble_compact_solution(psi, cfg, R)
    lo, hi = 1.0, 1.0 + delta
    rep = residual_report("compact_solution", v, f.scaled(8.0 * cfg.kappa), cfg.K,
                          cfg.operator_tag, tolerance=cfg.residual_tolerance, interval=(lo, hi))
    kink = kink_viscosity_check(v, f)
    rep.add_check("gluing", kink.ok, v.support_edge)
    rep.add_check("psi_dominates_phi", bool(np.all(psi.values >= _phi_on(phi, psi.grid) - 1e-9)))
    rep.add_check("psi_at_most_one", bool(np.max(psi.values) <= 1.0 + 1e-9))
    slope = np.max(np.abs(np.diff(psi.values)) / np.diff(psi.grid))
    lip = cfg.lipschitz_bound(M, delta)
    rep.add_check("lipschitz", bool(slope <= lip + 1e-6))
    return CspResult(R, phi, psi, R - delta - 1.0, v, rep, psi.metadata["iterations"], lip,
                     delta, notes)

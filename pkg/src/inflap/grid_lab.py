"""Finite-difference experiments for L u + G(|Du|) - f(u) = 0.

The one-dimensional (radial) scheme on a uniform grid uses

    L1:  ((D+ u)^3 - (D- u)^3) / (3h)      (a difference of ((u')^3)'/3)
    L0:  (D+ u - D- u) / h

with D+ and D- the forward and backward differences and G evaluated at the
central difference.  Both operators are nondecreasing in the neighbours
and, since f is nondecreasing, the residual is nonincreasing in the
centre value, so the scheme is monotone.  The system is solved by damped
Newton iteration with a tridiagonal Jacobian, projecting onto u >= 0.

An optional 2D box solver uses the two-point stencil for the normalized
operator on the 8 nearest neighbours.
"""

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .deadcore import build_deadcore_profile, deadcore_time_to
from .errors import ConvergenceFailure, DomainError, UsageError
from .nonlinearity import GradientTermSpec, Integrand, NonlinearitySpec, classify_integral


@dataclass
class GridFunction:
    """Values on an interval grid (``kind='interval'``, extents (a, b),
    shape (n,)) or a box grid (``kind='box'``, extents (a, b, c, d) for
    [a, b] x [c, d], shape (n, m))."""

    kind: str
    extents: tuple
    shape: tuple
    values: np.ndarray
    boundary_mask: np.ndarray
    boundary_values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.shape)
        self.boundary_mask = np.asarray(self.boundary_mask, dtype=bool).reshape(self.shape)
        self.boundary_values = np.asarray(self.boundary_values, dtype=float)
        if self.kind not in ("interval", "box"):
            raise UsageError("geometry kind must be 'interval' or 'box'")
        if min(self.shape) < 3:
            raise DomainError("need at least 3 nodes per axis")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("grid values must be finite")
        if self.boundary_values.size != int(self.boundary_mask.sum()):
            raise DomainError("one boundary value per masked node is required")

    @classmethod
    def interval(cls, a, b, n, values=None, left=0.0, right=0.0):
        """Interval grid with Dirichlet data at both ends; default values
        interpolate the boundary data linearly."""
        if not b > a:
            raise DomainError("need a < b")
        if values is None:
            values = np.linspace(left, right, n)
        else:
            values = np.asarray(values, dtype=float)
            left, right = values[0], values[-1]
        mask = np.zeros(n, dtype=bool)
        mask[[0, -1]] = True
        return cls("interval", (float(a), float(b)), (n,), values, mask, [left, right])

    @classmethod
    def box(cls, extents, shape, boundary):
        """Box grid; ``boundary`` is a callable (x, y) -> value used on the
        boundary and, as a starting guess, inside."""
        a, b, c, d = extents
        x = np.linspace(a, b, shape[0])
        y = np.linspace(c, d, shape[1])
        X, Y = np.meshgrid(x, y, indexing="ij")
        vals = np.asarray(boundary(X, Y), dtype=float) * np.ones(shape)
        mask = np.zeros(shape, dtype=bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        gf = cls("box", tuple(map(float, extents)), tuple(shape), vals, mask, vals[mask])
        if not np.isclose(gf.spacing, (d - c) / (shape[1] - 1)):
            raise DomainError("box grids must have equal spacing in both directions")
        return gf

    @property
    def spacing(self):
        return (self.extents[1] - self.extents[0]) / (self.shape[0] - 1)

    @property
    def nodes(self):
        if self.kind == "interval":
            return np.linspace(self.extents[0], self.extents[1], self.shape[0])
        a, b, c, d = self.extents
        return np.meshgrid(np.linspace(a, b, self.shape[0]), np.linspace(c, d, self.shape[1]),
                           indexing="ij")

    def with_values(self, values):
        return GridFunction(self.kind, self.extents, self.shape, values, self.boundary_mask,
                            np.asarray(values).reshape(self.shape)[self.boundary_mask])

    def same_geometry(self, other):
        return (self.kind == other.kind and self.shape == other.shape
                and np.allclose(self.extents, other.extents, rtol=0, atol=1e-12))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if self.kind == "interval":
                w.writerow(["node", "r", "value"])
                for i, (r, v) in enumerate(zip(self.nodes, self.values)):
                    w.writerow([i, repr(float(r)), repr(float(v))])
            else:
                w.writerow(["node", "x", "y", "value"])
                X, Y = self.nodes
                for k, (x, y, v) in enumerate(zip(X.ravel(), Y.ravel(), self.values.ravel())):
                    w.writerow([k, repr(float(x)), repr(float(y)), repr(float(v))])

    def to_dict(self):
        return {"kind": self.kind, "extents": list(self.extents), "shape": list(self.shape),
                "spacing": self.spacing, "values": self.values.ravel().tolist()}


@dataclass
class SolveReport:
    iterations: int
    final_update_norm: float
    residual_norm: float
    converged: bool
    tolerance: float = None
    continuation_steps: int = 0

    def to_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 10_000
    tolerance: float = 1e-10
    jacobian_floor: float = 1e-14
    max_backtracks: int = 40
    continuation: int = 8
    box_sweeps: int = 20_000


def _gradient(g_or_K, tag):
    if isinstance(g_or_K, GradientTermSpec):
        return g_or_K
    return GradientTermSpec.from_K(float(g_or_K or 0.0), tag)


def _interval_residual(u, h, f, g, tag):
    dp = (u[2:] - u[1:-1]) / h
    dm = (u[1:-1] - u[:-2]) / h
    if tag == "L1":
        op = (dp ** 3 - dm ** 3) / (3.0 * h)
    else:
        op = (dp - dm) / h
    grad = np.abs(0.5 * (dp + dm))
    gterm = 0.0 if g.is_zero else g(grad)
    return op + gterm - f(np.maximum(u[1:-1], 0.0))


def discrete_residual(u, f, g_or_K=None, operator_tag="L1"):
    """Scheme residual L_h u + G(|D_h u|) - f(u) at interior nodes (NaN on
    the boundary)."""
    g = _gradient(g_or_K, operator_tag)
    out = np.full(u.shape, np.nan)
    if u.kind == "interval":
        out[1:-1] = _interval_residual(u.values, u.spacing, f, g, operator_tag)
    else:
        out[1:-1, 1:-1] = _box_operator(u.values, u.spacing, operator_tag, g) \
            - f(np.maximum(u.values[1:-1, 1:-1], 0.0))
    return out


def _newton(u, h, f, g, tag, cfg, tol):
    n = u.size
    F = _interval_residual(u, h, f, g, tag)
    norm = float(np.max(np.abs(F))) if F.size else 0.0
    step_norm = math.inf
    polish = 0
    for it in range(1, cfg.max_iterations + 1):
        dp = (u[2:] - u[1:-1]) / h
        dm = (u[1:-1] - u[:-2]) / h
        if tag == "L1":
            cp = np.maximum(dp * dp, cfg.jacobian_floor) / (h * h)
            cm = np.maximum(dm * dm, cfg.jacobian_floor) / (h * h)
        else:
            cp = np.full(n - 2, 1.0 / (h * h))
            cm = cp.copy()
        upper, lower = cp.copy(), cm.copy()
        # f' is infinite at 0 when q < 1; cap it in the Jacobian only
        fp = np.minimum(f.derivative(np.maximum(u[1:-1], 1e-300)), 1e16)
        diag = -(cp + cm) - fp
        if not g.is_zero:
            c = 0.5 * (dp + dm)
            gp = g.derivative(np.abs(c)) * np.sign(c) / (2.0 * h)
            upper += gp
            lower -= gp
        ab = np.zeros((3, n - 2))
        ab[0, 1:] = upper[:-1]
        ab[1] = diag
        ab[2, :-1] = lower[1:]
        delta = solve_banded((1, 1), ab, -F)
        step_norm = float(np.max(np.abs(delta)))
        if not np.isfinite(step_norm):
            break
        lam = 1.0
        for _ in range(cfg.max_backtracks):
            trial = u.copy()
            trial[1:-1] = np.maximum(u[1:-1] + lam * delta, 0.0)
            Ft = _interval_residual(trial, h, f, g, tag)
            tnorm = float(np.max(np.abs(Ft)))
            if tnorm <= norm or lam < 1e-9:
                break
            lam *= 0.5
        improved = tnorm < 0.5 * norm
        u, F, norm = trial, Ft, tnorm
        # near a free boundary with q < 1 the node values are far below tol
        # while the residual is still large; polish while it keeps dropping
        if step_norm <= tol:
            polish += 1
            settled = norm <= 1e-8 * max(1.0, float(np.max(np.abs(f(u)))))
            if settled or (not improved and polish > 3) or polish > 50:
                return u, SolveReport(it, step_norm, norm, True, tol)
    return u, SolveReport(it, step_norm, norm, False, tol)


def solve_radial_dirichlet(f, g_or_K, operator_tag, geometry, boundary_values=None,
                           solver_cfg=None):
    """Solve the 1D Dirichlet problem on ``geometry`` (a GridFunction, whose
    values are the starting guess, or a tuple (a, b, n)).

    ``boundary_values`` = (u(a), u(b)) overrides the geometry's data.
    Newton runs on the full problem first; if it stalls, the absorption is
    switched on gradually (f scaled by 1/2^k, ..., 1), each stage starting
    from the previous solution.
    """
    if operator_tag not in ("L1", "L0"):
        raise UsageError("operator_tag must be 'L1' or 'L0'")
    cfg = solver_cfg or SolverConfig()
    if not isinstance(geometry, GridFunction):
        a, b, n = geometry
        left, right = boundary_values if boundary_values is not None else (0.0, 0.0)
        geometry = GridFunction.interval(a, b, int(n), left=left, right=right)
    elif boundary_values is not None:
        geometry = GridFunction.interval(*geometry.extents, geometry.shape[0],
                                         left=boundary_values[0], right=boundary_values[1])
    if geometry.kind != "interval":
        raise UsageError("use solve_box_dirichlet for box geometries")
    if np.any(geometry.boundary_values < 0):
        raise DomainError("boundary values must be nonnegative")
    g = _gradient(g_or_K, operator_tag)
    h = geometry.spacing
    tol = cfg.tolerance * (geometry.extents[1] - geometry.extents[0])
    u0 = np.maximum(geometry.values.copy(), 0.0)
    u0[0], u0[-1] = geometry.boundary_values

    u, rep = _newton(u0, h, f, g, operator_tag, cfg, tol)
    if not rep.converged and cfg.continuation > 0:
        u = u0
        total = 0
        for k in range(cfg.continuation, -1, -1):
            u, rep = _newton(u, h, f.scaled(0.5 ** k), g, operator_tag, cfg, tol)
            total += rep.iterations
            if not rep.converged:
                break
        rep.iterations = total
        rep.continuation_steps = cfg.continuation + 1
    out = geometry.with_values(u)
    if not rep.converged:
        raise ConvergenceFailure(f"Newton did not converge (update {rep.final_update_norm:.3e}, "
                                 f"residual {rep.residual_norm:.3e})", last_iterate=out)
    return out, rep


# -- 2D box -----------------------------------------------------------------

_DIRS = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)]


def _box_slopes(U, h, centre):
    """Largest and smallest difference quotient from the centre values to
    the 8 neighbours, for all interior nodes."""
    n, m = U.shape
    quot = []
    for di, dj in _DIRS:
        nb = U[1 + di:n - 1 + di, 1 + dj:m - 1 + dj]
        quot.append((nb - centre) / (h * math.hypot(di, dj)))
    quot = np.array(quot)
    return quot.max(axis=0), quot.min(axis=0)


def _central_gradient(U, h):
    gx = (U[2:, 1:-1] - U[:-2, 1:-1]) / (2.0 * h)
    gy = (U[1:-1, 2:] - U[1:-1, :-2]) / (2.0 * h)
    return np.hypot(gx, gy)


def _box_operator(U, h, tag, g, centre=None):
    # (S+ + S-)/h; L1 multiplies by a central |Du|^2 that ignores the centre value
    centre = U[1:-1, 1:-1] if centre is None else centre
    smax, smin = _box_slopes(U, h, centre)
    op = (smax + smin) / h
    grad = _central_gradient(U, h)
    if tag == "L1":
        op = op * grad * grad
    return op + (0.0 if g.is_zero else g(grad))


def solve_box_dirichlet(f, g_or_K, operator_tag, geometry, solver_cfg=None):
    """Solve on a box by Jacobi sweeps: at each sweep every interior value
    is replaced by the root (in the centre value) of its local residual,
    found by bisection.  The local residual is nonincreasing in the
    centre value because the neighbour-only gradient estimate and G do not
    depend on it."""
    if geometry.kind != "box":
        raise UsageError("geometry must be a box")
    cfg = solver_cfg or SolverConfig()
    g = _gradient(g_or_K, operator_tag)
    h = geometry.spacing
    U = np.maximum(geometry.values.copy(), 0.0)
    U[geometry.boundary_mask] = geometry.boundary_values
    top = max(float(U.max()), 1e-300)
    tol = cfg.tolerance * (geometry.extents[1] - geometry.extents[0])
    change = math.inf
    for sweep in range(1, cfg.box_sweeps + 1):
        lo = np.zeros_like(U[1:-1, 1:-1])
        hi = np.full_like(lo, top)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            r = _box_operator(U, h, operator_tag, g, mid) - f(mid)
            lo = np.where(r > 0, mid, lo)
            hi = np.where(r > 0, hi, mid)
        new = 0.5 * (lo + hi)
        change = float(np.max(np.abs(new - U[1:-1, 1:-1])))
        U[1:-1, 1:-1] = new
        if change <= tol:
            break
    out = geometry.with_values(U)
    res = discrete_residual(out, f, g, operator_tag)
    rep = SolveReport(sweep, change, float(np.nanmax(np.abs(res))), change <= tol, tol)
    if not rep.converged:
        raise ConvergenceFailure(f"box sweeps did not converge (last change {change:.3e})",
                                 last_iterate=out)
    return out, rep


# -- comparison -------------------------------------------------------------

@dataclass
class ComparisonReport:
    """Outcome of a discrete comparison check.

    ``failure_kind`` is 'hypothesis' if any hypothesis fails (then
    ``failed_hypothesis`` names the first and ``failure_node`` its node),
    else 'conclusion' if v < u somewhere, else None.  The conclusion is
    evaluated in every case; ``violation_node`` is its first failing node.
    """

    hypotheses_hold: bool
    conclusion_holds: bool
    failure_kind: str = None
    failure_node: int = None
    failure_location: object = None
    failed_hypothesis: str = None
    violation_node: int = None
    violation_location: object = None
    realized_gap: float = None
    min_margin: float = None
    checks: dict = field(default_factory=dict)

    def to_dict(self):
        return dict(self.__dict__)


def _location(u, k):
    if u.kind == "interval":
        return float(u.nodes[k])
    idx = np.unravel_index(k, u.shape)
    X, Y = u.nodes
    return [float(X[idx]), float(Y[idx])]


def _evaluate(fn, u):
    nodes = u.nodes
    if callable(fn):
        out = fn(nodes) if u.kind == "interval" else fn(*nodes)
    else:
        out = fn
    return np.broadcast_to(np.asarray(out, dtype=float), u.shape)


def discrete_comparison_check(u, v, h_fn, h_tilde_fn, f, g_or_K=None, operator_tag="L1",
                              tolerance=0.0):
    """Discrete comparison: if L_h u + G - f(u) >= h and L_h v + G - f(v) <= h~
    at interior nodes with h > h~, and v >= u on the boundary, then v >= u
    everywhere.

    ``h_fn`` and ``h_tilde_fn`` are constants, arrays or callables of the
    node coordinates.  Hypotheses are checked first; the report names the
    first failing one, or the first node where the conclusion fails.
    ``tolerance`` relaxes every comparison by that absolute amount.
    """
    if not u.same_geometry(v):
        raise UsageError("u and v must share their geometry")
    ru = discrete_residual(u, f, g_or_K, operator_tag)
    rv = discrete_residual(v, f, g_or_K, operator_tag)
    hv = _evaluate(h_fn, u)
    htv = _evaluate(h_tilde_fn, u)
    interior = ~u.boundary_mask
    tol = tolerance
    gap = hv - htv
    tests = [
        ("strict_gap", interior & ~(gap > 0)),
        ("subsolution", interior & ~(ru >= hv - tol)),
        ("supersolution", interior & ~(rv <= htv + tol)),
        ("boundary_order", u.boundary_mask & ~(v.values >= u.values - tol)),
    ]
    checks = {name: not bad.any() for name, bad in tests}
    realized = float(np.min(gap[interior])) if interior.any() else math.inf
    margin = float(np.min(v.values - u.values))
    bad = (v.values < u.values - tol).ravel()
    rep = ComparisonReport(all(checks.values()), not bad.any(), realized_gap=realized,
                           min_margin=margin, checks=checks)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        rep.violation_node, rep.violation_location = k, _location(u, k)
        rep.failure_kind, rep.failure_node, rep.failure_location = "conclusion", k, _location(u, k)
    for name, bad in tests:
        if bad.any():
            k = int(np.flatnonzero(bad.ravel())[0])
            rep.failure_kind, rep.failed_hypothesis = "hypothesis", name
            rep.failure_node, rep.failure_location = k, _location(u, k)
            break
    return rep


def deadcore_lift(f, g_or_K, operator_tag, geometry, eps, level=None):
    """Increasing dead-core supersolution v(r) = phi(r - r_s) + eps on an
    interval grid, with phi(r) = 0 for r <= r_s.

    r_s is the grid node at or below b - t*, where phi(t*) reaches ``level``
    (default: the right boundary value), so v(b) >= level + eps.  It
    satisfies L v + G(|v'|) - f(v) <= -f(v)/2 wherever phi solves its
    dead-core inequality.
    """
    g = _gradient(g_or_K, operator_tag)
    a, b = geometry.extents
    h = geometry.spacing
    r = geometry.nodes
    level = geometry.boundary_values[-1] if level is None else level
    t_star = deadcore_time_to(f, g, level)
    k = max(0, int(math.ceil((b - t_star - a) / h - 1e-9)) - 1) if t_star < b - a else 0
    k = min(k, r.size - 3)
    profile = build_deadcore_profile(f, g, b - r[k], n=r.size - k)
    vals = np.zeros(r.size)
    vals[k:] = profile.values
    return geometry.with_values(vals + eps), {"r_s": float(r[k]), "t_star": t_star}


def vepsilon_comparison(q=1.0, lam=100.0, n=1024, eps=1e-3, operator_tag="L1", gap=1e-6):
    """Solve on [1, 2] with u(1)=0, u(2)=1 and compare against the lifted
    dead-core supersolution with h = -gap and h~ = -f(v_eps)/2."""
    f = NonlinearitySpec.power_law(q, lam)
    geom = GridFunction.interval(1.0, 2.0, n, left=0.0, right=1.0)
    u, solve_rep = solve_radial_dirichlet(f, 0.0, operator_tag, geom)
    v, info = deadcore_lift(f, 0.0, operator_tag, geom, eps)
    h_tilde = -0.5 * f(v.values)
    rep = discrete_comparison_check(u, v, -gap, h_tilde, f, 0.0, operator_tag)
    return u, v, rep, dict(info, solve=solve_rep.to_dict())


# -- dead core and the dichotomy experiment ---------------------------------

def detect_dead_core(u, threshold=None):
    """Size of the largest connected set of nodes with u <= threshold that
    touches a boundary node where u vanishes (within threshold).

    For intervals the size is the length (count - 1) * h, for boxes the
    area count * h^2.  The default threshold is h^2.  Returns (size, nodes)
    with ``nodes`` the flat indices of the set.
    """
    h = u.spacing
    thr = h * h if threshold is None else threshold
    low = u.values <= thr
    if u.kind == "interval":
        best = np.array([], dtype=int)
        n = u.shape[0]
        if low[0]:
            end = int(np.argmin(low)) if not low.all() else n
            best = np.arange(end)
        if low[-1]:
            start = n - int(np.argmin(low[::-1])) if not low.all() else 0
            run = np.arange(start, n)
            if run.size > best.size:
                best = run
        width = (best.size - 1) * h if best.size else 0.0
        return float(max(width, 0.0)), best
    # flood fill from low boundary nodes through 4-neighbours
    seen = np.zeros(u.shape, dtype=bool)
    best = []
    starts = list(zip(*np.nonzero(u.boundary_mask & low)))
    for s in starts:
        if seen[s]:
            continue
        stack, comp = [s], []
        seen[s] = True
        while stack:
            i, j = stack.pop()
            comp.append(i * u.shape[1] + j)
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = i + di, j + dj
                if 0 <= a < u.shape[0] and 0 <= b < u.shape[1] and low[a, b] and not seen[a, b]:
                    seen[a, b] = True
                    stack.append((a, b))
        if len(comp) > len(best):
            best = comp
    return float(len(best) * h * h), np.array(sorted(best), dtype=int)


def smp_csp_experiment(q, lam, operator_tag="L1", resolution=1024, solver_cfg=None):
    """Solve on [1, 2] with u(1)=0, u(2)=1, f = lam s^q, G = 0 and report
    the dead-core width (threshold h^2), interior minimum, u(1.5) and the
    classifier verdict for the matching integral condition."""
    if not (q > 0 and lam > 0):
        raise DomainError("q and lambda must be positive")
    f = NonlinearitySpec.power_law(q, lam)
    geom = GridFunction.interval(1.0, 2.0, resolution, left=0.0, right=1.0)
    u, rep = solve_radial_dirichlet(f, 0.0, operator_tag, geom, solver_cfg=solver_cfg)
    width, nodes = detect_dead_core(u)
    r = u.nodes
    selector = Integrand.F_power(4.0 if operator_tag == "L1" else 2.0)
    verdict = classify_integral(f, selector, 1.0).verdict
    return {
        "q": float(q), "lambda": float(lam), "operator_tag": operator_tag,
        "resolution": int(resolution), "h": u.spacing, "threshold": u.spacing ** 2,
        "verdict": verdict,
        "dead_core_width": width,
        "dead_core_nodes": int(nodes.size),
        "interior_min": float(u.values[1:-1].min()),
        "midpoint_value": float(np.interp(1.5, r, u.values)),
        "solve": rep.to_dict(),
    }


def _experiment_task(args):
    return smp_csp_experiment(*args)


def sweep(qs, lams, operator_tag="L1", resolution=1024, workers=1):
    """Run the experiment over the (q, lambda) product; results come back in
    parameter order whatever the number of worker processes."""
    tasks = [(q, lam, operator_tag, resolution) for q in qs for lam in lams]
    if workers <= 1:
        return [_experiment_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_experiment_task, tasks))


def write_report(path, report):
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)

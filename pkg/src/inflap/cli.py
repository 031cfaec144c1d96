"""Command-line front end.

Every subcommand prints a JSON report (or writes it to ``--out``, with CSV
data files next to it).  Exit status: 0 when all checks pass, 2 when a
verification or convergence check fails, 1 for usage or configuration
errors.
"""

import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from . import barrier, csp_profile, deadcore, grid_lab
from .errors import (ConvergenceFailure, CriticalPointError, DivergentIntegral, DomainError,
                     GeometryError, GluingError, InflapError, InvariantViolation, NoBarrier,
                     NoValidRadius, UsageError)
from .nonlinearity import GradientTermSpec, Integrand, NonlinearitySpec, classify_integral
from .radial_ops import counterexample_eval, kink_viscosity_check, residual_report

SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
_CONFIG_ERRORS = (DomainError, UsageError, InvariantViolation, GeometryError, DivergentIntegral)
_RUN_ERRORS = (ConvergenceFailure, NoBarrier, NoValidRadius, GluingError, CriticalPointError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- mini-language ------------------------------------------------------------

def parse_nonlinearity(text):
    """``power:q=<q>[,lambda=<lam>]``, ``table:<path.csv>``,
    ``piecewise:<start>,<q>,<lam>;...`` or ``zero``."""
    kind, _, body = text.partition(":")
    kind = kind.strip().lower()
    if kind == "zero":
        return NonlinearitySpec.zero()
    if kind == "power":
        params = {}
        for item in filter(None, body.split(",")):
            key, eq, val = item.partition("=")
            if not eq:
                raise UsageError(f"expected key=value in {text!r}")
            params[key.strip().lower()] = float(val)
        unknown = set(params) - {"q", "lambda", "lam"}
        if unknown or "q" not in params:
            raise UsageError(f"power nonlinearity needs q (and optionally lambda): {text!r}")
        return NonlinearitySpec.power_law(params["q"], params.get("lambda", params.get("lam", 1.0)))
    if kind == "table":
        try:
            data = np.genfromtxt(body, delimiter=",", comments="#")
        except OSError as exc:
            raise UsageError(f"cannot read table {body!r}: {exc}") from None
        data = data[~np.isnan(data).any(axis=1)] if data.ndim == 2 else data
        if data.ndim != 2 or data.shape[1] < 2:
            raise UsageError("table files need two columns: s, f(s)")
        return NonlinearitySpec.table(data[:, 0], data[:, 1])
    if kind == "piecewise":
        segs = []
        for part in filter(None, body.split(";")):
            vals = [float(x) for x in part.split(",")]
            if len(vals) != 3:
                raise UsageError("piecewise segments are start,q,lambda")
            segs.append(tuple(vals))
        return NonlinearitySpec.piecewise(segs)
    raise UsageError(f"unknown nonlinearity kind {kind!r}")


def _gradient(args):
    if getattr(args, "G", None):
        return GradientTermSpec(parse_nonlinearity(args.G), args.operator)
    return GradientTermSpec.from_K(getattr(args, "K", 0.0) or 0.0, args.operator)


# -- output ---------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "infinity" if x > 0 else "-infinity"
        return float(f"{x:.12g}")
    return obj


def _emit(report, args):
    report = dict(report, schema=SCHEMA, command=args.command)
    text = json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _sidecar(args, name):
    if not args.out:
        return None
    stem, _ = os.path.splitext(args.out)
    return f"{stem}_{name}.csv"


def _write_profile(args, name, profile, written):
    path = _sidecar(args, name)
    if path:
        profile.write_csv(path)
        written[name] = path


def _check(rep):
    return {"target": rep.target, "tolerance": rep.tolerance, "pass": rep.passed,
            "max_abs_residual": rep.max_abs_residual, "sign_mode": rep.sign_mode,
            "checks": rep.checks, "failure_location": rep.failure_location}


# -- subcommands ----------------------------------------------------------------

def cmd_classify(args):
    f = parse_nonlinearity(args.f)
    g = _gradient(args) if args.selector == "GammaInvF" else None
    sel = Integrand.named(args.selector, p=args.p, g=g)
    res = classify_integral(f, sel, args.delta)
    return {"f": f.describe(), "selector": args.selector, "integrand": sel.label(),
            "delta": args.delta, "tolerance": {"inconclusive_margin": 0.02},
            **res.to_dict()}, True


def cmd_barrier(args):
    f = parse_nonlinearity(args.f)
    cfg = barrier.BarrierConfig(operator_tag=args.operator, K=args.K, R=args.R, eps=args.eps,
                                alpha_init=args.alpha, grid_resolution=args.nodes, form=args.form)
    res = barrier.build_barrier(cfg, f)
    written = {}
    _write_profile(args, "barrier", res.profile, written)
    rep = {"alpha": res.alpha, "eps1": res.eps1, "shrink_iterations": res.shrink_iterations,
           "verdict": res.verdict, "checks": [_check(res.residual)], "files": written}
    return rep, res.residual.passed


def cmd_deadcore(args):
    f = parse_nonlinearity(args.f)
    g = _gradient(args)
    prof = deadcore.build_deadcore_profile(f, g, args.horizon, n=args.nodes)
    identity = residual_report("deadcore_identity", prof, f, g, args.operator, nodes="all",
                               tolerance=args.tolerance)
    r_circ, diag = deadcore.determine_r_circ(prof, f, g, report=True)
    inequality = residual_report("deadcore_supersolution", prof, f, g, args.operator,
                                 tolerance=0.0, interval=(0.0, r_circ))
    v = deadcore.assemble_radial_supersolution(prof, args.R, r_circ, f=f)
    supersol = residual_report("radial_supersolution", v, f, g, args.operator, tolerance=0.0)
    kink = kink_viscosity_check(v, f)
    written = {}
    _write_profile(args, "profile", prof, written)
    _write_profile(args, "supersolution", v, written)
    checks = [_check(identity), _check(inequality), _check(supersol)]
    ok = identity.passed and inequality.passed and supersol.passed and kink.ok
    return {"r_circ": r_circ, "diagnostics": diag, "support_edge": v.support_edge,
            "kink": kink.to_dict(), "checks": checks, "files": written}, ok


def cmd_csp(args):
    f = parse_nonlinearity(args.f)
    cfg = csp_profile.CspConfig(K=args.K, kappa=args.kappa, delta=args.delta, n=args.nodes,
                                operator_tag=args.operator, residual_tolerance=args.tolerance)
    res = csp_profile.solve_compact_support(f, cfg)
    written = {}
    for name, prof in (("phi", res.phi), ("psi", res.psi), ("solution", res.assembled)):
        _write_profile(args, name, prof, written)
    d = res.to_dict()
    d["support_radius"] = d.pop("support_radius_R")
    d["checks"] = [_check(res.residual)]
    del d["residual"]
    d["files"] = written
    return d, res.residual.passed


def cmd_solve(args):
    f = parse_nonlinearity(args.f)
    g = _gradient(args)
    geom = grid_lab.GridFunction.interval(args.a, args.b, args.n, left=args.left, right=args.right)
    u, rep = grid_lab.solve_radial_dirichlet(f, g, args.operator, geom)
    width, nodes = grid_lab.detect_dead_core(u)
    written = {}
    path = _sidecar(args, "solution")
    if path:
        u.write_csv(path)
        written["solution"] = path
    return {"solve": rep.to_dict(), "dead_core_width": width, "dead_core_nodes": int(nodes.size),
            "interior_min": float(u.values[1:-1].min()), "files": written}, rep.converged


def cmd_compare(args):
    f = parse_nonlinearity(args.f)
    g = _gradient(args)
    geom = grid_lab.GridFunction.interval(args.a, args.b, args.n, left=args.left, right=args.right)
    u, srep = grid_lab.solve_radial_dirichlet(f, g, args.operator, geom)
    v, info = grid_lab.deadcore_lift(f, g, args.operator, geom, args.eps)
    if args.violate is not None:
        k = args.violate
        if not 0 < k < args.n - 1:
            raise UsageError("--violate must name an interior node")
        if not u.values[k] > 0:
            raise UsageError("--violate needs a node where u > 0 (outside the dead core)")
        vals = v.values.copy()
        vals[k] = 0.5 * u.values[k]
        v = v.with_values(vals)
    rep = grid_lab.discrete_comparison_check(u, v, -args.gap, -0.5 * f(v.values), f, g,
                                             args.operator)
    written = {}
    for name, gf in (("subsolution", u), ("supersolution", v)):
        path = _sidecar(args, name)
        if path:
            gf.write_csv(path)
            written[name] = path
    return {"comparison": rep.to_dict(), "eps": args.eps, "gap": args.gap, **info,
            "checks": [{"target": "discrete_comparison", "tolerance": 0.0,
                        "pass": rep.hypotheses_hold and rep.conclusion_holds}],
            "files": written}, rep.hypotheses_hold and rep.conclusion_holds


def cmd_experiment(args):
    reports = grid_lab.sweep(args.q, args.lam, args.operator, args.n, workers=args.workers)
    return {"experiments": reports,
            "tolerance": {"solver_update": grid_lab.SolverConfig().tolerance,
                          "dead_core_threshold": "h^2"}}, all(r["solve"]["converged"] for r in reports)


def cmd_counterexample(args):
    r = np.linspace(0.0, args.rmax, args.nodes)
    out = {}
    ok = True
    for a in args.alpha:
        vals = counterexample_eval(a, r)
        k = int(np.argmin(vals))
        out[f"{a:g}"] = {"min_value": float(vals[k]), "argmin": float(r[k]),
                         "value_at_1": counterexample_eval(a, 1.0)}
        ok &= bool(vals[k] > 0)
    first = out[f"{args.alpha[0]:g}"]
    return {"rmax": args.rmax, "nodes": args.nodes, "min_value": first["min_value"],
            "per_alpha": out,
            "checks": [{"target": "counterexample_positivity", "tolerance": 0.0, "pass": ok}]}, ok


# -- parser -----------------------------------------------------------------

def build_parser():
    p = _Parser(prog="inflap", description="Maximum and compact support principles for "
                "infinity-Laplacian equations with absorption.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, f_default="power:q=1"):
        sp.add_argument("--f", default=f_default, help="absorption, e.g. power:q=1,lambda=2")
        sp.add_argument("--operator", choices=["L1", "L0"], default="L1")
        sp.add_argument("--out", help="write the JSON report here; CSV files go beside it")

    sp = sub.add_parser("classify", help="classify an integral condition near 0")
    common(sp)
    sp.add_argument("--selector", choices=["Finv4", "Finv2", "Finvp", "GammaInvF"],
                    default="Finv4")
    sp.add_argument("--p", type=float)
    sp.add_argument("--G", help="gradient term for GammaInvF (mini-language)")
    sp.add_argument("--K", type=float, default=0.0)
    sp.add_argument("--delta", type=float, default=1.0)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("barrier", help="build and verify a positivity barrier")
    common(sp)
    sp.add_argument("--K", type=float, default=0.0)
    sp.add_argument("--R", type=float, default=0.8)
    sp.add_argument("--eps", type=float, default=0.5)
    sp.add_argument("--alpha", type=float, default=-0.1)
    sp.add_argument("--nodes", type=int, default=4000)
    sp.add_argument("--form", choices=["divergence", "radial"], default="divergence")
    sp.set_defaults(func=cmd_barrier)

    sp = sub.add_parser("deadcore", help="dead-core profile and radial supersolution")
    common(sp)
    sp.add_argument("--G", help="gradient term (mini-language); default K s^3 or K s")
    sp.add_argument("--K", type=float, default=0.0)
    sp.add_argument("--horizon", type=float, default=1.0)
    sp.add_argument("--nodes", type=int, default=2001)
    sp.add_argument("--R", type=float, default=1.0)
    sp.add_argument("--tolerance", type=float, default=1e-8)
    sp.set_defaults(func=cmd_deadcore)

    sp = sub.add_parser("csp", help="compactly supported solution outside the unit ball")
    common(sp)
    sp.add_argument("--K", type=float, default=1.0)
    sp.add_argument("--kappa", type=float, default=0.125)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--nodes", type=int, default=2048)
    sp.add_argument("--tolerance", type=float, default=1e-6)
    sp.set_defaults(func=cmd_csp)

    def interval(sp, n=1024):
        sp.add_argument("--G", help="gradient term (mini-language)")
        sp.add_argument("--K", type=float, default=0.0)
        sp.add_argument("--a", type=float, default=1.0)
        sp.add_argument("--b", type=float, default=2.0)
        sp.add_argument("--n", type=int, default=n)
        sp.add_argument("--left", type=float, default=0.0)
        sp.add_argument("--right", type=float, default=1.0)

    sp = sub.add_parser("solve", help="finite-difference Dirichlet solve on an interval")
    common(sp)
    interval(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("compare", help="discrete comparison against the lifted dead-core profile")
    common(sp, "power:q=1,lambda=100")
    interval(sp)
    sp.add_argument("--eps", type=float, default=1e-3)
    sp.add_argument("--gap", type=float, default=1e-6, help="h = -gap for the subsolution")
    sp.add_argument("--violate", type=int, help="set v to u/2 at this node (u > 0 there)")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("experiment", help="dead-core versus positivity on [1, 2]")
    sp.add_argument("--q", type=float, nargs="+", default=[1.0, 3.0])
    sp.add_argument("--lambda", dest="lam", type=float, nargs="+", default=[1.0])
    sp.add_argument("--operator", choices=["L1", "L0"], default="L1")
    sp.add_argument("--n", type=int, default=1024)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("counterexample", help="positivity of 2e^{3r} - e^{3 alpha r}")
    sp.add_argument("--alpha", type=float, nargs="+", default=[0.5])
    sp.add_argument("--rmax", type=float, default=10.0)
    sp.add_argument("--nodes", type=int, default=10_000)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_counterexample)
    return p


def parse_and_dispatch(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report, ok = args.func(args)
        if caught:
            report["warnings"] = sorted({str(w.message) for w in caught})
    except _CONFIG_ERRORS as exc:
        sys.stderr.write(f"inflap: {type(exc).__name__}: {exc}\n")
        return EXIT_USAGE
    except _RUN_ERRORS as exc:
        sys.stderr.write(f"inflap: {type(exc).__name__}: {exc}\n")
        _emit({"error": type(exc).__name__, "message": str(exc), "pass": False}, args)
        return EXIT_FAIL
    except (InflapError, ValueError) as exc:
        sys.stderr.write(f"inflap: {type(exc).__name__}: {exc}\n")
        return EXIT_USAGE
    report["pass"] = bool(ok)
    _emit(report, args)
    return EXIT_OK if ok else EXIT_FAIL


def main():
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()

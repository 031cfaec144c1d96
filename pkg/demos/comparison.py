"""Why the dead core appears: a compactly supported supersolution sits above u.

The dead-core profile phi(t) = sqrt(lam) t^2 / (4 sqrt 2) reaches 1 at
t* = 2 * 2^(1/4) lam^(-1/4).  Placed so that it rises from zero at
r_s = 2 - t*, lifted by eps, it dominates the discrete solution, which
therefore vanishes (up to eps) on [1, r_s].
"""

import numpy as np

from inflap import NonlinearitySpec, discrete_comparison_check, vepsilon_comparison

u, v, rep, info = vepsilon_comparison(q=1.0, lam=100.0, n=1024, eps=1e-3)
print(f"t* = {info['t_star']:.5f}, r_s = {info['r_s']:.5f}")
print(f"hypotheses hold: {rep.hypotheses_hold}, v >= u everywhere: {rep.conclusion_holds}")
print(f"realized gap h - h~ = {rep.realized_gap:.3e}, min(v - u) = {rep.min_margin:.3e}")
core = u.nodes[u.values <= u.spacing ** 2]
print(f"u <= h^2 on [{core.min():.4f}, {core.max():.4f}]")

# break the supersolution at one node and watch the checker point at it
f = NonlinearitySpec.power_law(1.0, 100.0)
k = 800
bad = v.values.copy()
bad[k] = 0.5 * u.values[k]
rep = discrete_comparison_check(u, v.with_values(bad), -1e-6, -0.5 * f(bad), f)
print(f"lowered v at node {k}: failure kind {rep.failure_kind} ({rep.failed_hypothesis}), "
      f"conclusion fails at node {rep.violation_node} (r = {rep.violation_location:.4f})")

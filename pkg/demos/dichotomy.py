"""Positivity versus dead cores on the annulus 1 < r < 2.

We solve (u')^2 u'' = lam u^q with u(1) = 0, u(2) = 1 for a few exponents.
When int_0 F^{-1/4} diverges (q >= 3) the solution stays positive inside;
when it converges (q < 3) a zero set forms next to r = 1 once lam is large.
"""

from inflap import sweep

qs = [0.5, 1.0, 2.0, 3.0, 4.0]
lams = [1.0, 100.0]

print(f"{'q':>5} {'lambda':>8} {'integral':>12} {'core width':>11} {'u(1.5)':>11}")
for rep in sweep(qs, lams, "L1", resolution=1024):
    print(f"{rep['q']:5g} {rep['lambda']:8g} {rep['verdict']:>12} "
          f"{rep['dead_core_width']:11.4f} {rep['midpoint_value']:11.3e}")

"""Quadrature helpers for integrands that are power-like and singular at 0."""

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DivergentIntegral, DomainError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def gauss_legendre_log(func, a, b):
    """Integrate ``func`` over each ``[a_i, b_i]`` (0 < a_i) in the variable log s.

    The substitution s = exp(u) turns a power s^-k into a smooth exponential,
    so an 8-point rule on short geometric segments is accurate to rounding.
    ``func`` must accept and return 1-d arrays.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    la, lb = np.log(a), np.log(b)
    half = 0.5 * (lb - la)
    mid = 0.5 * (lb + la)
    u = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    s = np.exp(u)
    vals = func(s.ravel()).reshape(s.shape) * s
    return half * (vals @ _GL_WEIGHTS)


def adaptive_simpson(func, a, b, rtol=1e-12, atol=0.0, max_levels=50):
    """Adaptive Simpson quadrature over many intervals at once.

    All intervals are refined level by level so each level costs one
    vectorized call to ``func``.  Returns the array of integrals over
    ``[a_i, b_i]``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    m = 0.5 * (a + b)
    vals = func(np.concatenate([a, m, b]))
    fa, fm, fb = np.split(vals, 3)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    tol = np.maximum(atol, rtol * np.abs(whole))
    owner = np.arange(a.size)
    result = np.zeros(a.size)

    lo, hi, flo, fmid, fhi = a, b, fa, fm, fb
    for level in range(max_levels):
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm, frm = np.split(func(np.concatenate([lm, rm])), 2)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - whole
        done = np.abs(delta) <= 15.0 * tol
        if level == max_levels - 1:
            done[:] = True
        np.add.at(result, owner[done], (left + right + delta / 15.0)[done])
        keep = ~done
        if not keep.any():
            break
        owner = np.concatenate([owner[keep], owner[keep]])
        tol = np.concatenate([tol[keep], tol[keep]]) / 2.0
        whole = np.concatenate([left[keep], right[keep]])
        lo, hi = np.concatenate([lo[keep], mid[keep]]), np.concatenate([mid[keep], hi[keep]])
        flo, fhi = np.concatenate([flo[keep], fmid[keep]]), np.concatenate([fmid[keep], fhi[keep]])
        fmid = np.concatenate([flm[keep], frm[keep]])
    return result


def local_exponents(s, g):
    """Local decay exponents -d log g / d log s between consecutive samples."""
    ls, lg = np.log(s), np.log(g)
    return -np.diff(lg) / np.diff(ls)


class SingularPrimitive:
    """Tabulated primitive ``T(x) = int_0^x g(s) ds`` of a positive integrand
    with an integrable power singularity at 0, together with its inverse.

    The table lives on a geometric ladder starting at ``x_min`` with
    ``per_decade`` points per decade.  Below ``x_min`` the integrand is
    replaced by the power law fitted on the first ladder points, which is
    exact when g is a pure power near 0.
    """

    def __init__(self, g, upper, x_min=1e-12, per_decade=64, tail_points=8):
        if upper <= x_min:
            raise DomainError(f"upper limit {upper} must exceed x_min={x_min}")
        self.g = g
        self.x_min = float(x_min)
        self.per_decade = per_decade
        n = int(np.ceil(per_decade * np.log10(upper / x_min)))
        ladder = x_min * 10.0 ** (np.arange(n + 1) / per_decade)
        ladder[-1] = upper
        if ladder[-2] >= upper:
            ladder = np.delete(ladder, -2)
        self.ladder = ladder
        self.gvals = g(ladder)
        if not np.all(np.isfinite(self.gvals)) or np.any(self.gvals <= 0):
            raise DivergentIntegral("integrand is not finite and positive on the ladder")

        k = min(tail_points, ladder.size - 1)
        slope = np.polyfit(np.log(ladder[: k + 1]), np.log(self.gvals[: k + 1]), 1)[0]
        self.tail_exponent = -slope
        if self.tail_exponent >= 1.0 - 1e-9:
            raise DivergentIntegral(
                f"integrand decays like s^-{self.tail_exponent:.4g} at 0; not integrable")
        self.tail_coeff = self.gvals[0] * x_min ** self.tail_exponent
        tail = self.gvals[0] * x_min / (1.0 - self.tail_exponent)
        segs = gauss_legendre_log(g, ladder[:-1], ladder[1:])
        self.table = tail + np.concatenate([[0.0], np.cumsum(segs)])
        if not np.all(np.diff(self.table) > 0):
            raise DivergentIntegral("primitive table is not strictly increasing")
        self._guess = PchipInterpolator(np.log(self.table), np.log(ladder), extrapolate=True)

    @property
    def upper(self):
        return self.ladder[-1]

    @property
    def total(self):
        return self.table[-1]

    def _tail_value(self, x):
        a = self.tail_exponent
        return self.tail_coeff * x ** (1.0 - a) / (1.0 - a)

    def _tail_inverse(self, t):
        a = self.tail_exponent
        return ((1.0 - a) * t / self.tail_coeff) ** (1.0 / (1.0 - a))

    def value(self, x):
        """Evaluate T(x) for 0 <= x <= upper."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        if np.any(x < 0) or np.any(x > self.upper * (1 + 1e-12)):
            raise DomainError("argument outside the tabulated range")
        out = np.zeros_like(x)
        small = x < self.x_min
        pos = small & (x > 0)
        out[pos] = self._tail_value(x[pos])
        big = ~small
        if big.any():
            xb = np.minimum(x[big], self.upper)
            k = np.clip(np.searchsorted(self.ladder, xb, side="right") - 1, 0, self.ladder.size - 2)
            start = self.ladder[k]
            part = np.zeros_like(xb)
            nz = xb > start
            if nz.any():
                part[nz] = gauss_legendre_log(self.g, start[nz], xb[nz])
            out[big] = self.table[k] + part
        return out[0] if scalar else out

    def inverse(self, t, newton_steps=4):
        """Solve T(x) = t for x; monotone cubic guess in log-log, Newton polish."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        if np.any(t < 0) or np.any(t > self.total * (1 + 1e-12)):
            raise DomainError("value outside the tabulated range of the primitive")
        out = np.zeros_like(t)
        small = t < self.table[0]
        pos = small & (t > 0)
        out[pos] = self._tail_inverse(t[pos])
        big = ~small
        if big.any():
            tb = np.minimum(t[big], self.total)
            k = np.clip(np.searchsorted(self.table, tb, side="right") - 1, 0, self.ladder.size - 2)
            lo, hi = self.ladder[k], self.ladder[k + 1]
            x = np.clip(np.exp(self._guess(np.log(tb))), lo, hi)
            for _ in range(newton_steps):
                part = np.zeros_like(x)
                nz = x > lo
                if nz.any():
                    part[nz] = gauss_legendre_log(self.g, lo[nz], x[nz])
                resid = self.table[k] + part - tb
                x = np.clip(x - resid / self.g(x), lo, hi)
            out[big] = x
        return out[0] if scalar else out

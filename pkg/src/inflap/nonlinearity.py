"""Absorption terms f, gradient terms G, their primitives, and the integral
tests that decide between the strong maximum principle and compact support.

Three representations of a continuous nondecreasing function with value 0
at 0 are supported:

* ``power``      f(s) = lam * s**q
* ``table``      monotone samples joined by straight lines
* ``piecewise``  power segments lam_i * s**q_i on [start_i, start_{i+1})
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._quadrature import adaptive_simpson, local_exponents
from .errors import DomainError, InvariantViolation, UsageError

OPERATOR_TAGS = ("L1", "L0")

DIVERGES = "Diverges"
CONVERGES = "Converges"
INCONCLUSIVE = "Inconclusive"


def _as_array(x):
    x = np.asarray(x, dtype=float)
    return x, x.ndim == 0


def _ret(out, scalar):
    return float(out) if scalar else out


@dataclass(frozen=True)
class NonlinearitySpec:
    """A continuous, nondecreasing function on [0, domain_cap] vanishing at 0.

    Use the constructors :meth:`power_law`, :meth:`table`, :meth:`piecewise`
    and :meth:`zero` rather than the raw initializer.
    """

    kind: str
    params: tuple
    domain_cap: float = 1e6
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def power_law(cls, q, lam=1.0, domain_cap=1e6):
        if not q > 0 or not lam > 0:
            raise InvariantViolation(f"power law needs q > 0 and lambda > 0, got q={q}, lambda={lam}")
        return cls("power", (float(q), float(lam)), float(domain_cap))

    @classmethod
    def table(cls, s, f, domain_cap=None):
        s = np.asarray(s, dtype=float)
        f = np.asarray(f, dtype=float)
        if s.ndim != 1 or s.shape != f.shape or s.size < 2:
            raise InvariantViolation("table needs two equal-length 1-d sequences of length >= 2")
        if s[0] != 0.0 or f[0] != 0.0:
            raise InvariantViolation("table must start at (0, 0)")
        if np.any(np.diff(s) <= 0):
            raise InvariantViolation("table abscissae must be strictly increasing")
        if np.any(np.diff(f) < 0):
            raise InvariantViolation("table values must be nondecreasing")
        cap = float(s[-1]) if domain_cap is None else float(domain_cap)
        if cap > s[-1]:
            raise InvariantViolation("domain_cap of a table cannot exceed its last abscissa")
        return cls("table", (tuple(s), tuple(f)), cap)

    @classmethod
    def piecewise(cls, segments, domain_cap=1e6):
        """``segments`` is a sequence of ``(start, q, lam)``; the first start is 0."""
        segs = tuple((float(a), float(q), float(lam)) for a, q, lam in segments)
        if not segs or segs[0][0] != 0.0:
            raise InvariantViolation("first piecewise segment must start at 0")
        starts = [a for a, _, _ in segs]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise InvariantViolation("segment starts must be strictly increasing")
        for a, q, lam in segs:
            if not q > 0 or not lam > 0:
                raise InvariantViolation("each segment needs q > 0 and lambda > 0")
        for (a0, q0, l0), (a1, q1, l1) in zip(segs, segs[1:]):
            left, right = l0 * a1 ** q0, l1 * a1 ** q1
            if abs(left - right) > 1e-9 * max(1.0, abs(left)):
                raise InvariantViolation(f"piecewise function is discontinuous at s={a1}")
        return cls("piecewise", segs, float(domain_cap))

    @classmethod
    def zero(cls, domain_cap=1e6):
        return cls("table", ((0.0, float(domain_cap)), (0.0, 0.0)), float(domain_cap))

    # -- evaluation -------------------------------------------------------
    @property
    def is_zero(self):
        return self.kind == "table" and not any(self.params[1])

    def _check(self, s):
        if np.any(s < 0) or np.any(s > self.domain_cap * (1 + 1e-12)):
            raise DomainError(f"argument outside [0, {self.domain_cap}]")

    def _segments(self):
        segs = self.params
        starts = np.array([a for a, _, _ in segs])
        q = np.array([b for _, b, _ in segs])
        lam = np.array([c for _, _, c in segs])
        return starts, q, lam

    def __call__(self, s):
        s, scalar = _as_array(s)
        self._check(s)
        if self.kind == "power":
            q, lam = self.params
            out = lam * s ** q
        elif self.kind == "table":
            out = np.interp(s, self.params[0], self.params[1])
        else:
            starts, q, lam = self._segments()
            k = np.searchsorted(starts, s, side="right") - 1
            out = lam[k] * s ** q[k]
        return _ret(out, scalar)

    def derivative(self, s):
        """Right derivative; may be infinite at 0 for exponents below 1."""
        s, scalar = _as_array(s)
        self._check(s)
        with np.errstate(divide="ignore"):
            if self.kind == "power":
                q, lam = self.params
                out = q * lam * s ** (q - 1.0) if q != 1.0 else np.full_like(s, lam)
            elif self.kind == "table":
                xs = np.asarray(self.params[0])
                slopes = np.diff(self.params[1]) / np.diff(xs)
                k = np.clip(np.searchsorted(xs, s, side="right") - 1, 0, slopes.size - 1)
                out = slopes[k]
            else:
                starts, q, lam = self._segments()
                k = np.searchsorted(starts, s, side="right") - 1
                out = np.where(q[k] == 1.0, lam[k], q[k] * lam[k] * s ** (q[k] - 1.0))
        return _ret(out, scalar)

    def primitive(self, t):
        """F(t) = int_0^t f(s) ds, exact for every representation."""
        t, scalar = _as_array(t)
        self._check(t)
        if self.kind == "power":
            q, lam = self.params
            out = lam * t ** (q + 1.0) / (q + 1.0)
        elif self.kind == "table":
            xs = np.asarray(self.params[0])
            fs = np.asarray(self.params[1])
            cum = self._cache.get("cum")
            if cum is None:
                cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(xs) * (fs[1:] + fs[:-1]))])
                self._cache["cum"] = cum
            k = np.clip(np.searchsorted(xs, t, side="right") - 1, 0, xs.size - 2)
            ft = np.interp(t, xs, fs)
            out = cum[k] + 0.5 * (t - xs[k]) * (fs[k] + ft)
        else:
            starts, q, lam = self._segments()
            ends = np.append(starts[1:], np.inf)
            out = np.zeros_like(t)
            for a, b, qi, li in zip(starts, ends, q, lam):
                hi = np.clip(t, a, b)
                out += li * (hi ** (qi + 1.0) - a ** (qi + 1.0)) / (qi + 1.0)
        return _ret(out, scalar)

    def scaled(self, c):
        """The function c * f (c > 0)."""
        if not c > 0:
            raise InvariantViolation("scale factor must be positive")
        if self.kind == "power":
            q, lam = self.params
            return NonlinearitySpec("power", (q, lam * c), self.domain_cap)
        if self.kind == "table":
            s, f = self.params
            return NonlinearitySpec("table", (s, tuple(c * v for v in f)), self.domain_cap)
        return NonlinearitySpec("piecewise", tuple((a, q, lam * c) for a, q, lam in self.params),
                                self.domain_cap)

    def describe(self):
        if self.kind == "power":
            return {"kind": "power", "q": self.params[0], "lambda": self.params[1]}
        if self.kind == "table":
            return {"kind": "table", "points": len(self.params[0]), "zero": self.is_zero}
        return {"kind": "piecewise", "segments": [list(s) for s in self.params]}


def eval_F(spec, t):
    """Primitive F(t) of the absorption term."""
    return spec.primitive(t)


@dataclass(frozen=True)
class GradientTermSpec:
    """Gradient term G together with the operator it is paired with.

    For the infinity Laplacian (``L1``) the accumulated function is
    Gamma(t) = int_0^{2t} G + t**4/4, for the normalized one (``L0``)
    Gamma(t) = int_0^{2t} G + t**2/2.
    """

    term: NonlinearitySpec
    operator_tag: str = "L1"

    def __post_init__(self):
        if self.operator_tag not in OPERATOR_TAGS:
            raise UsageError(f"operator tag must be one of {OPERATOR_TAGS}")

    @classmethod
    def zero(cls, operator_tag="L1"):
        return cls(NonlinearitySpec.zero(), operator_tag)

    @classmethod
    def power_law(cls, q, lam=1.0, operator_tag="L1"):
        return cls(NonlinearitySpec.power_law(q, lam), operator_tag)

    @classmethod
    def from_K(cls, K, operator_tag="L1"):
        """G(s) = K s**3 for L1 and G(s) = K s for L0, the pairing used with
        the constant-coefficient equations."""
        if K == 0:
            return cls.zero(operator_tag)
        return cls.power_law(3.0 if operator_tag == "L1" else 1.0, K, operator_tag)

    @property
    def is_zero(self):
        return self.term.is_zero

    def __call__(self, s):
        return self.term(s)

    def derivative(self, s):
        return self.term.derivative(s)

    def gamma(self, t):
        t, scalar = _as_array(t)
        if np.any(t < 0):
            raise DomainError("Gamma is defined for t >= 0")
        poly = 0.25 * t ** 4 if self.operator_tag == "L1" else 0.5 * t ** 2
        out = poly if self.is_zero else self.term.primitive(2.0 * t) + poly
        return _ret(out, scalar)

    def gamma_prime(self, t):
        t, scalar = _as_array(t)
        poly = t ** 3 if self.operator_tag == "L1" else t
        out = poly if self.is_zero else 2.0 * self.term(2.0 * t) + poly
        return _ret(out, scalar)

    def gamma_inverse(self, y):
        y, scalar = _as_array(y)
        if np.any(y < 0):
            raise DomainError("Gamma^-1 is defined for y >= 0")
        # Gamma(t) >= t^4/4 (resp. t^2/2) gives the closed-form upper bracket
        bound = (4.0 * y) ** 0.25 if self.operator_tag == "L1" else np.sqrt(2.0 * y)
        if self.is_zero:
            return _ret(bound, scalar)
        lo = np.zeros_like(y)
        hi = bound.copy()
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = self.gamma(mid) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 4e-16 * hi):
                break
        return _ret(0.5 * (lo + hi), scalar)


def eval_Gamma(g, t):
    """Accumulated gradient function Gamma(t) for the operator of ``g``."""
    return g.gamma(t)


def invert_Gamma(g, y):
    """Inverse of Gamma (strictly increasing, Gamma(0) = 0)."""
    return g.gamma_inverse(y)


# -- integral classifier ---------------------------------------------------

@dataclass(frozen=True)
class Integrand:
    """Integrand near 0 built from F.

    ``kind='power'``: s -> (scale * F(s)) ** (-1/p)
    ``kind='gamma'``: s -> 1 / Gamma^-1(scale * F(s))
    """

    kind: str
    p: float = 4.0
    scale: float = 1.0
    gradient: GradientTermSpec = None

    @classmethod
    def F_power(cls, p, scale=1.0):
        if not p > 0:
            raise UsageError("p must be positive")
        return cls("power", float(p), float(scale))

    @classmethod
    def gamma_inverse(cls, g, scale=1.0):
        return cls("gamma", scale=float(scale), gradient=g)

    @classmethod
    def named(cls, name, p=None, g=None, scale=1.0):
        """Map the short names ``Finv4``, ``Finv2``, ``Finvp`` and ``GammaInvF``."""
        if name == "Finv4":
            return cls.F_power(4.0, scale)
        if name == "Finv2":
            return cls.F_power(2.0, scale)
        if name == "Finvp":
            if p is None:
                raise UsageError("selector Finvp needs an exponent p")
            return cls.F_power(p, scale)
        if name == "GammaInvF":
            if g is None:
                raise UsageError("selector GammaInvF needs a gradient term")
            return cls.gamma_inverse(g, scale)
        raise UsageError(f"unknown integrand selector {name!r}")

    def __call__(self, f, s):
        F = self.scale * f.primitive(s)
        with np.errstate(divide="ignore"):
            if self.kind == "power":
                return F ** (-1.0 / self.p)
            return 1.0 / self.gradient.gamma_inverse(F)

    def label(self):
        if self.kind == "power":
            return f"(scale*F)^(-1/{self.p:g})"
        return f"1/Gamma^-1(scale*F) [{self.gradient.operator_tag}]"


@dataclass(frozen=True)
class ClassificationResult:
    verdict: str
    estimated_singularity_exponent: float
    integral_estimate: float
    confidence_band: tuple
    flags: tuple = ()

    def to_dict(self):
        est = self.integral_estimate
        return {
            "verdict": self.verdict,
            "estimated_singularity_exponent": self.estimated_singularity_exponent,
            "integral_estimate": "infinity" if math.isinf(est) else est,
            "confidence_band": list(self.confidence_band),
            "flags": list(self.flags),
        }


def classify_integral(f, integrand, delta=1.0, *, floor_rungs=40, fit_rungs=12,
                      margin=0.02, rtol=1e-12):
    """Decide whether ``int_0^delta integrand(s) ds`` is finite.

    The integrand is sampled on the ladder s_k = delta * 2**-k down to
    ``delta * 2**-floor_rungs``; the singularity exponent is the negative
    log-log slope fitted over the last ``fit_rungs`` rungs.

    * exponent > 1 + margin: ``Diverges``
    * exponent < 1 - margin: ``Converges``; the estimate is the adaptive
      Simpson integral over [s_floor, delta] plus the fitted power tail.
    * otherwise ``Diverges`` only if every local exponent on the fitted rungs
      is >= 1 (then s * g(s) does not decrease towards 0 and c/s is a
      minorant), else ``Inconclusive``.

    If F vanishes at a rung, f is zero on an interval at 0 and the integrand
    is infinite on a set of positive measure: ``Diverges`` with the flag
    ``f_vanishes_near_zero``.
    """
    if not delta > 0:
        raise DomainError("delta must be positive")
    if isinstance(integrand, str):
        integrand = Integrand.named(integrand)
    if f.kind == "table":
        s_tab, f_tab = np.asarray(f.params[0]), np.asarray(f.params[1])
        if np.any(np.diff(s_tab) <= 0) or np.any(np.diff(f_tab) < 0):
            raise InvariantViolation("table nonlinearity is not monotone")

    ladder = delta * 2.0 ** -np.arange(floor_rungs + 1)
    Fk = f.primitive(ladder)
    if np.any(Fk <= 0):
        return ClassificationResult(DIVERGES, math.inf, math.inf, (math.inf, math.inf),
                                    ("f_vanishes_near_zero",))

    g = integrand(f, ladder)
    tail_s, tail_g = ladder[-fit_rungs:], g[-fit_rungs:]
    slope = np.polyfit(np.log(tail_s), np.log(tail_g), 1)[0]
    exponent = float(-slope)
    local = local_exponents(tail_s[::-1], tail_g[::-1])
    band = (float(local.min()), float(local.max()))

    def estimate():
        seg = adaptive_simpson(lambda s: integrand(f, s), ladder[1:], ladder[:-1], rtol=rtol)
        s0 = ladder[-1]
        tail = g[-1] * s0 / (1.0 - exponent)
        return float(seg.sum() + tail)

    if exponent > 1.0 + margin:
        return ClassificationResult(DIVERGES, exponent, math.inf, band)
    if exponent < 1.0 - margin:
        return ClassificationResult(CONVERGES, exponent, estimate(), band)
    if band[0] >= 1.0 - 1e-9:
        return ClassificationResult(DIVERGES, exponent, math.inf, band, ("boundary_minorant",))
    partial = float(adaptive_simpson(lambda s: integrand(f, s), ladder[1:], ladder[:-1],
                                     rtol=rtol).sum())
    return ClassificationResult(INCONCLUSIVE, exponent, partial, band, ("truncated_at_floor",))

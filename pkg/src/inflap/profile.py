"""One-dimensional radial profiles with derivative estimates."""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolation

PROVENANCES = ("barrier", "deadcore", "csp", "manual")
GLUING_TOL = 1e-9


def _is_uniform(x):
    d = np.diff(x)
    return np.allclose(d, d[0], rtol=1e-9, atol=0.0)


def fd_first(y, x):
    """First derivative: 4th-order central differences inside, 2nd-order
    one-sided at the two end nodes (and 2nd-order central next to them)."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.size < 5 or not _is_uniform(x):
        return np.gradient(y, x, edge_order=2)
    h = x[1] - x[0]
    d = np.empty_like(y)
    d[2:-2] = (-y[4:] + 8.0 * y[3:-1] - 8.0 * y[1:-3] + y[:-4]) / (12.0 * h)
    d[1] = (y[2] - y[0]) / (2.0 * h)
    d[-2] = (y[-1] - y[-3]) / (2.0 * h)
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h)
    d[-1] = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * h)
    return d


def fd_second(y, x):
    """Second derivative with the same stencil orders as :func:`fd_first`."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.size < 5 or not _is_uniform(x):
        return np.gradient(np.gradient(y, x, edge_order=2), x, edge_order=2)
    h = x[1] - x[0]
    d = np.empty_like(y)
    d[2:-2] = (-y[4:] + 16.0 * y[3:-1] - 30.0 * y[2:-2] + 16.0 * y[1:-3] - y[:-4]) / (12.0 * h * h)
    d[1] = (y[2] - 2.0 * y[1] + y[0]) / (h * h)
    d[-2] = (y[-1] - 2.0 * y[-2] + y[-3]) / (h * h)
    d[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / (h * h)
    d[-1] = (2.0 * y[-1] - 5.0 * y[-2] + 4.0 * y[-3] - y[-4]) / (h * h)
    return d


def split_fd(y, x, at, derivative=fd_first):
    """Apply a finite-difference stencil separately on each side of the node
    ``at`` so that a kink there does not pollute neighbouring estimates."""
    k = int(np.argmin(np.abs(np.asarray(x) - at)))
    if k < 2 or k > len(x) - 3:
        return derivative(y, x)
    return np.concatenate([derivative(y[: k + 1], x[: k + 1]), derivative(y[k:], x[k:])[1:]])


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Profile:
    """Samples of a radial function phi on a strictly increasing grid.

    ``support_edge`` marks the point where the profile is glued to its zero
    extension; value and slope must vanish there.  Values must be
    nonnegative except for barrier profiles, which cross zero at their
    terminal point by construction.
    """

    grid: np.ndarray
    values: np.ndarray
    first_derivative: np.ndarray
    second_derivative: np.ndarray
    support_edge: float = None
    provenance: str = "manual"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("grid", "values", "first_derivative", "second_derivative"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = self.grid.size
        if n < 3:
            raise InvariantViolation("a profile needs at least 3 nodes")
        if any(getattr(self, k).shape != (n,) for k in ("values", "first_derivative", "second_derivative")):
            raise InvariantViolation("grid, values and derivatives must have equal length")
        if np.any(np.diff(self.grid) <= 0):
            raise InvariantViolation("grid must be strictly increasing")
        if self.provenance not in PROVENANCES:
            raise InvariantViolation(f"unknown provenance {self.provenance!r}")
        if self.provenance != "barrier" and np.any(self.values < 0):
            raise InvariantViolation("profile values must be nonnegative")
        if self.support_edge is not None:
            k = self.node_index(self.support_edge)
            if k is None:
                raise InvariantViolation("support_edge must be a grid node")
            if abs(self.values[k]) > GLUING_TOL or abs(self.first_derivative[k]) > GLUING_TOL:
                raise InvariantViolation("value and slope must vanish at the support edge")

    @classmethod
    def from_values(cls, grid, values, provenance="manual", support_edge=None, metadata=None):
        """Build a profile from samples, estimating derivatives by finite differences."""
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.size < 3 or grid.shape != values.shape:
            raise InvariantViolation("need at least 3 nodes and matching grid and values")
        if np.any(np.diff(grid) <= 0):
            raise InvariantViolation("grid must be strictly increasing")
        return cls(grid, values, fd_first(values, grid), fd_second(values, grid),
                   support_edge, provenance, dict(metadata or {}))

    @classmethod
    def from_function(cls, func, grid, **kw):
        grid = np.asarray(grid, dtype=float)
        return cls.from_values(grid, func(grid), **kw)

    @property
    def h(self):
        return float(self.grid[1] - self.grid[0])

    def node_index(self, r, rtol=1e-9):
        """Index of the node equal to ``r`` (within rounding), else None."""
        k = int(np.argmin(np.abs(self.grid - r)))
        scale = max(1.0, abs(r))
        return k if abs(self.grid[k] - r) <= rtol * scale else None

    def at(self, r):
        """(value, first derivative, second derivative) at ``r``; nodes are
        read directly, other points use linear interpolation."""
        k = self.node_index(r)
        if k is not None:
            return self.values[k], self.first_derivative[k], self.second_derivative[k]
        return tuple(float(np.interp(r, self.grid, a))
                     for a in (self.values, self.first_derivative, self.second_derivative))

    def restrict(self, a, b):
        mask = (self.grid >= a - 1e-12) & (self.grid <= b + 1e-12)
        edge = self.support_edge if self.support_edge is not None and a <= self.support_edge <= b else None
        return Profile(self.grid[mask], self.values[mask], self.first_derivative[mask],
                       self.second_derivative[mask], edge, self.provenance, dict(self.metadata))

    # -- serialization ----------------------------------------------------
    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "phi", "dphi", "d2phi"])
            for row in zip(self.grid, self.values, self.first_derivative, self.second_derivative):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def read_csv(cls, path, provenance="manual", support_edge=None):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3], support_edge, provenance)

    def to_dict(self, include_samples=True):
        out = {
            "provenance": self.provenance,
            "support_edge": self.support_edge,
            "nodes": int(self.grid.size),
            "interval": [float(self.grid[0]), float(self.grid[-1])],
            "metadata": self.metadata,
        }
        if include_samples:
            out.update(t=self.grid.tolist(), phi=self.values.tolist(),
                       dphi=self.first_derivative.tolist(), d2phi=self.second_derivative.tolist())
        return out

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(d["t"], d["phi"], d["dphi"], d["d2phi"], d.get("support_edge"),
                   d.get("provenance", "manual"), d.get("metadata", {}))

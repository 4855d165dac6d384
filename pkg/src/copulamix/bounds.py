"""Closed-form upper bounds on the maximal correlation and beta-mixing rates."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import CopulaModel
from .errors import InfeasibleEnvelopeError, InputError, NotApplicableError, ParameterError
from .families import TABLE1, TableDensitySpec
from .grid import Grid

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class BoundReport:
    """A bound ``value`` compared against ``threshold``; satisfied iff strictly below."""

    name: str
    value: float
    threshold: float
    inputs: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def satisfied(self):
        return bool(self.value < self.threshold)

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, "name": self.name, "value": self.value,
                "threshold": self.threshold, "satisfied": self.satisfied,
                "inputs": self.inputs, "extras": self.extras}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, default=float)


def theorem3_bound(model: CopulaModel, grid: Grid) -> BoundReport:
    """Derivative test: ``k1 + k2 < 12`` gives ``rho_1 <= sqrt((k1 + k2)/12)``.

    ``k1 = || int |c_y(x, y)| dy ||_2^2`` and
    ``k2 = || |c(x, 1) - c(x, 0)| + int |c_y(x, y)| dy ||_2^2``.
    """
    if model.density_y_derivative is None:
        raise InputError(f"{model.label}: density_y_derivative is required")
    x = grid.nodes
    cy = np.asarray(model.density_y_derivative(x[:, None], x[None, :]), float)
    cy = np.broadcast_to(cy, (x.size, x.size))
    spread = np.abs(cy) @ grid.weights
    jump = np.abs(np.asarray(model.density(x, 1.0), float) - np.asarray(model.density(x, 0.0), float))
    k1 = float(grid.integrate(spread ** 2))
    k2 = float(grid.integrate((jump + spread) ** 2))
    total = k1 + k2
    return BoundReport("theorem3", total, 12.0, {"model": model.label},
                       {"k1": k1, "k2": k2, "rho1_bound": float(np.sqrt(total / 12.0))})


def _sample(fn, nodes):
    if callable(fn):
        return np.broadcast_to(np.asarray(fn(nodes), float), nodes.shape).copy()
    arr = np.asarray(fn, float)
    if arr.ndim == 0:
        return np.full(nodes.shape, float(arr))
    if arr.shape != nodes.shape:
        raise InputError("envelope samples must match the grid size")
    return arr


def envelope_bound(eps1, eps2, grid: Grid) -> BoundReport:
    """``rho_1 <= 1 - (int eps1 + int eps2)/2`` when ``c(x, y) >= eps1(x) + eps2(y)``.

    ``eps1``, ``eps2`` are callables, scalars, or samples at the grid nodes.
    """
    e1, e2 = _sample(eps1, grid.nodes), _sample(eps2, grid.nodes)
    for name, e in (("eps1", e1), ("eps2", e2)):
        if np.any(e < 0):
            i = int(np.argmax(e < 0))
            raise InputError(f"{name} is negative at x = {grid.nodes[i]:.6g}")
    i1, i2 = float(grid.integrate(e1)), float(grid.integrate(e2))
    if i1 + i2 >= 2.0:
        raise InfeasibleEnvelopeError(f"int eps1 + int eps2 = {i1 + i2:.6g} must stay below 2")
    return BoundReport("envelope", 1.0 - 0.5 * (i1 + i2), 1.0, {},
                       {"int_eps1": i1, "int_eps2": i2})


def envelope_extract(model: CopulaModel, grid: Grid):
    """Default envelope: half the row minimum and half the column minimum.

    ``c(x_i, y_j) >= min_j c + min_i c >= eps1 + eps2`` holds at every node.
    """
    dens = model.density_matrix(grid)
    eps1 = 0.5 * np.maximum(dens.min(axis=1), 0.0)
    eps2 = 0.5 * np.maximum(dens.min(axis=0), 0.0)
    return eps1, eps2


def table2_bound(spec: TableDensitySpec) -> BoundReport:
    """Printed upper bound on rho_1 for the m1..m4 densities."""
    if spec.which not in TABLE1:
        raise NotApplicableError(f"no closed-form rho_1 bound for {spec.which}")
    s = spec.resolved()
    num, den = s.table1_terms()
    if abs(den) <= 1e-12:
        raise ParameterError(f"{spec.which}: bound is 0/0 for this degenerate g, h")
    inputs = {k: getattr(s, k) for k in ("b1", "a1", "b2", "a2", "g_l1", "h_l1")}
    return BoundReport(f"table2_{spec.which}", float(num / den), 1.0, inputs)


@dataclass(frozen=True)
class DMRSandwich:
    """Bracket ``lower <= beta_n <= upper`` for the holding-probability kernel.

    ``lower`` is ``a**(n+1)/(n+1)``; ``expectation`` is ``E[p(X)**n] = a**n/(n+1)``
    under the uniform law, the other reading of the lower bound.
    """

    a: float
    n: int
    lower: float
    upper: float
    expectation: float

    def __iter__(self):
        return iter((self.lower, self.upper))

    @property
    def loosest_lower(self):
        return min(self.lower, self.expectation)

    def contains(self, value, tol=0.0):
        return self.loosest_lower - tol <= value <= self.upper + tol


def dmr_sandwich(a, n) -> DMRSandwich:
    a = float(a)
    if not 0.0 < a <= 1.0:
        raise ParameterError(f"a must lie in (0, 1], got {a}")
    if int(n) != n or n < 1:
        raise InputError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    half = n // 2
    return DMRSandwich(a, n, a ** (n + 1) / (n + 1), 3.0 * a ** (half + 1) / (half + 1),
                       a ** n / (n + 1))


def bilinear_ratio(f_matrix, g, h, grid: Grid):
    """``|int int f g h| / (||g||_2 ||h||_2)`` on the grid."""
    w = grid.weights
    num = abs(float((g * w) @ f_matrix @ (h * w)))
    den = float(np.sqrt(grid.integrate(g ** 2) * grid.integrate(h ** 2)))
    return num / den

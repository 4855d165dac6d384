"""Small-set (minorization) certificates and Lyapunov drift checks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import CopulaModel, atom_transfer_matrix, n_step
from .errors import InputError, ParameterError
from .families import FrechetParams, make_frechet
from .grid import Grid

SCHEMA_VERSION = 1
DEFAULT_TOL = 1e-9


def _interval(S):
    lo, hi = map(float, S)
    if not 0.0 <= lo < hi <= 1.0:
        raise InputError(f"S must be a sub-interval of [0, 1], got {S!r}")
    return lo, hi


def _in(S, x):
    lo, hi = S
    return (x >= lo) & (x <= hi)


def cell_kernel(model: CopulaModel, grid: Grid):
    """``P(x_i, cell_j)``: density times cell width plus the atoms' cell transitions."""
    kernel = model.density_matrix(grid) * grid.weights[None, :]
    for atom in model.atoms:
        kernel = kernel + atom_transfer_matrix(atom, grid)
    return kernel


# --- minorization ------------------------------------------------------------------

@dataclass
class MinorizationCertificate:
    """``P^n(x, A) >= q mu(A)`` for ``x`` in ``S``, checked over grid intervals ``A``.

    ``borel_margin`` is the exact minimum over Borel sets of the absolutely
    continuous part, ``min_x int min(c_n(x, y) - q, 0) dy``; atoms are
    Lebesgue-null so a Borel set can always avoid them.
    """

    S: tuple
    q: float
    n: int
    worst_margin: float
    borel_margin: float
    worst_x: float
    worst_set: tuple
    tolerance: float = DEFAULT_TOL

    @property
    def valid(self):
        return self.worst_margin >= -self.tolerance

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, "S": list(self.S), "q": self.q, "n": self.n,
                "worst_margin": self.worst_margin, "borel_margin": self.borel_margin,
                "worst_x": self.worst_x, "worst_set": list(self.worst_set),
                "valid": self.valid, "tolerance": self.tolerance}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _min_interval_sums(d):
    """Minimum contiguous-block sum of each row of ``d`` and its ``[i, j)`` block."""
    n_rows, n = d.shape
    prefix = np.concatenate([np.zeros((n_rows, 1)), np.cumsum(d, axis=1)], axis=1)
    run_max = np.maximum.accumulate(prefix[:, :-1], axis=1)
    gaps = prefix[:, 1:] - run_max
    j = np.argmin(gaps, axis=1)
    best = gaps[np.arange(n_rows), j]
    starts = np.array([int(np.argmax(prefix[r, : j[r] + 1])) for r in range(n_rows)])
    return best, starts, j + 1


def minorization_check(model: CopulaModel, S, q, grid: Grid, n=1, tol=DEFAULT_TOL):
    """Worst margin of ``P^n(x, A) - q mu(A)`` over grid nodes ``x`` in ``S``
    and every interval ``A`` made of whole grid cells.
    """
    S = _interval(S)
    q = float(q)
    if not 0.0 < q <= 1.0:
        raise InputError(f"q must lie in (0, 1], got {q}")
    mn = model if n == 1 else n_step(model, n, grid)
    rows = _in(S, grid.nodes)
    if not rows.any():
        raise InputError("S contains no grid node")
    idx = np.flatnonzero(rows)
    kernel = cell_kernel(mn, grid)[idx]
    d = kernel - q * grid.weights[None, :]
    best, start, stop = _min_interval_sums(d)
    r = int(np.argmin(best))
    dens = mn.density_matrix(grid)[idx]
    borel = float(np.min(np.minimum(dens - q, 0.0) @ grid.weights))
    worst_set = (float(grid.edges[start[r]]), float(grid.edges[stop[r]]))
    return MinorizationCertificate(S, q, int(n), float(best[r]), borel,
                                   float(grid.nodes[idx[r]]), worst_set, tol)


def union_margins(model: CopulaModel, S, q, grid: Grid, n_sets=200, max_pieces=5, seed=0):
    """Margins over random finite unions of grid intervals (spot check)."""
    S = _interval(S)
    idx = np.flatnonzero(_in(S, grid.nodes))
    d = cell_kernel(model, grid)[idx] - q * grid.weights[None, :]
    rng = np.random.default_rng(seed)
    out = np.empty(n_sets)
    for k in range(n_sets):
        mask = np.zeros(grid.size, bool)
        for _ in range(rng.integers(1, max_pieces + 1)):
            a, b = np.sort(rng.integers(0, grid.size + 1, size=2))
            mask[a:b] = True
        out[k] = float(np.min(d[:, mask].sum(axis=1))) if mask.any() else 0.0
    return out


# --- drift ---------------------------------------------------------------------------

@dataclass
class DriftSpec:
    """Lyapunov function ``L``, small set ``S`` and constants ``r > 1``, ``gamma > 0``, ``K > 0``."""

    L: Callable
    S: tuple
    r: float
    gamma: float
    K: float
    grid: Grid = field(default_factory=Grid.midpoint, repr=False)

    def __post_init__(self):
        self.S = _interval(self.S)
        if not self.r > 1.0:
            raise ParameterError(f"r must exceed 1, got {self.r}")
        if not self.gamma > 0.0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")
        if not self.K > 0.0:
            raise ParameterError(f"K must be positive, got {self.K}")
        vals = self.values(self.grid.nodes)
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ParameterError("L must be finite and nonnegative")
        on_s = vals[_in(self.S, self.grid.nodes)]
        if on_s.size and on_s.min() <= 0.0:
            raise ParameterError("L must be bounded away from 0 on S")

    def values(self, x):
        x = np.asarray(x, float)
        return np.broadcast_to(np.asarray(self.L(x), float), x.shape)


@dataclass
class DriftReport:
    drift_slack: float      # min over S^c of L(x) - gamma - r E[L(X1) | x]
    bound_slack: float      # K - max over S of int_{S^c} L dP(x, .)
    worst_drift_x: float
    worst_bound_x: float
    tolerance: float = DEFAULT_TOL

    @property
    def drift_ok(self):
        return self.drift_slack >= -self.tolerance

    @property
    def bound_ok(self):
        return self.bound_slack > 0.0

    @property
    def ok(self):
        return self.drift_ok and self.bound_ok

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, "drift_slack": self.drift_slack,
                "bound_slack": self.bound_slack, "drift_ok": self.drift_ok,
                "bound_ok": self.bound_ok, "ok": self.ok,
                "worst_drift_x": self.worst_drift_x, "worst_bound_x": self.worst_bound_x}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _expectation(model: CopulaModel, values_fn, grid: Grid, restrict=None):
    """``E[v(X1) 1{X1 in restrict} | X0 = x]`` at the nodes; atoms handled pointwise."""
    x = grid.nodes
    v = values_fn(x)
    if restrict is not None:
        v = v * restrict(x)
    out = model.density_matrix(grid) @ (v * grid.weights)
    for atom in model.atoms:
        y = atom.target(x)
        vy = values_fn(y)
        if restrict is not None:
            vy = vy * restrict(y)
        out = out + atom.weight_at(x) * vy
    return out


def drift_check(model: CopulaModel, spec: DriftSpec, grid: Grid, tol=DEFAULT_TOL) -> DriftReport:
    x = grid.nodes
    inside = _in(spec.S, x)
    if inside.all():
        raise InputError("S covers every grid node; the drift condition is vacuous")
    lx = spec.values(x)
    expected = _expectation(model, spec.values, grid)
    drift = lx - spec.gamma - spec.r * expected
    out_idx = np.flatnonzero(~inside)
    i = out_idx[int(np.argmin(drift[out_idx]))]

    def outside(y):
        return (~_in(spec.S, np.asarray(y, float))).astype(float)

    tail = _expectation(model, spec.values, grid, restrict=outside)
    in_idx = np.flatnonzero(inside)
    if in_idx.size:
        j = in_idx[int(np.argmax(tail[in_idx]))]
        bound_slack, worst_b = float(spec.K - tail[j]), float(x[j])
    else:
        bound_slack, worst_b = float(spec.K), float("nan")
    return DriftReport(float(drift[i]), bound_slack, float(x[i]), worst_b, tol)


def frechet_lyapunov(x):
    """``L(x) = 1{x >= 1/2} + 2 * 1{x < 1/2}``."""
    x = np.asarray(x, float)
    return np.where(x >= 0.5, 1.0, 2.0)


def frechet_drift_spec(a, b, grid: Grid | None = None) -> DriftSpec:
    """Lyapunov data for the Frechet chain: ``S = [1/2, 1]``, ``r = 4/(a+3)``,
    ``gamma = b/(a+3)`` and ``K`` one above the largest tail integral on ``S``.
    """
    FrechetParams(a, b)
    a, b = float(a), float(b)
    if a + b >= 1.0:
        raise ParameterError("a + b = 1: the chain does not mix and has no small set")
    if b <= 0.0:
        raise ParameterError("b = 0 makes gamma = 0; supply a custom DriftSpec instead")
    grid = grid or Grid.midpoint()
    S = (0.5, 1.0)
    model = make_frechet(a, b)

    def outside(y):
        return (np.asarray(y, float) < 0.5).astype(float)

    tail = _expectation(model, frechet_lyapunov, grid, restrict=outside)
    K = float(tail[_in(S, grid.nodes)].max()) + 1.0
    return DriftSpec(frechet_lyapunov, S, 4.0 / (a + 3.0), b / (a + 3.0), K, grid)

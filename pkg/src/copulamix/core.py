"""Copula models: density plus identity/flip atoms, CDFs, and the fold product.

A copula-based chain with uniform marginals is described by its transition
law ``P(x, dy) = sum_k w_k(x) delta_{m_k(x)}(dy) + c(x, y) dy``: an
absolutely continuous part with density ``c`` and a few atoms that move the
state deterministically (``y = x`` or ``y = 1 - x``) with state-dependent
probability. The Hoeffding bounds M and W are pure atoms.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import InputError, NumericError, UnsupportedFeatureError
from .grid import Grid, gauss_panels

IDENTITY = "identity"
FLIP = "flip"
CURVE = "curve"

_COMPOSE = {
    (IDENTITY, IDENTITY): IDENTITY,
    (IDENTITY, FLIP): FLIP,
    (FLIP, IDENTITY): FLIP,
    (FLIP, FLIP): IDENTITY,
}


@dataclass(frozen=True)
class AtomicMap:
    """Deterministic move ``x -> target(x)`` taken with probability ``weight(x)``.

    ``weight`` is either a constant or a vectorized callable. ``kind='curve'``
    holds a decreasing involution in ``curve`` (the boundary curve of a
    non-strict Archimedean copula); it is supported everywhere except in
    :func:`fold`.
    """

    kind: str
    weight: float | Callable = 0.0
    curve: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in (IDENTITY, FLIP, CURVE):
            raise InputError(f"unknown atomic map {self.kind!r}")
        if (self.kind == CURVE) != (self.curve is not None):
            raise InputError("a curve function is required exactly for kind='curve'")

    @property
    def constant(self):
        return None if callable(self.weight) else float(self.weight)

    def weight_at(self, x):
        x = np.asarray(x, dtype=float)
        if callable(self.weight):
            return np.broadcast_to(np.asarray(self.weight(x), dtype=float), x.shape)
        return np.full(x.shape, float(self.weight))

    def target(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == IDENTITY:
            return x
        if self.kind == FLIP:
            return 1.0 - x
        return np.asarray(self.curve(x), dtype=float)

    def then(self, other):
        """Atom of the two-step move: this one first, then ``other``."""
        try:
            kind = _COMPOSE[self.kind, other.kind]
        except KeyError:
            raise UnsupportedFeatureError(
                f"cannot compose atomic maps {self.kind!r} and {other.kind!r}") from None
        if self.constant is not None and other.constant is not None:
            return AtomicMap(kind, self.constant * other.constant)
        first, second = self, other
        return AtomicMap(kind, lambda x: first.weight_at(x) * second.weight_at(first.target(x)))


class TabulatedDensity:
    """Density constant on the grid cells, as produced by :func:`fold`.

    Evaluation anywhere returns the value of the containing cell, so every
    integral of a tabulated density is exact.
    """

    def __init__(self, grid: Grid, values):
        values = np.array(values, dtype=float)
        if values.shape != (grid.size, grid.size):
            raise InputError("tabulated density must be N x N for the grid")
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        w = grid.weights
        self._row_prefix = np.concatenate(
            [np.zeros((grid.size, 1)), np.cumsum(values * w[None, :], axis=1)], axis=1)
        prefix = np.zeros((grid.size + 1, grid.size + 1))
        prefix[1:, 1:] = np.cumsum(np.cumsum(values * np.outer(w, w), axis=0), axis=1)
        self._prefix = prefix

    def __call__(self, x, y):
        return self.values[self.grid.cell_index(x), self.grid.cell_index(y)]

    def row_integral(self, x, v):
        """``int_0^v c(x, t) dt``."""
        x, v = np.broadcast_arrays(np.asarray(x, float), np.asarray(v, float))
        i = self.grid.cell_index(x)
        j = self.grid.cell_index(v)
        return self._row_prefix[i, j] + self.values[i, j] * (v - self.grid.edges[j])

    def integral(self, x, y):
        """``int_0^x int_0^y c(s, t) dt ds`` (bilinear within cells, hence exact)."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        e = self.grid.edges
        i = self.grid.cell_index(x)
        j = self.grid.cell_index(y)
        dx = x - e[i]
        dy = y - e[j]
        p = self._prefix
        w = self.grid.weights
        col_i = (p[i + 1, j] - p[i, j]) / w[i]      # d/dx at row-cell i, up to edge j
        row_j = (p[i, j + 1] - p[i, j]) / w[j]      # d/dy at column-cell j, up to edge i
        return p[i, j] + dx * col_i + dy * row_j + dx * dy * self.values[i, j]


@dataclass(frozen=True, eq=False)
class CopulaModel:
    """Transition law of a copula-based chain with uniform marginals.

    Parameters
    ----------
    density : callable
        Vectorized ``c(x, y)`` of the absolutely continuous part.
    atoms : tuple of AtomicMap
        Singular part.
    density_y_derivative : callable, optional
        ``c_y(x, y)``; needed for the Fourier-coefficient bound.
    ac_cdf, ac_inverse, cdf : callable, optional
        Closed forms for ``int_0^v c(x,t) dt``, its inverse in ``v`` given
        a fraction ``p`` of the row mass, and the copula CDF itself. Missing
        ones are computed numerically.
    closed_form : bool
        False when quantities are quadrature-derived (fold results,
        Archimedean densities); selects the looser default tolerance.
    """

    density: Callable
    atoms: tuple = ()
    density_y_derivative: Optional[Callable] = None
    label: str = ""
    family: Optional[str] = None
    params: tuple = ()
    ac_cdf: Optional[Callable] = None
    ac_inverse: Optional[Callable] = None
    cdf: Optional[Callable] = None
    closed_form: bool = True
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not callable(self.density):
            raise InputError("density must be callable")
        object.__setattr__(self, "atoms", tuple(self.atoms))

    def density_at(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        try:
            out = self.density(x, y)
        except Exception as exc:  # user-supplied callables
            raise InputError(f"density of {self.label or 'model'} not evaluable: {exc}") from exc
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape)

    def density_matrix(self, grid: Grid):
        """``c(x_i, x_j)`` on the grid; raises on NaN/inf with the location."""
        if isinstance(self.density, TabulatedDensity) and self.density.grid == grid:
            values = self.density.values
        else:
            values = self.density_at(grid.nodes[:, None], grid.nodes[None, :])
        bad = ~np.isfinite(values)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise NumericError("non-finite density", (float(grid.nodes[i]), float(grid.nodes[j])))
        return np.array(values)

    def atom_mass(self, x):
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape)
        for atom in self.atoms:
            total = total + atom.weight_at(x)
        return total

    def atom(self, kind):
        for a in self.atoms:
            if a.kind == kind:
                return a
        return None

    def with_label(self, label):
        return replace(self, label=label)


@dataclass
class ValidationReport:
    grounded_ok: bool
    margins_ok: bool
    two_increasing_ok: bool
    worst_violation: float
    details: list = field(default_factory=list)
    tolerance: float = 0.0

    @property
    def ok(self):
        return self.grounded_ok and self.margins_ok and self.two_increasing_ok

    def to_dict(self):
        return {
            "grounded_ok": self.grounded_ok,
            "margins_ok": self.margins_ok,
            "two_increasing_ok": self.two_increasing_ok,
            "worst_violation": self.worst_violation,
            "tolerance": self.tolerance,
            "details": [[str(loc), float(mag)] for loc, mag in self.details],
        }


def _check_unit(name, value):
    value = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(value)) or np.any(value < 0) or np.any(value > 1):
        raise InputError(f"{name} must lie in [0, 1]")
    return value


def ac_cdf(model: CopulaModel, x, v):
    """``int_0^v c(x, t) dt`` by closed form, exact cell sums, or quadrature."""
    if model.ac_cdf is not None:
        x, v = np.broadcast_arrays(np.asarray(x, float), np.asarray(v, float))
        return np.asarray(model.ac_cdf(x, v), dtype=float)
    if isinstance(model.density, TabulatedDensity):
        return model.density.row_integral(x, v)
    x, v = np.broadcast_arrays(np.asarray(x, float), np.asarray(v, float))
    t, w = gauss_panels(0.0, v, panels=16, order=8)
    return np.sum(model.density_at(x[..., None], t) * w, axis=-1)


def conditional_cdf(model: CopulaModel, x, v):
    """``P(X_1 <= v | X_0 = x) = C_{,1}(x, v)``.

    Atoms sitting exactly at ``v`` count as ``<= v`` (right-continuity).
    """
    x = _check_unit("x", x)
    v = _check_unit("v", v)
    x, v = np.broadcast_arrays(x, v)
    total = ac_cdf(model, x, v)
    for atom in model.atoms:
        total = total + atom.weight_at(x) * (atom.target(x) <= v)
    return total


def _atom_cdf(atom: AtomicMap, x, y, kinks=()):
    """``int_0^x w(s) 1{target(s) <= y} ds`` for one atom."""
    if atom.kind == IDENTITY:
        lo, hi = np.zeros_like(x), np.minimum(x, y)
    else:
        # decreasing involution: target(s) <= y  <=>  s >= target(y)
        lo, hi = atom.target(y), x
    hi = np.maximum(hi, lo)
    if atom.constant is not None:
        return atom.constant * (hi - lo)
    total = np.zeros(np.shape(hi))
    cuts = [0.0, *sorted(kinks), 1.0]
    for c0, c1 in zip(cuts[:-1], cuts[1:]):
        a, b = np.clip(lo, c0, c1), np.clip(hi, c0, c1)
        s, w = gauss_panels(a, b, panels=64, order=8)
        total = total + np.sum(atom.weight_at(s) * w, axis=-1)
    return total


def reconstruct_cdf(model: CopulaModel, x, y):
    """Copula CDF rebuilt from density and atoms, ignoring any closed form."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    if isinstance(model.density, TabulatedDensity):
        total = model.density.integral(x, y)
    else:
        # split [0, x] at known kinks of the density in x
        cuts = [0.0, *sorted(model.extras.get("kinks", ())), 1.0]
        total = np.zeros(x.shape)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            a, b = np.minimum(x, lo), np.minimum(x, hi)
            s, w = gauss_panels(a, b, panels=32, order=8)
            total = total + np.sum(ac_cdf(model, s, y[..., None]) * w, axis=-1)
    for atom in model.atoms:
        total = total + _atom_cdf(atom, x, y, model.extras.get("kinks", ()))
    return total


def copula_cdf(model: CopulaModel, x, y):
    """``C(x, y)``: the model's closed form when it has one."""
    if model.cdf is not None:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return np.asarray(model.cdf(x, y), dtype=float)
    return reconstruct_cdf(model, x, y)


def atom_transfer_matrix(atom: AtomicMap, grid: Grid):
    """Cell-to-cell transition probabilities of one atom.

    Entry ``(i, j)`` is the probability of jumping by this atom into cell
    ``j`` from the node of cell ``i``. Identity and flip atoms land on nodes
    exactly; a curve atom spreads the mass of each source cell over the cells
    its image crosses, using the cumulative weight ``int w(s) ds``.
    """
    n = grid.size
    if atom.kind != CURVE:
        out = np.zeros((n, n))
        idx = np.arange(n)
        out[idx, _node_permutation(atom.kind, grid)] = atom.weight_at(grid.nodes)
        return out
    e = grid.edges
    # {s : target(s) in [e_j, e_{j+1})} = (target(e_{j+1}), target(e_j)] for a decreasing map
    images = np.clip(atom.target(e), 0.0, 1.0)
    pts = np.unique(np.concatenate([e, images]))
    s, w = gauss_panels(pts[:-1], pts[1:], panels=1, order=8)
    cum = np.concatenate([[0.0], np.cumsum(np.sum(atom.weight_at(s) * w, axis=-1))])

    def W(z):
        return cum[np.searchsorted(pts, z)]

    lo = np.maximum(e[:-1, None], images[None, 1:])
    hi = np.minimum(e[1:, None], images[None, :-1])
    mass = np.where(hi > lo, W(np.maximum(hi, lo)) - W(lo), 0.0)
    return mass / grid.weights[:, None]


def atom_column_density(model: CopulaModel, grid: Grid):
    """Y-marginal density of the atoms, averaged over grid cells."""
    total = np.zeros(grid.size)
    for atom in model.atoms:
        total += grid.weights @ atom_transfer_matrix(atom, grid)
    return total / grid.weights


def _ac_margins(model: CopulaModel, grid: Grid, dens):
    """Row and column masses of the AC part at the grid nodes.

    Closed-form densities are integrated adaptively, so that the margin
    check is held to the closed-form tolerance; tabulated and other
    quadrature-derived densities use the grid rule itself.
    """
    if not model.closed_form or isinstance(model.density, TabulatedDensity):
        return dens @ grid.weights, grid.weights @ dens
    x = grid.nodes
    points = sorted({0.5, *model.extras.get("kinks", ())})
    opts = dict(epsabs=1e-13, epsrel=1e-13, points=points, limit=2000)
    rows, _ = integrate.quad_vec(lambda t: model.density_at(x, t), 0.0, 1.0, **opts)
    cols, _ = integrate.quad_vec(lambda t: model.density_at(t, x), 0.0, 1.0, **opts)
    return rows, cols


def validate_copula(model: CopulaModel, grid: Grid, tol=None, n_rectangles=1000, seed=20140101):
    """Check groundedness, uniform margins and the rectangle inequality.

    Margins are checked twice: on the CDF (``C(1, t) = C(t, 1) = t``) and
    as row/column masses of density plus atoms on the grid. Two-increasingness
    is checked on ``n_rectangles`` seeded random rectangles with log-uniform
    side lengths, and through non-negativity of the density at grid nodes.
    """
    if tol is None:
        tol = 1e-8 if model.closed_form else grid.tolerance
    w = grid.weights
    dens = model.density_matrix(grid)
    details = []

    def record(where, magnitude):
        details.append((where, float(magnitude)))
        return float(magnitude)

    neg = np.unravel_index(np.argmin(dens), dens.shape)
    neg_viol = record(("density>=0", float(grid.nodes[neg[0]]), float(grid.nodes[neg[1]])),
                      max(0.0, -dens[neg]))

    rows_ac, cols_ac = _ac_margins(model, grid, dens)
    rows = rows_ac + model.atom_mass(grid.nodes)
    cols = cols_ac + atom_column_density(model, grid)
    i_row = int(np.argmax(np.abs(rows - 1)))
    i_col = int(np.argmax(np.abs(cols - 1)))
    row_viol = record(("row mass", float(grid.nodes[i_row])), abs(rows[i_row] - 1))
    col_viol = record(("column mass", float(grid.nodes[i_col])), abs(cols[i_col] - 1))

    t = np.linspace(0.0, 1.0, 101)
    zeros, ones = np.zeros_like(t), np.ones_like(t)
    grounded = np.maximum(np.abs(copula_cdf(model, zeros, t)), np.abs(copula_cdf(model, t, zeros)))
    uniform = np.maximum(np.abs(copula_cdf(model, ones, t) - t), np.abs(copula_cdf(model, t, ones) - t))
    g_viol = record(("C(0,t), C(t,0)", float(t[np.argmax(grounded)])), grounded.max())
    u_viol = record(("C(1,t), C(t,1)", float(t[np.argmax(uniform)])), uniform.max())

    rng = np.random.default_rng(seed)
    lo = rng.uniform(0.0, 1.0, size=(n_rectangles, 2))
    width = 10.0 ** rng.uniform(-3.0, 0.0, size=(n_rectangles, 2))
    hi = np.minimum(lo + width, 1.0)
    x1, y1 = lo[:, 0], lo[:, 1]
    x2, y2 = hi[:, 0], hi[:, 1]
    mass = (copula_cdf(model, x2, y2) - copula_cdf(model, x1, y2)
            - copula_cdf(model, x2, y1) + copula_cdf(model, x1, y1))
    k = int(np.argmin(mass))
    rect_viol = record(("rectangle", (float(x1[k]), float(x2[k]), float(y1[k]), float(y2[k]))),
                       max(0.0, -mass[k]))

    worst = max(neg_viol, row_viol, col_viol, g_viol, u_viol, rect_viol)
    return ValidationReport(
        grounded_ok=g_viol <= tol,
        margins_ok=max(row_viol, col_viol, u_viol) <= tol,
        two_increasing_ok=max(neg_viol, rect_viol) <= tol,
        worst_violation=worst,
        details=details,
        tolerance=tol,
    )


def _merge_atoms(atoms):
    merged = {}
    for atom in atoms:
        if atom.kind not in merged:
            merged[atom.kind] = atom
            continue
        prev = merged[atom.kind]
        if prev.constant is not None and atom.constant is not None:
            merged[atom.kind] = AtomicMap(atom.kind, prev.constant + atom.constant)
        else:
            merged[atom.kind] = AtomicMap(
                atom.kind, lambda x, p=prev, q=atom: p.weight_at(x) + q.weight_at(x))
    return tuple(merged[k] for k in (IDENTITY, FLIP) if k in merged)


def _node_permutation(kind, grid):
    idx = np.arange(grid.size)
    if kind == IDENTITY:
        return idx
    if not grid.is_symmetric:
        raise UnsupportedFeatureError("flip atoms need a grid symmetric about 1/2")
    return idx[::-1]


def fold(A: CopulaModel, B: CopulaModel, grid: Grid) -> CopulaModel:
    """Fold product ``A * B``: the copula of ``(X_0, X_2)``.

    Density-density terms are integrated on the grid; atom-density cross
    terms are exact shifts of the other factor; atom-atom terms are
    composed algebraically (constant weights multiply exactly).
    """
    for model in (A, B):
        for atom in model.atoms:
            if atom.kind not in (IDENTITY, FLIP):
                raise UnsupportedFeatureError(
                    f"fold supports identity/flip atoms only, {model.label!r} has {atom.kind!r}")
    nodes, w = grid.nodes, grid.weights
    a = A.density_matrix(grid)
    b = B.density_matrix(grid)
    dens = (a * w[None, :]) @ b
    for atom in A.atoms:
        perm = _node_permutation(atom.kind, grid)
        dens += atom.weight_at(nodes)[:, None] * b[perm, :]
    for atom in B.atoms:
        perm = _node_permutation(atom.kind, grid)
        dens += a[:, perm] * atom.weight_at(nodes[perm])[None, :]
    atoms = _merge_atoms([alpha.then(beta) for alpha in A.atoms for beta in B.atoms])
    return CopulaModel(
        density=TabulatedDensity(grid, dens),
        atoms=atoms,
        label=f"({A.label})*({B.label})",
        closed_form=False,
    )


def n_step(model: CopulaModel, n: int, grid: Grid, allow_zero=False) -> CopulaModel:
    """Copula of ``(X_0, X_n)`` by binary exponentiation of :func:`fold`.

    ``n = 0`` gives M (a pure identity atom) and only with ``allow_zero``.
    """
    if int(n) != n or n < 0:
        raise InputError(f"n must be a positive integer, got {n!r}")
    n = steps = int(n)
    if n == 0:
        if not allow_zero:
            raise InputError("n = 0 is the Hoeffding upper bound M; pass allow_zero=True")
        return comonotone()
    if n == 1:
        return model
    result = None
    power = model
    while n:
        if n & 1:
            result = power if result is None else fold(result, power, grid)
        n >>= 1
        if n:
            power = fold(power, power, grid)
    return result.with_label(f"{model.label}^{steps}")


def comonotone():
    """M(u, v) = min(u, v) as a pure identity atom."""
    return CopulaModel(
        density=lambda x, y: np.zeros(np.broadcast(x, y).shape),
        atoms=(AtomicMap(IDENTITY, 1.0),),
        label="M",
        family="frechet",
        params=(1.0, 0.0),
        ac_cdf=lambda x, v: np.zeros(np.broadcast(x, v).shape),
        cdf=lambda x, y: np.minimum(x, y),
    )

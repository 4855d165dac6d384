"""Transfer-operator discretization and mixing coefficients.

The chain's Markov operator ``(Qf)(x) = E[f(X_1) | X_0 = x]`` is discretized
on a grid as ``K_ij = c(x_i, x_j) w_j`` plus the atoms' cell transition
matrices, then symmetrized with ``sqrt(w)`` scaling so that the matrix
2-norm is the discrete L2 operator norm. Removing the projection onto
constants leaves the operator whose norm is the maximal correlation rho_1.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .core import CopulaModel, atom_transfer_matrix, fold
from .errors import InputError, NotApplicableError, NumericError
from .grid import Grid

SCHEMA_VERSION = 1
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class TransferOperator:
    """Discretized operator on a grid.

    ``matrix`` is the centered, weight-symmetrized operator
    ``D^{1/2} K D^{-1/2} - sqrt(w) sqrt(w)^T``; ``kernel`` is the raw nodal
    ``K`` acting on function samples.
    """

    matrix: np.ndarray
    kernel: np.ndarray
    grid: Grid
    symmetric: bool
    label: str = ""

    def apply(self, f):
        """``Q f`` at the nodes, for samples ``f`` at the nodes."""
        return self.kernel @ np.asarray(f, float)

    def row_sums(self):
        return self.kernel.sum(axis=1)


def assemble_operator(model: CopulaModel, grid: Grid) -> TransferOperator:
    w = grid.weights
    kernel = model.density_matrix(grid) * w[None, :]
    for atom in model.atoms:
        kernel = kernel + atom_transfer_matrix(atom, grid)
    sw = np.sqrt(w)
    sym = sw[:, None] * kernel / sw[None, :]
    centered = sym - np.outer(sw, sw)
    symmetric = float(np.max(np.abs(centered - centered.T))) <= SYMMETRY_TOL
    return TransferOperator(centered, kernel, grid, symmetric, model.label)


def power_iteration_norm(matrix, tol=1e-12, max_iter=20000, seed=0):
    """Largest singular value by power iteration on ``M^T M``."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(matrix.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    residual = np.inf
    for _ in range(max_iter):
        u = matrix.T @ (matrix @ v)
        norm = np.linalg.norm(u)
        if norm == 0.0:
            return 0.0
        new = np.sqrt(norm)
        v_next = u / norm
        residual = np.linalg.norm(v_next - v)
        v = v_next
        if abs(new - sigma) <= tol * max(new, 1.0) and residual <= np.sqrt(tol):
            return float(new)
        sigma = new
    raise NumericError("power iteration did not converge", f"residual={residual:.3g}")


def rho1_estimate(op: TransferOperator, method="auto"):
    """Operator norm of the centered operator on mean-zero functions.

    ``method``: ``'svd'`` (dense), ``'power'`` (power iteration), or
    ``'auto'`` (SVD up to N = 1024).
    """
    if method == "auto":
        method = "svd" if op.grid.size <= 1024 else "power"
    if method == "svd":
        return float(np.linalg.norm(op.matrix, 2))
    if method == "power":
        return power_iteration_norm(op.matrix)
    raise InputError(f"unknown method {method!r}")


@dataclass
class SpectralDecomposition:
    eigenvalues: np.ndarray     # signed, sorted by decreasing magnitude
    eigenfunctions: np.ndarray  # column i sampled at the grid nodes
    grid: Grid

    @property
    def lambda1(self):
        return float(self.eigenvalues[0])

    def predicted_rho(self, k):
        return abs(self.lambda1) ** k


def spectral_decomposition(op: TransferOperator) -> SpectralDecomposition:
    """Eigenpairs of a reversible chain's centered operator.

    Eigenvalues are signed (W-like kernels have negative ones);
    eigenfunctions are orthonormal in the grid inner product.
    """
    if not op.symmetric:
        raise NotApplicableError("spectral decomposition needs a symmetric (reversible) operator")
    m = 0.5 * (op.matrix + op.matrix.T)
    vals, vecs = np.linalg.eigh(m)
    order = np.argsort(-np.abs(vals), kind="stable")
    funcs = vecs[:, order] / np.sqrt(op.grid.weights)[:, None]
    return SpectralDecomposition(vals[order], funcs, op.grid)


# --- beta and phi ------------------------------------------------------------------

def excess_mass(model: CopulaModel, grid: Grid):
    """Per-node ``sup_B |P(x, B) - mu(B)|``.

    The supremum of a zero-mass signed measure is its positive part: the
    density excess ``int (c - 1)_+ dy`` plus the full weight of the atoms
    (they are Lebesgue-null).
    """
    dens = model.density_matrix(grid)
    return np.maximum(dens - 1.0, 0.0) @ grid.weights + model.atom_mass(grid.nodes)


def _n_step_models(model: CopulaModel, nmax: int, grid: Grid):
    current = model
    for n in range(1, nmax + 1):
        if n > 1:
            current = fold(current, model, grid)
        yield n, current


def _check_n(n):
    if int(n) != n or n < 1:
        raise InputError(f"n must be a positive integer, got {n!r}")
    return int(n)


def beta_n(model: CopulaModel, n: int, grid: Grid):
    from .core import n_step
    mn = n_step(model, _check_n(n), grid)
    return float(grid.integrate(excess_mass(mn, grid)))


def phi_n(model: CopulaModel, n: int, grid: Grid):
    from .core import n_step
    mn = n_step(model, _check_n(n), grid)
    return float(np.max(excess_mass(mn, grid)))


@dataclass
class MixingReport:
    label: str
    rho1: float
    rho_k: list
    beta_n: list
    phi_n: list
    certified_bounds: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "label": self.label,
            "rho1": self.rho1,
            "rho_k": self.rho_k,
            "beta_n": self.beta_n,
            "phi_n": self.phi_n,
            "certified_bounds": [list(b) for b in self.certified_bounds],
            "notes": self.notes,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "beta_n", "phi_n", "rho1_pow_n"])
        for i, (b, p) in enumerate(zip(self.beta_n, self.phi_n), start=1):
            writer.writerow([i, repr(float(b)), repr(float(p)), repr(float(self.rho1 ** i))])
        return buf.getvalue()


def mixing_report(model: CopulaModel, grid: Grid, nmax=5, rho_steps=3):
    """beta_n, phi_n for n <= nmax and rho_k for k <= rho_steps."""
    nmax = _check_n(nmax)
    betas, phis, rhos = [], [], []
    for n, mn in _n_step_models(model, max(nmax, rho_steps), grid):
        if n <= nmax:
            row = excess_mass(mn, grid)
            betas.append(float(grid.integrate(row)))
            phis.append(float(row.max()))
        if n <= rho_steps:
            rhos.append(rho1_estimate(assemble_operator(mn, grid)))
    report = MixingReport(model.label, rhos[0] if rhos else
                          rho1_estimate(assemble_operator(model, grid)), rhos, betas, phis)
    tol = grid.tolerance
    for k, r in enumerate(rhos, start=1):
        if r > report.rho1 ** k + tol:
            report.notes.append(f"rho_{k} = {r:.6g} exceeds rho_1^{k} beyond tolerance")
    return report


# --- witnesses and bounds ----------------------------------------------------------

def no_mixing_witness(model: CopulaModel, grid: Grid):
    """``(is_fixed, ||Qf - f||_2)`` for ``f(x) = cos(2 pi x)``.

    A mean-zero fixed point of Q forces rho_1 = 1.
    """
    op = assemble_operator(model, grid)
    f = np.cos(2.0 * np.pi * grid.nodes)
    residual = float(np.sqrt(grid.integrate((op.apply(f) - f) ** 2)))
    return residual <= 10.0 * grid.tolerance, residual


def claim1_basis_bound(model: CopulaModel, grid: Grid, n_terms: int):
    """Partial sum ``sum_{n <= n_terms} ||T e_n||^2 + ||T b_n||^2`` over the
    Fourier basis ``sqrt(2) sin(2 pi n x)``, ``sqrt(2) cos(2 pi n x)``.
    """
    if model.atoms:
        raise NotApplicableError("the basis bound needs a purely absolutely continuous model")
    n_terms = _check_n(n_terms)
    x = grid.nodes
    kernel = model.density_matrix(grid) * grid.weights[None, :]
    k = np.arange(1, n_terms + 1)
    basis = np.sqrt(2.0) * np.concatenate(
        [np.sin(2.0 * np.pi * np.outer(x, k)), np.cos(2.0 * np.pi * np.outer(x, k))], axis=1)
    images = kernel @ basis
    return float(np.sum(grid.integrate(images ** 2, axis=0)))

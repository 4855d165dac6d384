"""Quadrature meshes on the unit interval."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

DEFAULT_N = 512


@dataclass(frozen=True, eq=False)
class Grid:
    """Nodes and weights of a 1-D quadrature rule on (0, 1).

    Every node ``x_i`` owns the cell ``[edges[i], edges[i+1])`` whose length
    equals its weight. For the midpoint rule these are the usual cells; for
    Gauss-Legendre the nodes interlace with the cumulative weights, so the
    same convention holds.
    """

    nodes: np.ndarray
    weights: np.ndarray
    scheme: str
    edges: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise InputError("nodes and weights must be 1-D arrays of equal positive length")
        if not (np.all(nodes > 0) and np.all(nodes < 1) and np.all(np.diff(nodes) > 0)):
            raise InputError("nodes must be strictly increasing inside (0, 1)")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise InputError("weights must be positive and sum to 1")
        edges = np.concatenate([[0.0], np.cumsum(weights)])
        edges[-1] = 1.0
        for name, value in (("nodes", nodes), ("weights", weights), ("edges", edges)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def midpoint(cls, n=DEFAULT_N):
        n = _check_size(n)
        return cls((np.arange(n) + 0.5) / n, np.full(n, 1.0 / n), "midpoint")

    @classmethod
    def gauss_legendre(cls, n=DEFAULT_N):
        n = _check_size(n)
        x, w = np.polynomial.legendre.leggauss(n)
        w = w / 2.0
        return cls((x + 1.0) / 2.0, w / w.sum(), "gauss-legendre")

    @property
    def size(self):
        return self.nodes.size

    @property
    def tolerance(self):
        """Default tolerance for quadrature-derived quantities, 5/N."""
        return 5.0 / self.size

    @property
    def is_symmetric(self):
        return bool(np.allclose(self.nodes + self.nodes[::-1], 1.0, atol=1e-13))

    def cell_index(self, x):
        """Index of the cell containing each point of ``x``."""
        idx = np.searchsorted(self.edges, np.asarray(x, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.size - 1)

    def integrate(self, values, axis=-1):
        return np.tensordot(np.asarray(values, dtype=float), self.weights, axes=([axis], [0]))

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self is other
            or (self.scheme == other.scheme and self.size == other.size
                and np.array_equal(self.nodes, other.nodes))
        )

    def __hash__(self):
        return hash((self.scheme, self.size))


def make_grid(n=DEFAULT_N, scheme="midpoint"):
    if scheme == "midpoint":
        return Grid.midpoint(n)
    if scheme in ("gauss-legendre", "gauss_legendre", "gl"):
        return Grid.gauss_legendre(n)
    raise InputError(f"unknown quadrature scheme {scheme!r}")


def _check_size(n):
    if int(n) != n or n < 1:
        raise InputError(f"grid size must be a positive integer, got {n!r}")
    return int(n)


def gauss_panels(a, b, panels=16, order=8):
    """Composite Gauss-Legendre nodes/weights on [a, b] (broadcast over arrays).

    Returns arrays of shape ``np.broadcast(a, b).shape + (panels*order,)``.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    k = np.arange(panels)
    # local nodes within [0, 1]
    local = ((k[:, None] + (x[None, :] + 1.0) / 2.0) / panels).ravel()
    lw = np.tile(w / (2.0 * panels), panels)
    nodes = a + (b - a) * local
    weights = (b - a) * lw
    return nodes, weights

"""Archimedean generators and the integral test for exponential rho-mixing.

For a non-strict standard generator (``phi(0) = 1``) the test integral is

    int_0^1 (1 - x) * (h(x) / phi'(phi^{-1}(x))**2)**2 dx,
    h(x) = max_{t in [x, 1]} phi''(phi^{-1}(t)),

and a value below 1 certifies exponential rho-mixing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import CURVE, AtomicMap, CopulaModel
from .errors import (BracketError, InputError, NotApplicableError, NumericError,
                     ParameterError, SingularCopulaError)
from .grid import Grid


@dataclass(frozen=True)
class Generator:
    """Generator ``phi`` with its first two derivatives and inverse."""

    phi: Callable
    dphi: Callable
    d2phi: Callable | None
    phi_inv: Callable
    strict: bool
    label: str = ""

    @property
    def phi0(self):
        return math.inf if self.strict else float(self.phi(0.0))

    @property
    def standardized(self):
        return (not self.strict) and abs(self.phi0 - 1.0) <= 1e-10


def check_generator(gen: Generator, grid: Grid | None = None, tol=1e-8):
    """Return a list of violated generator properties (empty when valid)."""
    x = (grid or Grid.midpoint()).nodes
    problems = []
    if abs(float(gen.phi(1.0))) > tol:
        problems.append("phi(1) != 0")
    if np.any(np.asarray(gen.dphi(x)) > tol):
        problems.append("phi is not decreasing")
    if gen.d2phi is not None and np.any(np.asarray(gen.d2phi(x)) < -tol):
        problems.append("phi is not convex")
    if gen.standardized or not gen.strict:
        if gen.standardized and np.max(np.abs(gen.phi_inv(gen.phi(x)) - x)) > tol:
            problems.append("phi_inv(phi(x)) != x")
    return problems


def standardize(gen: Generator) -> Generator:
    """Rescale a non-strict generator so that ``phi(0) = 1``."""
    if gen.strict:
        raise NotApplicableError("strict generators (phi(0) = inf) cannot be standardized")
    s = gen.phi0
    if not (np.isfinite(s) and s > 0):
        raise InputError(f"phi(0) must be finite and positive, got {s}")
    if abs(s - 1.0) <= 1e-15:
        return gen
    d2 = gen.d2phi
    return Generator(
        phi=lambda u: gen.phi(u) / s,
        dphi=lambda u: gen.dphi(u) / s,
        d2phi=None if d2 is None else (lambda u: d2(u) / s),
        phi_inv=lambda t: gen.phi_inv(np.asarray(t, float) * s),
        strict=False,
        label=f"{gen.label} (standardized)",
    )


# --- built-in generators ---------------------------------------------------------

def independence_generator():
    return Generator(
        phi=lambda u: -np.log(u),
        dphi=lambda u: -1.0 / np.asarray(u, float),
        d2phi=lambda u: 1.0 / np.asarray(u, float) ** 2,
        phi_inv=lambda t: np.exp(-np.asarray(t, float)),
        strict=True,
        label="-ln u",
    )


def lower_bound_generator():
    """``phi(u) = 1 - u``, whose copula is W."""
    return Generator(
        phi=lambda u: 1.0 - np.asarray(u, float),
        dphi=lambda u: -np.ones_like(np.asarray(u, float)),
        d2phi=lambda u: np.zeros_like(np.asarray(u, float)),
        phi_inv=lambda t: 1.0 - np.asarray(t, float),
        strict=False,
        label="1 - u",
    )


def example2_generator(theta, standard=True):
    """``phi(u) = -ln(theta u + 1 - theta)``, ``theta in (0, 1)``."""
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise ParameterError(f"example2 needs theta in (0, 1), got {theta}")
    raw = Generator(
        phi=lambda u: -np.log(theta * np.asarray(u, float) + 1.0 - theta),
        dphi=lambda u: -theta / (theta * np.asarray(u, float) + 1.0 - theta),
        d2phi=lambda u: theta ** 2 / (theta * np.asarray(u, float) + 1.0 - theta) ** 2,
        phi_inv=lambda t: (np.exp(-np.asarray(t, float)) - 1.0 + theta) / theta,
        strict=False,
        label=f"-ln({theta:g}u + {1 - theta:g})",
    )
    return standardize(raw) if standard else raw


def example3_generator(theta):
    """``phi(x) = (1 - x) / (1 + (theta - 1) x)``, ``theta >= 1``; its own inverse."""
    theta = float(theta)
    if theta < 1.0:
        raise ParameterError(f"example3 needs theta >= 1, got {theta}")
    c = theta - 1.0

    def phi(x):
        x = np.asarray(x, float)
        return (1.0 - x) / (1.0 + c * x)

    return Generator(
        phi=phi,
        dphi=lambda x: -theta / (1.0 + c * np.asarray(x, float)) ** 2,
        d2phi=lambda x: 2.0 * theta * c / (1.0 + c * np.asarray(x, float)) ** 3,
        phi_inv=phi,
        strict=False,
        label=f"(1-x)/(1+{c:g}x)",
    )


GENERATOR_FAMILIES = {
    "example2": example2_generator,
    "example3": example3_generator,
}


def example2_integral(theta):
    """Closed form of the test integral for the example2 family."""
    q = (1.0 - theta) ** 4
    return -math.log(1.0 - theta) / (4.0 * q) + 1.0 / 16.0 - 1.0 / (16.0 * q)


def example3_integral(theta):
    """Closed form of the test integral for the example3 family."""
    return 2.0 / 21.0 + 4.0 * theta ** 7 / 7.0 - 2.0 * theta ** 6 / 3.0


# --- copula ------------------------------------------------------------------------

def make_archimedean(gen: Generator, grid: Grid | None = None) -> CopulaModel:
    """Copula ``phi^{-1}(min(phi(u) + phi(v), phi(0)))`` as a :class:`CopulaModel`.

    For a non-strict generator the copula puts mass ``phi'(u)/phi'(0)`` (given
    ``U = u``) on the boundary curve ``phi(u) + phi(v) = phi(0)``; it is kept
    as a ``curve`` atom so that the model has uniform margins. Raises
    :class:`SingularCopulaError` when no absolutely continuous mass is left
    (the generator of W).
    """
    if gen.d2phi is None:
        raise InputError("generator needs its second derivative")
    if not gen.strict:
        gen = standardize(gen)
    phi, dphi, d2phi, inv = gen.phi, gen.dphi, gen.d2phi, gen.phi_inv
    limit = math.inf if gen.strict else 1.0

    def level(u, v):
        return np.asarray(phi(u), float) + np.asarray(phi(v), float)

    def cdf(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.minimum(level(u, v), limit)
            out = np.where(np.isfinite(s), inv(np.where(np.isfinite(s), s, 0.0)), 0.0)
        return np.where((u == 0) | (v == 0), 0.0, out)

    def density(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        with np.errstate(divide="ignore", invalid="ignore"):
            s = level(u, v)
            inside = s < limit
            c = inv(np.where(inside, s, 0.0))
            val = -d2phi(c) * dphi(u) * dphi(v) / dphi(c) ** 3
        return np.where(inside, val, 0.0)

    atoms = ()
    ac_cdf = None
    if not gen.strict:
        d0 = float(dphi(0.0))
        if np.isfinite(d0) and d0 != 0.0:
            def stay(u):
                return np.asarray(dphi(u), float) / d0

            def boundary(u):
                return inv(np.clip(1.0 - np.asarray(phi(u), float), 0.0, 1.0))

            atoms = (AtomicMap(CURVE, stay, curve=boundary),)

            def ac_cdf(u, v):
                u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
                with np.errstate(divide="ignore", invalid="ignore"):
                    s = level(u, v)
                    inside = s < 1.0
                    val = dphi(u) / dphi(inv(np.where(inside, s, 0.0))) - dphi(u) / d0
                return np.where(inside, np.maximum(val, 0.0), 0.0)

    model = CopulaModel(
        density=density,
        atoms=atoms,
        label=f"Archimedean[{gen.label}]",
        family="archimedean",
        ac_cdf=ac_cdf,
        cdf=cdf,
        closed_form=False,
        extras={"generator": gen},
    )
    g = grid or Grid.midpoint()
    ac_mass = g.integrate(g.integrate(model.density_matrix(g)))
    if ac_mass <= 1e-12:
        raise SingularCopulaError(f"{gen.label}: copula has no absolutely continuous part")
    return model


def boundary_mass(gen: Generator):
    """Total mass on the curve ``phi(u) + phi(v) = phi(0)``, ``-phi(0)/phi'(0)``.

    Zero for strict generators. This is the deficit of the absolutely
    continuous density's total mass below 1.
    """
    if gen.strict:
        return 0.0
    d0 = float(gen.dphi(0.0))
    if not np.isfinite(d0) or d0 == 0.0:
        return 0.0
    return float(-gen.phi0 / d0)


# --- integral test -------------------------------------------------------------

def _require_testable(gen: Generator):
    if gen.strict:
        raise NotApplicableError("the integral test applies to non-strict generators only")
    if gen.d2phi is None:
        raise InputError("generator needs its second derivative")
    return gen if gen.standardized else standardize(gen)


def _composite(gen: Generator, t):
    """``phi''(phi^{-1}(t))`` (signed)."""
    return np.asarray(gen.d2phi(gen.phi_inv(np.asarray(t, float))), float)


def _monotone_direction(gen: Generator, samples=2049):
    t = np.linspace(0.0, 1.0, samples)
    d = np.diff(np.asarray(gen.d2phi(t), float))
    scale = max(1.0, float(np.max(np.abs(gen.d2phi(t)))))
    if np.all(d <= 1e-12 * scale):
        return "decreasing"
    if np.all(d >= -1e-12 * scale):
        return "increasing"
    return None


def h_signed_extrema(gen: Generator, x, grid: Grid | None = None):
    """``(min, max)`` of signed ``phi''(phi^{-1}(t))`` over ``t in [x, 1]``."""
    gen = _require_testable(gen)
    grid = grid or Grid.midpoint()
    x = np.atleast_1d(np.asarray(x, float))
    vals = _composite(gen, grid.nodes)
    lo, hi = [], []
    for xi in x:
        pts = np.concatenate([vals[grid.nodes >= xi], _composite(gen, [xi, 1.0])])
        lo.append(pts.min())
        hi.append(pts.max())
    return np.array(lo), np.array(hi)


def h_max(gen: Generator, x, grid: Grid | None = None, method="auto"):
    """``max_{t in [x, 1]} |phi''(phi^{-1}(t))|``.

    ``method='auto'`` uses the monotone shortcuts when ``phi''`` is monotone
    (decreasing: the value at ``t = 1``, i.e. ``phi''(0)``; increasing: the
    value at ``t = x``) and a grid scan otherwise; ``'scan'`` and
    ``'shortcut'`` force one route.
    """
    gen = _require_testable(gen)
    grid = grid or Grid.midpoint()
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, float))
    direction = _monotone_direction(gen) if method != "scan" else None
    if method == "shortcut" and direction is None:
        raise NotApplicableError("phi'' is not monotone; no shortcut available")
    if direction == "decreasing":
        out = np.full(x.shape, abs(float(_composite(gen, 1.0))))
    elif direction == "increasing":
        out = np.abs(_composite(gen, x))
    else:
        vals = np.abs(_composite(gen, grid.nodes))
        # reverse running max over nodes >= x, plus the endpoints x and 1
        tail = np.maximum.accumulate(vals[::-1])[::-1]
        idx = np.searchsorted(grid.nodes, x, side="left")
        scanned = np.where(idx < grid.size, tail[np.minimum(idx, grid.size - 1)], 0.0)
        out = np.maximum.reduce([scanned, np.abs(_composite(gen, x)),
                                 np.full(x.shape, abs(float(_composite(gen, 1.0))))])
    return float(out[0]) if scalar else out


def theorem4_integrand(gen: Generator, x, grid: Grid | None = None):
    gen = _require_testable(gen)
    x = np.asarray(x, float)
    h = h_max(gen, x, grid)
    slope = np.asarray(gen.dphi(gen.phi_inv(x)), float)
    return (1.0 - x) * (h / slope ** 2) ** 2


def theorem4_integral(gen: Generator, grid: Grid | None = None):
    """Quadrature value of the test integral; below 1 certifies exponential rho-mixing."""
    gen = _require_testable(gen)
    grid = grid or Grid.midpoint()
    if np.all(np.abs(_composite(gen, grid.nodes)) == 0.0):
        raise NotApplicableError("phi'' vanishes: this is the generator of W")
    f = theorem4_integrand(gen, grid.nodes, grid)
    bad = ~np.isfinite(f)
    if bad.any():
        raise NumericError("non-finite integrand", float(grid.nodes[np.argmax(bad)]))
    return float(grid.integrate(f))


def sufficient_condition(gen: Generator, grid: Grid | None = None):
    """``(int h^2 (1-x) dx, phi'(1)**4)``; the first below the second also certifies."""
    gen = _require_testable(gen)
    grid = grid or Grid.midpoint()
    h = h_max(gen, grid.nodes, grid)
    return float(grid.integrate(h ** 2 * (1.0 - grid.nodes))), float(gen.dphi(1.0)) ** 4


def theorem4_critical_parameter(family, bracket, tol=1e-4, grid: Grid | None = None, max_iter=200):
    """Bisection root of ``theorem4_integral(family(theta)) = 1`` inside ``bracket``.

    ``family`` is a callable ``theta -> Generator`` or a registered name.
    """
    if isinstance(family, str):
        try:
            family = GENERATOR_FAMILIES[family]
        except KeyError:
            raise InputError(f"unknown generator family {family!r}") from None
    grid = grid or Grid.midpoint()
    lo, hi = map(float, bracket)

    def excess(theta):
        return theorem4_integral(family(theta), grid) - 1.0

    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(f"no sign change on [{lo}, {hi}]: {f_lo + 1:.6g}, {f_hi + 1:.6g}")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        f_mid = excess(mid)
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)

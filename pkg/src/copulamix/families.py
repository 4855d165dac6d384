"""Concrete copula families and the name -> constructor registry."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import FLIP, IDENTITY, AtomicMap, CopulaModel, validate_copula
from .errors import InputError, ParameterError
from .grid import Grid, gauss_panels

SCHEMA_VERSION = 1


def _zeros_like(x, y):
    return np.zeros(np.broadcast(x, y).shape)


def _solve_affine_cdf(p0, p1, target):
    """Smallest root in [0, 1] of ``p0 v + p1 v**2 / 2 = target``.

    This inverts ``int_0^v (p0 + p1 t) dt`` for densities affine in ``t``.
    """
    p0, p1, target = np.broadcast_arrays(*(np.asarray(z, float) for z in (p0, p1, target)))
    disc = np.sqrt(np.maximum(p0 * p0 + 2.0 * p1 * target, 0.0))
    # 2 target / (p0 + disc) is the cancellation-free form of (-p0 + disc) / p1
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(p0 + disc > 0, 2.0 * target / (p0 + disc), 0.0)
    return np.clip(v, 0.0, 1.0)


def independence():
    """P(u, v) = uv."""
    return CopulaModel(
        density=lambda x, y: np.ones(np.broadcast(x, y).shape),
        density_y_derivative=_zeros_like,
        label="P",
        family="independence",
        ac_cdf=lambda x, v: np.broadcast_to(np.asarray(v, float), np.broadcast(x, v).shape) * 1.0,
        ac_inverse=lambda x, p: np.broadcast_to(np.asarray(p, float), np.broadcast(x, p).shape) * 1.0,
        cdf=lambda x, y: x * y,
    )


def make_fgm(theta):
    """Farlie-Gumbel-Morgenstern copula ``c = 1 + theta (1-2x)(1-2y)``."""
    theta = float(theta)
    if not -1.0 <= theta <= 1.0:
        raise ParameterError(f"FGM needs |theta| <= 1, got {theta}")

    def density(x, y):
        return 1.0 + theta * (1.0 - 2.0 * x) * (1.0 - 2.0 * y)

    def ac_inverse(x, p):
        s = theta * (1.0 - 2.0 * np.asarray(x, float))
        # c = (1 + s) - 2 s t
        return _solve_affine_cdf(1.0 + s, -2.0 * s, p)

    return CopulaModel(
        density=density,
        density_y_derivative=lambda x, y: -2.0 * theta * (1.0 - 2.0 * x) + 0.0 * y,
        label=f"FGM(theta={theta:g})",
        family="fgm",
        params=(theta,),
        ac_cdf=lambda x, v: v + theta * (1.0 - 2.0 * x) * v * (1.0 - v),
        ac_inverse=ac_inverse,
        cdf=lambda x, y: x * y + theta * x * y * (1.0 - x) * (1.0 - y),
    )


@dataclass(frozen=True)
class FrechetParams:
    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if a < 0 or b < 0 or a + b > 1 + 1e-15:
            raise ParameterError(f"Frechet needs a, b >= 0 and a + b <= 1, got a={a}, b={b}")


@dataclass(frozen=True)
class MardiaParams:
    theta: float

    def __post_init__(self):
        if not -1.0 <= float(self.theta) <= 1.0:
            raise ParameterError(f"Mardia needs |theta| <= 1, got {self.theta}")

    def frechet(self):
        t = float(self.theta)
        return FrechetParams(t * t * (1.0 + t) / 2.0, t * t * (1.0 - t) / 2.0)


def make_frechet(a, b=None):
    """``a M + (1 - a - b) P + b W``. Accepts ``FrechetParams`` or two floats."""
    p = a if isinstance(a, FrechetParams) else FrechetParams(a, b)
    a, b = float(p.a), float(p.b)
    rest = 1.0 - a - b
    atoms = []
    if a > 0:
        atoms.append(AtomicMap(IDENTITY, a))
    if b > 0:
        atoms.append(AtomicMap(FLIP, b))
    return CopulaModel(
        density=lambda x, y: np.full(np.broadcast(x, y).shape, rest),
        atoms=tuple(atoms),
        density_y_derivative=_zeros_like,
        label=f"Frechet(a={a:g}, b={b:g})",
        family="frechet",
        params=(a, b),
        ac_cdf=lambda x, v: rest * np.broadcast_to(np.asarray(v, float), np.broadcast(x, v).shape),
        ac_inverse=lambda x, p: np.broadcast_to(np.asarray(p, float), np.broadcast(x, p).shape) * 1.0,
        cdf=lambda x, y: a * np.minimum(x, y) + rest * x * y + b * np.maximum(x + y - 1.0, 0.0),
    )


def make_mardia(theta):
    """Mardia copula: a Frechet copula with ``a + b = theta**2``."""
    p = theta if isinstance(theta, MardiaParams) else MardiaParams(theta)
    fp = p.frechet()
    model = make_frechet(fp)
    return CopulaModel(**{**model.__dict__, "label": f"Mardia(theta={float(p.theta):g})",
                          "family": "mardia", "params": (float(p.theta),)})


def frechet_n_step_params(a, b, n):
    """Weights ``(a_n, b_n)`` of M and W in the n-step Frechet copula."""
    FrechetParams(a, b)
    if int(n) != n or n < 1:
        raise InputError(f"n must be a positive integer, got {n!r}")
    s, d = (a + b) ** n, (a - b) ** n
    return (s + d) / 2.0, (s - d) / 2.0


# --- tabulated density families ---------------------------------------------------------

TABLE1 = ("m1", "m2", "m3", "m4")
TABLE3 = ("t3_1", "t3_2", "t3_3", "t3_4")


@dataclass(frozen=True)
class TableDensitySpec:
    """Parameters of one tabulated density.

    For ``m1``..``m4``: ``g`` and ``h`` map [0, 1] into [0, 1]; the extrema
    ``b1 = sup g``, ``a1 = inf g``, ``b2 = sup h``, ``a2 = inf h`` and the L1
    norms ``g_l1``, ``h_l1`` are filled in by :meth:`resolved` when omitted.
    ``g_integral(u) = int_0^u g`` and ``h_integral(v) = int_0^v h`` are
    optional; with both the model gets a closed-form CDF, and ``h_integral``
    alone speeds up the conditional CDF. For ``t3_*``: scalars ``theta``, ``a``, ``c``.
    """

    which: str
    g: Optional[Callable] = None
    h: Optional[Callable] = None
    b1: Optional[float] = None
    a1: Optional[float] = None
    b2: Optional[float] = None
    a2: Optional[float] = None
    g_l1: Optional[float] = None
    h_l1: Optional[float] = None
    theta: float = 0.0
    a: float = 1.0
    c: float = 0.0
    g_integral: Optional[Callable] = None
    h_integral: Optional[Callable] = None

    def __post_init__(self):
        if self.which not in TABLE1 + TABLE3:
            raise ParameterError(f"unknown table density {self.which!r}")
        if self.which in TABLE1:
            if self.g is None or self.h is None:
                raise ParameterError(f"{self.which} needs functions g and h")
        else:
            if not 0.0 < self.a <= 1.0:
                raise ParameterError(f"t3 densities need a in (0, 1], got {self.a}")
            if abs(self.theta) > 2.0 * self.a + 1e-15:
                raise ParameterError(f"t3 densities need |theta| <= 2a, got {self.theta}")
            if self.c < 0:
                raise ParameterError(f"t3 densities need c >= 0, got {self.c}")

    def resolved(self, grid: Grid | None = None):
        """Copy with every extremum and L1 norm filled in."""
        if self.which not in TABLE1:
            return self
        scan = np.union1d(np.linspace(0.0, 1.0, 4097), (grid or Grid.midpoint()).nodes)
        vals = {}
        for name, fn in (("g", self.g), ("h", self.h)):
            f = np.broadcast_to(np.asarray(fn(scan), float), scan.shape)
            if np.any(f < -1e-12) or np.any(f > 1 + 1e-12):
                raise ParameterError(f"{name} must map [0, 1] into [0, 1]")
            vals[name] = f
        missing = [k for k in ("b1", "a1", "b2", "a2") if getattr(self, k) is None]
        if missing:
            warnings.warn(f"{self.which}: {', '.join(missing)} taken from a grid scan "
                          "and may miss the true extrema", stacklevel=2)
        t, w = gauss_panels(0.0, 1.0, panels=256, order=8)
        return TableDensitySpec(
            which=self.which, g=self.g, h=self.h,
            b1=self.b1 if self.b1 is not None else float(vals["g"].max()),
            a1=self.a1 if self.a1 is not None else float(vals["g"].min()),
            b2=self.b2 if self.b2 is not None else float(vals["h"].max()),
            a2=self.a2 if self.a2 is not None else float(vals["h"].min()),
            g_l1=self.g_l1 if self.g_l1 is not None else float(np.sum(np.abs(self.g(t)) * w)),
            h_l1=self.h_l1 if self.h_l1 is not None else float(np.sum(np.abs(self.h(t)) * w)),
            theta=self.theta, a=self.a, c=self.c,
            g_integral=self.g_integral, h_integral=self.h_integral,
        )

    def table1_terms(self):
        """``(numerator constant, denominator)`` pieces used by densities and bounds."""
        s = self.resolved() if self.b1 is None or self.g_l1 is None else self
        b1, a1, b2, a2, G, H = s.b1, s.a1, s.b2, s.a2, s.g_l1, s.h_l1
        if self.which == "m1":
            return b1, b1 + G * H
        if self.which == "m2":
            return b1 * b2, b1 * b2 + G * H
        if self.which == "m3":
            return b1 * (b2 - a2), b1 * (b2 - a2) + G * (b2 - H)
        return (b1 - a1) * (b2 - a2), (b1 - a1) * (b2 - a2) + (b1 - G) * (b2 - H)


def _table1_parts(spec: TableDensitySpec):
    """Density written as ``(K - G(x) Hh(y) + Hh(y) gbar + G(x) hbar) / D``.

    ``G``, ``Hh`` are the (possibly reflected) g and h, ``gbar``, ``hbar``
    their L1 norms, so that every m-family shares one code path.
    """
    s = spec
    K, D = s.table1_terms()
    if abs(D) <= 1e-12:
        raise ParameterError(f"{s.which}: degenerate spec, denominator is zero")
    g, h = s.g, s.h
    if s.which in ("m1", "m2"):
        G, Hh, gbar, hbar = g, h, s.g_l1, s.h_l1
    elif s.which == "m3":
        G, Hh, gbar, hbar = g, (lambda y: s.b2 - h(y)), s.g_l1, s.b2 - s.h_l1
    else:
        G, Hh = (lambda x: s.b1 - g(x)), (lambda y: s.b2 - h(y))
        gbar, hbar = s.b1 - s.g_l1, s.b2 - s.h_l1
    return K, D, G, Hh, gbar, hbar


def _table3_parts(spec: TableDensitySpec):
    """All four rows read ``alpha + beta * s(x) * (y - 1/2)``.

    Here ``s(x) = x**(1/a - 1) sign(1/2 - x**(1/a))``; returns ``(alpha, beta)``.
    """
    a, theta, cc = spec.a, spec.theta, spec.c
    if spec.which == "t3_1":
        k = 3.0 / 2.0 ** (2.0 - a)
        return 1.0, -1.0 / (1.0 + k)
    if spec.which == "t3_2":
        return 1.0, theta / a
    if spec.which == "t3_3":
        return 1.0, theta / (a * (1.0 + cc))
    return 1.0, -1.0 / (1.0 + cc)


def _t3_shape(a):
    def s(x):
        x = np.asarray(x, float)
        return x ** (1.0 / a - 1.0) * np.sign(0.5 - x ** (1.0 / a))
    return s


def _t3_shape_integral(a):
    # int_0^x s = a min(x^(1/a), 1 - x^(1/a))
    def big_s(x):
        z = np.asarray(x, float) ** (1.0 / a)
        return a * (0.5 - np.abs(0.5 - z))
    return big_s


def make_table_density(spec: TableDensitySpec, grid: Grid | None = None, validate=True):
    """Build a product-form (``m1``..``m4``) or ``t3_*`` density.

    Returns ``(model, report)``; the report is None when ``validate`` is
    False. Densities are taken as printed and are not corrected: a negative
    value shows up as ``two_increasing_ok = False`` in the report.
    """
    grid = grid or Grid.midpoint()
    if spec.which in TABLE1:
        spec = spec.resolved(grid)
        K, D, G, Hh, gbar, hbar = _table1_parts(spec)

        def density(x, y):
            gx, hy = np.asarray(G(x), float), np.asarray(Hh(y), float)
            return (K - gx * hy + hy * gbar + gx * hbar) / D

        def hh_integral(v):
            # int_0^v Hh(t) dt
            v = np.asarray(v, float)
            if spec.h_integral is not None:
                hv = np.asarray(spec.h_integral(v), float)
                return hv if spec.which in ("m1", "m2") else spec.b2 * v - hv
            t, w = gauss_panels(0.0, v, panels=16, order=8)
            return np.sum(np.asarray(Hh(t), float) * w, axis=-1)

        def ac_cdf(x, v):
            gx = np.asarray(G(x), float)
            return ((K + gx * hbar) * v + (gbar - gx) * hh_integral(v)) / D

        label = f"{spec.which}(b1={spec.b1:g}, |g|={spec.g_l1:g}, b2={spec.b2:g}, |h|={spec.h_l1:g})"
        cdf = None
        if spec.g_integral is not None and spec.h_integral is not None:
            def gg_integral(u):
                gu = np.asarray(spec.g_integral(u), float)
                return spec.b1 * np.asarray(u, float) - gu if spec.which == "m4" else gu

            def cdf(x, y):
                x, y = np.asarray(x, float), np.asarray(y, float)
                gi, hi = gg_integral(x), hh_integral(y)
                return (K * x * y - gi * hi + hi * gbar * x + gi * hbar * y) / D

        model = CopulaModel(density=density, label=label, family=spec.which,
                            ac_cdf=ac_cdf, cdf=cdf, extras={"spec": spec})
    else:
        alpha, beta = _table3_parts(spec)
        shape = _t3_shape(spec.a)

        def density(x, y):
            return alpha + beta * shape(x) * (np.asarray(y, float) - 0.5)

        def ac_cdf(x, v):
            v = np.asarray(v, float)
            return alpha * v + beta * shape(x) * (v * v - v) / 2.0

        def ac_inverse(x, p):
            bs = beta * shape(x)
            # alpha + bs (t - 1/2) = (alpha - bs/2) + bs t, row mass alpha
            return _solve_affine_cdf(alpha - bs / 2.0, bs, np.asarray(p, float) * alpha)

        def c_y(x, y):
            return beta * shape(x) + 0.0 * np.asarray(y, float)

        shape_integral = _t3_shape_integral(spec.a)

        def cdf(x, y):
            x, y = np.asarray(x, float), np.asarray(y, float)
            return alpha * x * y + beta * shape_integral(x) * (y * y - y) / 2.0

        params = {"t3_1": (spec.a,), "t3_2": (spec.theta, spec.a),
                  "t3_3": (spec.theta, spec.a, spec.c), "t3_4": (spec.a, spec.c)}[spec.which]
        model = CopulaModel(density=density, density_y_derivative=c_y, ac_cdf=ac_cdf,
                            ac_inverse=ac_inverse, cdf=cdf, family=spec.which, params=params,
                            label=f"{spec.which}{params}",
                            extras={"spec": spec, "kinks": (2.0 ** -spec.a,)})
    report = validate_copula(model, grid) if validate else None
    return model, report


# --- kernel with state-dependent holding probability ---------------------------

@dataclass(frozen=True)
class MHKernelParams:
    """Holding probability ``p(x) = a|x|`` on [-1, 1] with uniform invariant law."""

    a: float

    def __post_init__(self):
        if not 0.0 < float(self.a) <= 1.0:
            raise ParameterError(f"kernel slope a must lie in (0, 1], got {self.a}")

    @property
    def k(self):
        return 1.0 / (2.0 - self.a)

    def p(self, x):
        return self.a * np.abs(x)

    def f(self, x):
        """``int_{-1}^x p(t) dt``."""
        x = np.asarray(x, float)
        return self.a / 2.0 * (1.0 + x * np.abs(x))

    def proposal_cdf(self, t):
        """CDF on [-1, 1] of the refresh density ``k (1 - a|t|)``."""
        t = np.asarray(t, float)
        return self.k * ((t + 1.0) - self.f(t))

    def proposal_inverse(self, q):
        """Inverse of :meth:`proposal_cdf`, piecewise quadratic."""
        q = np.asarray(q, float)
        a, k = self.a, self.k
        r = q / k
        lo = q <= 0.5
        out = np.empty_like(q)
        # t <= 0, s = t + 1 in [0, 1]: s - (a/2)(2s - s^2) = r  ->  (a/2) s^2 + (1 - a) s - r = 0
        out_lo = _solve_affine_cdf(1.0 - a, a, r) - 1.0
        # t > 0: t - (a/2) t^2 = r - (1 - a/2)
        out_hi = _solve_affine_cdf(1.0, -a, r - (1.0 - a / 2.0))
        out[...] = np.where(lo, out_lo, out_hi)
        return out


def make_mh_copula(a):
    """Copula of the holding-probability kernel with ``p(x) = a|x|``.

    Identity atom of weight ``a|2u - 1|`` plus density
    ``2k (1 - a|2u-1|)(1 - a|2v-1|)``, ``k = 1/(2 - a)``.
    """
    kp = a if isinstance(a, MHKernelParams) else MHKernelParams(a)
    a, k = float(kp.a), kp.k

    def stay(u):
        return a * np.abs(2.0 * np.asarray(u, float) - 1.0)

    def density(u, v):
        return 2.0 * k * (1.0 - stay(u)) * (1.0 - stay(v))

    def refresh_cdf(v):
        # int_0^v (1 - a|2t-1|) dt, normalised by its total 1 - a/2
        return kp.proposal_cdf(2.0 * np.asarray(v, float) - 1.0)

    def ac_cdf(u, v):
        return (1.0 - stay(u)) * refresh_cdf(v)

    def ac_inverse(u, p):
        return (kp.proposal_inverse(np.asarray(p, float) + 0.0 * np.asarray(u, float)) + 1.0) / 2.0

    def cdf(u, v):
        x, y = 2.0 * np.asarray(u, float) - 1.0, 2.0 * np.asarray(v, float) - 1.0
        return 0.5 * (kp.f(np.minimum(x, y)) + k * (2.0 * u - kp.f(x)) * (2.0 * v - kp.f(y)))

    def c_y(u, v):
        v = np.asarray(v, float)
        return -2.0 * k * (1.0 - stay(u)) * 2.0 * a * np.sign(2.0 * v - 1.0)

    return CopulaModel(
        density=density,
        atoms=(AtomicMap(IDENTITY, stay),),
        density_y_derivative=c_y,
        label=f"MH(a={a:g})",
        family="mh",
        params=(a,),
        ac_cdf=ac_cdf,
        ac_inverse=ac_inverse,
        cdf=cdf,
        extras={"kernel": kp, "kinks": (0.5,)},
    )


# --- registry ------------------------------------------------------------------

def _power(p):
    p = float(p)
    if p <= 0:
        raise ParameterError(f"power must be positive, got {p}")
    return lambda x: np.asarray(x, float) ** p


def _table1(which):
    def build(p=1.0, q=1.0):
        spec = TableDensitySpec(which, g=_power(p), h=_power(q),
                                b1=1.0, a1=0.0, b2=1.0, a2=0.0,
                                g_l1=1.0 / (float(p) + 1.0), h_l1=1.0 / (float(q) + 1.0),
                                g_integral=lambda u: np.asarray(u, float) ** (float(p) + 1.0) / (float(p) + 1.0),
                                h_integral=lambda v: np.asarray(v, float) ** (float(q) + 1.0) / (float(q) + 1.0))
        model, _ = make_table_density(spec, validate=False)
        return CopulaModel(**{**model.__dict__, "params": (float(p), float(q))})
    build.__doc__ = f"{which} with g(x) = x**p, h(y) = y**q."
    return build


def _table3(which, names):
    def build(*params):
        if len(params) != len(names):
            raise ParameterError(f"{which} takes parameters {names}")
        model, _ = make_table_density(
            TableDensitySpec(which, **dict(zip(names, map(float, params)))), validate=False)
        return model
    return build


def _archimedean(name):
    def build(theta):
        from .archimedean import GENERATOR_FAMILIES, make_archimedean
        model = make_archimedean(GENERATOR_FAMILIES[name](float(theta)))
        return CopulaModel(**{**model.__dict__, "family": name, "params": (float(theta),)})
    return build


FAMILIES = {
    "independence": independence,
    "fgm": make_fgm,
    "frechet": make_frechet,
    "mardia": make_mardia,
    "mh": make_mh_copula,
    "m1": _table1("m1"),
    "m2": _table1("m2"),
    "m3": _table1("m3"),
    "m4": _table1("m4"),
    "t3_1": _table3("t3_1", ("a",)),
    "t3_2": _table3("t3_2", ("theta", "a")),
    "t3_3": _table3("t3_3", ("theta", "a", "c")),
    "t3_4": _table3("t3_4", ("a", "c")),
    "example2": _archimedean("example2"),
    "example3": _archimedean("example3"),
}


def build(family, params=()):
    """Construct a registered family from its name and parameter vector."""
    try:
        ctor = FAMILIES[family]
    except KeyError:
        raise InputError(f"unknown family {family!r}; known: {', '.join(sorted(FAMILIES))}") from None
    try:
        model = ctor(*[float(p) for p in params])
    except TypeError as exc:
        raise InputError(f"bad parameters {list(params)} for {family}: {exc}") from exc
    if model.family is None or model.family != family:
        model = CopulaModel(**{**model.__dict__, "family": family, "params": tuple(map(float, params))})
    return model


def to_json(model: CopulaModel):
    if model.family is None:
        raise InputError("only registered families serialize; this model has no family name")
    return json.dumps({"schema_version": SCHEMA_VERSION, "family": model.family,
                       "params": [float(p) for p in model.params]}, sort_keys=True)


def from_json(text):
    data = json.loads(text)
    return build(data["family"], data.get("params", ()))

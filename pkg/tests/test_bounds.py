import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from copulamix.bounds import (bilinear_ratio, dmr_sandwich, envelope_bound, envelope_extract,
                              table2_bound, theorem3_bound)
from copulamix.errors import (InfeasibleEnvelopeError, InputError, NotApplicableError,
                              ParameterError)
from copulamix.families import TableDensitySpec, build, independence, make_fgm, make_frechet
from copulamix.grid import Grid
from copulamix.spectral import assemble_operator, rho1_estimate


def const(c):
    return lambda x: np.full(np.shape(x), float(c))


def rho1(model, grid):
    return rho1_estimate(assemble_operator(model, grid))


# --- derivative test --------------------------------------------------------------------

def test_theorem3_fgm_half(gl_grid):
    rep = theorem3_bound(make_fgm(0.5), gl_grid)
    assert rep.extras["k1"] == pytest.approx(1 / 3, abs=1e-6)
    assert rep.extras["k2"] == pytest.approx(4 / 3, abs=1e-6)
    assert rep.extras["rho1_bound"] == pytest.approx(np.sqrt(5 / 36), abs=1e-6)
    assert rep.satisfied


def test_theorem3_independence(grid):
    rep = theorem3_bound(independence(), grid)
    assert rep.value == 0.0 and rep.extras["rho1_bound"] == 0.0


@given(st.floats(-1, 1))
def test_theorem3_fgm_constants(theta):
    rep = theorem3_bound(make_fgm(theta), Grid.gauss_legendre(128))
    assert rep.extras["k1"] == pytest.approx(4 * theta ** 2 / 3, abs=1e-9)
    assert rep.extras["k2"] == pytest.approx(16 * theta ** 2 / 3, abs=1e-9)
    assert rep.satisfied


def test_theorem3_fgm_one(gl_grid):
    rep = theorem3_bound(make_fgm(1.0), gl_grid)
    assert rep.value == pytest.approx(20 / 3, abs=1e-6) and rep.satisfied


def test_theorem3_needs_derivative(grid):
    model = build("m1", (1.0, 1.0))
    with pytest.raises(InputError):
        theorem3_bound(model, grid)


@pytest.mark.parametrize("theta", [-1.0, -0.5, 0.2, 0.7, 1.0])
def test_theorem3_is_sound(theta, gl_grid):
    rep = theorem3_bound(make_fgm(theta), gl_grid)
    assert rho1(make_fgm(theta), gl_grid) <= rep.extras["rho1_bound"] + 1e-6


# --- envelope bound ------------------------------------------------------------------------

def test_zero_envelope_certifies_nothing(grid):
    rep = envelope_bound(0.0, 0.0, grid)
    assert rep.value == 1.0 and not rep.satisfied


def test_frechet_envelope(grid):
    rep = envelope_bound(0.25, const(0.25), grid)
    assert rep.value == pytest.approx(0.75)
    e1, e2 = envelope_extract(make_frechet(0.3, 0.2), grid)
    np.testing.assert_allclose(e1, 0.25)
    np.testing.assert_allclose(e2, 0.25)


def test_fgm_envelope_extract(grid):
    e1, _ = envelope_extract(make_fgm(0.5), grid)
    x = grid.nodes
    # grid minimum over y sits at the outermost node, not at y in {0, 1}
    y_edge = grid.nodes[-1]
    expected = 0.5 * (1 - np.abs(0.5 * (1 - 2 * x)) * abs(1 - 2 * y_edge))
    np.testing.assert_allclose(e1, expected, atol=1e-12)
    np.testing.assert_allclose(e1, 0.5 * (1 - np.abs(0.5 * (1 - 2 * x))), atol=grid.tolerance)
    assert envelope_bound(*envelope_extract(make_fgm(0.5), grid), grid).value < 1


def test_vanishing_strip_gives_no_envelope(grid):
    e1, e2 = envelope_extract(make_frechet(0.6, 0.4), grid)
    assert np.all(e1 == 0) and np.all(e2 == 0)
    assert not envelope_bound(e1, e2, grid).satisfied


def test_envelope_extract_is_pointwise_below(rng, grid):
    for family, params in [("fgm", (rng.uniform(-1, 1),)), ("mh", (0.6,)), ("m2", (2.0, 0.5))]:
        model = build(family, params)
        e1, e2 = envelope_extract(model, grid)
        assert np.all(model.density_matrix(grid) >= e1[:, None] + e2[None, :] - 1e-15)


def test_envelope_errors(grid):
    with pytest.raises(InputError):
        envelope_bound(lambda x: x - 0.5, 0.0, grid)
    with pytest.raises(InfeasibleEnvelopeError):
        envelope_bound(1.0, 1.0, grid)
    with pytest.raises(InputError):
        envelope_bound(np.ones(3), 0.0, grid)


@pytest.mark.parametrize("p,q", [(1.0, 1.0), (2.0, 0.5)])
def test_m1_envelope_matches_table(p, q, grid):
    # c - g(x)|h|/D - h(y)|g|/D = (b1 - g h)/D >= 0, so this pair is an envelope
    model = build("m1", (p, q))
    s = model.extras["spec"]
    D = s.b1 + s.g_l1 * s.h_l1
    e1 = s.g(grid.nodes) * s.h_l1 / D
    e2 = s.h(grid.nodes) * s.g_l1 / D
    assert np.all(model.density_matrix(grid) >= e1[:, None] + e2[None, :] - 1e-14)
    env = envelope_bound(e1, e2, grid)
    assert env.value == pytest.approx(table2_bound(s).value, abs=grid.tolerance)
    assert table2_bound(s).value == pytest.approx(s.b1 / D)


# --- product-form bound -------------------------------------------------------------------------

def test_table2_m1_constant():
    spec = TableDensitySpec("m1", g=const(1.0), h=const(1.0), b1=1, a1=1, b2=1, a2=1,
                            g_l1=1, h_l1=1)
    assert table2_bound(spec).value == pytest.approx(0.5)


def test_table2_m2_identity():
    spec = TableDensitySpec("m2", g=lambda x: x, h=lambda y: y, b1=1, a1=0, b2=1, a2=0)
    assert table2_bound(spec).value == pytest.approx(0.8)


def test_table2_degenerate_m4():
    spec = TableDensitySpec("m4", g=const(0.3), h=const(0.6), b1=0.3, a1=0.3, b2=0.6, a2=0.6)
    with pytest.raises(ParameterError):
        table2_bound(spec)


def test_table2_not_for_table3():
    with pytest.raises(NotApplicableError):
        table2_bound(TableDensitySpec("t3_2", theta=0.5, a=0.5))


@pytest.mark.parametrize("which", ["m1", "m2", "m3", "m4"])
@pytest.mark.parametrize("p,q", [(1.0, 1.0), (2.0, 0.5), (0.5, 3.0)])
def test_table2_is_sound(which, p, q, grid):
    model = build(which, (p, q))
    assert rho1(model, grid) <= table2_bound(model.extras["spec"]).value + 10 * grid.tolerance


@pytest.mark.parametrize("a", [0.0, 0.2, 0.45])
@pytest.mark.parametrize("b", [0.0, 0.1, 0.4])
def test_frechet_envelope_is_sound(a, b, grid):
    model = make_frechet(a, b)
    rep = envelope_bound(*envelope_extract(model, grid), grid)
    assert rep.satisfied
    assert rho1(model, grid) <= rep.value + 10 * grid.tolerance


@pytest.mark.parametrize("theta", np.linspace(-1, 1, 11))
def test_fgm_envelope_is_sound(theta, grid):
    model = make_fgm(theta)
    rep = envelope_bound(*envelope_extract(model, grid), grid)
    assert rho1(model, grid) <= rep.value + 10 * grid.tolerance


# --- bilinear form -----------------------------------------------------------------------

def test_bilinear_inequality(rng, grid):
    x = grid.nodes
    for model in (make_fgm(0.7), build("m2", (1.0, 1.0)), make_frechet(0.0, 0.0)):
        f = model.density_matrix(grid)
        bound = envelope_bound(*envelope_extract(model, grid), grid).value
        for _ in range(50):
            g = rng.standard_normal(8) @ np.cos(np.pi * np.outer(np.arange(8), x))
            h = rng.standard_normal(8) @ np.cos(np.pi * np.outer(np.arange(8), x))
            g, h = g - grid.integrate(g), h - grid.integrate(h)
            assert bilinear_ratio(f, g, h, grid) <= bound + 1e-12


# --- holding-kernel sandwich ---------------------------------------------------------------

def test_dmr_examples():
    s = dmr_sandwich(0.9, 4)
    assert s.lower == pytest.approx(0.9 ** 5 / 5)
    assert s.upper == pytest.approx(0.729)
    assert s.expectation == pytest.approx(0.9 ** 4 / 5)
    one = dmr_sandwich(0.7, 1)
    assert (one.lower, one.upper) == pytest.approx((0.49 / 2, 2.1))
    for n in (1, 5, 10):
        assert dmr_sandwich(1.0, n).lower == pytest.approx(1 / (n + 1))


@given(st.floats(0.001, 1.0), st.integers(1, 60))
def test_dmr_ordered(a, n):
    s = dmr_sandwich(a, n)
    lo, hi = s
    assert lo <= hi and s.expectation <= hi
    assert s.loosest_lower == min(lo, s.expectation)


def test_dmr_errors():
    with pytest.raises(ParameterError):
        dmr_sandwich(0.0, 2)
    with pytest.raises(InputError):
        dmr_sandwich(0.5, 0)


def test_report_json():
    rep = envelope_bound(0.25, 0.25, Grid.midpoint(16))
    data = json.loads(rep.to_json())
    assert data["satisfied"] and data["value"] == pytest.approx(0.75)

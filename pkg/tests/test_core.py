import numpy as np
import pytest
from hypothesis import given, strategies as st

from copulamix.core import (CURVE, FLIP, IDENTITY, AtomicMap, CopulaModel, TabulatedDensity,
                            conditional_cdf, copula_cdf, fold, n_step, reconstruct_cdf,
                            validate_copula)
from copulamix.errors import InputError, NumericError, UnsupportedFeatureError
from copulamix.families import (frechet_n_step_params, independence, make_fgm, make_frechet,
                                make_mh_copula)
from copulamix.grid import Grid


def fgm_density(theta, x, y):
    return 1 + theta * (1 - 2 * x) * (1 - 2 * y)


# --- atoms -------------------------------------------------------------------------

@pytest.mark.parametrize("first,second,expected", [
    (IDENTITY, IDENTITY, IDENTITY), (IDENTITY, FLIP, FLIP),
    (FLIP, IDENTITY, FLIP), (FLIP, FLIP, IDENTITY),
])
def test_atom_composition_table(first, second, expected):
    assert AtomicMap(first, 0.5).then(AtomicMap(second, 0.4)).kind == expected


def test_state_dependent_composition_follows_the_path():
    # weight of the second move is read at the first move's landing point
    a = AtomicMap(FLIP, lambda x: x)
    b = AtomicMap(IDENTITY, lambda x: x ** 2)
    c = a.then(b)
    assert c.kind == FLIP
    assert float(c.weight_at(0.2)) == pytest.approx(0.2 * 0.8 ** 2)


def test_curve_atoms_do_not_compose():
    curve = AtomicMap(CURVE, 0.1, curve=lambda x: 1 - x)
    with pytest.raises(UnsupportedFeatureError):
        curve.then(AtomicMap(IDENTITY, 0.5))
    with pytest.raises(InputError):
        AtomicMap("shift", 0.1)


# --- conditional CDF -----------------------------------------------------------------

def test_conditional_cdf_examples():
    assert float(conditional_cdf(independence(), 0.7, 0.3)) == pytest.approx(0.3)
    assert float(conditional_cdf(make_frechet(0.3, 0.2), 0.1, 0.15)) == pytest.approx(0.375)
    assert float(conditional_cdf(make_fgm(1.0), 0.0, 0.5)) == pytest.approx(0.75)


def test_conditional_cdf_right_continuous_at_atom():
    m = make_frechet(0.3, 0.2)
    # identity atom sits exactly at v = x
    assert float(conditional_cdf(m, 0.4, 0.4)) == pytest.approx(0.3 + 0.5 * 0.4)


def test_conditional_cdf_range_checked():
    with pytest.raises(InputError):
        conditional_cdf(independence(), 1.2, 0.5)
    with pytest.raises(InputError):
        conditional_cdf(independence(), 0.5, -0.1)


@pytest.mark.parametrize("model", [make_fgm(-0.8), make_frechet(0.3, 0.2), make_mh_copula(0.7)],
                         ids=lambda m: m.label)
def test_conditional_cdf_is_a_cdf(model, small_grid):
    v = np.linspace(0, 1, 201)
    vals = conditional_cdf(model, small_grid.nodes[:, None], v[None, :])
    assert np.all(np.diff(vals, axis=1) >= -1e-12)
    np.testing.assert_allclose(vals[:, 0], model.atom_mass(small_grid.nodes)
                               * (model.atom(IDENTITY) is not None
                                  and small_grid.nodes <= 0) + 0.0, atol=1e-12)
    np.testing.assert_allclose(vals[:, -1], 1.0, atol=1e-12)


# --- validation -------------------------------------------------------------------

def test_independence_validates_tightly(grid):
    rep = validate_copula(independence(), grid)
    assert rep.ok and rep.worst_violation <= 1e-12


def test_frechet_validates(grid):
    assert validate_copula(make_frechet(0.3, 0.2), grid).ok


def test_out_of_range_fgm_density_is_flagged(grid):
    # theta = 1.5 bypasses the constructor to reach the axiom checker
    theta = 1.5
    bad = CopulaModel(density=lambda x, y: fgm_density(theta, x, y), label="FGM(1.5)",
                      cdf=lambda x, y: x * y + theta * x * y * (1 - x) * (1 - y))
    assert fgm_density(theta, 0.01, 0.99) < 0 < fgm_density(theta, 0.01, 0.01)
    rep = validate_copula(bad, grid)
    assert not rep.two_increasing_ok
    assert rep.margins_ok and rep.grounded_ok


def test_block_density_is_a_copula(grid):
    # 2 * 1{x, y on the same side of 1/2} is doubly stochastic and nonnegative
    model = CopulaModel(density=lambda x, y: 2.0 * ((x < 0.5) == (y < 0.5)), closed_form=False)
    assert validate_copula(model, grid).ok


def test_strip_density_fails_margins(grid):
    # 2 * 1{x + y < 1} has row mass 2(1 - x)
    model = CopulaModel(density=lambda x, y: 2.0 * (x + y < 1), closed_form=False)
    rep = validate_copula(model, grid)
    assert not rep.margins_ok and rep.worst_violation == pytest.approx(1.0, abs=0.01)


def test_non_finite_density_reports_location(small_grid):
    model = CopulaModel(density=lambda x, y: np.where((x > 0.5) & (y > 0.5), np.nan, 1.0))
    with pytest.raises(NumericError) as info:
        validate_copula(model, small_grid)
    assert info.value.location[0] > 0.5


def test_unevaluable_density_is_input_error(small_grid):
    def broken(x, y):
        raise RuntimeError("no")
    with pytest.raises(InputError):
        validate_copula(CopulaModel(density=broken), small_grid)


def test_validation_report_invariants(grid):
    rep = validate_copula(make_mh_copula(0.5), grid)
    assert rep.worst_violation >= 0
    assert rep.ok and rep.worst_violation <= rep.tolerance


# --- CDF reconstruction ------------------------------------------------------------

def test_mh_reconstructed_cdf_matches_closed_form(rng, grid):
    m = make_mh_copula(0.6)
    u, v = rng.random((2, 100))
    assert np.max(np.abs(reconstruct_cdf(m, u, v) - copula_cdf(m, u, v))) <= grid.tolerance


def test_tabulated_density_integrals_are_exact():
    g = Grid.midpoint(4)
    vals = np.arange(16.0).reshape(4, 4)
    dens = TabulatedDensity(g, vals)
    # full square: average of the table
    assert float(dens.integral(1.0, 1.0)) == pytest.approx(vals.mean())
    # one cell
    assert float(dens.integral(0.25, 0.25)) == pytest.approx(vals[0, 0] / 16)
    assert float(dens.row_integral(0.6, 0.5)) == pytest.approx((vals[2, 0] + vals[2, 1]) / 4)


# --- fold --------------------------------------------------------------------------

def test_independence_absorbs(grid):
    out = fold(independence(), make_fgm(0.5), grid)
    np.testing.assert_allclose(out.density_matrix(grid), 1.0, atol=1e-12)


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_fgm_fold_parameter_map(t1, t2):
    g = Grid.midpoint(256)
    out = fold(make_fgm(t1), make_fgm(t2), g)
    x = g.nodes
    expected = fgm_density(t1 * t2 / 3, x[:, None], x[None, :])
    assert np.max(np.abs(out.density_matrix(g) - expected)) <= g.tolerance


def test_fgm_fold_example(grid):
    out = fold(make_fgm(0.9), make_fgm(0.6), grid)
    x = grid.nodes
    err = np.max(np.abs(out.density_matrix(grid) - fgm_density(0.18, x[:, None], x[None, :])))
    assert err <= grid.tolerance


def test_frechet_square_matches_closed_form(grid):
    out = fold(make_frechet(0.3, 0.2), make_frechet(0.3, 0.2), grid)
    assert out.atom(IDENTITY).constant == pytest.approx(0.13, abs=1e-15)
    assert out.atom(FLIP).constant == pytest.approx(0.12, abs=1e-15)
    np.testing.assert_allclose(out.density_matrix(grid), 0.75, atol=1e-12)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_frechet_atom_algebra_is_exact(a, b, a2, b2):
    if a + b > 1 or a2 + b2 > 1:
        return
    out = fold(make_frechet(a, b), make_frechet(a2, b2), Grid.midpoint(16))
    ident = out.atom(IDENTITY)
    flip = out.atom(FLIP)
    assert (ident.constant if ident else 0.0) == pytest.approx(a * a2 + b * b2, abs=1e-15)
    assert (flip.constant if flip else 0.0) == pytest.approx(a * b2 + a2 * b, abs=1e-15)


def test_fold_of_validated_models_validates(grid):
    out = fold(make_mh_copula(0.5), make_fgm(-0.7), grid)
    rep = validate_copula(out, grid, tol=10 * grid.tolerance)
    assert rep.ok


def test_fold_associative_on_grid(rng):
    g = Grid.midpoint(128)
    for _ in range(3):
        a, b = rng.uniform(0, 0.5, 2)
        models = [make_fgm(rng.uniform(-1, 1)), make_frechet(a, b), make_fgm(rng.uniform(-1, 1))]
        left = fold(fold(models[0], models[1], g), models[2], g)
        right = fold(models[0], fold(models[1], models[2], g), g)
        assert np.max(np.abs(left.density_matrix(g) - right.density_matrix(g))) <= 10 * g.tolerance


def test_fold_rejects_curve_atoms(small_grid):
    weird = CopulaModel(density=lambda x, y: 0.9 + 0 * x,
                        atoms=(AtomicMap(CURVE, 0.1, curve=lambda x: 1 - x),))
    with pytest.raises(UnsupportedFeatureError):
        fold(weird, independence(), small_grid)


# --- n_step --------------------------------------------------------------------------

def test_n_step_one_is_identity(grid):
    m = make_fgm(0.3)
    assert n_step(m, 1, grid) is m


def test_n_step_zero(grid):
    with pytest.raises(InputError):
        n_step(make_fgm(0.3), 0, grid)
    m = n_step(make_fgm(0.3), 0, grid, allow_zero=True)
    assert m.atom(IDENTITY).constant == 1.0


def test_fgm_three_steps(grid):
    out = n_step(make_fgm(0.9), 3, grid)
    x = grid.nodes
    expected = fgm_density(0.9 ** 3 / 9, x[:, None], x[None, :])
    assert np.max(np.abs(out.density_matrix(grid) - expected)) <= grid.tolerance


@pytest.mark.parametrize("n", [2, 3, 5, 6])
def test_frechet_n_step_matches_closed_form(n, grid):
    out = n_step(make_frechet(0.3, 0.2), n, grid)
    an, bn = frechet_n_step_params(0.3, 0.2, n)
    assert out.atom(IDENTITY).constant == pytest.approx(an, abs=1e-15)
    assert out.atom(FLIP).constant == pytest.approx(bn, abs=1e-15)
    np.testing.assert_allclose(out.density_matrix(grid), 1 - an - bn, atol=grid.tolerance)

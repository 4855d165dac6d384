import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from copulamix.errors import InputError, ParameterError
from copulamix.ergodicity import (DriftSpec, _min_interval_sums, drift_check, frechet_drift_spec,
                                  frechet_lyapunov, minorization_check, union_margins)
from copulamix.families import build, independence, make_frechet
from copulamix.grid import Grid
from copulamix.spectral import no_mixing_witness


# --- minorization --------------------------------------------------------------------

def test_frechet_small_set(grid):
    cert = minorization_check(make_frechet(0.3, 0.2), (0.5, 1.0), 0.5, grid)
    # exact margin is 0; summing 512 cell weights leaves round-off
    assert cert.valid and cert.worst_margin >= -1e-12 and cert.borel_margin >= -1e-12


@pytest.mark.parametrize("q", [1e-3, 0.1, 1.0])
def test_boundary_frechet_has_no_small_set(q, grid):
    cert = minorization_check(make_frechet(0.6, 0.4), (0.5, 1.0), q, grid)
    assert not cert.valid and cert.borel_margin < 0


def test_independence_whole_interval(grid):
    cert = minorization_check(independence(), (0.0, 1.0), 1.0, grid)
    assert cert.valid and cert.worst_margin == pytest.approx(0.0, abs=1e-12)


def test_minorization_input_errors(grid):
    with pytest.raises(InputError):
        minorization_check(independence(), (0.5, 0.2), 0.5, grid)
    with pytest.raises(InputError):
        minorization_check(independence(), (0.0, 1.0), 0.0, grid)
    with pytest.raises(InputError):
        minorization_check(independence(), (0.0, 1e-5), 0.5, grid)


def test_two_step_certificate(grid):
    cert = minorization_check(make_frechet(0.3, 0.2), (0.5, 1.0), 0.75, grid, n=2)
    # the two-step density is 1 - 0.25 = 0.75
    assert cert.n == 2 and cert.valid


def test_certificate_json(grid):
    data = json.loads(minorization_check(make_frechet(0.3, 0.2), (0.5, 1.0), 0.5, grid).to_json())
    assert data["valid"] and data["schema_version"] == 1


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=25))
def test_min_interval_sum_against_brute_force(values):
    d = np.array([values])
    best, start, stop = _min_interval_sums(d)
    brute = min(d[0, i:j].sum() for i in range(d.size) for j in range(i + 1, d.size + 1))
    assert best[0] == pytest.approx(brute, abs=1e-12)
    assert d[0, start[0]:stop[0]].sum() == pytest.approx(best[0], abs=1e-12)


@pytest.mark.parametrize("family,params,q", [("frechet", (0.3, 0.2), 0.5), ("mh", (0.5,), 0.3),
                                             ("fgm", (0.6,), 0.4)])
def test_unions_never_beat_intervals(family, params, q, grid):
    model = build(family, params)
    cert = minorization_check(model, (0.25, 0.75), q, grid)
    margins = union_margins(model, (0.25, 0.75), q, grid, n_sets=200, seed=3)
    if cert.worst_margin >= 0:
        # densities bounded below by q: every union inherits the nonnegative margin
        assert margins.min() >= -cert.tolerance
    assert cert.borel_margin <= margins.min() + cert.tolerance


# --- drift ---------------------------------------------------------------------------

def test_frechet_drift_constants(grid):
    spec = frechet_drift_spec(0.3, 0.2, grid)
    assert spec.r == pytest.approx(1.2121, abs=1e-4)
    assert spec.gamma == pytest.approx(0.0606, abs=1e-4)
    rep = drift_check(make_frechet(0.3, 0.2), spec, grid)
    assert rep.ok
    # E[L | x] = 2a + b + 1.5(1 - a - b) = 1.55 off S; slack 2 - gamma - 1.55 r
    assert rep.drift_slack == pytest.approx(2 - spec.gamma - spec.r * 1.55, abs=1e-12)


def test_frechet_drift_spec_a_zero(grid):
    spec = frechet_drift_spec(0.0, 0.5, grid)
    assert (spec.r, spec.gamma) == pytest.approx((4 / 3, 1 / 6))


def test_frechet_drift_spec_errors(grid):
    with pytest.raises(ParameterError):
        frechet_drift_spec(0.3, 0.0, grid)
    with pytest.raises(ParameterError):
        frechet_drift_spec(0.5, 0.5, grid)


def test_independence_drift(grid):
    spec = DriftSpec(frechet_lyapunov, (0.5, 1.0), 1.2, 0.1, 2.0, grid)
    rep = drift_check(independence(), spec, grid)
    assert rep.ok
    assert rep.drift_slack == pytest.approx(2 - 0.1 - 1.2 * 1.5, abs=1e-12)
    tight = DriftSpec(frechet_lyapunov, (0.5, 1.0), 1.2, 0.25, 2.0, grid)
    assert not drift_check(independence(), tight, grid).drift_ok


@pytest.mark.parametrize("kwargs", [dict(r=1.0), dict(gamma=0.0), dict(K=0.0),
                                    dict(L=lambda x: -np.ones_like(x)),
                                    dict(L=lambda x: np.where(x > 0.6, 0.0, 1.0))])
def test_drift_spec_validation(kwargs, grid):
    base = dict(L=frechet_lyapunov, S=(0.5, 1.0), r=1.2, gamma=0.1, K=2.0, grid=grid)
    with pytest.raises(ParameterError):
        DriftSpec(**{**base, **kwargs})


def test_vacuous_small_set(grid):
    spec = DriftSpec(frechet_lyapunov, (0.0, 1.0), 1.2, 0.1, 2.0, grid)
    with pytest.raises(InputError):
        drift_check(independence(), spec, grid)


@settings(max_examples=20)
@given(st.floats(0, 0.94), st.floats(0.01, 0.95))
def test_frechet_lattice_certified(a, b):
    if a + b > 0.95:
        return
    g = Grid.midpoint(128)
    model = make_frechet(a, b)
    spec = frechet_drift_spec(a, b, g)
    assert drift_check(model, spec, g).ok
    assert minorization_check(model, spec.S, 1 - a - b, g).worst_margin >= -1e-12


@pytest.mark.parametrize("a", [0.0, 0.3, 0.7, 1.0])
def test_no_small_set_agrees_with_witness(a, grid):
    model = make_frechet(a, 1 - a)
    assert not minorization_check(model, (0.5, 1.0), 0.01, grid).valid
    fixed, _ = no_mixing_witness(model, grid)
    assert fixed

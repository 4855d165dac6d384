import json

import numpy as np
import pytest
from scipy import stats

from copulamix.acceptance import BUILTIN_INSTANCES
from copulamix.errors import InputError, ParameterError
from copulamix.families import (MHKernelParams, build, independence, make_fgm, make_frechet,
                                make_mh_copula)
from copulamix.simulate import (Trajectory, empirical_corr_decay, ks_increments, ks_uniform,
                                sample_chain, sample_mh_kernel, stay_fraction, to_unit)

N = 100_000


@pytest.fixture(scope="module")
def fgm_traj():
    return sample_chain(make_fgm(0.9), N, 11)


def test_independence_lag_one_correlation():
    traj = sample_chain(independence(), N, 1)
    x, y = traj.lag_pairs(1)
    assert abs(np.corrcoef(x, y)[0, 1]) <= 3 / np.sqrt(N)


def test_frechet_stay_fraction():
    traj = sample_chain(make_frechet(0.3, 0.2), N, 2)
    assert stay_fraction(traj) == pytest.approx(0.3, abs=3 * np.sqrt(0.21 / N))


def test_mh_stay_fraction():
    traj = sample_chain(make_mh_copula(0.5), N, 3)
    # stay probability a|2U - 1| has mean a/2 and variance a^2/3 - a^2/4
    sd = np.sqrt(0.25 * 0.75 / N)
    assert stay_fraction(traj) == pytest.approx(0.25, abs=4 * sd)


def test_states_in_unit_interval_and_deterministic():
    m = build("m3", (1.0, 2.0))
    a = sample_chain(m, 500, 9)
    b = sample_chain(m, 500, 9)
    assert len(a) == 500 and np.all((a.states >= 0) & (a.states <= 1))
    assert np.array_equal(a.states, b.states)
    assert not np.array_equal(a.states, sample_chain(m, 500, 10).states)


@pytest.mark.parametrize("length", [0, -3, 2.5])
def test_bad_length(length):
    with pytest.raises(InputError):
        sample_chain(independence(), length, 0)


def test_length_one():
    assert len(sample_chain(make_fgm(0.2), 1, 0)) == 1


@pytest.mark.parametrize("family,params", BUILTIN_INSTANCES, ids=[f"{f}{p}" for f, p in BUILTIN_INSTANCES])
def test_marginal_stays_uniform(family, params):
    traj = sample_chain(build(family, params), N, 7)
    assert ks_uniform(traj).pvalue > 0.01


# --- the holding kernel ---------------------------------------------------------------

def test_kernel_marginal_at_a_one():
    traj = sample_mh_kernel(1.0, N, 4)
    assert np.all(np.abs(traj.states) <= 1)
    # the chain is sticky, so allow a generous multiple of the i.i.d. error
    assert abs(traj.states.mean()) <= 10 * np.sqrt(1 / 3 / N)
    assert traj.states.var() == pytest.approx(1 / 3, abs=0.02)


def test_kernel_proposal_density():
    kp = MHKernelParams(0.5)
    assert kp.k == pytest.approx(2 / 3)
    h = 1e-6
    slope = (kp.proposal_cdf(h) - kp.proposal_cdf(-h)) / (2 * h)
    assert float(slope) == pytest.approx(2 / 3, rel=1e-6)


def test_kernel_small_a_is_iid():
    traj = sample_mh_kernel(1e-9, 20_000, 5)
    assert stay_fraction(traj) == 0.0
    assert stats.kstest(traj.states, "uniform", args=(-1, 2)).pvalue > 0.01


def test_kernel_and_copula_samplers_agree():
    a = 0.75
    kern = to_unit(sample_mh_kernel(a, N, 21))
    cop = sample_chain(make_mh_copula(a), N, 22)
    assert ks_increments(kern, cop).pvalue > 0.01
    assert stay_fraction(kern) == pytest.approx(stay_fraction(cop), abs=0.01)


def test_kernel_rejects_bad_slope():
    with pytest.raises(ParameterError):
        sample_mh_kernel(1.5, 10, 0)


# --- correlation decay ---------------------------------------------------------------

def test_fgm_decay_follows_eigenvalue(fgm_traj):
    series = empirical_corr_decay(fgm_traj, lambda x: 1 - 2 * x, [1, 2, 3])
    expected = 0.3 ** series.lags
    assert np.all(np.abs(series.values - expected) <= 3 * series.stderr + 1e-12)
    assert np.all(np.abs(series.values) <= 1)


def test_independence_decay_vanishes():
    traj = sample_chain(independence(), N, 8)
    series = empirical_corr_decay(traj, lambda x: np.cos(2 * np.pi * x), [1, 2, 5])
    assert np.all(np.abs(series.values) <= 4 * series.stderr + 3 / np.sqrt(N))


def test_boundary_frechet_keeps_cosine():
    # one trajectory has f(X_t) constant, so pool independent chains instead
    m = make_frechet(0.6, 0.4)
    chains = np.array([sample_chain(m, 6, s).states for s in range(2000)])
    f = np.cos(2 * np.pi * chains)
    for lag in range(1, 6):
        assert np.corrcoef(f[:, 0], f[:, lag])[0, 1] == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(InputError):
        empirical_corr_decay(Trajectory(chains[0], 0), lambda x: np.cos(2 * np.pi * x), [1])


def test_decay_errors(fgm_traj):
    with pytest.raises(InputError):
        empirical_corr_decay(fgm_traj, lambda x: np.ones_like(x), [1])
    with pytest.raises(InputError):
        empirical_corr_decay(fgm_traj, lambda x: x, [N])


# --- serialization --------------------------------------------------------------------

def test_csv_roundtrip():
    traj = sample_chain(make_fgm(0.4), 50, 13)
    text = traj.to_csv()
    head = json.loads(text.splitlines()[0][2:])
    assert head == {"schema_version": 1, "model": traj.label, "seed": 13, "length": 50}
    back = Trajectory.from_csv(text)
    assert np.array_equal(back.states, traj.states) and back.seed == 13


def test_csv_needs_header():
    with pytest.raises(InputError):
        Trajectory.from_csv("state\n0.5\n")

"""Exact simulation of stationary copula chains and empirical decay diagnostics."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .core import CopulaModel, ac_cdf
from .errors import InputError, NumericError
from .families import MHKernelParams

SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class Trajectory:
    states: np.ndarray
    seed: int
    label: str = ""

    def __len__(self):
        return self.states.size

    def header(self):
        return {"schema_version": SCHEMA_VERSION, "model": self.label,
                "seed": self.seed, "length": int(self.states.size)}

    def to_csv(self):
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
        buf.write("state\n")
        for s in self.states:
            buf.write(repr(float(s)) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# "):
            raise InputError("trajectory CSV must start with a '# {json}' header")
        head = json.loads(lines[0][2:])
        if lines[1].strip() != "state":
            raise InputError("trajectory CSV needs a 'state' column")
        states = np.array([float(v) for v in lines[2:] if v.strip()])
        return cls(states, int(head["seed"]), head.get("model", ""))

    def lag_pairs(self, lag=1):
        return self.states[:-lag], self.states[lag:]


@dataclass(frozen=True)
class DecaySeries:
    lags: np.ndarray
    values: np.ndarray
    stderr: np.ndarray

    def to_dict(self):
        return {"lags": self.lags.tolist(), "values": self.values.tolist(),
                "stderr": self.stderr.tolist()}


def _check_length(length):
    if int(length) != length or length < 1:
        raise InputError(f"length must be a positive integer, got {length!r}")
    return int(length)


def _ac_step(model: CopulaModel, x, p):
    """Draw from the AC part of row ``x`` given a uniform ``p``."""
    if model.ac_inverse is not None:
        return float(model.ac_inverse(x, p))
    mass = float(ac_cdf(model, x, 1.0))
    if mass <= 0.0:
        raise NumericError("row has no absolutely continuous mass to invert", x)
    target = p * mass

    def excess(v):
        return float(ac_cdf(model, x, v)) - target

    try:
        return optimize.brentq(excess, 0.0, 1.0, xtol=1e-12)
    except (ValueError, RuntimeError) as exc:
        raise NumericError(f"conditional inversion failed: {exc}", x) from exc


def sample_chain(model: CopulaModel, length, seed) -> Trajectory:
    """Stationary trajectory started from ``X_0 ~ U(0, 1)``.

    Each step uses one uniform ``u``: the atoms take the first
    ``sum weight(x)`` of [0, 1) in order, the rest is rescaled and pushed
    through the inverse conditional CDF of the absolutely continuous part.
    """
    length = _check_length(length)
    rng = np.random.default_rng(seed)
    out = np.empty(length)
    x = float(rng.random())
    out[0] = x
    atoms = model.atoms
    draws = rng.random(length - 1)
    for t in range(1, length):
        u = float(draws[t - 1])
        cum = 0.0
        nxt = None
        for atom in atoms:
            cum += float(atom.weight_at(x))
            if u < cum:
                nxt = float(atom.target(x))
                break
        if nxt is None:
            rest = 1.0 - cum
            p = min(max((u - cum) / rest, 0.0), 1.0) if rest > 0 else u
            nxt = _ac_step(model, x, p)
        x = min(max(nxt, 0.0), 1.0)
        out[t] = x
    return Trajectory(out, int(seed), model.label)


def sample_mh_kernel(a, length, seed) -> Trajectory:
    """Direct simulation on [-1, 1]: hold with probability ``a|x|``, else
    redraw from the density ``k(1 - a|t|)``.
    """
    kp = a if isinstance(a, MHKernelParams) else MHKernelParams(a)
    length = _check_length(length)
    rng = np.random.default_rng(seed)
    hold = rng.random(length)
    fresh = kp.proposal_inverse(rng.random(length))
    out = np.empty(length)
    x = 2.0 * hold[0] - 1.0
    out[0] = x
    slope = float(kp.a)
    for t in range(1, length):
        if hold[t] >= slope * abs(x):
            x = float(fresh[t])
        out[t] = x
    return Trajectory(out, int(seed), f"MH-kernel(a={slope:g})")


def to_unit(traj: Trajectory) -> Trajectory:
    """Affine map ``u = (x + 1)/2`` from [-1, 1] to [0, 1]."""
    return Trajectory((traj.states + 1.0) / 2.0, traj.seed, traj.label)


def empirical_corr_decay(traj: Trajectory, f, lags, batches=20) -> DecaySeries:
    """Sample correlation of ``f(X_t)`` and ``f(X_{t+lag})`` with batch-means errors."""
    y = np.asarray(f(traj.states), float)
    if y.shape != traj.states.shape:
        y = np.broadcast_to(y, traj.states.shape)
    if np.ptp(y) == 0.0:
        raise InputError("f is constant along the trajectory; correlation is undefined")
    lags = np.asarray(lags, dtype=int)
    values, errs = [], []
    for lag in lags:
        if lag < 0 or lag >= y.size - 2 * batches:
            raise InputError(f"lag {lag} is out of range for length {y.size}")
        a, b = (y, y) if lag == 0 else (y[:-lag], y[lag:])
        values.append(_corr(a, b))
        parts = [_corr(pa, pb) for pa, pb in zip(np.array_split(a, batches), np.array_split(b, batches))]
        errs.append(float(np.std(parts, ddof=1) / np.sqrt(batches)))
    return DecaySeries(lags, np.array(values), np.array(errs))


def _corr(a, b):
    sa, sb = np.std(a), np.std(b)
    if sa == 0.0 or sb == 0.0:
        return 1.0 if np.allclose(a, b) else 0.0
    return float(np.clip(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb), -1.0, 1.0))


def stay_fraction(traj: Trajectory):
    """Fraction of steps with ``X_{t+1} == X_t``."""
    return float(np.mean(traj.states[1:] == traj.states[:-1]))


def ks_uniform(traj: Trajectory):
    """One-sample KS test of the states against U(0, 1)."""
    return stats.kstest(traj.states, "uniform")


def ks_increments(first: Trajectory, second: Trajectory):
    """Two-sample KS test on the one-step increments ``X_{t+1} - X_t``.

    The increment is a scalar summary of the pair law that sees both the
    holding atom (a point mass at 0) and the refresh density.
    """
    return stats.ks_2samp(np.diff(first.states), np.diff(second.states))

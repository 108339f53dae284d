from __future__ import annotations

import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_sample
from elci import CensoredSample, Kind, builtin, parse_functional, point_estimate
from elci.distributions import Exponential, Uniform, Weibull
from elci.errors import NoSignChange, ValidationError, ZeroDenominator
from elci.functionals import FunctionalSpec, score_mean
from elci.simulation import true_theta


@pytest.mark.parametrize(
    "name, params, x, theta, expected",
    [
        ("survival", {"y": 1.0}, 2.0, 0.3, 0.7),
        ("survival", {"y": 1.0}, 1.0, 0.3, -0.3),
        ("moment", {"k": 2}, 3.0, 4.0, 5.0),
        ("mean", {}, 3.0, 1.0, 2.0),
        ("mean_residual_life", {"t0": 1.0}, 3.0, 0.5, 1.5),
        ("mean_residual_life", {"t0": 1.0}, 0.5, 0.5, 0.0),
        ("mean_residual_life", {"t0": 1.0}, 1.0, 0.5, -0.5),
        ("length_biased_survival", {"y": 1.0}, 2.0, 0.25, 1.5),
        ("length_biased_mean", {}, 2.0, 1.5, 1.0),
        ("length_biased_residual_mean", {}, 2.0, 1.5, -2.0),
        ("quantile", {"p": 0.5}, 1.0, 1.0, 0.5),
        ("quantile", {"p": 0.5}, 1.5, 1.0, -0.5),
    ],
)
def test_scores(name, params, x, theta, expected):
    f = builtin(name, **params)
    assert float(f.g(np.array(x), theta)) == pytest.approx(expected)


def test_linear_kinds_have_matching_a_b():
    for desc in ("survival:y=0.4", "mean", "moment:k=3", "mrl:t0=0.5", "lb-survival:y=0.4",
                 "lb-mean", "lb-residual-mean"):
        f = parse_functional(desc)
        assert f.kind is Kind.LINEAR
        x = np.linspace(0, 2, 21)
        assert np.allclose(f.g(x, 0.7), f.a(x) - 0.7 * f.b(x))
    q = parse_functional("quantile:p=0.5")
    assert q.kind is Kind.QUANTILE and q.experimental


@pytest.mark.parametrize("desc", ["nope", "mrl", "mrl:t0=abc", "mrl:t0", "survival:y=1,z=2",
                                  "quantile:p=1.5", "moment:k=0"])
def test_bad_descriptors(desc):
    with pytest.raises(ValidationError):
        parse_functional(desc)


def test_labels_round_trip():
    for desc in ("mean", "mean_residual_life:t0=0.9", "quantile:p=0.25", "moment:k=2"):
        assert parse_functional(desc).label == desc
        assert parse_functional(parse_functional(desc).label).label == desc


def test_builtins_pickle():
    f = builtin("mrl", t0=0.8)
    g = pickle.loads(pickle.dumps(f))
    x = np.linspace(0, 2, 9)
    assert np.array_equal(f.g(x, 0.1), g.g(x, 0.1))


def test_point_estimates_hand(hand):
    assert point_estimate(hand, builtin("mean")) == pytest.approx(7 / 3, abs=1e-15)
    assert point_estimate(hand, builtin("length_biased_mean")) == pytest.approx(19 / 7, abs=1e-15)
    assert point_estimate(hand, builtin("quantile", p=0.5)) == 3.0
    assert point_estimate(hand, builtin("quantile", p=1 / 3)) == 1.0


def test_survival_no_censoring(rng):
    t = rng.exponential(size=40)
    s = CensoredSample(t, np.ones(40, dtype=int))
    assert point_estimate(s, builtin("survival", y=0.8)) == pytest.approx(np.mean(t > 0.8), abs=1e-14)


def test_mrl_without_events_past_t0(hand):
    with pytest.raises(ZeroDenominator):
        point_estimate(hand, builtin("mrl", t0=5.0))


def test_quantile_beyond_mass():
    s = CensoredSample([1, 2, 3, 4], [1, 0, 1, 0])
    with pytest.raises(NoSignChange):
        point_estimate(s, builtin("quantile", p=0.99))


def test_smooth_kind_uses_root_finder(rng):
    s = random_sample(rng, 50)
    f = FunctionalSpec("cubic", lambda x, t: np.asarray(x) - t**3, Kind.SMOOTH)
    th = point_estimate(s, f)
    assert abs(score_mean(s, f, th)) <= 1e-10 / s.n
    assert th**3 == pytest.approx(point_estimate(s, builtin("mean")), rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 60), st.integers(0, 2**32 - 1))
def test_linear_estimate_zeroes_score(n, seed):
    s = random_sample(np.random.default_rng(seed), n)
    for desc in ("mean", "lb-mean", "moment:k=2", "lb-residual-mean"):
        f = parse_functional(desc)
        th = point_estimate(s, f)
        assert abs(score_mean(s, f, th)) < 1e-12 * max(1.0, abs(th))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 60), st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_mean_scale_equivariance(n, seed, c):
    s = random_sample(np.random.default_rng(seed), n)
    f = builtin("mean")
    assert point_estimate(s.scaled(c), f) == pytest.approx(c * point_estimate(s, f), rel=1e-12)


@pytest.mark.parametrize(
    "lifetime, desc, expected",
    [
        (Exponential(2.0), "survival:y=1", math.exp(-0.5)),
        (Exponential(2.0), "mrl:t0=3", 2.0),
        (Uniform(0, 1), "mrl:t0=0.4", 0.3),
        (Uniform(0, 1), "quantile:p=0.3", 0.3),
        (Weibull(1, 10), "mean", math.gamma(1.1)),
        (Uniform(0, 1), "lb-mean", 2 / 3),
        (Uniform(0, 1), "moment:k=2", 1 / 3),
    ],
)
def test_population_values(lifetime, desc, expected):
    assert true_theta(lifetime, parse_functional(desc)) == pytest.approx(expected, abs=1e-10)


def test_consistency_in_n():
    from elci.simulation import ScenarioSpec, sample_scenario

    for desc in ("survival:y=0.5", "mean", "mrl:t0=0.3", "lb-mean", "quantile:p=0.5"):
        f = parse_functional(desc)
        errs = {}
        for n in (100, 1000):
            spec = ScenarioSpec(Uniform(0, 1), Uniform(0, 2.5), n, f)
            e = [abs(point_estimate(sample_scenario(spec, 3, r), f) - spec.theta0) for r in range(200)]
            errs[n] = np.median(e)
        assert errs[1000] < errs[100], desc

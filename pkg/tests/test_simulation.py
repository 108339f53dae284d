from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from elci import builtin
from elci.distributions import Exponential, NoCensoring, Uniform, Weibull, distribution_from_dict, expectation
from elci.errors import ValidationError
from elci.simulation import (
    ScenarioSpec,
    censoring_proportion,
    mrl_threshold,
    run_coverage_study,
    sample_scenario,
    scenario_from_dict,
    variance_comparison,
    worker_count,
)
from elci.tables import PUBLISHED, run_table

MEAN = builtin("mean")


@pytest.mark.parametrize("dist", [Uniform(0, 1), Uniform(0, 2.5), Weibull(1, 10), Exponential(4.3)])
def test_quantile_inverts_cdf(dist):
    u = np.linspace(1e-6, 1 - 1e-6, 1001)
    assert np.max(np.abs(dist.cdf(dist.ppf(u)) - u)) < 1e-10
    assert np.max(np.abs(dist.sf(dist.isf(u)) - u)) < 1e-10


def test_support_bounds():
    assert Uniform(0, 2.5).upper == 2.5
    assert Weibull(1, 10).upper == math.inf
    assert Exponential(2.0).upper == math.inf


def test_distribution_dicts():
    for d in (Uniform(0, 1.3), Weibull(1, 10), Exponential(2.7), NoCensoring()):
        assert distribution_from_dict(d.to_dict()) == d
    with pytest.raises(ValidationError):
        distribution_from_dict({"family": "gamma"})
    with pytest.raises(ValidationError):
        Uniform(1, 0)


def test_theta0_closed_forms():
    assert ScenarioSpec(Uniform(0, 1), Uniform(0, 2.5), 20, MEAN).theta0 == pytest.approx(0.5, abs=1e-8)
    assert ScenarioSpec(Weibull(1, 10), Exponential(4.3), 20, MEAN).theta0 == pytest.approx(math.gamma(1.1), abs=1e-8)
    assert expectation(Weibull(1, 10), lambda x: x) == pytest.approx(0.95135, abs=5e-6)


def test_wrong_theta0_rejected():
    with pytest.raises(ValidationError):
        ScenarioSpec(Uniform(0, 1), Uniform(0, 2.5), 20, MEAN, theta0=0.51)


@pytest.mark.parametrize(
    "lifetime, censoring, expected, tol",
    [
        (Uniform(0, 1), Uniform(0, 2.5), 0.2, 1e-8),
        (Uniform(0, 1), Uniform(0, 1.3), 1 / 2.6, 1e-8),
        (Exponential(1.0), Exponential(1.0), 0.5, 1e-8),
        (Weibull(1, 10), Exponential(4.3), 0.198, 0.002),
        (Weibull(1, 10), Exponential(2.7), 0.297, 0.002),
        (Uniform(0, 1), NoCensoring(), 0.0, 0.0),
    ],
)
def test_censoring_proportion(lifetime, censoring, expected, tol):
    spec = ScenarioSpec(lifetime, censoring, 10, MEAN)
    assert censoring_proportion(spec) == pytest.approx(expected, abs=tol)


def test_weibull_censoring_matches_approximation():
    # nearly all lifetimes sit near Gamma(1.1), so P(C < Y) is close to 1 - exp(-0.951/4.3)
    spec = ScenarioSpec(Weibull(1, 10), Exponential(4.3), 10, MEAN)
    assert censoring_proportion(spec) == pytest.approx(1 - math.exp(-0.951 / 4.3), abs=0.002)


def test_mrl_thresholds():
    w = Weibull(1, 10)
    assert mrl_threshold(w, 0.5) == pytest.approx(math.log(2) ** 0.1, abs=1e-12)
    assert mrl_threshold(w, 0.5) == pytest.approx(0.96401, abs=5e-6)
    assert mrl_threshold(w, 0.9) == pytest.approx((-math.log(0.9)) ** 0.1, abs=1e-12)
    assert mrl_threshold(w, 0.9) == pytest.approx(0.79850, abs=2e-5)
    assert mrl_threshold(w, 1 - 1e-12) < 0.1
    with pytest.raises(ValidationError):
        mrl_threshold(w, 1.0)


def test_sampling_is_deterministic():
    spec = ScenarioSpec(Uniform(0, 1), Uniform(0, 2.5), 40, MEAN)
    assert sample_scenario(spec, 7, 3) == sample_scenario(spec, 7, 3)
    assert sample_scenario(spec, 7, 3) != sample_scenario(spec, 7, 4)
    assert sample_scenario(spec, 7, 3) != sample_scenario(spec, 8, 3)


def test_common_units_across_sizes():
    big = ScenarioSpec(Weibull(1, 10), Exponential(4.3), 80, MEAN)
    small = big.with_n(20)
    b = set(zip(sample_scenario(big, 1, 0).time, sample_scenario(big, 1, 0).event))
    s = set(zip(sample_scenario(small, 1, 0).time, sample_scenario(small, 1, 0).event))
    assert s <= b


def test_sampled_censoring_fraction():
    spec = ScenarioSpec(Uniform(0, 1), Uniform(0, 2.5), 100000, MEAN)
    frac = sample_scenario(spec, 0).censoring_fraction
    assert frac == pytest.approx(0.2, abs=0.004)
    spec = ScenarioSpec(Weibull(1, 10), Exponential(4.3), 100000, MEAN)
    assert sample_scenario(spec, 0).censoring_fraction == pytest.approx(0.198, abs=0.004)


@pytest.mark.parametrize("lifetime", [Uniform(0, 1), Weibull(1, 10)])
def test_lifetimes_pass_ks(lifetime):
    spec = ScenarioSpec(lifetime, NoCensoring(), 100000, MEAN)
    s = sample_scenario(spec, 4)
    assert s.event.all()
    assert stats.kstest(s.time, lifetime.cdf).statistic < 0.006


def test_coverage_study_basics():
    specs = [ScenarioSpec(Uniform(0, 1), Uniform(0, 2.5), n, MEAN) for n in (20, 80)]
    rep = run_coverage_study(specs, (0.05, 0.10), ("el", "scaled"), reps=200, seed=3)
    assert len(rep) == 8
    for row in rep:
        assert 0 <= row.coverage <= 1
        assert row.avg_width > 0
        assert row.reps == 200 and row.seed == 3
    for n in (20, 80):
        for m in ("el", "scaled"):
            label = specs[0].label
            assert rep[(label, n, 0.10, m)].coverage <= rep[(label, n, 0.05, m)].coverage
            assert rep[(label, n, 0.10, m)].avg_width < rep[(label, n, 0.05, m)].avg_width


def test_coverage_study_validates():
    spec = ScenarioSpec(Uniform(0, 1), Uniform(0, 2.5), 20, MEAN)
    with pytest.raises(ValidationError):
        run_coverage_study([spec], reps=99)
    with pytest.raises(ValidationError):
        run_coverage_study([spec], methods=("bootstrap",), reps=100)
    with pytest.raises(ValidationError):
        run_coverage_study([spec, spec], reps=100)


def test_failures_are_counted():
    # tiny samples with a late threshold often have no events past t0
    spec = ScenarioSpec(Weibull(1, 10), Exponential(2.7), 5, builtin("mrl", t0=mrl_threshold(Weibull(1, 10), 0.1)))
    row = run_coverage_study([spec], (0.1,), ("el",), reps=100, seed=0).rows[0]
    assert row.failures > 0
    assert dict(row.failure_kinds)["ZeroDenominator"] > 0
    assert row.coverage <= (row.reps - row.failures) / row.reps


def test_parallel_matches_serial(monkeypatch):
    specs = [ScenarioSpec(Weibull(1, 10), Exponential(4.3), 20, MEAN)]
    monkeypatch.setenv("ELCI_THREADS", "1")
    a = run_coverage_study(specs, (0.1,), ("el", "scaled"), reps=100, seed=5)
    monkeypatch.setenv("ELCI_THREADS", "2")
    b = run_coverage_study(specs, (0.1,), ("el", "scaled"), reps=100, seed=5, workers=2)
    assert a == b


def test_worker_count(monkeypatch):
    monkeypatch.setenv("ELCI_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(1) == 1
    monkeypatch.setenv("ELCI_THREADS", "x")
    with pytest.raises(ValidationError):
        worker_count()


def test_variance_comparison_uniform():
    spec = ScenarioSpec(Uniform(0, 1), Uniform(0, 2.5), 80, MEAN)
    res = variance_comparison(spec, reps=200, seed=1)
    assert res.s_W2 < res.s_V2
    assert res.s_W2 == pytest.approx(0.0934, abs=0.006)
    assert res.fraction_w_smaller >= 0.95


def test_variance_comparison_no_censoring():
    spec = ScenarioSpec(Uniform(0, 1), NoCensoring(), 30, MEAN)
    res = variance_comparison(spec, reps=100, seed=1)
    for sw, sv in res.per_rep:
        assert sw == pytest.approx(sv, rel=1e-12)


def test_scenario_from_dict():
    specs = scenario_from_dict({"lifetime": {"family": "weibull", "scale": 1, "shape": 10},
                                "censoring": {"family": "exponential", "mean": 2.7},
                                "n": [20, 40], "functional": "mrl:t0=0.9"})
    assert [s.n for s in specs] == [20, 40]
    with pytest.raises(ValidationError):
        scenario_from_dict({"n": 20})


def test_published_table_shapes():
    assert sum(1 for k in PUBLISHED if k[0] == 1) == 64
    assert sum(1 for k in PUBLISHED if k[0] == 4 and k[-1] == "coverage") == 32
    assert PUBLISHED[(4, 0.3, 20, "I1", "coverage")] == 0.701
    assert PUBLISHED[(3, "20%", "uniform", 80, "s_W2")] == 0.0934


def test_table_layouts():
    t4 = run_table(4, reps=100, seed=2)
    assert len(t4.rows) == 32
    assert t4.columns[-3:] == ("reps", "seed", "failures")
    t3 = run_table(3, reps=100, seed=2)
    assert {"s_W2", "s_V2"} <= set(t3.columns)
    assert len(t3.rows) == 16
    assert "nan" not in t4.tsv() and "nan" not in t3.tsv()
    with pytest.raises(ValidationError):
        run_table(6)

"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Monte Carlo criteria use ``reps = 2000`` and the fixed seed ``SEED``.
"""

from __future__ import annotations

import io
import math

import numpy as np
import pytest

from conftest import random_sample
from elci import (
    CensoredSample,
    asymptotic_variance,
    builtin,
    km_censor,
    km_event,
    km_integral,
    log_el_ratio,
    psi_n,
    w_hat,
    w_true,
)
from elci.cli import main
from elci.distributions import Exponential, Uniform, Weibull
from elci.km import empirical_subdistributions
from elci.simulation import (
    ScenarioSpec,
    censoring_proportion,
    run_coverage_study,
    sample_scenario,
    variance_comparison,
)
from elci.tables import run_table

SEED = 0
REPS = 2000
MEAN = builtin("mean")
UNIFORM = (Uniform(0, 1), Uniform(0, 2.5))
UNIFORM_C13 = (Uniform(0, 1), Uniform(0, 1.3))
WEIBULL = (Weibull(1, 10), Exponential(4.3))
WEIBULL_30 = (Weibull(1, 10), Exponential(2.7))


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number:>2} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, f"criterion {number}: {detail}"

    return emit


def test_criterion_01_mean_identity(verdict):
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(5, 201))
        s = random_sample(rng, n, censor_scale=float(rng.uniform(0.3, 5.0)))
        xi = np.polynomial.Polynomial(rng.uniform(-2, 2, size=int(rng.integers(1, 5))))
        w = w_hat(s, None, 0.0, xi=xi).w
        worst = max(worst, abs(w.mean() - km_integral(s, xi)))
    verdict(1, worst < 1e-12, f"max |mean(W) - int xi dF_n| = {worst:.2e} over 1000 samples (< 1e-12)")


def test_criterion_02_km_identities(verdict):
    rng = np.random.default_rng(202)
    worst_prod = worst_jump = 0.0
    checked = 0
    while checked < 300:
        s = random_sample(rng, int(rng.integers(2, 150)))
        if s.has_ties:
            continue
        checked += 1
        t = s.time
        x = np.concatenate(([0.0], t, 0.5 * (t[1:] + t[:-1]), [t[-1] + 1]))
        sub = empirical_subdistributions(s)
        F, G = km_event(s), km_censor(s)
        hbar = 1 - sub.h(x)
        worst_prod = max(worst_prod, np.max(np.abs(hbar - (1 - F(x)) * (1 - G(x)))))
        ev = s.event == 1
        j1 = np.abs(sub.h1.jump_at(t[ev]) - (1 - G.eval_left(t[ev])) * F.jump_at(t[ev]))
        j0 = np.abs(sub.h0.jump_at(t[~ev]) - (1 - F.eval_left(t[~ev])) * G.jump_at(t[~ev]))
        worst_jump = max(worst_jump, j1.max(initial=0), j0.max(initial=0))

    hand = CensoredSample([1, 2, 3], [1, 0, 1])
    F, G = km_event(hand), km_censor(hand)
    psi = psi_n(hand, lambda v: v)
    w = w_hat(hand, None, 0.0, xi=lambda v: v - 7 / 3).w
    hand_ok = (
        math.isclose(F(1), 1 / 3, abs_tol=1e-15) and F(3) == 1.0 and G(1.5) == 0.0 and G(2) == 0.5
        and math.isclose(psi(0.0), 7 / 3, abs_tol=1e-15) and psi(2.0) == 2.0 and psi(3.5) == 0.0
        and np.allclose(w, [-4 / 3, 1 / 3, 1.0], atol=1e-15)
        and math.isclose(km_integral(hand, lambda v: v), 7 / 3, abs_tol=1e-15)
    )
    ok = worst_prod < 1e-12 and worst_jump < 1e-12 and hand_ok
    verdict(2, ok, f"product identity {worst_prod:.1e}, jump identity {worst_jump:.1e}, "
                   f"hand oracles {'match' if hand_ok else 'differ'}")


def test_criterion_03_variance_forms(verdict):
    rng = np.random.default_rng(303)
    cases = [UNIFORM, WEIBULL]
    cases.append((Weibull(float(rng.uniform(0.5, 2)), float(rng.uniform(1, 5))), Exponential(float(rng.uniform(2, 8)))))
    cases.append((Exponential(float(rng.uniform(0.5, 2))), Exponential(float(rng.uniform(2, 6)))))
    b = float(rng.uniform(0.5, 2))
    cases.append((Uniform(0, b), Uniform(0, b * float(rng.uniform(1.2, 3)))))
    gaps = []
    for truth in cases:
        rep = asymptotic_variance(MEAN, truth[0].mean(), truth)
        gaps.append(abs(rep.sigma2_influence - rep.sigma2_alt))
    verdict(3, max(gaps) < 1e-6, f"max gap between the two variance forms = {max(gaps):.2e} over {len(cases)} cases")


@pytest.fixture(scope="module")
def uniform_mean_study():
    specs = [ScenarioSpec(*UNIFORM, n, MEAN) for n in (20, 80)]
    return specs[0].label, run_coverage_study(specs, (0.05, 0.10), ("el",), REPS, SEED)


def test_criterion_04_table1(verdict, uniform_mean_study):
    label, study = uniform_mean_study
    a = study[(label, 80, 0.05, "el")].coverage
    b = study[(label, 20, 0.10, "el")].coverage
    spec = ScenarioSpec(*UNIFORM_C13, 20, MEAN)
    c = run_coverage_study([spec], (0.05,), ("scaled",), REPS, SEED).rows[0].coverage
    ok = abs(a - 0.947) <= 0.02 and abs(b - 0.881) <= 0.02 and abs(c - 0.897) <= 0.03
    verdict(4, ok, f"I1(n=80,a=.05)={a:.3f} vs 0.947+-0.02; I1(n=20,a=.10)={b:.3f} vs 0.881+-0.02; "
                   f"I2(c=1.3,n=20,a=.05)={c:.3f} vs 0.897+-0.03")


def test_criterion_05_table2(verdict, uniform_mean_study):
    label, study = uniform_mean_study
    u = study[(label, 80, 0.10, "el")].avg_width
    spec = ScenarioSpec(*WEIBULL, 80, MEAN)
    w = run_coverage_study([spec], (0.05,), ("el",), REPS, SEED).rows[0].avg_width
    ok = abs(u - 0.112) <= 0.006 and abs(w - 0.055) <= 0.004
    verdict(5, ok, f"I1 width uniform(n=80,a=.10)={u:.4f} vs 0.112+-0.006; weibull(n=80,a=.05)={w:.4f} vs 0.055+-0.004")


def test_criterion_06_table3(verdict):
    res = variance_comparison(ScenarioSpec(*UNIFORM, 80, MEAN), REPS, SEED)
    ok = abs(res.s_W2 - 0.0934) <= 0.006 and abs(res.s_V2 - 0.1100) <= 0.008 and res.fraction_w_smaller >= 0.95
    verdict(6, ok, f"s_W2={res.s_W2:.4f} vs 0.0934+-0.006; s_V2={res.s_V2:.4f} vs 0.1100+-0.008; "
                   f"s_W2 < s_V2 in {res.fraction_w_smaller:.1%} of replications")


def test_criterion_07_tables_4_5(verdict):
    cells = {}
    for table in (4, 5):
        for rec in run_table(table, REPS, SEED).records():
            cells[(table, rec["n"], rec["survival"], rec["method"])] = rec["coverage"]
    i1 = cells[(4, 20, 0.3, "I1")]
    i2 = cells[(4, 20, 0.3, "I2")]
    pairs = [(t, n, p) for (t, n, p, m) in cells if m == "I1"]
    ordered = sum(cells[(t, n, p, "I1")] >= cells[(t, n, p, "I2")] - 0.005 for t, n, p in pairs)
    ok = abs(i1 - 0.701) <= 0.03 and abs(i2 - 0.659) <= 0.03 and i1 > i2 and ordered >= 28
    verdict(7, ok, f"Table 4 (n=20, P=0.30): I1={i1:.3f} vs 0.701+-0.03, I2={i2:.3f} vs 0.659+-0.03; "
                   f"I1 >= I2 - 0.005 in {ordered}/{len(pairs)} cells (need >= 28)")


@pytest.fixture(scope="module")
def calibration_stats():
    spec = ScenarioSpec(*UNIFORM, 200, MEAN)
    return np.array([log_el_ratio(sample_scenario(spec, SEED, r), MEAN, 0.5) for r in range(REPS)])


def test_criterion_08_chi2_calibration(verdict, calibration_stats):
    m = float(np.mean(calibration_stats))
    p = float(np.mean(calibration_stats <= 2.7055))
    ok = 0.85 <= m <= 1.15 and 0.875 <= p <= 0.925
    verdict(8, ok, f"mean l(theta0)={m:.3f} in [0.85,1.15]; P(l <= 2.7055)={p:.4f} in [0.875,0.925]")


def test_calibration_upper_decile(calibration_stats):
    assert abs(np.quantile(calibration_stats, 0.9) - 2.7055) <= 0.35


def test_criterion_09_oracle_variance(verdict):
    parts, ok = [], True
    for name, truth, theta in (("uniform", UNIFORM, 0.5), ("weibull", WEIBULL, math.gamma(1.1))):
        spec = ScenarioSpec(*truth, 100000, MEAN)
        w = w_true(sample_scenario(spec, SEED), MEAN, theta, truth).w
        dev2 = (w - w.mean()) ** 2
        se = dev2.std(ddof=1) / math.sqrt(w.size)
        sigma2 = asymptotic_variance(MEAN, theta, truth).sigma2_influence
        z = (w.var(ddof=1) - sigma2) / se
        ok &= abs(z) <= 3
        parts.append(f"{name}: MC {w.var(ddof=1):.5f} vs {sigma2:.5f} ({z:+.2f} SE)")
    verdict(9, ok, "; ".join(parts))


def test_criterion_10_censoring_proportions(verdict):
    u = censoring_proportion(ScenarioSpec(*UNIFORM, 20, MEAN))
    w20 = censoring_proportion(ScenarioSpec(*WEIBULL, 20, MEAN))
    w30 = censoring_proportion(ScenarioSpec(*WEIBULL_30, 20, MEAN))
    c13 = censoring_proportion(ScenarioSpec(*UNIFORM_C13, 20, MEAN))
    ok = abs(u - 0.2) < 1e-8 and abs(w20 - 0.198) <= 0.002 and abs(w30 - 0.297) <= 0.002
    ok &= abs(c13 - 1 / 2.6) < 1e-8
    verdict(10, ok, f"uniform c=2.5: {u:.4f}; weibull/exp4.3: {w20:.4f}; weibull/exp2.7: {w30:.4f}; "
                    f"uniform c=1.3: {c13:.4f} (labelled 30% in the published table)")


def test_criterion_11_determinism(verdict, tmp_path, monkeypatch):
    same = True
    for table in (1, 3, 4):
        outs = []
        for threads in ("1", "2", "3"):
            monkeypatch.setenv("ELCI_THREADS", threads)
            path = tmp_path / f"t{table}_{threads}.tsv"
            code = main(["simulate", "--table", str(table), "--reps", "100", "--seed", "11",
                         "--out", str(path)], out=io.StringIO())
            assert code == 0
            outs.append(path.read_bytes())
        same &= all(o == outs[0] for o in outs)
    verdict(11, same, "simulate tables 1, 3, 4 with 1, 2 and 3 workers: outputs "
                      f"{'byte-identical' if same else 'differ'}")

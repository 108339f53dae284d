"""Scaled chi-square EL interval built on inverse-censoring-weighted scores.

This is the comparator: the score ``V_ni = g(Z_i, theta) delta_i / (1 - G_n(Z_i))``
has the right mean but the wrong variance, so ``-2 log R`` is rescaled by an
estimate ``r`` of ``var(V) / sigma^2`` in which ``sigma^2`` comes from a
jackknife of the Kaplan-Meier integral.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .el import IntervalResult, _finish, _initial_step, chi2_quantile, el_statistic, invert_profile
from .errors import DegenerateSample, DivisionByZero, ValidationError, ZeroVariance
from .functionals import FunctionalSpec, Kind, point_estimate
from .km import evaluate, product_limit
from .sample import CensoredSample

__all__ = ["ScoreVector", "jackknife_variance", "scaled_interval", "score_vector"]


@dataclass(frozen=True)
class ScoreVector:
    v: np.ndarray
    v_hat: np.ndarray
    theta: float
    theta_hat: float


class _ScoreProfile:
    def __init__(self, sample: CensoredSample, f: FunctionalSpec):
        pl = product_limit(sample)
        gbar = pl.gbar[sample.groups.group]
        delta = sample.event.astype(bool)
        bad = delta & (gbar <= 0)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DivisionByZero(f"1 - G_n(Z_i) = 0 at event index {i}", index=i)
        self.weight = np.where(delta, 1.0 / np.where(gbar > 0, gbar, 1.0), 0.0)
        self.sample = sample
        self.f = f
        if f.kind is Kind.LINEAR:
            self._va = evaluate(f.a, sample.time) * self.weight
            self._vb = evaluate(f.b, sample.time) * self.weight
        else:
            self._va = None

    def __call__(self, theta):
        if self._va is not None:
            return self._va - theta * self._vb
        return evaluate(self.f.xi(theta), self.sample.time) * self.weight


def score_vector(sample: CensoredSample, f: FunctionalSpec, theta: float) -> ScoreVector:
    """``V_ni`` at ``theta`` and ``V_ni`` at the point estimate."""
    prof = _ScoreProfile(sample, f)
    theta_hat = point_estimate(sample, f)
    return ScoreVector(prof(theta), prof(theta_hat), float(theta), theta_hat)


def _leave_one_out_integrals(sample: CensoredSample, xi_obs: np.ndarray) -> np.ndarray:
    """``int xi dF_n^(-i)`` for every i, largest remaining point recoded as an event.

    Observation-level product limit: with events ordered before censorings
    at tied times this equals the grouped estimator.
    """
    n = sample.n
    j = np.arange(n)
    i = j[:, None]
    delta = np.broadcast_to(sample.event.astype(float), (n, n)).copy()
    last = np.where(j == n - 1, n - 2, n - 1)
    delta[j, last] = 1.0
    delta[j, j] = 0.0
    risk = (n - j)[None, :] - (j[None, :] < i)
    risk = np.where(j[None, :] == i, 1, risk)
    surv = np.cumprod(1.0 - delta / risk, axis=1)
    left = np.concatenate((np.ones((n, 1)), surv[:, :-1]), axis=1)
    return (left - surv) @ xi_obs


def jackknife_variance(sample: CensoredSample, f: FunctionalSpec, theta: float | None = None) -> float:
    """Delete-one jackknife variance of ``int g(., theta_hat) dF_n``.

    In each leave-one-out sample the largest observation is treated as
    uncensored. Returns ``Var``; multiply by ``n`` for the asymptotic scale.
    """
    n = sample.n
    if n < 3:
        raise DegenerateSample(f"jackknife needs n >= 3, got {n}")
    if theta is None:
        theta = point_estimate(sample, f)
    xi = evaluate(f.xi(theta), sample.time)
    reps = _leave_one_out_integrals(sample, xi)
    if not np.all(np.isfinite(reps)):
        raise DegenerateSample("a leave-one-out sample has no usable events")
    dev = reps - reps.mean()
    return float((n - 1) / n * np.dot(dev, dev))


def scaled_interval(sample: CensoredSample, f: FunctionalSpec, alpha: float = 0.05) -> IntervalResult:
    """Scaled-chi-square EL interval ``{theta : 2 r sum log(1 + lam V_ni) <= c}``."""
    if not 0.0 < alpha <= 0.5:
        raise ValidationError(f"alpha must lie in (0, 0.5], got {alpha}")
    n = sample.n
    theta_hat = point_estimate(sample, f)
    prof = _ScoreProfile(sample, f)
    v_hat = prof(theta_hat)
    sigma1 = float(np.mean((v_hat - v_hat.mean()) ** 2))
    if sigma1 <= 0:
        raise ZeroVariance("score vector has zero variance at the estimate")
    jack = jackknife_variance(sample, f, theta_hat)
    if jack <= 0:
        raise ZeroVariance("jackknife variance is zero")
    r_hat = sigma1 / (n * jack)
    crit = chi2_quantile(1.0 - alpha)

    def stat(theta):
        return r_hat * el_statistic(prof(theta))[0]

    step = _initial_step(sample, f, theta_hat, v_hat)
    lower, upper, info = invert_profile(stat, theta_hat, crit, step)
    res = _finish(lower, upper, alpha, theta_hat, "scaled_el", crit, info, f)
    res.diagnostics["r_hat"] = r_hat
    res.diagnostics["sigma1_sq"] = sigma1
    res.diagnostics["n_var_jack"] = n * jack
    return res

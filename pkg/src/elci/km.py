"""Empirical sub-distributions and product-limit (Kaplan-Meier) estimators.

``F_n`` estimates the lifetime distribution and ``G_n`` the censoring
distribution; both use the common risk set ``n * Hbar_n(s-)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .sample import CensoredSample, StepFunction

__all__ = [
    "EmpiricalTriple",
    "ProductLimit",
    "TailIntegral",
    "empirical_subdistributions",
    "evaluate",
    "km_censor",
    "km_event",
    "km_integral",
    "km_integral_weighted",
    "product_limit",
    "psi_n",
]


def evaluate(func, x):
    """Apply ``func`` elementwise to the array ``x``.

    Vectorised callables are used directly; scalar-only callables fall back
    to a Python loop.
    """
    x = np.asarray(x, dtype=float)
    try:
        out = np.asarray(func(x), dtype=float)
        if out.shape == x.shape:
            return out
        if out.ndim == 0:
            return np.full(x.shape, float(out))
    except (TypeError, ValueError):
        pass
    return np.array([float(func(v)) for v in x.ravel()]).reshape(x.shape)


@dataclass(frozen=True)
class EmpiricalTriple:
    h0: StepFunction
    h1: StepFunction
    h: StepFunction


def empirical_subdistributions(sample: CensoredSample) -> EmpiricalTriple:
    g = sample.groups
    n = sample.n
    h1 = np.cumsum(g.events) / n
    h0 = np.cumsum(g.censored) / n
    h = np.cumsum(g.events + g.censored) / n
    return EmpiricalTriple(
        h0=StepFunction(g.times, h0, monotone=True),
        h1=StepFunction(g.times, h1, monotone=True),
        h=StepFunction(g.times, h, monotone=True),
    )


class ProductLimit:
    """Product-limit quantities at the distinct observed times.

    All arrays are indexed by distinct time ``k``. ``*_left`` arrays hold the
    left limits at ``times[k]``.
    """

    def __init__(self, sample: CensoredSample):
        g = sample.groups
        self.sample = sample
        self.times = g.times
        r = g.at_risk
        fbar = np.cumprod(1.0 - g.events / r)
        # tied events leave first, so censorings at a tied time see r - d1;
        # this keeps Hbar_n = Fbar_n * Gbar_n exact under ties
        r0 = r - g.events
        gbar = np.cumprod(1.0 - np.divide(g.censored, r0, out=np.zeros_like(r0), where=r0 > 0))
        self.fbar = fbar
        self.gbar = gbar
        self.fbar_left = np.concatenate(([1.0], fbar[:-1]))
        self.gbar_left = np.concatenate(([1.0], gbar[:-1]))
        self.hbar_left = r / sample.n
        self.f_jump = self.fbar_left - fbar
        self.g_jump = self.gbar_left - gbar

    @cached_property
    def event_mask(self) -> np.ndarray:
        return self.sample.groups.events > 0

    def F(self) -> StepFunction:
        return StepFunction(self.times, 1.0 - self.fbar, monotone=True)

    def G(self) -> StepFunction:
        return StepFunction(self.times, 1.0 - self.gbar, monotone=True)


def product_limit(sample: CensoredSample) -> ProductLimit:
    pl = sample.__dict__.get("_product_limit")
    if pl is None:
        pl = ProductLimit(sample)
        sample.__dict__["_product_limit"] = pl
    return pl


def km_event(sample: CensoredSample) -> StepFunction:
    """Kaplan-Meier estimator ``F_n`` of the lifetime distribution."""
    return product_limit(sample).F()


def km_censor(sample: CensoredSample) -> StepFunction:
    """Kaplan-Meier estimator ``G_n`` of the censoring distribution."""
    return product_limit(sample).G()


class TailIntegral:
    """``psi(x) = sum over jumps s >= x of mass(s)``; left-continuous in ``x``."""

    def __init__(self, knots: np.ndarray, masses: np.ndarray):
        self.knots = np.asarray(knots, dtype=float)
        self.masses = np.asarray(masses, dtype=float)
        # reverse cumulative sum keeps small tails accurate
        self._tail = np.concatenate((np.cumsum(self.masses[::-1])[::-1], [0.0]))

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        idx = np.searchsorted(self.knots, x, side="left")
        out = self._tail[idx]
        return float(out) if np.ndim(out) == 0 else out

    def eval_right(self, x):
        """Right limit, i.e. the strict tail ``sum over s > x``."""
        idx = np.searchsorted(self.knots, x, side="right")
        out = self._tail[idx]
        return float(out) if np.ndim(out) == 0 else out

    @property
    def total(self) -> float:
        return float(self._tail[0])

    def cumulative(self) -> StepFunction:
        """Right-continuous ``x -> sum over s <= x``; ``psi(x) = total - cumulative(x-)``."""
        return StepFunction(self.knots, np.cumsum(self.masses))


def psi_n(sample: CensoredSample, xi) -> TailIntegral:
    """Tail integral ``psi_n(x) = int_{s >= x} xi(s) dF_n(s)``."""
    pl = product_limit(sample)
    m = pl.event_mask
    knots = pl.times[m]
    return TailIntegral(knots, evaluate(xi, knots) * pl.f_jump[m])


def km_integral(sample: CensoredSample, xi) -> float:
    """``int xi dF_n`` as a sum over the jumps of ``F_n``."""
    pl = product_limit(sample)
    m = pl.event_mask
    return float(np.dot(evaluate(xi, pl.times[m]), pl.f_jump[m]))


def km_integral_weighted(sample: CensoredSample, xi) -> float:
    """``int xi / Gbar_n(s-) dH_n^1(s)``; equals :func:`km_integral` without ties."""
    pl = product_limit(sample)
    idx = sample.groups.group
    ev = sample.event == 1
    vals = evaluate(xi, sample.time[ev]) / pl.gbar_left[idx[ev]]
    return float(vals.sum() / sample.n)

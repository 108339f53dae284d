"""Empirical likelihood with estimated influence functions.

For a vector ``w`` of influence values the EL ratio is
``R = prod (1 + lam * w_i)^-1`` where ``lam`` solves
``mean(w / (1 + lam * w)) = 0``. The interval ``{theta : -2 log R(theta) <= c}``
is found by expanding a bracket from the point estimate and refining each
crossing of the critical level.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import InfeasibleConstraint, ValidationError
from .functionals import FunctionalSpec, Kind, point_estimate
from .influence import influence_operator
from .km import evaluate, km_integral
from .sample import CensoredSample

log = logging.getLogger(__name__)

__all__ = [
    "ELDiagnostics",
    "IntervalResult",
    "chi2_quantile",
    "confidence_interval",
    "el_statistic",
    "invert_profile",
    "log_el_ratio",
    "solve_lambda",
]


@dataclass(frozen=True)
class ELDiagnostics:
    lam: float
    bracket: tuple
    iterations: int
    score_residual: float

    def weights(self, w) -> np.ndarray:
        """Multinomial weights ``p_i = 1 / (n (1 + lam w_i))``."""
        w = np.asarray(w, dtype=float)
        return 1.0 / (w.size * (1.0 + self.lam * w))


def solve_lambda(w, tol: float = 1e-12, max_iter: int = 100) -> ELDiagnostics:
    """Lagrange multiplier of the EL problem for influence values ``w``.

    ``h(lam) = mean(w / (1 + lam w))`` is strictly decreasing on the bracket
    ``(-1/max w, -1/min w)``; Newton steps are taken when they stay inside
    the current enclosure and bisection otherwise. Iteration stops once
    ``|h| * max(1, |lam|) <= tol`` or the enclosure reaches rounding level.

    Raises
    ------
    InfeasibleConstraint
        If ``w`` does not contain both signs (and is not identically zero).
    """
    w = np.asarray(w, dtype=float)
    wmax = float(w.max())
    wmin = float(w.min())
    if wmax == 0.0 and wmin == 0.0:
        return ELDiagnostics(0.0, (-math.inf, math.inf), 0, 0.0)
    if not (wmin < 0.0 < wmax):
        raise InfeasibleConstraint("influence values do not straddle zero")
    bracket = (-1.0 / wmax, -1.0 / wmin)
    lo, hi = bracket
    lam = 0.0
    h = float(w.mean())
    it = 0
    while it < max_iter:
        # |sum p_i - 1| = |lam * h|, so scale the test by lam as well
        if abs(h) * max(1.0, abs(lam)) <= tol:
            break
        if h > 0:
            lo = lam
        else:
            hi = lam
        it += 1
        q = w / (1.0 + lam * w)
        step = h / float(np.dot(q, q) / w.size)
        new = lam + step
        if not lo < new < hi:
            new = 0.5 * (lo + hi)
        if new == lam or hi - lo <= 4.0 * np.spacing(max(abs(lo), abs(hi))):
            break
        lam = new
        h = float(np.mean(w / (1.0 + lam * w)))
    return ELDiagnostics(lam, bracket, it, abs(h))


def el_statistic(w) -> tuple:
    """``(-2 log R, diagnostics)``; ``(inf, None)`` when infeasible."""
    try:
        diag = solve_lambda(w)
    except InfeasibleConstraint:
        return math.inf, None
    stat = 2.0 * float(np.sum(np.log1p(diag.lam * np.asarray(w, dtype=float))))
    return max(stat, 0.0), diag


def chi2_quantile(p: float) -> float:
    """Quantile of the chi-square distribution with one degree of freedom."""
    if not 0.0 < p < 1.0:
        raise ValidationError(f"probability must lie in (0, 1), got {p}")
    z = ndtri(0.5 * (1.0 + p))
    return float(z * z)


class _InfluenceProfile:
    """``theta -> W_n(theta)`` with the linear-in-theta shortcut."""

    def __init__(self, sample: CensoredSample, f: FunctionalSpec):
        self.sample = sample
        self.f = f
        self.op = influence_operator(sample)
        t = self.op.times
        if f.kind is Kind.LINEAR:
            self._wa = self.op.apply(evaluate(f.a, t))
            self._wb = self.op.apply(evaluate(f.b, t))
        else:
            self._wa = self._wb = None

    def __call__(self, theta: float) -> np.ndarray:
        if self._wa is not None:
            return self._wa - theta * self._wb
        return self.op.apply(evaluate(self.f.xi(theta), self.op.times))


def log_el_ratio(sample: CensoredSample, f: FunctionalSpec, theta: float) -> float:
    """``l(theta) = -2 log R(theta)``; ``inf`` outside the feasible hull."""
    return el_statistic(_InfluenceProfile(sample, f)(theta))[0]


@dataclass
class IntervalResult:
    lower: float
    upper: float
    alpha: float
    theta_hat: float
    method: str
    critical: float
    diagnostics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    experimental: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, theta: float) -> bool:
        return self.lower <= theta <= self.upper

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "lower": self.lower,
            "upper": self.upper,
            "theta_hat": self.theta_hat,
            "alpha": self.alpha,
            "critical": self.critical,
            "experimental": self.experimental,
            "warnings": list(self.warnings),
            "diagnostics": self.diagnostics,
        }


def _initial_step(sample, f, theta_hat, w_hat):
    """Rough standard error of ``theta_hat`` used to size the first bracket."""
    n = sample.n
    spread = math.sqrt(float(np.mean(w_hat**2)) / n) if w_hat is not None else 0.0
    if f.kind is Kind.LINEAR:
        slope = km_integral(sample, f.b)
    elif f.kind is Kind.SMOOTH:
        h = 1e-6 * (1.0 + abs(theta_hat))
        slope = (km_integral(sample, f.xi(theta_hat - h)) - km_integral(sample, f.xi(theta_hat + h))) / (2 * h)
    else:
        slope = 0.0
    if slope and spread > 0 and math.isfinite(spread / abs(slope)):
        return spread / abs(slope)
    scale = float(np.std(sample.time))
    return (scale if scale > 0 else 1.0 + abs(theta_hat)) / math.sqrt(n)


def invert_profile(stat, theta_hat: float, critical: float, step: float,
                   xtol: float | None = None, max_doublings: int = 200) -> tuple:
    """Two crossings of ``stat(theta) = critical`` around ``theta_hat``.

    ``stat`` may return ``inf`` (infeasible). Returns ``(lower, upper, info)``
    where ``info`` maps ``"lower"``/``"upper"`` to per-endpoint diagnostics.
    """
    if xtol is None:
        xtol = 1e-8 * (1.0 + abs(theta_hat))
    l0 = stat(theta_hat)
    info = {}
    ends = []
    if l0 > critical:
        # quantile-type profiles need not vanish at the estimate
        for name in ("lower", "upper"):
            info[name] = {"evaluations": 1, "nonmonotone": False, "truncated": True,
                          "unbounded": False, "statistic": l0}
        return theta_hat, theta_hat, info
    for name, sign in (("lower", -1.0), ("upper", 1.0)):
        end, d = _one_side(stat, theta_hat, l0, sign, critical, step, xtol, max_doublings)
        ends.append(end)
        info[name] = d
    return ends[0], ends[1], info


def _one_side(stat, theta_hat, l0, sign, critical, step, xtol, max_doublings):
    d = {"evaluations": 0, "nonmonotone": False, "truncated": False, "unbounded": False}

    def ev(t):
        d["evaluations"] += 1
        return stat(t)

    inner, l_inner = theta_hat, l0
    dist = step
    outer = l_outer = None
    prev = l0
    k = 0
    while k < max_doublings:
        t = theta_hat + sign * dist
        lt = ev(t)
        if lt < prev - 1e-9 * (1.0 + abs(prev)):
            d["nonmonotone"] = True
        prev = lt
        if lt > critical:
            # one extra probe to catch a profile that dips back below the level
            t2 = theta_hat + sign * 2.0 * dist
            l2 = ev(t2)
            if l2 <= critical:
                d["nonmonotone"] = True
                inner, l_inner = t2, l2
                prev = l2
                dist *= 4.0
                k += 2
                continue
            outer, l_outer = t, lt
            break
        inner, l_inner = t, lt
        dist *= 2.0
        k += 1
    if outer is None:
        d["unbounded"] = True
        return sign * math.inf, d

    # refine the crossing: Illinois regula falsi, bisection next to infinite values
    a, fa, la = inner, l_inner - critical, l_inner
    b, fb = outer, l_outer - critical
    side = 0
    while abs(b - a) > xtol and d["evaluations"] < 400:
        if math.isfinite(fb):
            m = b - fb * (b - a) / (fb - fa)
            if not min(a, b) < m < max(a, b):
                m = 0.5 * (a + b)
        else:
            m = 0.5 * (a + b)
        lm = ev(m)
        fm = lm - critical
        if fm <= 0:
            a, fa, la = m, fm, lm
            if side == -1:
                fb *= 0.5
            side = -1
        else:
            b, fb = m, fm
            if side == 1:
                fa *= 0.5
            side = 1
    d["statistic"] = la
    d["truncated"] = not math.isfinite(fb)
    return a, d


def confidence_interval(sample: CensoredSample, f: FunctionalSpec, alpha: float = 0.05) -> IntervalResult:
    """EL interval calibrated by the chi-square(1) quantile."""
    if not 0.0 < alpha <= 0.5:
        raise ValidationError(f"alpha must lie in (0, 0.5], got {alpha}")
    theta_hat = point_estimate(sample, f)
    profile = _InfluenceProfile(sample, f)
    crit = chi2_quantile(1.0 - alpha)

    def stat(theta):
        return el_statistic(profile(theta))[0]

    step = _initial_step(sample, f, theta_hat, profile(theta_hat))
    lower, upper, info = invert_profile(stat, theta_hat, crit, step)
    return _finish(lower, upper, alpha, theta_hat, "el_chi2", crit, info, f)


def _finish(lower, upper, alpha, theta_hat, method, crit, info, f):
    warns = []
    for name, d in info.items():
        if d.get("nonmonotone"):
            warns.append(f"NonMonotoneProfile:{name}")
            log.debug("%s: profile not monotone on %s side", method, name)
        if d.get("truncated"):
            warns.append(f"FeasibilityTruncation:{name}")
        if d.get("unbounded"):
            warns.append(f"Unbounded:{name}")
    return IntervalResult(lower, upper, alpha, theta_hat, method, crit,
                          diagnostics=info, warnings=warns, experimental=f.experimental)

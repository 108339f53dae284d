"""Functionals of the lifetime distribution defined by estimating equations.

A functional ``theta`` is the root of ``E g(Y, theta) = 0``. Every built-in
except the quantile is linear in ``theta``: ``g(x, theta) = a(x) - theta * b(x)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .errors import NoSignChange, ValidationError, ZeroDenominator
from .km import km_integral, product_limit
from .sample import CensoredSample

__all__ = [
    "FunctionalSpec",
    "Kind",
    "builtin",
    "parse_functional",
    "point_estimate",
    "score_mean",
]


class Kind(str, enum.Enum):
    LINEAR = "linear_in_theta"
    SMOOTH = "smooth_monotone"
    QUANTILE = "indicator_quantile"


@dataclass(frozen=True)
class FunctionalSpec:
    """A functional defined through a score ``g(x, theta)``.

    Attributes
    ----------
    name : str
        Canonical name, e.g. ``"mean_residual_life"``.
    g : callable
        Vectorised score ``g(x, theta)``.
    kind : Kind
        Shape of the score in ``theta``.
    theta_domain : (float, float)
        Interval searched for roots.
    params : mapping
        Fixed constants such as ``y``, ``t0``, ``p`` or ``k``.
    a, b : callable or None
        For linear kinds, ``g(x, theta) = a(x) - theta * b(x)``.
    breakpoints : tuple of float
        Points where ``g(., theta)`` is discontinuous in ``x`` for every theta.
    """

    name: str
    g: Callable
    kind: Kind
    theta_domain: tuple = (-math.inf, math.inf)
    params: Mapping[str, float] = field(default_factory=dict)
    a: Callable | None = None
    b: Callable | None = None
    breakpoints: tuple = ()
    experimental: bool = False
    is_builtin: bool = False

    def __reduce__(self):
        # lambdas do not pickle; built-ins are rebuilt from name and params
        if self.is_builtin:
            return (_rebuild, (self.name, dict(self.params)))
        return super().__reduce__()

    def xi(self, theta: float) -> Callable:
        """The score at fixed ``theta`` as a function of ``x``."""
        g = self.g
        return lambda x: g(x, theta)

    def discontinuities(self, theta: float) -> tuple:
        if self.kind is Kind.QUANTILE:
            return self.breakpoints + (float(theta),)
        return self.breakpoints

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        args = ",".join(f"{k}={_fmt(v)}" for k, v in self.params.items())
        return f"{self.name}:{args}"


def _rebuild(name, params):
    return builtin(name, **params)


def _fmt(v):
    return repr(int(v)) if float(v).is_integer() else repr(float(v))


def _linear(name, a, b, domain, params=None, breakpoints=()):
    return FunctionalSpec(
        name=name,
        g=lambda x, t: a(x) - t * b(x),
        kind=Kind.LINEAR,
        theta_domain=domain,
        params=dict(params or {}),
        a=a,
        b=b,
        breakpoints=tuple(breakpoints),
    )


def _ones(x):
    return np.ones_like(np.asarray(x, dtype=float))


_ALIASES = {
    "survival": "survival",
    "mean": "mean",
    "moment": "moment",
    "mrl": "mean_residual_life",
    "mean_residual_life": "mean_residual_life",
    "lb-survival": "length_biased_survival",
    "length_biased_survival": "length_biased_survival",
    "lb-mean": "length_biased_mean",
    "length_biased_mean": "length_biased_mean",
    "lb-residual-mean": "length_biased_residual_mean",
    "length_biased_residual_mean": "length_biased_residual_mean",
    "quantile": "quantile",
}

_REQUIRED = {
    "survival": ("y",),
    "mean": (),
    "moment": ("k",),
    "mean_residual_life": ("t0",),
    "length_biased_survival": ("y",),
    "length_biased_mean": (),
    "length_biased_residual_mean": (),
    "quantile": ("p",),
}


def builtin(name: str, **params: float) -> FunctionalSpec:
    """Construct one of the built-in functionals.

    ``survival(y)``, ``moment(k)``, ``mean``, ``mean_residual_life(t0)``,
    ``length_biased_survival(y)``, ``length_biased_mean``,
    ``length_biased_residual_mean`` and ``quantile(p)``. CLI aliases such as
    ``mrl`` and ``lb-mean`` are accepted too.
    """
    return replace(_make_builtin(name, params), is_builtin=True)


def _make_builtin(name, params):
    canon = _ALIASES.get(name)
    if canon is None:
        raise ValidationError(f"unknown functional {name!r}")
    need = _REQUIRED[canon]
    missing = [k for k in need if k not in params]
    extra = [k for k in params if k not in need]
    if missing or extra:
        raise ValidationError(
            f"functional {canon!r} takes parameters {list(need)}, got {sorted(params)}"
        )
    params = {k: float(v) for k, v in params.items()}
    for k, v in params.items():
        if not math.isfinite(v):
            raise ValidationError(f"parameter {k} must be finite")

    if canon == "survival":
        y = params["y"]
        return _linear(canon, lambda x: (np.asarray(x) > y).astype(float), _ones,
                       (0.0, 1.0), params, (y,))
    if canon == "mean":
        return _linear(canon, lambda x: np.asarray(x, dtype=float), _ones, (-math.inf, math.inf))
    if canon == "moment":
        k = params["k"]
        if k < 1:
            raise ValidationError(f"moment order k must be >= 1, got {k}")
        if k == 1:
            return _linear(canon, lambda x: np.asarray(x, dtype=float), _ones,
                           (-math.inf, math.inf), params)
        return _linear(canon, lambda x: np.asarray(x, dtype=float) ** k, _ones,
                       (0.0, math.inf), params)
    if canon == "mean_residual_life":
        t0 = params["t0"]
        if t0 < 0:
            raise ValidationError(f"t0 must be >= 0, got {t0}")

        def a(x):
            x = np.asarray(x, dtype=float)
            return np.where(x >= t0, x - t0, 0.0)

        def b(x):
            return (np.asarray(x, dtype=float) >= t0).astype(float)

        return _linear(canon, a, b, (0.0, math.inf), params, (t0,))
    if canon == "length_biased_survival":
        y = params["y"]
        return _linear(canon, lambda x: np.where(np.asarray(x) > y, np.asarray(x, dtype=float), 0.0),
                       lambda x: np.asarray(x, dtype=float), (0.0, 1.0), params, (y,))
    if canon == "length_biased_mean":
        return _linear(canon, lambda x: np.asarray(x, dtype=float) ** 2,
                       lambda x: np.asarray(x, dtype=float), (0.0, math.inf))
    if canon == "length_biased_residual_mean":
        return _linear(canon, lambda x: np.asarray(x, dtype=float) ** 2,
                       lambda x: 2.0 * np.asarray(x, dtype=float), (0.0, math.inf))
    # quantile
    p = params["p"]
    if not 0.0 < p < 1.0:
        raise ValidationError(f"quantile level p must lie in (0, 1), got {p}")
    return FunctionalSpec(
        name=canon,
        g=lambda x, t: (np.asarray(x) <= t).astype(float) - p,
        kind=Kind.QUANTILE,
        theta_domain=(0.0, math.inf),
        params=params,
        experimental=True,
    )


def parse_functional(descriptor: str) -> FunctionalSpec:
    """Parse a CLI descriptor such as ``"mrl:t0=0.9"`` or ``"mean"``."""
    name, _, rest = descriptor.strip().partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValidationError(f"malformed parameter {item!r} in {descriptor!r}")
            try:
                params[key.strip()] = float(val)
            except ValueError:
                raise ValidationError(f"parameter {key.strip()} is not a number: {val!r}") from None
    return builtin(name.strip(), **params)


def score_mean(sample: CensoredSample, f: FunctionalSpec, theta: float) -> float:
    """``int g(s, theta) dF_n(s)``."""
    return km_integral(sample, f.xi(theta))


def point_estimate(sample: CensoredSample, f: FunctionalSpec) -> float:
    """Solve the plug-in estimating equation ``int g(s, theta) dF_n(s) = 0``."""
    if f.kind is Kind.LINEAR:
        num = km_integral(sample, f.a)
        den = km_integral(sample, f.b)
        if den == 0:
            raise ZeroDenominator(f"{f.label}: int b dF_n = 0, estimating equation is degenerate")
        return num / den
    if f.kind is Kind.QUANTILE:
        return _km_quantile(sample, f.params["p"], f.label)
    return _solve_monotone(lambda t: score_mean(sample, f, t), f.theta_domain,
                           tol=1e-10 / sample.n, label=f.label)


def _km_quantile(sample, p, label):
    pl = product_limit(sample)
    F = 1.0 - pl.fbar
    hit = np.flatnonzero(F >= p - 1e-12)
    if hit.size == 0:
        raise NoSignChange(f"{label}: F_n never reaches {p}")
    return float(pl.times[hit[0]])


def _solve_monotone(func, domain, tol, label, max_iter=200):
    """Root of a monotone scalar function by a bracketed secant (Illinois) iteration."""
    lo, hi = domain
    lo = -1.0 if not math.isfinite(lo) else lo
    hi = 1.0 if not math.isfinite(hi) else hi
    f_lo, f_hi = func(lo), func(hi)
    # expand infinite sides until the sign changes
    for _ in range(200):
        if f_lo == 0:
            return lo
        if f_hi == 0:
            return hi
        if np.sign(f_lo) != np.sign(f_hi):
            break
        grow_lo = not math.isfinite(domain[0])
        grow_hi = not math.isfinite(domain[1])
        if not (grow_lo or grow_hi):
            raise NoSignChange(f"{label}: estimating equation does not change sign on {domain}")
        width = hi - lo
        if grow_lo and (not grow_hi or abs(f_lo) < abs(f_hi)):
            lo -= width
            f_lo = func(lo)
        else:
            hi += width
            f_hi = func(hi)
    else:
        raise NoSignChange(f"{label}: no sign change found")

    side = 0
    for _ in range(max_iter):
        # regula falsi with the Illinois down-weighting of a stale endpoint
        t = hi - f_hi * (hi - lo) / (f_hi - f_lo)
        if not lo < t < hi:
            t = 0.5 * (lo + hi)
        ft = func(t)
        if abs(ft) <= tol or hi - lo <= 4 * np.spacing(max(abs(lo), abs(hi))):
            return t
        if np.sign(ft) == np.sign(f_lo):
            lo, f_lo = t, ft
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            hi, f_hi = t, ft
            if side == 1:
                f_lo *= 0.5
            side = 1
    raise NoSignChange(f"{label}: root not reached in {max_iter} iterations")

"""Influence functions of Kaplan-Meier integrals.

``w_hat`` computes the plug-in influence values ``W_ni`` from a sample. They
average exactly to ``int xi dF_n`` because the last two terms telescope, which
the test-suite uses as a machine-precision check.

``TruthIntegrals``, ``w_true`` and ``asymptotic_variance`` evaluate the
population influence function and its variance by quadrature when the
lifetime and censoring distributions are known; they serve as oracles.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate

from .distributions import DistributionSpec
from .errors import DivergentIntegral, DivisionByZero, QuadratureFailure
from .functionals import FunctionalSpec, Kind
from .km import evaluate, product_limit
from .sample import CensoredSample

__all__ = [
    "InfluenceOperator",
    "InfluenceVector",
    "TruthIntegrals",
    "VarianceReport",
    "asymptotic_variance",
    "influence_operator",
    "w_hat",
    "w_true",
]


@dataclass(frozen=True)
class InfluenceVector:
    w: np.ndarray
    theta: float

    @property
    def n(self) -> int:
        return self.w.size

    def mean(self) -> float:
        return float(self.w.mean())


class InfluenceOperator:
    """The linear map ``xi -> (W_n1, ..., W_nn)`` for a fixed sample.

    Everything that depends only on the sample is precomputed, so applying
    the map costs O(n). ``xi`` is supplied through its values at the
    distinct observed times.
    """

    def __init__(self, sample: CensoredSample):
        pl = product_limit(sample)
        g = sample.groups
        self.sample = sample
        self.times = g.times
        self._group = g.group
        self._delta = sample.event.astype(bool)
        self._f_jump = np.where(g.events > 0, pl.f_jump, 0.0)
        gbar_left = pl.gbar_left[g.group]
        hbar_left = pl.hbar_left
        bad = self._delta & (gbar_left <= 0)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DivisionByZero(f"Gbar_n(Z_i-) = 0 at event index {i}", index=i)
        self._inv_gbar_left = np.where(self._delta, 1.0 / np.where(gbar_left > 0, gbar_left, 1.0), 0.0)
        self._inv_hbar_left_obs = np.where(self._delta, 0.0, 1.0 / hbar_left[g.group])
        # weight of psi_n(t_k) in the compensator sum over censored j with Z_j = t_k
        self._comp_weight = g.censored / (sample.n * hbar_left**2)

    def psi_at_times(self, xi_times: np.ndarray) -> np.ndarray:
        """``psi_n(t_k)`` with the weak inequality ``s >= t_k``."""
        mass = xi_times * self._f_jump
        return np.cumsum(mass[::-1])[::-1]

    def apply(self, xi_times: np.ndarray) -> np.ndarray:
        xi_times = np.asarray(xi_times, dtype=float)
        psi = self.psi_at_times(xi_times)
        grp = self._group
        term1 = xi_times[grp] * self._inv_gbar_left
        term2 = psi[grp] * self._inv_hbar_left_obs
        term3 = np.cumsum(psi * self._comp_weight)[grp]
        return term1 + term2 - term3

    def apply_function(self, xi) -> np.ndarray:
        return self.apply(evaluate(xi, self.times))

    def km_integral(self, xi_times: np.ndarray) -> float:
        return float(np.dot(xi_times, self._f_jump))


def influence_operator(sample: CensoredSample) -> InfluenceOperator:
    op = sample.__dict__.get("_influence_operator")
    if op is None:
        op = InfluenceOperator(sample)
        sample.__dict__["_influence_operator"] = op
    return op


def w_hat(sample: CensoredSample, f: FunctionalSpec | None, theta: float, xi=None) -> InfluenceVector:
    """Estimated influence values ``W_ni`` at ``theta``.

    Pass either a functional (``xi = g(., theta)``) or an explicit ``xi``.
    """
    op = influence_operator(sample)
    if xi is None:
        xi = f.xi(theta)
    return InfluenceVector(op.apply_function(xi), float(theta))


# ---------------------------------------------------------------------------
# population quantities by quadrature

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _quad(func, a, b, epsabs=1e-13, epsrel=1e-12, limit=200):
    if not b > a:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(func, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(f"quadrature on ({a}, {b}) failed: {exc}") from None
    if not math.isfinite(val) or err > 1e-10 * max(1.0, abs(val)):
        raise QuadratureFailure(f"quadrature on ({a}, {b}) error estimate {err:.3g} too large")
    return val


@dataclass(frozen=True)
class VarianceReport:
    """Asymptotic variances of the influence function and of the plain score.

    ``sigma2_influence`` uses the squared-deviation form (always >= 0);
    ``sigma2_alt`` is the equivalent moment form, kept as a cross-check.
    """

    sigma2_influence: float
    sigma2_alt: float
    sigma2_score: float
    mu: float

    @property
    def ratio(self) -> float:
        return self.sigma2_score / self.sigma2_influence


class TruthIntegrals:
    """Population ``mu``, ``psi`` and the compensator integral for known ``F, G``.

    The support is cut into panels at all discontinuities and at a quantile
    grid of the lifetime distribution. Panel integrals come from adaptive
    Gauss-Kronrod quadrature; a point inside a panel adds a 20-node
    Gauss-Legendre piece, which is exact to rounding on these smooth pieces.
    """

    def __init__(self, xi, lifetime: DistributionSpec, censoring: DistributionSpec,
                 breakpoints=(), n_uniform: int = 128, n_quantile: int = 64):
        self.xi = xi
        self.F = lifetime
        self.G = censoring
        # beyond this point the lifetime tail cannot move any integral, and
        # products of survival functions stay clear of underflow
        top = lifetime.tail_cutoff(1e-100)
        self.top = top
        self.b_H = min(lifetime.upper, censoring.upper)
        if censoring.upper < lifetime.upper and float(lifetime.sf(censoring.upper)) > 0:
            raise DivergentIntegral(
                "censoring support ends before the lifetime support; "
                "int xi^2 / Gbar dF is infinite"
            )
        lo = lifetime.lower
        nodes = [np.linspace(lo, top, n_uniform + 1),
                 np.atleast_1d(lifetime.ppf(np.linspace(0.0, 1.0, n_quantile + 1)[1:-1]))]
        if not math.isfinite(lifetime.upper):
            nodes.append(np.atleast_1d(lifetime.isf(2.0 ** -np.arange(1, 831, 4, dtype=float))))
        extra = [p for p in (*breakpoints, *lifetime.breakpoints, *censoring.breakpoints)
                 if lo < p < top]
        nodes.append(np.asarray(extra, dtype=float))
        x = np.unique(np.concatenate(nodes))
        x = x[(x >= lo) & (x <= top)]
        self.nodes = x
        dens = self._xi_dens
        panels = np.array([_quad(dens, x[k], x[k + 1]) for k in range(x.size - 1)])
        # psi at the nodes, accumulated from the top
        self._psi_nodes = np.concatenate((np.cumsum(panels[::-1])[::-1], [0.0]))
        self.mu = float(self._psi_nodes[0])
        self._k_nodes = None

    def _xi_dens(self, x):
        return evaluate(self.xi, x) * self.F.pdf(x)

    def _panel(self, s):
        s = np.asarray(s, dtype=float)
        return np.clip(np.searchsorted(self.nodes, s, side="right") - 1, 0, self.nodes.size - 2)

    def psi(self, s):
        """``psi(s) = int_{x >= s} xi dF``."""
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        out = np.zeros_like(s)
        inside = s < self.top
        below = s <= self.nodes[0]
        out[below] = self.mu
        mid = inside & ~below
        if mid.any():
            sm = s[mid]
            k = self._panel(sm)
            right = self.nodes[k + 1]
            half = 0.5 * (right - sm)
            pts = (sm + half)[:, None] + half[:, None] * _GL_X[None, :]
            rem = (self._xi_dens(pts) * _GL_W[None, :]).sum(axis=1) * half
            out[mid] = self._psi_nodes[k + 1] + rem
        return float(out[0]) if scalar else out

    def _comp_density(self, s):
        # psi(s) / Hbar(s)^2 * dH0(s)/ds with dH0 = Fbar dG
        s = np.asarray(s, dtype=float)
        fbar = self.F.sf(s)
        gbar = self.G.sf(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = (self.psi(s) / fbar) * (self.G.pdf(s) / gbar) / gbar
        return np.where(fbar > 0, val, 0.0)

    @cached_property
    def _comp_table(self):
        x = self.nodes
        top = min(self.b_H, self.top)
        vals = []
        for k in range(x.size - 1):
            a, b = x[k], min(x[k + 1], top)
            vals.append(_quad(self._comp_density, a, b) if b > a else 0.0)
        return np.concatenate(([0.0], np.cumsum(vals)))

    def compensator(self, z):
        """``int_0^z psi(s) / Hbar(s)^2 dH0(s)``."""
        z = np.asarray(z, dtype=float)
        scalar = z.ndim == 0
        z = np.atleast_1d(np.minimum(z, min(self.b_H, self.top)))
        table = self._comp_table
        k = self._panel(z)
        left = self.nodes[k]
        half = 0.5 * (z - left)
        pts = (left + half)[:, None] + half[:, None] * _GL_X[None, :]
        rem = (self._comp_density(pts) * _GL_W[None, :]).sum(axis=1) * half
        out = table[k] + rem
        return float(out[0]) if scalar else out

    def influence(self, z, delta) -> np.ndarray:
        """Population influence values ``W_i`` (mean-centred form)."""
        z = np.asarray(z, dtype=float)
        d = np.asarray(delta).astype(bool)
        gbar = self.G.sf(z)
        hbar = self.F.sf(z) * gbar
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(d, evaluate(self.xi, z) / gbar, 0.0)
            t2 = np.where(d, 0.0, self.psi(z) / hbar)
        return t1 - self.mu + t2 - self.compensator(z)

    def _integrate(self, func, upper):
        x = self.nodes
        total = 0.0
        for k in range(x.size - 1):
            a, b = x[k], min(x[k + 1], upper)
            if b > a:
                total += _quad(func, a, b)
        return total

    def variance(self) -> VarianceReport:
        F, G, xi = self.F, self.G, self.xi
        upper = min(self.b_H, self.top)

        def score2(s):
            return float(evaluate(xi, s) ** 2 * F.pdf(s) / G.sf(s))

        def moment_tail(s):
            fbar = F.sf(s)
            if fbar <= 0:
                return 0.0
            p = self.psi(s)
            gbar = G.sf(s)
            return float((p / fbar) * p * (G.pdf(s) / gbar) / gbar)

        def deviation(s):
            fbar = F.sf(s)
            if fbar <= 0:
                return 0.0
            r = evaluate(xi, s) - self.psi(s) / fbar
            return float(r * r * F.pdf(s) / G.sf(s))

        a = self._integrate(score2, upper)
        b = self._integrate(moment_tail, upper)
        c = self._integrate(deviation, upper)
        alt = a - self.mu**2 - b
        if abs(alt - c) > 1e-6:
            raise QuadratureFailure(
                f"variance forms disagree: moment form {alt!r} vs deviation form {c!r}"
            )
        return VarianceReport(sigma2_influence=c, sigma2_alt=alt,
                              sigma2_score=a - self.mu**2, mu=self.mu)


def _truth(f: FunctionalSpec, theta, truth):
    lifetime, censoring = truth
    bps = f.discontinuities(theta) if f is not None else ()
    return TruthIntegrals(f.xi(theta), lifetime, censoring, breakpoints=bps)


def w_true(sample: CensoredSample, f: FunctionalSpec, theta: float, truth) -> InfluenceVector:
    """Population influence values at the sample points; ``truth = (F, G)``."""
    t = _truth(f, theta, truth)
    return InfluenceVector(t.influence(sample.time, sample.event), float(theta))


def asymptotic_variance(f: FunctionalSpec, theta: float, truth) -> VarianceReport:
    """Variance of the influence function and of the inverse-censoring-weighted score."""
    if f.kind is Kind.QUANTILE:
        raise QuadratureFailure("asymptotic variance is not defined for the quantile score")
    return _truth(f, theta, truth).variance()

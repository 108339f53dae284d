"""Monte Carlo engine: scenarios, reproducible sampling and coverage studies.

Every replication draws its uniforms from a Philox counter-based generator
keyed by ``(seed, scenario stream, replication)``. Unit ``i`` of a sample
always reads the same counter block, so samples of different sizes share
their leading units and the result of a study never depends on how the
replications are scheduled across workers.
"""

from __future__ import annotations

import json
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .distributions import DistributionSpec, NoCensoring, distribution_from_dict, expectation
from .el import confidence_interval
from .errors import ElciError, ValidationError
from .functionals import FunctionalSpec, Kind, parse_functional, point_estimate
from .influence import w_hat
from .km import evaluate
from .sample import CensoredSample
from .scaled import _ScoreProfile, scaled_interval

__all__ = [
    "METHODS",
    "CoverageReport",
    "CoverageRow",
    "ScenarioSpec",
    "VarianceSummary",
    "censoring_proportion",
    "mrl_threshold",
    "replication_generator",
    "run_coverage_study",
    "sample_scenario",
    "scenario_from_dict",
    "true_theta",
    "variance_comparison",
    "worker_count",
]

METHODS = {"el": confidence_interval, "scaled": scaled_interval}


def true_theta(lifetime: DistributionSpec, f: FunctionalSpec) -> float:
    """Root of ``E g(Y, theta) = 0`` under ``lifetime``."""
    if f.kind is Kind.QUANTILE:
        return float(lifetime.ppf(f.params["p"]))
    if f.kind is Kind.LINEAR:
        num = expectation(lifetime, lambda x: evaluate(f.a, x), f.breakpoints)
        den = expectation(lifetime, lambda x: evaluate(f.b, x), f.breakpoints)
        if den == 0:
            raise ValidationError(f"{f.label}: E b(Y) = 0 under {lifetime}")
        return num / den
    lo, hi = f.theta_domain
    lo = lifetime.lower if not math.isfinite(lo) else lo
    hi = lifetime.tail_cutoff(1e-16) if not math.isfinite(hi) else hi
    return brentq(lambda t: _score_expectation(lifetime, f, t), lo, hi, xtol=1e-14)


def _score_expectation(lifetime, f, theta):
    return expectation(lifetime, lambda x: evaluate(f.xi(theta), x), f.discontinuities(theta))


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation cell: lifetime and censoring laws, sample size, functional.

    ``theta0`` is computed by quadrature when omitted, and a supplied value is
    checked against ``E g(Y, theta0) = 0`` to within ``1e-8``.
    """

    lifetime: DistributionSpec
    censoring: DistributionSpec
    n: int
    functional: FunctionalSpec
    theta0: float | None = None
    label: str = ""

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValidationError(f"sample size must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.theta0 is None:
            object.__setattr__(self, "theta0", true_theta(self.lifetime, self.functional))
        if self.functional.kind is not Kind.QUANTILE:
            resid = _score_expectation(self.lifetime, self.functional, self.theta0)
            if not abs(resid) < 1e-8:
                raise ValidationError(
                    f"theta0={self.theta0!r} does not solve E g(Y, theta) = 0 (residual {resid:.3e})"
                )
        if not self.label:
            object.__setattr__(self, "label", self.default_label())

    def default_label(self) -> str:
        return f"{_dist_label(self.lifetime)}/{_dist_label(self.censoring)} {self.functional.label}"

    @property
    def stream(self) -> int:
        """Substream id shared by all cells with the same pair of laws."""
        key = json.dumps([self.lifetime.to_dict(), self.censoring.to_dict()], sort_keys=True)
        return zlib.crc32(key.encode())

    def with_n(self, n: int) -> ScenarioSpec:
        return replace(self, n=n)

    def to_dict(self) -> dict:
        return {
            "lifetime": self.lifetime.to_dict(),
            "censoring": self.censoring.to_dict(),
            "n": self.n,
            "functional": self.functional.label,
            "theta0": self.theta0,
            "label": self.label,
        }


def _dist_label(d: DistributionSpec) -> str:
    params = ",".join(f"{v:g}" for k, v in d.to_dict().items() if k != "family")
    return f"{d.family}({params})" if params else d.family


def scenario_from_dict(d: dict) -> list:
    """Scenarios from a JSON-style mapping.

    ``n`` may be a single size or a list; ``functional`` is a descriptor such
    as ``"mean"`` or ``"mrl:t0=0.9"``.
    """
    try:
        lifetime = distribution_from_dict(d["lifetime"])
        censoring = distribution_from_dict(d.get("censoring", {"family": "none"}))
        sizes = d["n"]
        f = parse_functional(d.get("functional", "mean"))
    except KeyError as exc:
        raise ValidationError(f"scenario is missing field {exc}") from None
    if isinstance(sizes, (int, float)):
        sizes = [sizes]
    theta0 = d.get("theta0")
    label = d.get("label", "")
    return [ScenarioSpec(lifetime, censoring, n, f, theta0, label) for n in sizes]


def replication_generator(seed: int, stream: int, rep: int) -> np.random.Generator:
    """Philox generator for one replication of one scenario stream."""
    for name, v in (("seed", seed), ("stream", stream), ("rep", rep)):
        if int(v) != v or v < 0:
            raise ValidationError(f"{name} must be a non-negative integer, got {v!r}")
    key = np.random.SeedSequence([int(seed), int(stream), int(rep)]).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_scenario(spec: ScenarioSpec, seed: int, rep: int = 0) -> CensoredSample:
    """Censored sample of replication ``rep``, drawn by inverse-CDF transforms."""
    u = replication_generator(seed, spec.stream, rep).random((spec.n, 2))
    y = np.asarray(spec.lifetime.ppf(u[:, 0]), dtype=float)
    c = np.asarray(spec.censoring.ppf(u[:, 1]), dtype=float)
    event = (y <= c).astype(int)
    return CensoredSample(np.minimum(y, c), event)


def censoring_proportion(spec) -> float:
    """``P(C < Y) = int Fbar_Y dG = int G dF`` by quadrature.

    ``spec`` needs ``lifetime`` and ``censoring`` attributes.
    """
    lifetime, censoring = spec.lifetime, spec.censoring
    if isinstance(censoring, NoCensoring):
        return 0.0
    return expectation(lifetime, lambda x: censoring.cdf(x), censoring.breakpoints)


def mrl_threshold(lifetime: DistributionSpec, p: float) -> float:
    """Age ``t0`` with ``P(Y >= t0) = p``."""
    if not 0.0 < p < 1.0:
        raise ValidationError(f"p must lie in (0, 1), got {p}")
    return float(lifetime.isf(p))


def worker_count(workers: int | None = None) -> int:
    """Requested workers, capped by ``ELCI_THREADS`` and the CPU count."""
    cap = os.environ.get("ELCI_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError:
            raise ValidationError(f"ELCI_THREADS must be an integer, got {cap!r}") from None
    return max(1, min(workers or limit, limit))


# ---------------------------------------------------------------------------
# coverage studies


@dataclass(frozen=True)
class CoverageRow:
    """Aggregated results of one (scenario, n, alpha, method) cell."""

    scenario: str
    n: int
    alpha: float
    method: str
    theta0: float
    coverage: float
    avg_width: float
    reps: int
    seed: int
    failures: int
    unbounded: int = 0
    failure_kinds: tuple = ()

    @property
    def key(self) -> tuple:
        return (self.scenario, self.n, self.alpha, self.method)


@dataclass(frozen=True)
class CoverageReport:
    rows: tuple
    reps: int
    seed: int

    def __getitem__(self, key) -> CoverageRow:
        for row in self.rows:
            if row.key == tuple(key):
                return row
        raise KeyError(key)

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)


def _replicate(task):
    """Outcomes of one replication: ``[(covered, width, error name), ...]`` per (method, alpha)."""
    spec, methods, alphas, seed, rep = task
    out = []
    try:
        sample = sample_scenario(spec, seed, rep)
    except ElciError as exc:
        return [(False, math.nan, type(exc).__name__)] * (len(methods) * len(alphas))
    for m in methods:
        for a in alphas:
            try:
                res = METHODS[m](sample, spec.functional, a)
            except ElciError as exc:
                out.append((False, math.nan, type(exc).__name__))
                continue
            out.append((res.contains(spec.theta0), res.width, None))
    return out


def _run_tasks(func, tasks, workers):
    workers = worker_count(workers)
    if workers == 1 or len(tasks) < 2:
        return [func(t) for t in tasks]
    chunk = max(1, len(tasks) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        # map preserves task order, so the fold below is schedule independent
        return list(ex.map(func, tasks, chunksize=chunk))


def run_coverage_study(specs, alphas=(0.05,), methods=("el",), reps: int = 2000, seed: int = 0,
                       workers: int | None = None) -> CoverageReport:
    """Coverage and mean width of each interval method over ``reps`` replications.

    A replication whose estimator or interval inversion fails produces no
    interval, so it counts as not covering ``theta0``; such replications are
    also tallied in ``failures``. The mean width is taken over the finite
    intervals that were produced.
    """
    if reps < 100:
        raise ValidationError(f"reps must be >= 100, got {reps}")
    for m in methods:
        if m not in METHODS:
            raise ValidationError(f"unknown method {m!r}; choose from {sorted(METHODS)}")
    for a in alphas:
        if not 0.0 < a <= 0.5:
            raise ValidationError(f"alpha must lie in (0, 0.5], got {a}")
    specs = list(specs)
    cells = [(s.label, s.n) for s in specs]
    if len(set(cells)) != len(cells):
        raise ValidationError("scenario (label, n) pairs must be unique within a study")
    tasks = [(s, tuple(methods), tuple(alphas), seed, r) for s in specs for r in range(reps)]
    results = _run_tasks(_replicate, tasks, workers)

    rows = []
    for si, spec in enumerate(specs):
        block = results[si * reps:(si + 1) * reps]
        k = 0
        for m in methods:
            for a in alphas:
                cells = [r[k] for r in block]
                k += 1
                rows.append(_aggregate(spec, m, a, cells, reps, seed))
    return CoverageReport(tuple(rows), reps, seed)


def _aggregate(spec, method, alpha, cells, reps, seed):
    ok = [c for c in cells if c[2] is None]
    kinds = {}
    for c in cells:
        if c[2] is not None:
            kinds[c[2]] = kinds.get(c[2], 0) + 1
    widths = np.array([c[1] for c in ok], dtype=float)
    finite = widths[np.isfinite(widths)]
    coverage = sum(1 for c in ok if c[0]) / reps
    avg = float(math.fsum(finite) / finite.size) if finite.size else math.inf
    return CoverageRow(
        scenario=spec.label, n=spec.n, alpha=alpha, method=method, theta0=float(spec.theta0),
        coverage=coverage, avg_width=avg, reps=reps, seed=seed,
        failures=reps - len(ok), unbounded=int(widths.size - finite.size),
        failure_kinds=tuple(sorted(kinds.items())),
    )


@dataclass(frozen=True)
class VarianceSummary:
    """Averages over replications of the per-sample variances of ``W_ni`` and ``V_ni``."""

    s_W2: float
    s_V2: float
    fraction_w_smaller: float
    reps: int
    seed: int
    failures: int = 0
    per_rep: tuple = field(default=(), repr=False)


def _variances(task):
    spec, seed, rep = task
    try:
        sample = sample_scenario(spec, seed, rep)
        f = spec.functional
        theta_hat = point_estimate(sample, f)
        w = w_hat(sample, f, theta_hat).w
        v = _ScoreProfile(sample, f)(theta_hat)
    except ElciError:
        return None
    return float(np.var(w, ddof=1)), float(np.var(v, ddof=1))


def variance_comparison(spec: ScenarioSpec, reps: int = 2000, seed: int = 0,
                        workers: int | None = None) -> VarianceSummary:
    """Mean sample variances ``s_W2`` and ``s_V2`` at the point estimate."""
    if reps < 100:
        raise ValidationError(f"reps must be >= 100, got {reps}")
    results = _run_tasks(_variances, [(spec, seed, r) for r in range(reps)], workers)
    ok = [r for r in results if r is not None]
    if not ok:
        raise ValidationError("every replication failed")
    sw = math.fsum(r[0] for r in ok) / len(ok)
    sv = math.fsum(r[1] for r in ok) / len(ok)
    smaller = sum(1 for r in ok if r[0] < r[1]) / len(ok)
    return VarianceSummary(sw, sv, smaller, reps, seed, reps - len(ok), tuple(ok))

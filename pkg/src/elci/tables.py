"""Built-in coverage tables and their published reference values.

Tables 1 and 2 hold the coverage and mean width of both intervals for the
mean of a Uniform(0, 1) and a Weibull(scale 1, shape 10) lifetime; Table 3
the mean sample variances of the two influence vectors; Tables 4 and 5 the
coverage and width for the mean residual life of the Weibull lifetime at
four survival levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distributions import Exponential, Uniform, Weibull
from .errors import ValidationError
from .functionals import builtin
from .simulation import (
    CoverageReport,
    ScenarioSpec,
    censoring_proportion,
    mrl_threshold,
    run_coverage_study,
    variance_comparison,
)

__all__ = [
    "LEVELS",
    "PUBLISHED",
    "TableResult",
    "coverage_tsv",
    "format_number",
    "run_table",
]

SIZES = (20, 40, 60, 80)
NOMINALS = (0.90, 0.95)
SURVIVAL_LEVELS = (0.90, 0.70, 0.50, 0.30)
METHOD_LABELS = (("scaled", "I2"), ("el", "I1"))

LIFETIMES = {"uniform": Uniform(0.0, 1.0), "weibull": Weibull(1.0, 10.0)}
# censoring laws of the 20% and 30% rows; the uniform c = 1.3 row actually
# censors 38.5% and is labelled by c in the output
LEVELS = {
    "20%": {"uniform": Uniform(0.0, 2.5), "weibull": Exponential(4.3)},
    "30%": {"uniform": Uniform(0.0, 1.3), "weibull": Exponential(2.7)},
}

# published cells; per n in SIZES, pairs (I2, I1)
_T1 = {
    ("20%", 0.90, "uniform"): ((0.876, 0.881), (0.895, 0.897), (0.897, 0.897), (0.897, 0.898)),
    ("20%", 0.90, "weibull"): ((0.871, 0.871), (0.889, 0.890), (0.893, 0.893), (0.896, 0.896)),
    ("20%", 0.95, "uniform"): ((0.928, 0.935), (0.946, 0.949), (0.947, 0.948), (0.947, 0.947)),
    ("20%", 0.95, "weibull"): ((0.922, 0.924), (0.939, 0.941), (0.945, 0.946), (0.947, 0.948)),
    ("30%", 0.90, "uniform"): ((0.841, 0.861), (0.885, 0.890), (0.888, 0.892), (0.897, 0.900)),
    ("30%", 0.90, "weibull"): ((0.867, 0.869), (0.890, 0.891), (0.890, 0.891), (0.893, 0.894)),
    ("30%", 0.95, "uniform"): ((0.897, 0.916), (0.934, 0.941), (0.941, 0.946), (0.945, 0.947)),
    ("30%", 0.95, "weibull"): ((0.916, 0.924), (0.939, 0.943), (0.944, 0.946), (0.945, 0.947)),
}
_T2 = {
    ("20%", 0.90, "uniform"): ((0.217, 0.218), (0.157, 0.157), (0.129, 0.129), (0.112, 0.112)),
    ("20%", 0.90, "weibull"): ((0.092, 0.091), (0.066, 0.065), (0.054, 0.053), (0.046, 0.046)),
    ("20%", 0.95, "uniform"): ((0.258, 0.259), (0.187, 0.187), (0.154, 0.154), (0.133, 0.133)),
    ("20%", 0.95, "weibull"): ((0.110, 0.109), (0.079, 0.078), (0.064, 0.064), (0.056, 0.055)),
    ("30%", 0.90, "uniform"): ((0.220, 0.227), (0.162, 0.164), (0.134, 0.134), (0.116, 0.116)),
    ("30%", 0.90, "weibull"): ((0.097, 0.096), (0.069, 0.069), (0.057, 0.057), (0.049, 0.049)),
    ("30%", 0.95, "uniform"): ((0.260, 0.270), (0.192, 0.196), (0.159, 0.160), (0.138, 0.139)),
    ("30%", 0.95, "weibull"): ((0.116, 0.116), (0.083, 0.083), (0.068, 0.068), (0.059, 0.059)),
}
# per n in SIZES, pairs (s_W2, s_V2)
_T3 = {
    ("20%", "uniform"): ((0.0935, 0.1121), (0.0938, 0.1115), (0.0937, 0.1107), (0.0934, 0.1100)),
    ("20%", "weibull"): ((0.0157, 0.0163), (0.0157, 0.0162), (0.0157, 0.0161), (0.0158, 0.0162)),
    ("30%", "uniform"): ((0.1005, 0.1386), (0.1013, 0.1401), (0.1016, 0.1402), (0.1012, 0.1393)),
    ("30%", "weibull"): ((0.0175, 0.0185), (0.0176, 0.0184), (0.0176, 0.0183), (0.0176, 0.0183)),
}
# per (n, method): coverage and width at each survival level
_T45 = {
    4: {
        (20, "I2"): ((0.878, 0.851, 0.795, 0.659), (0.074, 0.062, 0.054, 0.044)),
        (20, "I1"): ((0.881, 0.863, 0.820, 0.701), (0.074, 0.062, 0.056, 0.048)),
        (40, "I2"): ((0.889, 0.878, 0.859, 0.800), (0.053, 0.046, 0.042, 0.039)),
        (40, "I1"): ((0.891, 0.884, 0.874, 0.833), (0.053, 0.046, 0.043, 0.041)),
        (60, "I2"): ((0.897, 0.892, 0.877, 0.839), (0.044, 0.037, 0.035, 0.034)),
        (60, "I1"): ((0.898, 0.897, 0.888, 0.863), (0.044, 0.038, 0.035, 0.035)),
        (80, "I2"): ((0.895, 0.888, 0.884, 0.853), (0.038, 0.033, 0.031, 0.030)),
        (80, "I1"): ((0.896, 0.892, 0.892, 0.871), (0.038, 0.033, 0.031, 0.031)),
    },
    5: {
        (20, "I2"): ((0.864, 0.833, 0.760, 0.605), (0.079, 0.065, 0.055, 0.043)),
        (20, "I1"): ((0.872, 0.851, 0.793, 0.659), (0.079, 0.065, 0.058, 0.048)),
        (40, "I2"): ((0.887, 0.872, 0.846, 0.777), (0.057, 0.048, 0.045, 0.041)),
        (40, "I1"): ((0.891, 0.882, 0.867, 0.818), (0.057, 0.049, 0.046, 0.043)),
        (60, "I2"): ((0.892, 0.888, 0.870, 0.822), (0.046, 0.040, 0.037, 0.036)),
        (60, "I1"): ((0.895, 0.895, 0.884, 0.851), (0.046, 0.040, 0.038, 0.037)),
        (80, "I2"): ((0.892, 0.888, 0.878, 0.845), (0.040, 0.035, 0.033, 0.032)),
        (80, "I1"): ((0.895, 0.895, 0.887, 0.869), (0.040, 0.035, 0.033, 0.033)),
    },
}
MRL_LEVEL = {4: "20%", 5: "30%"}
MRL_NOMINAL = 0.90


def _published():
    out = {}
    for table, src in ((1, _T1), (2, _T2)):
        for (level, nominal, dist), cells in src.items():
            for n, pair in zip(SIZES, cells):
                for (_, label), v in zip(METHOD_LABELS, pair):
                    out[(table, level, nominal, dist, n, label)] = v
    for (level, dist), cells in _T3.items():
        for n, (sw, sv) in zip(SIZES, cells):
            out[(3, level, dist, n, "s_W2")] = sw
            out[(3, level, dist, n, "s_V2")] = sv
    for table, src in _T45.items():
        for (n, label), (cov, wid) in src.items():
            for p, c, w in zip(SURVIVAL_LEVELS, cov, wid):
                out[(table, p, n, label, "coverage")] = c
                out[(table, p, n, label, "avg_width")] = w
    return out


PUBLISHED = _published()


def format_number(x: float, digits: int = 6) -> str:
    """Fixed-point text; infinities print as ``inf``/``-inf`` and NaN is refused."""
    if math.isnan(x):
        raise ValueError("NaN must not reach the output")
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{digits}f}"


@dataclass(frozen=True)
class TableResult:
    table: int
    columns: tuple
    rows: tuple
    max_deviation: float
    reps: int
    seed: int

    def tsv(self) -> str:
        lines = ["\t".join(self.columns)]
        for row in self.rows:
            lines.append("\t".join(_cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def records(self) -> list:
        return [dict(zip(self.columns, row)) for row in self.rows]

    def summary(self) -> str:
        return (f"table {self.table}: {len(self.rows)} rows, reps={self.reps}, seed={self.seed}, "
                f"max |deviation| from published cells = {format_number(self.max_deviation, 4)}")


def _cell(v):
    if isinstance(v, float):
        return format_number(v)
    return str(v)


def _mean_specs():
    specs = []
    for level, laws in LEVELS.items():
        for dist, lifetime in LIFETIMES.items():
            for n in SIZES:
                specs.append(((level, dist, n),
                              ScenarioSpec(lifetime, laws[dist], n, builtin("mean"))))
    return specs


def _mrl_specs(table):
    lifetime = LIFETIMES["weibull"]
    censoring = LEVELS[MRL_LEVEL[table]]["weibull"]
    specs = []
    for n in SIZES:
        for p in SURVIVAL_LEVELS:
            f = builtin("mean_residual_life", t0=mrl_threshold(lifetime, p))
            specs.append(((p, n), ScenarioSpec(lifetime, censoring, n, f)))
    return specs


def run_table(table: int, reps: int = 2000, seed: int = 0, workers: int | None = None) -> TableResult:
    """Reproduce one of the built-in tables."""
    if table in (1, 2):
        return _coverage_table(table, reps, seed, workers)
    if table == 3:
        return _variance_table(reps, seed, workers)
    if table in (4, 5):
        return _mrl_table(table, reps, seed, workers)
    raise ValidationError(f"table must be one of 1..5, got {table}")


def _coverage_table(table, reps, seed, workers):
    keyed = _mean_specs()
    alphas = tuple(round(1.0 - v, 10) for v in NOMINALS)
    report = run_coverage_study([s for _, s in keyed], alphas, [m for m, _ in METHOD_LABELS],
                                reps, seed, workers)
    value = "coverage" if table == 1 else "avg_width"
    columns = ("censoring_level", "scenario", "censoring", "nominal", "n", "method", value,
               "published", "reps", "seed", "failures")
    specs = {key: s for key, s in keyed}
    rows, devs = [], []
    for level in LEVELS:
        for nominal, alpha in zip(NOMINALS, alphas):
            for n in SIZES:
                for dist in LIFETIMES:
                    spec = specs[(level, dist, n)]
                    for method, label in METHOD_LABELS:
                        row = report[(spec.label, n, alpha, method)]
                        ours = getattr(row, value)
                        pub = PUBLISHED[(table, level, nominal, dist, n, label)]
                        if math.isfinite(ours):
                            devs.append(abs(ours - pub))
                        rows.append((level, spec.label, censoring_proportion(spec), nominal, n,
                                     label, ours, pub, reps, seed, row.failures))
    return TableResult(table, columns, tuple(rows), max(devs, default=math.inf), reps, seed)


def _variance_table(reps, seed, workers):
    columns = ("censoring_level", "scenario", "censoring", "n", "s_W2", "s_V2",
               "fraction_w_smaller", "published_s_W2", "published_s_V2", "reps", "seed", "failures")
    specs = dict(_mean_specs())
    rows, devs = [], []
    for level in LEVELS:
        for n in SIZES:
            for dist in LIFETIMES:
                spec = specs[(level, dist, n)]
                res = variance_comparison(spec, reps, seed, workers)
                pw = PUBLISHED[(3, level, dist, n, "s_W2")]
                pv = PUBLISHED[(3, level, dist, n, "s_V2")]
                devs += [abs(res.s_W2 - pw), abs(res.s_V2 - pv)]
                rows.append((level, spec.label, censoring_proportion(spec), n, res.s_W2, res.s_V2,
                             res.fraction_w_smaller, pw, pv, reps, seed, res.failures))
    return TableResult(3, columns, tuple(rows), max(devs), reps, seed)


def _mrl_table(table, reps, seed, workers):
    keyed = _mrl_specs(table)
    alpha = round(1.0 - MRL_NOMINAL, 10)
    report = run_coverage_study([s for _, s in keyed], (alpha,), [m for m, _ in METHOD_LABELS],
                                reps, seed, workers)
    columns = ("n", "method", "survival", "t0", "theta0", "censoring", "coverage", "avg_width",
               "published_coverage", "published_width", "reps", "seed", "failures")
    specs = dict(keyed)
    rows, devs = [], []
    for n in SIZES:
        for method, label in METHOD_LABELS:
            for p in SURVIVAL_LEVELS:
                spec = specs[(p, n)]
                row = report[(spec.label, n, alpha, method)]
                pc = PUBLISHED[(table, p, n, label, "coverage")]
                pw = PUBLISHED[(table, p, n, label, "avg_width")]
                devs.append(abs(row.coverage - pc))
                if math.isfinite(row.avg_width):
                    devs.append(abs(row.avg_width - pw))
                rows.append((n, label, p, spec.functional.params["t0"], spec.theta0,
                             censoring_proportion(spec), row.coverage, row.avg_width, pc, pw,
                             reps, seed, row.failures))
    return TableResult(table, columns, tuple(rows), max(devs), reps, seed)


def coverage_tsv(report: CoverageReport) -> str:
    """Long-format TSV of a custom coverage study."""
    columns = ("scenario", "n", "alpha", "method", "theta0", "coverage", "avg_width",
               "reps", "seed", "failures", "unbounded")
    lines = ["\t".join(columns)]
    for r in report.rows:
        vals = (r.scenario, r.n, r.alpha, r.method, r.theta0, r.coverage, r.avg_width,
                r.reps, r.seed, r.failures, r.unbounded)
        lines.append("\t".join(_cell(v) for v in vals))
    return "\n".join(lines) + "\n"

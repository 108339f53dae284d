"""Empirical likelihood confidence intervals for functionals of right-censored data."""

from .distributions import Exponential, NoCensoring, Uniform, Weibull
from .el import IntervalResult, chi2_quantile, confidence_interval, el_statistic, log_el_ratio, solve_lambda
from .errors import (
    DataError,
    DegenerateSample,
    DivergentIntegral,
    DivisionByZero,
    ElciError,
    InfeasibleConstraint,
    NoSignChange,
    NumericalError,
    QuadratureFailure,
    ValidationError,
    ZeroDenominator,
    ZeroVariance,
)
from .functionals import FunctionalSpec, Kind, builtin, parse_functional, point_estimate
from .influence import asymptotic_variance, w_hat, w_true
from .km import km_censor, km_event, km_integral, psi_n
from .sample import CensoredObservation, CensoredSample, CsvConfig, StepFunction, ingest_csv, write_csv
from .scaled import jackknife_variance, scaled_interval, score_vector
from .simulation import (
    ScenarioSpec,
    censoring_proportion,
    mrl_threshold,
    run_coverage_study,
    sample_scenario,
    variance_comparison,
)

__version__ = "0.1.0"

__all__ = [
    "CensoredObservation",
    "CensoredSample",
    "CsvConfig",
    "DataError",
    "DegenerateSample",
    "DivergentIntegral",
    "DivisionByZero",
    "ElciError",
    "Exponential",
    "FunctionalSpec",
    "InfeasibleConstraint",
    "IntervalResult",
    "Kind",
    "NoCensoring",
    "NoSignChange",
    "NumericalError",
    "QuadratureFailure",
    "ScenarioSpec",
    "StepFunction",
    "Uniform",
    "ValidationError",
    "Weibull",
    "ZeroDenominator",
    "ZeroVariance",
    "asymptotic_variance",
    "builtin",
    "censoring_proportion",
    "chi2_quantile",
    "confidence_interval",
    "el_statistic",
    "ingest_csv",
    "jackknife_variance",
    "km_censor",
    "km_event",
    "km_integral",
    "log_el_ratio",
    "mrl_threshold",
    "parse_functional",
    "point_estimate",
    "psi_n",
    "run_coverage_study",
    "sample_scenario",
    "scaled_interval",
    "score_vector",
    "solve_lambda",
    "variance_comparison",
    "w_hat",
    "w_true",
    "write_csv",
]

"""Residence-time statistics from discrete traces.

Estimates the mean residual time of a two-state residence process and the
uncertainty of that estimate, from either raw 0/1 traces or extracted
residence-step samples.  Variance estimates come from a ratio approximation
and from truncated series expansions evaluated on sample moments; exact
rational references are available for small finite-support cases.
"""

from .core import (
    DistributionSpec,
    DomainError,
    EstimateReport,
    IndexPattern,
    MomentVector,
    OccupancyTrace,
    ParseError,
    ResidenceSample,
    Term,
    VarianceExpression,
    format_fixed,
    format_rational,
    normalize_expression,
)
from .estimators import (
    build_report,
    inspection_identity_check,
    mean_residence_steps,
    mean_residual_steps,
    ratio_variance_from_moments,
    rt_autocorrelation,
    var_mean_residence,
    var_mrt_ratio,
    var_mrt_taylor,
)
from .mc import ExperimentConfig, ExperimentRow, exact_variance_small, run_experiment, sample
from .moments import central_from_raw, exact_moments, raw_from_central, sample_moments
from .taylor import (
    brute_force_truncated_variance,
    coefficient,
    enumerate_patterns,
    evaluate_expression,
    generate_expression,
    pattern_count,
    sigma_pattern,
)
from .trace import (
    ExtractionPolicy,
    FilterConfig,
    collect_sample,
    extract_residences,
    filter_transient_escapes,
    parse_traces,
    read_steps_csv,
    write_steps_csv,
)

__version__ = "0.1.0"

__all__ = [
    "DistributionSpec",
    "DomainError",
    "EstimateReport",
    "ExperimentConfig",
    "ExperimentRow",
    "ExtractionPolicy",
    "FilterConfig",
    "IndexPattern",
    "MomentVector",
    "OccupancyTrace",
    "ParseError",
    "ResidenceSample",
    "Term",
    "VarianceExpression",
    "__version__",
    "brute_force_truncated_variance",
    "build_report",
    "central_from_raw",
    "coefficient",
    "collect_sample",
    "enumerate_patterns",
    "evaluate_expression",
    "exact_moments",
    "exact_variance_small",
    "extract_residences",
    "filter_transient_escapes",
    "format_fixed",
    "format_rational",
    "generate_expression",
    "inspection_identity_check",
    "mean_residence_steps",
    "mean_residual_steps",
    "normalize_expression",
    "parse_traces",
    "pattern_count",
    "ratio_variance_from_moments",
    "raw_from_central",
    "read_steps_csv",
    "rt_autocorrelation",
    "run_experiment",
    "sample",
    "sample_moments",
    "sigma_pattern",
    "var_mean_residence",
    "var_mrt_ratio",
    "var_mrt_taylor",
    "write_steps_csv",
]

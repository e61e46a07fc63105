"""Weighted L2-norm tests for equality of high-dimensional mean vectors."""

__version__ = "0.1.0"

from .weights import WeightSpec, default_weights, identity_weights
from .sample import GroupedSample, GroupSummary, summarize
from .statistic import (
    StatisticValue,
    compute_tn,
    compute_tn_naive,
    expected_tn,
    true_variance_tn,
)
from .variance import (
    DegenerateVariance,
    VarianceEstimate,
    cross_trace_correction,
    cross_trace_raw,
    cross_trace_simplified,
    sigma_hat_sq,
    sigma_sq_plugin,
    within_trace_raw,
    within_trace_simplified,
)
from .testing import TestOutcome, hb_test, normal_upper_quantile, run_test
from .datagen import (
    CovScenario,
    InnovationLaw,
    MeanConfig,
    ScenarioKind,
    ar1_covariance,
    build_scenario,
    generate,
    null_means,
    sample_innovation,
)
from .power import (
    PowerInput,
    are_vs_hb,
    assumption_c_diagnostic,
    asymptotic_power,
    equal_cov_power,
    sparse_alternative_snr,
)
from .harness import (
    PRESET_NAMES,
    ReportRow,
    SimCell,
    SimConfig,
    SimReport,
    config_from_json,
    emit_csv,
    group_sizes,
    read_csv_report,
    run_grid,
    table_preset,
)

__all__ = [
    "__version__",
    "WeightSpec",
    "default_weights",
    "identity_weights",
    "GroupedSample",
    "GroupSummary",
    "summarize",
    "StatisticValue",
    "compute_tn",
    "compute_tn_naive",
    "expected_tn",
    "true_variance_tn",
    "DegenerateVariance",
    "VarianceEstimate",
    "within_trace_simplified",
    "within_trace_raw",
    "cross_trace_simplified",
    "cross_trace_correction",
    "cross_trace_raw",
    "sigma_hat_sq",
    "sigma_sq_plugin",
    "TestOutcome",
    "run_test",
    "hb_test",
    "normal_upper_quantile",
    "CovScenario",
    "ScenarioKind",
    "InnovationLaw",
    "MeanConfig",
    "ar1_covariance",
    "build_scenario",
    "null_means",
    "sample_innovation",
    "generate",
    "PowerInput",
    "asymptotic_power",
    "equal_cov_power",
    "are_vs_hb",
    "assumption_c_diagnostic",
    "sparse_alternative_snr",
    "SimCell",
    "SimConfig",
    "SimReport",
    "ReportRow",
    "group_sizes",
    "run_grid",
    "emit_csv",
    "read_csv_report",
    "table_preset",
    "config_from_json",
    "PRESET_NAMES",
]

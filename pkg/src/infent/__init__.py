"""Entropy estimation on countably infinite alphabets.

Ground-truth tail families with exact sampling, four plug-in entropy
estimators, closed-form finite-sample deviation bounds, and a seeded Monte
Carlo engine for rate-of-convergence experiments.  All entropies are in bits.
"""

from .bounds import (
    DeviationBound,
    LeCamBound,
    data_driven_finite_support_bound,
    lecam_two_point,
    plugin_bounds,
    plugin_confidence_halfwidth,
    tv_expected_bound,
    tv_hoeffding,
)
from .errors import (
    AbsoluteContinuityError,
    ConfigError,
    DegenerateConditioningError,
    DomainError,
    FitUnavailableError,
    InfentError,
    InvalidDistributionError,
    ReportParseError,
)
from .estimators import (
    BgmMeasure,
    EstimatorResult,
    Partition,
    Schedule,
    ValidityReport,
    barron_mixture,
    bgm_estimate,
    build_bgm_partition,
    data_driven_estimate,
    make_schedule,
    plugin_entropy,
    power_rate_exponent,
    schedule_validity,
    tau_star,
)
from .experiments import (
    Diagnostics,
    ExperimentConfig,
    ExperimentReport,
    FittedRate,
    TrialRecord,
    compute_diagnostics,
    config_from_dict,
    coverage_experiment,
    derive_seed,
    export_csv,
    fit_rate,
    load_report,
    oracle_threshold_set,
    run_error_trajectory,
    save_report,
)
from .measures import (
    FiniteMeasure,
    SupportStats,
    conditional,
    empirical_measure,
    entropy,
    kl_divergence,
    restricted_variation,
    support_stats,
    total_variation,
)
from .pmfs import (
    LOG2E,
    Pmf,
    Sample,
    load_symbols,
    make_exp_tail_pmf,
    make_finite_pmf,
    make_power_tail_pmf,
    pmf_entropy,
    pmf_from_spec,
    sample,
    save_sample,
    tail_sums,
)

__version__ = "0.1.0"

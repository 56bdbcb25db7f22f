"""Stable matching in large random markets with multinomial-logit preferences.

The core objects are score matrices in canonical (row-stochastic) form, their
balanced form obtained by iterative proportional fitting, latent exponential
values sampled from the balanced scores, and the matching machinery built on
top: deferred acceptance, exhaustive stable-matching enumeration, approximate
stability certificates, and the distributional statistics used by the
config-driven experiment runner.
"""
from .errors import (
    ConfigError,
    DegenerateSample,
    DeltaOutOfRange,
    DuplicateValue,
    EmptySample,
    MmlError,
    NoConvergence,
    NonPositiveEntry,
    NonPositiveRate,
    NonSquare,
    NotNormalized,
    ShapeMismatch,
    TooLarge,
)
from .rng import exponentials, stream_key, unit_uniforms, unit_uniforms_batch
from .market import (
    BalancedMarket,
    CanonicalMarket,
    backfill_imbalanced,
    canonical_from_raw,
    contiguity_constant,
    public_scores_market,
    random_cbounded_market,
    read_market,
    read_matrix_pair,
    sinkhorn_balance,
    uniform_market,
    write_market,
    write_matrix_pair,
)
from .sampling import (
    LatentValues,
    PreferenceProfile,
    logit_sample_prefs,
    prefs_from_latent,
    sample_latent,
)
from .matching import (
    ENUMERATION_LIMIT,
    EXACT_ALPHA_LIMIT,
    BlockingPair,
    Matching,
    MatchingOutcome,
    Side,
    deferred_acceptance,
    enumerate_stable,
    find_blocking_pairs,
    greedy_alpha_certificate,
    is_alpha_stable_exact,
    is_stable,
    outcome_of,
    truncate_delta,
)
from .stats import (
    EmpiricalCDF,
    ExponentialFit,
    FitMethod,
    RegionFlags,
    best_fit_exponential,
    dkw_bound,
    eig_dispersion,
    exponential_fit_at,
    hyperbola_product,
    ks_distance_to_exp,
    rank_value_ratio_report,
    region_check,
    rescaled_ranks,
)
from .probability import (
    StabilityLikelihood,
    chernoff_lower_tail,
    contiguity_of,
    expected_stable_count_mc,
    naive_p_upper,
    p_mu,
    q_xy,
    stability_likelihood,
)
from .experiments import (
    CSV_COLUMNS,
    ExperimentConfig,
    ExperimentKind,
    MarketKind,
    TrialRecord,
    format_summary,
    load_config,
    parse_config,
    records_from_csv,
    records_to_csv,
    records_to_jsonl,
    run_experiment,
    run_trial,
    summarize,
    summarize_experiment,
    write_outputs,
)

__version__ = "0.1.0"

__all__ = [
    "BalancedMarket",
    "BlockingPair",
    "CSV_COLUMNS",
    "CanonicalMarket",
    "ConfigError",
    "DegenerateSample",
    "DeltaOutOfRange",
    "DuplicateValue",
    "ENUMERATION_LIMIT",
    "EXACT_ALPHA_LIMIT",
    "EmpiricalCDF",
    "EmptySample",
    "ExperimentConfig",
    "ExperimentKind",
    "ExponentialFit",
    "FitMethod",
    "LatentValues",
    "Matching",
    "MatchingOutcome",
    "MarketKind",
    "MmlError",
    "NoConvergence",
    "NonPositiveEntry",
    "NonPositiveRate",
    "NonSquare",
    "NotNormalized",
    "PreferenceProfile",
    "RegionFlags",
    "ShapeMismatch",
    "Side",
    "StabilityLikelihood",
    "TooLarge",
    "TrialRecord",
    "backfill_imbalanced",
    "best_fit_exponential",
    "canonical_from_raw",
    "chernoff_lower_tail",
    "contiguity_constant",
    "contiguity_of",
    "deferred_acceptance",
    "dkw_bound",
    "eig_dispersion",
    "enumerate_stable",
    "expected_stable_count_mc",
    "exponential_fit_at",
    "exponentials",
    "find_blocking_pairs",
    "format_summary",
    "greedy_alpha_certificate",
    "hyperbola_product",
    "is_alpha_stable_exact",
    "is_stable",
    "ks_distance_to_exp",
    "load_config",
    "logit_sample_prefs",
    "naive_p_upper",
    "outcome_of",
    "p_mu",
    "parse_config",
    "prefs_from_latent",
    "public_scores_market",
    "q_xy",
    "random_cbounded_market",
    "rank_value_ratio_report",
    "read_market",
    "read_matrix_pair",
    "records_from_csv",
    "records_to_csv",
    "records_to_jsonl",
    "region_check",
    "rescaled_ranks",
    "run_experiment",
    "run_trial",
    "sample_latent",
    "sinkhorn_balance",
    "stability_likelihood",
    "stream_key",
    "summarize",
    "summarize_experiment",
    "truncate_delta",
    "uniform_market",
    "unit_uniforms",
    "unit_uniforms_batch",
    "write_market",
    "write_matrix_pair",
    "write_outputs",
]

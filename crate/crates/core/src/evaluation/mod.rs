//! Quantitative analyses of trained hierarchies.

mod clustering;
mod information;
mod prediction;
mod report;
mod stats;

pub use clustering::{rand_chance_level, rand_index, Labeling};
pub use information::{
    compare_nmi, day_prior, entropy, factorized_joint, nmi, nmi_by_day, FactorTree, NmiRecord,
    NmiSummary, PairwiseJoint, DAY_PRIOR_NODE,
};
pub use prediction::{
    classify_subjective_value, extrapolation_sweep, ground_truth, infer_blocks,
    interpolation_trend, labels_from_inferences, licking_fraction, predict_licking_extrapolation,
    predict_licking_interpolation, probability_grid, sweep_trend, ConditionSummary, EvalSettings,
    ExtrapolationOptions, ExtrapolationPoint, SweepKind,
};
pub use report::{
    evaluate, export_topic_vectors, extrapolation_csv, interpolation_csv, nmi_comparison_csv,
    nmi_table, EvalReport, Trends, REPORT_SCHEMA_VERSION,
};
pub use stats::{
    average_ranks, iqr, mean_sem, median, quantile, spearman, wilcoxon_signed_rank,
    wilcoxon_signed_rank_with, WilcoxonMethod, WilcoxonResult, WILCOXON_MIN_N,
};

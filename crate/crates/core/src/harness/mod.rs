//! Synthetic corpora, cropping, leave-one-out completion experiments and their reporting.

pub mod crop;
pub mod experiment;
pub mod heatmap;
pub mod runtime;
pub mod synthetic;

pub use crop::{crop_partition, parse_fractions, Axis, CropDirection, CropSpec};
pub use experiment::{
    run_loo_extrapolation, summarize, AggregateRow, ExperimentConfig, ExperimentOutput,
    ExperimentSummary, Heatmap, Improvement, TrialReport,
};
pub use heatmap::{emit_heatmap, HeatmapAccumulator, UNEVALUATED};
pub use runtime::{fit_polynomial, fit_runtime_curve, PolynomialFit, RuntimeBucket, RuntimeCurve};
pub use synthetic::{
    generate_synthetic_corpus, icosphere, skull_template, SyntheticCorpusSpec, Template,
};

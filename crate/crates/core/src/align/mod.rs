//! Similarity alignment, generalized Procrustes analysis, and the statistical shape model.

pub mod gpa;
pub mod similarity;
pub mod ssm;

pub use gpa::{centroid_size, generalized_procrustes, normalize_shape, GpaOptions, GpaResult};
pub use similarity::{procrustes_align, procrustes_points, SimilarityTransform};
pub use ssm::{
    build_ssm, loo_generalization, project, project_with, LooGeneralization, LooSummaryRow,
    LooTrial, ProjectionResult, ShapeModel, UnknownFill,
};

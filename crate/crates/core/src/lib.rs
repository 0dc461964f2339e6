//! Statistical shape models over topologically consistent triangle meshes, and completion of
//! partial meshes from a model instance.
//!
//! The pipeline:
//!
//! 1. [`align::generalized_procrustes`] removes pose and scale from a corpus.
//! 2. [`align::build_ssm`] runs PCA over the aligned vertex coordinates.
//! 3. [`align::project`] fits the model to the known vertices of a partial mesh.
//! 4. [`extrapolate`] fills the unknown vertices from the model instance, by copying
//!    ([`extrapolate::extrapolate_po`]), by blending over a band of known vertices
//!    ([`extrapolate::extrapolate_feather`]), or by warping with a thin-plate spline fitted on
//!    that band ([`extrapolate::extrapolate_tps`]).
//!
//! [`harness`] generates seeded synthetic corpora and runs leave-one-out cropping experiments;
//! [`io`] reads and writes PLY, OBJ, model, partition and report files.
//!
//! Runnable examples live in `crates/core/examples/`.

pub mod align;
pub mod cli;
pub mod error;
pub mod extrapolate;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod stats;
pub mod tps;

pub use align::{
    build_ssm, generalized_procrustes, procrustes_align, project, GpaOptions, ProjectionResult,
    ShapeModel, SimilarityTransform,
};
pub use error::{Error, Result};
pub use extrapolate::{
    extrapolate_feather, extrapolate_po, extrapolate_tps, ExtrapolationResult, Extrapolator, Method,
};
pub use mesh::{compute_partition, surface_error_stats, ErrorStats, RegionPartition, TriMesh};
pub use tps::{build_tps, evaluate_tps, TpsModel, TpsOptions};

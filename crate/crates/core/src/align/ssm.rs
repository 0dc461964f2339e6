//! Point distribution model: mean shape plus orthonormal modes from PCA of aligned shapes, and
//! projection of complete or partial shapes onto it.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gpa::{generalized_procrustes, GpaOptions};
use super::similarity::{procrustes_align, SimilarityTransform};
use crate::error::{Error, Result};
use crate::linalg::{thin_svd, ThinSvd};
use crate::mesh::{surface_error_stats, ErrorStats, TriMesh};
use crate::stats::MeanStd;

/// Modes whose singular value falls below this fraction of the largest are discarded.
pub const MODE_RELATIVE_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeModel {
    mean_mesh: TriMesh,
    mean: DVector<f64>,
    /// One mode per column, `3V x N`.
    modes: DMatrix<f64>,
    stddevs: Vec<f64>,
    sample_count: usize,
}

impl ShapeModel {
    /// Assembles a model from stored parts, checking sizes and ordering. Orthonormality of the
    /// modes is checked by [`ShapeModel::orthonormality_error`], not here.
    pub fn from_parts(
        topology: &TriMesh,
        mean: DVector<f64>,
        modes: DMatrix<f64>,
        stddevs: Vec<f64>,
        sample_count: usize,
    ) -> Result<Self> {
        let dim = 3 * topology.vertex_count();
        if mean.len() != dim || modes.nrows() != dim {
            return Err(Error::InvalidArgument(format!(
                "model arrays do not match {} vertices",
                topology.vertex_count()
            )));
        }
        if modes.ncols() != stddevs.len() {
            return Err(Error::InvalidArgument(
                "mode count and standard deviation count differ".into(),
            ));
        }
        if stddevs.windows(2).any(|w| w[1] > w[0]) || stddevs.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidArgument(
                "mode standard deviations must be non-negative and non-increasing".into(),
            ));
        }
        let mean_mesh = topology.from_flat(&mean)?;
        Ok(Self {
            mean_mesh,
            mean,
            modes,
            stddevs,
            sample_count,
        })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn mean_mesh(&self) -> &TriMesh {
        &self.mean_mesh
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn stddevs(&self) -> &[f64] {
        &self.stddevs
    }

    pub fn mode_count(&self) -> usize {
        self.modes.ncols()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn vertex_count(&self) -> usize {
        self.mean_mesh.vertex_count()
    }

    /// `v0 + sum_i coefficients[i] * v_i` in the model frame.
    pub fn instance(&self, coefficients: &[f64]) -> Result<TriMesh> {
        if coefficients.len() > self.mode_count() {
            return Err(Error::ModeCountOutOfRange {
                requested: coefficients.len(),
                available: self.mode_count(),
            });
        }
        let mut v = self.mean.clone();
        for (i, &c) in coefficients.iter().enumerate() {
            v.axpy(c, &self.modes.column(i), 1.0);
        }
        self.mean_mesh.from_flat(&v)
    }

    /// Largest absolute entry of `modes^T modes - I`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.mode_count();
        let gram = self.modes.transpose() * &self.modes;
        (gram - DMatrix::identity(n, n)).amax()
    }
}

/// PCA over a corpus that has already been aligned (see [`generalized_procrustes`]).
///
/// Singular vectors of the centred data matrix give the modes; `sigma_i^2` is the sample
/// covariance eigenvalue with divisor `M - 1`.
pub fn build_ssm(aligned: &[TriMesh]) -> Result<ShapeModel> {
    let m = aligned.len();
    if m < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: m });
    }
    for s in &aligned[1..] {
        aligned[0].check_topology(s)?;
    }
    let dim = 3 * aligned[0].vertex_count();
    let mut data = DMatrix::zeros(dim, m);
    for (j, s) in aligned.iter().enumerate() {
        data.set_column(j, &s.to_flat());
    }
    let mean = data.column_mean();
    for mut col in data.column_iter_mut() {
        col -= &mean;
    }

    // M > 3V only for toy inputs; the SVD of the transpose swaps the roles of U and V there
    let svd = if dim >= m {
        thin_svd(&data)
    } else {
        let t = thin_svd(&data.transpose());
        ThinSvd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        }
    };
    let u = &svd.u;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let largest = order.first().map_or(0.0, |&i| svd.singular_values[i]);
    // roundoff floor for corpora with (numerically) no variation at all
    let floor = 1e-12 * mean.norm() * (m as f64).sqrt();
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| {
            let s = svd.singular_values[i];
            s > MODE_RELATIVE_CUTOFF * largest && s > floor
        })
        .take(m - 1)
        .collect();

    let mut modes = DMatrix::zeros(dim, keep.len());
    let mut stddevs = Vec::with_capacity(keep.len());
    for (k, &i) in keep.iter().enumerate() {
        let mut col = u.column(i).into_owned();
        // deterministic sign: largest-magnitude component positive
        if col[col.iamax()] < 0.0 {
            col.neg_mut();
        }
        modes.set_column(k, &col);
        stddevs.push(svd.singular_values[i] / ((m - 1) as f64).sqrt());
    }
    ShapeModel::from_parts(&aligned[0], mean, modes, stddevs, m)
}

/// How the coordinates of unknown vertices enter the projection residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownFill {
    /// Unknown rows take the mean shape's values, so they contribute nothing to the inner
    /// products with the modes.
    #[default]
    Mean,
    /// Unknown rows are literal zeros in the model frame.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub coefficients: Vec<f64>,
    /// Model instance mapped back into the patient frame.
    pub instance: TriMesh,
    /// Patient-to-model similarity estimated on the known vertices.
    pub transform: SimilarityTransform,
}

/// Projects `partial` onto the first `num_modes` modes using only the vertices in `known`.
pub fn project(
    partial: &TriMesh,
    known: &[usize],
    model: &ShapeModel,
    num_modes: usize,
) -> Result<ProjectionResult> {
    project_with(partial, known, model, num_modes, UnknownFill::Mean)
}

pub fn project_with(
    partial: &TriMesh,
    known: &[usize],
    model: &ShapeModel,
    num_modes: usize,
    fill: UnknownFill,
) -> Result<ProjectionResult> {
    model.mean_mesh.check_topology(partial)?;
    if num_modes > model.mode_count() {
        return Err(Error::ModeCountOutOfRange {
            requested: num_modes,
            available: model.mode_count(),
        });
    }
    let n = partial.vertex_count();
    let mut is_known = vec![false; n];
    for &k in known {
        if k >= n {
            return Err(Error::InvalidArgument(format!(
                "known vertex {k} out of range"
            )));
        }
        is_known[k] = true;
    }
    let known_sorted: Vec<usize> = (0..n).filter(|&i| is_known[i]).collect();

    let procrustes = procrustes_align(partial, &model.mean_mesh, &known_sorted)?;
    // residual(a) = a * u - w, with u the aligned known rows and w the mean rows that enter the
    // residual; unknown rows of u are zero.
    let mut u = procrustes.apply_mesh(partial).to_flat();
    let mut w = model.mean.clone();
    for v in (0..n).filter(|&i| !is_known[i]) {
        for k in 0..3 {
            u[3 * v + k] = 0.0;
            if fill == UnknownFill::Mean {
                w[3 * v + k] = 0.0;
            }
        }
    }
    let a = tangent_scale(model, &u, &w);
    let transform = SimilarityTransform::new(
        a * procrustes.scale,
        procrustes.rotation,
        a * procrustes.translation,
    );
    let residual = u * a - w;

    let coefficients: Vec<f64> = (0..num_modes)
        .map(|i| model.modes.column(i).dot(&residual))
        .collect();
    let reconstruction = model.instance(&coefficients)?;
    let instance = transform.inverse().apply_mesh(&reconstruction);
    Ok(ProjectionResult {
        coefficients,
        instance,
        transform,
    })
}

/// Scale `a` that brings `a * u - w` closest to the span of all model modes.
///
/// Aligned training shapes from generalized Procrustes analysis are fits to the unit-size
/// Procrustes mean, while `v0` is their arithmetic mean and is slightly smaller; aligning to `v0`
/// therefore shrinks every training shape by the same factor and moves it off the model's affine
/// hull. This factor undoes that, so training shapes project onto themselves and the mean onto
/// zero coefficients. Falls back to 1 when `u` lies in the mode span.
fn tangent_scale(model: &ShapeModel, u: &DVector<f64>, w: &DVector<f64>) -> f64 {
    let perp = |z: &DVector<f64>| -> DVector<f64> {
        let c = model.modes.tr_mul(z);
        z - &model.modes * c
    };
    let pu = perp(u);
    let pw = perp(w);
    let denom = pu.norm_squared();
    if !(denom > 1e-20 * u.norm_squared()) {
        return 1.0;
    }
    let a = pu.dot(&pw) / denom;
    if a.is_finite() && a > 0.0 {
        a
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LooTrial {
    pub left_out: usize,
    /// One entry per requested mode count, in request order.
    pub stats: Vec<ErrorStats>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LooSummaryRow {
    pub num_modes: usize,
    pub rms_surface: MeanStd,
    pub max_surface: MeanStd,
    pub rms_vertex: MeanStd,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LooGeneralization {
    pub mode_counts: Vec<usize>,
    pub trials: Vec<LooTrial>,
    pub summary: Vec<LooSummaryRow>,
}

/// Leave-one-out generalization: for every shape, build a model from the others and measure how
/// well each mode count reproduces the held-out shape (all vertices, patient frame).
pub fn loo_generalization(
    corpus: &[TriMesh],
    mode_counts: &[usize],
    gpa: &GpaOptions,
) -> Result<LooGeneralization> {
    if corpus.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: corpus.len(),
        });
    }
    let all: Vec<usize> = (0..corpus[0].vertex_count()).collect();
    let trials: Vec<LooTrial> = (0..corpus.len())
        .into_par_iter()
        .map(|left_out| -> Result<LooTrial> {
            let training: Vec<TriMesh> = corpus
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != left_out)
                .map(|(_, s)| s.clone())
                .collect();
            let model = build_ssm(&generalized_procrustes(&training, gpa)?.aligned)?;
            let truth = &corpus[left_out];
            let stats = mode_counts
                .iter()
                .map(|&k| {
                    let p = project(truth, &all, &model, k)?;
                    let mut s = surface_error_stats(truth, &p.instance, &all)?;
                    s.per_vertex_surface.clear();
                    Ok(s)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LooTrial { left_out, stats })
        })
        .collect::<Result<_>>()?;

    let summary = mode_counts
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let pick = |f: fn(&ErrorStats) -> f64| {
                MeanStd::from_values(trials.iter().map(|t| f(&t.stats[j])))
            };
            LooSummaryRow {
                num_modes: k,
                rms_surface: pick(|s| s.rms_surface),
                max_surface: pick(|s| s.max_surface),
                rms_vertex: pick(|s| s.rms_vertex),
            }
        })
        .collect();
    Ok(LooGeneralization {
        mode_counts: mode_counts.to_vec(),
        trials,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synthetic::{
        generate_synthetic_corpus, skull_template, SyntheticCorpusSpec,
    };
    use nalgebra::{Rotation3, SymmetricEigen, Vector3};

    fn corpus(shapes: usize, modes: usize, budget: usize, seed: u64) -> Vec<TriMesh> {
        generate_synthetic_corpus(&SyntheticCorpusSpec {
            vertex_budget: budget,
            shapes,
            latent_modes: modes,
            seed,
            ..SyntheticCorpusSpec::default()
        })
        .unwrap()
    }

    fn aligned(c: &[TriMesh]) -> Vec<TriMesh> {
        generalized_procrustes(c, &GpaOptions::default())
            .unwrap()
            .aligned
    }

    #[test]
    fn two_shapes_give_one_mode_along_their_difference() {
        let c = aligned(&corpus(2, 1, 162, 1));
        let model = build_ssm(&c).unwrap();
        assert_eq!(model.mode_count(), 1);
        let diff = c[0].to_flat() - c[1].to_flat();
        let cos = model.modes().column(0).dot(&diff).abs() / diff.norm();
        assert!((cos - 1.0).abs() < 1e-12);
        // centred columns are +-diff/2, so sigma = |diff| / sqrt(2) with divisor M - 1 = 1
        assert!((model.stddevs()[0] - diff.norm() / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn duplicate_shape_does_not_add_rank() {
        let c = aligned(&corpus(4, 2, 162, 2));
        let base = build_ssm(&c).unwrap();
        let mut dup = c.clone();
        dup.push(c[1].clone());
        let with_dup = build_ssm(&dup).unwrap();
        assert_eq!(base.mode_count(), 3);
        assert_eq!(with_dup.mode_count(), 3);
    }

    #[test]
    fn eigenvalues_match_explicit_covariance() {
        // tiny mesh so the 3V x 3V covariance is cheap
        let c = aligned(&corpus(6, 3, 12, 3));
        let model = build_ssm(&c).unwrap();
        let dim = 3 * c[0].vertex_count();
        let samples: Vec<DVector<f64>> = c.iter().map(|s| s.to_flat()).collect();
        let mean = samples.iter().fold(DVector::zeros(dim), |a, s| a + s) / 6.0;
        let mut cov = DMatrix::zeros(dim, dim);
        for s in &samples {
            let d = s - &mean;
            cov += &d * d.transpose();
        }
        cov /= 5.0;
        let mut eig: Vec<f64> = SymmetricEigen::new(cov)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(model.mode_count(), 5);
        for (k, s) in model.stddevs().iter().enumerate() {
            assert!(
                (s * s - eig[k]).abs() <= 1e-7 * eig[k],
                "{} vs {}",
                s * s,
                eig[k]
            );
        }
        assert!(model.orthonormality_error() < 1e-8);
    }

    #[test]
    fn mean_shape_projects_to_zero_coefficients() {
        let model = build_ssm(&aligned(&corpus(6, 3, 162, 4))).unwrap();
        let t = SimilarityTransform::new(
            40.0,
            *Rotation3::new(Vector3::new(0.1, 0.2, 0.3)).matrix(),
            Vector3::new(1.0, 2.0, 3.0),
        );
        let patient = t.apply_mesh(model.mean_mesh());
        let known: Vec<usize> = (0..patient.vertex_count()).filter(|i| i % 3 != 0).collect();
        let p = project(&patient, &known, &model, model.mode_count()).unwrap();
        assert!(p.coefficients.iter().all(|c| c.abs() < 1e-12));
        assert!(crate::align::gpa::rms_vertex_distance(&p.instance, &patient) < 1e-9);
    }

    #[test]
    fn training_shapes_are_reproduced_with_all_modes() {
        let raw = corpus(8, 4, 642, 5);
        let g = generalized_procrustes(&raw, &GpaOptions::default()).unwrap();
        let model = build_ssm(&g.aligned).unwrap();
        let all: Vec<usize> = (0..raw[0].vertex_count()).collect();
        for s in &raw {
            let p = project(s, &all, &model, model.mode_count()).unwrap();
            let err = crate::align::gpa::rms_vertex_distance(&p.instance, s);
            let (lo, hi) = s.bounding_box();
            assert!(err < 1e-6 * (hi - lo).norm(), "{err}");
        }
    }

    #[test]
    fn partial_coefficients_match_dense_arithmetic() {
        let raw = corpus(9, 4, 642, 6);
        let model = build_ssm(&aligned(&raw[..8])).unwrap();
        let patient = &raw[8];
        let xmid = {
            let (lo, hi) = patient.bounding_box();
            0.5 * (lo.x + hi.x)
        };
        let known: Vec<usize> = (0..patient.vertex_count())
            .filter(|&i| patient.vertices()[i].x < xmid)
            .collect();
        let unknown: Vec<usize> = (0..patient.vertex_count())
            .filter(|i| !known.contains(i))
            .collect();
        let p = project(
            &patient.with_zeroed(&unknown),
            &known,
            &model,
            model.mode_count(),
        )
        .unwrap();

        // oracle: explicit masked residual vector and a dense matrix-vector product
        let t = procrustes_align(patient, model.mean_mesh(), &known).unwrap();
        let n = patient.vertex_count();
        let mut mask = DMatrix::zeros(3 * n, 3 * n);
        for &k in &known {
            for c in 0..3 {
                mask[(3 * k + c, 3 * k + c)] = 1.0;
            }
        }
        let u = &mask * t.apply_mesh(patient).to_flat();
        let w = &mask * model.mean();
        let v = model.modes();
        let perp = DMatrix::identity(3 * n, 3 * n) - v * v.transpose();
        let (pu, pw) = (&perp * &u, &perp * &w);
        let a = pu.dot(&pw) / pu.dot(&pu);
        let lambda = v.transpose() * (u * a - w);
        for (a, b) in p.coefficients.iter().zip(lambda.iter()) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn projection_is_similarity_equivariant() {
        let raw = corpus(7, 3, 642, 7);
        let model = build_ssm(&aligned(&raw[..6])).unwrap();
        let known: Vec<usize> = (0..raw[6].vertex_count()).filter(|i| i % 4 != 0).collect();
        let base = project(&raw[6], &known, &model, 3).unwrap();
        let t0 = SimilarityTransform::new(
            0.7,
            *Rotation3::new(Vector3::new(-0.4, 0.9, 0.2)).matrix(),
            Vector3::new(-30.0, 4.0, 12.0),
        );
        let moved = project(&t0.apply_mesh(&raw[6]), &known, &model, 3).unwrap();
        for (a, b) in base.coefficients.iter().zip(&moved.coefficients) {
            assert!((a - b).abs() < 1e-9);
        }
        let expected = t0.apply_mesh(&base.instance);
        assert!(crate::align::gpa::rms_vertex_distance(&expected, &moved.instance) < 1e-6);
    }

    #[test]
    fn full_projection_is_locally_optimal() {
        let raw = corpus(8, 5, 642, 8);
        let model = build_ssm(&aligned(&raw[..7])).unwrap();
        let patient = &raw[7];
        let all: Vec<usize> = (0..patient.vertex_count()).collect();
        let p = project(patient, &all, &model, 4).unwrap();
        let target = p.transform.apply_mesh(patient).to_flat();
        let cost =
            |lambda: &[f64]| (model.instance(lambda).unwrap().to_flat() - &target).norm_squared();
        let best = cost(&p.coefficients);
        for i in 0..4 {
            for delta in [1e-3, -1e-3] {
                let mut l = p.coefficients.clone();
                l[i] += delta;
                assert!(cost(&l) > best);
            }
        }
    }

    #[test]
    fn projection_argument_errors() {
        let model = build_ssm(&aligned(&corpus(4, 2, 162, 9))).unwrap();
        let m = model.mean_mesh().clone();
        assert!(matches!(
            project(&m, &[0, 1, 2, 3], &model, 9),
            Err(Error::ModeCountOutOfRange { .. })
        ));
        assert!(matches!(
            project(&m, &[0, 1], &model, 1),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(build_ssm(&[m]), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn zero_fill_differs_from_mean_fill() {
        let raw = corpus(7, 3, 642, 10);
        let model = build_ssm(&aligned(&raw[..6])).unwrap();
        let known: Vec<usize> = (0..raw[6].vertex_count()).filter(|i| i % 2 == 0).collect();
        let a = project_with(&raw[6], &known, &model, 3, UnknownFill::Mean).unwrap();
        let b = project_with(&raw[6], &known, &model, 3, UnknownFill::Zero).unwrap();
        assert_ne!(a.coefficients, b.coefficients);
    }

    #[test]
    fn loo_on_identical_shapes_is_exact() {
        let s = skull_template(162);
        let r =
            loo_generalization(&[s.clone(), s.clone(), s], &[0], &GpaOptions::default()).unwrap();
        for t in &r.trials {
            assert!(t.stats[0].rms_vertex < 1e-9);
        }
    }

    #[test]
    fn loo_error_is_distance_to_remaining_span() {
        // leaving out the third of three shapes measures its distance to the line through the
        // other two in shape space
        let raw = corpus(3, 2, 162, 11);
        let r = loo_generalization(&raw, &[0, 1], &GpaOptions::default()).unwrap();
        let t = &r.trials[2];
        let g = generalized_procrustes(&raw[..2], &GpaOptions::default()).unwrap();
        let model = build_ssm(&g.aligned).unwrap();
        let all: Vec<usize> = (0..raw[2].vertex_count()).collect();
        let tf = procrustes_align(&raw[2], model.mean_mesh(), &all).unwrap();
        let y = tf.apply_mesh(&raw[2]).to_flat();
        let u = (g.aligned[0].to_flat() - g.aligned[1].to_flat()).normalize();
        let perp = |z: &DVector<f64>| z - &u * u.dot(z);
        let v0 = model.mean();
        let a = perp(&y).dot(&perp(v0)) / perp(&y).norm_squared();
        let x = &y * a - v0;
        let rest0 = &x;
        let rest1 = perp(&x);
        let n = raw[2].vertex_count() as f64;
        let expect0 = (rest0.norm_squared() / n).sqrt() / (a * tf.scale);
        let expect1 = (rest1.norm_squared() / n).sqrt() / (a * tf.scale);
        assert!((t.stats[0].rms_vertex - expect0).abs() < 1e-9 * expect0.max(1.0));
        assert!((t.stats[1].rms_vertex - expect1).abs() < 1e-9 * expect1.max(1.0));
    }

    #[test]
    fn loo_error_is_monotone_in_mode_count() {
        let raw = corpus(10, 12, 642, 12);
        let counts: Vec<usize> = (0..=8).collect();
        let r = loo_generalization(&raw, &counts, &GpaOptions::default()).unwrap();
        for t in &r.trials {
            for w in t.stats.windows(2) {
                assert!(w[1].rms_vertex <= w[0].rms_vertex * (1.0 + 1e-12));
            }
        }
    }
}

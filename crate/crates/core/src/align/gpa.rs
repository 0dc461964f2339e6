use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::similarity::{procrustes_points, SimilarityTransform};
use crate::error::{Error, Result};
use crate::mesh::TriMesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpaOptions {
    /// Stop once the RMS per-vertex movement of the normalized mean falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for GpaOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GpaResult {
    /// Every input shape mapped onto the final mean.
    pub aligned: Vec<TriMesh>,
    /// Mean shape centred at the origin with unit centroid size.
    pub mean: TriMesh,
    /// Transform taking each input shape to its aligned copy.
    pub transforms: Vec<SimilarityTransform>,
    pub iterations: usize,
    pub converged: bool,
}

/// Centres `mesh` at the origin and scales it to unit centroid size.
pub fn normalize_shape(mesh: &TriMesh) -> (TriMesh, SimilarityTransform) {
    let c = mesh.centroid().coords;
    let size = centroid_size(mesh);
    let scale = if size > 0.0 { 1.0 / size } else { 1.0 };
    let t = SimilarityTransform::new(scale, nalgebra::Matrix3::identity(), -c * scale);
    (t.apply_mesh(mesh), t)
}

/// Root of the summed squared distances from the centroid.
pub fn centroid_size(mesh: &TriMesh) -> f64 {
    let c = mesh.centroid();
    mesh.vertices()
        .iter()
        .map(|p| (p - c).norm_squared())
        .sum::<f64>()
        .sqrt()
}

fn arithmetic_mean(shapes: &[TriMesh]) -> TriMesh {
    let n = shapes.len() as f64;
    let vertices = (0..shapes[0].vertex_count())
        .map(|i| {
            let sum = shapes.iter().fold(nalgebra::Vector3::zeros(), |acc, s| {
                acc + s.vertices()[i].coords
            });
            nalgebra::Point3::from(sum / n)
        })
        .collect();
    shapes[0]
        .with_vertices(vertices)
        .expect("consistent corpus")
}

fn align_all(corpus: &[TriMesh], target: &TriMesh) -> Result<Vec<SimilarityTransform>> {
    corpus
        .par_iter()
        .map(|s| procrustes_points(s.vertices(), target.vertices()))
        .collect()
}

/// Mutually aligns a topologically consistent corpus under similarity transforms.
///
/// Starts from the first shape, then alternates between aligning every shape to the current mean
/// and recomputing the mean, which is re-normalized each round to pin translation and scale.
pub fn generalized_procrustes(corpus: &[TriMesh], options: &GpaOptions) -> Result<GpaResult> {
    if corpus.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: corpus.len(),
        });
    }
    for s in &corpus[1..] {
        corpus[0].check_topology(s)?;
    }

    let (mut mean, _) = normalize_shape(&corpus[0]);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iterations {
        iterations += 1;
        let transforms = align_all(corpus, &mean)?;
        let aligned: Vec<TriMesh> = corpus
            .iter()
            .zip(&transforms)
            .map(|(s, t)| t.apply_mesh(s))
            .collect();
        let (next, _) = normalize_shape(&arithmetic_mean(&aligned));
        let movement = rms_vertex_distance(&mean, &next);
        mean = next;
        if movement < options.tolerance {
            converged = true;
            break;
        }
    }

    let transforms = align_all(corpus, &mean)?;
    let aligned = corpus
        .iter()
        .zip(&transforms)
        .map(|(s, t)| t.apply_mesh(s))
        .collect();
    Ok(GpaResult {
        aligned,
        mean,
        transforms,
        iterations,
        converged,
    })
}

pub(crate) fn rms_vertex_distance(a: &TriMesh, b: &TriMesh) -> f64 {
    let sum: f64 = a
        .vertices()
        .iter()
        .zip(b.vertices())
        .map(|(p, q)| (p - q).norm_squared())
        .sum();
    (sum / a.vertex_count().max(1) as f64).sqrt()
}

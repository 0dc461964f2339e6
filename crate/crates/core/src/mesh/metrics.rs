use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MeshDistance, RegionPartition, TriMesh};
use crate::error::{Error, Result};

/// Surface and vertex error of an estimate against the true shape over an evaluation region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    /// RMS of true-vertex to estimated-surface distances (mm).
    pub rms_surface: f64,
    /// Largest true-vertex to estimated-surface distance (mm).
    pub max_surface: f64,
    /// RMS distance between corresponding vertices (mm).
    pub rms_vertex: f64,
    /// Surface distance for each vertex of the evaluation region, in region order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_vertex_surface: Vec<f64>,
}

impl ErrorStats {
    pub fn zero() -> Self {
        Self {
            rms_surface: 0.0,
            max_surface: 0.0,
            rms_vertex: 0.0,
            per_vertex_surface: Vec::new(),
        }
    }
}

/// Measures `estimate` against `truth` at the vertices listed in `eval_region`.
///
/// Surface distances go from each true vertex to the closest point of the estimated surface.
/// Since the corresponding estimate vertex lies on that surface, each surface distance is capped
/// by the vertex distance, so `rms_vertex >= rms_surface` holds exactly.
pub fn surface_error_stats(
    truth: &TriMesh,
    estimate: &TriMesh,
    eval_region: &[usize],
) -> Result<ErrorStats> {
    truth.check_topology(estimate)?;
    if eval_region.is_empty() {
        return Err(Error::InvalidArgument("evaluation region is empty".into()));
    }
    if let Some(&bad) = eval_region.iter().find(|&&v| v >= truth.vertex_count()) {
        return Err(Error::InvalidArgument(format!(
            "evaluation vertex {bad} out of range"
        )));
    }
    let index = MeshDistance::new(estimate);
    let pairs: Vec<(f64, f64)> = eval_region
        .par_iter()
        .map(|&v| {
            let t = &truth.vertices()[v];
            let vertex = (t - estimate.vertices()[v]).norm();
            (index.distance(t).min(vertex), vertex)
        })
        .collect();

    let n = pairs.len() as f64;
    let mut sum_surface = 0.0;
    let mut sum_vertex = 0.0;
    let mut max_surface: f64 = 0.0;
    for &(s, v) in &pairs {
        sum_surface += s * s;
        sum_vertex += v * v;
        max_surface = max_surface.max(s);
    }
    Ok(ErrorStats {
        rms_surface: (sum_surface / n).sqrt(),
        max_surface,
        rms_vertex: (sum_vertex / n).sqrt(),
        per_vertex_surface: pairs.into_iter().map(|(s, _)| s).collect(),
    })
}

/// Discontinuity across the known/unknown cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeamStats {
    pub max_jump: f64,
    pub rms_jump: f64,
    pub edge_count: usize,
}

/// For every edge `(a, b)` with `a` known and `b` unknown, the jump
/// `|(out_b - out_a) - (truth_b - truth_a)|`.
pub fn seam_jump(
    truth: &TriMesh,
    output: &TriMesh,
    partition: &RegionPartition,
) -> Result<SeamStats> {
    truth.check_topology(output)?;
    let adjacency = super::Adjacency::new(truth);
    let t = truth.vertices();
    let o = output.vertices();
    let mut max_jump: f64 = 0.0;
    let mut sum = 0.0;
    let mut count = 0;
    for &a in partition.boundary() {
        for &b in adjacency.neighbors(a) {
            let b = b as usize;
            if !partition.is_unknown(b) {
                continue;
            }
            let jump = ((o[b] - o[a]) - (t[b] - t[a])).norm();
            max_jump = max_jump.max(jump);
            sum += jump * jump;
            count += 1;
        }
    }
    Ok(SeamStats {
        max_jump,
        rms_jump: if count > 0 {
            (sum / count as f64).sqrt()
        } else {
            0.0
        },
        edge_count: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synthetic::skull_template;
    use crate::mesh::point_to_mesh_distance_exhaustive;
    use nalgebra::{Point3, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> TriMesh {
        let mut v = Vec::new();
        for j in 0..n {
            for i in 0..n {
                v.push(Point3::new(i as f64, j as f64, 0.0));
            }
        }
        let mut t = Vec::new();
        for j in 0..n as u32 - 1 {
            for i in 0..n as u32 - 1 {
                let a = j * n as u32 + i;
                t.push([a, a + 1, a + n as u32]);
                t.push([a + 1, a + n as u32 + 1, a + n as u32]);
            }
        }
        TriMesh::new(v, t).unwrap()
    }

    #[test]
    fn identity_estimate_has_zero_error() {
        let m = skull_template(642);
        let region: Vec<usize> = (0..m.vertex_count()).collect();
        let s = surface_error_stats(&m, &m, &region).unwrap();
        assert_eq!(
            (s.rms_surface, s.max_surface, s.rms_vertex),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn in_plane_translation() {
        let truth = grid(8);
        let shift = Vector3::new(1.0, 0.0, 0.0);
        let est = truth
            .with_vertices(truth.vertices().iter().map(|p| p + shift).collect())
            .unwrap();
        // interior vertices whose x is in [1, 6] stay on the shifted plane patch
        let region: Vec<usize> = (0..truth.vertex_count())
            .filter(|&i| {
                let p = truth.vertices()[i];
                p.x >= 1.0 && p.y >= 1.0 && p.y <= 6.0
            })
            .collect();
        let s = surface_error_stats(&truth, &est, &region).unwrap();
        assert!((s.rms_vertex - 1.0).abs() < 1e-15);
        assert!(s.rms_surface < 1e-12);
    }

    #[test]
    fn matches_exhaustive_oracle_on_random_pair() {
        let truth = skull_template(642);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let est = truth
            .with_vertices(
                truth
                    .vertices()
                    .iter()
                    .map(|p| p + Vector3::from_fn(|_, _| rng.random_range(-2.0..2.0)))
                    .collect(),
            )
            .unwrap();
        let region: Vec<usize> = (0..truth.vertex_count()).step_by(3).collect();
        let s = surface_error_stats(&truth, &est, &region).unwrap();
        let mut sum = 0.0;
        let mut max: f64 = 0.0;
        for (k, &v) in region.iter().enumerate() {
            let d = point_to_mesh_distance_exhaustive(&truth.vertices()[v], &est);
            assert!((d - s.per_vertex_surface[k]).abs() < 1e-9);
            sum += d * d;
            max = max.max(d);
        }
        assert!(((sum / region.len() as f64).sqrt() - s.rms_surface).abs() < 1e-9);
        assert!((max - s.max_surface).abs() < 1e-9);
        assert!(s.rms_vertex >= s.rms_surface);
    }

    #[test]
    fn rejects_mismatch_and_empty_region() {
        let a = grid(3);
        let b = grid(4);
        assert!(matches!(
            surface_error_stats(&a, &b, &[0]),
            Err(Error::TopologyMismatch(_))
        ));
        assert!(surface_error_stats(&a, &a, &[]).is_err());
    }
}

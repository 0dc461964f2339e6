use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// `x -> scale * rotation * x + translation` with a proper rotation and positive scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for SimilarityTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(scale: f64, rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            scale,
            rotation,
            translation,
        }
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.scale * (self.rotation * p.coords) + self.translation)
    }

    pub fn apply_mesh(&self, mesh: &TriMesh) -> TriMesh {
        let v = mesh.vertices().iter().map(|p| self.apply(p)).collect();
        mesh.with_vertices(v).expect("same vertex count")
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        let inv_scale = 1.0 / self.scale;
        Self {
            scale: inv_scale,
            rotation: rt,
            translation: -(rt * self.translation) * inv_scale,
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &SimilarityTransform) -> Self {
        Self {
            scale: self.scale * other.scale,
            rotation: self.rotation * other.rotation,
            translation: self.scale * (self.rotation * other.translation) + self.translation,
        }
    }
}

/// Closed-form similarity minimizing `sum |s R m_i + t - f_i|^2` over proper rotations.
pub fn procrustes_points(
    moving: &[Point3<f64>],
    fixed: &[Point3<f64>],
) -> Result<SimilarityTransform> {
    if moving.len() != fixed.len() {
        return Err(Error::InvalidArgument(format!(
            "correspondence sets differ in size ({} vs {})",
            moving.len(),
            fixed.len()
        )));
    }
    if moving.len() < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 correspondences, got {}",
            moving.len()
        )));
    }
    let mu_m = crate::mesh::centroid(moving).coords;
    let mu_f = crate::mesh::centroid(fixed).coords;
    let mut cross = Matrix3::zeros();
    let mut scatter_m = Matrix3::zeros();
    let mut scatter_f = Matrix3::zeros();
    for (m, f) in moving.iter().zip(fixed) {
        let mc = m.coords - mu_m;
        let fc = f.coords - mu_f;
        cross += fc * mc.transpose();
        scatter_m += mc * mc.transpose();
        scatter_f += fc * fc.transpose();
    }
    check_spread(&scatter_m, "moving")?;
    check_spread(&scatter_f, "fixed")?;

    let svd = cross.svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let d = (u * v_t).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    let rotation = u * correction * v_t;
    let trace = svd.singular_values[0] + svd.singular_values[1] + d * svd.singular_values[2];
    let scale = trace / scatter_m.trace();
    if !(scale > 0.0) {
        return Err(Error::Degenerate(
            "optimal scale is not positive".to_string(),
        ));
    }
    let translation = mu_f - scale * (rotation * mu_m);
    Ok(SimilarityTransform {
        scale,
        rotation,
        translation,
    })
}

fn check_spread(scatter: &Matrix3<f64>, which: &str) -> Result<()> {
    let mut eig = SymmetricEigen::new(*scatter).eigenvalues;
    eig.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    if !(eig[0] > 0.0) || eig[1] <= 1e-12 * eig[0] {
        return Err(Error::Degenerate(format!(
            "{which} points are collinear or coincident"
        )));
    }
    Ok(())
}

/// Similarity taking `moving` onto `fixed` over the homologous vertices in `vertex_subset`.
pub fn procrustes_align(
    moving: &TriMesh,
    fixed: &TriMesh,
    vertex_subset: &[usize],
) -> Result<SimilarityTransform> {
    if moving.vertex_count() != fixed.vertex_count() {
        return Err(Error::TopologyMismatch(format!(
            "vertex counts differ ({} vs {})",
            moving.vertex_count(),
            fixed.vertex_count()
        )));
    }
    if let Some(&bad) = vertex_subset.iter().find(|&&i| i >= moving.vertex_count()) {
        return Err(Error::InvalidArgument(format!(
            "subset vertex {bad} out of range"
        )));
    }
    let m: Vec<Point3<f64>> = vertex_subset
        .iter()
        .map(|&i| moving.vertices()[i])
        .collect();
    let f: Vec<Point3<f64>> = vertex_subset.iter().map(|&i| fixed.vertices()[i]).collect();
    procrustes_points(&m, &f)
}

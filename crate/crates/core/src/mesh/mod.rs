//! Fixed-topology triangle meshes and the geometry shared by every other module.
//!
//! A corpus of meshes is *topologically consistent* when every member has the same vertex count
//! and the same triangle list, so that vertex `i` denotes the same location on every shape. The
//! triangle list is reference counted so that the many copies produced while modelling and
//! completing shapes share it.

mod adjacency;
mod distance;
mod metrics;
mod partition;

use std::sync::Arc;

use nalgebra::{DVector, Point3, Vector3};

use crate::error::{Error, Result};

pub use adjacency::Adjacency;
pub use distance::{
    closest_point_on_triangle, point_to_mesh_distance, point_to_mesh_distance_exhaustive,
    MeshDistance,
};
pub use metrics::{seam_jump, surface_error_stats, ErrorStats, SeamStats};
pub use partition::{compute_partition, RegionPartition};

/// A triangle surface whose vertex positions are in millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Arc<Vec<[u32; 3]>>,
}

impl TriMesh {
    /// Builds a mesh, checking that every index is in range and no triangle repeats a vertex.
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        validate_triangles(vertices.len(), &triangles)?;
        Ok(Self {
            vertices,
            triangles: Arc::new(triangles),
        })
    }

    /// A mesh with the same triangle list as `self` and new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Point3<f64>>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::TopologyMismatch(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Ok(Self {
            vertices,
            triangles: Arc::clone(&self.triangles),
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn vertices_mut(&mut self) -> &mut [Point3<f64>] {
        &mut self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// True when both meshes have the same vertex count and identical triangle lists.
    pub fn same_topology(&self, other: &TriMesh) -> bool {
        self.vertices.len() == other.vertices.len()
            && (Arc::ptr_eq(&self.triangles, &other.triangles) || self.triangles == other.triangles)
    }

    pub fn check_topology(&self, other: &TriMesh) -> Result<()> {
        if self.vertices.len() != other.vertices.len() {
            return Err(Error::TopologyMismatch(format!(
                "vertex counts differ ({} vs {})",
                self.vertices.len(),
                other.vertices.len()
            )));
        }
        if !self.same_topology(other) {
            return Err(Error::TopologyMismatch("triangle lists differ".into()));
        }
        Ok(())
    }

    /// Rejects triangles with (numerically) zero area, relative to the mesh extent.
    pub fn validate_geometry(&self) -> Result<()> {
        let (lo, hi) = self.bounding_box();
        let extent = (hi - lo).norm();
        let tol = (extent * extent * 1e-14).max(f64::MIN_POSITIVE);
        for (t, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| self.vertices[i as usize]);
            if (b - a).cross(&(c - a)).norm() <= tol {
                return Err(Error::InvalidMesh(format!("triangle {t} has zero area")));
            }
        }
        Ok(())
    }

    pub fn centroid(&self) -> Point3<f64> {
        centroid(&self.vertices)
    }

    /// Axis-aligned bounds `(min, max)`; both are the origin for an empty mesh.
    pub fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        bounding_box(&self.vertices)
    }

    /// Stacks the vertex coordinates as `(x0, y0, z0, x1, ...)`.
    pub fn to_flat(&self) -> DVector<f64> {
        flatten(&self.vertices)
    }

    /// Inverse of [`TriMesh::to_flat`] on this mesh's topology.
    pub fn from_flat(&self, flat: &DVector<f64>) -> Result<Self> {
        if flat.len() != 3 * self.vertices.len() {
            return Err(Error::TopologyMismatch(format!(
                "flat vector has {} entries, expected {}",
                flat.len(),
                3 * self.vertices.len()
            )));
        }
        self.with_vertices(unflatten(flat))
    }

    /// Copy with the listed vertices moved to the origin, i.e. a partial mesh whose missing
    /// coordinates carry no information.
    pub fn with_zeroed(&self, indices: &[usize]) -> Self {
        let mut out = self.clone();
        for &i in indices {
            out.vertices[i] = Point3::origin();
        }
        out
    }
}

fn validate_triangles(vertex_count: usize, triangles: &[[u32; 3]]) -> Result<()> {
    for (t, tri) in triangles.iter().enumerate() {
        if let Some(&bad) = tri.iter().find(|&&i| i as usize >= vertex_count) {
            return Err(Error::InvalidMesh(format!(
                "triangle {t} references vertex {bad} but the mesh has {vertex_count} vertices"
            )));
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(Error::InvalidMesh(format!(
                "triangle {t} repeats a vertex: {tri:?}"
            )));
        }
    }
    Ok(())
}

pub(crate) fn centroid(points: &[Point3<f64>]) -> Point3<f64> {
    if points.is_empty() {
        return Point3::origin();
    }
    let sum = points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + p.coords);
    Point3::from(sum / points.len() as f64)
}

pub(crate) fn bounding_box(points: &[Point3<f64>]) -> (Point3<f64>, Point3<f64>) {
    let mut iter = points.iter();
    let Some(first) = iter.next() else {
        return (Point3::origin(), Point3::origin());
    };
    iter.fold((*first, *first), |(lo, hi), p| (lo.inf(p), hi.sup(p)))
}

pub(crate) fn flatten(points: &[Point3<f64>]) -> DVector<f64> {
    DVector::from_iterator(
        3 * points.len(),
        points.iter().flat_map(|p| [p.x, p.y, p.z]),
    )
}

pub(crate) fn unflatten(flat: &DVector<f64>) -> Vec<Point3<f64>> {
    flat.as_slice()
        .chunks_exact(3)
        .map(|c| Point3::new(c[0], c[1], c[2]))
        .collect()
}

//! Per-vertex mean surface deviation across trials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{ErrorStats, TriMesh};

/// Scalar written for vertices that were never part of an evaluated region.
pub const UNEVALUATED: f64 = -1.0;

/// Streaming per-vertex mean. Each trial contributes the distances of its evaluation region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapAccumulator {
    sum: Vec<f64>,
    count: Vec<u32>,
    trials: usize,
}

impl HeatmapAccumulator {
    pub fn new(vertex_count: usize) -> Self {
        Self {
            sum: vec![0.0; vertex_count],
            count: vec![0; vertex_count],
            trials: 0,
        }
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    /// `distances[k]` belongs to vertex `region[k]`.
    pub fn add(&mut self, region: &[usize], distances: &[f64]) -> Result<()> {
        if region.len() != distances.len() {
            return Err(Error::InvalidArgument(format!(
                "{} region vertices but {} distances",
                region.len(),
                distances.len()
            )));
        }
        if let Some(&v) = region.iter().find(|&&v| v >= self.sum.len()) {
            return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
        }
        for (&v, &d) in region.iter().zip(distances) {
            self.sum[v] += d;
            self.count[v] += 1;
        }
        self.trials += 1;
        Ok(())
    }

    pub fn add_stats(&mut self, region: &[usize], stats: &ErrorStats) -> Result<()> {
        self.add(region, &stats.per_vertex_surface)
    }

    /// Mean over the trials that evaluated each vertex; `None` if none did.
    pub fn means(&self) -> Vec<Option<f64>> {
        self.sum
            .iter()
            .zip(&self.count)
            .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
            .collect()
    }
}

/// Mesh and per-vertex scalars for a heatmap. Unevaluated vertices carry [`UNEVALUATED`].
pub fn emit_heatmap(mesh: &TriMesh, acc: &HeatmapAccumulator) -> Result<(TriMesh, Vec<f64>)> {
    if acc.trials == 0 {
        return Err(Error::InsufficientData(
            "heatmap has no accumulated trials".into(),
        ));
    }
    if mesh.vertex_count() != acc.sum.len() {
        return Err(Error::TopologyMismatch(format!(
            "heatmap has {} vertices, mesh has {}",
            acc.sum.len(),
            mesh.vertex_count()
        )));
    }
    let scalars = acc
        .means()
        .into_iter()
        .map(|m| m.unwrap_or(UNEVALUATED))
        .collect();
    Ok((mesh.clone(), scalars))
}

use std::collections::VecDeque;

use super::{Adjacency, TriMesh};
use crate::error::{Error, Result};

/// Known/unknown labelling of a mesh plus the edge-depth band grown from the boundary.
///
/// The boundary is the set of *known* vertices that share an edge with an unknown vertex; they
/// have depth 0. Depth grows by one per edge hop through known vertices and is recorded up to
/// `max_depth` inclusive. Those vertices form the overlap region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionPartition {
    unknown_mask: Vec<bool>,
    unknown: Vec<usize>,
    known: Vec<usize>,
    boundary: Vec<usize>,
    depth: Vec<Option<u32>>,
    max_depth: u32,
}

/// Partitions `mesh` into known and unknown vertices and grows the overlap band to `max_depth`.
pub fn compute_partition(
    mesh: &TriMesh,
    unknown_indices: &[usize],
    max_depth: u32,
) -> Result<RegionPartition> {
    RegionPartition::with_adjacency(&Adjacency::new(mesh), unknown_indices, max_depth)
}

impl RegionPartition {
    /// Same as [`compute_partition`] with a prebuilt adjacency.
    pub fn with_adjacency(
        adjacency: &Adjacency,
        unknown_indices: &[usize],
        max_depth: u32,
    ) -> Result<Self> {
        let n = adjacency.vertex_count();
        let mut unknown_mask = vec![false; n];
        for &i in unknown_indices {
            if i >= n {
                return Err(Error::InvalidPartition(format!(
                    "unknown index {i} out of range for {n} vertices"
                )));
            }
            unknown_mask[i] = true;
        }
        let unknown: Vec<usize> = (0..n).filter(|&i| unknown_mask[i]).collect();
        if unknown.is_empty() {
            return Err(Error::InvalidPartition("unknown set is empty".into()));
        }
        if unknown.len() == n {
            return Err(Error::InvalidPartition("every vertex is unknown".into()));
        }
        let known: Vec<usize> = (0..n).filter(|&i| !unknown_mask[i]).collect();
        let boundary: Vec<usize> = known
            .iter()
            .copied()
            .filter(|&v| {
                adjacency
                    .neighbors(v)
                    .iter()
                    .any(|&u| unknown_mask[u as usize])
            })
            .collect();

        let mut depth = vec![None; n];
        let mut queue = VecDeque::with_capacity(boundary.len());
        for &b in &boundary {
            depth[b] = Some(0);
            queue.push_back(b);
        }
        while let Some(v) = queue.pop_front() {
            let next = depth[v].unwrap() + 1;
            if next > max_depth {
                continue;
            }
            for &u in adjacency.neighbors(v) {
                let u = u as usize;
                if !unknown_mask[u] && depth[u].is_none() {
                    depth[u] = Some(next);
                    queue.push_back(u);
                }
            }
        }

        Ok(Self {
            unknown_mask,
            unknown,
            known,
            boundary,
            depth,
            max_depth,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.unknown_mask.len()
    }

    pub fn is_unknown(&self, v: usize) -> bool {
        self.unknown_mask[v]
    }

    pub fn unknown(&self) -> &[usize] {
        &self.unknown
    }

    pub fn known(&self) -> &[usize] {
        &self.known
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Edge hops from the boundary for known vertices within the band, `None` elsewhere.
    pub fn depth(&self, v: usize) -> Option<u32> {
        self.depth[v]
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    /// Known vertices with depth `0..=max_depth`, ascending.
    pub fn overlap(&self) -> Vec<usize> {
        (0..self.vertex_count())
            .filter(|&v| self.depth[v].is_some())
            .collect()
    }

    /// Unknown vertices followed by overlap vertices, sorted ascending.
    pub fn unknown_and_overlap(&self) -> Vec<usize> {
        (0..self.vertex_count())
            .filter(|&v| self.unknown_mask[v] || self.depth[v].is_some())
            .collect()
    }
}

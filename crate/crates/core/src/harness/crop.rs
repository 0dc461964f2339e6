//! Planar cropping of homologous meshes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{RegionPartition, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(["x", "y", "z"][self.index()])
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" | "0" => Ok(Axis::X),
            "y" | "1" => Ok(Axis::Y),
            "z" | "2" => Ok(Axis::Z),
            other => Err(Error::InvalidArgument(format!("unknown axis {other:?}"))),
        }
    }
}

/// Which extent of the bounding box the removed slab starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CropDirection {
    /// Remove `coordinate > max - f * length`. With the synthetic templates this is anterior.
    #[default]
    FromMax,
    /// Remove `coordinate < min + f * length`.
    FromMin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropSpec {
    pub axis: Axis,
    /// Percentage of the bounding-box extent to remove, in `(0, 50]`.
    pub fraction_percent: f64,
    pub direction: CropDirection,
}

impl CropSpec {
    pub fn new(axis: Axis, fraction_percent: f64, direction: CropDirection) -> Result<Self> {
        if !(fraction_percent > 0.0 && fraction_percent <= 50.0) {
            return Err(Error::InvalidArgument(format!(
                "crop fraction {fraction_percent} outside (0, 50]"
            )));
        }
        Ok(Self {
            axis,
            fraction_percent,
            direction,
        })
    }

    /// Plane position along the axis for the given mesh's bounding box.
    pub fn plane(&self, mean_shape: &TriMesh) -> f64 {
        let (lo, hi) = mean_shape.bounding_box();
        let a = self.axis.index();
        let f = self.fraction_percent / 100.0;
        match self.direction {
            CropDirection::FromMax => hi[a] - f * (hi[a] - lo[a]),
            CropDirection::FromMin => lo[a] + f * (hi[a] - lo[a]),
        }
    }

    /// Vertices of `mean_shape` on the removed side of the plane, ascending.
    pub fn unknown_vertices(&self, mean_shape: &TriMesh) -> Vec<usize> {
        let plane = self.plane(mean_shape);
        let a = self.axis.index();
        mean_shape
            .vertices()
            .iter()
            .enumerate()
            .filter(|(_, p)| match self.direction {
                CropDirection::FromMax => p[a] > plane,
                CropDirection::FromMin => p[a] < plane,
            })
            .map(|(i, _)| i)
            .collect()
    }
}

/// Partition of `target` whose unknown set is the slab removed from `mean_shape`.
pub fn crop_partition(
    mean_shape: &TriMesh,
    target: &TriMesh,
    spec: &CropSpec,
    max_depth: u32,
) -> Result<RegionPartition> {
    mean_shape.check_topology(target)?;
    let unknown = spec.unknown_vertices(mean_shape);
    crate::mesh::compute_partition(target, &unknown, max_depth)
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list of percentages.
pub fn parse_fractions(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("bad fraction list {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let values: Vec<f64> = if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + i as f64 * step).collect()
    } else if parts.len() == 1 {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?
    } else {
        return Err(bad());
    };
    if values.is_empty() || values.iter().any(|&f| !(f > 0.0 && f <= 50.0)) {
        return Err(bad());
    }
    Ok(values)
}

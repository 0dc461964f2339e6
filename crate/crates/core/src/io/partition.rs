//! JSON partition documents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::crop::Axis;

pub const PARTITION_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropProvenance {
    pub axis: Axis,
    /// Percent.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub version: u32,
    pub vertex_count: usize,
    /// Sorted and unique.
    pub unknown_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop: Option<CropProvenance>,
}

impl PartitionFile {
    /// Sorts and deduplicates `unknown`.
    pub fn new(
        vertex_count: usize,
        unknown: &[usize],
        crop: Option<CropProvenance>,
    ) -> Result<Self> {
        let mut unknown_indices = unknown.to_vec();
        unknown_indices.sort_unstable();
        unknown_indices.dedup();
        let p = Self {
            version: PARTITION_VERSION,
            vertex_count,
            unknown_indices,
            crop,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != PARTITION_VERSION {
            return Err(Error::MalformedData {
                location: "version".into(),
                message: format!("unsupported version {}", self.version),
            });
        }
        for (k, w) in self.unknown_indices.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::MalformedData {
                    location: format!("unknown_indices[{}]", k + 1),
                    message: "indices must be strictly increasing".into(),
                });
            }
        }
        if let Some((k, &i)) = self
            .unknown_indices
            .iter()
            .enumerate()
            .find(|(_, &i)| i >= self.vertex_count)
        {
            return Err(Error::IndexOutOfRange {
                index: i as i64,
                vertex_count: self.vertex_count,
                location: format!("unknown_indices[{k}]"),
            });
        }
        Ok(())
    }

    /// Complement of the unknown set.
    pub fn known_indices(&self) -> Vec<usize> {
        let mut is_unknown = vec![false; self.vertex_count];
        self.unknown_indices
            .iter()
            .for_each(|&i| is_unknown[i] = true);
        (0..self.vertex_count).filter(|&i| !is_unknown[i]).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("partition serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text).map_err(|e| Error::MalformedData {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        p.validate()?;
        Ok(p)
    }
}

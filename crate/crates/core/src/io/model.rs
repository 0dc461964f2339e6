//! Flat little-endian shape model container.
//!
//! Layout: `"SSM1"`, then `u32` vertex count `V`, triangle count `T`, mode count `N`, sample
//! count; then `f64` mean (`3V`), modes (`N x 3V`, one mode after another), standard deviations
//! (`N`); then `u32` triangle indices (`3T`).

use nalgebra::{DMatrix, DVector};

use crate::align::ShapeModel;
use crate::error::{Error, Result};
use crate::mesh::TriMesh;

pub const MODEL_MAGIC: &[u8; 4] = b"SSM1";
/// Largest tolerated entry of `|modes^T modes - I|` on load.
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-8;
const HEADER_LEN: usize = 4 + 4 * 4;

pub fn encode_model(model: &ShapeModel) -> Vec<u8> {
    let v = model.vertex_count();
    let t = model.mean_mesh().triangle_count();
    let n = model.mode_count();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * (3 * v * (n + 1) + n) + 12 * t);
    out.extend_from_slice(MODEL_MAGIC);
    for x in [v, t, n, model.sample_count()] {
        out.extend_from_slice(&(x as u32).to_le_bytes());
    }
    let f64s = model
        .mean()
        .iter()
        .chain(model.modes().as_slice())
        .chain(model.stddevs());
    for x in f64s {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for tri in model.mean_mesh().triangles() {
        for i in tri {
            out.extend_from_slice(&i.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl Cursor<'_> {
    fn u32(&mut self) -> u32 {
        let v = u32::from_le_bytes(self.bytes[self.offset..self.offset + 4].try_into().unwrap());
        self.offset += 4;
        v
    }

    fn f64s(&mut self, n: usize) -> Vec<f64> {
        let out = self.bytes[self.offset..self.offset + 8 * n]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        self.offset += 8 * n;
        out
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<ShapeModel> {
    if bytes.len() < 4 || &bytes[..4] != MODEL_MAGIC {
        let found = String::from_utf8_lossy(&bytes[..bytes.len().min(4)]).into_owned();
        return Err(Error::BadMagic {
            expected: "SSM1".into(),
            found,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    let mut c = Cursor { bytes, offset: 4 };
    let (v, t, n, samples) = (
        c.u32() as usize,
        c.u32() as usize,
        c.u32() as usize,
        c.u32() as usize,
    );
    let expected = (3 * v)
        .checked_mul(n + 1)
        .and_then(|x| x.checked_add(n))
        .and_then(|x| x.checked_mul(8))
        .and_then(|x| x.checked_add(12usize.checked_mul(t)?))
        .and_then(|x| x.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::MalformedData {
            location: "header".into(),
            message: "sizes overflow".into(),
        })?;
    if bytes.len() < expected {
        return Err(Error::Truncated(format!(
            "expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    if bytes.len() > expected {
        return Err(Error::MalformedData {
            location: format!("byte offset {expected}"),
            message: format!("{} trailing bytes", bytes.len() - expected),
        });
    }
    let mean = DVector::from_vec(c.f64s(3 * v));
    let modes = DMatrix::from_vec(3 * v, n, c.f64s(3 * v * n));
    let stddevs = c.f64s(n);
    let mut triangles = Vec::with_capacity(t);
    for k in 0..t {
        let offset = c.offset;
        let tri = [c.u32(), c.u32(), c.u32()];
        if let Some(&bad) = tri.iter().find(|&&i| i as usize >= v) {
            return Err(Error::IndexOutOfRange {
                index: bad as i64,
                vertex_count: v,
                location: format!("triangle {k} at byte offset {offset}"),
            });
        }
        triangles.push(tri);
    }
    let topology = TriMesh::new(vec![nalgebra::Point3::origin(); v], triangles)?;
    let model = ShapeModel::from_parts(&topology, mean, modes, stddevs, samples)?;
    let deviation = model.orthonormality_error();
    if !(deviation <= ORTHONORMALITY_TOLERANCE) {
        return Err(Error::NotOrthonormal { deviation });
    }
    Ok(model)
}

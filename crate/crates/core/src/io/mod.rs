//! Mesh, model, partition and report files.

mod model;
mod obj;
mod partition;
mod ply;
pub mod report;

use std::fs;
use std::path::Path;

use crate::align::ShapeModel;
use crate::error::{Error, Result};
use crate::mesh::TriMesh;

pub use model::{decode_model, encode_model, MODEL_MAGIC, ORTHONORMALITY_TOLERANCE};
pub use obj::{encode_obj, parse_obj};
pub use partition::{CropProvenance, PartitionFile, PARTITION_VERSION};
pub use ply::{encode_ply, parse_ply, PlyFormat};

/// A mesh plus the optional per-vertex `quality` scalar of a PLY file.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshData {
    pub mesh: TriMesh,
    pub quality: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Ply,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("ply") => Ok(MeshFormat::Ply),
            Some("obj") => Ok(MeshFormat::Obj),
            _ => Err(Error::InvalidArgument(format!(
                "{}: unknown mesh extension (expected .ply or .obj)",
                path.display()
            ))),
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a PLY or OBJ mesh without the zero-area check. Partial meshes whose unknown vertices
/// were zeroed are read this way.
pub fn read_mesh_data(path: impl AsRef<Path>) -> Result<MeshData> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    match MeshFormat::from_path(path)? {
        MeshFormat::Ply => parse_ply(&bytes),
        MeshFormat::Obj => {
            let text = String::from_utf8(bytes).map_err(|e| Error::MalformedData {
                location: format!("byte offset {}", e.utf8_error().valid_up_to()),
                message: "OBJ is not valid UTF-8".into(),
            })?;
            Ok(MeshData {
                mesh: parse_obj(&text)?,
                quality: None,
            })
        }
    }
}

/// Reads a PLY or OBJ mesh and rejects zero-area triangles.
pub fn read_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let mesh = read_mesh_data(path)?.mesh;
    mesh.validate_geometry()?;
    Ok(mesh)
}

/// Writes binary PLY or OBJ depending on the extension.
pub fn write_mesh(path: impl AsRef<Path>, mesh: &TriMesh) -> Result<()> {
    let path = path.as_ref();
    match MeshFormat::from_path(path)? {
        MeshFormat::Ply => write_ply(path, mesh, None, PlyFormat::BinaryLittleEndian),
        MeshFormat::Obj => write_bytes(path, encode_obj(mesh).as_bytes()),
    }
}

pub fn write_ply(
    path: impl AsRef<Path>,
    mesh: &TriMesh,
    quality: Option<&[f64]>,
    format: PlyFormat,
) -> Result<()> {
    write_bytes(path.as_ref(), &encode_ply(mesh, quality, format)?)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ShapeModel> {
    decode_model(&read_bytes(path.as_ref())?)
}

pub fn write_model(path: impl AsRef<Path>, model: &ShapeModel) -> Result<()> {
    write_bytes(path.as_ref(), &encode_model(model))
}

pub fn read_partition(path: impl AsRef<Path>) -> Result<PartitionFile> {
    let path = path.as_ref();
    let text = String::from_utf8(read_bytes(path)?).map_err(|_| Error::MalformedData {
        location: path.display().to_string(),
        message: "partition file is not valid UTF-8".into(),
    })?;
    PartitionFile::from_json(&text)
}

pub fn write_partition(path: impl AsRef<Path>, partition: &PartitionFile) -> Result<()> {
    write_bytes(path.as_ref(), partition.to_json().as_bytes())
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    write_bytes(path.as_ref(), text.as_bytes())
}

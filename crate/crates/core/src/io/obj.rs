//! Wavefront OBJ, triangles only.

use std::fmt::Write as _;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Parses OBJ text. Texture and normal references in faces are ignored; any face that is not a
/// triangle is rejected.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces: Vec<(usize, [i64; 3])> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let location = || format!("line {line_no}");
        let line = line.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .map(|t| {
                        t.parse::<f64>().map_err(|_| Error::MalformedData {
                            location: location(),
                            message: format!("cannot parse {t:?} as a number"),
                        })
                    })
                    .collect::<Result<_>>()?;
                if !(3..=4).contains(&coords.len()) || !coords[..3].iter().all(|c| c.is_finite()) {
                    return Err(Error::MalformedData {
                        location: location(),
                        message: "vertex needs three finite coordinates".into(),
                    });
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(Error::NonTriangleFace {
                        face: faces.len(),
                        location: location(),
                        vertices: refs.len(),
                    });
                }
                let mut tri = [0i64; 3];
                for (t, r) in tri.iter_mut().zip(&refs) {
                    let head = r.split('/').next().unwrap_or("");
                    *t = head.parse().map_err(|_| Error::MalformedData {
                        location: location(),
                        message: format!("bad vertex reference {r:?}"),
                    })?;
                }
                faces.push((line_no, tri));
            }
            _ => {}
        }
    }
    let n = vertices.len() as i64;
    let mut triangles = Vec::with_capacity(faces.len());
    for (line_no, tri) in faces {
        let mut out = [0u32; 3];
        for (o, &i) in out.iter_mut().zip(&tri) {
            // 1-based; negative indices count back from the end.
            let resolved = if i > 0 { i - 1 } else { n + i };
            if i == 0 || resolved < 0 || resolved >= n {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    vertex_count: vertices.len(),
                    location: format!("line {line_no}"),
                });
            }
            *o = resolved as u32;
        }
        triangles.push(out);
    }
    TriMesh::new(vertices, triangles)
}

/// OBJ text with coordinates at 9 significant digits.
pub fn encode_obj(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(mesh.vertex_count() * 48 + mesh.triangle_count() * 24);
    for p in mesh.vertices() {
        let _ = writeln!(s, "v {:.8e} {:.8e} {:.8e}", p.x, p.y, p.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

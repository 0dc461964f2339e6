//! PLY meshes, ASCII and binary little-endian, with an optional per-vertex `quality` scalar.

use std::fmt::Write as _;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

use super::MeshData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlyFormat {
    Ascii,
    #[default]
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, Scalar::F32 | Scalar::F64)
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar {
        ty: Scalar,
        name: String,
    },
    List {
        count: Scalar,
        item: Scalar,
        name: String,
    },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    /// Byte offset of the body.
    body: usize,
    /// Line number of the first body line (ASCII).
    body_line: usize,
}

fn header_err(line: usize, message: impl Into<String>) -> Error {
    Error::MalformedHeader {
        line,
        message: message.into(),
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut offset = 0;
    let mut line_no = 0;
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        line_no += 1;
        let end = bytes[offset..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| header_err(line_no, "missing end_header"))?;
        let raw = &bytes[offset..offset + end];
        offset += end + 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| header_err(line_no, "header is not ASCII"))?
            .trim_end_matches('\r')
            .trim();
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if line_no == 1 {
            if line != "ply" {
                return Err(header_err(1, "first line must be \"ply\""));
            }
            continue;
        }
        match tokens.first().copied() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                if tokens.len() != 3 {
                    return Err(header_err(
                        line_no,
                        "format line needs a type and a version",
                    ));
                }
                format = Some(match tokens[1] {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    other => {
                        return Err(header_err(line_no, format!("unsupported format {other}")))
                    }
                });
            }
            Some("element") => {
                if tokens.len() != 3 {
                    return Err(header_err(line_no, "element line needs a name and a count"));
                }
                let count = tokens[2].parse().map_err(|_| {
                    header_err(line_no, format!("bad element count {:?}", tokens[2]))
                })?;
                elements.push(Element {
                    name: tokens[1].to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| header_err(line_no, "property before any element"))?;
                let ty = |s: &str| {
                    Scalar::parse(s)
                        .ok_or_else(|| header_err(line_no, format!("unknown type {s:?}")))
                };
                let property = match tokens.as_slice() {
                    ["property", "list", count, item, name] => {
                        let count = ty(count)?;
                        if !count.is_integer() {
                            return Err(header_err(line_no, "list count type must be an integer"));
                        }
                        Property::List {
                            count,
                            item: ty(item)?,
                            name: name.to_string(),
                        }
                    }
                    ["property", t, name] => Property::Scalar {
                        ty: ty(t)?,
                        name: name.to_string(),
                    },
                    _ => return Err(header_err(line_no, "malformed property line")),
                };
                element.properties.push(property);
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(header_err(line_no, format!("unexpected keyword {other:?}")))
            }
        }
    }
    let format = format.ok_or_else(|| header_err(line_no, "missing format line"))?;
    Ok(Header {
        format,
        elements,
        body: offset,
        body_line: line_no + 1,
    })
}

/// Values of one element instance: scalars as one-entry vectors, lists in full.
type Row = Vec<Vec<f64>>;

trait RowSource {
    fn next_row(&mut self, element: &Element) -> Result<Row>;
    fn location(&self) -> String;
}

struct AsciiRows<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    first_line: usize,
    current: usize,
}

impl RowSource for AsciiRows<'_> {
    fn next_row(&mut self, element: &Element) -> Result<Row> {
        let (idx, line) = loop {
            match self.lines.next() {
                Some((i, l)) if !l.trim().is_empty() => break (i, l),
                Some(_) => continue,
                None => {
                    return Err(Error::Truncated(format!(
                        "ASCII PLY ended before all {} records were read",
                        element.name
                    )))
                }
            }
        };
        self.current = self.first_line + idx;
        let mut tokens = line.split_whitespace();
        let location = self.location();
        let mut next = |what: &str| -> Result<f64> {
            let tok = tokens.next().ok_or_else(|| Error::MalformedData {
                location: location.clone(),
                message: format!("missing value for {what}"),
            })?;
            tok.parse::<f64>().map_err(|_| Error::MalformedData {
                location: location.clone(),
                message: format!("cannot parse {tok:?} as a number"),
            })
        };
        let mut row = Vec::with_capacity(element.properties.len());
        for p in &element.properties {
            match p {
                Property::Scalar { name, .. } => row.push(vec![next(name)?]),
                Property::List { name, .. } => {
                    let n = next(name)?;
                    if n < 0.0 || n.fract() != 0.0 {
                        return Err(Error::MalformedData {
                            location,
                            message: format!("bad list length {n}"),
                        });
                    }
                    row.push((0..n as usize).map(|_| next(name)).collect::<Result<_>>()?);
                }
            }
        }
        if let Some(extra) = tokens.next() {
            return Err(Error::MalformedData {
                location,
                message: format!("unexpected trailing value {extra:?}"),
            });
        }
        Ok(row)
    }

    fn location(&self) -> String {
        format!("line {}", self.current)
    }
}

struct BinaryRows<'a> {
    bytes: &'a [u8],
    offset: usize,
    row_start: usize,
}

impl BinaryRows<'_> {
    fn take(&mut self, ty: Scalar) -> Result<f64> {
        let n = ty.size();
        if self.offset + n > self.bytes.len() {
            return Err(Error::Truncated(format!(
                "binary PLY body ends at byte {} inside a record starting at byte {}",
                self.bytes.len(),
                self.row_start
            )));
        }
        let v = ty.decode(&self.bytes[self.offset..self.offset + n]);
        self.offset += n;
        Ok(v)
    }
}

impl RowSource for BinaryRows<'_> {
    fn next_row(&mut self, element: &Element) -> Result<Row> {
        self.row_start = self.offset;
        let mut row = Vec::with_capacity(element.properties.len());
        for p in &element.properties {
            match p {
                Property::Scalar { ty, .. } => row.push(vec![self.take(*ty)?]),
                Property::List { count, item, .. } => {
                    let n = self.take(*count)?;
                    if n < 0.0 {
                        return Err(Error::MalformedData {
                            location: self.location(),
                            message: format!("negative list length {n}"),
                        });
                    }
                    row.push(
                        (0..n as usize)
                            .map(|_| self.take(*item))
                            .collect::<Result<_>>()?,
                    );
                }
            }
        }
        Ok(row)
    }

    fn location(&self) -> String {
        format!("byte offset {}", self.row_start)
    }
}

/// Parses a PLY document held in memory. Zero-area triangles are not checked here.
pub fn parse_ply(bytes: &[u8]) -> Result<MeshData> {
    let header = parse_header(bytes)?;
    let body = &bytes[header.body..];
    let mut source: Box<dyn RowSource + '_> = match header.format {
        PlyFormat::Ascii => {
            let text = std::str::from_utf8(body).map_err(|e| Error::MalformedData {
                location: format!("byte offset {}", header.body + e.valid_up_to()),
                message: "ASCII body is not valid UTF-8".into(),
            })?;
            Box::new(AsciiRows {
                lines: text.lines().enumerate(),
                first_line: header.body_line,
                current: 0,
            })
        }
        PlyFormat::BinaryLittleEndian => Box::new(BinaryRows {
            bytes,
            offset: header.body,
            row_start: header.body,
        }),
    };

    let vertex_el = header
        .elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or_else(|| header_err(0, "no vertex element"))?;
    let face_el = header
        .elements
        .iter()
        .find(|e| e.name == "face")
        .ok_or_else(|| header_err(0, "no face element"))?;
    let find = |el: &Element, name: &str| el.properties.iter().position(|p| p.name() == name);
    let coord = |name: &str| -> Result<usize> {
        let i = find(vertex_el, name)
            .ok_or_else(|| header_err(0, format!("vertex has no {name} property")))?;
        match vertex_el.properties[i] {
            Property::Scalar { .. } => Ok(i),
            Property::List { .. } => {
                Err(header_err(0, format!("vertex property {name} is a list")))
            }
        }
    };
    let (ix, iy, iz) = (coord("x")?, coord("y")?, coord("z")?);
    let iq = find(vertex_el, "quality");
    let iface = find(face_el, "vertex_indices")
        .or_else(|| find(face_el, "vertex_index"))
        .ok_or_else(|| header_err(0, "face has no vertex_indices property"))?;
    if !matches!(face_el.properties[iface], Property::List { .. }) {
        return Err(header_err(0, "face vertex_indices must be a list"));
    }

    let mut vertices = Vec::with_capacity(vertex_el.count);
    let mut quality = iq.map(|_| Vec::with_capacity(vertex_el.count));
    let mut triangles = Vec::with_capacity(face_el.count);
    for element in &header.elements {
        for k in 0..element.count {
            let row = source.next_row(element)?;
            if element.name == "vertex" {
                let p = Point3::new(row[ix][0], row[iy][0], row[iz][0]);
                if !p.iter().all(|c| c.is_finite()) {
                    return Err(Error::MalformedData {
                        location: source.location(),
                        message: format!("vertex {k} has a non-finite coordinate"),
                    });
                }
                vertices.push(p);
                if let (Some(q), Some(i)) = (quality.as_mut(), iq) {
                    q.push(row[i].first().copied().unwrap_or(0.0));
                }
            } else if element.name == "face" {
                let idx = &row[iface];
                if idx.len() != 3 {
                    return Err(Error::NonTriangleFace {
                        face: k,
                        location: source.location(),
                        vertices: idx.len(),
                    });
                }
                let mut tri = [0u32; 3];
                for (t, &i) in tri.iter_mut().zip(idx) {
                    if i < 0.0 || i >= vertex_el.count as f64 || i.fract() != 0.0 {
                        return Err(Error::IndexOutOfRange {
                            index: i as i64,
                            vertex_count: vertex_el.count,
                            location: source.location(),
                        });
                    }
                    *t = i as u32;
                }
                triangles.push(tri);
            }
        }
    }
    Ok(MeshData {
        mesh: TriMesh::new(vertices, triangles)?,
        quality,
    })
}

/// Serializes a mesh as PLY with `double` coordinates and `int` indices.
pub fn encode_ply(mesh: &TriMesh, quality: Option<&[f64]>, format: PlyFormat) -> Result<Vec<u8>> {
    if let Some(q) = quality {
        if q.len() != mesh.vertex_count() {
            return Err(Error::InvalidArgument(format!(
                "{} quality values for {} vertices",
                q.len(),
                mesh.vertex_count()
            )));
        }
    }
    let mut header = String::from("ply\n");
    header.push_str(match format {
        PlyFormat::Ascii => "format ascii 1.0\n",
        PlyFormat::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    let _ = writeln!(header, "element vertex {}", mesh.vertex_count());
    header.push_str("property double x\nproperty double y\nproperty double z\n");
    if quality.is_some() {
        header.push_str("property double quality\n");
    }
    let _ = writeln!(header, "element face {}", mesh.triangle_count());
    header.push_str("property list uchar int vertex_indices\nend_header\n");

    let mut out = header.into_bytes();
    match format {
        PlyFormat::Ascii => {
            let mut body = String::new();
            for (i, p) in mesh.vertices().iter().enumerate() {
                let _ = write!(body, "{:?} {:?} {:?}", p.x, p.y, p.z);
                if let Some(q) = quality {
                    let _ = write!(body, " {:?}", q[i]);
                }
                body.push('\n');
            }
            for t in mesh.triangles() {
                let _ = writeln!(body, "3 {} {} {}", t[0], t[1], t[2]);
            }
            out.extend_from_slice(body.as_bytes());
        }
        PlyFormat::BinaryLittleEndian => {
            out.reserve(mesh.vertex_count() * 32 + mesh.triangle_count() * 13);
            for (i, p) in mesh.vertices().iter().enumerate() {
                for c in p.iter() {
                    out.extend_from_slice(&c.to_le_bytes());
                }
                if let Some(q) = quality {
                    out.extend_from_slice(&q[i].to_le_bytes());
                }
            }
            for t in mesh.triangles() {
                out.push(3);
                for &i in t {
                    out.extend_from_slice(&(i as i32).to_le_bytes());
                }
            }
        }
    }
    Ok(out)
}

//! Mesh loading (OBJ, ASCII/binary PLY) and debug export of meshes and point clouds.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{PointCloud, TriangleMesh, Vec3};
use crate::{Error, Result};

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), msg: msg.into() }
}

/// Loads a mesh, choosing the parser by file extension (`.obj` or `.ply`).
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("obj") => load_obj(path),
        Some("ply") => load_ply(path),
        other => Err(parse_err(path, format!("unsupported mesh extension {other:?}"))),
    }
}

/// Fan-triangulates a polygon given as vertex indices.
fn fan(poly: &[u32], faces: &mut Vec<[u32; 3]>) {
    for i in 1..poly.len().saturating_sub(1) {
        faces.push([poly[0], poly[i], poly[i + 1]]);
    }
}

pub fn parse_obj(text: &str, path: &Path) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 1)))?;
                if c.len() != 3 {
                    return Err(parse_err(path, format!("line {}: vertex needs 3 coordinates", lineno + 1)));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let idx: i64 =
                        first.parse().map_err(|e| parse_err(path, format!("line {}: {e}", lineno + 1)))?;
                    let resolved = if idx < 0 { vertices.len() as i64 + idx } else { idx - 1 };
                    if resolved < 0 {
                        return Err(parse_err(path, format!("line {}: bad index {idx}", lineno + 1)));
                    }
                    poly.push(resolved as u32);
                }
                if poly.len() < 3 {
                    return Err(parse_err(path, format!("line {}: face with {} vertices", lineno + 1, poly.len())));
                }
                fan(&poly, &mut faces);
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces)
}

pub fn load_obj(path: &Path) -> Result<TriangleMesh> {
    parse_obj(&fs::read_to_string(path)?, path)
}

pub fn write_obj(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in &mesh.faces {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum PlyFormat {
    Ascii,
    BinaryLe,
    BinaryBe,
}

#[derive(Clone, Copy, Debug)]
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
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read(self, b: &[u8], le: bool) -> f64 {
        macro_rules! rd {
            ($t:ty, $n:expr) => {{
                let arr: [u8; $n] = b[..$n].try_into().unwrap();
                (if le { <$t>::from_le_bytes(arr) } else { <$t>::from_be_bytes(arr) }) as f64
            }};
        }
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => rd!(i16, 2),
            Self::U16 => rd!(u16, 2),
            Self::I32 => rd!(i32, 4),
            Self::U32 => rd!(u32, 4),
            Self::F32 => rd!(f32, 4),
            Self::F64 => rd!(f64, 8),
        }
    }
}

#[derive(Debug)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

/// Parses ASCII and binary PLY meshes (vertex x/y/z plus `vertex_indices` face lists).
pub fn parse_ply(bytes: &[u8], path: &Path) -> Result<TriangleMesh> {
    let mut pos = 0;
    let next_line = |pos: &mut usize| -> Result<String> {
        let start = *pos;
        let end = bytes[start..].iter().position(|&c| c == b'\n').map(|e| start + e).ok_or_else(|| parse_err(path, "truncated header"))?;
        *pos = end + 1;
        Ok(String::from_utf8_lossy(&bytes[start..end]).trim().to_string())
    };
    if next_line(&mut pos)? != "ply" {
        return Err(parse_err(path, "missing ply magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line(&mut pos)?;
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.first().copied() {
            Some("format") => {
                format = Some(match tok.get(1).copied() {
                    Some("ascii") => PlyFormat::Ascii,
                    Some("binary_little_endian") => PlyFormat::BinaryLe,
                    Some("binary_big_endian") => PlyFormat::BinaryBe,
                    f => return Err(parse_err(path, format!("unknown format {f:?}"))),
                })
            }
            Some("element") if tok.len() == 3 => elements.push(Element {
                name: tok[1].to_string(),
                count: tok[2].parse().map_err(|_| parse_err(path, format!("bad element count in '{line}'")))?,
                props: Vec::new(),
            }),
            Some("property") => {
                let el = elements.last_mut().ok_or_else(|| parse_err(path, "property before element"))?;
                let bad = || parse_err(path, format!("bad property '{line}'"));
                if tok.get(1) == Some(&"list") && tok.len() == 5 {
                    el.props.push(Property::List(
                        tok[4].to_string(),
                        Scalar::parse(tok[2]).ok_or_else(bad)?,
                        Scalar::parse(tok[3]).ok_or_else(bad)?,
                    ));
                } else if tok.len() == 3 {
                    el.props.push(Property::Scalar(tok[2].to_string(), Scalar::parse(tok[1]).ok_or_else(bad)?));
                } else {
                    return Err(bad());
                }
            }
            Some("end_header") => break,
            _ => {}
        }
    }
    let format = format.ok_or_else(|| parse_err(path, "missing format line"))?;

    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let body = &bytes[pos..];
    let mut ascii_tokens = if format == PlyFormat::Ascii {
        Some(std::str::from_utf8(body).map_err(|e| parse_err(path, e.to_string()))?.split_ascii_whitespace())
    } else {
        None
    };
    let mut offset = 0usize;
    let le = format == PlyFormat::BinaryLe;
    let mut read = |ty: Scalar| -> Result<f64> {
        if let Some(tokens) = ascii_tokens.as_mut() {
            let t = tokens.next().ok_or_else(|| parse_err(path, "truncated body"))?;
            t.parse::<f64>().map_err(|e| parse_err(path, e.to_string()))
        } else {
            let end = offset + ty.size();
            if end > body.len() {
                return Err(parse_err(path, "truncated body"));
            }
            let v = ty.read(&body[offset..end], le);
            offset = end;
            Ok(v)
        }
    };
    for el in &elements {
        for _ in 0..el.count {
            let mut xyz = [0.0; 3];
            let mut poly = Vec::new();
            for prop in &el.props {
                match prop {
                    Property::Scalar(name, ty) => {
                        let v = read(*ty)?;
                        if el.name == "vertex" {
                            match name.as_str() {
                                "x" => xyz[0] = v,
                                "y" => xyz[1] = v,
                                "z" => xyz[2] = v,
                                _ => {}
                            }
                        }
                    }
                    Property::List(name, count_ty, item_ty) => {
                        let n = read(*count_ty)? as usize;
                        let keep = el.name == "face" && (name == "vertex_indices" || name == "vertex_index");
                        for _ in 0..n {
                            let v = read(*item_ty)?;
                            if keep {
                                poly.push(v as u32);
                            }
                        }
                    }
                }
            }
            if el.name == "vertex" {
                vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            } else if el.name == "face" {
                if poly.len() < 3 {
                    return Err(parse_err(path, format!("face with {} vertices", poly.len())));
                }
                fan(&poly, &mut faces);
            }
        }
    }
    TriangleMesh::new(vertices, faces)
}

pub fn load_ply(path: &Path) -> Result<TriangleMesh> {
    parse_ply(&fs::read(path)?, path)
}

/// Writes an ASCII PLY point cloud with optional normals and named per-point scalar fields.
pub fn write_ply_cloud(cloud: &PointCloud, scalars: &[(&str, &[f64])], path: &Path) -> Result<()> {
    for (name, values) in scalars {
        if values.len() != cloud.len() {
            return Err(Error::InvalidArgument(format!("scalar field {name} has {} values for {} points", values.len(), cloud.len())));
        }
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "ply\nformat ascii 1.0\nelement vertex {}", cloud.len())?;
    writeln!(w, "property double x\nproperty double y\nproperty double z")?;
    if cloud.normals.is_some() {
        writeln!(w, "property double nx\nproperty double ny\nproperty double nz")?;
    }
    for (name, _) in scalars {
        writeln!(w, "property double {name}")?;
    }
    writeln!(w, "end_header")?;
    for i in 0..cloud.len() {
        let p = cloud.points[i];
        write!(w, "{} {} {}", p.x, p.y, p.z)?;
        if let Some(ns) = &cloud.normals {
            write!(w, " {} {} {}", ns[i].x, ns[i].y, ns[i].z)?;
        }
        for (_, values) in scalars {
            write!(w, " {}", values[i])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

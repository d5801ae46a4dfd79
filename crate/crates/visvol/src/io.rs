//! Mesh file IO: Wavefront OBJ (required) and binary little-endian PLY
//! (read only).
//!
//! OBJ faces with more than three vertices are fan-triangulated. Degenerate
//! triangles (area below 1e-12 m²) are dropped at load and counted so real
//! scenes with sliver faces still load cleanly.

use crate::math::Vec3;
use crate::mesh::{MeshError, TriangleMesh};
use std::fs;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// Area threshold below which a loaded triangle is discarded.
const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("cannot open {path}: {source}")]
    Open { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{path}: mesh has no triangles")]
    EmptyMesh { path: String },
    #[error("mesh has no triangles, refusing to write {path}")]
    EmptyWrite { path: String },
    #[error("invalid mesh: {0}")]
    Invalid(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadStats {
    /// Triangles dropped because their area was below tolerance.
    pub dropped_degenerate: usize,
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshIoError> {
    load_mesh_with_stats(path).map(|(mesh, _)| mesh)
}

pub fn load_mesh_with_stats(path: impl AsRef<Path>) -> Result<(TriangleMesh, LoadStats), MeshIoError> {
    let path = path.as_ref();
    let is_ply = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("ply"))
        .unwrap_or(false);
    if is_ply {
        load_ply(path)
    } else {
        load_obj(path)
    }
}

/// Writes an ASCII OBJ. Coordinates use the shortest representation that
/// parses back to the identical f64, so a save/load round trip preserves
/// geometry exactly.
pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<(), MeshIoError> {
    let path = path.as_ref();
    if mesh.triangles.is_empty() {
        return Err(MeshIoError::EmptyWrite { path: display(path) });
    }
    let mut out = String::with_capacity(mesh.vertices.len() * 24 + mesh.triangles.len() * 16);
    for v in &mesh.vertices {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for t in &mesh.triangles {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    let mut file = fs::File::create(path).map_err(|source| MeshIoError::Write { path: display(path), source })?;
    file.write_all(out.as_bytes())
        .map_err(|source| MeshIoError::Write { path: display(path), source })?;
    Ok(())
}

/// Reads polygon vertices from a vertices-only OBJ polyline (the format
/// interactive modeling tools export): "v" lines in file order, faces and
/// line elements ignored.
pub fn read_polygon_obj(path: impl AsRef<Path>) -> Result<Vec<Vec3>, MeshIoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| MeshIoError::Open { path: display(path), source })?;
    let mut vertices = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let mut tokens = raw.split_whitespace();
        if tokens.next() != Some("v") {
            continue;
        }
        let mut coords = [0.0f64; 3];
        for c in &mut coords {
            let tok = tokens.next().ok_or_else(|| MeshIoError::Parse {
                path: display(path),
                line: idx + 1,
                msg: "vertex needs 3 coordinates".into(),
            })?;
            *c = tok.parse().map_err(|_| MeshIoError::Parse {
                path: display(path),
                line: idx + 1,
                msg: format!("bad coordinate '{tok}'"),
            })?;
        }
        vertices.push(Vec3::from(coords));
    }
    if vertices.is_empty() {
        return Err(MeshIoError::EmptyMesh { path: display(path) });
    }
    Ok(vertices)
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * (b - a).cross(c - a).length()
}

/// Fan-triangulates `indices` into `triangles`, dropping degenerate fans.
fn push_face(
    vertices: &[Vec3],
    indices: &[u32],
    triangles: &mut Vec<[u32; 3]>,
    dropped: &mut usize,
) {
    for k in 1..indices.len() - 1 {
        let tri = [indices[0], indices[k], indices[k + 1]];
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            *dropped += 1;
            continue;
        }
        let area = triangle_area(
            vertices[tri[0] as usize],
            vertices[tri[1] as usize],
            vertices[tri[2] as usize],
        );
        if area <= DEGENERATE_AREA {
            *dropped += 1;
        } else {
            triangles.push(tri);
        }
    }
}

fn load_obj(path: &Path) -> Result<(TriangleMesh, LoadStats), MeshIoError> {
    let text = fs::read_to_string(path).map_err(|source| MeshIoError::Open { path: display(path), source })?;
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut stats = LoadStats::default();

    let parse_err = |line: usize, msg: String| MeshIoError::Parse { path: display(path), line, msg };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| parse_err(line_no, "vertex needs 3 coordinates".into()))?;
                    *c = tok
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad coordinate '{tok}'")))?;
                }
                vertices.push(Vec3::from(coords));
            }
            Some("f") => {
                let mut indices: Vec<u32> = Vec::with_capacity(4);
                for tok in tokens {
                    // "i", "i/t", "i/t/n", "i//n" forms: vertex index first
                    let first = tok.split('/').next().unwrap_or("");
                    let value: i64 = first
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad face index '{tok}'")))?;
                    if value < 0 {
                        return Err(parse_err(line_no, format!("negative face index '{tok}' unsupported")));
                    }
                    if value == 0 {
                        return Err(parse_err(line_no, "face index 0 (indices are 1-based)".into()));
                    }
                    let zero_based = (value - 1) as usize;
                    if zero_based >= vertices.len() {
                        return Err(parse_err(
                            line_no,
                            format!("face index {value} exceeds {} vertices", vertices.len()),
                        ));
                    }
                    indices.push(zero_based as u32);
                }
                if indices.len() < 3 {
                    return Err(parse_err(line_no, "face needs at least 3 indices".into()));
                }
                push_face(&vertices, &indices, &mut triangles, &mut stats.dropped_degenerate);
            }
            // normals, texcoords, groups, materials, smoothing: ignored
            Some(_) => {}
            None => {}
        }
    }

    if triangles.is_empty() {
        return Err(MeshIoError::EmptyMesh { path: display(path) });
    }
    let mesh = TriangleMesh::new(vertices, triangles)?;
    Ok((mesh, stats))
}

#[derive(Clone, Copy, PartialEq)]
enum PlyType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl PlyType {
    fn parse(tok: &str) -> Option<PlyType> {
        Some(match tok {
            "char" | "int8" => PlyType::I8,
            "uchar" | "uint8" => PlyType::U8,
            "short" | "int16" => PlyType::I16,
            "ushort" | "uint16" => PlyType::U16,
            "int" | "int32" => PlyType::I32,
            "uint" | "uint32" => PlyType::U32,
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyType::I8 | PlyType::U8 => 1,
            PlyType::I16 | PlyType::U16 => 2,
            PlyType::I32 | PlyType::U32 | PlyType::F32 => 4,
            PlyType::F64 => 8,
        }
    }

    fn read_f64(self, bytes: &[u8]) -> f64 {
        match self {
            PlyType::I8 => bytes[0] as i8 as f64,
            PlyType::U8 => bytes[0] as f64,
            PlyType::I16 => i16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            PlyType::U16 => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            PlyType::I32 => i32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            PlyType::U32 => u32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            PlyType::F32 => f32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            PlyType::F64 => f64::from_le_bytes(bytes[..8].try_into().unwrap()),
        }
    }
}

enum PlyProperty {
    Scalar { ty: PlyType, name: String },
    List { count_ty: PlyType, item_ty: PlyType, name: String },
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

/// Minimal binary little-endian PLY reader: positions from the `vertex`
/// element, connectivity from the `face` element's index list. Other
/// properties are skipped by size.
fn load_ply(path: &Path) -> Result<(TriangleMesh, LoadStats), MeshIoError> {
    let data = fs::read(path).map_err(|source| MeshIoError::Open { path: display(path), source })?;
    let parse_err = |line: usize, msg: String| MeshIoError::Parse { path: display(path), line, msg };

    // header is ASCII lines terminated by "end_header"
    let mut offset = 0usize;
    let mut line_no = 0usize;
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut saw_format = false;
    loop {
        let rest = &data[offset..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| parse_err(line_no + 1, "unterminated header".into()))?;
        let line = String::from_utf8_lossy(&rest[..end]);
        let line = line.trim_end_matches('\r').to_string();
        offset += end + 1;
        line_no += 1;

        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("ply") | Some("comment") | Some("obj_info") | None => {}
            Some("format") => {
                let kind = tokens.next().unwrap_or("");
                if kind != "binary_little_endian" {
                    return Err(parse_err(line_no, format!("unsupported PLY format '{kind}' (binary_little_endian only)")));
                }
                saw_format = true;
            }
            Some("element") => {
                let name = tokens.next().unwrap_or("").to_string();
                let count: usize = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| parse_err(line_no, "bad element count".into()))?;
                elements.push(PlyElement { name, count, properties: Vec::new() });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(line_no, "property before element".into()))?;
                let first = tokens.next().unwrap_or("");
                if first == "list" {
                    let count_ty = PlyType::parse(tokens.next().unwrap_or(""))
                        .ok_or_else(|| parse_err(line_no, "bad list count type".into()))?;
                    let item_ty = PlyType::parse(tokens.next().unwrap_or(""))
                        .ok_or_else(|| parse_err(line_no, "bad list item type".into()))?;
                    let name = tokens.next().unwrap_or("").to_string();
                    element.properties.push(PlyProperty::List { count_ty, item_ty, name });
                } else {
                    let ty = PlyType::parse(first)
                        .ok_or_else(|| parse_err(line_no, format!("unknown property type '{first}'")))?;
                    let name = tokens.next().unwrap_or("").to_string();
                    element.properties.push(PlyProperty::Scalar { ty, name });
                }
            }
            Some("end_header") => break,
            Some(other) => return Err(parse_err(line_no, format!("unexpected header keyword '{other}'"))),
        }
    }
    if !saw_format {
        return Err(parse_err(line_no, "missing format line".into()));
    }

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut stats = LoadStats::default();
    let body_err = |msg: &str| MeshIoError::Parse { path: display(path), line: line_no, msg: msg.into() };

    let take = |offset: &mut usize, n: usize| -> Result<&[u8], MeshIoError> {
        if *offset + n > data.len() {
            return Err(MeshIoError::Parse {
                path: display(path),
                line: line_no,
                msg: "unexpected end of binary payload".into(),
            });
        }
        let slice = &data[*offset..*offset + n];
        *offset += n;
        Ok(slice)
    };

    for element in &elements {
        if element.name == "vertex" {
            let mut x_slot = None;
            let mut y_slot = None;
            let mut z_slot = None;
            for (i, p) in element.properties.iter().enumerate() {
                if let PlyProperty::Scalar { name, .. } = p {
                    match name.as_str() {
                        "x" => x_slot = Some(i),
                        "y" => y_slot = Some(i),
                        "z" => z_slot = Some(i),
                        _ => {}
                    }
                }
            }
            let (xs, ys, zs) = match (x_slot, y_slot, z_slot) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => return Err(body_err("vertex element missing x/y/z properties")),
            };
            vertices.reserve(element.count);
            for _ in 0..element.count {
                let mut coords = [0.0f64; 3];
                for (i, p) in element.properties.iter().enumerate() {
                    match p {
                        PlyProperty::Scalar { ty, .. } => {
                            let bytes = take(&mut offset, ty.size())?;
                            let v = ty.read_f64(bytes);
                            if i == xs {
                                coords[0] = v;
                            } else if i == ys {
                                coords[1] = v;
                            } else if i == zs {
                                coords[2] = v;
                            }
                        }
                        PlyProperty::List { count_ty, item_ty, .. } => {
                            let n = count_ty.read_f64(take(&mut offset, count_ty.size())?) as usize;
                            take(&mut offset, n * item_ty.size())?;
                        }
                    }
                }
                vertices.push(Vec3::from(coords));
            }
        } else {
            // face or unknown element: walk properties, harvest index lists of the face element
            let is_face = element.name == "face";
            for _ in 0..element.count {
                for p in &element.properties {
                    match p {
                        PlyProperty::Scalar { ty, .. } => {
                            take(&mut offset, ty.size())?;
                        }
                        PlyProperty::List { count_ty, item_ty, name } => {
                            let n = count_ty.read_f64(take(&mut offset, count_ty.size())?) as usize;
                            let bytes = take(&mut offset, n * item_ty.size())?;
                            let wants = is_face && (name == "vertex_indices" || name == "vertex_index");
                            if wants {
                                if n < 3 {
                                    return Err(body_err("face with fewer than 3 indices"));
                                }
                                let mut indices = Vec::with_capacity(n);
                                for k in 0..n {
                                    let v = item_ty.read_f64(&bytes[k * item_ty.size()..]) as i64;
                                    if v < 0 || v as usize >= vertices.len() {
                                        return Err(body_err("face index out of range"));
                                    }
                                    indices.push(v as u32);
                                }
                                push_face(&vertices, &indices, &mut triangles, &mut stats.dropped_degenerate);
                            }
                        }
                    }
                }
            }
        }
    }

    if triangles.is_empty() {
        return Err(MeshIoError::EmptyMesh { path: display(path) });
    }
    let mesh = TriangleMesh::new(vertices, triangles)?;
    Ok((mesh, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{icosphere, unit_cube};

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("visvol-io-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn loads_unit_cube_obj() {
        let path = tmp("cube.obj");
        save_mesh(&unit_cube(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 8);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 12);
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.vertex_count(), 8);
        assert_eq!(mesh.triangle_count(), 12);
    }

    #[test]
    fn missing_file_is_open_error() {
        let err = load_mesh("/definitely/not/here.obj").unwrap_err();
        assert!(matches!(err, MeshIoError::Open { .. }));
    }

    #[test]
    fn quad_face_fan_triangulates() {
        let path = tmp("quad.obj");
        fs::write(&path, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.triangle_count(), 2);
        assert_eq!(mesh.triangles[0], [0, 1, 2]);
        assert_eq!(mesh.triangles[1], [0, 2, 3]);
    }

    #[test]
    fn parse_error_reports_line_number() {
        let path = tmp("bad.obj");
        fs::write(&path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 oops\n").unwrap();
        match load_mesh(&path).unwrap_err() {
            MeshIoError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn negative_indices_rejected() {
        let path = tmp("neg.obj");
        fs::write(&path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n").unwrap();
        match load_mesh(&path).unwrap_err() {
            MeshIoError::Parse { line, msg, .. } => {
                assert_eq!(line, 4);
                assert!(msg.contains("negative"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn zero_triangle_file_is_empty_mesh_error() {
        let path = tmp("verts_only.obj");
        fs::write(&path, "v 0 0 0\nv 1 0 0\n").unwrap();
        assert!(matches!(load_mesh(&path).unwrap_err(), MeshIoError::EmptyMesh { .. }));
    }

    #[test]
    fn empty_mesh_save_is_error() {
        let err = save_mesh(&TriangleMesh::empty(), tmp("empty.obj")).unwrap_err();
        assert!(matches!(err, MeshIoError::EmptyWrite { .. }));
    }

    #[test]
    fn slashed_face_indices_accepted() {
        let path = tmp("slashed.obj");
        fs::write(&path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n").unwrap();
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.triangle_count(), 1);
    }

    #[test]
    fn degenerate_triangles_dropped_and_counted() {
        let path = tmp("sliver.obj");
        fs::write(
            &path,
            "v 0 0 0\nv 1 0 0\nv 2 0 0\nv 0 1 0\nf 1 2 3\nf 1 2 4\n",
        )
        .unwrap();
        let (mesh, stats) = load_mesh_with_stats(&path).unwrap();
        assert_eq!(mesh.triangle_count(), 1);
        assert_eq!(stats.dropped_degenerate, 1);
    }

    #[test]
    fn obj_round_trip_preserves_icosphere_exactly() {
        let sphere = icosphere(2);
        let path = tmp("icosphere.obj");
        save_mesh(&sphere, &path).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(back.triangles, sphere.triangles);
        assert_eq!(back.vertices.len(), sphere.vertices.len());
        for (a, b) in back.vertices.iter().zip(&sphere.vertices) {
            // shortest round-trip formatting makes this exact
            assert_eq!(a, b);
        }
    }

    #[test]
    fn binary_ply_cube_loads() {
        let cube = unit_cube();
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"ply\nformat binary_little_endian 1.0\n");
        bytes.extend_from_slice(format!("element vertex {}\n", cube.vertex_count()).as_bytes());
        bytes.extend_from_slice(b"property float x\nproperty float y\nproperty float z\n");
        bytes.extend_from_slice(format!("element face {}\n", cube.triangle_count()).as_bytes());
        bytes.extend_from_slice(b"property list uchar int vertex_indices\nend_header\n");
        for v in &cube.vertices {
            for c in [v.x, v.y, v.z] {
                bytes.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        for t in &cube.triangles {
            bytes.push(3);
            for &i in t {
                bytes.extend_from_slice(&(i as i32).to_le_bytes());
            }
        }
        let path = tmp("cube.ply");
        fs::write(&path, &bytes).unwrap();
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.vertex_count(), 8);
        assert_eq!(mesh.triangle_count(), 12);
        assert!(mesh.is_watertight());
    }

    #[test]
    fn ascii_ply_rejected_with_clear_message() {
        let path = tmp("ascii.ply");
        fs::write(&path, "ply\nformat ascii 1.0\nend_header\n").unwrap();
        match load_mesh(&path).unwrap_err() {
            MeshIoError::Parse { msg, .. } => assert!(msg.contains("binary_little_endian")),
            other => panic!("unexpected error {other:?}"),
        }
    }
}

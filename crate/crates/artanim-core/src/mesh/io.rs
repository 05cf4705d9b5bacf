//! OBJ (`v`/`f` records) and ascii PLY readers/writers, 6 decimal places.

use std::fmt::Write as _;

use crate::math::{PointCloud, Vec3};

use super::{MeshError, QuadMesh, TriMesh};

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

/// Raw OBJ polygons before triangulation.
struct ObjData {
    vertices: Vec<Vec3>,
    polygons: Vec<(usize, Vec<usize>)>, // (line number, 0-based indices)
}

fn parse_obj(text: &str) -> Result<ObjData, MeshError> {
    let mut vertices = Vec::new();
    let mut polygons = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in coords.iter_mut() {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| parse_err(line_no, "vertex needs 3 coordinates"))?;
                    *c = tok
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("non-numeric coordinate `{tok}`")))?;
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut indices = Vec::new();
                for tok in tokens {
                    // v, v/vt, v//vn, v/vt/vn — vertex index is the first field
                    let first = tok.split('/').next().unwrap_or(tok);
                    let idx: i64 = first
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("non-numeric face index `{tok}`")))?;
                    if idx < 1 {
                        return Err(parse_err(line_no, format!("face index {idx} must be >= 1")));
                    }
                    let idx = (idx - 1) as usize;
                    if idx >= vertices.len() {
                        return Err(parse_err(
                            line_no,
                            format!(
                                "face index {} out of range ({} vertices)",
                                idx + 1,
                                vertices.len()
                            ),
                        ));
                    }
                    indices.push(idx);
                }
                if indices.len() < 3 {
                    return Err(parse_err(line_no, "face needs at least 3 vertices"));
                }
                polygons.push((line_no, indices));
            }
            _ => {} // vn, vt, usemtl, o, g, s ... ignored
        }
    }
    Ok(ObjData { vertices, polygons })
}

/// Loads an OBJ as a triangle mesh, fanning polygons with more than 3 sides.
pub fn load_obj_tri(text: &str) -> Result<TriMesh, MeshError> {
    let data = parse_obj(text)?;
    let mut faces = Vec::new();
    for (_, poly) in &data.polygons {
        for k in 1..poly.len() - 1 {
            faces.push([poly[0], poly[k], poly[k + 1]]);
        }
    }
    TriMesh::new(data.vertices, faces)
}

/// Loads an OBJ whose faces are all quads; any other arity is an error.
pub fn load_obj_quad(text: &str) -> Result<QuadMesh, MeshError> {
    let data = parse_obj(text)?;
    let mut faces = Vec::new();
    for (fi, (_, poly)) in data.polygons.iter().enumerate() {
        if poly.len() != 4 {
            return Err(MeshError::NotQuad {
                face: fi,
                arity: poly.len(),
            });
        }
        faces.push([poly[0], poly[1], poly[2], poly[3]]);
    }
    QuadMesh::new(data.vertices, faces)
}

fn write_obj_header(out: &mut String, vertices: &[Vec3]) {
    for v in vertices {
        let _ = writeln!(out, "v {:.6} {:.6} {:.6}", v.x, v.y, v.z);
    }
}

pub fn save_obj_tri(mesh: &TriMesh) -> String {
    let mut out = String::new();
    write_obj_header(&mut out, &mesh.vertices);
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn save_obj_quad(mesh: &QuadMesh) -> String {
    let mut out = String::new();
    write_obj_header(&mut out, &mesh.vertices);
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1, f[3] + 1);
    }
    out
}

struct PlyData {
    vertices: Vec<Vec3>,
    faces: Vec<Vec<usize>>,
}

fn parse_ply(text: &str) -> Result<PlyData, MeshError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        other => {
            return Err(parse_err(
                other.map(|(i, _)| i).unwrap_or(1),
                "expected `ply` magic",
            ))
        }
    }
    let mut vertex_count = 0usize;
    let mut face_count = 0usize;
    let mut current_element: Option<String> = None;
    let mut header_done = false;
    let mut ascii = false;
    for (line_no, line) in lines.by_ref() {
        if line.is_empty() || line.starts_with("comment") {
            continue;
        }
        if line == "end_header" {
            header_done = true;
            break;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                ascii = tok.next() == Some("ascii");
            }
            Some("element") => {
                let name = tok
                    .next()
                    .ok_or_else(|| parse_err(line_no, "element needs a name"))?;
                let count: usize = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_err(line_no, "element needs a count"))?;
                match name {
                    "vertex" => vertex_count = count,
                    "face" => face_count = count,
                    _ => {}
                }
                current_element = Some(name.to_string());
            }
            Some("property") => {
                let _ = &current_element; // property layout fixed: x y z floats, vertex_indices list
            }
            _ => return Err(parse_err(line_no, format!("unknown header line `{line}`"))),
        }
    }
    if !header_done {
        return Err(parse_err(0, "missing end_header"));
    }
    if !ascii {
        return Err(parse_err(0, "only `format ascii 1.0` is supported"));
    }
    let mut vertices = Vec::with_capacity(vertex_count);
    let mut faces = Vec::with_capacity(face_count);
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let values: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        let values =
            values.map_err(|_| parse_err(line_no, format!("non-numeric data `{line}`")))?;
        if vertices.len() < vertex_count {
            if values.len() < 3 {
                return Err(parse_err(line_no, "vertex row needs x y z"));
            }
            vertices.push(Vec3::new(values[0], values[1], values[2]));
        } else if faces.len() < face_count {
            let n = values[0] as usize;
            if values.len() != n + 1 {
                return Err(parse_err(line_no, "face row arity mismatch"));
            }
            let idx: Vec<usize> = values[1..].iter().map(|&v| v as usize).collect();
            for &i in &idx {
                if i >= vertices.len() {
                    return Err(parse_err(line_no, format!("face index {i} out of range")));
                }
            }
            faces.push(idx);
        }
    }
    if vertices.len() != vertex_count || faces.len() != face_count {
        return Err(parse_err(0, "fewer data rows than declared"));
    }
    Ok(PlyData { vertices, faces })
}

/// Loads an ascii PLY as a triangle mesh (polygons fanned).
pub fn load_ply_tri(text: &str) -> Result<TriMesh, MeshError> {
    let data = parse_ply(text)?;
    let mut faces = Vec::new();
    for poly in &data.faces {
        for k in 1..poly.len().saturating_sub(1) {
            faces.push([poly[0], poly[k], poly[k + 1]]);
        }
    }
    TriMesh::new(data.vertices, faces)
}

/// Loads an ascii PLY vertex list as a point cloud (faces ignored).
pub fn load_ply_points(text: &str) -> Result<PointCloud, MeshError> {
    let data = parse_ply(text)?;
    Ok(PointCloud::new(data.vertices))
}

fn ply_header(out: &mut String, vertex_count: usize, face_count: usize) {
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {vertex_count}");
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    let _ = writeln!(out, "element face {face_count}");
    out.push_str("property list uchar int vertex_indices\nend_header\n");
}

pub fn save_ply_tri(mesh: &TriMesh) -> String {
    let mut out = String::new();
    ply_header(&mut out, mesh.vertices.len(), mesh.faces.len());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{:.6} {:.6} {:.6}", v.x, v.y, v.z);
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}

pub fn save_ply_points(cloud: &PointCloud) -> String {
    let mut out = String::new();
    ply_header(&mut out, cloud.points.len(), 0);
    for p in &cloud.points {
        let _ = writeln!(out, "{:.6} {:.6} {:.6}", p.x, p.y, p.z);
    }
    out
}

//! Catmull-Clark subdivision for quad meshes.
//!
//! Interior rules are the standard scheme: face points at face centroids,
//! edge points averaging edge endpoints and adjacent face points, original
//! vertices repositioned to (F + 2R + (n-3)P)/n. Boundaries follow the cubic
//! B-spline rules: edge point = edge midpoint, boundary vertex =
//! (1/8, 3/4, 1/8) over its two boundary neighbors.

use std::collections::HashMap;

use crate::math::Vec3;

use super::{MeshError, QuadMesh};

struct Edge {
    a: usize,
    b: usize,
    faces: Vec<usize>,
}

struct Topology {
    edges: Vec<Edge>,
    /// (vertex pair, sorted) -> edge index
    edge_of: HashMap<(usize, usize), usize>,
}

fn build_topology(mesh: &QuadMesh) -> Result<Topology, MeshError> {
    let mut edges: Vec<Edge> = Vec::new();
    let mut edge_of: HashMap<(usize, usize), usize> = HashMap::new();
    for (fi, face) in mesh.faces.iter().enumerate() {
        for k in 0..4 {
            let a = face[k];
            let b = face[(k + 1) % 4];
            let key = (a.min(b), a.max(b));
            let ei = *edge_of.entry(key).or_insert_with(|| {
                edges.push(Edge {
                    a: key.0,
                    b: key.1,
                    faces: Vec::new(),
                });
                edges.len() - 1
            });
            edges[ei].faces.push(fi);
            if edges[ei].faces.len() > 2 {
                return Err(MeshError::NonManifoldEdge(key.0, key.1));
            }
        }
    }
    Ok(Topology { edges, edge_of })
}

fn subdivide_once(mesh: &QuadMesh) -> Result<QuadMesh, MeshError> {
    let topo = build_topology(mesh)?;
    let nv = mesh.vertices.len();
    let ne = topo.edges.len();
    let nf = mesh.faces.len();

    // face points
    let face_points: Vec<Vec3> = mesh
        .faces
        .iter()
        .map(|f| f.iter().map(|&i| mesh.vertices[i]).sum::<Vec3>() / 4.0)
        .collect();

    // edge points
    let edge_points: Vec<Vec3> = topo
        .edges
        .iter()
        .map(|e| {
            let mid = (mesh.vertices[e.a] + mesh.vertices[e.b]) / 2.0;
            if e.faces.len() == 2 {
                let fp = (face_points[e.faces[0]] + face_points[e.faces[1]]) / 2.0;
                (mid + fp) / 2.0
            } else {
                mid // boundary rule
            }
        })
        .collect();

    // per-vertex adjacency
    let mut v_edges: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (ei, e) in topo.edges.iter().enumerate() {
        v_edges[e.a].push(ei);
        v_edges[e.b].push(ei);
    }
    let mut v_faces: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (fi, face) in mesh.faces.iter().enumerate() {
        for &v in face {
            v_faces[v].push(fi);
        }
    }

    let mut new_vertices = Vec::with_capacity(nv + ne + nf);
    for v in 0..nv {
        let p = mesh.vertices[v];
        let boundary: Vec<usize> = v_edges[v]
            .iter()
            .copied()
            .filter(|&ei| topo.edges[ei].faces.len() == 1)
            .collect();
        let moved = if boundary.is_empty() {
            let n = v_edges[v].len() as f64;
            let f: Vec3 = v_faces[v].iter().map(|&fi| face_points[fi]).sum::<Vec3>()
                / v_faces[v].len() as f64;
            let r: Vec3 = v_edges[v]
                .iter()
                .map(|&ei| (mesh.vertices[topo.edges[ei].a] + mesh.vertices[topo.edges[ei].b]) / 2.0)
                .sum::<Vec3>()
                / n;
            (f + r * 2.0 + p * (n - 3.0)) / n
        } else if boundary.len() == 2 {
            let other = |ei: usize| {
                let e = &topo.edges[ei];
                if e.a == v {
                    e.b
                } else {
                    e.a
                }
            };
            let a = mesh.vertices[other(boundary[0])];
            let b = mesh.vertices[other(boundary[1])];
            p * 0.75 + (a + b) * 0.125
        } else {
            p // corner / irregular boundary vertex kept fixed
        };
        new_vertices.push(moved);
    }
    let edge_base = nv;
    new_vertices.extend(edge_points);
    let face_base = nv + ne;
    new_vertices.extend(face_points);

    let mut new_faces = Vec::with_capacity(4 * nf);
    for (fi, face) in mesh.faces.iter().enumerate() {
        let edge_id = |a: usize, b: usize| topo.edge_of[&(a.min(b), a.max(b))];
        for k in 0..4 {
            let v = face[k];
            let e_next = edge_base + edge_id(v, face[(k + 1) % 4]);
            let e_prev = edge_base + edge_id(face[(k + 3) % 4], v);
            new_faces.push([v, e_next, face_base + fi, e_prev]);
        }
    }
    Ok(QuadMesh {
        vertices: new_vertices,
        faces: new_faces,
    })
}

/// Applies `levels` rounds of Catmull-Clark subdivision. Level 0 is the
/// identity. Errors on non-manifold edges (shared by more than two faces).
pub fn catmull_clark(mesh: &QuadMesh, levels: usize) -> Result<QuadMesh, MeshError> {
    let mut out = mesh.clone();
    for _ in 0..levels {
        out = subdivide_once(&out)?;
    }
    Ok(out)
}

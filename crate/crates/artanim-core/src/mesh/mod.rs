//! Indexed surface meshes and the geometry utilities of the pipeline:
//! OBJ/PLY I/O, vertex deduplication, grid decimation, Catmull-Clark
//! subdivision, shrinkwrap projection, and closest-point queries.

mod io;
mod query;
mod reduce;
mod subdivide;

pub use io::{
    load_obj_quad, load_obj_tri, load_ply_points, load_ply_tri, save_obj_quad, save_obj_tri,
    save_ply_points, save_ply_tri,
};
pub use query::{closest_point_on_mesh, closest_point_on_triangle, shrinkwrap, MeshBvh};
pub use reduce::{decimate_cluster, deduplicate_vertices};
pub use subdivide::catmull_clark;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("face {face} references vertex {index} but mesh has {count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        count: usize,
    },
    #[error("face {0} is degenerate (repeated vertex index)")]
    DegenerateFace(usize),
    #[error("mesh is not all-quad (face {face} has {arity} vertices)")]
    NotQuad { face: usize, arity: usize },
    #[error("empty mesh")]
    Empty,
    #[error("non-manifold edge ({0}, {1}) shared by more than two faces")]
    NonManifoldEdge(usize, usize),
}

/// Indexed triangle mesh, vertices in millimetres.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

/// Indexed quad mesh (Catmull-Clark input/output, retopology cages).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 4]>,
}

fn validate_faces<const N: usize>(
    vertex_count: usize,
    faces: &[[usize; N]],
) -> Result<(), MeshError> {
    for (fi, face) in faces.iter().enumerate() {
        for &i in face {
            if i >= vertex_count {
                return Err(MeshError::IndexOutOfRange {
                    face: fi,
                    index: i,
                    count: vertex_count,
                });
            }
        }
        for a in 0..N {
            for b in a + 1..N {
                if face[a] == face[b] {
                    return Err(MeshError::DegenerateFace(fi));
                }
            }
        }
    }
    Ok(())
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        validate_faces(vertices.len(), &faces)?;
        Ok(Self { vertices, faces })
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn centroid(&self) -> Vec3 {
        if self.vertices.is_empty() {
            return Vec3::zeros();
        }
        self.vertices.iter().sum::<Vec3>() / self.vertices.len() as f64
    }
}

impl QuadMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 4]>) -> Result<Self, MeshError> {
        validate_faces(vertices.len(), &faces)?;
        Ok(Self { vertices, faces })
    }

    /// Splits each quad into two triangles along the (0,2) diagonal.
    pub fn to_tri_mesh(&self) -> TriMesh {
        let mut faces = Vec::with_capacity(self.faces.len() * 2);
        for &[a, b, c, d] in &self.faces {
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
        TriMesh {
            vertices: self.vertices.clone(),
            faces,
        }
    }
}

/// Axis-aligned unit cube as a quad mesh (test/fixture helper).
pub fn unit_cube_quads() -> QuadMesh {
    let vertices = vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(1.0, 1.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
        Vec3::new(1.0, 0.0, 1.0),
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(0.0, 1.0, 1.0),
    ];
    let faces = vec![
        [0, 3, 2, 1],
        [4, 5, 6, 7],
        [0, 1, 5, 4],
        [1, 2, 6, 5],
        [2, 3, 7, 6],
        [3, 0, 4, 7],
    ];
    QuadMesh { vertices, faces }
}

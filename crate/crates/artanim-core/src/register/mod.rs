//! Cross-modal registration: palate contour reconstruction from EMA coil
//! samples, and rigid point-set / point-to-mesh alignment.

mod align;
mod hull;
mod section;

pub use align::{icp_point_to_mesh, umeyama_rigid, IcpParams, IcpResult};
pub use hull::{convex_hull_3d, convex_hull_indices};
pub use section::{palate_contour, plane_mesh_intersection, ContourConfig, Polyline};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RegisterError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("point count mismatch: {src} source vs {dst} destination")]
    CountMismatch { src: usize, dst: usize },
    #[error("unknown coil: {0}")]
    UnknownCoil(String),
    #[error("empty mesh")]
    EmptyMesh,
}

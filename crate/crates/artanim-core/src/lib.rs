//! Articulatory motion-capture pipeline.
//!
//! Treats electromagnetic articulography (EMA) coil recordings as motion
//! capture: converts them to and from BVH, co-registers them with static
//! vocal-tract meshes, rigs a tongue mesh with a coil-driven spline-IK
//! armature and a hinged jaw, animates the deformed meshes per frame, and
//! scores fidelity by coil-vs-vertex trajectory correlation.
//!
//! Module map:
//!
//! - [`trackio`] — EMA trajectory ingestion (EST ASCII, CSV) and synthesis
//! - [`bvh`] — coil-per-ROOT BVH model, writer, parser
//! - [`mesh`] — indexed meshes, OBJ/PLY I/O, dedup, decimation,
//!   Catmull-Clark, shrinkwrap, closest-point queries
//! - [`register`] — convex hull, palate contour, Umeyama alignment, ICP
//! - [`rig`] — spline, hooks, spline-IK joint chain, envelope skinning,
//!   jaw hinge
//! - [`animate`] — per-utterance mesh sequence generation and export
//! - [`eval`] — Pearson trajectory correlation reports

pub mod animate;
pub mod bvh;
pub mod eval;
pub mod math;
pub mod mesh;
pub mod register;
pub mod rig;
pub mod trackio;

pub use math::{Plane, PointCloud, RigidTransform};
pub use mesh::{QuadMesh, TriMesh};
pub use trackio::CoilTrajectorySet;

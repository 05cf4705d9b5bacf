//! Per-utterance animation: drive the rig with a trajectory set and emit
//! deformed mesh sequences.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::ops::Range;
use std::path::Path;

use thiserror::Error;

use crate::math::{RigidTransform, Vec3};
use crate::mesh::{save_obj_tri, TriMesh};
use crate::rig::{Rig, RigError};
use crate::trackio::CoilTrajectorySet;

#[derive(Debug, Error)]
pub enum AnimateError {
    #[error(transparent)]
    Rig(#[from] RigError),
    #[error("empty frame range")]
    EmptyRange,
    #[error("frame range {0}..{1} outside trajectory of {2} frames")]
    RangeOutOfBounds(usize, usize, usize),
    #[error("sequence and trajectory are not frame-aligned")]
    Misaligned,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// Deformed mesh animation: per-frame tongue vertex buffers and mandible
/// transforms, plus the static reference meshes.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSequence {
    pub timestamps: Vec<f64>,
    /// Source frame index in the driving trajectory set, per sequence frame.
    pub frame_indices: Vec<usize>,
    pub tongue_frames: Vec<Vec<Vec3>>,
    pub mandible_transforms: Vec<RigidTransform>,
    pub mandible: Option<TriMesh>,
    pub maxilla: Option<TriMesh>,
}

impl MeshSequence {
    pub fn frame_count(&self) -> usize {
        self.timestamps.len()
    }
}

/// Solves and skins every frame in `range` (whole set when `None`); the jaw
/// transform tracks the configured jaw coil.
pub fn animate_utterance(
    rig: &Rig,
    set: &CoilTrajectorySet,
    range: Option<Range<usize>>,
) -> Result<MeshSequence, AnimateError> {
    let range = range.unwrap_or(0..set.frame_count());
    if range.is_empty() {
        return Err(AnimateError::EmptyRange);
    }
    if range.end > set.frame_count() {
        return Err(AnimateError::RangeOutOfBounds(
            range.start,
            range.end,
            set.frame_count(),
        ));
    }
    let jaw_index = match &rig.jaw {
        Some(j) => Some(
            set.coil_index(&j.coil)
                .ok_or_else(|| RigError::MissingCoil(j.coil.clone()))?,
        ),
        None => None,
    };
    let mut timestamps = Vec::with_capacity(range.len());
    let mut frame_indices = Vec::with_capacity(range.len());
    let mut tongue_frames = Vec::with_capacity(range.len());
    let mut mandible_transforms = Vec::with_capacity(range.len());
    for f in range {
        let frame: Vec<(String, Vec3)> = set
            .coils
            .iter()
            .enumerate()
            .map(|(ci, name)| (name.clone(), set.sample(ci, f).position))
            .collect();
        let poses = rig.solve_spline_ik(&frame)?;
        tongue_frames.push(rig.skin(&poses));
        mandible_transforms.push(match jaw_index {
            Some(ci) => rig.jaw_transform(set.sample(ci, f).position)?,
            None => RigidTransform::identity(),
        });
        timestamps.push(set.timestamps[f]);
        frame_indices.push(f);
    }
    Ok(MeshSequence {
        timestamps,
        frame_indices,
        tongue_frames,
        mandible_transforms,
        mandible: None,
        maxilla: None,
    })
}

/// Export layout on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    /// One OBJ per frame (`frame_NNNNNN.obj`), per-frame mandible OBJs, and
    /// a static `maxilla.obj`.
    ObjSequence,
    /// `vertices.csv` with one row per frame per tracked vertex:
    /// frame, time, vertex id, x, y, z.
    VertexCsv,
}

fn io_err(path: &Path, source: io::Error) -> AnimateError {
    AnimateError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes to `<path>.tmp` then renames, so failures leave no partial file.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), AnimateError> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, content).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Writes the sequence into `dir`; identical sequences produce byte-identical
/// files. `tracked` limits CSV rows to the given vertex ids (all when `None`).
pub fn export_sequence(
    seq: &MeshSequence,
    format: ExportFormat,
    dir: &Path,
    tracked: Option<&[usize]>,
) -> Result<Vec<String>, AnimateError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    match format {
        ExportFormat::ObjSequence => {
            for (i, vertices) in seq.tongue_frames.iter().enumerate() {
                let name = format!("frame_{:06}.obj", seq.frame_indices[i]);
                let mesh = TriMesh {
                    vertices: vertices.clone(),
                    faces: Vec::new(),
                };
                // faces come from the rig bind mesh when available; a bare
                // vertex cloud is still a valid OBJ for diffing
                let text = save_obj_tri(&mesh);
                write_atomic(&dir.join(&name), &text)?;
                written.push(name);
            }
            if let Some(mandible) = &seq.mandible {
                for (i, t) in seq.mandible_transforms.iter().enumerate() {
                    let moved = TriMesh {
                        vertices: mandible.vertices.iter().map(|v| t.apply(*v)).collect(),
                        faces: mandible.faces.clone(),
                    };
                    let name = format!("mandible_{:06}.obj", seq.frame_indices[i]);
                    write_atomic(&dir.join(&name), &save_obj_tri(&moved))?;
                    written.push(name);
                }
            }
            if let Some(maxilla) = &seq.maxilla {
                write_atomic(&dir.join("maxilla.obj"), &save_obj_tri(maxilla))?;
                written.push("maxilla.obj".into());
            }
        }
        ExportFormat::VertexCsv => {
            let mut out = String::from("frame,time,vertex,x,y,z\n");
            for (i, vertices) in seq.tongue_frames.iter().enumerate() {
                let ids: Vec<usize> = match tracked {
                    Some(t) => t.to_vec(),
                    None => (0..vertices.len()).collect(),
                };
                for vid in ids {
                    let v = vertices[vid];
                    let _ = writeln!(
                        out,
                        "{},{:.6},{},{:.6},{:.6},{:.6}",
                        seq.frame_indices[i], seq.timestamps[i], vid, v.x, v.y, v.z
                    );
                }
            }
            write_atomic(&dir.join("vertices.csv"), &out)?;
            written.push("vertices.csv".into());
        }
    }
    Ok(written)
}


/// Export OBJ frames carrying the bind mesh topology.
pub fn export_obj_sequence_with_faces(
    seq: &MeshSequence,
    faces: &[[usize; 3]],
    dir: &Path,
) -> Result<Vec<String>, AnimateError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for (i, vertices) in seq.tongue_frames.iter().enumerate() {
        let mesh = TriMesh {
            vertices: vertices.clone(),
            faces: faces.to_vec(),
        };
        let name = format!("frame_{:06}.obj", seq.frame_indices[i]);
        write_atomic(&dir.join(&name), &save_obj_tri(&mesh))?;
        written.push(name);
    }
    if let Some(mandible) = &seq.mandible {
        for (i, t) in seq.mandible_transforms.iter().enumerate() {
            let moved = TriMesh {
                vertices: mandible.vertices.iter().map(|v| t.apply(*v)).collect(),
                faces: mandible.faces.clone(),
            };
            let name = format!("mandible_{:06}.obj", seq.frame_indices[i]);
            write_atomic(&dir.join(&name), &save_obj_tri(&moved))?;
            written.push(name);
        }
    }
    if let Some(maxilla) = &seq.maxilla {
        write_atomic(&dir.join("maxilla.obj"), &save_obj_tri(maxilla))?;
        written.push("maxilla.obj".into());
    }
    Ok(written)
}

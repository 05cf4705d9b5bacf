//! Pipeline evaluation: Pearson correlation between coil trajectories and the
//! mesh vertices that track them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::animate::MeshSequence;
use crate::rig::Rig;
use crate::trackio::CoilTrajectorySet;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("coil {0} missing from trajectory set")]
    MissingCoil(String),
    #[error("sequence frame {0} outside trajectory of {1} frames")]
    FrameOutOfBounds(usize, usize),
    #[error("sequence and trajectory timestamps disagree at frame {0}")]
    Misaligned(usize),
}

/// Pearson correlation coefficient, clamped to [-1, 1]. `None` marks an
/// undefined coefficient (a constant series has zero variance); it is never
/// reported as 0, which would mean "uncorrelated".
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(EvalError::TooShort(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// For every hooked coil, the bind-mesh vertex nearest the coil's bind
/// position (ties broken toward the lowest vertex index).
pub fn select_tracking_vertices(rig: &Rig) -> Vec<(String, usize)> {
    rig.hooks
        .iter()
        .filter_map(|hook| {
            let coil_pos = rig
                .bind_coils
                .iter()
                .find(|(name, _)| name == &hook.coil)
                .map(|(_, p)| *p)?;
            let mut best = (usize::MAX, f64::INFINITY);
            for (vi, v) in rig.tongue.vertices.iter().enumerate() {
                let d = (v - coil_pos).norm_squared();
                if d < best.1 {
                    best = (vi, d);
                }
            }
            Some((hook.coil.clone(), best.0))
        })
        .collect()
}

/// One (coil, axis) correlation entry; `r` is `None` when undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisCorrelation {
    pub coil: String,
    pub vertex: usize,
    pub axis: char,
    pub r: Option<f64>,
}

/// Per-axis correlations between coil trajectories and their tracking
/// vertices, with the mean over all defined entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub entries: Vec<AxisCorrelation>,
    /// Arithmetic mean of all defined entries; `None` if every entry is
    /// undefined.
    pub mean_r: Option<f64>,
    /// "coil/axis" labels of entries excluded as undefined.
    pub excluded: Vec<String>,
}

impl CorrelationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Correlates each hooked coil's trajectory with its nearest bind vertex in
/// the animated sequence, axis by axis.
pub fn trajectory_correlation(
    seq: &MeshSequence,
    set: &CoilTrajectorySet,
    rig: &Rig,
) -> Result<CorrelationReport, EvalError> {
    if seq.frame_count() < 2 {
        return Err(EvalError::TooShort(seq.frame_count()));
    }
    for (i, &f) in seq.frame_indices.iter().enumerate() {
        if f >= set.frame_count() {
            return Err(EvalError::FrameOutOfBounds(f, set.frame_count()));
        }
        if (seq.timestamps[i] - set.timestamps[f]).abs() > 1e-9 {
            return Err(EvalError::Misaligned(f));
        }
    }
    let pairs = select_tracking_vertices(rig);
    let mut entries = Vec::new();
    let mut excluded = Vec::new();
    for (coil, vertex) in pairs {
        let ci = set
            .coil_index(&coil)
            .ok_or_else(|| EvalError::MissingCoil(coil.clone()))?;
        for (axis_idx, axis) in ['x', 'y', 'z'].into_iter().enumerate() {
            let coil_series: Vec<f64> = seq
                .frame_indices
                .iter()
                .map(|&f| set.sample(ci, f).position[axis_idx])
                .collect();
            let vertex_series: Vec<f64> = seq
                .tongue_frames
                .iter()
                .map(|frame| frame[vertex][axis_idx])
                .collect();
            let r = pearson(&coil_series, &vertex_series)?;
            if r.is_none() {
                excluded.push(format!("{coil}/{axis}"));
            }
            entries.push(AxisCorrelation {
                coil: coil.clone(),
                vertex,
                axis,
                r,
            });
        }
    }
    let defined: Vec<f64> = entries.iter().filter_map(|e| e.r).collect();
    let mean_r = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };
    Ok(CorrelationReport {
        entries,
        mean_r,
        excluded,
    })
}

//! EMA coil trajectory ingestion and synthesis.
//!
//! Reads the ASCII variant of the EST_Track container and a plain CSV
//! layout, and generates deterministic sinusoidal fixtures for testing.
//! All positions are millimetres; orientation normals are unit vectors.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec3;

/// Frame period applied when a CSV input carries no time column (200 Hz).
pub const DEFAULT_FRAME_PERIOD: f64 = 0.005;

/// One coil's sample in one frame: position (mm) and orientation normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoilSample {
    pub position: Vec3,
    pub normal: Vec3,
}

/// Time series of position + orientation normal per named coil.
///
/// Samples are indexed `[coil][frame]`; every coil has exactly
/// `frame_count()` samples and timestamps are strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoilTrajectorySet {
    pub coils: Vec<String>,
    pub timestamps: Vec<f64>,
    samples: Vec<Vec<CoilSample>>,
}

/// Rows removed during ingestion, with the reason per row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    /// (1-based data-row index, reason)
    pub dropped_rows: Vec<(usize, String)>,
}

impl IngestReport {
    pub fn dropped_count(&self) -> usize {
        self.dropped_rows.len()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TrackError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing header key: {0}")]
    MissingHeader(String),
    #[error("coil {coil} has {got} channels, expected 6")]
    CoilChannelCount { coil: String, got: usize },
    #[error("no frames in input")]
    NoFrames,
    #[error("unknown coil: {0}")]
    UnknownCoil(String),
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
}

fn parse_err(line: usize, message: impl Into<String>) -> TrackError {
    TrackError::Parse {
        line,
        message: message.into(),
    }
}

impl CoilTrajectorySet {
    /// Builds a set from per-coil sample columns, validating invariants.
    ///
    /// Normals with length in [0.5, 2.0] are re-normalized to unit length;
    /// lengths outside that band are rejected.
    pub fn new(
        coils: Vec<String>,
        timestamps: Vec<f64>,
        samples: Vec<Vec<CoilSample>>,
    ) -> Result<Self, TrackError> {
        if timestamps.is_empty() {
            return Err(TrackError::NoFrames);
        }
        if coils.len() != samples.len() {
            return Err(TrackError::InvalidSpec(format!(
                "{} coil names but {} sample columns",
                coils.len(),
                samples.len()
            )));
        }
        for w in timestamps.windows(2) {
            if w[1] <= w[0] {
                return Err(TrackError::InvalidSpec(format!(
                    "timestamps not strictly increasing at t={}",
                    w[1]
                )));
            }
        }
        let mut samples = samples;
        for (coil, column) in coils.iter().zip(samples.iter_mut()) {
            if column.len() != timestamps.len() {
                return Err(TrackError::InvalidSpec(format!(
                    "coil {coil} has {} samples for {} frames",
                    column.len(),
                    timestamps.len()
                )));
            }
            for s in column.iter_mut() {
                if !s.position.iter().all(|c| c.is_finite()) {
                    return Err(TrackError::InvalidSpec(format!(
                        "non-finite position for coil {coil}"
                    )));
                }
                let len = s.normal.norm();
                if !(0.5..=2.0).contains(&len) {
                    return Err(TrackError::InvalidSpec(format!(
                        "coil {coil}: orientation normal length {len:.3} outside [0.5, 2.0]"
                    )));
                }
                s.normal /= len;
            }
        }
        Ok(Self {
            coils,
            timestamps,
            samples,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.timestamps.len()
    }

    pub fn coil_index(&self, name: &str) -> Option<usize> {
        self.coils.iter().position(|c| c == name)
    }

    pub fn sample(&self, coil: usize, frame: usize) -> CoilSample {
        self.samples[coil][frame]
    }

    /// All samples of one coil, in frame order.
    pub fn coil_samples(&self, coil: usize) -> &[CoilSample] {
        &self.samples[coil]
    }

    /// Positions of every coil at one frame, in coil order.
    pub fn frame_positions(&self, frame: usize) -> Vec<Vec3> {
        self.samples.iter().map(|col| col[frame].position).collect()
    }

    /// Serializes as CSV with a time column, 6 decimal places.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("time");
        for coil in &self.coils {
            for comp in ["x", "y", "z", "nx", "ny", "nz"] {
                let _ = write!(out, ",{coil}_{comp}");
            }
        }
        out.push('\n');
        for f in 0..self.frame_count() {
            let _ = write!(out, "{:.6}", self.timestamps[f]);
            for col in &self.samples {
                let s = col[f];
                let _ = write!(
                    out,
                    ",{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                    s.position.x, s.position.y, s.position.z, s.normal.x, s.normal.y, s.normal.z
                );
            }
            out.push('\n');
        }
        out
    }
}

/// Splits `<coil>_<component>` channel names; returns (coil, component index 0..6).
fn split_channel_name(name: &str) -> Option<(&str, usize)> {
    let (coil, comp) = name.rsplit_once('_')?;
    let idx = match comp {
        "x" => 0,
        "y" => 1,
        "z" => 2,
        "nx" => 3,
        "ny" => 4,
        "nz" => 5,
        _ => return None,
    };
    Some((coil, idx))
}

/// Parses the ASCII EST_Track subset.
///
/// Header: `EST_File Track`, `DataType ascii`, `NumFrames`, `NumChannels`,
/// `Channel_<i> <name>` lines, terminated by `EST_Header_End`. Data rows are
/// `time flag value...`; only rows with flag exactly `1` are kept, dropped
/// rows are reported.
pub fn parse_est_ascii(text: &str) -> Result<(CoilTrajectorySet, IngestReport), TrackError> {
    let mut lines = text.lines().enumerate();
    let (first_no, first) = lines
        .by_ref()
        .map(|(i, l)| (i + 1, l.trim()))
        .find(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .ok_or(TrackError::NoFrames)?;
    if first != "EST_File Track" {
        return Err(parse_err(first_no, "expected `EST_File Track` header"));
    }

    let mut num_frames: Option<usize> = None;
    let mut num_channels: Option<usize> = None;
    let mut data_type: Option<String> = None;
    let mut channels: Vec<(usize, String)> = Vec::new();
    let mut header_end_line = 0usize;

    for (i, raw) in lines.by_ref() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "EST_Header_End" {
            header_end_line = line_no;
            break;
        }
        let (key, value) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| parse_err(line_no, format!("malformed header line `{line}`")))?;
        let value = value.trim();
        match key {
            "DataType" => data_type = Some(value.to_string()),
            "NumFrames" => {
                num_frames = Some(value.parse().map_err(|_| {
                    parse_err(line_no, format!("non-numeric NumFrames `{value}`"))
                })?)
            }
            "NumChannels" => {
                num_channels = Some(value.parse().map_err(|_| {
                    parse_err(line_no, format!("non-numeric NumChannels `{value}`"))
                })?)
            }
            _ if key.starts_with("Channel_") => {
                let idx: usize = key["Channel_".len()..]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad channel key `{key}`")))?;
                channels.push((idx, value.to_string()));
            }
            _ => {} // unknown header keys tolerated (ByteOrder, BreaksPresent, ...)
        }
    }
    if header_end_line == 0 {
        return Err(TrackError::MissingHeader("EST_Header_End".into()));
    }
    match data_type.as_deref() {
        Some("ascii") => {}
        Some(other) => {
            return Err(TrackError::MissingHeader(format!(
                "DataType ascii (found `{other}`)"
            )))
        }
        None => return Err(TrackError::MissingHeader("DataType".into())),
    }
    let num_channels = num_channels.ok_or(TrackError::MissingHeader("NumChannels".into()))?;
    if num_frames.is_none() {
        return Err(TrackError::MissingHeader("NumFrames".into()));
    }
    if channels.len() != num_channels {
        return Err(TrackError::MissingHeader(format!(
            "NumChannels {} but {} Channel_<i> lines",
            num_channels,
            channels.len()
        )));
    }
    channels.sort_by_key(|(i, _)| *i);

    // Group channels into coils by first appearance.
    let mut coils: Vec<String> = Vec::new();
    // per channel: (coil index, component index)
    let mut channel_map: Vec<(usize, usize)> = Vec::with_capacity(num_channels);
    for (_, name) in &channels {
        let (coil, comp) = split_channel_name(name).ok_or_else(|| {
            TrackError::MissingHeader(format!(
                "channel `{name}` does not follow <coil>_<x|y|z|nx|ny|nz>"
            ))
        })?;
        let ci = match coils.iter().position(|c| c == coil) {
            Some(i) => i,
            None => {
                coils.push(coil.to_string());
                coils.len() - 1
            }
        };
        channel_map.push((ci, comp));
    }
    // Every coil must contribute exactly 6 distinct components.
    for (ci, coil) in coils.iter().enumerate() {
        let comps: BTreeSet<usize> = channel_map
            .iter()
            .filter(|(c, _)| *c == ci)
            .map(|(_, comp)| *comp)
            .collect();
        let count = channel_map.iter().filter(|(c, _)| *c == ci).count();
        if count != 6 || comps.len() != 6 {
            return Err(TrackError::CoilChannelCount {
                coil: coil.clone(),
                got: count,
            });
        }
    }

    let mut timestamps = Vec::new();
    let mut samples: Vec<Vec<CoilSample>> = vec![Vec::new(); coils.len()];
    let mut report = IngestReport::default();
    let mut data_row = 0usize;
    for (i, raw) in lines {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        data_row += 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != num_channels + 2 {
            return Err(parse_err(
                line_no,
                format!(
                    "expected {} values (time, flag, {num_channels} channels), found {}",
                    num_channels + 2,
                    tokens.len()
                ),
            ));
        }
        let time: f64 = tokens[0]
            .parse()
            .map_err(|_| parse_err(line_no, format!("non-numeric time `{}`", tokens[0])))?;
        if tokens[1] != "1" {
            report
                .dropped_rows
                .push((data_row, format!("flag `{}`", tokens[1])));
            continue;
        }
        let mut frame: Vec<[f64; 6]> = vec![[0.0; 6]; coils.len()];
        for (tok, &(ci, comp)) in tokens[2..].iter().zip(&channel_map) {
            frame[ci][comp] = tok
                .parse()
                .map_err(|_| parse_err(line_no, format!("non-numeric value `{tok}`")))?;
        }
        timestamps.push(time);
        for (ci, v) in frame.iter().enumerate() {
            samples[ci].push(CoilSample {
                position: Vec3::new(v[0], v[1], v[2]),
                normal: Vec3::new(v[3], v[4], v[5]),
            });
        }
    }

    let set = CoilTrajectorySet::new(coils, timestamps, samples)?;
    Ok((set, report))
}

/// Derives the coil layout from a CSV header row of `<coil>_<component>`
/// channel names (a leading `time` column is ignored). Returns `None` when
/// the first row is numeric (no header) or does not follow the pattern.
pub fn csv_header_layout(text: &str) -> Option<Vec<String>> {
    let header = text.lines().map(str::trim).find(|l| !l.is_empty())?;
    let cells: Vec<&str> = header.split(',').map(str::trim).collect();
    if cells[0].parse::<f64>().is_ok() {
        return None;
    }
    let names = if cells[0].eq_ignore_ascii_case("time") {
        &cells[1..]
    } else {
        &cells[..]
    };
    if names.is_empty() || names.len() % 6 != 0 {
        return None;
    }
    let mut layout = Vec::new();
    for group in names.chunks_exact(6) {
        let (coil, first) = split_channel_name(group[0])?;
        if first != 0 {
            return None;
        }
        for (k, name) in group.iter().enumerate() {
            let (c, comp) = split_channel_name(name)?;
            if c != coil || comp != k {
                return None;
            }
        }
        layout.push(coil.to_string());
    }
    Some(layout)
}

/// Parses a coil CSV: optional header row, optional leading time column,
/// then 6 columns (x,y,z,nx,ny,nz) per coil in `layout` order.
///
/// Without a time column, timestamps are `frame_period`-spaced from 0.
pub fn parse_coil_csv(
    text: &str,
    layout: &[String],
    frame_period: f64,
) -> Result<CoilTrajectorySet, TrackError> {
    let expected = 6 * layout.len();
    let mut timestamps = Vec::new();
    let mut samples: Vec<Vec<CoilSample>> = vec![Vec::new(); layout.len()];
    let mut has_time: Option<bool> = None;
    let mut frame = 0usize;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        // Header row: starts with a non-numeric token.
        if timestamps.is_empty() && cells[0].parse::<f64>().is_err() {
            continue;
        }
        let with_time = match has_time {
            Some(b) => b,
            None => {
                let b = if cells.len() == expected + 1 {
                    true
                } else if cells.len() == expected {
                    false
                } else {
                    return Err(parse_err(
                        line_no,
                        format!(
                            "expected {} or {} columns for {} coils, found {}",
                            expected,
                            expected + 1,
                            layout.len(),
                            cells.len()
                        ),
                    ));
                };
                has_time = Some(b);
                b
            }
        };
        let need = if with_time { expected + 1 } else { expected };
        if cells.len() != need {
            return Err(parse_err(
                line_no,
                format!("expected {} columns, found {}", need, cells.len()),
            ));
        }
        let mut values = Vec::with_capacity(need);
        for cell in &cells {
            values.push(
                cell.parse::<f64>()
                    .map_err(|_| parse_err(line_no, format!("non-numeric cell `{cell}`")))?,
            );
        }
        let (time, data) = if with_time {
            (values[0], &values[1..])
        } else {
            (frame as f64 * frame_period, &values[..])
        };
        timestamps.push(time);
        for (ci, chunk) in data.chunks_exact(6).enumerate() {
            samples[ci].push(CoilSample {
                position: Vec3::new(chunk[0], chunk[1], chunk[2]),
                normal: Vec3::new(chunk[3], chunk[4], chunk[5]),
            });
        }
        frame += 1;
    }
    if timestamps.is_empty() {
        return Err(TrackError::NoFrames);
    }
    CoilTrajectorySet::new(layout.to_vec(), timestamps, samples)
}

/// Per-axis sinusoid parameters: amplitude (mm), frequency (Hz), phase (rad).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AxisSinusoid {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

/// One synthesized coil: base position plus a sinusoid per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoilSynthSpec {
    pub name: String,
    pub base: [f64; 3],
    pub axes: [AxisSinusoid; 3],
}

/// Deterministic sinusoidal trajectory fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySynthSpec {
    pub coils: Vec<CoilSynthSpec>,
    /// Frame rate in Hz.
    pub frame_rate: f64,
    /// Duration in seconds.
    pub duration: f64,
}

/// position(t) = base + amplitude·sin(2π·freq·t + phase) per axis;
/// normals constant (0,0,1).
pub fn synth_trajectories(spec: &TrajectorySynthSpec) -> Result<CoilTrajectorySet, TrackError> {
    if spec.frame_rate <= 0.0 {
        return Err(TrackError::InvalidSpec("frame rate must be > 0".into()));
    }
    if spec.duration <= 0.0 {
        return Err(TrackError::InvalidSpec("duration must be > 0".into()));
    }
    if spec.coils.is_empty() {
        return Err(TrackError::InvalidSpec("no coils in spec".into()));
    }
    let frame_count = (spec.duration * spec.frame_rate).round() as usize;
    if frame_count == 0 {
        return Err(TrackError::NoFrames);
    }
    let period = 1.0 / spec.frame_rate;
    let timestamps: Vec<f64> = (0..frame_count).map(|f| f as f64 * period).collect();
    let tau = std::f64::consts::TAU;
    let samples = spec
        .coils
        .iter()
        .map(|coil| {
            timestamps
                .iter()
                .map(|&t| {
                    let mut p = [0.0; 3];
                    for a in 0..3 {
                        let s = coil.axes[a];
                        p[a] = coil.base[a] + s.amplitude * (tau * s.frequency * t + s.phase).sin();
                    }
                    CoilSample {
                        position: Vec3::new(p[0], p[1], p[2]),
                        normal: Vec3::new(0.0, 0.0, 1.0),
                    }
                })
                .collect()
        })
        .collect();
    CoilTrajectorySet::new(
        spec.coils.iter().map(|c| c.name.clone()).collect(),
        timestamps,
        samples,
    )
}

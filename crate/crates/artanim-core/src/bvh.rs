//! BVH motion-capture documents in the coil-per-ROOT encoding.
//!
//! Each EMA coil becomes an independent `ROOT` with six channels (three
//! positions, three rotation slots) and an `End Site` whose offset is a unit
//! vector. In `normals` rotation mode the rotation slots carry the raw
//! orientation normal components; `euler` mode converts them to degrees. The
//! mode is recorded in a `# ROTATIONS <mode>` comment so round-trips are
//! unambiguous.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec3;
use crate::trackio::{CoilTrajectorySet, DEFAULT_FRAME_PERIOD};

/// Canonical channel labels: positions then rotation slots.
pub const CHANNEL_LABELS: [&str; 6] = [
    "Xposition",
    "Yposition",
    "Zposition",
    "Zrotation",
    "Xrotation",
    "Yrotation",
];

/// How the three rotation channels are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationMode {
    /// Channel values are the raw nx, ny, nz of the orientation normal.
    Normals,
    /// Channel values are Euler angles in degrees, in channel-label order.
    Euler,
}

impl RotationMode {
    fn tag(self) -> &'static str {
        match self {
            RotationMode::Normals => "normals",
            RotationMode::Euler => "euler",
        }
    }
}

/// One coil's ROOT block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvhRoot {
    pub name: String,
    pub offset: Vec3,
    pub channels: Vec<String>,
    pub end_site_offset: Vec3,
}

/// A parsed or constructed BVH document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvhDocument {
    pub roots: Vec<BvhRoot>,
    pub frame_time: f64,
    pub rotation_mode: RotationMode,
    /// Motion table: one row per frame, 6 values per root in root order.
    pub motion: Vec<Vec<f64>>,
}

impl BvhDocument {
    pub fn frame_count(&self) -> usize {
        self.motion.len()
    }

    pub fn channel_count(&self) -> usize {
        self.roots.iter().map(|r| r.channels.len()).sum()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BvhError {
    #[error("empty trajectory set")]
    EmptySet,
    #[error("unexpected token `{found}`, expected {expected}")]
    Unexpected { expected: String, found: String },
    #[error("nested JOINT hierarchies are not supported")]
    NestedJoint,
    #[error("root {root}: unsupported channel shape ({got} channels, need 6: 3 position + 3 rotation)")]
    UnsupportedChannels { root: String, got: usize },
    #[error("motion row {row} has {got} values, expected {expected}")]
    RowArity {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("declared Frames: {declared} but found {found} motion rows")]
    FrameCount { declared: usize, found: usize },
    #[error("non-numeric value `{0}`")]
    NonNumeric(String),
    #[error("orientation normal {0:?} is not unit length")]
    NonUnitNormal([f64; 3]),
    #[error("unexpected end of input, expected {0}")]
    Eof(String),
}

/// Converts a unit orientation normal to Euler degrees (θx, θy, θz) with
/// θz = 0, satisfying Ry(θy)·Rx(θx)·(0,0,1) = n.
pub fn normal_to_euler(n: Vec3) -> Result<(f64, f64, f64), BvhError> {
    if (n.norm() - 1.0).abs() > 1e-6 {
        return Err(BvhError::NonUnitNormal([n.x, n.y, n.z]));
    }
    let theta_x = (-n.y).clamp(-1.0, 1.0).asin();
    let theta_y = n.x.atan2(n.z);
    Ok((theta_x.to_degrees(), theta_y.to_degrees(), 0.0))
}

/// Inverse of [`normal_to_euler`]: n = Ry(θy)·Rx(θx)·(0,0,1).
pub fn euler_to_normal(theta_x_deg: f64, theta_y_deg: f64) -> Vec3 {
    let tx = theta_x_deg.to_radians();
    let ty = theta_y_deg.to_radians();
    Vec3::new(ty.sin() * tx.cos(), -tx.sin(), ty.cos() * tx.cos())
}

/// Median of successive timestamp differences; falls back to the default
/// frame period for single-frame inputs.
fn median_frame_time(timestamps: &[f64]) -> f64 {
    let mut deltas: Vec<f64> = timestamps.windows(2).map(|w| w[1] - w[0]).collect();
    if deltas.is_empty() {
        return DEFAULT_FRAME_PERIOD;
    }
    deltas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = deltas.len();
    if n % 2 == 1 {
        deltas[n / 2]
    } else {
        0.5 * (deltas[n / 2 - 1] + deltas[n / 2])
    }
}

/// Encodes a trajectory set as one ROOT per coil; offsets are the frame-0
/// coil positions, motion rows carry positions plus mode-dependent rotation
/// values.
pub fn to_bvh(set: &CoilTrajectorySet, mode: RotationMode) -> Result<BvhDocument, BvhError> {
    if set.frame_count() == 0 || set.coils.is_empty() {
        return Err(BvhError::EmptySet);
    }
    let roots = set
        .coils
        .iter()
        .enumerate()
        .map(|(ci, name)| BvhRoot {
            name: name.clone(),
            offset: set.sample(ci, 0).position,
            channels: CHANNEL_LABELS.iter().map(|s| s.to_string()).collect(),
            end_site_offset: Vec3::new(0.0, 0.0, 1.0),
        })
        .collect();
    let mut motion = Vec::with_capacity(set.frame_count());
    for f in 0..set.frame_count() {
        let mut row = Vec::with_capacity(set.coils.len() * 6);
        for ci in 0..set.coils.len() {
            let s = set.sample(ci, f);
            row.extend_from_slice(&[s.position.x, s.position.y, s.position.z]);
            match mode {
                RotationMode::Normals => {
                    row.extend_from_slice(&[s.normal.x, s.normal.y, s.normal.z]);
                }
                RotationMode::Euler => {
                    let (tx, ty, tz) = normal_to_euler(s.normal)?;
                    // label order is Zrotation Xrotation Yrotation
                    row.extend_from_slice(&[tz, tx, ty]);
                }
            }
        }
        motion.push(row);
    }
    Ok(BvhDocument {
        roots,
        frame_time: median_frame_time(&set.timestamps),
        rotation_mode: mode,
        motion,
    })
}

fn fmt6(x: f64) -> String {
    // avoid "-0.000000"
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

/// Serializes a document; byte output is deterministic for equal inputs.
pub fn write_bvh(doc: &BvhDocument) -> String {
    let mut out = String::new();
    out.push_str("HIERARCHY\n");
    let _ = writeln!(out, "# ROTATIONS {}", doc.rotation_mode.tag());
    for root in &doc.roots {
        let _ = writeln!(out, "ROOT {}", root.name);
        out.push_str("{\n");
        let _ = writeln!(
            out,
            "  OFFSET {} {} {}",
            fmt6(root.offset.x),
            fmt6(root.offset.y),
            fmt6(root.offset.z)
        );
        let _ = writeln!(
            out,
            "  CHANNELS {} {}",
            root.channels.len(),
            root.channels.join(" ")
        );
        out.push_str("  End Site\n  {\n");
        let _ = writeln!(
            out,
            "    OFFSET {} {} {}",
            fmt6(root.end_site_offset.x),
            fmt6(root.end_site_offset.y),
            fmt6(root.end_site_offset.z)
        );
        out.push_str("  }\n}\n");
    }
    out.push_str("MOTION\n");
    let _ = writeln!(out, "Frames: {}", doc.frame_count());
    let _ = writeln!(out, "Frame Time: {}", fmt6(doc.frame_time));
    for row in &doc.motion {
        let cells: Vec<String> = row.iter().map(|&v| fmt6(v)).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

struct Tokens<'a> {
    iter: std::iter::Peekable<std::vec::IntoIter<&'a str>>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> (Self, RotationMode) {
        let mut mode = RotationMode::Euler;
        let mut tokens = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if rest == "ROTATIONS normals" {
                    mode = RotationMode::Normals;
                }
                continue;
            }
            tokens.extend(line.split_whitespace());
        }
        (
            Self {
                iter: tokens.into_iter().peekable(),
            },
            mode,
        )
    }

    fn next(&mut self, expected: &str) -> Result<&'a str, BvhError> {
        self.iter.next().ok_or_else(|| BvhError::Eof(expected.into()))
    }

    fn expect(&mut self, keyword: &str) -> Result<(), BvhError> {
        let tok = self.next(keyword)?;
        if tok != keyword {
            return Err(BvhError::Unexpected {
                expected: keyword.into(),
                found: tok.into(),
            });
        }
        Ok(())
    }

    fn peek(&mut self) -> Option<&&'a str> {
        self.iter.peek()
    }

    fn number(&mut self, what: &str) -> Result<f64, BvhError> {
        let tok = self.next(what)?;
        tok.parse().map_err(|_| BvhError::NonNumeric(tok.into()))
    }
}

fn parse_root(tokens: &mut Tokens) -> Result<BvhRoot, BvhError> {
    let name = tokens.next("root name")?.to_string();
    tokens.expect("{")?;
    tokens.expect("OFFSET")?;
    let offset = Vec3::new(
        tokens.number("offset x")?,
        tokens.number("offset y")?,
        tokens.number("offset z")?,
    );
    tokens.expect("CHANNELS")?;
    let count = tokens.number("channel count")? as usize;
    let mut channels = Vec::with_capacity(count);
    for _ in 0..count {
        channels.push(tokens.next("channel label")?.to_string());
    }
    let positions = channels
        .iter()
        .take(3)
        .filter(|c| c.ends_with("position"))
        .count();
    let rotations = channels
        .iter()
        .skip(3)
        .filter(|c| c.ends_with("rotation"))
        .count();
    if count != 6 || positions != 3 || rotations != 3 {
        return Err(BvhError::UnsupportedChannels {
            root: name,
            got: count,
        });
    }
    let next = tokens.next("End Site or JOINT")?;
    if next == "JOINT" {
        return Err(BvhError::NestedJoint);
    }
    if next != "End" {
        return Err(BvhError::Unexpected {
            expected: "End Site".into(),
            found: next.into(),
        });
    }
    tokens.expect("Site")?;
    tokens.expect("{")?;
    tokens.expect("OFFSET")?;
    let end_site_offset = Vec3::new(
        tokens.number("end site x")?,
        tokens.number("end site y")?,
        tokens.number("end site z")?,
    );
    tokens.expect("}")?;
    tokens.expect("}")?;
    Ok(BvhRoot {
        name,
        offset,
        channels,
        end_site_offset,
    })
}

/// Parses the flat coil-per-ROOT BVH shape; nested JOINTs are rejected.
pub fn parse_bvh(text: &str) -> Result<BvhDocument, BvhError> {
    let (mut tokens, rotation_mode) = Tokens::new(text);
    tokens.expect("HIERARCHY")?;
    let mut roots = Vec::new();
    loop {
        match tokens.peek() {
            Some(&"ROOT") => {
                tokens.expect("ROOT")?;
                roots.push(parse_root(&mut tokens)?);
            }
            Some(&"MOTION") => break,
            Some(&"JOINT") => return Err(BvhError::NestedJoint),
            Some(tok) => {
                return Err(BvhError::Unexpected {
                    expected: "ROOT or MOTION".into(),
                    found: (*tok).into(),
                })
            }
            None => return Err(BvhError::Eof("MOTION".into())),
        }
    }
    tokens.expect("MOTION")?;
    tokens.expect("Frames:")?;
    let declared = tokens.number("frame count")? as usize;
    tokens.expect("Frame")?;
    tokens.expect("Time:")?;
    let frame_time = tokens.number("frame time")?;

    let columns: usize = roots.iter().map(|r| r.channels.len()).sum();
    let mut values = Vec::new();
    while let Some(tok) = tokens.peek() {
        let tok = *tok;
        tokens.next("motion value")?;
        values.push(tok.parse::<f64>().map_err(|_| BvhError::NonNumeric(tok.into()))?);
    }
    if columns == 0 || values.len() % columns != 0 {
        return Err(BvhError::RowArity {
            row: values.len() / columns.max(1) + 1,
            got: values.len() % columns.max(1),
            expected: columns,
        });
    }
    let found = values.len() / columns;
    if found != declared {
        return Err(BvhError::FrameCount { declared, found });
    }
    let motion = values.chunks_exact(columns).map(|c| c.to_vec()).collect();
    Ok(BvhDocument {
        roots,
        frame_time,
        rotation_mode,
        motion,
    })
}

//! Command-line front end for the articulatory motion-capture pipeline.
//!
//! Exit codes: 0 success, 2 parse/validation error, 3 numeric failure,
//! 4 I/O error. Output files are written to a temporary name and renamed on
//! success, so failures leave no partial outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use artanim_core::animate::{
    animate_utterance, export_obj_sequence_with_faces, export_sequence, write_atomic,
    AnimateError, ExportFormat, MeshSequence,
};
use artanim_core::bvh::{to_bvh, write_bvh, RotationMode};
use artanim_core::eval::{trajectory_correlation, EvalError};
use artanim_core::math::Vec3;
use artanim_core::mesh::{load_obj_tri, load_ply_points, save_ply_points, MeshError};
use artanim_core::register::{
    icp_point_to_mesh, palate_contour, umeyama_rigid, ContourConfig, IcpParams, RegisterError,
};
use artanim_core::rig::{build_rig, Rig, RigConfig, RigError};
use artanim_core::trackio::{
    csv_header_layout, parse_coil_csv, parse_est_ascii, synth_trajectories, CoilSynthSpec,
    TrackError, TrajectorySynthSpec, DEFAULT_FRAME_PERIOD,
};
use artanim_core::{CoilTrajectorySet, Plane, PointCloud, RigidTransform};

#[derive(Parser)]
#[command(name = "artanim", version, about = "EMA-to-animation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rotations {
    Normals,
    Euler,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeqFormat {
    ObjSequence,
    VertexCsv,
}

#[derive(Subcommand)]
enum Command {
    /// Convert an EMA recording (EST ASCII or CSV) to BVH.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Orientation channel encoding.
        #[arg(long, value_enum, default_value = "normals")]
        rotations: Rotations,
        /// Coil names for CSV input without a header row (comma-separated).
        #[arg(long)]
        coils: Option<String>,
        /// Frame rate in Hz for CSV input without a time column.
        #[arg(long)]
        frame_rate: Option<f64>,
    },
    /// Reconstruct the palate contour from pooled tongue-coil positions.
    Palate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Tongue coil names, comma-separated (e.g. T1,T2,T3).
        #[arg(long)]
        coils: String,
        /// Plane spec: `midsagittal` or `px,py,pz,nx,ny,nz`.
        #[arg(long, default_value = "midsagittal")]
        plane: String,
        /// World-space up direction `ux,uy,uz`.
        #[arg(long, default_value = "0,1,0")]
        up: String,
        /// Keep every N-th frame when pooling.
        #[arg(long, default_value_t = 1)]
        subsample: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        coils_csv: Option<String>,
        #[arg(long)]
        frame_rate: Option<f64>,
    },
    /// Rigidly register a point cloud onto a mesh (landmark fit, then ICP).
    Register {
        /// Source points: PLY point cloud or OBJ (vertices used).
        #[arg(long)]
        src: PathBuf,
        /// Destination surface (OBJ).
        #[arg(long)]
        dst: PathBuf,
        /// Landmark pairs, one `sx sy sz dx dy dz` row per line.
        #[arg(long)]
        landmarks: Option<PathBuf>,
        /// Output transform: 12 numbers, row-major [R | t].
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-12)]
        eps: f64,
    },
    /// Build a tongue/jaw rig from a mesh, a bind EMA frame, and a config.
    BuildRig {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        ema: PathBuf,
        /// Rig configuration (JSON, versioned `schema` field).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        coils: Option<String>,
        #[arg(long)]
        frame_rate: Option<f64>,
    },
    /// Animate a rig over an utterance and export the mesh sequence.
    Animate {
        #[arg(long)]
        rig: PathBuf,
        #[arg(long)]
        ema: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "obj-sequence")]
        format: SeqFormat,
        /// First frame (inclusive).
        #[arg(long)]
        start: Option<usize>,
        /// Last frame (exclusive).
        #[arg(long)]
        end: Option<usize>,
        #[arg(long)]
        coils: Option<String>,
        #[arg(long)]
        frame_rate: Option<f64>,
    },
    /// Correlate an exported sequence against the driving coil trajectories.
    Evaluate {
        #[arg(long)]
        rig: PathBuf,
        #[arg(long)]
        ema: PathBuf,
        /// Directory produced by `animate`.
        #[arg(long)]
        seq: PathBuf,
        /// Output report (JSON).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        coils: Option<String>,
        #[arg(long)]
        frame_rate: Option<f64>,
    },
    /// Synthesize sinusoidal coil trajectories from a spec.
    Synth {
        /// Synthesis spec (JSON, versioned `schema` field).
        #[arg(long)]
        spec: PathBuf,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
    },
}

enum AppError {
    Parse(String),
    Numeric(String),
    Io(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Parse(_) => 2,
            AppError::Numeric(_) => 3,
            AppError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Parse(m) | AppError::Numeric(m) | AppError::Io(m) => m,
        }
    }
}

impl From<TrackError> for AppError {
    fn from(e: TrackError) -> Self {
        AppError::Parse(e.to_string())
    }
}

impl From<MeshError> for AppError {
    fn from(e: MeshError) -> Self {
        AppError::Parse(e.to_string())
    }
}

impl From<artanim_core::bvh::BvhError> for AppError {
    fn from(e: artanim_core::bvh::BvhError) -> Self {
        AppError::Parse(e.to_string())
    }
}

impl From<RegisterError> for AppError {
    fn from(e: RegisterError) -> Self {
        match e {
            RegisterError::Degenerate(_) => AppError::Numeric(e.to_string()),
            _ => AppError::Parse(e.to_string()),
        }
    }
}

impl From<RigError> for AppError {
    fn from(e: RigError) -> Self {
        match e {
            RigError::DegenerateSpline
            | RigError::JawOnAxis
            | RigError::ParameterOutOfRange(_)
            | RigError::ArcLengthOutOfRange { .. } => AppError::Numeric(e.to_string()),
            _ => AppError::Parse(e.to_string()),
        }
    }
}

impl From<AnimateError> for AppError {
    fn from(e: AnimateError) -> Self {
        match e {
            AnimateError::Io { .. } => AppError::Io(e.to_string()),
            AnimateError::Rig(r) => r.into(),
            _ => AppError::Parse(e.to_string()),
        }
    }
}

impl From<EvalError> for AppError {
    fn from(e: EvalError) -> Self {
        AppError::Parse(e.to_string())
    }
}

fn read_text(path: &Path) -> Result<String, AppError> {
    std::fs::read_to_string(path)
        .map_err(|e| AppError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_out(path: &Path, content: &str) -> Result<(), AppError> {
    write_atomic(path, content).map_err(AppError::from)
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, AppError> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| AppError::Parse(format!("{}: {e}", path.display())))
}

fn split_coils(list: &str) -> Vec<String> {
    list.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_floats(spec: &str, expected: usize, what: &str) -> Result<Vec<f64>, AppError> {
    let values: Result<Vec<f64>, _> = spec.split(',').map(|t| t.trim().parse()).collect();
    match values {
        Ok(v) if v.len() == expected => Ok(v),
        _ => Err(AppError::Parse(format!(
            "{what} must be {expected} comma-separated numbers, got `{spec}`"
        ))),
    }
}

/// Loads an EMA recording; EST ASCII is detected by its first header line,
/// anything else is treated as coil CSV.
fn load_ema(
    path: &Path,
    coils: Option<&str>,
    frame_rate: Option<f64>,
) -> Result<CoilTrajectorySet, AppError> {
    let text = read_text(path)?;
    let first_line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'));
    if first_line == Some("EST_File Track") {
        let (set, report) = parse_est_ascii(&text)?;
        for (row, reason) in &report.dropped_rows {
            eprintln!("{}: dropped data row {row}: {reason}", path.display());
        }
        return Ok(set);
    }
    let layout = match coils {
        Some(list) => split_coils(list),
        None => csv_header_layout(&text).ok_or_else(|| {
            AppError::Parse(format!(
                "{}: cannot infer coil layout from CSV header; pass --coils",
                path.display()
            ))
        })?,
    };
    let period = match frame_rate {
        Some(r) if r > 0.0 => 1.0 / r,
        Some(r) => {
            return Err(AppError::Parse(format!("frame rate must be > 0, got {r}")));
        }
        None => DEFAULT_FRAME_PERIOD,
    };
    Ok(parse_coil_csv(&text, &layout, period)?)
}

fn bind_frame(set: &CoilTrajectorySet) -> Vec<(String, Vec3)> {
    set.coils
        .iter()
        .enumerate()
        .map(|(ci, name)| (name.clone(), set.sample(ci, 0).position))
        .collect()
}

fn parse_plane(spec: &str) -> Result<Plane, AppError> {
    if spec.eq_ignore_ascii_case("midsagittal") {
        return Ok(Plane::midsagittal());
    }
    let v = parse_floats(spec, 6, "plane")?;
    Plane::new(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]))
        .ok_or_else(|| AppError::Parse("plane normal must be non-zero".into()))
}

fn load_points(path: &Path) -> Result<PointCloud, AppError> {
    let text = read_text(path)?;
    if path.extension().and_then(|e| e.to_str()) == Some("ply") {
        Ok(load_ply_points(&text)?)
    } else {
        Ok(PointCloud::new(load_obj_tri(&text)?.vertices))
    }
}

fn parse_landmarks(path: &Path) -> Result<(PointCloud, PointCloud), AppError> {
    let text = read_text(path)?;
    let mut src = Vec::new();
    let mut dst = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        match v {
            Ok(v) if v.len() == 6 => {
                src.push(Vec3::new(v[0], v[1], v[2]));
                dst.push(Vec3::new(v[3], v[4], v[5]));
            }
            _ => {
                return Err(AppError::Parse(format!(
                    "{} line {}: expected 6 numbers (src xyz, dst xyz)",
                    path.display(),
                    i + 1
                )));
            }
        }
    }
    Ok((PointCloud::new(src), PointCloud::new(dst)))
}

fn format_transform(t: &RigidTransform) -> String {
    // 12 numbers: the rows of the 3x4 matrix [R | t]
    let mut out = String::new();
    for r in 0..3 {
        let _ = writeln!(
            out,
            "{:.9} {:.9} {:.9} {:.9}",
            t.rotation[(r, 0)],
            t.rotation[(r, 1)],
            t.rotation[(r, 2)],
            t.translation[r]
        );
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthConfig {
    schema: u32,
    coils: Vec<CoilSynthSpec>,
    frame_rate: f64,
    duration: f64,
}

fn check_schema(found: u32, what: &str) -> Result<(), AppError> {
    if found == 1 {
        Ok(())
    } else {
        Err(AppError::Parse(format!(
            "unsupported {what} schema {found} (expected 1)"
        )))
    }
}

/// Rebuilds a mesh sequence from an `animate` output directory, either the
/// per-frame OBJ files or `vertices.csv`.
fn load_sequence(dir: &Path, set: &CoilTrajectorySet) -> Result<MeshSequence, AppError> {
    let csv = dir.join("vertices.csv");
    let (frame_indices, tongue_frames) = if csv.is_file() {
        load_sequence_csv(&csv)?
    } else {
        load_sequence_objs(dir)?
    };
    let timestamps = frame_indices
        .iter()
        .map(|&f| {
            set.timestamps.get(f).copied().ok_or_else(|| {
                AppError::Parse(format!(
                    "sequence frame {f} outside trajectory of {} frames",
                    set.frame_count()
                ))
            })
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let n = frame_indices.len();
    Ok(MeshSequence {
        timestamps,
        frame_indices,
        tongue_frames,
        mandible_transforms: vec![RigidTransform::identity(); n],
        mandible: None,
        maxilla: None,
    })
}

fn load_sequence_csv(path: &Path) -> Result<(Vec<usize>, Vec<Vec<Vec3>>), AppError> {
    let text = read_text(path)?;
    let bad = |line: usize, msg: &str| {
        AppError::Parse(format!("{} line {}: {msg}", path.display(), line))
    };
    let mut frames: Vec<(usize, Vec<Vec3>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (i == 0 && line.starts_with("frame,")) {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(bad(i + 1, "expected frame,time,vertex,x,y,z"));
        }
        let frame: usize = cells[0]
            .parse()
            .map_err(|_| bad(i + 1, "non-numeric frame index"))?;
        let vertex: usize = cells[2]
            .parse()
            .map_err(|_| bad(i + 1, "non-numeric vertex id"))?;
        let coords: Result<Vec<f64>, _> = cells[3..].iter().map(|c| c.parse()).collect();
        let coords = coords.map_err(|_| bad(i + 1, "non-numeric coordinate"))?;
        if frames.last().map(|(f, _)| *f) != Some(frame) {
            frames.push((frame, Vec::new()));
        }
        let buf = &mut frames.last_mut().unwrap().1;
        if vertex != buf.len() {
            return Err(bad(
                i + 1,
                "vertex ids must be contiguous from 0 within each frame \
                 (export without a tracked-vertex subset)",
            ));
        }
        buf.push(Vec3::new(coords[0], coords[1], coords[2]));
    }
    if frames.is_empty() {
        return Err(AppError::Parse(format!("{}: no data rows", path.display())));
    }
    Ok(frames.into_iter().unzip())
}

fn load_sequence_objs(dir: &Path) -> Result<(Vec<usize>, Vec<Vec<Vec3>>), AppError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| AppError::Io(format!("cannot read {}: {e}", dir.display())))?;
    let mut indexed: Vec<(usize, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| AppError::Io(e.to_string()))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name
            .strip_prefix("frame_")
            .and_then(|s| s.strip_suffix(".obj"))
        {
            let index: usize = stem.parse().map_err(|_| {
                AppError::Parse(format!("bad frame file name `{name}`"))
            })?;
            indexed.push((index, entry.path()));
        }
    }
    if indexed.is_empty() {
        return Err(AppError::Parse(format!(
            "{}: no frame_*.obj files or vertices.csv",
            dir.display()
        )));
    }
    indexed.sort_by_key(|(i, _)| *i);
    let mut frame_indices = Vec::with_capacity(indexed.len());
    let mut tongue_frames = Vec::with_capacity(indexed.len());
    for (index, path) in indexed {
        let mesh = load_obj_tri(&read_text(&path)?)?;
        frame_indices.push(index);
        tongue_frames.push(mesh.vertices);
    }
    Ok((frame_indices, tongue_frames))
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Convert {
            input,
            out,
            rotations,
            coils,
            frame_rate,
        } => {
            let set = load_ema(&input, coils.as_deref(), frame_rate)?;
            let mode = match rotations {
                Rotations::Normals => RotationMode::Normals,
                Rotations::Euler => RotationMode::Euler,
            };
            let doc = to_bvh(&set, mode)?;
            write_out(&out, &write_bvh(&doc))?;
            println!(
                "wrote {} ({} roots, {} frames)",
                out.display(),
                doc.roots.len(),
                doc.motion.len()
            );
        }
        Command::Palate {
            input,
            coils,
            plane,
            up,
            subsample,
            out,
            coils_csv,
            frame_rate,
        } => {
            let set = load_ema(&input, coils_csv.as_deref(), frame_rate)?;
            let plane = parse_plane(&plane)?;
            let u = parse_floats(&up, 3, "up")?;
            let up = Vec3::new(u[0], u[1], u[2]);
            if up.norm() < 1e-12 {
                return Err(AppError::Parse("up direction must be non-zero".into()));
            }
            let cfg = ContourConfig {
                up: up.normalize(),
                subsample,
            };
            let contour = palate_contour(&set, &split_coils(&coils), &plane, &cfg)?;
            write_out(&out, &save_ply_points(&contour))?;
            println!("wrote {} ({} contour points)", out.display(), contour.len());
        }
        Command::Register {
            src,
            dst,
            landmarks,
            out,
            max_iters,
            eps,
        } => {
            let src_cloud = load_points(&src)?;
            let target = load_obj_tri(&read_text(&dst)?)?;
            let init = match landmarks {
                Some(path) => {
                    let (lm_src, lm_dst) = parse_landmarks(&path)?;
                    umeyama_rigid(&lm_src, &lm_dst)?
                }
                None => RigidTransform::identity(),
            };
            let params = IcpParams {
                max_iterations: max_iters,
                convergence_eps: eps,
            };
            let result = icp_point_to_mesh(&src_cloud, &target, &init, &params)?;
            write_out(&out, &format_transform(&result.transform))?;
            println!(
                "wrote {} (rms {:.6} mm after {} iterations)",
                out.display(),
                result.rms,
                result.iterations
            );
        }
        Command::BuildRig {
            mesh,
            ema,
            config,
            out,
            coils,
            frame_rate,
        } => {
            let tongue = load_obj_tri(&read_text(&mesh)?)?;
            let set = load_ema(&ema, coils.as_deref(), frame_rate)?;
            let cfg: RigConfig = parse_json(&config)?;
            check_schema(cfg.schema, "rig config")?;
            let rig = build_rig(&tongue, &bind_frame(&set), &cfg)?;
            let json = serde_json::to_string_pretty(&rig)
                .map_err(|e| AppError::Io(e.to_string()))?;
            write_out(&out, &(json + "\n"))?;
            println!(
                "wrote {} ({} bones, {} vertices)",
                out.display(),
                rig.chain.bone_count(),
                rig.tongue.vertices.len()
            );
        }
        Command::Animate {
            rig,
            ema,
            out_dir,
            format,
            start,
            end,
            coils,
            frame_rate,
        } => {
            let rig: Rig = parse_json(&rig)?;
            let set = load_ema(&ema, coils.as_deref(), frame_rate)?;
            let range = match (start, end) {
                (None, None) => None,
                (s, e) => Some(s.unwrap_or(0)..e.unwrap_or(set.frame_count())),
            };
            let seq = animate_utterance(&rig, &set, range)?;
            let written = match format {
                SeqFormat::ObjSequence => {
                    export_obj_sequence_with_faces(&seq, &rig.tongue.faces, &out_dir)?
                }
                SeqFormat::VertexCsv => {
                    export_sequence(&seq, ExportFormat::VertexCsv, &out_dir, None)?
                }
            };
            println!(
                "wrote {} files ({} frames) to {}",
                written.len(),
                seq.frame_count(),
                out_dir.display()
            );
        }
        Command::Evaluate {
            rig,
            ema,
            seq,
            out,
            coils,
            frame_rate,
        } => {
            let rig: Rig = parse_json(&rig)?;
            let set = load_ema(&ema, coils.as_deref(), frame_rate)?;
            let sequence = load_sequence(&seq, &set)?;
            let report = trajectory_correlation(&sequence, &set, &rig)?;
            write_out(&out, &(report.to_json() + "\n"))?;
            match report.mean_r {
                Some(r) => println!("wrote {} (mean r {:.4})", out.display(), r),
                None => println!("wrote {} (all entries undefined)", out.display()),
            }
        }
        Command::Synth { spec, out } => {
            let cfg: SynthConfig = parse_json(&spec)?;
            check_schema(cfg.schema, "synthesis spec")?;
            let set = synth_trajectories(&TrajectorySynthSpec {
                coils: cfg.coils,
                frame_rate: cfg.frame_rate,
                duration: cfg.duration,
            })?;
            write_out(&out, &set.to_csv())?;
            println!(
                "wrote {} ({} coils, {} frames)",
                out.display(),
                set.coils.len(),
                set.frame_count()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

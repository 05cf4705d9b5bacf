//! End-to-end tests of the `artanim` binary: exit codes, file outputs, and
//! the synth → build-rig → animate → evaluate chain.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use artanim_core::math::Vec3;
use artanim_core::mesh::{catmull_clark, save_obj_tri, unit_cube_quads};

fn artanim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_artanim"))
        .args(args)
        .output()
        .expect("failed to spawn artanim")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Elongated box tongue written as OBJ, roughly 40 x 12 x 12 mm.
fn write_tongue_obj(path: &Path) {
    let mut quads = catmull_clark(&unit_cube_quads(), 2).unwrap();
    for v in &mut quads.vertices {
        *v = Vec3::new(v.x * 40.0, v.y * 12.0, v.z * 12.0);
    }
    fs::write(path, save_obj_tri(&quads.to_tri_mesh())).unwrap();
}

fn write_synth_spec(path: &Path) {
    let spec = r#"{
  "schema": 1,
  "frame_rate": 100.0,
  "duration": 0.3,
  "coils": [
    {
      "name": "T3",
      "base": [10.0, 12.5, 6.0],
      "axes": [
        {"amplitude": 0.0, "frequency": 0.0, "phase": 0.0},
        {"amplitude": 2.0, "frequency": 1.0, "phase": 0.0},
        {"amplitude": 0.0, "frequency": 0.0, "phase": 0.0}
      ]
    },
    {
      "name": "T2",
      "base": [19.5, 13.0, 6.0],
      "axes": [
        {"amplitude": 0.0, "frequency": 0.0, "phase": 0.0},
        {"amplitude": 2.0, "frequency": 2.0, "phase": 0.5},
        {"amplitude": 0.0, "frequency": 0.0, "phase": 0.0}
      ]
    },
    {
      "name": "T1",
      "base": [30.0, 12.5, 6.0],
      "axes": [
        {"amplitude": 0.0, "frequency": 0.0, "phase": 0.0},
        {"amplitude": 2.0, "frequency": 3.0, "phase": 1.0},
        {"amplitude": 0.0, "frequency": 0.0, "phase": 0.0}
      ]
    }
  ]
}
"#;
    fs::write(path, spec).unwrap();
}

fn write_rig_config(path: &Path) {
    let cfg = r#"{
  "schema": 1,
  "tongue_coils": ["T3", "T2", "T1"],
  "root_anchor": [0.0, 10.0, 6.0],
  "tip_anchor": [40.0, 12.0, 6.0],
  "joint_count": 4
}
"#;
    fs::write(path, cfg).unwrap();
}

#[test]
fn synth_then_convert_produces_bvh() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let csv = dir.path().join("coils.csv");
    let bvh = dir.path().join("coils.bvh");
    write_synth_spec(&spec);

    let out = artanim(&["synth", "--spec", path_str(&spec), "--out", path_str(&csv)]);
    assert_exit(&out, 0);
    assert!(csv.is_file());

    let out = artanim(&[
        "convert",
        "--in",
        path_str(&csv),
        "--out",
        path_str(&bvh),
        "--rotations",
        "normals",
    ]);
    assert_exit(&out, 0);
    let text = fs::read_to_string(&bvh).unwrap();
    assert_eq!(text.matches("ROOT ").count(), 3);
    assert!(text.contains("Frames: 30"));

    // identical inputs produce byte-identical output
    let bvh2 = dir.path().join("again.bvh");
    let out = artanim(&["convert", "--in", path_str(&csv), "--out", path_str(&bvh2)]);
    assert_exit(&out, 0);
    assert_eq!(fs::read(&bvh).unwrap(), fs::read(&bvh2).unwrap());
}

#[test]
fn convert_rejects_malformed_input_without_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    let bvh = dir.path().join("out.bvh");
    fs::write(&csv, "T1_x,T1_y,T1_z,T1_nx,T1_ny,T1_nz\n1,2,3\n").unwrap();
    let out = artanim(&["convert", "--in", path_str(&csv), "--out", path_str(&bvh)]);
    assert_exit(&out, 2);
    assert!(!out.stderr.is_empty());
    assert!(!bvh.exists(), "partial output left behind");
}

#[test]
fn missing_input_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = artanim(&[
        "convert",
        "--in",
        path_str(&dir.path().join("nope.csv")),
        "--out",
        path_str(&dir.path().join("out.bvh")),
    ]);
    assert_exit(&out, 4);
}

#[test]
fn register_identical_clouds_yields_identity() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("shape.obj");
    let transform = dir.path().join("transform.txt");
    write_tongue_obj(&mesh);
    let out = artanim(&[
        "register",
        "--src",
        path_str(&mesh),
        "--dst",
        path_str(&mesh),
        "--out",
        path_str(&transform),
    ]);
    assert_exit(&out, 0);
    let numbers: Vec<f64> = fs::read_to_string(&transform)
        .unwrap()
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(numbers.len(), 12);
    let identity = [
        1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0,
    ];
    for (a, b) in numbers.iter().zip(identity) {
        assert!((a - b).abs() < 1e-6, "transform not identity: {numbers:?}");
    }
}

#[test]
fn register_degenerate_landmarks_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("shape.obj");
    let landmarks = dir.path().join("landmarks.txt");
    write_tongue_obj(&mesh);
    // collinear landmark points make the rigid fit degenerate
    fs::write(
        &landmarks,
        "0 0 0 0 0 0\n1 0 0 1 0 0\n2 0 0 2 0 0\n3 0 0 3 0 0\n",
    )
    .unwrap();
    let out = artanim(&[
        "register",
        "--src",
        path_str(&mesh),
        "--dst",
        path_str(&mesh),
        "--landmarks",
        path_str(&landmarks),
        "--out",
        path_str(&dir.path().join("t.txt")),
    ]);
    assert_exit(&out, 3);
}

#[test]
fn rig_config_with_unknown_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("tongue.obj");
    let spec = dir.path().join("spec.json");
    let csv = dir.path().join("coils.csv");
    let cfg = dir.path().join("rig.json");
    write_tongue_obj(&mesh);
    write_synth_spec(&spec);
    assert_exit(
        &artanim(&["synth", "--spec", path_str(&spec), "--out", path_str(&csv)]),
        0,
    );
    fs::write(
        &cfg,
        r#"{"schema": 1, "tongue_coils": ["T3"], "root_anchor": [0,0,0],
           "tip_anchor": [1,1,1], "typo_field": true}"#,
    )
    .unwrap();
    let out = artanim(&[
        "build-rig",
        "--mesh",
        path_str(&mesh),
        "--ema",
        path_str(&csv),
        "--config",
        path_str(&cfg),
        "--out",
        path_str(&dir.path().join("rig.out.json")),
    ]);
    assert_exit(&out, 2);
}

#[test]
fn full_chain_synth_build_animate_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("tongue.obj");
    let spec = dir.path().join("spec.json");
    let csv = dir.path().join("coils.csv");
    let cfg = dir.path().join("rig-config.json");
    let rig = dir.path().join("rig.json");
    let seq = dir.path().join("seq");
    let report = dir.path().join("report.json");
    write_tongue_obj(&mesh);
    write_synth_spec(&spec);
    write_rig_config(&cfg);

    assert_exit(
        &artanim(&["synth", "--spec", path_str(&spec), "--out", path_str(&csv)]),
        0,
    );
    assert_exit(
        &artanim(&[
            "build-rig",
            "--mesh",
            path_str(&mesh),
            "--ema",
            path_str(&csv),
            "--config",
            path_str(&cfg),
            "--out",
            path_str(&rig),
        ]),
        0,
    );
    assert_exit(
        &artanim(&[
            "animate",
            "--rig",
            path_str(&rig),
            "--ema",
            path_str(&csv),
            "--out-dir",
            path_str(&seq),
            "--format",
            "obj-sequence",
        ]),
        0,
    );
    assert!(seq.join("frame_000000.obj").is_file());
    assert!(seq.join("frame_000029.obj").is_file());
    assert_exit(
        &artanim(&[
            "evaluate",
            "--rig",
            path_str(&rig),
            "--ema",
            path_str(&csv),
            "--seq",
            path_str(&seq),
            "--out",
            path_str(&report),
        ]),
        0,
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let mean = report["mean_r"].as_f64().expect("mean_r missing");
    assert!((-1.0..=1.0).contains(&mean), "mean_r {mean}");
    assert_eq!(report["entries"].as_array().unwrap().len(), 9); // 3 coils x 3 axes
}

#[test]
fn vertex_csv_sequence_evaluates_like_obj_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("tongue.obj");
    let spec = dir.path().join("spec.json");
    let csv = dir.path().join("coils.csv");
    let cfg = dir.path().join("rig-config.json");
    let rig = dir.path().join("rig.json");
    write_tongue_obj(&mesh);
    write_synth_spec(&spec);
    write_rig_config(&cfg);
    assert_exit(
        &artanim(&["synth", "--spec", path_str(&spec), "--out", path_str(&csv)]),
        0,
    );
    assert_exit(
        &artanim(&[
            "build-rig",
            "--mesh",
            path_str(&mesh),
            "--ema",
            path_str(&csv),
            "--config",
            path_str(&cfg),
            "--out",
            path_str(&rig),
        ]),
        0,
    );
    let mut reports = Vec::new();
    for format in ["obj-sequence", "vertex-csv"] {
        let seq = dir.path().join(format);
        let report = dir.path().join(format!("report-{format}.json"));
        assert_exit(
            &artanim(&[
                "animate",
                "--rig",
                path_str(&rig),
                "--ema",
                path_str(&csv),
                "--out-dir",
                path_str(&seq),
                "--format",
                format,
                "--start",
                "0",
                "--end",
                "10",
            ]),
            0,
        );
        assert_exit(
            &artanim(&[
                "evaluate",
                "--rig",
                path_str(&rig),
                "--ema",
                path_str(&csv),
                "--seq",
                path_str(&seq),
                "--out",
                path_str(&report),
            ]),
            0,
        );
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        reports.push(v["mean_r"].as_f64().unwrap());
    }
    // OBJ output is 6-decimal quantized, so the means agree only approximately
    assert!((reports[0] - reports[1]).abs() < 1e-3, "{reports:?}");
}

#[test]
fn palate_contour_from_est_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let est = dir.path().join("utt.est");
    let ply = dir.path().join("palate.ply");
    // 8 coils parked at cube corners around x = 0; midsagittal plane cuts it
    let mut text = String::from("EST_File Track\nDataType ascii\nNumFrames 2\nNumChannels 48\n");
    for (ci, _) in (0..8).enumerate() {
        for (k, comp) in ["x", "y", "z", "nx", "ny", "nz"].iter().enumerate() {
            text.push_str(&format!("Channel_{} C{ci}_{comp}\n", ci * 6 + k));
        }
    }
    text.push_str("EST_Header_End\n");
    for frame in 0..2 {
        let mut row = format!("{}.0 1", frame);
        for ci in 0..8 {
            let p = [
                (ci & 1) as f64 * 2.0 - 1.0,
                ((ci >> 1) & 1) as f64,
                ((ci >> 2) & 1) as f64,
            ];
            row.push_str(&format!(" {} {} {} 0 0 1", p[0], p[1], p[2]));
        }
        row.push('\n');
        text.push_str(&row);
    }
    fs::write(&est, text).unwrap();
    let out = artanim(&[
        "palate",
        "--in",
        path_str(&est),
        "--coils",
        "C0,C1,C2,C3,C4,C5,C6,C7",
        "--out",
        path_str(&ply),
    ]);
    assert_exit(&out, 0);
    let ply_text = fs::read_to_string(&ply).unwrap();
    assert!(ply_text.starts_with("ply"));
    // upper branch of the cross-section lies at y = 1
    let header_end = ply_text.find("end_header").unwrap();
    for line in ply_text[header_end..].lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert!((vals[0]).abs() < 1e-6, "not on midsagittal plane: {line}");
        assert!((vals[1] - 1.0).abs() < 1e-6, "not on upper branch: {line}");
    }
}

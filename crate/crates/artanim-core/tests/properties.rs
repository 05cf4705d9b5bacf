//! Randomized property tests for the serialization round-trips and the
//! geometric invariants of the core algorithms.

use proptest::prelude::*;

use artanim_core::bvh::{parse_bvh, to_bvh, write_bvh, RotationMode};
use artanim_core::math::{rotation_about_axis, Vec3};
use artanim_core::mesh::deduplicate_vertices;
use artanim_core::register::{convex_hull_indices, umeyama_rigid};
use artanim_core::rig::Spline;
use artanim_core::trackio::{csv_header_layout, parse_coil_csv, CoilSample};
use artanim_core::{CoilTrajectorySet, PointCloud, RigidTransform, TriMesh};

fn vec3_strategy(extent: f64) -> impl Strategy<Value = Vec3> {
    (
        -extent..extent,
        prop_oneof![Just(0.0), -extent..extent],
        -extent..extent,
    )
        .prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unit_strategy() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter_map("near-zero direction", |(x, y, z)| {
            let v = Vec3::new(x, y, z);
            (v.norm() > 1e-3).then(|| v.normalize())
        })
}

fn set_strategy() -> impl Strategy<Value = CoilTrajectorySet> {
    (1usize..=4, 1usize..=20)
        .prop_flat_map(|(coils, frames)| {
            proptest::collection::vec(
                proptest::collection::vec((vec3_strategy(100.0), unit_strategy()), frames),
                coils,
            )
        })
        .prop_map(|columns| {
            let coils: Vec<String> = (0..columns.len()).map(|i| format!("c{i}")).collect();
            let frames = columns[0].len();
            let timestamps: Vec<f64> = (0..frames).map(|f| f as f64 * 0.005).collect();
            let samples = columns
                .into_iter()
                .map(|col| {
                    col.into_iter()
                        .map(|(position, normal)| CoilSample { position, normal })
                        .collect()
                })
                .collect();
            CoilTrajectorySet::new(coils, timestamps, samples).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// CSV serialization recovers coils, timestamps, and samples within the
    /// 6-decimal formatting precision.
    #[test]
    fn csv_round_trip(set in set_strategy()) {
        let csv = set.to_csv();
        let layout = csv_header_layout(&csv).expect("header layout");
        prop_assert_eq!(&layout, &set.coils);
        let parsed = parse_coil_csv(&csv, &layout, 0.005).unwrap();
        prop_assert_eq!(parsed.frame_count(), set.frame_count());
        for (a, b) in parsed.timestamps.iter().zip(&set.timestamps) {
            prop_assert!((a - b).abs() < 1e-5);
        }
        for ci in 0..set.coils.len() {
            for f in 0..set.frame_count() {
                let (a, b) = (parsed.sample(ci, f), set.sample(ci, f));
                prop_assert!((a.position - b.position).norm() < 1e-5);
                prop_assert!((a.normal - b.normal).norm() < 1e-5);
            }
        }
    }

    /// BVH text round-trips coil count, frame count, and motion values.
    #[test]
    fn bvh_round_trip(set in set_strategy(), euler in any::<bool>()) {
        let mode = if euler { RotationMode::Euler } else { RotationMode::Normals };
        let doc = to_bvh(&set, mode).unwrap();
        let parsed = parse_bvh(&write_bvh(&doc)).unwrap();
        prop_assert_eq!(parsed.roots.len(), set.coils.len());
        prop_assert_eq!(parsed.motion.len(), doc.motion.len());
        for (ra, rb) in parsed.motion.iter().zip(&doc.motion) {
            for (a, b) in ra.iter().zip(rb) {
                prop_assert!((a - b).abs() < 1e-4);
            }
        }
    }

    /// The rigid fit between a cloud and its transform recovers the transform.
    #[test]
    fn umeyama_recovers_rigid_motion(
        points in proptest::collection::vec(vec3_strategy(50.0), 4..100),
        axis in unit_strategy(),
        angle in -3.0..3.0f64,
        t in vec3_strategy(40.0),
    ) {
        let cloud = PointCloud::new(points);
        let truth = RigidTransform::new(rotation_about_axis(axis, angle), t);
        let est = match umeyama_rigid(&cloud, &cloud.transformed(&truth)) {
            Ok(est) => est,
            // nearly-degenerate clouds (collinear within tolerance) may be rejected
            Err(_) => return Ok(()),
        };
        let residual = est.compose(&truth.inverse());
        prop_assert!(residual.rotation_angle() < 1e-6);
        prop_assert!((est.translation - truth.translation).norm() < 1e-6);
    }

    /// Every input point lies on or inside each hull facet's plane.
    #[test]
    fn hull_facets_enclose_cloud(
        points in proptest::collection::vec(vec3_strategy(20.0), 8..40),
    ) {
        let facets = match convex_hull_indices(&points) {
            Ok(f) => f,
            Err(_) => return Ok(()), // degenerate cloud
        };
        prop_assert!(!facets.is_empty());
        let centroid = points.iter().sum::<Vec3>() / points.len() as f64;
        for f in &facets {
            let (a, b, c) = (points[f[0]], points[f[1]], points[f[2]]);
            let mut n = (b - a).cross(&(c - a));
            if n.dot(&(centroid - a)) > 0.0 {
                n = -n; // orient outward
            }
            let n = n.normalize();
            for p in &points {
                prop_assert!(n.dot(&(p - a)) < 1e-7);
            }
        }
    }

    /// Vertex deduplication is idempotent.
    #[test]
    fn dedup_is_idempotent(
        points in proptest::collection::vec(vec3_strategy(5.0), 3..30),
    ) {
        // duplicate every vertex so there is something to merge
        let n = points.len();
        let mut vertices = points.clone();
        vertices.extend(points.iter().copied());
        let faces: Vec<[usize; 3]> = (0..n)
            .map(|i| [i, (i + 1) % n, n + i])
            .collect();
        let mesh = TriMesh::new(vertices, faces).unwrap();
        let once = deduplicate_vertices(&mesh, 1e-9);
        let twice = deduplicate_vertices(&once, 1e-9);
        prop_assert!(once.vertices.len() <= n);
        prop_assert_eq!(once.vertices.len(), twice.vertices.len());
        prop_assert_eq!(once.faces.len(), twice.faces.len());
    }

    /// A clamped spline starts and ends at its anchor control points, and its
    /// arc length is at least the anchor-to-anchor chord.
    #[test]
    fn spline_clamped_and_longer_than_chord(
        cps in proptest::collection::vec(vec3_strategy(30.0), 4..8),
    ) {
        let spline = match Spline::new(cps.clone()) {
            Ok(s) => s,
            Err(_) => return Ok(()), // coincident control points
        };
        let start = spline.eval(0.0).unwrap();
        let end = spline.eval(1.0).unwrap();
        prop_assert!((start - cps[0]).norm() < 1e-9);
        prop_assert!((end - cps[cps.len() - 1]).norm() < 1e-9);
        let chord = (cps[cps.len() - 1] - cps[0]).norm();
        prop_assert!(spline.arc_length() >= chord - 1e-6);
    }
}

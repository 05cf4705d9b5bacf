//! Plane cross-sections of meshes and palate contour reconstruction.

use crate::math::{Plane, PointCloud, Vec3};
use crate::mesh::TriMesh;
use crate::trackio::CoilTrajectorySet;

use super::{convex_hull_3d, RegisterError};

/// Chained triangle-plane intersection points.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Vec3>,
    pub closed: bool,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        let mut len: f64 = self
            .points
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .sum();
        if self.closed && self.points.len() > 1 {
            len += (self.points[0] - self.points[self.points.len() - 1]).norm();
        }
        len
    }
}

const TANGENCY_NUDGE: f64 = 1e-9;
const WELD_EPS: f64 = 1e-7;

fn quantize(p: Vec3) -> (i64, i64, i64) {
    (
        (p.x / WELD_EPS).round() as i64,
        (p.y / WELD_EPS).round() as i64,
        (p.z / WELD_EPS).round() as i64,
    )
}

/// Intersects a mesh with a plane, chaining the per-triangle segments into
/// polylines. Vertex tangencies are resolved by nudging the plane offset.
pub fn plane_mesh_intersection(mesh: &TriMesh, plane: &Plane) -> Vec<Polyline> {
    // shift the plane until no vertex lies exactly on it
    let mut offset = 0.0;
    'nudge: loop {
        for v in &mesh.vertices {
            if (plane.signed_distance(*v) - offset).abs() < TANGENCY_NUDGE / 2.0 {
                offset += TANGENCY_NUDGE;
                continue 'nudge;
            }
        }
        break;
    }
    let dist = |p: Vec3| plane.signed_distance(p) - offset;

    let mut segments: Vec<(Vec3, Vec3)> = Vec::new();
    for fi in 0..mesh.faces.len() {
        let tri = mesh.triangle(fi);
        let d = [dist(tri[0]), dist(tri[1]), dist(tri[2])];
        let mut crossings = Vec::new();
        for k in 0..3 {
            let (da, db) = (d[k], d[(k + 1) % 3]);
            if (da > 0.0) != (db > 0.0) {
                let t = da / (da - db);
                crossings.push(tri[k] + (tri[(k + 1) % 3] - tri[k]) * t);
            }
        }
        if crossings.len() == 2 {
            segments.push((crossings[0], crossings[1]));
        }
    }

    // chain segments into polylines by welding coincident endpoints
    use std::collections::HashMap;
    let mut point_ids: HashMap<(i64, i64, i64), usize> = HashMap::new();
    let mut points: Vec<Vec3> = Vec::new();
    let mut id_of = |p: Vec3, points: &mut Vec<Vec3>| -> usize {
        *point_ids.entry(quantize(p)).or_insert_with(|| {
            points.push(p);
            points.len() - 1
        })
    };
    let mut adjacency: Vec<Vec<usize>> = Vec::new();
    for (a, b) in &segments {
        let ia = id_of(*a, &mut points);
        let ib = id_of(*b, &mut points);
        while adjacency.len() < points.len() {
            adjacency.push(Vec::new());
        }
        if ia != ib {
            adjacency[ia].push(ib);
            adjacency[ib].push(ia);
        }
    }

    let mut visited = vec![false; points.len()];
    let mut polylines = Vec::new();
    // open chains first (endpoints have degree 1), then closed loops
    for start_pass in 0..2 {
        for start in 0..points.len() {
            if visited[start] {
                continue;
            }
            let degree = adjacency[start].len();
            if start_pass == 0 && degree != 1 {
                continue;
            }
            if degree == 0 {
                visited[start] = true;
                continue;
            }
            let mut chain = vec![start];
            visited[start] = true;
            let mut current = start;
            loop {
                let next = adjacency[current].iter().copied().find(|&n| !visited[n]);
                match next {
                    Some(n) => {
                        visited[n] = true;
                        chain.push(n);
                        current = n;
                    }
                    None => break,
                }
            }
            let closed = adjacency[current].contains(&start) && chain.len() > 2;
            polylines.push(Polyline {
                points: chain.iter().map(|&i| points[i]).collect(),
                closed,
            });
        }
    }
    polylines
}

/// Axis conventions for extracting the palate contour's upper branch.
#[derive(Debug, Clone, Copy)]
pub struct ContourConfig {
    /// World-space vertical direction defining "up" (+Y by default).
    pub up: Vec3,
    /// Keep every `subsample`-th frame when pooling coil positions.
    pub subsample: usize,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self {
            up: Vec3::new(0.0, 1.0, 0.0),
            subsample: 1,
        }
    }
}

fn upper_branch(polyline: &Polyline, up: Vec3, abscissa: Vec3) -> Vec<Vec3> {
    let pts = &polyline.points;
    if pts.len() < 2 {
        return pts.clone();
    }
    let coord = |p: &Vec3| p.dot(&abscissa);
    let height = |p: &Vec3| p.dot(&up);
    // split at the abscissa extremes; when an extreme is a whole vertical
    // edge (tied abscissa), anchor the split at its higher end
    let (imin, _) = pts
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (coord(a.1), -height(a.1))
                .partial_cmp(&(coord(b.1), -height(b.1)))
                .unwrap()
        })
        .unwrap();
    let (imax, _) = pts
        .iter()
        .enumerate()
        .max_by(|a, b| {
            (coord(a.1), height(a.1))
                .partial_cmp(&(coord(b.1), height(b.1)))
                .unwrap()
        })
        .unwrap();
    if !polyline.closed {
        let (lo, hi) = (imin.min(imax), imin.max(imax));
        return pts[lo..=hi].to_vec();
    }
    // two branches of the closed loop between the abscissa extremes
    let n = pts.len();
    let mut branch_a = Vec::new();
    let mut i = imin;
    loop {
        branch_a.push(pts[i]);
        if i == imax {
            break;
        }
        i = (i + 1) % n;
    }
    let mut branch_b = Vec::new();
    let mut i = imin;
    loop {
        branch_b.push(pts[i]);
        if i == imax {
            break;
        }
        i = (i + n - 1) % n;
    }
    let mean_height = |branch: &[Vec3]| {
        branch.iter().map(|p| p.dot(&up)).sum::<f64>() / branch.len() as f64
    };
    if mean_height(&branch_a) >= mean_height(&branch_b) {
        branch_a
    } else {
        branch_b
    }
}

/// Reconstructs the palate contour: pools tongue-coil positions across kept
/// frames, intersects their convex hull with the midsagittal plane, and
/// returns the upper branch of the cross-section as a point cloud.
pub fn palate_contour(
    set: &CoilTrajectorySet,
    tongue_coils: &[String],
    plane: &Plane,
    cfg: &ContourConfig,
) -> Result<PointCloud, RegisterError> {
    if tongue_coils.is_empty() {
        return Err(RegisterError::TooFewPoints { need: 1, got: 0 });
    }
    let subsample = cfg.subsample.max(1);
    let mut pooled = Vec::new();
    for coil in tongue_coils {
        let ci = set
            .coil_index(coil)
            .ok_or_else(|| RegisterError::UnknownCoil(coil.clone()))?;
        for f in (0..set.frame_count()).step_by(subsample) {
            pooled.push(set.sample(ci, f).position);
        }
    }
    if pooled.len() < 4 {
        return Err(RegisterError::TooFewPoints {
            need: 4,
            got: pooled.len(),
        });
    }
    let hull = convex_hull_3d(&PointCloud::new(pooled))?;
    let polylines = plane_mesh_intersection(&hull, plane);
    let contour = polylines
        .iter()
        .max_by(|a, b| a.length().partial_cmp(&b.length()).unwrap())
        .map(|longest| {
            let abscissa = cfg.up.cross(&plane.normal);
            let abscissa = if abscissa.norm() > 1e-9 {
                abscissa.normalize()
            } else {
                crate::math::any_perpendicular(plane.normal)
            };
            upper_branch(longest, cfg.up, abscissa)
        })
        .unwrap_or_default();
    let mut cloud = PointCloud::new(contour);
    cloud.label = Some("palate_contour".into());
    Ok(cloud)
}

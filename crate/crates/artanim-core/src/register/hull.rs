//! Incremental 3D convex hull.

use std::collections::HashSet;

use crate::math::{PointCloud, Vec3};
use crate::mesh::TriMesh;

use super::RegisterError;

fn scale_of(points: &[Vec3]) -> f64 {
    let mut min = Vec3::from_element(f64::INFINITY);
    let mut max = Vec3::from_element(f64::NEG_INFINITY);
    for p in points {
        min = min.inf(p);
        max = max.sup(p);
    }
    (max - min).norm().max(1.0)
}

fn signed_volume(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a))
}

/// Finds four affinely independent points to seed the hull.
fn initial_tetrahedron(points: &[Vec3], eps: f64) -> Option<[usize; 4]> {
    let i0 = 0;
    let i1 = (1..points.len()).find(|&i| (points[i] - points[i0]).norm() > eps)?;
    let i2 = (1..points.len()).find(|&i| {
        (points[i] - points[i0])
            .cross(&(points[i1] - points[i0]))
            .norm()
            > eps
    })?;
    let i3 = (1..points.len()).find(|&i| {
        signed_volume(points[i0], points[i1], points[i2], points[i]).abs() > eps
    })?;
    Some([i0, i1, i2, i3])
}

/// Triangular facets of the convex hull, as indices into `points`, oriented
/// outward. Errors on fewer than 4 points or a coplanar/collinear cloud.
pub fn convex_hull_indices(points: &[Vec3]) -> Result<Vec<[usize; 3]>, RegisterError> {
    if points.len() < 4 {
        return Err(RegisterError::TooFewPoints {
            need: 4,
            got: points.len(),
        });
    }
    let scale = scale_of(points);
    let eps = 1e-9 * scale;
    let seed = initial_tetrahedron(points, eps)
        .ok_or_else(|| RegisterError::Degenerate("all points coplanar or collinear".into()))?;
    let [a, b, c, d] = seed;

    // orient the seed faces outward (away from the tetrahedron centroid)
    let centroid = (points[a] + points[b] + points[c] + points[d]) / 4.0;
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for f in [[a, b, c], [a, b, d], [a, c, d], [b, c, d]] {
        let n = (points[f[1]] - points[f[0]]).cross(&(points[f[2]] - points[f[0]]));
        if n.dot(&(centroid - points[f[0]])) > 0.0 {
            faces.push([f[0], f[2], f[1]]);
        } else {
            faces.push(f);
        }
    }

    let used: HashSet<usize> = seed.iter().copied().collect();
    for (pi, &p) in points.iter().enumerate() {
        if used.contains(&pi) {
            continue;
        }
        // faces that can see p
        let visible: Vec<usize> = faces
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                let n = (points[f[1]] - points[f[0]]).cross(&(points[f[2]] - points[f[0]]));
                n.dot(&(p - points[f[0]])) > eps * n.norm()
            })
            .map(|(i, _)| i)
            .collect();
        if visible.is_empty() {
            continue;
        }
        let visible_set: HashSet<usize> = visible.iter().copied().collect();
        let mut directed: HashSet<(usize, usize)> = HashSet::new();
        for &fi in &visible {
            let f = faces[fi];
            for k in 0..3 {
                directed.insert((f[k], f[(k + 1) % 3]));
            }
        }
        // horizon: directed edges whose reverse is not inside the visible region
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for &(u, v) in &directed {
            if !directed.contains(&(v, u)) {
                horizon.push((u, v));
            }
        }
        horizon.sort_unstable(); // determinism
        let mut next: Vec<[usize; 3]> = faces
            .iter()
            .enumerate()
            .filter(|(i, _)| !visible_set.contains(i))
            .map(|(_, f)| *f)
            .collect();
        for (u, v) in horizon {
            next.push([u, v, pi]);
        }
        faces = next;
    }
    Ok(faces)
}

/// Triangulated convex hull boundary; output vertices are exactly the input
/// points that lie on the hull.
pub fn convex_hull_3d(cloud: &PointCloud) -> Result<TriMesh, RegisterError> {
    let faces = convex_hull_indices(&cloud.points)?;
    // compact to referenced vertices, preserving input order
    let mut referenced: Vec<bool> = vec![false; cloud.points.len()];
    for f in &faces {
        for &i in f {
            referenced[i] = true;
        }
    }
    let mut remap = vec![usize::MAX; cloud.points.len()];
    let mut vertices = Vec::new();
    for (i, &r) in referenced.iter().enumerate() {
        if r {
            remap[i] = vertices.len();
            vertices.push(cloud.points[i]);
        }
    }
    let faces = faces
        .iter()
        .map(|f| [remap[f[0]], remap[f[1]], remap[f[2]]])
        .collect();
    Ok(TriMesh { vertices, faces })
}

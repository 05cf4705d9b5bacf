//! Bulk mesh reduction: vertex deduplication and uniform-grid clustering.

use std::collections::HashMap;

use crate::math::Vec3;

use super::TriMesh;

fn grid_key(p: Vec3, origin: Vec3, cell: f64) -> (i64, i64, i64) {
    (
        ((p.x - origin.x) / cell).floor() as i64,
        ((p.y - origin.y) / cell).floor() as i64,
        ((p.z - origin.z) / cell).floor() as i64,
    )
}

fn bbox_min(vertices: &[Vec3]) -> Vec3 {
    let mut min = Vec3::from_element(f64::INFINITY);
    for v in vertices {
        min = min.inf(v);
    }
    min
}

fn rebuild_faces(faces: &[[usize; 3]], remap: &[usize]) -> Vec<[usize; 3]> {
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for f in faces {
        let m = [remap[f[0]], remap[f[1]], remap[f[2]]];
        if m[0] == m[1] || m[1] == m[2] || m[0] == m[2] {
            continue; // collapsed
        }
        // drop exact duplicates regardless of winding start
        let mut key = m;
        key.sort_unstable();
        if seen.insert(key, ()).is_none() {
            out.push(m);
        }
    }
    out
}

/// Merges vertices within `eps` (grid-snap equivalence); collapsed and
/// duplicated faces are removed. `eps = 0` merges exact duplicates only.
pub fn deduplicate_vertices(mesh: &TriMesh, eps: f64) -> TriMesh {
    assert!(eps >= 0.0, "epsilon must be non-negative");
    let mut remap = vec![0usize; mesh.vertices.len()];
    let mut vertices: Vec<Vec3> = Vec::new();
    if eps == 0.0 {
        let mut first: HashMap<[u64; 3], usize> = HashMap::new();
        for (i, v) in mesh.vertices.iter().enumerate() {
            let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
            let idx = *first.entry(key).or_insert_with(|| {
                vertices.push(*v);
                vertices.len() - 1
            });
            remap[i] = idx;
        }
    } else {
        let origin = bbox_min(&mesh.vertices);
        let mut first: HashMap<(i64, i64, i64), usize> = HashMap::new();
        for (i, v) in mesh.vertices.iter().enumerate() {
            let key = grid_key(*v, origin, eps);
            let idx = *first.entry(key).or_insert_with(|| {
                vertices.push(*v); // representative: first vertex in the cell
                vertices.len() - 1
            });
            remap[i] = idx;
        }
    }
    TriMesh {
        vertices,
        faces: rebuild_faces(&mesh.faces, &remap),
    }
}

/// Uniform-grid vertex clustering: all vertices in one grid cell collapse to
/// their centroid; degenerate and duplicate faces are removed.
pub fn decimate_cluster(mesh: &TriMesh, cell: f64) -> TriMesh {
    assert!(cell > 0.0, "cell size must be positive");
    let origin = bbox_min(&mesh.vertices);
    let mut cells: HashMap<(i64, i64, i64), usize> = HashMap::new();
    let mut sums: Vec<(Vec3, usize)> = Vec::new();
    let mut remap = vec![0usize; mesh.vertices.len()];
    for (i, v) in mesh.vertices.iter().enumerate() {
        let key = grid_key(*v, origin, cell);
        let idx = *cells.entry(key).or_insert_with(|| {
            sums.push((Vec3::zeros(), 0));
            sums.len() - 1
        });
        sums[idx].0 += *v;
        sums[idx].1 += 1;
        remap[i] = idx;
    }
    let vertices: Vec<Vec3> = sums.iter().map(|(s, n)| s / *n as f64).collect();
    TriMesh {
        vertices,
        faces: rebuild_faces(&mesh.faces, &remap),
    }
}

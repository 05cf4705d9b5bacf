//! Closest-point queries against a triangle mesh, and shrinkwrap projection.
//!
//! Queries run through a bounding-box tree; the exhaustive per-triangle scan
//! in the test suite is the correctness oracle.

use crate::math::Vec3;

use super::{MeshError, QuadMesh, TriMesh};

/// Closest point to `p` on triangle (a, b, c), handling vertex, edge, and
/// interior regions.
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    // Ericson, Real-Time Collision Detection, §5.1.5
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Vec3,
    max: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            min: Vec3::from_element(f64::INFINITY),
            max: Vec3::from_element(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: Vec3) {
        self.min = self.min.inf(&p);
        self.max = self.max.sup(&p);
    }

    fn merge(&mut self, other: &Aabb) {
        self.min = self.min.inf(&other.min);
        self.max = self.max.sup(&other.max);
    }

    fn distance_sq(&self, p: Vec3) -> f64 {
        let mut d = 0.0;
        for i in 0..3 {
            let v = p[i];
            if v < self.min[i] {
                d += (self.min[i] - v).powi(2);
            } else if v > self.max[i] {
                d += (v - self.max[i]).powi(2);
            }
        }
        d
    }
}

enum Node {
    Leaf {
        bounds: Aabb,
        faces: Vec<usize>,
    },
    Inner {
        bounds: Aabb,
        left: usize,
        right: usize,
    },
}

/// Bounding-box tree over a triangle mesh for nearest-point queries.
pub struct MeshBvh<'a> {
    mesh: &'a TriMesh,
    nodes: Vec<Node>,
    root: usize,
}

const LEAF_SIZE: usize = 8;

impl<'a> MeshBvh<'a> {
    pub fn build(mesh: &'a TriMesh) -> Result<Self, MeshError> {
        if mesh.is_empty() {
            return Err(MeshError::Empty);
        }
        let mut centroids: Vec<(usize, Vec3)> = mesh
            .faces
            .iter()
            .enumerate()
            .map(|(fi, _)| {
                let [a, b, c] = mesh.triangle(fi);
                (fi, (a + b + c) / 3.0)
            })
            .collect();
        let mut nodes = Vec::new();
        let root = Self::build_node(mesh, &mut centroids[..], &mut nodes);
        Ok(Self { mesh, nodes, root })
    }

    fn face_bounds(mesh: &TriMesh, faces: impl Iterator<Item = usize>) -> Aabb {
        let mut bounds = Aabb::empty();
        for fi in faces {
            for p in mesh.triangle(fi) {
                bounds.grow(p);
            }
        }
        bounds
    }

    fn build_node(
        mesh: &TriMesh,
        items: &mut [(usize, Vec3)],
        nodes: &mut Vec<Node>,
    ) -> usize {
        let bounds = Self::face_bounds(mesh, items.iter().map(|(fi, _)| *fi));
        if items.len() <= LEAF_SIZE {
            nodes.push(Node::Leaf {
                bounds,
                faces: items.iter().map(|(fi, _)| *fi).collect(),
            });
            return nodes.len() - 1;
        }
        // split on the longest axis at the centroid median
        let extent = bounds.max - bounds.min;
        let axis = if extent.x >= extent.y && extent.x >= extent.z {
            0
        } else if extent.y >= extent.z {
            1
        } else {
            2
        };
        let mid = items.len() / 2;
        items.select_nth_unstable_by(mid, |a, b| a.1[axis].partial_cmp(&b.1[axis]).unwrap());
        let (left_items, right_items) = items.split_at_mut(mid);
        let left = Self::build_node(mesh, left_items, nodes);
        let right = Self::build_node(mesh, right_items, nodes);
        let child_bounds = |n: &Node| match n {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => *bounds,
        };
        let mut merged = child_bounds(&nodes[left]);
        merged.merge(&child_bounds(&nodes[right]));
        nodes.push(Node::Inner {
            bounds: merged,
            left,
            right,
        });
        nodes.len() - 1
    }

    /// Globally nearest point on the mesh surface: (point, face index, distance).
    pub fn closest_point(&self, p: Vec3) -> (Vec3, usize, f64) {
        let mut best = (Vec3::zeros(), usize::MAX, f64::INFINITY);
        self.visit(self.root, p, &mut best);
        (best.0, best.1, best.2.sqrt())
    }

    fn visit(&self, node: usize, p: Vec3, best: &mut (Vec3, usize, f64)) {
        match &self.nodes[node] {
            Node::Leaf { bounds, faces } => {
                if bounds.distance_sq(p) >= best.2 {
                    return;
                }
                for &fi in faces {
                    let [a, b, c] = self.mesh.triangle(fi);
                    let q = closest_point_on_triangle(p, a, b, c);
                    let d = (p - q).norm_squared();
                    if d < best.2 || (d == best.2 && fi < best.1) {
                        *best = (q, fi, d);
                    }
                }
            }
            Node::Inner {
                bounds,
                left,
                right,
            } => {
                if bounds.distance_sq(p) >= best.2 {
                    return;
                }
                // nearer child first for better pruning
                let order = |n: usize| match &self.nodes[n] {
                    Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds.distance_sq(p),
                };
                let (first, second) = if order(*left) <= order(*right) {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.visit(first, p, best);
                self.visit(second, p, best);
            }
        }
    }
}

/// Globally nearest point on `mesh` to `p`: (point, face index, distance).
pub fn closest_point_on_mesh(mesh: &TriMesh, p: Vec3) -> Result<(Vec3, usize, f64), MeshError> {
    let bvh = MeshBvh::build(mesh)?;
    Ok(bvh.closest_point(p))
}

/// Projects every cage vertex onto its closest point on the target surface;
/// cage topology is unchanged.
pub fn shrinkwrap(cage: &QuadMesh, target: &TriMesh) -> Result<QuadMesh, MeshError> {
    let bvh = MeshBvh::build(target)?;
    let vertices = cage
        .vertices
        .iter()
        .map(|&v| bvh.closest_point(v).0)
        .collect();
    Ok(QuadMesh {
        vertices,
        faces: cage.faces.clone(),
    })
}

//! Rigid alignment: Umeyama closed-form point-set fit (no scaling) and
//! point-to-mesh ICP.

use nalgebra::Matrix3;

use crate::math::{Mat3, PointCloud, RigidTransform, Vec3};
use crate::mesh::{MeshBvh, TriMesh};

use super::RegisterError;

/// Least-squares rigid transform minimizing Σ|R·srcᵢ + t − dstᵢ|², with
/// correspondences by index. Scaling is excluded.
pub fn umeyama_rigid(src: &PointCloud, dst: &PointCloud) -> Result<RigidTransform, RegisterError> {
    if src.len() != dst.len() {
        return Err(RegisterError::CountMismatch {
            src: src.len(),
            dst: dst.len(),
        });
    }
    if src.len() < 3 {
        return Err(RegisterError::TooFewPoints {
            need: 3,
            got: src.len(),
        });
    }
    let cs = src.centroid();
    let cd = dst.centroid();
    let mut cov = Matrix3::zeros();
    let mut spread = 0.0;
    for (s, d) in src.points.iter().zip(&dst.points) {
        cov += (d - cd) * (s - cs).transpose();
        spread += (s - cs).norm_squared();
    }
    cov /= src.len() as f64;
    let svd = cov.svd(true, true);
    let u = svd.u.ok_or_else(|| RegisterError::Degenerate("SVD failed".into()))?;
    let vt = svd
        .v_t
        .ok_or_else(|| RegisterError::Degenerate("SVD failed".into()))?;
    // collinear source: second singular value vanishes relative to the spread
    let scale = (spread / src.len() as f64).max(1e-300);
    if svd.singular_values[1] <= 1e-12 * scale {
        return Err(RegisterError::Degenerate("source points collinear".into()));
    }
    let mut s = Mat3::identity();
    if (u * vt).determinant() < 0.0 {
        s[(2, 2)] = -1.0;
    }
    let rotation = u * s * vt;
    let translation = cd - rotation * cs;
    Ok(RigidTransform {
        rotation,
        translation,
    })
}

/// ICP stopping parameters.
#[derive(Debug, Clone, Copy)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Stop when the RMS improvement between iterations falls below this.
    pub convergence_eps: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            convergence_eps: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IcpResult {
    pub transform: RigidTransform,
    pub rms: f64,
    pub iterations: usize,
    /// RMS after the initial transform and after each update; non-increasing.
    pub rms_history: Vec<f64>,
}

fn rms_to_mesh(bvh: &MeshBvh, points: &[Vec3], t: &RigidTransform) -> f64 {
    let sum: f64 = points
        .iter()
        .map(|p| bvh.closest_point(t.apply(*p)).2.powi(2))
        .sum();
    (sum / points.len() as f64).sqrt()
}

/// Iterates closest-point correspondences against `target` with rigid Umeyama
/// updates, starting from `init`. Returns the composed transform and the
/// final RMS residual.
pub fn icp_point_to_mesh(
    src: &PointCloud,
    target: &TriMesh,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<IcpResult, RegisterError> {
    if src.len() < 3 {
        return Err(RegisterError::TooFewPoints {
            need: 3,
            got: src.len(),
        });
    }
    let bvh = MeshBvh::build(target).map_err(|_| RegisterError::EmptyMesh)?;
    let mut transform = *init;
    let mut rms = rms_to_mesh(&bvh, &src.points, &transform);
    let mut history = vec![rms];
    let mut iterations = 0;
    for _ in 0..params.max_iterations {
        let moved: Vec<Vec3> = src.points.iter().map(|p| transform.apply(*p)).collect();
        let targets: Vec<Vec3> = moved.iter().map(|p| bvh.closest_point(*p).0).collect();
        let step = umeyama_rigid(&PointCloud::new(moved), &PointCloud::new(targets))?;
        let candidate = step.compose(&transform);
        let new_rms = rms_to_mesh(&bvh, &src.points, &candidate);
        if new_rms > rms + 1e-12 {
            break; // should not happen for point-to-point updates
        }
        transform = candidate;
        iterations += 1;
        history.push(new_rms);
        let improvement = rms - new_rms;
        rms = new_rms;
        if improvement < params.convergence_eps {
            break;
        }
    }
    Ok(IcpResult {
        transform,
        rms,
        iterations,
        rms_history: history,
    })
}

//! Clamped uniform cubic B-spline with arc-length parameterization.

use serde::{Deserialize, Serialize};

use crate::math::Vec3;

use super::RigError;

const DEGREE: usize = 3;

/// Clamped uniform cubic B-spline. The curve passes through its first and
/// last control points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spline {
    control_points: Vec<Vec3>,
}

/// 5-point Gauss-Legendre nodes/weights on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906179845938664,
    -0.538469310105683,
    0.0,
    0.538469310105683,
    0.906179845938664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236926885056189,
    0.478628670499366,
    0.568888888888889,
    0.478628670499366,
    0.236926885056189,
];

impl Spline {
    pub fn new(control_points: Vec<Vec3>) -> Result<Self, RigError> {
        if control_points.len() < DEGREE + 1 {
            return Err(RigError::TooFewControlPoints(control_points.len()));
        }
        Ok(Self { control_points })
    }

    pub fn control_points(&self) -> &[Vec3] {
        &self.control_points
    }

    pub fn set_control_point(&mut self, index: usize, p: Vec3) {
        self.control_points[index] = p;
    }

    /// Clamped uniform knot vector over [0, 1].
    fn knot(&self, i: usize) -> f64 {
        let n = self.control_points.len();
        let spans = (n - DEGREE) as f64;
        if i <= DEGREE {
            0.0
        } else if i >= n {
            1.0
        } else {
            (i - DEGREE) as f64 / spans
        }
    }

    fn span_of(&self, u: f64) -> usize {
        let n = self.control_points.len();
        // last span index k with knot(k) <= u < knot(k+1); clamp u = 1 to the final span
        if u >= 1.0 {
            return n - 1;
        }
        let spans = n - DEGREE;
        let k = (u * spans as f64).floor() as usize;
        k.min(spans - 1) + DEGREE
    }

    /// De Boor evaluation at `u` in [0, 1].
    pub fn eval(&self, u: f64) -> Result<Vec3, RigError> {
        if !(0.0..=1.0).contains(&u) {
            return Err(RigError::ParameterOutOfRange(u));
        }
        let k = self.span_of(u);
        let mut d: Vec<Vec3> = (0..=DEGREE)
            .map(|j| self.control_points[j + k - DEGREE])
            .collect();
        for r in 1..=DEGREE {
            for j in (r..=DEGREE).rev() {
                let i = j + k - DEGREE;
                let denom = self.knot(i + DEGREE + 1 - r) - self.knot(i);
                let alpha = if denom.abs() < 1e-300 {
                    0.0
                } else {
                    (u - self.knot(i)) / denom
                };
                d[j] = d[j - 1] * (1.0 - alpha) + d[j] * alpha;
            }
        }
        Ok(d[DEGREE])
    }

    /// First derivative dC/du, via the degree-2 hodograph.
    pub fn derivative(&self, u: f64) -> Result<Vec3, RigError> {
        if !(0.0..=1.0).contains(&u) {
            return Err(RigError::ParameterOutOfRange(u));
        }
        let n = self.control_points.len();
        // hodograph control points Q_i = p * (P_{i+1} - P_i) / (t_{i+p+1} - t_{i+1})
        let q: Vec<Vec3> = (0..n - 1)
            .map(|i| {
                let denom = self.knot(i + DEGREE + 1) - self.knot(i + 1);
                (self.control_points[i + 1] - self.control_points[i]) * (DEGREE as f64 / denom)
            })
            .collect();
        // evaluate the degree-2 spline with knots = original minus first/last
        let k = self.span_of(u); // span in original indexing
        let knot2 = |i: usize| self.knot(i + 1);
        let deg = DEGREE - 1;
        let k2 = k - 1; // span shift from dropping the first knot
        let mut d: Vec<Vec3> = (0..=deg).map(|j| q[j + k2 - deg]).collect();
        for r in 1..=deg {
            for j in (r..=deg).rev() {
                let i = j + k2 - deg;
                let denom = knot2(i + deg + 1 - r) - knot2(i);
                let alpha = if denom.abs() < 1e-300 {
                    0.0
                } else {
                    (u - knot2(i)) / denom
                };
                d[j] = d[j - 1] * (1.0 - alpha) + d[j] * alpha;
            }
        }
        Ok(d[deg])
    }

    /// Unit tangent at `u`; falls back to neighbor sampling on a vanishing
    /// derivative.
    pub fn tangent(&self, u: f64) -> Result<Vec3, RigError> {
        let d = self.derivative(u)?;
        let n = d.norm();
        if n > 1e-12 {
            return Ok(d / n);
        }
        // degenerate (coincident control points): finite difference
        let h = 1e-6;
        let a = self.eval((u - h).max(0.0))?;
        let b = self.eval((u + h).min(1.0))?;
        let diff = b - a;
        let n = diff.norm();
        if n < 1e-300 {
            return Err(RigError::DegenerateSpline);
        }
        Ok(diff / n)
    }

    fn gl5(&self, a: f64, b: f64) -> f64 {
        let half = (b - a) / 2.0;
        let mid = (a + b) / 2.0;
        let mut sum = 0.0;
        for (x, w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            sum += w * self.derivative(mid + half * x).unwrap().norm();
        }
        sum * half
    }

    fn adaptive(&self, a: f64, b: f64, whole: f64, tol: f64, depth: usize) -> f64 {
        let mid = (a + b) / 2.0;
        let left = self.gl5(a, mid);
        let right = self.gl5(mid, b);
        if depth == 0 || (left + right - whole).abs() <= tol * whole.abs().max(1e-12) {
            return left + right;
        }
        self.adaptive(a, mid, left, tol, depth - 1) + self.adaptive(mid, b, right, tol, depth - 1)
    }

    /// Arc length of the sub-curve [u0, u1], adaptive Gauss-Legendre. The
    /// tight per-call tolerance keeps errors negligible even when summed over
    /// the arc-table segments.
    pub fn arc_length_between(&self, u0: f64, u1: f64) -> f64 {
        if u1 <= u0 {
            return 0.0;
        }
        self.adaptive(u0, u1, self.gl5(u0, u1), 1e-10, 24)
    }

    /// Total arc length in millimetres.
    pub fn arc_length(&self) -> f64 {
        self.arc_length_between(0.0, 1.0)
    }

    /// Cumulative arc-length table for repeated inversion.
    pub fn arc_table(&self, segments: usize) -> ArcTable {
        let mut us = Vec::with_capacity(segments + 1);
        let mut cumulative = Vec::with_capacity(segments + 1);
        let mut total = 0.0;
        us.push(0.0);
        cumulative.push(0.0);
        for s in 1..=segments {
            let u0 = (s - 1) as f64 / segments as f64;
            let u1 = s as f64 / segments as f64;
            total += self.arc_length_between(u0, u1);
            us.push(u1);
            cumulative.push(total);
        }
        ArcTable {
            us,
            cumulative,
        }
    }

    /// Point at arc length `l` from the curve start (monotone inversion).
    pub fn point_at_arclength(&self, l: f64) -> Result<(Vec3, f64), RigError> {
        let table = self.arc_table(64);
        let u = self.invert_arclength(&table, l)?;
        Ok((self.eval(u)?, u))
    }

    /// Finds `u` with arc_length(0..u) = l, using a precomputed table.
    pub fn invert_arclength(&self, table: &ArcTable, l: f64) -> Result<f64, RigError> {
        let total = *table.cumulative.last().unwrap();
        if l < -1e-9 || l > total * (1.0 + 1e-6) + 1e-9 {
            return Err(RigError::ArcLengthOutOfRange { requested: l, total });
        }
        let l = l.clamp(0.0, total);
        let seg = match table
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&l).unwrap())
        {
            Ok(i) => i.min(table.us.len() - 2),
            Err(i) => i.saturating_sub(1).min(table.us.len() - 2),
        };
        let (mut lo, mut hi) = (table.us[seg], table.us[seg + 1]);
        let base = table.cumulative[seg];
        let target = l - base;
        for _ in 0..32 {
            let mid = (lo + hi) / 2.0;
            if self.gl5_chain(table.us[seg], mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo + hi) / 2.0)
    }

    fn gl5_chain(&self, a: f64, b: f64) -> f64 {
        // split into two panels; cubic speed is near-polynomial so GL5 pairs
        // are well below the inversion tolerance
        let mid = (a + b) / 2.0;
        self.gl5(a, mid) + self.gl5(mid, b)
    }
}

/// Cumulative arc-length samples at uniform parameter steps.
#[derive(Debug, Clone)]
pub struct ArcTable {
    pub us: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl ArcTable {
    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }
}

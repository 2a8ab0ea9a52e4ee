//! High-order algebraic vortex blob: the regularized Biot-Savart kernel and
//! its analytic velocity gradient.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::math::{skew, Mat3, Vec3};

/// `q(s)` with `u(y) = q(|z|) alpha x z`, `z = y - X`.
pub fn velocity_factor(s2: f64, eps: f64) -> f64 {
    let e2 = eps * eps;
    let x = s2 + e2;
    (s2 + 2.5 * e2) / (4.0 * PI * x * x * x.sqrt())
}

/// `q'(s) / s`.
pub fn velocity_factor_slope(s2: f64, eps: f64) -> f64 {
    let e2 = eps * eps;
    let x = s2 + e2;
    -(3.0 * s2 + 10.5 * e2) / (4.0 * PI * x * x * x * x.sqrt())
}

/// Mollifier `zeta_eps(s)` whose curl the blob velocity reproduces.
pub fn mollifier(s2: f64, eps: f64) -> f64 {
    let e2 = eps * eps;
    let x = s2 + e2;
    15.0 * e2 * e2 / (8.0 * PI * x * x * x * x.sqrt())
}

/// Velocity induced at offset `z` by a blob of strength `alpha`.
pub fn blob_velocity(z: &Vec3, alpha: &Vec3, eps: f64) -> Vec3 {
    alpha.cross(z) * velocity_factor(z.norm_squared(), eps)
}

/// Velocity and its gradient `du_i / dy_j` for one blob.
pub fn blob_velocity_gradient(z: &Vec3, alpha: &Vec3, eps: f64) -> (Vec3, Mat3) {
    let s2 = z.norm_squared();
    let e2 = eps * eps;
    let x = s2 + e2;
    let x25 = 4.0 * PI * x * x * x.sqrt();
    let q = (s2 + 2.5 * e2) / x25;
    let dq = -(3.0 * s2 + 10.5 * e2) / (x25 * x);
    let axz = alpha.cross(z);
    // d(alpha x z)/dz = S(alpha)
    (axz * q, skew(alpha) * q + axz * z.transpose() * dq)
}

/// A collection of blobs sharing one core radius.
#[derive(Debug, Clone, Default)]
pub struct Blobs {
    pub positions: Vec<Vec3>,
    pub strengths: Vec<Vec3>,
    pub epsilon: f64,
}

impl Blobs {
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn velocity(&self, y: &Vec3) -> Vec3 {
        self.positions
            .iter()
            .zip(&self.strengths)
            .fold(Vec3::zeros(), |acc, (x, a)| {
                acc + blob_velocity(&(y - x), a, self.epsilon)
            })
    }

    pub fn velocity_gradient(&self, y: &Vec3) -> (Vec3, Mat3) {
        let mut u = Vec3::zeros();
        let mut g = Mat3::zeros();
        for (x, a) in self.positions.iter().zip(&self.strengths) {
            let (du, dg) = blob_velocity_gradient(&(y - x), a, self.epsilon);
            u += du;
            g += dg;
        }
        (u, g)
    }

    /// Mollified vorticity `sum zeta_eps(|y - X|) alpha`.
    pub fn vorticity(&self, y: &Vec3) -> Vec3 {
        self.positions
            .iter()
            .zip(&self.strengths)
            .fold(Vec3::zeros(), |acc, (x, a)| {
                acc + a * mollifier((y - x).norm_squared(), self.epsilon)
            })
    }

    pub fn velocities(&self, points: &[Vec3]) -> Vec<Vec3> {
        if self.is_empty() {
            return vec![Vec3::zeros(); points.len()];
        }
        points.par_iter().map(|y| self.velocity(y)).collect()
    }
}

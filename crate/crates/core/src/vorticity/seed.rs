//! Built-in divergence-free initial vorticity fields with compact support.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Mat3, Vec3};

/// `(1 - s^2)^4` on `s < 1`, zero outside; three times continuously differentiable.
pub fn bump(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - s * s).powi(4)
    }
}

/// `b'(s) / s`.
fn bump_slope(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        -8.0 * (1.0 - s * s).powi(3)
    }
}

/// Initial vorticity descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedSpec {
    #[default]
    None,
    /// `curl(b(|x - c| / R) a)`.
    Blob {
        center: [f64; 3],
        radius: f64,
        axis: [f64; 3],
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Azimuthal vorticity around a circle of radius `ring_radius`.
    Ring {
        center: [f64; 3],
        axis: [f64; 3],
        ring_radius: f64,
        core_radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `curl(b(|x - c| / R) Omega x (x - c))`, a ball in near solid rotation.
    BallRotation {
        center: [f64; 3],
        radius: f64,
        omega: [f64; 3],
    },
}

fn one() -> f64 {
    1.0
}

impl SeedSpec {
    pub fn is_none(&self) -> bool {
        matches!(self, SeedSpec::None)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Seed(msg.to_string()));
        match self {
            SeedSpec::None => Ok(()),
            SeedSpec::Blob {
                radius,
                axis,
                amplitude,
                ..
            } => {
                if !(*radius > 0.0) {
                    return bad("blob radius must be positive");
                }
                if !Vec3::from(*axis).iter().all(|x| x.is_finite()) || !amplitude.is_finite() {
                    return bad("blob axis and amplitude must be finite");
                }
                Ok(())
            }
            SeedSpec::Ring {
                axis,
                ring_radius,
                core_radius,
                amplitude,
                ..
            } => {
                if !(*core_radius > 0.0) || !(*ring_radius > *core_radius) {
                    return bad("ring needs 0 < core_radius < ring_radius");
                }
                if !(Vec3::from(*axis).norm() > 0.0) || !amplitude.is_finite() {
                    return bad("ring axis must be nonzero");
                }
                Ok(())
            }
            SeedSpec::BallRotation { radius, omega, .. } => {
                if !(*radius > 0.0) || !Vec3::from(*omega).iter().all(|x| x.is_finite()) {
                    return bad("ball radius must be positive and omega finite");
                }
                Ok(())
            }
        }
    }

    /// Bounding ball `(center, radius)` of the support.
    pub fn support(&self) -> Option<(Vec3, f64)> {
        match self {
            SeedSpec::None => None,
            SeedSpec::Blob { center, radius, .. }
            | SeedSpec::BallRotation { center, radius, .. } => Some((Vec3::from(*center), *radius)),
            SeedSpec::Ring {
                center,
                ring_radius,
                core_radius,
                ..
            } => Some((Vec3::from(*center), ring_radius + core_radius)),
        }
    }

    /// The same field multiplied by `s`.
    pub fn scaled(&self, s: f64) -> SeedSpec {
        let mut out = self.clone();
        match &mut out {
            SeedSpec::None => {}
            SeedSpec::Blob { amplitude, .. } | SeedSpec::Ring { amplitude, .. } => *amplitude *= s,
            SeedSpec::BallRotation { omega, .. } => {
                for x in omega.iter_mut() {
                    *x *= s;
                }
            }
        }
        out
    }

    pub fn vorticity(&self, x: &Vec3) -> Vec3 {
        match self {
            SeedSpec::None => Vec3::zeros(),
            SeedSpec::Blob {
                center,
                radius,
                axis,
                amplitude,
            } => {
                let z = x - Vec3::from(*center);
                let s = z.norm() / radius;
                // grad b = b'(s)/s * z / R^2
                let grad = z * (bump_slope(s) / (radius * radius));
                grad.cross(&Vec3::from(*axis)) * *amplitude
            }
            SeedSpec::Ring {
                center,
                axis,
                ring_radius,
                core_radius,
                amplitude,
            } => {
                let e = Vec3::from(*axis).normalize();
                let z = x - Vec3::from(*center);
                let a = z.dot(&e);
                let radial = z - e * a;
                let rho = radial.norm();
                let d = ((rho - ring_radius).powi(2) + a * a).sqrt();
                let mag = bump(d / core_radius);
                if mag == 0.0 || rho == 0.0 {
                    return Vec3::zeros();
                }
                e.cross(&radial) * (mag * amplitude / rho)
            }
            SeedSpec::BallRotation {
                center,
                radius,
                omega,
            } => {
                let z = x - Vec3::from(*center);
                let s = z.norm() / radius;
                let om = Vec3::from(*omega);
                let grad = z * (bump_slope(s) / (radius * radius));
                grad.cross(&om.cross(&z)) + om * (2.0 * bump(s))
            }
        }
    }

    /// `d omega_i / dx_j` by a fourth-order central difference with step `h`.
    pub fn gradient(&self, x: &Vec3, h: f64) -> Mat3 {
        let mut out = Mat3::zeros();
        for j in 0..3 {
            let mut e = Vec3::zeros();
            e[j] = h;
            let d = (self.vorticity(&(x - e * 2.0)) - self.vorticity(&(x + e * 2.0))
                + (self.vorticity(&(x + e)) - self.vorticity(&(x - e))) * 8.0)
                / (12.0 * h);
            out.set_column(j, &d);
        }
        out
    }

    /// Length scale used for difference steps and residual normalization.
    pub fn length_scale(&self) -> f64 {
        match self {
            SeedSpec::None => 1.0,
            SeedSpec::Blob { radius, .. } | SeedSpec::BallRotation { radius, .. } => *radius,
            SeedSpec::Ring { core_radius, .. } => *core_radius,
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SurfaceMesh;
use crate::math::{Mat3, Vec3};

/// Density of the solid, in units of the fluid density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    Uniform(f64),
    /// One value per octant, indexed by the sign bits `(x<0) | (y<0)<<1 | (z<0)<<2`.
    Octants([f64; 8]),
}

impl Density {
    fn octant_value(&self, octant: usize) -> f64 {
        match self {
            Density::Uniform(rho) => *rho,
            Density::Octants(values) => values[octant],
        }
    }
}

/// Mass `m0`, inertia `J0` about the body-frame origin, and displaced volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyInertia {
    pub mass: f64,
    pub inertia: Mat3,
    pub density: Option<Density>,
    pub volume: f64,
}

impl BodyInertia {
    /// Explicit mass data. `volume` is the displaced fluid volume.
    pub fn new(mass: f64, inertia: Mat3, volume: f64) -> Result<Self> {
        let body = BodyInertia {
            mass,
            inertia,
            density: None,
            volume,
        };
        body.validate()?;
        Ok(body)
    }

    /// Integrates the density over the region enclosed by `mesh`.
    pub fn from_density(mesh: &SurfaceMesh, density: Density) -> Result<Self> {
        let (mass, second) = integrate_density(mesh, &density);
        let inertia = Mat3::identity() * second.trace() - second;
        let body = BodyInertia {
            mass,
            inertia: (inertia + inertia.transpose()) * 0.5,
            density: Some(density),
            volume: mesh.volume(),
        };
        body.validate()?;
        Ok(body)
    }

    fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::InvalidInput(format!(
                "body mass must be positive, got {}",
                self.mass
            )));
        }
        if (self.inertia - self.inertia.transpose()).norm() > 1e-12 * self.inertia.norm() {
            return Err(Error::InvalidInput(
                "inertia matrix is not symmetric".into(),
            ));
        }
        let min_eig = self.inertia.symmetric_eigenvalues().min();
        if !(min_eig > 0.0) {
            return Err(Error::InvalidInput(format!(
                "inertia matrix is not positive definite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(())
    }
}

/// `|m0 - vol(S)|` with the fluid density normalized to one.
pub fn check_neutral_buoyancy(inertia: &BodyInertia, mesh: &SurfaceMesh) -> f64 {
    (inertia.mass - mesh.volume()).abs()
}

/// Mass and second moment `int rho x x^T` over the enclosed region, from signed
/// tetrahedra with apex at the origin. Each surface triangle is clipped by the
/// coordinate planes so the per-octant density is integrated exactly.
fn integrate_density(mesh: &SurfaceMesh, density: &Density) -> (f64, Mat3) {
    let mut mass = 0.0;
    let mut second = Mat3::zeros();
    for t in mesh.triangles() {
        let v = mesh.vertices();
        let tri = vec![v[t[0]], v[t[1]], v[t[2]]];
        for octant in 0..8 {
            let rho = density.octant_value(octant);
            if rho == 0.0 {
                continue;
            }
            let mut poly = tri.clone();
            for axis in 0..3 {
                let sign = if octant >> axis & 1 == 1 { -1.0 } else { 1.0 };
                poly = clip_halfspace(&poly, axis, sign);
                if poly.len() < 3 {
                    break;
                }
            }
            if poly.len() < 3 {
                continue;
            }
            for k in 1..poly.len() - 1 {
                let (a, b, c) = (poly[0], poly[k], poly[k + 1]);
                let vol = a.dot(&b.cross(&c)) / 6.0;
                mass += rho * vol;
                // second moment of the tetrahedron (0, a, b, c)
                let s = a + b + c;
                let m =
                    a * a.transpose() + b * b.transpose() + c * c.transpose() + s * s.transpose();
                second += m * (rho * vol / 20.0);
            }
        }
    }
    (mass, second)
}

fn clip_halfspace(poly: &[Vec3], axis: usize, sign: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let da = sign * a[axis];
        let db = sign * b[axis];
        if da >= 0.0 {
            out.push(a);
        }
        if (da > 0.0 && db < 0.0) || (da < 0.0 && db > 0.0) {
            let t = da / (da - db);
            let mut p = a + (b - a) * t;
            p[axis] = 0.0;
            out.push(p);
        }
    }
    out
}

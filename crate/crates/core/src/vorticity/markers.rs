use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SurfaceMesh;
use crate::math::{Mat3, Vec3};
use crate::vorticity::kernel::Blobs;
use crate::vorticity::seed::SeedSpec;

/// Default ratio of blob core radius to marker spacing.
pub const EPSILON_FACTOR: f64 = 2.0;
/// Markers closer than this multiple of the spacing to the body abort a run.
pub const COLLISION_FACTOR: f64 = 0.2;
/// Relative tolerance on the seeded divergence residual.
pub const DIVERGENCE_TOL: f64 = 1e-6;

/// One Lagrangian vorticity carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    /// Initial position.
    pub x0: Vec3,
    /// Current position `X(t; 0, x0)`.
    pub x: Vec3,
    /// Flow Jacobian `G(t; 0, x0)`.
    pub g: Mat3,
    pub omega0: Vec3,
    /// `d omega0 / dx` at `x0`.
    pub grad0: Mat3,
    pub vol: f64,
}

impl Marker {
    /// Current vorticity `G omega0`.
    pub fn vorticity(&self) -> Vec3 {
        self.g * self.omega0
    }

    /// Current vorticity gradient `G (d omega0 / dx) G^{-1}`.
    pub fn vorticity_gradient(&self) -> Mat3 {
        let inv = self.g.try_inverse().unwrap_or_else(Mat3::identity);
        self.g * self.grad0 * inv
    }
}

/// Markers seeded on a lattice inside the support of the initial vorticity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerSet {
    pub markers: Vec<Marker>,
    pub spacing: f64,
    pub epsilon: f64,
    pub seed: SeedSpec,
    /// `max |div omega0| * L / max |omega0|` over the markers.
    pub div_residual: f64,
}

impl MarkerSet {
    pub fn empty(spacing: f64) -> Self {
        MarkerSet {
            markers: Vec::new(),
            spacing,
            epsilon: EPSILON_FACTOR * spacing,
            seed: SeedSpec::None,
            div_residual: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    pub fn collision_tolerance(&self) -> f64 {
        COLLISION_FACTOR * self.spacing
    }

    /// `sum omega vol` of the current state.
    pub fn total_vorticity(&self) -> Vec3 {
        self.markers
            .iter()
            .fold(Vec3::zeros(), |a, m| a + m.vorticity() * m.vol)
    }

    pub fn total_volume(&self) -> f64 {
        self.markers.iter().map(|m| m.vol).sum()
    }

    /// Largest `|det G - 1|`.
    pub fn max_det_error(&self) -> f64 {
        self.markers
            .iter()
            .map(|m| (m.g.determinant() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn blobs(&self) -> Blobs {
        Blobs {
            positions: self.markers.iter().map(|m| m.x).collect(),
            strengths: self.markers.iter().map(|m| m.vorticity() * m.vol).collect(),
            epsilon: self.epsilon,
        }
    }

    /// Same markers with the initial vorticity multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for m in &mut out.markers {
            m.omega0 *= s;
            m.grad0 *= s;
        }
        out.seed = self.seed.scaled(s);
        out
    }

    /// The seed state: every marker back at `x0` with `G = Id`.
    pub fn reset(&self) -> Self {
        let mut out = self.clone();
        for m in &mut out.markers {
            m.x = m.x0;
            m.g = Mat3::identity();
        }
        out
    }

    /// Marker closest to the body, `(index, signed distance)`.
    pub fn closest_to(&self, mesh: &SurfaceMesh) -> Option<(usize, f64)> {
        self.markers
            .iter()
            .enumerate()
            .map(|(k, m)| (k, mesh.signed_distance(&m.x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Fails with [`Error::Collision`] when a marker is inside the tolerance.
    pub fn check_clearance(&self, mesh: &SurfaceMesh, time: f64) -> Result<()> {
        if let Some((index, distance)) = self.closest_to(mesh) {
            let tolerance = self.collision_tolerance();
            if distance < tolerance {
                return Err(Error::Collision {
                    index,
                    distance,
                    tolerance,
                    time,
                });
            }
        }
        Ok(())
    }

    /// CSV snapshot: `x0, X, G (row-major), omega0, vol`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "x0_1,x0_2,x0_3,x1,x2,x3,g11,g12,g13,g21,g22,g23,g31,g32,g33,w0_1,w0_2,w0_3,vol\n",
        );
        for m in &self.markers {
            let mut row: Vec<f64> = Vec::with_capacity(19);
            row.extend(m.x0.iter());
            row.extend(m.x.iter());
            for i in 0..3 {
                for j in 0..3 {
                    row.push(m.g[(i, j)]);
                }
            }
            row.extend(m.omega0.iter());
            row.push(m.vol);
            out.push_str(&crate::io::join(&row));
            out.push('\n');
        }
        out
    }

    /// Restores positions and Jacobians from [`MarkerSet::to_csv`] output; the
    /// seed gradients are resampled from `seed`.
    pub fn from_csv(text: &str, seed: SeedSpec, spacing: f64) -> Result<Self> {
        let mut markers = Vec::new();
        let h = 1e-3 * seed.length_scale();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidInput(format!("marker csv line {}: {e}", n + 1)))?;
            if vals.len() != 19 {
                return Err(Error::InvalidInput(format!(
                    "marker csv line {} has {} fields, expected 19",
                    n + 1,
                    vals.len()
                )));
            }
            let x0 = Vec3::new(vals[0], vals[1], vals[2]);
            markers.push(Marker {
                x0,
                x: Vec3::new(vals[3], vals[4], vals[5]),
                g: Mat3::from_row_slice(&vals[6..15]),
                omega0: Vec3::new(vals[15], vals[16], vals[17]),
                grad0: seed.gradient(&x0, h),
                vol: vals[18],
            });
        }
        Ok(MarkerSet {
            markers,
            spacing,
            epsilon: EPSILON_FACTOR * spacing,
            seed,
            div_residual: 0.0,
        })
    }
}

/// Lattice seeding of an analytic vorticity field.
///
/// The support ball must keep a clearance of at least `d_min` from the body.
pub fn seed_markers(
    spec: &SeedSpec,
    spacing: f64,
    mesh: &SurfaceMesh,
    d_min: f64,
) -> Result<MarkerSet> {
    if !(spacing > 0.0) {
        return Err(Error::Seed(format!(
            "marker spacing must be positive, got {spacing}"
        )));
    }
    spec.validate()?;
    let Some((center, radius)) = spec.support() else {
        return Ok(MarkerSet::empty(spacing));
    };
    let clearance = mesh.signed_distance(&center) - radius;
    if clearance < d_min {
        return Err(Error::Seed(format!(
            "vorticity support comes within {clearance:.3e} of the body (minimum {d_min:.3e})"
        )));
    }
    let n = (radius / spacing).ceil() as i64;
    let vol = spacing.powi(3);
    let h = 1e-3 * spec.length_scale();
    let mut markers = Vec::new();
    let mut max_div = 0.0_f64;
    let mut max_omega = 0.0_f64;
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                let x = center + Vec3::new(i as f64, j as f64, k as f64) * spacing;
                if (x - center).norm() >= radius {
                    continue;
                }
                let omega0 = spec.vorticity(&x);
                if omega0 == Vec3::zeros() {
                    continue;
                }
                let grad0 = spec.gradient(&x, h);
                max_div = max_div.max(grad0.trace().abs());
                max_omega = max_omega.max(omega0.norm());
                markers.push(Marker {
                    x0: x,
                    x,
                    g: Mat3::identity(),
                    omega0,
                    grad0,
                    vol,
                });
            }
        }
    }
    let div_residual = if max_omega > 0.0 {
        max_div * spec.length_scale() / max_omega
    } else {
        0.0
    };
    if div_residual > DIVERGENCE_TOL {
        return Err(Error::Seed(format!(
            "seed vorticity is not divergence free: relative residual {div_residual:.3e}"
        )));
    }
    Ok(MarkerSet {
        markers,
        spacing,
        epsilon: EPSILON_FACTOR * spacing,
        seed: spec.clone(),
        div_residual,
    })
}

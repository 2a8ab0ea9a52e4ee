use rayon::prelude::*;

use crate::error::Result;
use crate::math::{Mat3, Vec3};
use crate::potential::{BoundarySolver, HarmonicPotential, PotentialTables};
use crate::vorticity::kernel::Blobs;
use crate::vorticity::markers::MarkerSet;

/// Anything that yields a velocity and its spatial gradient at a point.
pub trait VelocitySource: Sync {
    fn velocity_gradient(&self, y: &Vec3) -> (Vec3, Mat3);

    fn velocity(&self, y: &Vec3) -> Vec3 {
        self.velocity_gradient(y).0
    }
}

/// Spatially uniform velocity, mostly for tests.
#[derive(Debug, Clone, Copy)]
pub struct UniformFlow(pub Vec3);

impl VelocitySource for UniformFlow {
    fn velocity_gradient(&self, _y: &Vec3) -> (Vec3, Mat3) {
        (self.0, Mat3::zeros())
    }
}

/// Rotational velocity `eta`: blob Biot-Savart sum plus the gradient of a
/// harmonic correction that cancels its normal trace on the body.
#[derive(Debug, Clone)]
pub struct EtaField {
    pub blobs: Blobs,
    pub correction: HarmonicPotential,
    /// Net flux of the blob field through the body removed before solving,
    /// relative to `max |g| * area`.
    pub flux_imbalance: f64,
    /// Blob velocity at the panel centroids.
    pub boundary_blob_velocity: Vec<Vec3>,
}

impl EtaField {
    pub fn zero(panels: usize) -> Self {
        EtaField {
            blobs: Blobs::default(),
            correction: HarmonicPotential::zero(panels),
            flux_imbalance: 0.0,
            boundary_blob_velocity: vec![Vec3::zeros(); panels],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.blobs.is_empty()
    }

    /// `eta` at the panel centroids, fluid side.
    pub fn boundary_values(&self) -> Vec<Vec3> {
        self.boundary_blob_velocity
            .iter()
            .zip(&self.correction.boundary_gradients)
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn velocity(&self, solver: &BoundarySolver, y: &Vec3) -> Vec3 {
        if self.is_zero() {
            return Vec3::zeros();
        }
        self.blobs.velocity(y) + solver.eval(&self.correction.sigma, y).1
    }

    /// `max |eta . n|` at the centroids relative to `max |eta|`, with the
    /// correction's normal derivative reconstructed from its density.
    pub fn normal_residual(&self, solver: &BoundarySolver) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let normals = solver.mesh().normals();
        let dn = solver.normal_derivative(&self.correction.sigma);
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for (k, (u, n)) in self.boundary_blob_velocity.iter().zip(normals).enumerate() {
            worst = worst.max((u.dot(n) + dn[k]).abs());
            scale = scale.max((u + self.correction.boundary_gradients[k]).norm());
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}

/// Solves the div-curl problem for the current marker vorticity.
pub fn reconstruct_eta(markers: &MarkerSet, solver: &BoundarySolver) -> Result<EtaField> {
    let mesh = solver.mesh();
    if markers.is_empty() || markers.markers.iter().all(|m| m.omega0 == Vec3::zeros()) {
        return Ok(EtaField::zero(mesh.len()));
    }
    let blobs = markers.blobs();
    let boundary_blob_velocity = blobs.velocities(mesh.centroids());
    let mut g: Vec<f64> = boundary_blob_velocity
        .iter()
        .zip(mesh.normals())
        .map(|(u, n)| -u.dot(n))
        .collect();
    let flux_imbalance = solver.flux_imbalance(&g);
    let mean = g.iter().zip(mesh.areas()).map(|(x, a)| x * a).sum::<f64>() / mesh.total_area();
    for x in &mut g {
        *x -= mean;
    }
    let correction = solver.solve_unchecked(&g);
    Ok(EtaField {
        blobs,
        correction,
        flux_imbalance,
        boundary_blob_velocity,
    })
}

/// The full fluid velocity in the body frame:
/// `v = eta + sum l_i grad phi_i + r_i grad varphi_i + w_j grad psi_j`.
pub struct FlowField<'a> {
    pub tables: &'a PotentialTables,
    pub l: Vec3,
    pub r: Vec3,
    pub w: Vec<f64>,
    pub eta: EtaField,
    /// Density of the potential part alone.
    pub potential_sigma: Vec<f64>,
    /// Density of the potential part plus the harmonic correction of `eta`.
    pub total_sigma: Vec<f64>,
}

impl<'a> FlowField<'a> {
    pub fn new(
        tables: &'a PotentialTables,
        l: Vec3,
        r: Vec3,
        w: &[f64],
        markers: &MarkerSet,
    ) -> Result<Self> {
        let eta = reconstruct_eta(markers, &tables.solver)?;
        Ok(FlowField::with_eta(tables, l, r, w, eta))
    }

    pub fn potential_only(tables: &'a PotentialTables, l: Vec3, r: Vec3, w: &[f64]) -> Self {
        FlowField::with_eta(tables, l, r, w, EtaField::zero(tables.mesh().len()))
    }

    pub fn with_eta(
        tables: &'a PotentialTables,
        l: Vec3,
        r: Vec3,
        w: &[f64],
        eta: EtaField,
    ) -> Self {
        let potential_sigma = tables.combined_density(&l, &r, w);
        let total_sigma = potential_sigma
            .iter()
            .zip(&eta.correction.sigma)
            .map(|(a, b)| a + b)
            .collect();
        FlowField {
            tables,
            l,
            r,
            w: w.to_vec(),
            eta,
            potential_sigma,
            total_sigma,
        }
    }

    pub fn solver(&self) -> &BoundarySolver {
        &self.tables.solver
    }

    /// Rigid velocity of the body point `y`, `l + r x y`.
    pub fn body_velocity(&self, y: &Vec3) -> Vec3 {
        self.l + self.r.cross(y)
    }

    pub fn potential_velocity(&self, y: &Vec3) -> Vec3 {
        self.solver().eval(&self.potential_sigma, y).1
    }

    pub fn eta_velocity(&self, y: &Vec3) -> Vec3 {
        self.eta.velocity(self.solver(), y)
    }

    /// Potential-part velocity at the centroids, fluid side.
    pub fn boundary_potential_velocity(&self) -> Vec<Vec3> {
        self.tables.boundary_velocity(&self.l, &self.r, &self.w)
    }

    pub fn velocities(&self, points: &[Vec3]) -> Vec<Vec3> {
        points.par_iter().map(|y| self.velocity(y)).collect()
    }
}

impl VelocitySource for FlowField<'_> {
    fn velocity_gradient(&self, y: &Vec3) -> (Vec3, Mat3) {
        let solver = self.solver();
        let (mut u, mut g) = solver.gradient_hessian(&self.total_sigma, y);
        if !self.eta.is_zero() {
            let (bu, bg) = self.eta.blobs.velocity_gradient(y);
            u += bu;
            g += bg;
        }
        (u, g)
    }

    fn velocity(&self, y: &Vec3) -> Vec3 {
        let (_, u) = self.solver().eval(&self.total_sigma, y);
        if self.eta.is_zero() {
            u
        } else {
            u + self.eta.blobs.velocity(y)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_sphere_mesh, ControlBasis};
    use crate::potential::kirchhoff_tables;
    use crate::vorticity::markers::seed_markers;
    use crate::vorticity::seed::SeedSpec;
    use std::sync::Arc;

    fn tables() -> PotentialTables {
        let mesh = Arc::new(build_sphere_mesh(1.0, 2).unwrap());
        kirchhoff_tables(mesh, &ControlBasis::empty()).unwrap()
    }

    fn blob() -> SeedSpec {
        SeedSpec::Blob {
            center: [0.0, 0.0, 2.2],
            radius: 0.5,
            axis: [1.0, 0.5, 0.0],
            amplitude: 1.0,
        }
    }

    #[test]
    fn no_markers_no_eta() {
        let t = tables();
        let eta = reconstruct_eta(&MarkerSet::empty(0.1), &t.solver).unwrap();
        assert!(eta.is_zero());
        assert_eq!(
            eta.velocity(&t.solver, &Vec3::new(0.0, 0.0, 3.0)),
            Vec3::zeros()
        );
    }

    #[test]
    fn boundary_condition_is_enforced() {
        let t = tables();
        let set = seed_markers(&blob(), 0.1, t.mesh(), 0.2).unwrap();
        let eta = reconstruct_eta(&set, &t.solver).unwrap();
        let res = eta.normal_residual(&t.solver);
        assert!(res < 1e-3, "{res}");
        assert!(eta.flux_imbalance < 1e-2, "{}", eta.flux_imbalance);
    }

    #[test]
    fn curl_reproduces_mollified_vorticity() {
        let t = tables();
        let set = seed_markers(&blob(), 0.05, t.mesh(), 0.2).unwrap();
        let field = FlowField::new(&t, Vec3::zeros(), Vec3::zeros(), &[], &set).unwrap();
        let h = 1e-4;
        for y in [
            Vec3::new(0.2, 0.0, 2.2),
            Vec3::new(0.0, -0.25, 2.3),
            Vec3::new(0.1, 0.2, 2.0),
        ] {
            let mut grad = Mat3::zeros();
            for j in 0..3 {
                let mut e = Vec3::zeros();
                e[j] = h;
                grad.set_column(
                    j,
                    &((field.velocity(&(y + e)) - field.velocity(&(y - e))) / (2.0 * h)),
                );
            }
            let curl = Vec3::new(
                grad[(2, 1)] - grad[(1, 2)],
                grad[(0, 2)] - grad[(2, 0)],
                grad[(1, 0)] - grad[(0, 1)],
            );
            let expect = field.eta.blobs.vorticity(&y);
            assert!(
                (curl - expect).norm() < 0.05 * expect.norm(),
                "{y:?}: {curl:?} vs {expect:?}"
            );
            assert!(grad.trace().abs() < 1e-6 * grad.norm());
        }
    }

    #[test]
    fn analytic_gradient_matches_difference() {
        let t = tables();
        let set = seed_markers(&blob(), 0.1, t.mesh(), 0.2).unwrap();
        let field = FlowField::new(
            &t,
            Vec3::new(0.3, 0.0, 0.1),
            Vec3::new(0.0, 0.2, 0.0),
            &[],
            &set,
        )
        .unwrap();
        let y = Vec3::new(0.5, 0.4, 1.6);
        let (_, g) = field.velocity_gradient(&y);
        let h = 1e-5;
        for j in 0..3 {
            let mut e = Vec3::zeros();
            e[j] = h;
            let fd = (field.velocity(&(y + e)) - field.velocity(&(y - e))) / (2.0 * h);
            assert!(
                (fd - g.column(j)).norm() < 1e-6,
                "{j}: {fd:?} vs {:?}",
                g.column(j)
            );
        }
    }
}

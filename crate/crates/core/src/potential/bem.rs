use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::SurfaceMesh;
use crate::math::{Mat3, Vec3};
use crate::potential::panel::{self, Panel};

/// Relative flux imbalance tolerated by the exterior Neumann problem.
pub const SOLVABILITY_TOL: f64 = 1e-8;

/// Dense single-layer collocation system for the exterior Neumann problem,
/// factored once per mesh and reused for every right-hand side.
///
/// Unknown: a piecewise-constant density `sigma` with
/// `phi(y) = sum_j sigma_j int_j G(y - x) dA`. Collocation at centroids of
/// `d phi / d n = g`, with `n` pointing into the body, gives
/// `(1/2) sigma_i + sum_j sigma_j PV int_j grad G(y_i - x) . n_i dA = g_i`,
/// with the self term fixed by the flux identity of the kernel.
pub struct BoundarySolver {
    mesh: Arc<SurfaceMesh>,
    panels: Vec<Panel>,
    lu: LU<f64, Dyn, Dyn>,
    values: DMatrix<f64>,
    gradients: [DMatrix<f64>; 3],
    diagonal: Vec<f64>,
    condition: f64,
}

impl std::fmt::Debug for BoundarySolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundarySolver")
            .field("panels", &self.panels.len())
            .field("condition", &self.condition)
            .finish()
    }
}

impl BoundarySolver {
    pub fn new(mesh: Arc<SurfaceMesh>) -> Result<Self> {
        let n = mesh.len();
        let panels: Vec<Panel> = (0..n).map(|k| Panel::new(mesh.corners(k))).collect();
        let rows: Vec<(Vec<f64>, Vec<Vec3>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let y = mesh.centroids()[i];
                let mut vals = Vec::with_capacity(n);
                let mut grads = Vec::with_capacity(n);
                for panel in &panels {
                    let (v, g) = panel::single_layer(&y, panel);
                    vals.push(v);
                    grads.push(g);
                }
                (vals, grads)
            })
            .collect();
        let mut values = DMatrix::zeros(n, n);
        let mut gradients = [
            DMatrix::zeros(n, n),
            DMatrix::zeros(n, n),
            DMatrix::zeros(n, n),
        ];
        let mut system = DMatrix::zeros(n, n);
        for (i, (vals, grads)) in rows.into_iter().enumerate() {
            let ni = mesh.normals()[i];
            for j in 0..n {
                values[(i, j)] = vals[j];
                for c in 0..3 {
                    gradients[c][(i, j)] = grads[j][c];
                }
                system[(i, j)] = grads[j].dot(&ni);
            }
        }
        // Replace each flat-panel self term by the value implied by the
        // identity oint d G(y - x) / d n_y dA_y = 1/2, which restores the
        // curvature contribution the flat self panel misses.
        let areas = mesh.areas();
        for j in 0..n {
            let off: f64 = (0..n)
                .filter(|&i| i != j)
                .map(|i| areas[i] * system[(i, j)])
                .sum();
            system[(j, j)] = 0.5 + 0.5 - off / areas[j];
        }
        let diagonal: Vec<f64> = (0..n).map(|j| system[(j, j)]).collect();
        let lu = system.lu();
        let diag = lu.u().diagonal();
        let max = diag.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let min = diag.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        if !(condition < 1e12) {
            return Err(Error::SingularSystem { condition });
        }
        Ok(BoundarySolver {
            mesh,
            panels,
            lu,
            values,
            gradients,
            diagonal,
            condition,
        })
    }

    pub fn mesh(&self) -> &Arc<SurfaceMesh> {
        &self.mesh
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    /// Pivot-ratio estimate of the condition number of the collocation matrix.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    /// Net flux `sum_k g_k a_k` relative to `max|g| * area`.
    pub fn flux_imbalance(&self, g: &[f64]) -> f64 {
        let flux: f64 = g.iter().zip(self.mesh.areas()).map(|(x, a)| x * a).sum();
        let scale = g.iter().fold(0.0_f64, |m, x| m.max(x.abs())) * self.mesh.total_area();
        if scale == 0.0 {
            0.0
        } else {
            flux.abs() / scale
        }
    }

    /// Solves `d phi / d n = g` on the surface with `phi -> 0` at infinity.
    pub fn solve(&self, g: &[f64]) -> Result<HarmonicPotential> {
        if g.len() != self.mesh.len() {
            return Err(Error::InvalidInput(format!(
                "boundary data has {} values for {} panels",
                g.len(),
                self.mesh.len()
            )));
        }
        let imbalance = self.flux_imbalance(g);
        if imbalance > SOLVABILITY_TOL {
            return Err(Error::NonSolvable {
                flux: imbalance,
                tol: SOLVABILITY_TOL,
            });
        }
        Ok(self.solve_unchecked(g))
    }

    /// Solve without the solvability check; callers correct the flux first.
    pub fn solve_unchecked(&self, g: &[f64]) -> HarmonicPotential {
        let rhs = DVector::from_column_slice(g);
        let sigma = if g.iter().all(|x| *x == 0.0) {
            DVector::zeros(g.len())
        } else {
            self.lu
                .solve(&rhs)
                .expect("factorization checked at construction")
        };
        let boundary_values = (&self.values * &sigma).as_slice().to_vec();
        let boundary_gradients = self.boundary_gradients(sigma.as_slice(), g);
        HarmonicPotential {
            sigma: sigma.as_slice().to_vec(),
            data: g.to_vec(),
            boundary_values,
            boundary_gradients,
        }
    }

    /// Fluid-side gradient at the centroids: tangential part of the principal
    /// value plus the prescribed normal derivative.
    pub fn boundary_gradients(&self, sigma: &[f64], g: &[f64]) -> Vec<Vec3> {
        let s = DVector::from_column_slice(sigma);
        let parts: Vec<DVector<f64>> = self.gradients.iter().map(|m| m * &s).collect();
        (0..self.mesh.len())
            .map(|i| {
                let n = self.mesh.normals()[i];
                let pv = Vec3::new(parts[0][i], parts[1][i], parts[2][i]);
                pv - n * pv.dot(&n) + n * g[i]
            })
            .collect()
    }

    /// `d phi / d n` at the centroids reconstructed from a density.
    pub fn normal_derivative(&self, sigma: &[f64]) -> Vec<f64> {
        let s = DVector::from_column_slice(sigma);
        let parts: Vec<DVector<f64>> = self.gradients.iter().map(|m| m * &s).collect();
        (0..self.mesh.len())
            .map(|i| {
                let n = self.mesh.normals()[i];
                self.diagonal[i] * sigma[i]
                    + Vec3::new(parts[0][i], parts[1][i], parts[2][i]).dot(&n)
            })
            .collect()
    }

    /// Value and gradient of the single layer with density `sigma` at `y`.
    pub fn eval(&self, sigma: &[f64], y: &Vec3) -> (f64, Vec3) {
        let mut value = 0.0;
        let mut grad = Vec3::zeros();
        for (panel, s) in self.panels.iter().zip(sigma) {
            if *s == 0.0 {
                continue;
            }
            let (v, g) = panel::single_layer(y, panel);
            value += s * v;
            grad += g * *s;
        }
        (value, grad)
    }

    /// [`BoundarySolver::eval`] for several densities in one pass over the panels.
    pub fn eval_many<const K: usize>(&self, sigmas: [&[f64]; K], y: &Vec3) -> [(f64, Vec3); K] {
        let mut out = [(0.0, Vec3::zeros()); K];
        for (p, panel) in self.panels.iter().enumerate() {
            let (v, g) = panel::single_layer(y, panel);
            for (o, s) in out.iter_mut().zip(&sigmas) {
                o.0 += s[p] * v;
                o.1 += g * s[p];
            }
        }
        out
    }

    /// Gradient and Hessian of the single layer with density `sigma` at `y`.
    pub fn gradient_hessian(&self, sigma: &[f64], y: &Vec3) -> (Vec3, Mat3) {
        let mut grad = Vec3::zeros();
        let mut hess = Mat3::zeros();
        for (panel, s) in self.panels.iter().zip(sigma) {
            if *s == 0.0 {
                continue;
            }
            let (g, h) = panel::gradient_hessian(y, panel);
            grad += g * *s;
            hess += h * *s;
        }
        (grad, hess)
    }

    /// Hessian of the single layer with density `sigma` at `y`.
    pub fn hessian(&self, sigma: &[f64], y: &Vec3) -> Mat3 {
        let mut out = Mat3::zeros();
        for (panel, s) in self.panels.iter().zip(sigma) {
            if *s == 0.0 {
                continue;
            }
            out += panel::hessian(y, panel) * *s;
        }
        out
    }
}

/// A solved exterior harmonic function: its layer density plus cached
/// boundary values and fluid-side gradients at the panel centroids.
#[derive(Debug, Clone)]
pub struct HarmonicPotential {
    pub sigma: Vec<f64>,
    pub data: Vec<f64>,
    pub boundary_values: Vec<f64>,
    pub boundary_gradients: Vec<Vec3>,
}

impl HarmonicPotential {
    pub fn zero(n: usize) -> Self {
        HarmonicPotential {
            sigma: vec![0.0; n],
            data: vec![0.0; n],
            boundary_values: vec![0.0; n],
            boundary_gradients: vec![Vec3::zeros(); n],
        }
    }

    pub fn value(&self, solver: &BoundarySolver, y: &Vec3) -> f64 {
        solver.eval(&self.sigma, y).0
    }

    pub fn gradient(&self, solver: &BoundarySolver, y: &Vec3) -> Vec3 {
        solver.eval(&self.sigma, y).1
    }

    /// Relative RMS mismatch between the reconstructed normal derivative and
    /// the boundary data.
    pub fn neumann_residual(&self, solver: &BoundarySolver) -> f64 {
        let dn = solver.normal_derivative(&self.sigma);
        let num: f64 = dn
            .iter()
            .zip(&self.data)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let den: f64 = self.data.iter().map(|b| b * b).sum();
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_sphere_mesh;

    fn sphere(refinement: u32) -> BoundarySolver {
        BoundarySolver::new(Arc::new(build_sphere_mesh(1.0, refinement).unwrap())).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_potential() {
        let solver = sphere(1);
        let pot = solver.solve(&vec![0.0; solver.mesh().len()]).unwrap();
        assert!(pot.sigma.iter().all(|s| *s == 0.0));
        assert_eq!(pot.value(&solver, &Vec3::new(2.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn translating_sphere_matches_dipole() {
        let solver = sphere(3);
        let g: Vec<f64> = solver.mesh().normals().iter().map(|n| n.x).collect();
        let pot = solver.solve(&g).unwrap();
        for y in [
            Vec3::new(1.5, 0.0, 0.0),
            Vec3::new(0.3, 1.7, -0.4),
            Vec3::new(-2.0, 1.0, 1.0),
            Vec3::new(0.0, 0.0, 3.0),
            Vec3::new(1.2, 0.9, 0.4),
        ] {
            let exact = -y.x / (2.0 * y.norm().powi(3));
            let v = pot.value(&solver, &y);
            let scale = 1.0 / (2.0 * y.norm().powi(2));
            assert!((v - exact).abs() < 0.01 * scale, "{y:?}: {v} vs {exact}");
        }
        assert!(pot.neumann_residual(&solver) < 1e-3);
    }

    #[test]
    fn nonzero_mean_data_is_rejected() {
        let solver = sphere(1);
        let g = vec![1.0; solver.mesh().len()];
        assert!(matches!(solver.solve(&g), Err(Error::NonSolvable { .. })));
    }

    #[test]
    fn boundary_gradient_agrees_with_exterior_limit() {
        let solver = sphere(2);
        let g: Vec<f64> = solver.mesh().normals().iter().map(|n| n.z).collect();
        let pot = solver.solve(&g).unwrap();
        for k in [0, 17, 101] {
            let c = solver.mesh().centroids()[k];
            let n = solver.mesh().normals()[k];
            let outside = pot.gradient(&solver, &(c - n * 1e-7));
            let diff = outside - pot.boundary_gradients[k];
            let tangential = diff - n * diff.dot(&n);
            assert!(tangential.norm() < 1e-4, "{k}: {tangential:?}");
            // the normal part differs by the flat-panel curvature term only
            assert!(diff.dot(&n).abs() < 0.1, "{k}: {diff:?}");
        }
    }
}

//! Pressure recovery `q = mu - l' . phi - r' . varphi`, normalized so that
//! `q -> 0` at infinity.
//!
//! `mu` splits into the Bernoulli part `-B - sum w'_j psi_j` and a rotational
//! part: the Newtonian potential `N` of `div((v - U) x omega)` over the blobs
//! plus a harmonic correction with `dchi/dn = -dN/dn` on the body.

use std::f64::consts::PI;

use crate::body::Body;
use crate::coupled::solve::{CoupledSolution, CoupledState};
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::potential::HarmonicPotential;
use crate::vorticity::{FlowField, VelocitySource};

/// Pressure of one solution sample, ready for pointwise evaluation.
pub struct PressureField<'a> {
    pub field: FlowField<'a>,
    body: &'a Body,
    dl: Vec3,
    dr: Vec3,
    dw: Vec<f64>,
    /// `(X_k, (v - U)(X_k) x omega_k vol_k)`.
    lamb: Vec<(Vec3, Vec3)>,
    epsilon: f64,
    chi: HarmonicPotential,
}

fn newton_value(lamb: &[(Vec3, Vec3)], eps: f64, y: &Vec3) -> f64 {
    lamb.iter()
        .map(|(x, f)| {
            let z = y - x;
            let rho2 = z.norm_squared() + eps * eps;
            z.dot(f) / (4.0 * PI * rho2 * rho2.sqrt())
        })
        .sum()
}

fn newton_gradient(lamb: &[(Vec3, Vec3)], eps: f64, y: &Vec3) -> Vec3 {
    lamb.iter().fold(Vec3::zeros(), |acc, (x, f)| {
        let z = y - x;
        let rho2 = z.norm_squared() + eps * eps;
        let rho3 = rho2 * rho2.sqrt();
        acc + (f / rho3 - z * (3.0 * z.dot(f) / (rho3 * rho2))) / (4.0 * PI)
    })
}

impl<'a> PressureField<'a> {
    pub fn new(body: &'a Body, state: &CoupledState) -> Result<Self> {
        let field = FlowField::new(&body.tables, state.l, state.r, &state.w, &state.markers)?;
        let mesh = body.tables.mesh();
        let (lamb, chi) = if field.eta.is_zero() {
            (Vec::new(), HarmonicPotential::zero(mesh.len()))
        } else {
            let lamb: Vec<(Vec3, Vec3)> = state
                .markers
                .markers
                .iter()
                .map(|m| {
                    let vt = field.velocity(&m.x) - field.body_velocity(&m.x);
                    (m.x, vt.cross(&(m.vorticity() * m.vol)))
                })
                .collect();
            let eps = state.markers.epsilon;
            let mut g: Vec<f64> = mesh
                .centroids()
                .iter()
                .zip(mesh.normals())
                .map(|(c, n)| -newton_gradient(&lamb, eps, c).dot(n))
                .collect();
            let mean =
                g.iter().zip(mesh.areas()).map(|(x, a)| x * a).sum::<f64>() / mesh.total_area();
            for x in &mut g {
                *x -= mean;
            }
            (lamb, body.tables.solver.solve_unchecked(&g))
        };
        Ok(PressureField {
            field,
            body,
            dl: state.dl,
            dr: state.dr,
            dw: state.dw.clone(),
            lamb,
            epsilon: state.markers.epsilon,
            chi,
        })
    }

    /// `q(y)` at an exterior point.
    pub fn eval(&self, y: &Vec3) -> Result<f64> {
        let d = self.body.tables.mesh().signed_distance(y);
        if !(d > 0.0) {
            return Err(Error::NotExterior {
                point: [y.x, y.y, y.z],
                distance: d,
            });
        }
        Ok(self.eval_unchecked(y))
    }

    pub(crate) fn eval_unchecked(&self, y: &Vec3) -> f64 {
        let tables = &self.body.tables;
        let v = self.field.velocity(y);
        let u = self.field.body_velocity(y);
        let bernoulli = 0.5 * v.norm_squared() - u.dot(&v);
        let control: f64 = tables
            .control_values(y)
            .iter()
            .zip(&self.dw)
            .map(|(p, d)| p * d)
            .sum();
        let rigid = tables.rigid_values(y);
        let accel = (0..3)
            .map(|i| self.dl[i] * rigid[i] + self.dr[i] * rigid[i + 3])
            .sum::<f64>();
        let mut q = -bernoulli - control - accel;
        if !self.lamb.is_empty() {
            q += newton_value(&self.lamb, self.epsilon, y) + self.chi.value(&tables.solver, y);
        }
        q
    }
}

/// `q(t, y)` for a grid time `t` of the solution.
pub fn pressure_eval(body: &Body, solution: &CoupledSolution, t: f64, y: &Vec3) -> Result<f64> {
    let k = solution.index_of(t).ok_or_else(|| {
        Error::InvalidInput(format!("t = {t} is not a grid time of the solution"))
    })?;
    PressureField::new(body, &solution.states[k])?.eval(y)
}

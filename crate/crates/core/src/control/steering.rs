//! Shooting on the potential model: Levenberg-Marquardt on the spline
//! coefficients of the control.

use nalgebra::{DMatrix, DVector, SVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::RigidState;
use crate::potential::AddedMassSet;
use crate::rigid::{integrate_potential, ControlSignal};

pub type Vec12 = SVector<f64, 12>;

/// Steer `initial` to `target` in time `horizon` with `intervals` spline
/// intervals per channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringProblem {
    pub initial: RigidState,
    pub target: RigidState,
    pub horizon: f64,
    pub intervals: usize,
}

impl SteeringProblem {
    pub fn new(
        initial: RigidState,
        target: RigidState,
        horizon: f64,
        intervals: usize,
    ) -> Result<Self> {
        let p = SteeringProblem {
            initial,
            target,
            horizon,
            intervals,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "steering horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.intervals == 0 {
            return Err(Error::InvalidInput(
                "steering needs at least one spline interval".into(),
            ));
        }
        for s in [&self.initial, &self.target] {
            RigidState::new(s.h, s.q.0, s.l, s.r)?;
        }
        Ok(())
    }

    /// Same endpoints with the initial and target states exchanged and the
    /// velocities reversed.
    pub fn reversed(&self) -> Self {
        let flip = |s: &RigidState| RigidState {
            l: -s.l,
            r: -s.r,
            ..*s
        };
        SteeringProblem {
            initial: flip(&self.target),
            target: flip(&self.initial),
            ..*self
        }
    }

    pub fn with_target(&self, target: RigidState) -> Self {
        SteeringProblem { target, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteeringOptions {
    pub dt: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Relative finite-difference step, scaled by `1 + |c|`.
    pub fd_step: f64,
}

impl Default for SteeringOptions {
    fn default() -> Self {
        SteeringOptions {
            dt: 1e-3,
            tol: 1e-6,
            max_iter: 50,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringResult {
    pub control: ControlSignal,
    pub endpoint: RigidState,
    pub residual: f64,
    pub iterations: usize,
    pub success: bool,
    /// Numerical rank of the endpoint Jacobian at zero control, when computed.
    pub jacobian_rank: Option<usize>,
}

/// `endpoint - target` as a 12-vector.
pub fn endpoint_residual(endpoint: &RigidState, target: &RigidState) -> Vec12 {
    Vec12::from(endpoint.to_array()) - Vec12::from(target.to_array())
}

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-8;

struct Shooter<'a> {
    problem: &'a SteeringProblem,
    mats: &'a AddedMassSet,
    template: ControlSignal,
    opts: &'a SteeringOptions,
}

impl Shooter<'_> {
    fn endpoint(&self, coefs: &[f64]) -> Result<RigidState> {
        let control = self.template.with_coefficients(coefs.to_vec())?;
        let traj = integrate_potential(
            &self.problem.initial,
            &control,
            self.problem.horizon,
            self.opts.dt,
            self.mats,
        )?;
        Ok(*traj.final_state())
    }

    fn residual(&self, coefs: &[f64]) -> Result<Vec12> {
        Ok(endpoint_residual(
            &self.endpoint(coefs)?,
            &self.problem.target,
        ))
    }

    /// Central differences, one column per coefficient.
    fn jacobian(&self, coefs: &[f64]) -> Result<DMatrix<f64>> {
        let cols: Vec<Vec12> = (0..coefs.len())
            .into_par_iter()
            .map(|k| {
                let h = self.opts.fd_step * (1.0 + coefs[k].abs());
                let mut plus = coefs.to_vec();
                plus[k] += h;
                let mut minus = coefs.to_vec();
                minus[k] -= h;
                Ok((self.residual(&plus)? - self.residual(&minus)?) / (2.0 * h))
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(12, coefs.len(), |i, k| cols[k][i]))
    }
}

fn rank(j: &DMatrix<f64>) -> usize {
    let sv = j.clone().svd(false, false).singular_values;
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_TOL * top).count()
}

/// Relative decrease per iteration below which the iteration has stalled.
const STALL: f64 = 1e-3;

/// Levenberg-Marquardt from zero control. Returns the first control whose
/// endpoint residual is below `opts.tol`.
pub fn potential_steering(
    problem: &SteeringProblem,
    mats: &AddedMassSet,
    opts: &SteeringOptions,
) -> Result<SteeringResult> {
    let result = best_steering(problem, mats, opts)?;
    if !result.success {
        return Err(match result.jacobian_rank {
            Some(r) if r < 12 => Error::ControllabilityDeficiency {
                rank: r,
                residual: result.residual,
            },
            _ => Error::SteeringNonConvergence {
                residual: result.residual,
                iterations: result.iterations,
            },
        });
    }
    Ok(result)
}

/// As [`potential_steering`] but returns the best control found, with
/// `success = false`, when the tolerance is not reached.
pub fn best_steering(
    problem: &SteeringProblem,
    mats: &AddedMassSet,
    opts: &SteeringOptions,
) -> Result<SteeringResult> {
    problem.validate()?;
    if !(opts.tol > 0.0) || !(opts.fd_step > 0.0) {
        return Err(Error::InvalidInput(
            "steering tolerance and step must be positive".into(),
        ));
    }
    let m = mats.controls();
    let n = m * ControlSignal::coefficients_per_channel(problem.intervals);
    if n < 12 {
        return Err(Error::InvalidInput(format!(
            "{n} control coefficients cannot reach a 12-dimensional target"
        )));
    }
    let template = ControlSignal::zero(m, problem.intervals, problem.horizon)?;
    let shooter = Shooter {
        problem,
        mats,
        template: template.clone(),
        opts,
    };

    let mut coefs = vec![0.0; n];
    let mut f = shooter.residual(&coefs)?;
    let mut rank_at_origin = None;
    let mut iterations = 0;
    let mut mu = 0.0;
    while f.norm() >= opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let j = shooter.jacobian(&coefs)?;
        if rank_at_origin.is_none() {
            rank_at_origin = Some(rank(&j));
        }
        let a = &j * j.transpose();
        let scale = a.diagonal().max().max(f64::MIN_POSITIVE);
        if mu == 0.0 {
            mu = 1e-3 * scale;
        }
        let rhs = DVector::from_column_slice(f.as_slice());
        let before = f.norm();
        let mut improved = false;
        while mu < 1e12 * scale {
            let shifted = &a + DMatrix::identity(12, 12) * mu;
            let Some(y) = shifted.cholesky().map(|c| c.solve(&rhs)) else {
                mu *= 4.0;
                continue;
            };
            let step = j.transpose() * y;
            let trial: Vec<f64> = coefs.iter().zip(step.iter()).map(|(c, d)| c - d).collect();
            match shooter.residual(&trial) {
                Ok(g) if g.norm() < f.norm() => {
                    coefs = trial;
                    f = g;
                    mu = (mu / 3.0).max(1e-15 * scale);
                    improved = true;
                    break;
                }
                // chart exits and worse residuals both shrink the step
                _ => mu *= 4.0,
            }
        }
        if !improved || f.norm() > (1.0 - STALL) * before {
            break;
        }
    }
    let residual = f.norm();
    let control = template.with_coefficients(coefs)?;
    Ok(SteeringResult {
        endpoint: shooter.endpoint(control.coefficients())?,
        control,
        residual,
        iterations,
        success: residual < opts.tol,
        jacobian_rank: rank_at_origin,
    })
}

impl SteeringResult {
    /// JSON summary: coefficients, residual and iteration count.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

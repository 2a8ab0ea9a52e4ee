//! Steering under vorticity: the retargeting iteration on the coupled
//! endpoint map and the time-scaling search around it.

use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::control::scaling::TimeScaling;
use crate::control::steering::{
    best_steering, endpoint_residual, SteeringOptions, SteeringProblem, SteeringResult, Vec12,
};
use crate::coupled::{timestep_solve, CoupledSolution};
use crate::error::{Error, Result};
use crate::math::RigidState;
use crate::vorticity::MarkerSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetargetOptions {
    /// Radius of the trust region of targets.
    pub eta1: f64,
    pub eps_max: f64,
    /// Endpoint tolerance in state units.
    pub tol: f64,
    pub max_outer: usize,
    /// Step of both the shooting and the coupled runs.
    pub dt: f64,
    pub steering_max_iter: usize,
}

impl Default for RetargetOptions {
    fn default() -> Self {
        RetargetOptions {
            eta1: 0.1,
            eps_max: 0.5,
            tol: 1e-6,
            max_outer: 20,
            dt: 1.0 / 64.0,
            steering_max_iter: 50,
        }
    }
}

impl RetargetOptions {
    fn steering(&self) -> SteeringOptions {
        SteeringOptions {
            dt: self.dt,
            tol: 1e-2 * self.tol,
            max_iter: self.steering_max_iter,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta1 > 0.0)
            || !(self.eps_max > 0.0 && self.eps_max < 1.0)
            || !(self.tol > 0.0)
            || !(self.dt > 0.0)
        {
            return Err(Error::InvalidInput(
                "retargeting needs eta1 > 0, 0 < eps_max < 1, tol > 0 and dt > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RetargetReport {
    /// Control of the last outer iteration, with the coupled endpoint.
    pub result: SteeringResult,
    /// `max |f(x) - x|` over the sampled targets.
    pub epsilon: f64,
    /// Endpoint error after each outer iteration.
    pub errors: Vec<f64>,
    pub solution: CoupledSolution,
}

fn norm12(s: &RigidState) -> f64 {
    Vec12::from(s.to_array()).norm()
}

fn state_of(x: &Vec12) -> Result<RigidState> {
    RigidState::from_array(&(*x).into())
}

/// One evaluation of `f`: shoot on the potential model towards `eta1 x`, then
/// run the coupled problem with that control. Targets the potential model
/// cannot reach exactly use the least-squares control, so the miss shows up
/// in `f(x) - x`.
fn endpoint_map(
    problem: &SteeringProblem,
    body: &Body,
    seed: &MarkerSet,
    x: &Vec12,
    opts: &RetargetOptions,
) -> Result<(Vec12, SteeringResult, CoupledSolution)> {
    let target = state_of(&(x * opts.eta1))?;
    let steer = best_steering(&problem.with_target(target), &body.mats, &opts.steering())?;
    let sol = timestep_solve(
        body,
        &problem.initial,
        seed,
        &steer.control,
        problem.horizon,
        opts.dt,
    )?;
    let fx = Vec12::from(sol.final_state().rigid().to_array()) / opts.eta1;
    Ok((fx, steer, sol))
}

/// `max |f(x) - x|` over the six targets `x = +-e_i` that displace the position
/// only.
pub fn sample_epsilon(
    problem: &SteeringProblem,
    body: &Body,
    seed: &MarkerSet,
    opts: &RetargetOptions,
) -> Result<f64> {
    opts.validate()?;
    let mut eps = 0.0_f64;
    for i in 0..3 {
        for sign in [1.0, -1.0] {
            let mut x = Vec12::zeros();
            x[i] = sign;
            let (fx, _, _) = endpoint_map(problem, body, seed, &x, opts)?;
            eps = eps.max((fx - x).norm());
        }
    }
    Ok(eps)
}

/// Iterates `x <- x + (x* - f(x))` from `x = x*` until the coupled endpoint
/// is within `opts.tol` of the target.
pub fn retarget_with_vorticity(
    problem: &SteeringProblem,
    body: &Body,
    seed: &MarkerSet,
    opts: &RetargetOptions,
) -> Result<RetargetReport> {
    problem.validate()?;
    opts.validate()?;
    for (name, s) in [("initial", &problem.initial), ("target", &problem.target)] {
        if norm12(s) > opts.eta1 {
            return Err(Error::InvalidInput(format!(
                "{name} state |{}| lies outside the trust region eta1 = {}",
                norm12(s),
                opts.eta1
            )));
        }
    }
    let epsilon = sample_epsilon(problem, body, seed, opts)?;
    if epsilon >= opts.eps_max {
        return Err(Error::PerturbationTooLarge {
            eps: epsilon,
            eps_max: opts.eps_max,
        });
    }

    let goal = Vec12::from(problem.target.to_array()) / opts.eta1;
    let mut x = goal;
    let mut errors: Vec<f64> = Vec::new();
    for _ in 0..opts.max_outer {
        let (fx, steer, sol) = endpoint_map(problem, body, seed, &x, opts)?;
        let err = opts.eta1 * (fx - goal).norm();
        if errors.len() >= 2 && err > errors[errors.len() - 1] {
            errors.push(err);
            return Err(Error::RetargetDivergence { errors });
        }
        errors.push(err);
        if err < opts.tol {
            let endpoint = sol.final_state().rigid();
            return Ok(RetargetReport {
                result: SteeringResult {
                    control: steer.control,
                    residual: endpoint_residual(&endpoint, &problem.target).norm(),
                    endpoint,
                    iterations: errors.len(),
                    success: true,
                    jacobian_rank: steer.jacobian_rank,
                },
                epsilon,
                errors,
                solution: sol,
            });
        }
        x += goal - fx;
    }
    let best = errors.iter().copied().fold(f64::INFINITY, f64::min);
    Err(Error::SteeringNonConvergence {
        residual: best,
        iterations: errors.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FullOptions {
    pub retarget: RetargetOptions,
    pub lambda_min: f64,
    /// Endpoint tolerance of the unscaled verification run.
    pub final_tol: f64,
}

impl Default for FullOptions {
    fn default() -> Self {
        FullOptions {
            retarget: RetargetOptions::default(),
            lambda_min: 1.0 / 64.0,
            final_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FullReport {
    pub lambda: f64,
    /// Control on the physical horizon `lambda T` with the verified endpoint.
    pub result: SteeringResult,
    /// The scaled solve.
    pub retarget: RetargetReport,
    /// Coupled run of the unscaled data and control.
    pub solution: CoupledSolution,
}

/// Halves `lambda` until the scaled problem is inside the trust region and
/// passes the perturbation check, solves it on the horizon `T`, and verifies
/// the unscaled control on `[0, lambda T]`.
pub fn steer_full(
    problem: &SteeringProblem,
    body: &Body,
    seed: &MarkerSet,
    t0: f64,
    opts: &FullOptions,
) -> Result<FullReport> {
    problem.validate()?;
    if !(problem.horizon <= t0) {
        return Err(Error::InvalidInput(format!(
            "horizon {} exceeds T0 = {t0}",
            problem.horizon
        )));
    }
    let eta1 = opts.retarget.eta1;
    for s in [&problem.initial, &problem.target] {
        let a = s.configuration();
        if a.iter().map(|x| x * x).sum::<f64>().sqrt() > eta1 {
            return Err(Error::InvalidInput(format!(
                "configuration {a:?} lies outside the trust region eta1 = {eta1}"
            )));
        }
    }
    let mut lambda = 1.0;
    let (scaling, retarget) = loop {
        if lambda < opts.lambda_min {
            return Err(Error::ScalingExhausted { lambda });
        }
        let scaling = TimeScaling::new(lambda)?;
        let scaled = SteeringProblem {
            initial: scaling.scale_state(&problem.initial),
            target: scaling.scale_state(&problem.target),
            ..*problem
        };
        if norm12(&scaled.initial) > eta1 || norm12(&scaled.target) > eta1 {
            lambda *= 0.5;
            continue;
        }
        match retarget_with_vorticity(&scaled, body, &scaling.scale_seed(seed), &opts.retarget) {
            Ok(report) => break (scaling, report),
            Err(Error::PerturbationTooLarge { .. } | Error::RetargetDivergence { .. }) => {
                lambda *= 0.5
            }
            Err(e) => return Err(e),
        }
    };
    let control = scaling.unscale_control(&retarget.result.control)?;
    let horizon = lambda * problem.horizon;
    let solution = timestep_solve(
        body,
        &problem.initial,
        seed,
        &control,
        horizon,
        lambda * opts.retarget.dt,
    )?;
    let endpoint = solution.final_state().rigid();
    let residual = endpoint_residual(&endpoint, &problem.target).norm();
    if residual >= opts.final_tol {
        return Err(Error::SteeringNonConvergence {
            residual,
            iterations: retarget.errors.len(),
        });
    }
    Ok(FullReport {
        lambda,
        result: SteeringResult {
            control,
            endpoint,
            residual,
            iterations: retarget.errors.len(),
            success: true,
            jacobian_rank: retarget.result.jacobian_rank,
        },
        retarget,
        solution,
    })
}

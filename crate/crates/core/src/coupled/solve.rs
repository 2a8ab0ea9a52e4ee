//! The fixed-point operator on paths of `(l, r, omega)`, its Picard
//! iteration, and sequential time marching of the same coupled system.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::coupled::loads::{coupled_loads, gyroscopic};
use crate::error::{Error, Result};
use crate::math::{Mat3, QuatVec, RigidState, Vec3};
use crate::potential::Vec6;
use crate::rigid::{
    control_steps, control_term, integrate_potential, rk4_combine, split, stack, BodyRate,
    BodyState, ControlSignal,
};
use crate::vorticity::{
    advect_markers_staged, displaced, holder_seminorm, marker_rates, norm_diagnostics, rk4_update,
    weighted_lp, FlowField, Frame, MarkerSet, NormDiagnostics, NormParams,
};

/// One sample of the coupled body-fluid state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledState {
    pub t: f64,
    pub h: Vec3,
    pub q: QuatVec,
    pub l: Vec3,
    pub r: Vec3,
    pub markers: MarkerSet,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    /// `(l', r')` at this instant.
    pub dl: Vec3,
    pub dr: Vec3,
}

impl CoupledState {
    pub fn rigid(&self) -> RigidState {
        RigidState {
            h: self.h,
            q: self.q,
            l: self.l,
            r: self.r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Picard,
    Timestep,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PicardDiagnostics {
    pub iterations: usize,
    /// Path difference after each application of the operator.
    pub differences: Vec<f64>,
    /// Consecutive quotients of `differences`.
    pub ratios: Vec<f64>,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct CoupledSolution {
    pub times: Vec<f64>,
    pub states: Vec<CoupledState>,
    /// Generalized loads `(int grad mu . grad phi_i, int grad mu . grad varphi_i)`.
    pub loads: Vec<Vec6>,
    pub dt: f64,
    pub method: SolveMethod,
    pub picard: Option<PicardDiagnostics>,
    /// Largest `|det G - 1|` over all samples.
    pub max_det_error: f64,
}

/// Summary written ahead of the CSV body of a solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionHeader {
    pub config_hash: String,
    pub method: SolveMethod,
    pub dt: f64,
    pub samples: usize,
    pub markers: usize,
    pub max_det_error: f64,
    pub picard: Option<PicardDiagnostics>,
}

impl CoupledSolution {
    pub fn final_state(&self) -> &CoupledState {
        self.states
            .last()
            .expect("solution has at least one sample")
    }

    /// Index of the grid time within `1e-9 dt` of `t`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = (t / self.dt).round();
        if k < 0.0 {
            return None;
        }
        let k = k as usize;
        (k < self.times.len() && (self.times[k] - t).abs() <= 1e-9 * self.dt.max(1.0)).then_some(k)
    }

    /// The `(l, r, omega)` path the fixed-point operator acts on.
    pub fn path(&self) -> CoupledPath {
        CoupledPath {
            times: self.times.clone(),
            l: self.states.iter().map(|s| s.l).collect(),
            r: self.states.iter().map(|s| s.r).collect(),
            markers: self.states.iter().map(|s| s.markers.clone()).collect(),
        }
    }

    /// Largest `|l - l'| + |r - r'|` over the grid times both solutions share.
    pub fn max_velocity_difference(&self, other: &CoupledSolution) -> f64 {
        let mut worst = 0.0_f64;
        for s in &self.states {
            if let Some(k) = other.index_of(s.t) {
                let o = &other.states[k];
                worst = worst.max((s.l - o.l).norm() + (s.r - o.r).norm());
            }
        }
        worst
    }

    pub fn norm_history(&self, params: &NormParams) -> Result<Vec<NormDiagnostics>> {
        self.states
            .par_iter()
            .map(|s| norm_diagnostics(&s.markers, &s.l, &s.r, params))
            .collect()
    }

    pub fn header(&self, config_hash: &str) -> SolutionHeader {
        SolutionHeader {
            config_hash: config_hash.to_string(),
            method: self.method,
            dt: self.dt,
            samples: self.times.len(),
            markers: self.states[0].markers.len(),
            max_det_error: self.max_det_error,
            picard: self.picard.clone(),
        }
    }

    /// Columns `t, h, q, l, r, loads, norms`.
    pub fn to_csv(&self, params: &NormParams) -> Result<String> {
        let norms = self.norm_history(params)?;
        let mut out = String::from(
            "t,h1,h2,h3,q1,q2,q3,l1,l2,l3,r1,r2,r3,f1,f2,f3,f4,f5,f6,lp_weighted,m1,sup,holder,triple\n",
        );
        for ((s, f), d) in self.states.iter().zip(&self.loads).zip(&norms) {
            let mut row = vec![s.t];
            row.extend_from_slice(&s.rigid().to_array());
            row.extend(f.iter());
            row.extend([d.lp_weighted, d.m1, d.sup, d.holder, d.triple]);
            out.push_str(&crate::io::join(&row));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Time-sampled `(l, r, markers)` on a uniform grid starting at `t = 0`.
#[derive(Debug, Clone)]
pub struct CoupledPath {
    pub times: Vec<f64>,
    pub l: Vec<Vec3>,
    pub r: Vec<Vec3>,
    pub markers: Vec<MarkerSet>,
}

impl CoupledPath {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Cubic interpolation of the path at the midpoint of interval `n`.
    pub fn midpoint(&self, n: usize) -> (Vec3, Vec3, MarkerSet) {
        let weights = mid_weights(n, self.steps());
        let l = weights
            .iter()
            .fold(Vec3::zeros(), |a, (i, c)| a + self.l[*i] * *c);
        let r = weights
            .iter()
            .fold(Vec3::zeros(), |a, (i, c)| a + self.r[*i] * *c);
        let mut markers = self.markers[n].clone();
        for (k, m) in markers.markers.iter_mut().enumerate() {
            m.x = weights.iter().fold(Vec3::zeros(), |a, (i, c)| {
                a + self.markers[*i].markers[k].x * *c
            });
            m.g = weights.iter().fold(Mat3::zeros(), |a, (i, c)| {
                a + self.markers[*i].markers[k].g * *c
            });
        }
        (l, r, markers)
    }
}

/// Lagrange weights for the midpoint of interval `n` out of `steps`.
fn mid_weights(n: usize, steps: usize) -> Vec<(usize, f64)> {
    match steps {
        1 => vec![(0, 0.5), (1, 0.5)],
        2 if n == 0 => vec![(0, 0.375), (1, 0.75), (2, -0.125)],
        2 => vec![(0, -0.125), (1, 0.75), (2, 0.375)],
        _ if n == 0 => vec![
            (0, 5.0 / 16.0),
            (1, 15.0 / 16.0),
            (2, -5.0 / 16.0),
            (3, 1.0 / 16.0),
        ],
        _ if n + 1 == steps => vec![
            (n - 2, 1.0 / 16.0),
            (n - 1, -5.0 / 16.0),
            (n, 15.0 / 16.0),
            (n + 1, 5.0 / 16.0),
        ],
        _ => vec![
            (n - 1, -1.0 / 16.0),
            (n, 9.0 / 16.0),
            (n + 1, 9.0 / 16.0),
            (n + 2, -1.0 / 16.0),
        ],
    }
}

/// Weights, in units of the step, of `int_{t_n}^{t_{n+1}} f` from grid values.
fn interval_weights(n: usize, steps: usize) -> Vec<(usize, f64)> {
    match steps {
        1 => vec![(0, 0.5), (1, 0.5)],
        2 if n == 0 => vec![(0, 5.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)],
        2 => vec![(0, -1.0 / 12.0), (1, 8.0 / 12.0), (2, 5.0 / 12.0)],
        _ if n == 0 => vec![
            (0, 9.0 / 24.0),
            (1, 19.0 / 24.0),
            (2, -5.0 / 24.0),
            (3, 1.0 / 24.0),
        ],
        _ if n + 1 == steps => vec![
            (n - 2, 1.0 / 24.0),
            (n - 1, -5.0 / 24.0),
            (n, 19.0 / 24.0),
            (n + 1, 9.0 / 24.0),
        ],
        _ => vec![
            (n - 1, -1.0 / 24.0),
            (n, 13.0 / 24.0),
            (n + 1, 13.0 / 24.0),
            (n + 2, -1.0 / 24.0),
        ],
    }
}

/// Result of one application of the operator.
#[derive(Debug, Clone)]
pub struct TauOutput {
    pub path: CoupledPath,
    /// Loads evaluated along the input path.
    pub loads: Vec<Vec6>,
    /// `(l', r')` implied by those loads.
    pub rates: Vec<Vec6>,
}

fn check_channels(body: &Body, control: &ControlSignal) -> Result<()> {
    if control.channels() != body.m() {
        return Err(Error::InvalidInput(format!(
            "control has {} channels but the body has {}",
            control.channels(),
            body.m()
        )));
    }
    Ok(())
}

/// Builds the velocity field of the input path, transports fresh markers from
/// the seed under it, and integrates the loads it produces from `(l0, r0)`.
pub fn tau_apply(body: &Body, path: &CoupledPath, control: &ControlSignal) -> Result<TauOutput> {
    check_channels(body, control)?;
    let steps = path.steps();
    let dt = path.dt();
    let tables = &body.tables;

    let grid: Vec<FlowField> = (0..=steps)
        .into_par_iter()
        .map(|n| {
            let (w, _) = control.eval(path.times[n]);
            FlowField::new(tables, path.l[n], path.r[n], &w, &path.markers[n])
        })
        .collect::<Result<_>>()?;
    let mids: Vec<FlowField> = (0..steps)
        .into_par_iter()
        .map(|n| {
            let (l, r, markers) = path.midpoint(n);
            let (w, _) = control.eval(path.times[n] + 0.5 * dt);
            FlowField::new(tables, l, r, &w, &markers)
        })
        .collect::<Result<_>>()?;

    let loads: Vec<Vec6> = (0..=steps)
        .into_par_iter()
        .map(|n| {
            let (_, dw) = control.eval(path.times[n]);
            coupled_loads(body, &grid[n], &path.markers[n], &dw)
        })
        .collect();
    let rates: Vec<Vec6> = loads
        .iter()
        .enumerate()
        .map(|(n, f)| body.mats.jcal_inv * (f - gyroscopic(body, &path.l[n], &path.r[n])))
        .collect();

    // C w' integrates exactly; the rest by a cumulative fourth-order rule
    let jinv = &body.mats.jcal_inv;
    let smooth: Vec<Vec6> = (0..=steps)
        .map(|n| {
            let (_, dw) = control.eval(path.times[n]);
            rates[n] - jinv * control_term(&body.mats, &dw)
        })
        .collect();
    let b0 = stack(&path.l[0], &path.r[0]);
    let w0 = control.eval(path.times[0]).0;
    let mut acc = Vec6::zeros();
    let mut l = vec![path.l[0]];
    let mut r = vec![path.r[0]];
    for n in 0..steps {
        for (i, c) in interval_weights(n, steps) {
            acc += smooth[i] * (c * dt);
        }
        let w = control.eval(path.times[n + 1]).0;
        let dw: Vec<f64> = w.iter().zip(&w0).map(|(a, b)| a - b).collect();
        let (a, b) = split(&(b0 + acc + jinv * control_term(&body.mats, &dw)));
        l.push(a);
        r.push(b);
    }

    let mut markers = Vec::with_capacity(steps + 1);
    markers.push(path.markers[0].reset());
    for n in 0..steps {
        let (lm, rm, _) = path.midpoint(n);
        let start = Frame {
            field: &grid[n],
            l: path.l[n],
            r: path.r[n],
        };
        let mid = Frame {
            field: &mids[n],
            l: lm,
            r: rm,
        };
        let end = Frame {
            field: &grid[n + 1],
            l: path.l[n + 1],
            r: path.r[n + 1],
        };
        let next = advect_markers_staged(&markers[n], &start, &mid, &end, dt);
        next.check_clearance(&body.mesh, path.times[n + 1])?;
        markers.push(next);
    }

    Ok(TauOutput {
        path: CoupledPath {
            times: path.times.clone(),
            l,
            r,
            markers,
        },
        loads,
        rates,
    })
}

/// `sup|omega_a - omega_b| + holder + weighted L^p` of the mollified
/// vorticity difference, sampled at the markers of both sets.
fn vorticity_difference(a: &MarkerSet, b: &MarkerSet, params: &NormParams) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let (ba, bb) = (a.blobs(), b.blobs());
    let points: Vec<Vec3> = a.markers.iter().chain(&b.markers).map(|m| m.x).collect();
    let vols: Vec<f64> = a
        .markers
        .iter()
        .chain(&b.markers)
        .map(|m| 0.5 * m.vol)
        .collect();
    let diff: Vec<Vec3> = points
        .par_iter()
        .map(|y| ba.vorticity(y) - bb.vorticity(y))
        .collect();
    let sup = diff.iter().map(|d| d.norm()).fold(0.0, f64::max);
    sup + holder_seminorm(&diff, &points, params.alpha)
        + weighted_lp(&diff, &points, &vols, params.p, params.lambda())
}

/// Discrete triple norm of the difference of two paths on the same grid:
/// `sup|dl| + sup|dr| + sup_t (vorticity terms)`.
pub fn path_difference(a: &CoupledPath, b: &CoupledPath, params: &NormParams) -> f64 {
    let dl =
        a.l.iter()
            .zip(&b.l)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
    let dr =
        a.r.iter()
            .zip(&b.r)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
    let dw = a
        .markers
        .par_iter()
        .zip(&b.markers)
        .map(|(x, y)| vorticity_difference(x, y, params))
        .reduce(|| 0.0, f64::max);
    dl + dr + dw
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardOptions {
    pub dt: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub norm: NormParams,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            dt: 1e-2,
            tol: 1e-8,
            max_iter: 30,
            norm: NormParams::default(),
        }
    }
}

/// Consecutive ratios above one that count as a failure to contract.
const NON_CONTRACTION_RUN: usize = 3;

/// Bookkeeping of the Picard differences and ratios.
struct Monitor {
    diag: PicardDiagnostics,
    above: usize,
}

impl Monitor {
    fn new(tol: f64) -> Self {
        Monitor {
            diag: PicardDiagnostics {
                tol,
                ..Default::default()
            },
            above: 0,
        }
    }

    /// Records one difference; `Ok(true)` once converged.
    fn push(&mut self, d: f64) -> Result<bool> {
        let diag = &mut self.diag;
        if let Some(prev) = diag.differences.last().copied() {
            let ratio = if prev > 0.0 { d / prev } else { 0.0 };
            diag.ratios.push(ratio);
            self.above = if ratio > 1.0 { self.above + 1 } else { 0 };
        }
        diag.differences.push(d);
        diag.iterations += 1;
        if d < diag.tol {
            return Ok(true);
        }
        if self.above >= NON_CONTRACTION_RUN {
            return Err(Error::NonContraction {
                ratios: diag.ratios.clone(),
            });
        }
        Ok(false)
    }

    fn finish(self) -> Result<PicardDiagnostics> {
        let d = *self
            .diag
            .differences
            .last()
            .expect("at least one iteration");
        if d >= self.diag.tol {
            return Err(Error::PicardMaxIter {
                iterations: self.diag.iterations,
                last: d,
                tol: self.diag.tol,
            });
        }
        Ok(self.diag)
    }
}

/// Picard horizon `1 / (c N)` where `N` is the triple norm of the initial
/// data.
pub fn heuristic_horizon(
    seed: &MarkerSet,
    l0: &Vec3,
    r0: &Vec3,
    params: &NormParams,
    c: f64,
) -> Result<f64> {
    let n = norm_diagnostics(seed, l0, r0, params)?.triple;
    if !(c > 0.0) || !(n > 0.0) {
        return Err(Error::InvalidInput(
            "horizon heuristic needs nonzero data and a positive constant".into(),
        ));
    }
    Ok(1.0 / (c * n))
}

/// Picard iteration of [`tau_apply`] from the potential trajectory with the
/// seed vorticity frozen.
pub fn picard_solve(
    body: &Body,
    state0: &RigidState,
    seed: &MarkerSet,
    control: &ControlSignal,
    horizon: f64,
    opts: &PicardOptions,
) -> Result<CoupledSolution> {
    check_channels(body, control)?;
    opts.norm.validate()?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidInput(
            "Picard tolerance and iteration cap must be positive".into(),
        ));
    }
    let seed = seed.reset();
    seed.check_clearance(&body.mesh, 0.0)?;
    let guess = integrate_potential(state0, control, horizon, opts.dt, &body.mats)?;
    let mut path = CoupledPath {
        times: guess.times.clone(),
        l: guess.states.iter().map(|s| s.l).collect(),
        r: guess.states.iter().map(|s| s.r).collect(),
        markers: vec![seed; guess.times.len()],
    };

    let mut monitor = Monitor::new(opts.tol);
    let mut last = None;
    for _ in 0..opts.max_iter {
        let out = tau_apply(body, &path, control)?;
        let d = path_difference(&out.path, &path, &opts.norm);
        path = out.path.clone();
        last = Some(out);
        if monitor.push(d)? {
            break;
        }
    }
    let diag = monitor.finish()?;
    let out = last.expect("at least one iteration");
    let pose = integrate_pose(state0, &out.path)?;
    let dt = out.path.dt();
    let states: Vec<CoupledState> = (0..out.path.times.len())
        .map(|n| {
            let t = out.path.times[n];
            let (w, dw) = control.eval(t);
            let (dl, dr) = split(&out.rates[n]);
            CoupledState {
                t,
                h: pose[n].0,
                q: pose[n].1,
                l: out.path.l[n],
                r: out.path.r[n],
                markers: out.path.markers[n].clone(),
                w,
                dw,
                dl,
                dr,
            }
        })
        .collect();
    Ok(CoupledSolution {
        times: out.path.times.clone(),
        max_det_error: max_det_error(&states),
        states,
        loads: out.loads,
        dt,
        method: SolveMethod::Picard,
        picard: Some(diag),
    })
}

fn max_det_error(states: &[CoupledState]) -> f64 {
    states
        .iter()
        .map(|s| s.markers.max_det_error())
        .fold(0.0, f64::max)
}

/// Position and attitude along a velocity path, RK4 with midpoint velocities
/// from the same cubic interpolation the operator uses.
fn integrate_pose(state0: &RigidState, path: &CoupledPath) -> Result<Vec<(Vec3, QuatVec)>> {
    let dt = path.dt();
    let mut y = BodyState::from_rigid(state0);
    let mut out = vec![(state0.h, state0.q)];
    let rate = |l: Vec3, r: Vec3, y: &BodyState| BodyState { l, r, ..*y }.kinematic_rate();
    for n in 0..path.steps() {
        let (lm, rm, _) = path.midpoint(n);
        let k1 = rate(path.l[n], path.r[n], &y);
        let k2 = rate(lm, rm, &y.advance(&k1, 0.5 * dt));
        let k3 = rate(lm, rm, &y.advance(&k2, 0.5 * dt));
        let k4 = rate(path.l[n + 1], path.r[n + 1], &y.advance(&k3, dt));
        y = y.advance(&rk4_combine([&k1, &k2, &k3, &k4]), dt);
        y.quat.renormalize()?;
        let s = y.to_rigid()?;
        out.push((s.h, s.q));
    }
    Ok(out)
}

struct Stage {
    rate: BodyRate,
    markers: Vec<(Vec3, Mat3)>,
    loads: Vec6,
    w: Vec<f64>,
    dw: Vec<f64>,
}

fn stage(
    body: &Body,
    control: &ControlSignal,
    t: f64,
    y: &BodyState,
    markers: &MarkerSet,
) -> Result<Stage> {
    let (w, dw) = control.eval(t);
    let field = FlowField::new(&body.tables, y.l, y.r, &w, markers)?;
    let loads = coupled_loads(body, &field, markers, &dw);
    let (dl, dr) = split(&(body.mats.jcal_inv * (loads - gyroscopic(body, &y.l, &y.r))));
    let rates = if markers.is_empty() {
        Vec::new()
    } else {
        marker_rates(
            markers,
            &Frame {
                field: &field,
                l: y.l,
                r: y.r,
            },
        )
    };
    Ok(Stage {
        rate: BodyRate {
            l: dl,
            r: dr,
            ..y.kinematic_rate()
        },
        markers: rates,
        loads,
        w,
        dw,
    })
}

/// Self-consistent RK4 marching of `(h, q, l, r, markers)`, with the velocity
/// field rebuilt from the current markers at every stage.
pub fn timestep_solve(
    body: &Body,
    state0: &RigidState,
    seed: &MarkerSet,
    control: &ControlSignal,
    horizon: f64,
    dt: f64,
) -> Result<CoupledSolution> {
    check_channels(body, control)?;
    let steps = control_steps(horizon, dt, control)?;
    let dt = horizon / steps as f64;
    let mesh = &body.mesh;
    let mut y = BodyState::from_rigid(state0);
    let mut markers = seed.reset();
    markers.check_clearance(mesh, 0.0)?;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut loads = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        let t = n as f64 * dt;
        let k1 = stage(body, control, t, &y, &markers)?;
        let s = y.to_rigid()?;
        times.push(t);
        loads.push(k1.loads);
        states.push(CoupledState {
            t,
            h: s.h,
            q: s.q,
            l: s.l,
            r: s.r,
            markers: markers.clone(),
            w: k1.w.clone(),
            dw: k1.dw.clone(),
            dl: k1.rate.l,
            dr: k1.rate.r,
        });
        if n == steps {
            break;
        }
        let half = 0.5 * dt;
        let k2 = stage(
            body,
            control,
            t + half,
            &y.advance(&k1.rate, half),
            &displaced(&markers, &k1.markers, half),
        )?;
        let k3 = stage(
            body,
            control,
            t + half,
            &y.advance(&k2.rate, half),
            &displaced(&markers, &k2.markers, half),
        )?;
        let k4 = stage(
            body,
            control,
            t + dt,
            &y.advance(&k3.rate, dt),
            &displaced(&markers, &k3.markers, dt),
        )?;
        y = y.advance(&rk4_combine([&k1.rate, &k2.rate, &k3.rate, &k4.rate]), dt);
        y.quat.renormalize()?;
        if !markers.is_empty() {
            markers = rk4_update(
                &markers,
                [&k1.markers, &k2.markers, &k3.markers, &k4.markers],
                dt,
            );
            markers.check_clearance(mesh, t + dt)?;
        }
        let check = [y.l, y.r, y.h];
        if !check.iter().all(|v| v.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "coupled solution blew up at t = {}",
                t + dt
            )));
        }
    }
    Ok(CoupledSolution {
        times,
        max_det_error: max_det_error(&states),
        states,
        loads,
        dt,
        method: SolveMethod::Timestep,
        picard: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monitor_converges_and_records_ratios() {
        let mut m = Monitor::new(1e-3);
        assert!(!m.push(1.0).unwrap());
        assert!(!m.push(0.1).unwrap());
        assert!(m.push(1e-4).unwrap());
        let d = m.finish().unwrap();
        assert_eq!(d.iterations, 3);
        assert!((d.ratios[0] - 0.1).abs() < 1e-15 && (d.ratios[1] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn monitor_flags_three_growing_ratios() {
        let mut m = Monitor::new(1e-8);
        for d in [1.0, 2.0, 4.0] {
            assert!(!m.push(d).unwrap());
        }
        match m.push(8.0) {
            Err(Error::NonContraction { ratios }) => assert_eq!(ratios, vec![2.0, 2.0, 2.0]),
            other => panic!("{other:?}"),
        }
        let mut m = Monitor::new(1e-8);
        for d in [1.0, 2.0, 4.0, 1.0, 2.0, 4.0] {
            assert!(!m.push(d).unwrap());
        }
    }

    #[test]
    fn monitor_reports_exhaustion() {
        let mut m = Monitor::new(1e-8);
        m.push(1.0).unwrap();
        m.push(0.5).unwrap();
        assert!(matches!(
            m.finish(),
            Err(Error::PicardMaxIter { iterations: 2, .. })
        ));
    }

    #[test]
    fn midpoint_weights_reproduce_cubics() {
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t - 0.3 * t * t * t;
        for steps in [1usize, 2, 3, 6] {
            for n in 0..steps {
                let approx: f64 = mid_weights(n, steps)
                    .iter()
                    .map(|(i, c)| c * f(*i as f64))
                    .sum();
                if steps >= 3 {
                    assert!((approx - f(n as f64 + 0.5)).abs() < 1e-12, "{steps} {n}");
                }
                let sum: f64 = mid_weights(n, steps).iter().map(|(_, c)| c).sum();
                assert!((sum - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn interval_weights_integrate_cubics() {
        let f = |t: f64| 0.7 + t - 1.5 * t * t + 0.25 * t * t * t;
        let antider = |t: f64| 0.7 * t + 0.5 * t * t - 0.5 * t * t * t + 0.0625 * t.powi(4);
        for steps in [3usize, 4, 9] {
            for n in 0..steps {
                let approx: f64 = interval_weights(n, steps)
                    .iter()
                    .map(|(i, c)| c * f(*i as f64))
                    .sum();
                let exact = antider(n as f64 + 1.0) - antider(n as f64);
                assert!((approx - exact).abs() < 1e-12, "{steps} {n}");
            }
        }
        let q = |t: f64| 1.0 + t * t;
        for n in 0..2 {
            let approx: f64 = interval_weights(n, 2)
                .iter()
                .map(|(i, c)| c * q(*i as f64))
                .sum();
            let a = n as f64;
            assert!((approx - (1.0 + ((a + 1.0).powi(3) - a.powi(3)) / 3.0)).abs() < 1e-12);
        }
    }
}

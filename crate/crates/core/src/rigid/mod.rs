//! The finite-dimensional potential-flow model: body velocities driven by the
//! generalized inertia and the boundary controls, plus attitude and position
//! kinematics.

mod signal;

pub use signal::ControlSignal;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{kinematics_rates, skew, QuatVec, RigidState, UnitQuat, Vec3};
use crate::potential::{AddedMassSet, Mat6, Vec6};

/// Largest quaternion renormalization drift tolerated in one step.
pub const RENORM_TOL: f64 = 1e-10;

pub fn stack(l: &Vec3, r: &Vec3) -> Vec6 {
    Vec6::new(l.x, l.y, l.z, r.x, r.y, r.z)
}

pub fn split(b: &Vec6) -> (Vec3, Vec3) {
    (Vec3::new(b[0], b[1], b[2]), Vec3::new(b[3], b[4], b[5]))
}

/// `[S(r), 0; S(l), S(r)]`.
pub fn bracket(l: &Vec3, r: &Vec3) -> Mat6 {
    let mut out = Mat6::zeros();
    let sr = skew(r);
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&sr);
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&skew(l));
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&sr);
    out
}

/// `C w` as a 6-vector.
pub fn control_term(mats: &AddedMassSet, w: &[f64]) -> Vec6 {
    if w.is_empty() {
        return Vec6::zeros();
    }
    let cw = &mats.c * DVector::from_column_slice(w);
    Vec6::from_iterator(cw.iter().copied())
}

/// The nonlinear force `F(l, r, w)`.
pub fn generalized_force(mats: &AddedMassSet, l: &Vec3, r: &Vec3, w: &[f64]) -> Vec6 {
    let b = stack(l, r);
    let mut f = -bracket(l, r) * (mats.jcal * b - control_term(mats, w));
    if w.iter().any(|x| *x != 0.0) {
        let wv = DVector::from_column_slice(w);
        for (p, wp) in w.iter().enumerate() {
            if *wp == 0.0 {
                continue;
            }
            let wm = &mats.w_m[p] * &wv;
            let wj = &mats.w_j[p] * &wv;
            let top = mats.l_m[p] * l + mats.r_m[p] * r + Vec3::new(wm[0], wm[1], wm[2]);
            let bot = mats.l_j[p] * l + mats.r_j[p] * r + Vec3::new(wj[0], wj[1], wj[2]);
            f -= stack(&top, &bot) * *wp;
        }
    }
    f
}

/// `(l', r') = J^{-1} (C w' + F(l, r, w))`.
pub fn potential_rhs(
    l: &Vec3,
    r: &Vec3,
    w: &[f64],
    dw: &[f64],
    mats: &AddedMassSet,
) -> (Vec3, Vec3) {
    potential_rhs_forced(l, r, w, dw, mats, &Vec6::zeros())
}

/// [`potential_rhs`] with an additional generalized load on the right side.
pub fn potential_rhs_forced(
    l: &Vec3,
    r: &Vec3,
    w: &[f64],
    dw: &[f64],
    mats: &AddedMassSet,
    extra: &Vec6,
) -> (Vec3, Vec3) {
    let rhs = control_term(mats, dw) + generalized_force(mats, l, r, w) + extra;
    split(&(mats.jcal_inv * rhs))
}

/// `(h', q')` of the attitude chart. Fails on the chart boundary `|q| = 1`.
pub fn kinematics_rhs(state: &RigidState) -> Result<(Vec3, Vec3)> {
    let q = state.q.vector();
    let norm = q.norm();
    if !(norm < 1.0) {
        return Err(Error::ChartExit { norm });
    }
    Ok(kinematics_rates(state.q.scalar(), &q, &state.l, &state.r))
}

/// `(l; r)^T J (l; r)`.
pub fn kinetic_form(mats: &AddedMassSet, l: &Vec3, r: &Vec3) -> f64 {
    let b = stack(l, r);
    b.dot(&(mats.jcal * b))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<RigidState>,
    pub controls: Vec<Vec<f64>>,
    pub dt: f64,
    pub order: u32,
    /// Largest quaternion renormalization drift over all steps.
    pub max_renorm_drift: f64,
}

impl PotentialTrajectory {
    pub fn final_state(&self) -> &RigidState {
        self.states
            .last()
            .expect("trajectory has at least one sample")
    }

    pub fn to_csv(&self) -> String {
        let m = self.controls.first().map_or(0, Vec::len);
        let mut out = String::from("t,h1,h2,h3,q1,q2,q3,l1,l2,l3,r1,r2,r3");
        for c in 0..m {
            out.push_str(&format!(",w{c}"));
        }
        out.push('\n');
        for ((t, s), w) in self.times.iter().zip(&self.states).zip(&self.controls) {
            out.push_str(&crate::io::fmt(*t));
            out.push(',');
            out.push_str(&crate::io::join(&s.to_array()));
            if !w.is_empty() {
                out.push(',');
                out.push_str(&crate::io::join(w));
            }
            out.push('\n');
        }
        out
    }
}

/// Number of uniform steps covering `[0, T]` with step at most `dt`.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidInput(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let ratio = horizon / dt;
    let n = ratio.round();
    let n = if (ratio - n).abs() < 1e-9 * ratio {
        n
    } else {
        ratio.ceil()
    };
    Ok((n as usize).max(1))
}

/// [`step_count`] rounded up to a multiple of the control intervals when the
/// horizon is the control's own, so every spline knot is a grid point.
pub fn control_steps(horizon: f64, dt: f64, control: &ControlSignal) -> Result<usize> {
    let n = step_count(horizon, dt)?;
    let k = control.intervals().max(1);
    if (horizon - control.horizon()).abs() <= 1e-12 * horizon && n % k != 0 {
        return Ok(n.div_ceil(k) * k);
    }
    Ok(n)
}

/// Internal integration state with the quaternion scalar part carried along.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BodyState {
    pub h: Vec3,
    pub quat: UnitQuat,
    pub l: Vec3,
    pub r: Vec3,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BodyRate {
    pub h: Vec3,
    pub q0: f64,
    pub q: Vec3,
    pub l: Vec3,
    pub r: Vec3,
}

impl BodyState {
    pub fn from_rigid(s: &RigidState) -> Self {
        BodyState {
            h: s.h,
            quat: UnitQuat::from_chart(&s.q),
            l: s.l,
            r: s.r,
        }
    }

    pub fn to_rigid(self) -> Result<RigidState> {
        if self.quat.q0 < 0.0 {
            return Err(Error::ChartExit {
                norm: self.quat.q.norm(),
            });
        }
        Ok(RigidState {
            h: self.h,
            q: QuatVec::new(self.quat.q)?,
            l: self.l,
            r: self.r,
        })
    }

    pub fn advance(&self, k: &BodyRate, s: f64) -> Self {
        BodyState {
            h: self.h + k.h * s,
            quat: UnitQuat {
                q0: self.quat.q0 + k.q0 * s,
                q: self.quat.q + k.q * s,
            },
            l: self.l + k.l * s,
            r: self.r + k.r * s,
        }
    }

    /// Rates of `(h, q0, q)` for the current velocities; `l`, `r` rates zero.
    pub fn kinematic_rate(&self) -> BodyRate {
        let (h, q) = kinematics_rates(self.quat.q0, &self.quat.q, &self.l, &self.r);
        BodyRate {
            h,
            q0: -0.5 * self.quat.q.dot(&self.r),
            q,
            l: Vec3::zeros(),
            r: Vec3::zeros(),
        }
    }
}

/// Classical RK4 combination `(k1 + 2 k2 + 2 k3 + k4) / 6`.
pub(crate) fn rk4_combine(k: [&BodyRate; 4]) -> BodyRate {
    let c =
        |f: &dyn Fn(&BodyRate) -> Vec3| (f(k[0]) + 2.0 * f(k[1]) + 2.0 * f(k[2]) + f(k[3])) / 6.0;
    BodyRate {
        h: c(&|x| x.h),
        q0: (k[0].q0 + 2.0 * k[1].q0 + 2.0 * k[2].q0 + k[3].q0) / 6.0,
        q: c(&|x| x.q),
        l: c(&|x| x.l),
        r: c(&|x| x.r),
    }
}

/// Fixed-step RK4 on the 12-dimensional potential model with the
/// quaternion projected back to the unit sphere after every step.
pub fn integrate_potential(
    state0: &RigidState,
    control: &ControlSignal,
    horizon: f64,
    dt: f64,
    mats: &AddedMassSet,
) -> Result<PotentialTrajectory> {
    if control.channels() != mats.controls() {
        return Err(Error::InvalidInput(format!(
            "control has {} channels but the body has {}",
            control.channels(),
            mats.controls()
        )));
    }
    let steps = control_steps(horizon, dt, control)?;
    let dt = horizon / steps as f64;
    let m = control.channels();
    let mut w = vec![0.0; m];
    let mut dw = vec![0.0; m];
    let mut rate = |t: f64, s: &BodyState| -> BodyRate {
        control.eval_into(t, &mut w, &mut dw);
        let (l, r) = potential_rhs(&s.l, &s.r, &w, &dw, mats);
        BodyRate {
            l,
            r,
            ..s.kinematic_rate()
        }
    };

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut controls = Vec::with_capacity(steps + 1);
    let mut y = BodyState::from_rigid(state0);
    let mut max_drift = 0.0_f64;
    times.push(0.0);
    states.push(*state0);
    controls.push(control.eval(0.0).0);
    for n in 0..steps {
        let t = n as f64 * dt;
        let k1 = rate(t, &y);
        let k2 = rate(t + 0.5 * dt, &y.advance(&k1, 0.5 * dt));
        let k3 = rate(t + 0.5 * dt, &y.advance(&k2, 0.5 * dt));
        let k4 = rate(t + dt, &y.advance(&k3, dt));
        y = y.advance(&rk4_combine([&k1, &k2, &k3, &k4]), dt);
        let drift = y.quat.renormalize()?;
        max_drift = max_drift.max(drift);
        let s = y.to_rigid()?;
        if !s.to_array().iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "trajectory blew up at t = {}",
                t + dt
            )));
        }
        let tn = (n + 1) as f64 * dt;
        times.push(tn);
        states.push(s);
        controls.push(control.eval(tn).0);
    }
    Ok(PotentialTrajectory {
        times,
        states,
        controls,
        dt,
        order: 4,
        max_renorm_drift: max_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{Mat3, Vec3};
    use proptest::prelude::*;

    fn sphere_set() -> AddedMassSet {
        let mass = 4.0 * std::f64::consts::PI / 3.0;
        AddedMassSet::from_blocks(
            mass,
            Mat3::from_diagonal(&Vec3::new(0.4, 0.5, 0.7)) * mass,
            Mat3::identity() * (mass / 2.0),
            Mat3::zeros(),
            Mat3::zeros(),
        )
        .unwrap()
    }

    fn coupled_set() -> AddedMassSet {
        let n = Mat3::new(0.05, 0.02, 0.0, -0.01, 0.03, 0.04, 0.0, 0.01, -0.02);
        AddedMassSet::from_blocks(
            3.0,
            Mat3::new(1.0, 0.1, 0.0, 0.1, 1.5, 0.2, 0.0, 0.2, 2.0),
            Mat3::new(1.2, 0.1, 0.05, 0.1, 0.9, 0.0, 0.05, 0.0, 1.4),
            Mat3::new(0.3, 0.0, 0.02, 0.0, 0.2, 0.01, 0.02, 0.01, 0.25),
            n,
        )
        .unwrap()
    }

    #[test]
    fn rest_is_equilibrium() {
        let mats = sphere_set();
        let (a, b) = potential_rhs(&Vec3::zeros(), &Vec3::zeros(), &[], &[], &mats);
        assert_eq!(a, Vec3::zeros());
        assert_eq!(b, Vec3::zeros());
    }

    #[test]
    fn sphere_reduces_to_rigid_body_equations() {
        let mats = sphere_set();
        let l = Vec3::new(0.3, -0.2, 0.5);
        let r = Vec3::new(0.1, 0.4, -0.3);
        let (ld, rd) = potential_rhs(&l, &r, &[], &[], &mats);
        assert!((ld + r.cross(&l)).norm() < 1e-14);
        let j0 = mats.inertia;
        let expect = -j0.try_inverse().unwrap() * r.cross(&(j0 * r));
        assert!((rd - expect).norm() < 1e-14);
    }

    #[test]
    fn identity_attitude_kinematics() {
        let s = RigidState::new(
            Vec3::zeros(),
            Vec3::zeros(),
            Vec3::new(1.0, 2.0, 3.0),
            Vec3::new(0.2, 0.0, -0.4),
        )
        .unwrap();
        let (h, q) = kinematics_rhs(&s).unwrap();
        assert_eq!(h, s.l);
        assert_eq!(q, s.r / 2.0);
        let edge = RigidState::new(Vec3::zeros(), Vec3::x(), Vec3::zeros(), Vec3::zeros()).unwrap();
        assert!(kinematics_rhs(&edge).is_err());
    }

    #[test]
    fn rest_stays_at_rest() {
        let mats = sphere_set();
        let sig = ControlSignal::zero(0, 4, 1.0).unwrap();
        let traj = integrate_potential(&RigidState::rest(), &sig, 1.0, 0.01, &mats).unwrap();
        assert!(traj.states.iter().all(|s| *s == RigidState::rest()));
        assert_eq!(traj.times.len(), 101);
    }

    #[test]
    fn sphere_glides_without_force() {
        let mats = sphere_set();
        let sig = ControlSignal::zero(0, 4, 2.0).unwrap();
        let s0 = RigidState::new(Vec3::zeros(), Vec3::zeros(), Vec3::x(), Vec3::zeros()).unwrap();
        let traj = integrate_potential(&s0, &sig, 2.0, 0.01, &mats).unwrap();
        for s in &traj.states {
            assert!((s.l - Vec3::x()).norm() < 1e-14);
        }
        assert!((traj.final_state().h - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn kinetic_form_is_conserved() {
        let mats = coupled_set();
        let sig = ControlSignal::zero(0, 4, 10.0).unwrap();
        let s0 = RigidState::new(
            Vec3::zeros(),
            Vec3::new(0.1, 0.0, 0.05),
            Vec3::new(0.4, -0.3, 0.2),
            Vec3::new(0.08, 0.12, -0.05),
        )
        .unwrap();
        let traj = integrate_potential(&s0, &sig, 10.0, 1e-3, &mats).unwrap();
        let e0 = kinetic_form(&mats, &s0.l, &s0.r);
        let worst = traj
            .states
            .iter()
            .map(|s| (kinetic_form(&mats, &s.l, &s.r) - e0).abs() / e0)
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
        assert!(traj.max_renorm_drift < RENORM_TOL);
        assert!(traj.states.iter().all(|s| s.q.vector().norm() <= 1.0));
    }

    #[test]
    fn fourth_order_convergence() {
        let mats = coupled_set();
        let sig = ControlSignal::zero(0, 4, 2.0).unwrap();
        let s0 = RigidState::new(
            Vec3::zeros(),
            Vec3::zeros(),
            Vec3::new(0.5, 0.2, 0.0),
            Vec3::new(0.8, -0.6, 1.0),
        )
        .unwrap();
        let end = |dt: f64| {
            *integrate_potential(&s0, &sig, 2.0, dt, &mats)
                .unwrap()
                .final_state()
        };
        let reference = end(0.1 / 8.0);
        let e1 = crate::math::state_distance(&end(0.1), &reference);
        let e2 = crate::math::state_distance(&end(0.05), &reference);
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "{ratio}");
    }

    #[test]
    fn reversed_velocities_retrace_the_path() {
        let mats = coupled_set();
        let sig = ControlSignal::zero(0, 4, 1.0).unwrap();
        let s0 = RigidState::new(
            Vec3::zeros(),
            Vec3::zeros(),
            Vec3::new(0.5, 0.2, 0.0),
            Vec3::new(0.8, -0.6, 1.0),
        )
        .unwrap();
        let fwd = *integrate_potential(&s0, &sig, 1.0, 1e-3, &mats)
            .unwrap()
            .final_state();
        let back_start = RigidState {
            l: -fwd.l,
            r: -fwd.r,
            ..fwd
        };
        let back = *integrate_potential(&back_start, &sig, 1.0, 1e-3, &mats)
            .unwrap()
            .final_state();
        assert!((back.l + s0.l).norm() < 1e-10);
        assert!((back.r + s0.r).norm() < 1e-10);
        assert!((back.h - s0.h).norm() < 1e-10);
        assert!((back.q.vector() - s0.q.vector()).norm() < 1e-10);
    }

    #[test]
    fn csv_has_expected_columns() {
        let mats = sphere_set();
        let sig = ControlSignal::zero(0, 2, 0.1).unwrap();
        let traj = integrate_potential(&RigidState::rest(), &sig, 0.1, 0.05, &mats).unwrap();
        let csv = traj.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 13);
    }

    fn vec3(bound: f64) -> impl Strategy<Value = Vec3> {
        (-bound..bound, -bound..bound, -bound..bound).prop_map(|(a, b, c)| Vec3::new(a, b, c))
    }

    proptest! {
        #[test]
        fn energy_rate_vanishes(l in vec3(1.0), r in vec3(1.0)) {
            let mats = coupled_set();
            let (ld, rd) = potential_rhs(&l, &r, &[], &[], &mats);
            let rate = stack(&ld, &rd).dot(&(mats.jcal * stack(&l, &r)));
            prop_assert!(rate.abs() < 1e-12);
        }

        #[test]
        fn velocity_reversal_is_equivariant(l in vec3(1.0), r in vec3(1.0)) {
            let mats = coupled_set();
            let (a, b) = potential_rhs(&l, &r, &[], &[], &mats);
            let (c, d) = potential_rhs(&-l, &-r, &[], &[], &mats);
            // the force is quadratic, so the rate is even in (l, r)
            prop_assert!((a - c).norm() < 1e-14 && (b - d).norm() < 1e-14);
        }
    }
}

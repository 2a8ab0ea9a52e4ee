mod common;

use common::*;
use hydrosteer::control::*;
use hydrosteer::coupled::timestep_solve;
use hydrosteer::error::Error;
use hydrosteer::math::{RigidState, Vec3};
use hydrosteer::rigid::integrate_potential;
use hydrosteer::vorticity::{norm_diagnostics, seed_markers, MarkerSet, NormParams};

fn at(h: Vec3, l: Vec3) -> RigidState {
    RigidState::new(h, Vec3::zeros(), l, Vec3::zeros()).unwrap()
}

fn tight() -> SteeringOptions {
    SteeringOptions {
        tol: 1e-8,
        ..Default::default()
    }
}

#[test]
fn rest_to_rest_needs_no_control() {
    let body = sphere(1);
    let p = SteeringProblem::new(RigidState::rest(), RigidState::rest(), 1.0, 4).unwrap();
    let r = potential_steering(&p, &body.mats, &tight()).unwrap();
    assert_eq!(r.iterations, 0);
    assert!(r.success);
    assert!(r.control.coefficients().iter().all(|c| c.abs() < 1e-10));
}

#[test]
fn axis_targets_are_reached_and_the_control_starts_at_zero() {
    let body = sphere(2);
    let p = SteeringProblem::new(
        RigidState::rest(),
        at(Vec3::new(0.05, 0.0, 0.0), Vec3::zeros()),
        1.0,
        4,
    )
    .unwrap();
    let r = potential_steering(&p, &body.mats, &tight()).unwrap();
    assert!(r.success && r.residual < 1e-8, "{}", r.residual);
    assert!(r.control.eval(0.0).0.iter().all(|w| *w == 0.0));
    let traj = integrate_potential(&p.initial, &r.control, 1.0, 1e-3, &body.mats).unwrap();
    assert_eq!(*traj.final_state(), r.endpoint);

    let back = potential_steering(&p.reversed(), &body.mats, &tight()).unwrap();
    assert!(back.residual < 1e-8);
    assert!(back.residual < 100.0 * r.residual && r.residual < 100.0 * back.residual);

    let moving = SteeringProblem::new(
        RigidState::rest(),
        at(Vec3::new(0.05, 0.0, 0.0), Vec3::new(0.02, 0.0, 0.0)),
        1.0,
        4,
    )
    .unwrap();
    assert!(
        potential_steering(&moving, &body.mats, &tight())
            .unwrap()
            .residual
            < 1e-8
    );
}

#[test]
fn sphere_attitude_is_not_controllable() {
    let body = sphere(1);
    let turned = RigidState::new(
        Vec3::zeros(),
        Vec3::new(0.05, 0.0, 0.0),
        Vec3::zeros(),
        Vec3::zeros(),
    )
    .unwrap();
    let p = SteeringProblem::new(RigidState::rest(), turned, 1.0, 4).unwrap();
    let opts = SteeringOptions {
        dt: 1e-2,
        max_iter: 5,
        ..tight()
    };
    match potential_steering(&p, &body.mats, &opts) {
        Err(Error::ControllabilityDeficiency { rank, residual }) => {
            assert!(rank < 12);
            assert!(residual > 0.04);
        }
        other => panic!("{other:?}"),
    }
    let best = best_steering(&p, &body.mats, &opts).unwrap();
    assert!(!best.success);
}

#[test]
fn invalid_problems_are_rejected() {
    assert!(SteeringProblem::new(RigidState::rest(), RigidState::rest(), 0.0, 4).is_err());
    assert!(SteeringProblem::new(RigidState::rest(), RigidState::rest(), 1.0, 0).is_err());
}

#[test]
fn potential_flow_is_invariant_under_time_scaling() {
    let body = sphere(1);
    let c = control(0.5);
    let s0 = RigidState::new(
        Vec3::new(0.1, 0.0, 0.0),
        Vec3::new(0.0, 0.1, 0.0),
        Vec3::new(0.5, 0.0, 0.25),
        Vec3::new(0.0, 0.3, 0.1),
    )
    .unwrap();
    let direct = integrate_potential(&s0, &c, 0.5, 1e-3, &body.mats).unwrap();
    let data = time_scale(&s0, &MarkerSet::empty(0.1), &c, 0.25).unwrap();
    let scaled = integrate_potential(&data.state0, &data.control, 2.0, 4e-3, &body.mats).unwrap();
    let back = data.scaling.unscale_trajectory(&scaled);
    assert_eq!(back.times.len(), direct.times.len());
    for (a, b) in direct.states.iter().zip(&back.states) {
        assert!((a.l - b.l).norm() < 1e-9 && (a.r - b.r).norm() < 1e-9);
        assert!((a.h - b.h).norm() < 1e-9);
    }
}

#[test]
fn scaling_the_seed_scales_its_norms() {
    let body = sphere(1);
    let seed = blob_markers(&body, 1.0);
    let data = time_scale(&RigidState::rest(), &seed, &control(0.5), 0.5).unwrap();
    let p = NormParams::default();
    let a = norm_diagnostics(&seed, &Vec3::zeros(), &Vec3::zeros(), &p).unwrap();
    let b = norm_diagnostics(&data.seed, &Vec3::zeros(), &Vec3::zeros(), &p).unwrap();
    assert!((b.triple - 0.5 * a.triple).abs() < 1e-12 * a.triple);
    assert!((b.m1 - 0.5 * a.m1).abs() < 1e-12 * a.m1);
}

#[test]
fn scaled_coupled_run_unscales_to_the_direct_run() {
    let body = sphere(1);
    let seed = seed_markers(&blob(0.5), 0.25, &body.mesh, 0.1).unwrap();
    let c = control(0.25);
    let direct = timestep_solve(&body, &moving(), &seed, &c, 0.25, 1.0 / 64.0).unwrap();
    let data = time_scale(&moving(), &seed, &c, 0.5).unwrap();
    let scaled = timestep_solve(
        &body,
        &data.state0,
        &data.seed,
        &data.control,
        0.5,
        1.0 / 32.0,
    )
    .unwrap();
    let back = data.scaling.unscale_solution(&scaled);
    assert!(back.max_velocity_difference(&direct) < 1e-12);
    let (a, b) = (direct.final_state(), back.final_state());
    assert!((a.h - b.h).norm() < 1e-12);
    assert!((a.markers.total_vorticity() - b.markers.total_vorticity()).norm() < 1e-12);
}

#[test]
fn retargeting_without_vorticity_is_plain_steering() {
    let body = sphere(2);
    let p = SteeringProblem::new(
        RigidState::rest(),
        at(Vec3::new(0.05, 0.0, 0.0), Vec3::zeros()),
        1.0,
        4,
    )
    .unwrap();
    let opts = RetargetOptions::default();
    let report = retarget_with_vorticity(&p, &body, &MarkerSet::empty(0.25), &opts).unwrap();
    assert_eq!(report.errors.len(), 1);
    assert!(report.epsilon < 1e-8, "{}", report.epsilon);
    assert!(report.result.residual < opts.tol);

    let far = p.with_target(at(Vec3::new(0.5, 0.0, 0.0), Vec3::zeros()));
    assert!(matches!(
        retarget_with_vorticity(&far, &body, &MarkerSet::empty(0.25), &opts),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn retargeting_refuses_large_perturbations() {
    let body = sphere(1);
    let p = SteeringProblem::new(
        RigidState::rest(),
        at(Vec3::new(0.05, 0.0, 0.0), Vec3::zeros()),
        1.0,
        4,
    )
    .unwrap();
    let seed = seed_markers(&blob(0.5), 0.25, &body.mesh, 0.1).unwrap();
    let opts = RetargetOptions {
        eps_max: 1e-9,
        ..Default::default()
    };
    assert!(matches!(
        retarget_with_vorticity(&p, &body, &seed, &opts),
        Err(Error::PerturbationTooLarge { .. })
    ));
}

#[test]
fn full_steering_without_vorticity_matches_potential_steering() {
    let body = sphere(2);
    let p = SteeringProblem::new(
        RigidState::rest(),
        at(Vec3::new(0.05, 0.0, 0.0), Vec3::zeros()),
        1.0,
        4,
    )
    .unwrap();
    let full = steer_full(
        &p,
        &body,
        &MarkerSet::empty(0.25),
        1.0,
        &FullOptions::default(),
    )
    .unwrap();
    assert_eq!(full.lambda, 1.0);
    let opts = SteeringOptions {
        dt: FullOptions::default().retarget.dt,
        tol: 1e-2 * FullOptions::default().retarget.tol,
        ..Default::default()
    };
    let direct = potential_steering(&p, &body.mats, &opts).unwrap();
    assert_eq!(full.result.control, direct.control);
}

#[test]
fn full_steering_shrinks_time_for_fast_data() {
    let body = sphere(2);
    let seed = seed_markers(&blob(0.5), 0.25, &body.mesh, 0.1).unwrap();
    let p = SteeringProblem::new(
        at(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)),
        at(Vec3::new(0.05, 0.0, 0.0), Vec3::new(0.5, 0.0, 0.0)),
        1.0,
        4,
    )
    .unwrap();
    let full = steer_full(&p, &body, &seed, 1.0, &FullOptions::default()).unwrap();
    assert!(full.lambda < 1.0);
    assert!(full.result.residual < 1e-3, "{}", full.result.residual);
    let q = full.result.endpoint.q.0 - p.target.q.0;
    assert!(q.norm() < 1e-3);
    assert!((full.solution.times.last().unwrap() - full.lambda * p.horizon).abs() < 1e-12);
}

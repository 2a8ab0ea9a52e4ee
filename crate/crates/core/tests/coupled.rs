mod common;

use common::*;
use hydrosteer::coupled::*;
use hydrosteer::error::Error;
use hydrosteer::math::{RigidState, Vec3};
use hydrosteer::rigid::{integrate_potential, ControlSignal};
use hydrosteer::vorticity::{seed_markers, FlowField, MarkerSet, NormParams, SeedSpec};

fn potential_path(
    body: &hydrosteer::body::Body,
    s0: &RigidState,
    control: &ControlSignal,
    horizon: f64,
    dt: f64,
    seed: &MarkerSet,
) -> CoupledPath {
    let traj = integrate_potential(s0, control, horizon, dt, &body.mats).unwrap();
    CoupledPath {
        times: traj.times.clone(),
        l: traj.states.iter().map(|s| s.l).collect(),
        r: traj.states.iter().map(|s| s.r).collect(),
        markers: vec![seed.clone(); traj.times.len()],
    }
}

fn endpoint(sol: &CoupledSolution) -> (Vec3, Vec3) {
    let s = sol.final_state();
    (s.l, s.r)
}

#[test]
fn tau_fixes_the_potential_trajectory_without_vorticity() {
    let body = sphere(2);
    let control = control(0.5);
    let path = potential_path(
        &body,
        &moving(),
        &control,
        0.5,
        1.0 / 64.0,
        &MarkerSet::empty(0.1),
    );
    let out = tau_apply(&body, &path, &control).unwrap();
    for n in 0..path.times.len() {
        assert!((out.path.l[n] - path.l[n]).norm() < 1e-6, "l at step {n}");
        assert!((out.path.r[n] - path.r[n]).norm() < 1e-6, "r at step {n}");
    }

    let zero = ControlSignal::zero(6, 4, 0.5).unwrap();
    let rest = potential_path(
        &body,
        &RigidState::rest(),
        &zero,
        0.5,
        1.0 / 16.0,
        &MarkerSet::empty(0.1),
    );
    let out = tau_apply(&body, &rest, &zero).unwrap();
    assert!(out
        .path
        .l
        .iter()
        .chain(&out.path.r)
        .all(|v| *v == Vec3::zeros()));
    assert!(out.loads.iter().all(|f| f.norm() == 0.0));
}

#[test]
fn tau_contracts_two_nearby_paths() {
    let body = sphere(2);
    let control = control(0.25);
    let seed = blob_markers(&body, 0.05);
    let p1 = potential_path(&body, &moving(), &control, 0.25, 1.0 / 32.0, &seed);
    let mut p2 = p1.clone();
    for (n, t) in p1.times.iter().enumerate() {
        p2.l[n] += Vec3::new(0.01 * (4.0 * t).sin(), 0.0, 0.01 * t);
        p2.r[n] += Vec3::new(0.0, 0.005 * t, 0.0);
    }
    let params = NormParams::default();
    let before = path_difference(&p1, &p2, &params);
    let a = tau_apply(&body, &p1, &control).unwrap();
    let b = tau_apply(&body, &p2, &control).unwrap();
    let after = path_difference(&a.path, &b.path, &params);
    eprintln!("tau contraction {before:e} -> {after:e}");
    assert!(after < before, "{after} >= {before}");
}

#[test]
fn small_blob_picard_is_a_consistent_fixed_point() {
    let body = sphere(2);
    let control = control(0.5);
    let seed = blob_markers(&body, 1.0);
    let opts = PicardOptions {
        dt: 1.0 / 64.0,
        tol: 1e-8,
        ..Default::default()
    };
    let sol = picard_solve(&body, &moving(), &seed, &control, 0.5, &opts).unwrap();
    let diag = sol.picard.clone().unwrap();
    assert!(*diag.differences.last().unwrap() < opts.tol);
    assert!(diag.ratios.iter().all(|r| *r < 1.0), "{:?}", diag.ratios);

    let path = sol.path();
    let again = tau_apply(&body, &path, &control).unwrap();
    let change = path_difference(&again.path, &path, &opts.norm);
    assert!(change < 2.0 * opts.tol, "{change}");

    let marched = timestep_solve(&body, &moving(), &seed, &control, 0.5, opts.dt).unwrap();
    let gap = sol.max_velocity_difference(&marched);
    assert!(gap < 1e-4, "{gap}");
    assert!(sol.max_det_error < 1e-6);
}

#[test]
fn timestep_endpoint_error_drops_eightfold_per_halving() {
    let body = sphere(2);
    let control = control(0.25);
    let seed = blob_markers(&body, 1.0);
    let run =
        |dt: f64| endpoint(&timestep_solve(&body, &moving(), &seed, &control, 0.25, dt).unwrap());
    let reference = run(1.0 / 256.0);
    let err = |e: (Vec3, Vec3)| (e.0 - reference.0).norm() + (e.1 - reference.1).norm();
    let coarse = err(run(1.0 / 32.0));
    let fine = err(run(1.0 / 64.0));
    eprintln!(
        "timestep errors {coarse:e} {fine:e} ratio {}",
        coarse / fine
    );
    assert!(coarse / fine >= 8.0, "{coarse} -> {fine}");
}

#[test]
fn control_perturbations_move_the_trajectory_linearly() {
    let body = sphere(2);
    let base = control(0.25);
    let seed = blob_markers(&body, 1.0);
    let solve =
        |c: &ControlSignal| timestep_solve(&body, &moving(), &seed, c, 0.25, 1.0 / 32.0).unwrap();
    let reference = solve(&base);
    let shift: Vec<f64> = (0..base.coefficients().len())
        .map(|k| (0.7 * k as f64).cos())
        .collect();
    let deviation = |delta: f64| {
        let coefs = base
            .coefficients()
            .iter()
            .zip(&shift)
            .map(|(c, s)| c + delta * s)
            .collect();
        solve(&base.with_coefficients(coefs).unwrap()).max_velocity_difference(&reference)
    };
    let d: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&x| deviation(x)).collect();
    eprintln!("control deviations {d:?}");
    for pair in d.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!((8.0..=12.0).contains(&ratio), "{d:?}");
    }
}

#[test]
fn far_blob_loads_decay_with_distance() {
    let body = sphere(2);
    let loads = |d: f64| {
        let spec = SeedSpec::Blob {
            center: [0.0, 0.0, d],
            radius: 0.5,
            axis: [0.0, 1.0, 0.0],
            amplitude: 1.0,
        };
        let seed = seed_markers(&spec, 0.125, &body.mesh, 0.1).unwrap();
        let field =
            FlowField::new(&body.tables, Vec3::zeros(), Vec3::zeros(), &[0.0; 6], &seed).unwrap();
        coupled_loads(&body, &field, &seed, &[0.0; 6]).norm()
    };
    let f: Vec<f64> = [2.0, 4.0, 8.0].iter().map(|&d| loads(d)).collect();
    eprintln!("far blob loads {f:?}");
    assert!(f[0] > 0.0);
    for pair in f.windows(2) {
        assert!(pair[1] < 0.25 * pair[0], "{f:?}");
    }
}

#[test]
fn pressure_of_a_translating_sphere_follows_the_dipole() {
    let body = sphere(3);
    let s0 = RigidState::new(Vec3::zeros(), Vec3::zeros(), Vec3::x(), Vec3::zeros()).unwrap();
    let zero = ControlSignal::zero(6, 4, 0.1).unwrap();
    let sol = timestep_solve(&body, &s0, &MarkerSet::empty(0.1), &zero, 0.1, 0.05).unwrap();
    let q = |y: Vec3| pressure_eval(&body, &sol, 0.05, &y).unwrap();
    // steady body-frame Bernoulli: q = U . v - |v|^2 / 2 with the dipole v
    for s in [1.2_f64, 1.5, 2.0, 3.0, 5.0] {
        let axis = 1.0 / s.powi(3) - 0.5 / s.powi(6);
        assert!(
            (q(Vec3::new(s, 0.0, 0.0)) - axis).abs() < 0.05 * axis,
            "axis {s}"
        );
        let side = -0.5 / s.powi(3) - 0.125 / s.powi(6);
        assert!(
            (q(Vec3::new(0.0, s, 0.0)) - side).abs() < 0.05 * side.abs(),
            "side {s}"
        );
    }
    let ratio = q(Vec3::new(8.0, 0.0, 0.0)) / q(Vec3::new(4.0, 0.0, 0.0));
    assert!((ratio - 0.125).abs() < 0.02, "{ratio}");
    assert!(matches!(
        pressure_eval(&body, &sol, 0.05, &Vec3::new(0.5, 0.0, 0.0)),
        Err(Error::NotExterior { .. })
    ));
    assert!(pressure_eval(&body, &sol, 0.0123, &Vec3::new(2.0, 0.0, 0.0)).is_err());
}

#[test]
fn rest_state_has_no_pressure_and_no_residuals() {
    let body = sphere(2);
    let zero = ControlSignal::zero(6, 4, 0.2).unwrap();
    let sol = timestep_solve(
        &body,
        &RigidState::rest(),
        &MarkerSet::empty(0.1),
        &zero,
        0.2,
        0.05,
    )
    .unwrap();
    for y in sample_points() {
        assert_eq!(pressure_eval(&body, &sol, 0.1, &y).unwrap(), 0.0);
    }
    let report = residual_check(&body, &sol, &sample_points(), &[0.05, 0.1, 0.15]).unwrap();
    assert_eq!(report.times.len(), 3);
    for stat in [
        report.momentum,
        report.divergence,
        report.slip,
        report.transport,
    ] {
        assert_eq!(stat.rms, 0.0);
        assert_eq!(stat.relative(), 0.0);
    }
    assert!(report.failures(&ResidualThresholds::default()).is_empty());
}

#[test]
fn residual_check_skips_boundary_and_off_grid_times() {
    let body = sphere(1);
    let zero = ControlSignal::zero(6, 4, 0.2).unwrap();
    let sol = timestep_solve(&body, &moving(), &MarkerSet::empty(0.1), &zero, 0.2, 0.05).unwrap();
    let report = residual_check(&body, &sol, &sample_points(), &[0.0, 0.2, 0.07, 0.1]).unwrap();
    assert_eq!(report.times, vec![0.1]);
}

#[test]
fn heuristic_horizon_scales_inversely_with_the_data() {
    let body = sphere(1);
    let seed = seed_markers(&blob(1.0), 0.125, &body.mesh, 0.1).unwrap();
    let params = NormParams::default();
    let l = Vec3::new(0.5, 0.0, 0.0);
    let h1 = heuristic_horizon(&seed, &l, &Vec3::zeros(), &params, 1.0).unwrap();
    let h2 = heuristic_horizon(&seed, &l, &Vec3::zeros(), &params, 2.0).unwrap();
    assert!(h1 > 0.0 && (h1 / h2 - 2.0).abs() < 1e-12);
    let weak = heuristic_horizon(&seed.scaled(0.5), &l, &Vec3::zeros(), &params, 1.0).unwrap();
    assert!(weak > h1);
    assert!(heuristic_horizon(
        &MarkerSet::empty(0.1),
        &Vec3::zeros(),
        &Vec3::zeros(),
        &params,
        1.0
    )
    .is_err());
}

#[test]
fn solution_exports_header_and_csv() {
    let body = sphere(1);
    let seed = seed_markers(&blob(0.5), 0.25, &body.mesh, 0.1).unwrap();
    let sol = timestep_solve(&body, &moving(), &seed, &control(0.1), 0.1, 0.025).unwrap();
    let csv = sol.to_csv(&NormParams::default()).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), sol.times.len() + 1);
    assert!(lines[0].starts_with("t,"));
    let header = sol.header("abc");
    assert_eq!(header.samples, sol.times.len());
    assert_eq!(header.method, SolveMethod::Timestep);
    let json = serde_json::to_string(&header).unwrap();
    assert!(json.contains("\"timestep\""));
}

#[test]
fn controlled_potential_flow_has_small_momentum_residual() {
    let body = sphere(3);
    let horizon = 0.4;
    let sol = timestep_solve(
        &body,
        &moving(),
        &MarkerSet::empty(0.1),
        &control(horizon),
        horizon,
        1e-3,
    )
    .unwrap();
    let times = [0.05, 0.15, 0.25, 0.35];
    let report = residual_check(&body, &sol, &sample_points(), &times).unwrap();
    assert_eq!(report.times.len(), 4);
    eprintln!("momentum {:e}", report.momentum.relative());
    assert!(report.momentum.relative() < 1e-2);
}

//! Execution of one configured experiment and the files it writes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::body::Body;
use crate::config::{ExperimentConfig, ExperimentKind, Method};
use crate::control::steer_full;
use crate::coupled::{
    picard_solve, residual_check, timestep_solve, CoupledSolution, ResidualReport,
};
use crate::error::{Error, Result};
use crate::io::fmt;
use crate::rigid::{integrate_potential, ControlSignal, PotentialTrajectory};
use crate::vorticity::{norm_diagnostics, MarkerSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Samples per control interval in `control.csv`.
const CONTROL_SAMPLES: usize = 16;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Success,
    /// Residuals above their thresholds, by name.
    VerificationFailed(Vec<&'static str>),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Success => EXIT_OK,
            Outcome::VerificationFailed(_) => EXIT_VERIFY,
        }
    }
}

/// Exit status of a failed run.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Config { .. }
        | Error::Json(_)
        | Error::InvalidInput(_)
        | Error::ParameterWindow(_)
        | Error::Seed(_)
        | Error::Mesh(_)
        | Error::ControlBasis(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

pub fn run(kind: ExperimentKind, config: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    fs::create_dir_all(&opts.out)?;
    log::info!(
        "running {kind:?} for `{}` into {}",
        config.name,
        opts.out.display()
    );
    let body = config.build_body(opts.cache.as_deref())?;
    match kind {
        ExperimentKind::Potentials => potentials(config, &body, &opts.out),
        ExperimentKind::Simulate => simulate(config, &body, &opts.out).map(|_| Outcome::Success),
        ExperimentKind::Verify => verify(config, &body, &opts.out),
        ExperimentKind::Steer => steer(config, &body, &opts.out),
        ExperimentKind::ScaleStudy => scale_study(config, &body, &opts.out),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    write(dir, name, &serde_json::to_string_pretty(value)?)
}

#[derive(Serialize)]
struct PotentialsSummary<'a> {
    config_hash: String,
    mesh_hash: &'a str,
    panels: usize,
    area: f64,
    volume: f64,
    controls: usize,
    min_eigenvalue: f64,
    asymmetry: f64,
}

fn potentials(config: &ExperimentConfig, body: &Body, out: &Path) -> Result<Outcome> {
    body.mesh.write_off(&out.join("mesh.off"))?;
    body.mats.save(&out.join("added_mass.json"))?;
    write_json(
        out,
        "summary.json",
        &PotentialsSummary {
            config_hash: config.hash(),
            mesh_hash: &body.mats.mesh_hash,
            panels: body.mesh.len(),
            area: body.mesh.total_area(),
            volume: body.mesh.volume(),
            controls: body.mats.controls(),
            min_eigenvalue: body.mats.min_eigenvalue(),
            asymmetry: body.mats.asymmetry,
        },
    )?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct PotentialHeader {
    config_hash: String,
    method: Method,
    dt: f64,
    samples: usize,
    max_renorm_drift: f64,
}

enum Simulation {
    Potential(PotentialTrajectory),
    Coupled(CoupledSolution),
}

fn solve(config: &ExperimentConfig, body: &Body, control: &ControlSignal) -> Result<Simulation> {
    let state0 = config.initial.to_state("initial")?;
    let s = &config.solver;
    Ok(match s.method {
        Method::Potential => Simulation::Potential(integrate_potential(
            &state0, control, s.horizon, s.dt, &body.mats,
        )?),
        Method::Timestep => Simulation::Coupled(timestep_solve(
            body,
            &state0,
            &config.seed(body)?,
            control,
            s.horizon,
            s.dt,
        )?),
        Method::Picard => Simulation::Coupled(picard_solve(
            body,
            &state0,
            &config.seed(body)?,
            control,
            s.horizon,
            &s.picard(),
        )?),
    })
}

fn simulate(config: &ExperimentConfig, body: &Body, out: &Path) -> Result<Simulation> {
    let control = config.control_signal(body.mats.controls())?;
    let sim = solve(config, body, &control)?;
    write(
        out,
        "control.csv",
        &control.to_csv(CONTROL_SAMPLES * control.intervals()),
    )?;
    match &sim {
        Simulation::Potential(traj) => {
            let header = PotentialHeader {
                config_hash: config.hash(),
                method: Method::Potential,
                dt: traj.dt,
                samples: traj.times.len(),
                max_renorm_drift: traj.max_renorm_drift,
            };
            write_json(out, "header.json", &header)?;
            write(out, "trajectory.csv", &traj.to_csv())?;
        }
        Simulation::Coupled(sol) => {
            write_json(out, "header.json", &sol.header(&config.hash()))?;
            write(out, "trajectory.csv", &sol.to_csv(&config.solver.norm)?)?;
            write(out, "markers.csv", &sol.final_state().markers.to_csv())?;
        }
    }
    Ok(sim)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    config_hash: String,
    passed: bool,
    failures: &'a [&'static str],
    thresholds: crate::coupled::ResidualThresholds,
    momentum_relative: f64,
    divergence_relative: f64,
    slip_relative: f64,
    transport_relative: f64,
    residuals: &'a ResidualReport,
}

fn verify(config: &ExperimentConfig, body: &Body, out: &Path) -> Result<Outcome> {
    let Simulation::Coupled(sol) = simulate(config, body, out)? else {
        return Err(Error::config(
            "solver.method",
            "verify needs a coupled solver (timestep or picard)",
        ));
    };
    let times = match &config.verify.times {
        Some(t) => t.clone(),
        None => default_times(&sol, config.control.intervals),
    };
    let points = config.sample_points(&body.mesh);
    let report = residual_check(body, &sol, &points, &times)?;
    if report.times.is_empty() {
        return Err(Error::config(
            "verify.times",
            "no interior grid time to evaluate",
        ));
    }
    let th = config.verify.thresholds;
    let failures = report.failures(&th);
    write_json(
        out,
        "residuals.json",
        &VerifyReport {
            config_hash: config.hash(),
            passed: failures.is_empty(),
            failures: &failures,
            thresholds: th,
            momentum_relative: report.momentum.relative(),
            divergence_relative: report.divergence.relative(),
            slip_relative: report.slip.relative(),
            transport_relative: report.transport.relative(),
            residuals: &report,
        },
    )?;
    if failures.is_empty() {
        Ok(Outcome::Success)
    } else {
        log::warn!("residuals above threshold: {}", failures.join(", "));
        Ok(Outcome::VerificationFailed(failures))
    }
}

/// Midpoints of the control knot intervals that fall on the time grid, or
/// the quarter points of the grid when none does. Knots are avoided since
/// the control is only C1 there.
fn default_times(sol: &CoupledSolution, intervals: usize) -> Vec<f64> {
    let horizon = *sol.times.last().expect("solution has samples");
    let h = horizon / intervals as f64;
    let mids: Vec<f64> = (0..intervals)
        .map(|i| (i as f64 + 0.5) * h)
        .filter_map(|t| sol.index_of(t).map(|k| sol.times[k]))
        .collect();
    if !mids.is_empty() {
        return mids;
    }
    let n = sol.times.len() - 1;
    [n / 4, n / 2, 3 * n / 4]
        .iter()
        .map(|k| sol.times[*k])
        .collect()
}

#[derive(Serialize)]
struct SteerSummary<'a> {
    config_hash: String,
    lambda: f64,
    physical_horizon: f64,
    epsilon: f64,
    outer_errors: &'a [f64],
    result: &'a crate::control::SteeringResult,
}

fn steer(config: &ExperimentConfig, body: &Body, out: &Path) -> Result<Outcome> {
    let problem = config.steering_problem()?;
    let seed = config.seed(body)?;
    let t0 = config.steer.t0.unwrap_or(problem.horizon);
    let report = steer_full(&problem, body, &seed, t0, &config.steer.options)?;
    let control = &report.result.control;
    write_json(
        out,
        "steering.json",
        &SteerSummary {
            config_hash: config.hash(),
            lambda: report.lambda,
            physical_horizon: control.horizon(),
            epsilon: report.retarget.epsilon,
            outer_errors: &report.retarget.errors,
            result: &report.result,
        },
    )?;
    write(
        out,
        "control.csv",
        &control.to_csv(CONTROL_SAMPLES * control.intervals()),
    )?;
    write(
        out,
        "trajectory.csv",
        &report.solution.to_csv(&config.solver.norm)?,
    )?;
    Ok(Outcome::Success)
}

/// Coupled runs with the seed vorticity multiplied by each factor, compared
/// with the vorticity-free run of the same solver and control.
fn scale_study(config: &ExperimentConfig, body: &Body, out: &Path) -> Result<Outcome> {
    let control = config.control_signal(body.mats.controls())?;
    let state0 = config.initial.to_state("initial")?;
    let s = &config.solver;
    let coupled = |seed: &MarkerSet| match s.method {
        Method::Picard => picard_solve(body, &state0, seed, &control, s.horizon, &s.picard()),
        _ => timestep_solve(body, &state0, seed, &control, s.horizon, s.dt),
    };
    let reference = coupled(&MarkerSet::empty(config.vorticity.spacing))?;
    let mut csv = String::from("factor,markers,triple,m1,deviation,ratio\n");
    let mut previous: Option<f64> = None;
    for &factor in &config.scale_study.factors {
        let mut scaled = config.clone();
        scaled.vorticity.seed = config.vorticity.seed.scaled(factor);
        let seed = scaled.seed(body)?;
        let sol = coupled(&seed)?;
        let norms = norm_diagnostics(&seed, &state0.l, &state0.r, &s.norm)?;
        let deviation = sol.max_velocity_difference(&reference);
        let ratio = previous.map_or(f64::NAN, |p| p / deviation);
        previous = Some(deviation);
        log::info!("factor {factor}: deviation {deviation:e}");
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt(factor),
            seed.len(),
            fmt(norms.triple),
            fmt(norms.m1),
            fmt(deviation),
            fmt(ratio)
        ));
    }
    write(out, "scale_study.csv", &csv)?;
    Ok(Outcome::Success)
}

/// Output directory: the explicit one, then the config's own, then
/// `out/<name>`.
pub fn resolve_output(config: &ExperimentConfig, explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| config.output.as_ref().map(|p| config.base_dir.join(p)))
        .unwrap_or_else(|| {
            let name = if config.name.is_empty() {
                "experiment"
            } else {
                &config.name
            };
            PathBuf::from("out").join(name)
        })
}

//! The coupled body-fluid problem: generalized loads, the fixed-point
//! operator and its Picard iteration, time marching, pressure recovery and
//! residual verification.

mod loads;
mod pressure;
mod residual;
mod solve;

pub use loads::{coupled_loads, gyroscopic, lamb_loads, mu_loads, rotational_loads};
pub use pressure::{pressure_eval, PressureField};
pub use residual::{residual_check, ResidualReport, ResidualStat, ResidualThresholds};
pub use solve::{
    heuristic_horizon, path_difference, picard_solve, tau_apply, timestep_solve, CoupledPath,
    CoupledSolution, CoupledState, PicardDiagnostics, PicardOptions, SolutionHeader, SolveMethod,
    TauOutput,
};

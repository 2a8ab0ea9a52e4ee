//! Control synthesis: shooting on the potential model, retargeting under
//! vorticity and time scaling.

mod retarget;
mod scaling;
mod steering;

pub use retarget::{
    retarget_with_vorticity, sample_epsilon, steer_full, FullOptions, FullReport, RetargetOptions,
    RetargetReport,
};
pub use scaling::{time_scale, ScaledData, TimeScaling};
pub use steering::{
    best_steering, endpoint_residual, potential_steering, SteeringOptions, SteeringProblem,
    SteeringResult, Vec12,
};

//! Lagrangian vorticity transport: markers, flow map and Jacobian, the
//! Cauchy formula and the blob reconstruction of the rotational velocity.

mod advect;
mod flow;
pub mod kernel;
mod markers;
mod norms;
mod seed;

pub use advect::{
    advect_markers, advect_markers_staged, cauchy_vorticity, displaced, marker_rates, rk4_update,
    Frame,
};
pub use flow::{reconstruct_eta, EtaField, FlowField, UniformFlow, VelocitySource};
pub use markers::{
    seed_markers, Marker, MarkerSet, COLLISION_FACTOR, DIVERGENCE_TOL, EPSILON_FACTOR,
};
pub use norms::{
    holder_seminorm, japanese, norm_diagnostics, weighted_lp, NormDiagnostics, NormParams,
};
pub use seed::{bump, SeedSpec};

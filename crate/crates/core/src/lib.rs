//! Rigid body steering in an unbounded ideal fluid with vorticity.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod body;
pub mod config;
pub mod control;
pub mod coupled;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod math;
pub mod potential;
pub mod rigid;
pub mod vorticity;

pub use error::{Error, Result};

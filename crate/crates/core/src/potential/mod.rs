//! Exterior Neumann solver, Kirchhoff potentials and added-mass matrices.

mod bem;
pub mod panel;
mod tables;

pub use bem::{BoundarySolver, HarmonicPotential, SOLVABILITY_TOL};
pub use tables::{
    assemble_matrices, eval_potential_velocity, kirchhoff_tables, tables_with_solver, AddedMassDoc,
    AddedMassSet, Mat6, PotentialTables, Vec6,
};

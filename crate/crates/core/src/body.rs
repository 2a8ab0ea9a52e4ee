//! A solved body: mesh, controls, mass data, Kirchhoff potentials and the
//! matrices of the potential model.

use std::sync::Arc;

use crate::error::Result;
use crate::geometry::{BodyInertia, ControlBasis, SurfaceMesh};
use crate::potential::{assemble_matrices, kirchhoff_tables, AddedMassSet, PotentialTables};

#[derive(Debug, Clone)]
pub struct Body {
    pub mesh: Arc<SurfaceMesh>,
    pub controls: ControlBasis,
    pub inertia: BodyInertia,
    pub tables: PotentialTables,
    pub mats: AddedMassSet,
}

impl Body {
    pub fn assemble(
        mesh: Arc<SurfaceMesh>,
        controls: ControlBasis,
        inertia: BodyInertia,
    ) -> Result<Self> {
        let tables = kirchhoff_tables(mesh.clone(), &controls)?;
        let mats = assemble_matrices(&tables, &controls, &inertia)?;
        Ok(Body {
            mesh,
            controls,
            inertia,
            tables,
            mats,
        })
    }

    /// Reuses previously assembled matrices for the same mesh.
    pub fn with_matrices(
        mesh: Arc<SurfaceMesh>,
        controls: ControlBasis,
        inertia: BodyInertia,
        mats: AddedMassSet,
    ) -> Result<Self> {
        let tables = kirchhoff_tables(mesh.clone(), &controls)?;
        Ok(Body {
            mesh,
            controls,
            inertia,
            tables,
            mats,
        })
    }

    pub fn m(&self) -> usize {
        self.controls.m()
    }
}

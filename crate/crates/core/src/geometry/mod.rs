//! Body surface meshes, boundary control patches and solid inertia.

mod controls;
mod inertia;
mod mesh;

pub use controls::{axis_patches, make_control_basis, BumpProfile, ControlBasis, Lobe, PatchSpec};
pub use inertia::{check_neutral_buoyancy, BodyInertia, Density};
pub use mesh::{
    build_ellipsoid_mesh, build_sphere_mesh, closest_point_on_triangle, SurfaceMesh, MAX_REFINEMENT,
};

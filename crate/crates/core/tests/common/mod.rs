#![allow(dead_code)]

use std::sync::Arc;

use hydrosteer::body::Body;
use hydrosteer::geometry::{
    axis_patches, build_sphere_mesh, make_control_basis, BodyInertia, BumpProfile, Density,
};
use hydrosteer::math::{RigidState, Vec3};
use hydrosteer::rigid::ControlSignal;
use hydrosteer::vorticity::{seed_markers, MarkerSet, SeedSpec};

/// Unit sphere, six axis patches, uniform unit density.
pub fn sphere(refinement: u32) -> Body {
    let mesh = Arc::new(build_sphere_mesh(1.0, refinement).unwrap());
    let controls =
        make_control_basis(&mesh, &axis_patches(&mesh, 0.6), BumpProfile::C2Bump).unwrap();
    let inertia = BodyInertia::from_density(&mesh, Density::Uniform(1.0)).unwrap();
    Body::assemble(mesh, controls, inertia).unwrap()
}

/// A fixed smooth control with four knot intervals.
pub fn control(horizon: f64) -> ControlSignal {
    control_scaled(horizon, 1.0)
}

pub fn control_scaled(horizon: f64, s: f64) -> ControlSignal {
    let per = ControlSignal::coefficients_per_channel(4);
    let coefs = (0..6 * per)
        .map(|k| s * 0.3 * (k as f64 * 1.7).sin())
        .collect();
    ControlSignal::new(6, 4, horizon, coefs).unwrap()
}

pub fn moving() -> RigidState {
    RigidState::new(
        Vec3::zeros(),
        Vec3::zeros(),
        Vec3::new(0.5, 0.0, 0.25),
        Vec3::new(0.0, 0.1, 0.0),
    )
    .unwrap()
}

pub fn blob(amplitude: f64) -> SeedSpec {
    SeedSpec::Blob {
        center: [0.0, 0.0, 2.0],
        radius: 0.5,
        axis: [0.0, 1.0, 0.0],
        amplitude,
    }
}

pub fn blob_markers(body: &Body, amplitude: f64) -> MarkerSet {
    seed_markers(&blob(amplitude), 0.125, &body.mesh, 0.1).unwrap()
}

/// Exterior points on a loose spiral, none inside the body or the blob.
pub fn sample_points() -> Vec<Vec3> {
    (0..12)
        .map(|k| {
            let a = k as f64 * 0.9;
            Vec3::new(a.cos(), a.sin(), (1.3 * a).cos()).normalize() * (1.3 + 0.1 * k as f64)
        })
        .filter(|p| p.z < 1.0)
        .collect()
}

pub fn max_lr_difference(a: &[(Vec3, Vec3)], b: &[(Vec3, Vec3)]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.0 - y.0).norm().max((x.1 - y.1).norm()))
        .fold(0.0, f64::max)
}

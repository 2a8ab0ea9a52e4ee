use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::SurfaceMesh;
use crate::math::{skew, Mat3, Vec3};
use crate::vorticity::flow::VelocitySource;
use crate::vorticity::markers::MarkerSet;

/// Velocity field together with the body motion it is seen from.
pub struct Frame<'a> {
    pub field: &'a dyn VelocitySource,
    pub l: Vec3,
    pub r: Vec3,
}

/// `(X', G')` per marker: `X' = v(X) - l - r x X`, `G' = (grad v(X) - S(r)) G`.
pub fn marker_rates(markers: &MarkerSet, frame: &Frame) -> Vec<(Vec3, Mat3)> {
    let sr = skew(&frame.r);
    markers
        .markers
        .par_iter()
        .map(|m| {
            let (v, grad) = frame.field.velocity_gradient(&m.x);
            (v - frame.l - frame.r.cross(&m.x), (grad - sr) * m.g)
        })
        .collect()
}

/// `markers + s * rates`.
pub fn displaced(markers: &MarkerSet, rates: &[(Vec3, Mat3)], s: f64) -> MarkerSet {
    let mut out = markers.clone();
    for (m, (dx, dg)) in out.markers.iter_mut().zip(rates) {
        m.x += dx * s;
        m.g += dg * s;
    }
    out
}

/// Weighted RK4 update from the four stage rates.
pub fn rk4_update(markers: &MarkerSet, k: [&[(Vec3, Mat3)]; 4], dt: f64) -> MarkerSet {
    let mut out = markers.clone();
    for (i, m) in out.markers.iter_mut().enumerate() {
        let dx = k[0][i].0 + (k[1][i].0 + k[2][i].0) * 2.0 + k[3][i].0;
        let dg = k[0][i].1 + (k[1][i].1 + k[2][i].1) * 2.0 + k[3][i].1;
        m.x += dx * (dt / 6.0);
        m.g += dg * (dt / 6.0);
    }
    out
}

/// One RK4 step with prescribed frames at the start, midpoint and end.
pub fn advect_markers_staged(
    markers: &MarkerSet,
    start: &Frame,
    mid: &Frame,
    end: &Frame,
    dt: f64,
) -> MarkerSet {
    if markers.is_empty() {
        return markers.clone();
    }
    let k1 = marker_rates(markers, start);
    let k2 = marker_rates(&displaced(markers, &k1, 0.5 * dt), mid);
    let k3 = marker_rates(&displaced(markers, &k2, 0.5 * dt), mid);
    let k4 = marker_rates(&displaced(markers, &k3, dt), end);
    rk4_update(markers, [&k1, &k2, &k3, &k4], dt)
}

/// One RK4 step in a frozen flow, followed by the body clearance check.
pub fn advect_markers(
    markers: &MarkerSet,
    flow: &dyn VelocitySource,
    l: Vec3,
    r: Vec3,
    dt: f64,
    mesh: Option<&SurfaceMesh>,
    time: f64,
) -> Result<MarkerSet> {
    let frame = Frame { field: flow, l, r };
    let out = advect_markers_staged(markers, &frame, &frame, &frame, dt);
    if let Some(mesh) = mesh {
        out.check_clearance(mesh, time + dt)?;
    }
    Ok(out)
}

/// Current vorticity of marker `k` by the Cauchy formula, `G omega0`.
pub fn cauchy_vorticity(markers: &MarkerSet, k: usize) -> Vec3 {
    markers.markers[k].vorticity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vorticity::flow::UniformFlow;
    use crate::vorticity::markers::Marker;

    fn cloud() -> MarkerSet {
        let mut set = MarkerSet::empty(0.1);
        for k in 0..20 {
            let t = k as f64;
            let x = Vec3::new((0.7 * t).sin() * 2.0, (1.1 * t).cos() * 1.5, 0.1 * t - 1.0);
            set.markers.push(Marker {
                x0: x,
                x,
                g: Mat3::identity(),
                omega0: Vec3::new(0.3, -0.1, 1.0),
                grad0: Mat3::zeros(),
                vol: 1e-3,
            });
        }
        set
    }

    #[test]
    fn rigid_rotation_is_exact_to_integrator_accuracy() {
        let zero = UniformFlow(Vec3::zeros());
        let mut set = cloud();
        let dt = 1e-3;
        for n in 0..1000 {
            set = advect_markers(
                &set,
                &zero,
                Vec3::zeros(),
                Vec3::z(),
                dt,
                None,
                n as f64 * dt,
            )
            .unwrap();
        }
        // X' = -e3 x X, so X(t) = exp(-t S(e3)) x0
        let rot = nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), -1.0).into_inner();
        for m in &set.markers {
            assert!((m.x.norm() - m.x0.norm()).abs() < 1e-10);
            assert!((m.x - rot * m.x0).norm() < 1e-10);
            assert!((m.g - rot).norm() < 1e-10);
            assert!((m.g.determinant() - 1.0).abs() < 1e-10);
            assert!((m.vorticity().norm() - m.omega0.norm()).abs() < 1e-10);
        }
        assert!(set.max_det_error() < 1e-6);
    }

    #[test]
    fn comoving_uniform_flow_leaves_markers_in_place() {
        let c = Vec3::new(0.4, -0.2, 1.0);
        let flow = UniformFlow(c);
        let set = cloud();
        let out = advect_markers(&set, &flow, c, Vec3::zeros(), 0.01, None, 0.0).unwrap();
        for (a, b) in out.markers.iter().zip(&set.markers) {
            assert_eq!(a.x, b.x);
            assert_eq!(a.g, Mat3::identity());
        }
    }

    #[test]
    fn inverse_jacobian_is_backward_flow_derivative() {
        // G(t; 0, x)^{-1} = G(0; t, X): advecting back with reversed rotation
        // returns the identity.
        let zero = UniformFlow(Vec3::zeros());
        let mut set = cloud();
        for _ in 0..100 {
            set = advect_markers(
                &set,
                &zero,
                Vec3::zeros(),
                Vec3::new(0.3, 0.0, 1.0),
                1e-2,
                None,
                0.0,
            )
            .unwrap();
        }
        let forward = set.markers[0].g;
        let mut back = set.clone();
        for m in &mut back.markers {
            m.g = Mat3::identity();
        }
        for _ in 0..100 {
            back = advect_markers(
                &back,
                &zero,
                Vec3::zeros(),
                -Vec3::new(0.3, 0.0, 1.0),
                1e-2,
                None,
                0.0,
            )
            .unwrap();
        }
        assert!((back.markers[0].g * forward - Mat3::identity()).norm() < 1e-10);
    }
}

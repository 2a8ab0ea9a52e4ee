//! Generalized loads `(int grad mu . grad phi_i, int grad mu . grad varphi_i)`.
//!
//! With `v = v_p + eta` and `U = l + r x y`, the pressure-like field obeys
//! `grad mu = -d_t eta - sum w'_j grad psi_j - grad B + (v - U) x omega`
//! where `B = |v|^2 / 2 - U . v`. Against the harmonic `phi_i` the first term
//! integrates to zero, so each load is a boundary integral of `B` plus a
//! volume sum of the Lamb vector over the vorticity carriers.

use rayon::prelude::*;

use crate::body::Body;
use crate::math::Vec3;
use crate::potential::Vec6;
use crate::rigid::{control_term, generalized_force, stack};
use crate::vorticity::{FlowField, MarkerSet, VelocitySource};

/// `(m0 r x l, r x J0 r)`.
pub fn gyroscopic(body: &Body, l: &Vec3, r: &Vec3) -> Vec6 {
    let m = &body.mats;
    stack(&(r.cross(l) * m.mass), &r.cross(&(m.inertia * r)))
}

/// `-oint f (n; y x n)` from centroid samples of `f`.
fn boundary_moment(body: &Body, f: &[f64]) -> Vec6 {
    let mesh = body.tables.mesh();
    let mut out = Vec6::zeros();
    for k in 0..mesh.len() {
        let n = mesh.normals()[k];
        let c = mesh.centroids()[k];
        out -= stack(&n, &c.cross(&n)) * (f[k] * mesh.areas()[k]);
    }
    out
}

/// `sum_k ((v - U)(X_k) x omega_k vol_k) . (grad phi_i, grad varphi_i)(X_k)`.
pub fn lamb_loads(body: &Body, field: &FlowField, markers: &MarkerSet) -> Vec6 {
    if field.eta.is_zero() {
        return Vec6::zeros();
    }
    let terms: Vec<Vec6> = markers
        .markers
        .par_iter()
        .map(|m| {
            let vt = field.velocity(&m.x) - field.body_velocity(&m.x);
            let f = vt.cross(&(m.vorticity() * m.vol));
            let grads = body.tables.rigid_gradients(&m.x);
            Vec6::from_fn(|i, _| f.dot(&grads[i]))
        })
        .collect();
    // summed in marker order so the result does not depend on the thread count
    terms.iter().fold(Vec6::zeros(), |a, b| a + b)
}

/// Loads by direct quadrature of every term: `C w' - oint B (n; y x n)` plus
/// the Lamb-vector sum.
pub fn mu_loads(body: &Body, field: &FlowField, markers: &MarkerSet, dw: &[f64]) -> Vec6 {
    let mesh = body.tables.mesh();
    let vp = field.boundary_potential_velocity();
    let eta = field.eta.boundary_values();
    let b: Vec<f64> = (0..mesh.len())
        .map(|k| {
            let v = vp[k] + eta[k];
            let u = field.body_velocity(&mesh.centroids()[k]);
            0.5 * v.norm_squared() - u.dot(&v)
        })
        .collect();
    control_term(&body.mats, dw) + boundary_moment(body, &b) + lamb_loads(body, field, markers)
}

/// Part of the loads due to `eta`: the `B` terms containing `eta` and the
/// Lamb sum. Zero when there is no vorticity.
pub fn rotational_loads(body: &Body, field: &FlowField, markers: &MarkerSet) -> Vec6 {
    if field.eta.is_zero() {
        return Vec6::zeros();
    }
    let mesh = body.tables.mesh();
    let vp = field.boundary_potential_velocity();
    let eta = field.eta.boundary_values();
    let b: Vec<f64> = (0..mesh.len())
        .map(|k| {
            let u = field.body_velocity(&mesh.centroids()[k]);
            vp[k].dot(&eta[k]) + 0.5 * eta[k].norm_squared() - u.dot(&eta[k])
        })
        .collect();
    boundary_moment(body, &b) + lamb_loads(body, field, markers)
}

/// Loads used by the solvers: the closed form `C w' + F(l, r, w) + gyro` of
/// the potential part plus [`rotational_loads`].
pub fn coupled_loads(body: &Body, field: &FlowField, markers: &MarkerSet, dw: &[f64]) -> Vec6 {
    let (l, r) = (field.l, field.r);
    control_term(&body.mats, dw)
        + generalized_force(&body.mats, &l, &r, &field.w)
        + gyroscopic(body, &l, &r)
        + rotational_loads(body, field, markers)
}

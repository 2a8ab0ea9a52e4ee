//! Integrals of the Laplace kernel `G(z) = 1 / (4 pi |z|)` over flat
//! triangles with unit density: analytic near the panel, Dunavant quadrature
//! at moderate range and the centroid rule far away.

use std::f64::consts::PI;

use crate::math::{Mat3, Vec3};

const FOUR_PI: f64 = 4.0 * PI;

/// Distance, in panel sizes, inside which the analytic formulas are used.
pub const NEAR_FACTOR: f64 = 2.5;
/// Distance, in panel sizes, beyond which one centroid point suffices.
pub const FAR_FACTOR: f64 = 6.0;

/// Degree-5 seven-point rule on the reference triangle (barycentric, weight).
const DUNAVANT7: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    (
        [
            0.059_715_871_789_770,
            0.470_142_064_105_115,
            0.470_142_064_105_115,
        ],
        0.132_394_152_788_506,
    ),
    (
        [
            0.470_142_064_105_115,
            0.059_715_871_789_770,
            0.470_142_064_105_115,
        ],
        0.132_394_152_788_506,
    ),
    (
        [
            0.470_142_064_105_115,
            0.470_142_064_105_115,
            0.059_715_871_789_770,
        ],
        0.132_394_152_788_506,
    ),
    (
        [
            0.797_426_985_353_087,
            0.101_286_507_323_456,
            0.101_286_507_323_456,
        ],
        0.125_939_180_544_827,
    ),
    (
        [
            0.101_286_507_323_456,
            0.797_426_985_353_087,
            0.101_286_507_323_456,
        ],
        0.125_939_180_544_827,
    ),
    (
        [
            0.101_286_507_323_456,
            0.101_286_507_323_456,
            0.797_426_985_353_087,
        ],
        0.125_939_180_544_827,
    ),
];

/// Geometry of one flat panel, cached for repeated kernel integrals.
#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub corners: [Vec3; 3],
    pub centroid: Vec3,
    pub area: f64,
    pub size: f64,
}

impl Panel {
    pub fn new(corners: [Vec3; 3]) -> Self {
        let [a, b, c] = corners;
        let area = 0.5 * (b - a).cross(&(c - a)).norm();
        let size = (b - a).norm().max((c - b).norm()).max((a - c).norm());
        Panel {
            corners,
            centroid: (a + b + c) / 3.0,
            area,
            size,
        }
    }

    fn split(&self) -> [Panel; 4] {
        let [a, b, c] = self.corners;
        let (ab, bc, ca) = ((a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5);
        [
            Panel::new([a, ab, ca]),
            Panel::new([ab, b, bc]),
            Panel::new([ca, bc, c]),
            Panel::new([ab, bc, ca]),
        ]
    }
}

/// `(int G dA, int grad_p G dA)` over the panel for the observation point `p`.
///
/// On the panel plane the normal part of the gradient is dropped, which gives
/// the principal value used by the collocation equations.
pub fn single_layer(p: &Vec3, panel: &Panel) -> (f64, Vec3) {
    let d = (p - panel.centroid).norm();
    if d > FAR_FACTOR * panel.size {
        let z = p - panel.centroid;
        let r = d;
        return (
            panel.area / (FOUR_PI * r),
            -z * (panel.area / (FOUR_PI * r * r * r)),
        );
    }
    if d > NEAR_FACTOR * panel.size {
        let mut value = 0.0;
        let mut grad = Vec3::zeros();
        let [a, b, c] = panel.corners;
        for (bary, w) in DUNAVANT7.iter() {
            let x = a * bary[0] + b * bary[1] + c * bary[2];
            let z = p - x;
            let r = z.norm();
            value += w / r;
            grad -= z * (w / (r * r * r));
        }
        let scale = panel.area / FOUR_PI;
        return (value * scale, grad * scale);
    }
    analytic(p, &panel.corners)
}

/// Closed-form single layer of a flat triangle with unit density.
pub fn analytic(p: &Vec3, corners: &[Vec3; 3]) -> (f64, Vec3) {
    let [a, b, c] = *corners;
    let cross = (b - a).cross(&(c - a));
    let nu = cross / cross.norm();
    let size = (b - a).norm().max((c - a).norm());
    let mut h = (p - a).dot(&nu);
    if h.abs() < 1e-13 * size {
        h = 0.0;
    }
    let rho = p - nu * h;
    let habs = h.abs();
    let mut value = 0.0;
    let mut grad = Vec3::zeros();
    let mut beta_sum = 0.0;
    for i in 0..3 {
        let v0 = corners[i];
        let v1 = corners[(i + 1) % 3];
        let edge = v1 - v0;
        let len = edge.norm();
        let t = edge / len;
        let u = t.cross(&nu);
        let p0 = (v0 - rho).dot(&u);
        let lp = (v1 - rho).dot(&t);
        let lm = (v0 - rho).dot(&t);
        let rp = (p - v1).norm();
        let rm = (p - v0).norm();
        let r0sq = p0 * p0 + h * h;
        let f = edge_log(rp, lp, rm, lm, r0sq);
        value += p0 * f;
        grad -= u * f;
        if p0.abs() > 1e-300 {
            beta_sum += (p0 * lp).atan2(r0sq + habs * rp) - (p0 * lm).atan2(r0sq + habs * rm);
        }
    }
    value -= habs * beta_sum;
    if h != 0.0 {
        grad -= nu * (h.signum() * beta_sum);
    }
    (value / FOUR_PI, grad / FOUR_PI)
}

/// `ln((R+ + l+) / (R- + l-))` in whichever algebraically equivalent form
/// avoids cancellation for the given edge-relative position.
fn edge_log(rp: f64, lp: f64, rm: f64, lm: f64, r0sq: f64) -> f64 {
    if lm >= 0.0 {
        let den = rm + lm;
        if den > 0.0 {
            ((rp + lp) / den).ln()
        } else {
            0.0
        }
    } else if lp <= 0.0 {
        let den = rp - lp;
        if den > 0.0 {
            ((rm - lm) / den).ln()
        } else {
            0.0
        }
    } else if r0sq > 0.0 {
        ((rp + lp) * (rm - lm) / r0sq).ln()
    } else {
        0.0
    }
}

/// `(int grad_p G dA, int hess_p G dA)` in one pass, for points off the surface.
pub fn gradient_hessian(p: &Vec3, panel: &Panel) -> (Vec3, Mat3) {
    let d = (p - panel.centroid).norm();
    if d > FAR_FACTOR * panel.size {
        let z = p - panel.centroid;
        return (
            -z * (panel.area / (FOUR_PI * d * d * d)),
            kernel_hessian(&z) * panel.area,
        );
    }
    if d > NEAR_FACTOR * panel.size {
        let [a, b, c] = panel.corners;
        let mut grad = Vec3::zeros();
        let mut hess = Mat3::zeros();
        for (bary, w) in DUNAVANT7.iter() {
            let z = p - (a * bary[0] + b * bary[1] + c * bary[2]);
            let r = z.norm();
            grad -= z * (w / (r * r * r));
            hess += kernel_hessian(&z) * *w;
        }
        return (grad * (panel.area / FOUR_PI), hess * panel.area);
    }
    (analytic(p, &panel.corners).1, hessian_rec(p, panel, 0))
}

/// `int hess_p G dA` over the panel by (subdivided) Dunavant quadrature.
/// Only meant for points at least a fraction of a panel size off the surface.
pub fn hessian(p: &Vec3, panel: &Panel) -> Mat3 {
    hessian_rec(p, panel, 0)
}

fn hessian_rec(p: &Vec3, panel: &Panel, depth: u32) -> Mat3 {
    let d = (p - panel.centroid).norm();
    if d > FAR_FACTOR * panel.size {
        return kernel_hessian(&(p - panel.centroid)) * panel.area;
    }
    if d > NEAR_FACTOR * panel.size || depth >= 5 {
        let [a, b, c] = panel.corners;
        let mut out = Mat3::zeros();
        for (bary, w) in DUNAVANT7.iter() {
            let x = a * bary[0] + b * bary[1] + c * bary[2];
            out += kernel_hessian(&(p - x)) * *w;
        }
        return out * panel.area;
    }
    let mut out = Mat3::zeros();
    for child in panel.split().iter() {
        out += hessian_rec(p, child, depth + 1);
    }
    out
}

/// Second derivatives of `1 / (4 pi |z|)`.
pub fn kernel_hessian(z: &Vec3) -> Mat3 {
    let r2 = z.norm_squared();
    let r = r2.sqrt();
    let r5 = r2 * r2 * r;
    (z * z.transpose() * 3.0 - Mat3::identity() * r2) / (FOUR_PI * r5)
}

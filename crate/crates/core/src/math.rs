//! Small-dimension algebra shared by every module: skew operators, the
//! quaternion attitude chart and body/world frame changes.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance used when checking `|q| <= 1`.
pub const CHART_TOL: f64 = 1e-12;

/// Matrix of the cross product: `skew(y) * x == y.cross(&x)`.
pub fn skew(y: &Vec3) -> Mat3 {
    Mat3::new(0.0, -y.z, y.y, y.z, 0.0, -y.x, -y.y, y.x, 0.0)
}

/// Vector part of a unit quaternion; the scalar part is the nonnegative root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuatVec(pub Vec3);

impl QuatVec {
    pub fn new(q: Vec3) -> Result<Self> {
        let norm = q.norm();
        if !norm.is_finite() || norm > 1.0 + CHART_TOL {
            return Err(Error::ChartExit { norm });
        }
        Ok(QuatVec(q))
    }

    pub fn identity() -> Self {
        QuatVec(Vec3::zeros())
    }

    pub fn vector(&self) -> Vec3 {
        self.0
    }

    /// `q0 = sqrt(1 - |q|^2)`, clamped at zero on the chart boundary.
    pub fn scalar(&self) -> f64 {
        (1.0 - self.0.norm_squared()).max(0.0).sqrt()
    }

    pub fn rotation(&self) -> Mat3 {
        rotation_from_parts(self.scalar(), &self.0)
    }
}

fn rotation_from_parts(q0: f64, q: &Vec3) -> Mat3 {
    let (q1, q2, q3) = (q.x, q.y, q.z);
    Mat3::new(
        q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3,
        2.0 * (q1 * q2 - q0 * q3),
        2.0 * (q1 * q3 + q0 * q2),
        2.0 * (q2 * q1 + q0 * q3),
        q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3,
        2.0 * (q2 * q3 - q0 * q1),
        2.0 * (q3 * q1 - q0 * q2),
        2.0 * (q3 * q2 + q0 * q1),
        q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3,
    )
}

/// Rotation matrix `R(q)` of the attitude chart. Rejects `|q| > 1`.
pub fn quat_to_rotation(q: &Vec3) -> Result<Mat3> {
    Ok(QuatVec::new(*q)?.rotation())
}

/// The 12-dimensional controlled state: position, attitude, and the body-frame
/// linear and angular velocities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidState {
    pub h: Vec3,
    pub q: QuatVec,
    pub l: Vec3,
    pub r: Vec3,
}

impl Default for RigidState {
    fn default() -> Self {
        RigidState::rest()
    }
}

impl RigidState {
    pub fn rest() -> Self {
        RigidState {
            h: Vec3::zeros(),
            q: QuatVec::identity(),
            l: Vec3::zeros(),
            r: Vec3::zeros(),
        }
    }

    pub fn new(h: Vec3, q: Vec3, l: Vec3, r: Vec3) -> Result<Self> {
        let state = RigidState {
            h,
            q: QuatVec::new(q)?,
            l,
            r,
        };
        if !state.to_array().iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("non-finite rigid state".into()));
        }
        Ok(state)
    }

    pub fn from_array(x: &[f64; 12]) -> Result<Self> {
        RigidState::new(
            Vec3::new(x[0], x[1], x[2]),
            Vec3::new(x[3], x[4], x[5]),
            Vec3::new(x[6], x[7], x[8]),
            Vec3::new(x[9], x[10], x[11]),
        )
    }

    pub fn to_array(&self) -> [f64; 12] {
        let q = self.q.0;
        [
            self.h.x, self.h.y, self.h.z, q.x, q.y, q.z, self.l.x, self.l.y, self.l.z, self.r.x,
            self.r.y, self.r.z,
        ]
    }

    /// Configuration part `a = (h, q)`.
    pub fn configuration(&self) -> [f64; 6] {
        let a = self.to_array();
        [a[0], a[1], a[2], a[3], a[4], a[5]]
    }

    /// Velocity part `b = (l, r)`.
    pub fn velocity(&self) -> [f64; 6] {
        let a = self.to_array();
        [a[6], a[7], a[8], a[9], a[10], a[11]]
    }

    pub fn rotation(&self) -> Mat3 {
        self.q.rotation()
    }

    /// World-frame velocity of the center of mass, `h' = Q l`.
    pub fn world_linear_velocity(&self) -> Vec3 {
        self.rotation() * self.l
    }

    /// World-frame angular velocity, `zeta = Q r`.
    pub fn world_angular_velocity(&self) -> Vec3 {
        self.rotation() * self.r
    }
}

/// Euclidean distance between two states in R^12.
pub fn state_distance(a: &RigidState, b: &RigidState) -> f64 {
    a.to_array()
        .iter()
        .zip(b.to_array().iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    BodyToWorld,
    WorldToBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Positions transform affinely, `x = Q y + h`.
    Point,
    /// Velocities and other free vectors, `u = Q v`.
    Vector,
}

/// Change of frame between the body-fixed and the world coordinates.
pub fn body_world_transform(
    state: &RigidState,
    x: &Vec3,
    quantity: Quantity,
    direction: Direction,
) -> Vec3 {
    let rot = state.rotation();
    match (quantity, direction) {
        (Quantity::Point, Direction::BodyToWorld) => rot * x + state.h,
        (Quantity::Point, Direction::WorldToBody) => rot.transpose() * (x - state.h),
        (Quantity::Vector, Direction::BodyToWorld) => rot * x,
        (Quantity::Vector, Direction::WorldToBody) => rot.transpose() * x,
    }
}

/// Unit quaternion carried with an explicit scalar part, used inside the
/// integrators so the 4-sphere projection after each step is measurable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuat {
    pub q0: f64,
    pub q: Vec3,
}

impl UnitQuat {
    pub fn from_chart(q: &QuatVec) -> Self {
        UnitQuat {
            q0: q.scalar(),
            q: q.0,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.q0 * self.q0 + self.q.norm_squared()).sqrt()
    }

    /// Projects onto the unit 4-sphere and returns the drift `| |q| - 1 |`
    /// that was removed. A negative scalar part leaves the chart.
    pub fn renormalize(&mut self) -> Result<f64> {
        let n = self.norm();
        let drift = (n - 1.0).abs();
        self.q0 /= n;
        self.q /= n;
        if self.q0 < 0.0 || !self.q0.is_finite() {
            return Err(Error::ChartExit {
                norm: self.q.norm(),
            });
        }
        Ok(drift)
    }

    pub fn to_chart(&self) -> Result<QuatVec> {
        QuatVec::new(self.q)
    }

    pub fn rotation(&self) -> Mat3 {
        rotation_from_parts(self.q0, &self.q)
    }
}

/// Attitude and position rates for a given scalar part `q0`.
pub fn kinematics_rates(q0: f64, q: &Vec3, l: &Vec3, r: &Vec3) -> (Vec3, Vec3) {
    let hdot =
        (1.0 - q.norm_squared()) * l + 2.0 * q0 * q.cross(l) + l.dot(q) * q - q.cross(&l.cross(q));
    let qdot = 0.5 * (q0 * r + q.cross(r));
    (hdot, qdot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn skew_matches_cross_product() {
        let s = skew(&Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(s * Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0));
        let y = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(skew(&y) * y, Vec3::zeros());
        let s = skew(&y);
        assert_eq!(s[(0, 1)], -3.0);
        assert_eq!(s[(0, 2)], 2.0);
        assert_eq!(s[(1, 0)], 3.0);
        assert_eq!(s[(1, 2)], -1.0);
        assert_eq!(s[(2, 0)], -2.0);
        assert_eq!(s[(2, 1)], 1.0);
    }

    #[test]
    fn rotation_special_cases() {
        assert_eq!(quat_to_rotation(&Vec3::zeros()).unwrap(), Mat3::identity());
        let r = quat_to_rotation(&Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(r, Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0)));
        assert!(quat_to_rotation(&Vec3::new(0.8, 0.8, 0.0)).is_err());
    }

    #[test]
    fn half_turn_maps_y_axis() {
        let s = RigidState::new(Vec3::zeros(), Vec3::x(), Vec3::zeros(), Vec3::zeros()).unwrap();
        let w = body_world_transform(&s, &Vec3::y(), Quantity::Point, Direction::BodyToWorld);
        assert_relative_eq!(w, Vec3::new(0.0, -1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn identity_frame() {
        let s = RigidState::rest();
        let p = Vec3::new(0.3, -1.0, 2.0);
        assert_eq!(
            body_world_transform(&s, &p, Quantity::Point, Direction::BodyToWorld),
            p
        );
    }

    #[test]
    fn attitude_kinematics_match_rotation_derivative() {
        // Q' = Q S(r): finite difference along a short RK4 integration of q.
        let q = Vec3::new(0.2, -0.3, 0.1);
        let r = Vec3::new(0.4, 0.1, -0.7);
        let mut uq = UnitQuat::from_chart(&QuatVec::new(q).unwrap());
        let dt = 1e-4;
        let rate = |u: &UnitQuat| {
            let (_, qd) = kinematics_rates(u.q0, &u.q, &Vec3::zeros(), &r);
            (-0.5 * u.q.dot(&r), qd)
        };
        let q_start = uq.rotation();
        let add = |u: &UnitQuat, d: &(f64, Vec3), s: f64| UnitQuat {
            q0: u.q0 + s * d.0,
            q: u.q + s * d.1,
        };
        let k1 = rate(&uq);
        let k2 = rate(&add(&uq, &k1, dt / 2.0));
        let k3 = rate(&add(&uq, &k2, dt / 2.0));
        let k4 = rate(&add(&uq, &k3, dt));
        uq.q0 += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        uq.q += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        let fd = (uq.rotation() - q_start) / dt;
        let mid = (uq.rotation() + q_start) * 0.5;
        let exact = mid * skew(&r);
        assert!((fd - exact).norm() < 1e-8, "{}", (fd - exact).norm());
    }

    fn small_vec(bound: f64) -> impl Strategy<Value = Vec3> {
        (-bound..bound, -bound..bound, -bound..bound).prop_map(|(a, b, c)| Vec3::new(a, b, c))
    }

    proptest! {
        #[test]
        fn skew_is_antisymmetric_and_linear(a in small_vec(10.0), b in small_vec(10.0), s in -3.0..3.0f64) {
            prop_assert_eq!(skew(&a).transpose(), -skew(&a));
            let lhs = skew(&(a * s + b));
            let rhs = skew(&a) * s + skew(&b);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn rotation_is_orthonormal(q in small_vec(0.577)) {
            prop_assume!(q.norm() <= 1.0 - 1e-9);
            let r = quat_to_rotation(&q).unwrap();
            prop_assert!((r.transpose() * r - Mat3::identity()).norm() < 1e-14);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn frame_round_trip(q in small_vec(0.57), h in small_vec(5.0), x in small_vec(5.0)) {
            let s = RigidState::new(h, q, Vec3::zeros(), Vec3::zeros()).unwrap();
            for kind in [Quantity::Point, Quantity::Vector] {
                let w = body_world_transform(&s, &x, kind, Direction::BodyToWorld);
                let back = body_world_transform(&s, &w, kind, Direction::WorldToBody);
                prop_assert!((back - x).norm() < 1e-13);
            }
        }

        #[test]
        fn position_rate_equals_rotated_velocity(q in small_vec(0.52), l in small_vec(2.0)) {
            prop_assume!(q.norm() < 0.9);
            let qv = QuatVec::new(q).unwrap();
            let (hdot, _) = kinematics_rates(qv.scalar(), &q, &l, &Vec3::zeros());
            prop_assert!((hdot - qv.rotation() * l).norm() < 1e-10);
        }
    }
}

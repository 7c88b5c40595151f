//! Euler-angle attitude and body/NED rotations.
//!
//! Conventions: NED (North-East-Down) inertial frame, body frame with x
//! forward along the hull axis, attitude as roll/pitch/yaw (`phi`, `theta`,
//! `psi`) applied in the usual z-y-x order. Angles are radians, wrapped to
//! `(-pi, pi]`; pitch is kept strictly inside `(-pi/2, pi/2)` because the
//! Euler-rate map divides by `cos(theta)`.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;
use thiserror::Error;

/// 3-component vector of `f64`. Whether a value is expressed in the body or
/// the NED frame is carried by variable naming (`v_body`, `v_ned`, ...).
pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum FrameError {
    #[error("attitude angle is not finite")]
    NonFinite,
    #[error("pitch {0} rad is at or beyond +/-pi/2 (gimbal lock)")]
    GimbalLock(f64),
}

/// Roll, pitch, yaw in radians.
///
/// Construction wraps roll and yaw to `(-pi, pi]` and rejects non-finite
/// angles and pitch values at or beyond `+/-pi/2`, so a value of this type
/// always satisfies the attitude invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAttitude {
    phi: f64,
    theta: f64,
    psi: f64,
}

impl EulerAttitude {
    pub fn new(phi: f64, theta: f64, psi: f64) -> Result<Self, FrameError> {
        if !(phi.is_finite() && theta.is_finite() && psi.is_finite()) {
            return Err(FrameError::NonFinite);
        }
        if theta.abs() >= PI / 2.0 {
            return Err(FrameError::GimbalLock(theta));
        }
        Ok(Self {
            phi: wrap_angle(phi),
            theta,
            psi: wrap_angle(psi),
        })
    }

    /// Wings-level attitude with the given yaw.
    pub fn level(psi: f64) -> Result<Self, FrameError> {
        Self::new(0.0, 0.0, psi)
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = a.rem_euclid(two_pi);
    if r > PI {
        r - two_pi
    } else {
        r
    }
}

/// Rotation taking body-frame vectors to the NED frame.
///
/// The returned matrix is the transpose of the NED-to-body direction cosine
/// matrix built from the z-y-x Euler sequence; it is orthonormal with
/// determinant +1 for any valid attitude.
pub fn rotation_body_to_ned(att: &EulerAttitude) -> Matrix3<f64> {
    let (s_phi, c_phi) = att.phi.sin_cos();
    let (s_th, c_th) = att.theta.sin_cos();
    let (s_psi, c_psi) = att.psi.sin_cos();
    #[rustfmt::skip]
    let ned_to_body = Matrix3::new(
        c_psi * c_th,                          s_psi * c_th,                          -s_th,
        c_psi * s_th * s_phi - s_psi * c_phi,  s_psi * s_th * s_phi + c_psi * c_phi,  c_th * s_phi,
        c_psi * s_th * c_phi + s_psi * s_phi,  s_psi * s_th * c_phi - c_psi * s_phi,  c_th * c_phi,
    );
    ned_to_body.transpose()
}

/// Matrix mapping body angular rates `(p, q, r)` to Euler-angle rates
/// `(phi_dot, theta_dot, psi_dot)`.
///
/// Valid for `|theta| < pi/2`, which the [`EulerAttitude`] constructor
/// guarantees.
pub fn euler_rate_matrix(att: &EulerAttitude) -> Matrix3<f64> {
    let (s_phi, c_phi) = att.phi.sin_cos();
    let c_th = att.theta.cos();
    let t_th = att.theta.tan();
    #[rustfmt::skip]
    let m = Matrix3::new(
        1.0, s_phi * t_th,  c_phi * t_th,
        0.0, c_phi,         -s_phi,
        0.0, s_phi / c_th,  c_phi / c_th,
    );
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_attitude(rng: &mut ChaCha8Rng) -> EulerAttitude {
        let phi = rng.random_range(-PI..PI);
        let theta = rng.random_range(-1.4..1.4);
        let psi = rng.random_range(-PI..PI);
        EulerAttitude::new(phi, theta, psi).unwrap()
    }

    #[test]
    fn wrap_angle_conventions() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert_relative_eq!(wrap_angle(3.0 * PI), PI, max_relative = 1e-12);
        // Boundary maps to +pi, not -pi.
        assert_eq!(wrap_angle(-PI), PI);
        assert_relative_eq!(wrap_angle(-PI / 2.0), -PI / 2.0);
        assert_relative_eq!(wrap_angle(5.0 * PI + 0.1), -PI + 0.1, epsilon = 1e-12);
    }

    #[test]
    fn attitude_construction_validates() {
        assert!(EulerAttitude::new(0.0, PI / 2.0, 0.0).is_err());
        assert!(EulerAttitude::new(0.0, -PI / 2.0, 0.0).is_err());
        assert!(EulerAttitude::new(f64::NAN, 0.0, 0.0).is_err());
        let a = EulerAttitude::new(3.0 * PI, 0.1, -3.0 * PI).unwrap();
        assert_relative_eq!(a.phi(), PI, epsilon = 1e-12);
        assert_relative_eq!(a.psi(), PI, epsilon = 1e-12);
    }

    #[test]
    fn rotation_identity_at_zero_attitude() {
        let r = rotation_body_to_ned(&EulerAttitude::new(0.0, 0.0, 0.0).unwrap());
        assert_relative_eq!(r, Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn pure_yaw_maps_body_x_to_east() {
        let r = rotation_body_to_ned(&EulerAttitude::new(0.0, 0.0, PI / 2.0).unwrap());
        let v = r * Vec3::new(1.0, 0.0, 0.0);
        assert_relative_eq!(v, Vec3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn rotation_is_orthonormal_and_norm_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let att = random_attitude(&mut rng);
            let r = rotation_body_to_ned(&att);
            let defect = r.transpose() * r - Matrix3::identity();
            assert!(defect.abs().max() < 1e-12, "defect {:?}", defect);
            assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-12);

            let v = Vec3::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            );
            assert_relative_eq!((r * v).norm(), v.norm(), epsilon = 1e-12);
            // Inverse by transpose.
            assert_relative_eq!(r.transpose() * (r * v), v, epsilon = 1e-12);
        }
    }

    #[test]
    fn euler_rate_matrix_identity_for_level_flight() {
        for psi in [-2.0, 0.0, 1.0, 3.0] {
            let m = euler_rate_matrix(&EulerAttitude::new(0.0, 0.0, psi).unwrap());
            assert_relative_eq!(m, Matrix3::identity(), epsilon = 1e-15);
        }
    }

    #[test]
    fn euler_rate_matrix_roll_only_row() {
        let m = euler_rate_matrix(&EulerAttitude::new(PI / 4.0, 0.0, 0.0).unwrap());
        let c = (PI / 4.0).cos();
        let s = (PI / 4.0).sin();
        assert_relative_eq!(m[(1, 0)], 0.0, epsilon = 1e-15);
        assert_relative_eq!(m[(1, 1)], c, epsilon = 1e-15);
        assert_relative_eq!(m[(1, 2)], -s, epsilon = 1e-15);
    }

    /// Independent oracle for the Euler-rate map: pick a smooth analytic
    /// attitude trajectory, derive the body rates from the standard
    /// kinematic relations
    ///   p = phi_dot - psi_dot sin(theta)
    ///   q = theta_dot cos(phi) + psi_dot sin(phi) cos(theta)
    ///   r = -theta_dot sin(phi) + psi_dot cos(phi) cos(theta)
    /// and check that `euler_rate_matrix` maps those rates back onto the
    /// finite-difference derivative of the trajectory.
    #[test]
    fn euler_rate_matrix_matches_finite_difference_along_trajectory() {
        let phi = |t: f64| 0.3 * (0.7 * t).sin();
        let theta = |t: f64| 0.25 * (1.3 * t).sin();
        let psi = |t: f64| 0.5 * t + 0.2 * (0.4 * t).sin();
        let phi_dot = |t: f64| 0.3 * 0.7 * (0.7 * t).cos();
        let theta_dot = |t: f64| 0.25 * 1.3 * (1.3 * t).cos();
        let psi_dot = |t: f64| 0.5 + 0.2 * 0.4 * (0.4 * t).cos();

        let h = 1e-5;
        let mut t = 0.0;
        while t < 20.0 {
            let att = EulerAttitude::new(phi(t), theta(t), psi(t)).unwrap();
            let body_rates = Vec3::new(
                phi_dot(t) - psi_dot(t) * theta(t).sin(),
                theta_dot(t) * phi(t).cos() + psi_dot(t) * phi(t).sin() * theta(t).cos(),
                -theta_dot(t) * phi(t).sin() + psi_dot(t) * phi(t).cos() * theta(t).cos(),
            );
            let euler_rates = euler_rate_matrix(&att) * body_rates;

            let fd = Vec3::new(
                (phi(t + h) - phi(t - h)) / (2.0 * h),
                (theta(t + h) - theta(t - h)) / (2.0 * h),
                // psi is smooth (no wrap in this range), plain difference is fine
                (psi(t + h) - psi(t - h)) / (2.0 * h),
            );
            assert!(
                (euler_rates - fd).amax() < 1e-6,
                "t={t}: rates {euler_rates:?} vs fd {fd:?}"
            );
            t += 0.25;
        }
    }
}

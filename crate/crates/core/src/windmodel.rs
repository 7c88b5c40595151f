//! Measurement model for wind estimation.
//!
//! The estimated state is `(V_Nw, V_Ew, c_f)`: horizontal wind in the NED
//! frame plus the Pitot scale factor. The wind is modeled as a random walk
//! (identity process matrix), and up to three observation equations relate
//! the state to the measured Pitot speed, GPS groundspeed and attitude:
//!
//! - `z1 = c_f^2 ((V_N - V_Nw)^2 + (V_E - V_Ew)^2 + V_D^2)`, the squared
//!   Pitot reading via norm preservation under rotation (wind horizontal);
//! - `z2 = (V_pitot / c_f) cos(psi) cos(theta) + V_Nw`, the North
//!   groundspeed under negligible flow angles;
//! - `z3 = (V_pitot / c_f) sin(psi) cos(theta) + V_Ew`, likewise East.
//!
//! Three measurement-vector variants share these rows: the single-equation
//! baseline (`Cho2011`, z1 only), the three-equation filter (`ThreeEq`), and
//! the hybrid (`Hybrid`) which appends a network wind estimate as a redundant
//! direct observation of the state (predicted value is the state itself,
//! Jacobian block is the identity).

use crate::frames::EulerAttitude;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use thiserror::Error;

/// Default lower bound for the scale factor. Rows 2-3 divide by `c_f`; the
/// floor is far below any plausible `sqrt(eta)`.
pub const DEFAULT_CF_FLOOR: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("scale factor {c_f} is below the floor {floor}")]
    ScaleFactorBelowFloor { c_f: f64, floor: f64 },
    #[error("hybrid variant requires a network wind estimate")]
    MissingNetworkEstimate,
}

/// Estimated state: horizontal wind (m/s, NED) and Pitot scale factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindState {
    pub v_nw: f64,
    pub v_ew: f64,
    pub c_f: f64,
}

impl WindState {
    pub fn new(v_nw: f64, v_ew: f64, c_f: f64) -> Self {
        Self { v_nw, v_ew, c_f }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.v_nw, self.v_ew, self.c_f)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn is_finite(&self) -> bool {
        self.v_nw.is_finite() && self.v_ew.is_finite() && self.c_f.is_finite()
    }

    /// Clamps the scale factor to the given floor.
    pub fn clamp_scale_factor(&mut self, floor: f64) {
        if self.c_f < floor {
            self.c_f = floor;
        }
    }
}

/// One synchronized snapshot of the sensors at an estimator tick.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementFrame {
    /// Pitot speed, the square root of the measured dynamic pressure.
    pub v_pitot: f64,
    /// GPS groundspeed components in NED (m/s).
    pub v_n: f64,
    pub v_e: f64,
    pub v_d: f64,
    /// IMU attitude.
    pub att: EulerAttitude,
}

impl MeasurementFrame {
    pub fn is_finite(&self) -> bool {
        self.v_pitot.is_finite() && self.v_n.is_finite() && self.v_e.is_finite() && self.v_d.is_finite()
    }
}

/// Which rows make up the measurement vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementVariant {
    /// Single-equation baseline: `z = [z1]`.
    Cho2011,
    /// Three observation equations: `z = [z1, z2, z3]`.
    ThreeEq,
    /// Three equations plus the network estimate: `z = [z1, z2, z3, chi_nn]`.
    Hybrid,
}

impl MeasurementVariant {
    pub fn measurement_dim(self) -> usize {
        match self {
            MeasurementVariant::Cho2011 => 1,
            MeasurementVariant::ThreeEq => 3,
            MeasurementVariant::Hybrid => 6,
        }
    }
}

fn check_c_f(state: &WindState, floor: f64) -> Result<(), ModelError> {
    if state.c_f < floor {
        return Err(ModelError::ScaleFactorBelowFloor { c_f: state.c_f, floor });
    }
    Ok(())
}

/// Predicted measurement `h(chi)` evaluated at the given state and the
/// measured frame values.
///
/// For the hybrid variant the appended rows predict the network measurement
/// with the state itself; `nn_estimate` is required only to assert the caller
/// actually has one.
pub fn observe(
    state: &WindState,
    frame: &MeasurementFrame,
    variant: MeasurementVariant,
    nn_estimate: Option<&WindState>,
    c_f_floor: f64,
) -> Result<DVector<f64>, ModelError> {
    check_c_f(state, c_f_floor)?;
    if variant == MeasurementVariant::Hybrid && nn_estimate.is_none() {
        return Err(ModelError::MissingNetworkEstimate);
    }

    let dn = frame.v_n - state.v_nw;
    let de = frame.v_e - state.v_ew;
    let z1 = state.c_f * state.c_f * (dn * dn + de * de + frame.v_d * frame.v_d);

    let mut z = DVector::zeros(variant.measurement_dim());
    z[0] = z1;
    if variant != MeasurementVariant::Cho2011 {
        let heading = frame.att.psi().cos() * frame.att.theta().cos();
        let cross = frame.att.psi().sin() * frame.att.theta().cos();
        z[1] = frame.v_pitot / state.c_f * heading + state.v_nw;
        z[2] = frame.v_pitot / state.c_f * cross + state.v_ew;
    }
    if variant == MeasurementVariant::Hybrid {
        z[3] = state.v_nw;
        z[4] = state.v_ew;
        z[5] = state.c_f;
    }
    Ok(z)
}

/// Analytic Jacobian of [`observe`] with respect to `(V_Nw, V_Ew, c_f)`.
pub fn jacobian(
    state: &WindState,
    frame: &MeasurementFrame,
    variant: MeasurementVariant,
    c_f_floor: f64,
) -> Result<DMatrix<f64>, ModelError> {
    check_c_f(state, c_f_floor)?;

    let c_f = state.c_f;
    let dn = frame.v_n - state.v_nw;
    let de = frame.v_e - state.v_ew;

    let mut h = DMatrix::zeros(variant.measurement_dim(), 3);
    h[(0, 0)] = -2.0 * c_f * c_f * dn;
    h[(0, 1)] = -2.0 * c_f * c_f * de;
    h[(0, 2)] = 2.0 * c_f * (dn * dn + de * de + frame.v_d * frame.v_d);

    if variant != MeasurementVariant::Cho2011 {
        let heading = frame.att.psi().cos() * frame.att.theta().cos();
        let cross = frame.att.psi().sin() * frame.att.theta().cos();
        h[(1, 0)] = 1.0;
        h[(1, 2)] = -frame.v_pitot / (c_f * c_f) * heading;
        h[(2, 1)] = 1.0;
        h[(2, 2)] = -frame.v_pitot / (c_f * c_f) * cross;
    }
    if variant == MeasurementVariant::Hybrid {
        h[(3, 0)] = 1.0;
        h[(4, 1)] = 1.0;
        h[(5, 2)] = 1.0;
    }
    Ok(h)
}

/// Builds the measured vector `z` from a sensor frame (and, for the hybrid
/// variant, the network estimate appended as rows 4-6).
pub fn measurement_vector(
    frame: &MeasurementFrame,
    variant: MeasurementVariant,
    nn_estimate: Option<&WindState>,
) -> Result<DVector<f64>, ModelError> {
    let mut z = DVector::zeros(variant.measurement_dim());
    z[0] = frame.v_pitot * frame.v_pitot;
    if variant != MeasurementVariant::Cho2011 {
        z[1] = frame.v_n;
        z[2] = frame.v_e;
    }
    if variant == MeasurementVariant::Hybrid {
        let nn = nn_estimate.ok_or(ModelError::MissingNetworkEstimate)?;
        z[3] = nn.v_nw;
        z[4] = nn.v_ew;
        z[5] = nn.c_f;
    }
    Ok(z)
}

/// State transition matrix: identity (random-walk wind and scale factor).
pub fn process_model() -> Matrix3<f64> {
    Matrix3::identity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn frame(v_pitot: f64, v_n: f64, v_e: f64, v_d: f64, psi: f64, theta: f64) -> MeasurementFrame {
        MeasurementFrame {
            v_pitot,
            v_n,
            v_e,
            v_d,
            att: EulerAttitude::new(0.0, theta, psi).unwrap(),
        }
    }

    #[test]
    fn observe_zero_wind_unit_scale() {
        let st = WindState::new(0.0, 0.0, 1.0);
        let f = frame(7.0, 7.0, 0.0, 0.0, 0.0, 0.0);
        let z = observe(&st, &f, MeasurementVariant::ThreeEq, None, DEFAULT_CF_FLOOR).unwrap();
        assert_relative_eq!(z[0], 49.0, epsilon = 1e-12);
        assert_relative_eq!(z[1], 7.0, epsilon = 1e-12);
        assert_relative_eq!(z[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn observe_east_wind_quarter_turn() {
        let st = WindState::new(0.0, 2.0, 1.0);
        let f = frame(7.0, 0.0, 9.0, 0.0, PI / 2.0, 0.0);
        let z = observe(&st, &f, MeasurementVariant::ThreeEq, None, DEFAULT_CF_FLOOR).unwrap();
        assert_relative_eq!(z[0], 49.0, epsilon = 1e-12);
        assert_relative_eq!(z[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(z[2], 9.0, epsilon = 1e-12);
    }

    #[test]
    fn observe_hybrid_appends_state() {
        let st = WindState::new(1.0, -1.0, 0.9);
        let nn = WindState::new(0.5, 0.5, 1.0);
        let f = frame(7.0, 7.0, 0.0, 0.0, 0.0, 0.0);
        let z = observe(&st, &f, MeasurementVariant::Hybrid, Some(&nn), DEFAULT_CF_FLOOR).unwrap();
        assert_eq!(z.len(), 6);
        assert_eq!(z[3], 1.0);
        assert_eq!(z[4], -1.0);
        assert_eq!(z[5], 0.9);
        // The network estimate is only required to be present, not used in h.
        assert!(observe(&st, &f, MeasurementVariant::Hybrid, None, DEFAULT_CF_FLOOR).is_err());
    }

    #[test]
    fn observe_rejects_scale_factor_below_floor() {
        let st = WindState::new(0.0, 0.0, 0.01);
        let f = frame(7.0, 7.0, 0.0, 0.0, 0.0, 0.0);
        let err = observe(&st, &f, MeasurementVariant::ThreeEq, None, DEFAULT_CF_FLOOR);
        assert_eq!(
            err,
            Err(ModelError::ScaleFactorBelowFloor { c_f: 0.01, floor: DEFAULT_CF_FLOOR })
        );
    }

    #[test]
    fn jacobian_hand_evaluation() {
        let st = WindState::new(0.0, 0.0, 1.0);
        let f = frame(7.0, 7.0, 0.0, 0.0, 0.0, 0.0);
        let h = jacobian(&st, &f, MeasurementVariant::ThreeEq, DEFAULT_CF_FLOOR).unwrap();
        assert_relative_eq!(h[(0, 0)], -14.0, epsilon = 1e-12);
        assert_relative_eq!(h[(0, 1)], 0.0, epsilon = 1e-12);
        assert_relative_eq!(h[(0, 2)], 98.0, epsilon = 1e-12);
        assert_relative_eq!(h[(1, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(h[(1, 1)], 0.0, epsilon = 1e-12);
        assert_relative_eq!(h[(1, 2)], -7.0, epsilon = 1e-12);
        assert_relative_eq!(h[(2, 0)], 0.0, epsilon = 1e-12);
        assert_relative_eq!(h[(2, 1)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(h[(2, 2)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobian_hybrid_identity_block() {
        let st = WindState::new(1.0, 2.0, 0.8);
        let nn = WindState::new(0.0, 0.0, 1.0);
        let f = frame(6.0, 5.0, 1.0, 0.2, 0.3, 0.05);
        let h = jacobian(&st, &f, MeasurementVariant::Hybrid, DEFAULT_CF_FLOOR).unwrap();
        assert_eq!(h.nrows(), 6);
        let bottom = h.view((3, 0), (3, 3));
        assert_eq!(bottom, DMatrix::identity(3, 3).view((0, 0), (3, 3)));
        // and observe dimension matches
        let z = observe(&st, &f, MeasurementVariant::Hybrid, Some(&nn), DEFAULT_CF_FLOOR).unwrap();
        assert_eq!(z.len(), 6);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let floor = 1e-6; // keep perturbed states clear of the floor check
        for _ in 0..1000 {
            let st = WindState::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(0.5..1.5),
            );
            let f = frame(
                rng.random_range(0.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-PI..PI),
                rng.random_range(-0.5..0.5),
            );
            for variant in [
                MeasurementVariant::Cho2011,
                MeasurementVariant::ThreeEq,
                MeasurementVariant::Hybrid,
            ] {
                let nn = WindState::new(0.0, 0.0, 1.0);
                let h = jacobian(&st, &f, variant, floor).unwrap();
                let step = 1e-6;
                for col in 0..3 {
                    let mut hi = st.as_vector();
                    let mut lo = st.as_vector();
                    hi[col] += step;
                    lo[col] -= step;
                    let z_hi = observe(&WindState::from_vector(&hi), &f, variant, Some(&nn), floor).unwrap();
                    let z_lo = observe(&WindState::from_vector(&lo), &f, variant, Some(&nn), floor).unwrap();
                    for row in 0..variant.measurement_dim() {
                        let fd = (z_hi[row] - z_lo[row]) / (2.0 * step);
                        let denom = h[(row, col)].abs().max(1.0);
                        assert!(
                            (h[(row, col)] - fd).abs() / denom < 1e-6,
                            "row {row} col {col}: analytic {} vs fd {fd}",
                            h[(row, col)]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn measurement_vector_contents() {
        let f = frame(7.0, 1.0, 2.0, 3.0, 0.0, 0.0);
        let z = measurement_vector(&f, MeasurementVariant::Cho2011, None).unwrap();
        assert_eq!(z.as_slice(), &[49.0]);
        let z = measurement_vector(&f, MeasurementVariant::ThreeEq, None).unwrap();
        assert_eq!(z.as_slice(), &[49.0, 1.0, 2.0]);
        let nn = WindState::new(0.1, 0.2, 0.3);
        let z = measurement_vector(&f, MeasurementVariant::Hybrid, Some(&nn)).unwrap();
        assert_eq!(z.as_slice(), &[49.0, 1.0, 2.0, 0.1, 0.2, 0.3]);
        assert!(measurement_vector(&f, MeasurementVariant::Hybrid, None).is_err());
    }

    #[test]
    fn process_model_is_identity() {
        assert_eq!(process_model(), Matrix3::identity());
    }
}

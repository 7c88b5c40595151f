//! Air-data relations: airspeed decomposition, true airspeed, flow angles,
//! the one-dimensional Pitot pressure model and the lumped scale factor.
//!
//! The probe only sees the longitudinal dynamic pressure `eta * u_a^2`, so a
//! Pitot reading alone cannot recover the true airspeed; the calibration
//! factor and the unmeasured flow angles are lumped into
//! `c_f = sqrt(eta) * cos(alpha) * cos(beta)` with `V_t = V_pitot / c_f`.

use crate::frames::Vec3;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AirdataError {
    #[error("dynamic pressure {0} is negative")]
    NegativePressure(f64),
    #[error("pitot calibration factor must be positive, got {0}")]
    NonPositiveEta(f64),
}

/// Angle of attack and sideslip, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowAngles {
    pub alpha: f64,
    pub beta: f64,
}

/// Body-frame airspeed together with its derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirdataSample {
    /// Airspeed vector in the body frame (m/s).
    pub airspeed_body: Vec3,
    /// Euclidean norm of the airspeed vector (m/s).
    pub true_airspeed: f64,
    /// `None` when the airspeed is zero and the angles are undefined.
    pub angles: Option<FlowAngles>,
}

/// One-dimensional Pitot probe: measures `eta * u_a^2` where `u_a` is the
/// longitudinal (body-x) airspeed component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitotModel {
    eta: f64,
}

impl PitotModel {
    pub fn new(eta: f64) -> Result<Self, AirdataError> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(AirdataError::NonPositiveEta(eta));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Airspeed as groundspeed minus wind, both in the body frame.
pub fn airspeed(v_g_body: &Vec3, v_w_body: &Vec3) -> Vec3 {
    v_g_body - v_w_body
}

/// True airspeed and flow angles of a body-frame airspeed vector.
///
/// At exactly zero airspeed the angles are undefined and reported as `None`
/// rather than NaN, so callers must handle the degenerate case explicitly.
pub fn airdata_from_airspeed(v_a: &Vec3) -> AirdataSample {
    let v_t = v_a.norm();
    let angles = if v_t > 0.0 {
        Some(FlowAngles {
            alpha: v_a.z.atan2(v_a.x),
            beta: (v_a.y / v_t).asin(),
        })
    } else {
        None
    };
    AirdataSample {
        airspeed_body: *v_a,
        true_airspeed: v_t,
        angles,
    }
}

/// Dynamic pressure seen by the probe. Insensitive to the sign of `u_a`
/// (a one-dimensional probe cannot distinguish backward flow); the simulator
/// rejects scenarios with negative longitudinal airflow.
pub fn pitot_pressure(u_a: f64, model: &PitotModel) -> f64 {
    model.eta * u_a * u_a
}

/// Square-root transform of the dynamic pressure.
pub fn pitot_speed(delta_p: f64) -> Result<f64, AirdataError> {
    if delta_p < 0.0 {
        return Err(AirdataError::NegativePressure(delta_p));
    }
    Ok(delta_p.sqrt())
}

/// Lumped scale factor `sqrt(eta) * cos(alpha) * cos(beta)` converting a
/// Pitot reading into true airspeed: `V_t = V_pitot / c_f`.
pub fn scale_factor(eta: f64, alpha: f64, beta: f64) -> f64 {
    debug_assert!(eta > 0.0, "eta must be positive");
    eta.sqrt() * alpha.cos() * beta.cos()
}

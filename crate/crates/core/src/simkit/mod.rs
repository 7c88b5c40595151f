//! Kinematic truth simulator and sensor synthesis.
//!
//! The vehicle is assumed well controlled: the airspeed vector has constant
//! magnitude (7 m/s cruise) along the commanded heading at constant altitude,
//! heading transitions run at a constant turn rate, and the flow angles are
//! zero, so the true scale factor is exactly `sqrt(eta)`. Ground velocity is
//! airspeed plus the (piecewise-constant, strictly horizontal) wind.
//!
//! An optional sinusoidal flow-angle excitation tilts pitch by `alpha` and
//! offsets yaw by `beta` while keeping the airspeed vector horizontal along
//! the commanded track, which keeps every kinematic identity exact and makes
//! the true scale factor `sqrt(eta) cos(alpha) cos(beta)`.
//!
//! Sensors sample the truth with zero-order hold at their own rates and add
//! zero-mean Gaussian noise (IMU attitude at 100 Hz, GPS velocity at 4 Hz,
//! Pitot at 18 Hz), reproducibly from per-sensor seeds.

mod grid;
mod scenario_file;

pub use grid::{training_grid, GridConfig, REFERENCE_SIMULATION_COUNT};
pub use scenario_file::{scenario_one, scenario_two};

use crate::airdata::{self, PitotModel};
use crate::frames::{rotation_body_to_ned, wrap_angle, EulerAttitude, FrameError, Vec3};
use crate::kv::KvError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;
use thiserror::Error;

pub const TRUTH_RATE_HZ: u32 = 100;
pub const IMU_RATE_HZ: u32 = 100;
pub const GPS_RATE_HZ: u32 = 4;
pub const PITOT_RATE_HZ: u32 = 18;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("segment is invalid: {0}")]
    BadSegment(String),
    #[error("wind phases must start at or after 0 and be sorted by start time")]
    BadWindPhases,
    #[error("wind speeds must be non-negative")]
    NegativeWindSpeed,
    #[error("flow-angle excitation must stay below pi/2")]
    ExcessiveExcitation,
    #[error("longitudinal airflow is negative at t={0}: the 1-D probe cannot measure backward flow")]
    BackwardFlow(f64),
    #[error("truth must be sampled at least as fast as the sensor ({truth} Hz < {sensor} Hz)")]
    TruthRateTooLow { truth: u32, sensor: u32 },
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Kv(#[from] KvError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Gaussian sensor noise, one standard deviation per channel group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorNoise {
    /// Roll and pitch (rad).
    pub sigma_roll_pitch: f64,
    /// Yaw (rad).
    pub sigma_yaw: f64,
    /// Groundspeed, per NED axis (m/s).
    pub sigma_groundspeed: f64,
    /// Pitot speed (m/s equivalent).
    pub sigma_pitot: f64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        Self {
            sigma_roll_pitch: 5.2e-3,
            sigma_yaw: 0.1,
            sigma_groundspeed: 0.4,
            sigma_pitot: 6.04e-4,
        }
    }
}

impl SensorNoise {
    pub fn zero() -> Self {
        Self { sigma_roll_pitch: 0.0, sigma_yaw: 0.0, sigma_groundspeed: 0.0, sigma_pitot: 0.0 }
    }
}

/// Independent noise streams per sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorSeeds {
    pub imu: u64,
    pub gps: u64,
    pub pitot: u64,
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

impl SensorSeeds {
    pub fn from_base(seed: u64) -> Self {
        Self {
            imu: splitmix64(seed ^ 0x1),
            gps: splitmix64(seed ^ 0x2),
            pitot: splitmix64(seed ^ 0x3),
        }
    }
}

/// Trajectory piece: hold the current heading, or turn to a new one at the
/// scenario turn rate (shortest direction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Hold { duration: f64 },
    TurnTo { heading: f64 },
}

/// Piecewise-constant wind: from `start` onward, speed `speed` along
/// direction `heading` (the direction the wind velocity vector points to:
/// `V_Nw = speed cos(heading)`, `V_Ew = speed sin(heading)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindPhase {
    pub start: f64,
    pub speed: f64,
    pub heading: f64,
}

/// Optional sinusoidal flow-angle excitation (both default to zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowExcitation {
    pub alpha_amplitude: f64,
    pub beta_amplitude: f64,
    pub period: f64,
}

impl Default for FlowExcitation {
    fn default() -> Self {
        Self { alpha_amplitude: 0.0, beta_amplitude: 0.0, period: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub duration: f64,
    pub cruise_airspeed: f64,
    pub altitude: f64,
    pub eta: f64,
    /// Turn rate (rad/s).
    pub turn_rate: f64,
    pub initial_heading: f64,
    pub segments: Vec<Segment>,
    pub wind: Vec<WindPhase>,
    pub noise: SensorNoise,
    pub seeds: SensorSeeds,
    pub excitation: FlowExcitation,
}

impl ScenarioSpec {
    /// A bare scenario: straight flight, no wind, stock noise, seed 1.
    pub fn new(name: &str, duration: f64) -> Self {
        Self {
            name: name.to_string(),
            duration,
            cruise_airspeed: 7.0,
            altitude: 50.0,
            eta: 1.0,
            turn_rate: 3.0_f64.to_radians(),
            initial_heading: 0.0,
            segments: Vec::new(),
            wind: Vec::new(),
            noise: SensorNoise::default(),
            seeds: SensorSeeds::from_base(1),
            excitation: FlowExcitation::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.duration > 0.0) {
            return Err(ScenarioError::NonPositive("duration"));
        }
        if !(self.cruise_airspeed > 0.0) {
            return Err(ScenarioError::NonPositive("cruise_airspeed"));
        }
        if !(self.eta > 0.0) {
            return Err(ScenarioError::NonPositive("eta"));
        }
        if !(self.turn_rate > 0.0) {
            return Err(ScenarioError::NonPositive("turn_rate"));
        }
        for seg in &self.segments {
            if let Segment::Hold { duration } = seg {
                if !(*duration > 0.0) {
                    return Err(ScenarioError::BadSegment(format!(
                        "hold duration {duration} is not positive"
                    )));
                }
            }
        }
        let mut prev = 0.0;
        for (i, phase) in self.wind.iter().enumerate() {
            if phase.start < 0.0 || (i > 0 && phase.start < prev) {
                return Err(ScenarioError::BadWindPhases);
            }
            if phase.speed < 0.0 {
                return Err(ScenarioError::NegativeWindSpeed);
            }
            prev = phase.start;
        }
        let n = &self.noise;
        if n.sigma_roll_pitch < 0.0 || n.sigma_yaw < 0.0 || n.sigma_groundspeed < 0.0 || n.sigma_pitot < 0.0
        {
            return Err(ScenarioError::NonPositive("noise standard deviation"));
        }
        if !(self.excitation.period > 0.0) {
            return Err(ScenarioError::NonPositive("excitation period"));
        }
        if self.excitation.alpha_amplitude.abs() >= PI / 2.0
            || self.excitation.beta_amplitude.abs() >= PI / 2.0
        {
            return Err(ScenarioError::ExcessiveExcitation);
        }
        Ok(())
    }

    /// Total time the segment plan occupies (holds plus turn durations).
    /// Simulation beyond this keeps the final heading.
    pub fn plan_duration(&self) -> f64 {
        let mut t = 0.0;
        let mut heading = self.initial_heading;
        for seg in &self.segments {
            match seg {
                Segment::Hold { duration } => t += duration,
                Segment::TurnTo { heading: target } => {
                    let delta = wrap_angle(target - heading);
                    t += delta.abs() / self.turn_rate;
                    heading += delta;
                }
            }
        }
        t
    }
}

/// Commanded-heading profile: piecewise linear in time, continuous
/// (unwrapped) so that turns through +/-pi stay smooth.
#[derive(Debug, Clone)]
struct HeadingProfile {
    /// (start time, start heading, rate); pieces are contiguous.
    pieces: Vec<(f64, f64, f64)>,
    end_time: f64,
    end_heading: f64,
}

impl HeadingProfile {
    fn build(spec: &ScenarioSpec) -> Self {
        let mut pieces = Vec::new();
        let mut t = 0.0;
        let mut heading = spec.initial_heading;
        for seg in &spec.segments {
            match seg {
                Segment::Hold { duration } => {
                    pieces.push((t, heading, 0.0));
                    t += duration;
                }
                Segment::TurnTo { heading: target } => {
                    let delta = wrap_angle(target - heading);
                    if delta != 0.0 {
                        let dt = delta.abs() / spec.turn_rate;
                        pieces.push((t, heading, delta.signum() * spec.turn_rate));
                        t += dt;
                        heading += delta;
                    }
                }
            }
        }
        Self { pieces, end_time: t, end_heading: heading }
    }

    fn heading_at(&self, t: f64) -> f64 {
        if t >= self.end_time {
            return self.end_heading;
        }
        let idx = self.pieces.partition_point(|&(t0, ..)| t0 <= t);
        if idx == 0 {
            return self.pieces.first().map_or(self.end_heading, |&(_, h, _)| h);
        }
        let (t0, h0, rate) = self.pieces[idx - 1];
        h0 + rate * (t - t0)
    }
}

/// Wind components `(V_Nw, V_Ew)` at time `t`.
pub fn wind_at(spec: &ScenarioSpec, t: f64) -> (f64, f64) {
    let mut current: Option<&WindPhase> = None;
    for phase in &spec.wind {
        if phase.start <= t {
            current = Some(phase);
        } else {
            break;
        }
    }
    match current {
        Some(p) => (p.speed * p.heading.cos(), p.speed * p.heading.sin()),
        None => (0.0, 0.0),
    }
}

/// One truth sample.
#[derive(Debug, Clone, Copy)]
pub struct TruthSample {
    pub time: f64,
    /// NED position (m); down is negative altitude.
    pub position: Vec3,
    /// NED ground velocity (m/s).
    pub v_ned: Vec3,
    pub att: EulerAttitude,
    pub wind_n: f64,
    pub wind_e: f64,
    /// True Pitot scale factor, `sqrt(eta) cos(alpha) cos(beta)`.
    pub c_f: f64,
}

/// Instantaneous truth (analytic; no position).
#[derive(Debug, Clone, Copy)]
pub struct TruthPoint {
    pub att: EulerAttitude,
    pub v_ned: Vec3,
    pub wind_n: f64,
    pub wind_e: f64,
    pub c_f: f64,
}

/// Evaluates the ideal-tracking truth at an arbitrary time.
pub fn truth_at(spec: &ScenarioSpec, t: f64) -> Result<TruthPoint, ScenarioError> {
    let profile = HeadingProfile::build(spec);
    truth_point(spec, &profile, t)
}

fn excitation_angles(spec: &ScenarioSpec, t: f64) -> (f64, f64) {
    let omega = 2.0 * PI / spec.excitation.period;
    (
        spec.excitation.alpha_amplitude * (omega * t).sin(),
        spec.excitation.beta_amplitude * (omega * t).cos(),
    )
}

/// True wind components and scale factor at time `t` (the estimation
/// targets). Cheaper than [`truth_at`]: no heading profile is needed.
pub fn truth_wind_state(spec: &ScenarioSpec, t: f64) -> crate::windmodel::WindState {
    let (wind_n, wind_e) = wind_at(spec, t);
    let (alpha, beta) = excitation_angles(spec, t);
    crate::windmodel::WindState::new(wind_n, wind_e, spec.eta.sqrt() * alpha.cos() * beta.cos())
}

fn truth_point(
    spec: &ScenarioSpec,
    profile: &HeadingProfile,
    t: f64,
) -> Result<TruthPoint, ScenarioError> {
    let track = profile.heading_at(t);
    let (alpha, beta) = excitation_angles(spec, t);
    let att = EulerAttitude::new(0.0, alpha, track - beta)?;
    let (wind_n, wind_e) = wind_at(spec, t);
    let v_air = Vec3::new(
        spec.cruise_airspeed * track.cos(),
        spec.cruise_airspeed * track.sin(),
        0.0,
    );
    Ok(TruthPoint {
        att,
        v_ned: v_air + Vec3::new(wind_n, wind_e, 0.0),
        wind_n,
        wind_e,
        c_f: spec.eta.sqrt() * alpha.cos() * beta.cos(),
    })
}

#[derive(Debug, Clone)]
pub struct TruthStream {
    pub rate_hz: u32,
    pub samples: Vec<TruthSample>,
}

impl TruthStream {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate_hz as f64
    }
}

/// Simulates the truth at 100 Hz. Ground position is the trapezoidal
/// integral of the ground velocity.
pub fn simulate_truth(spec: &ScenarioSpec) -> Result<TruthStream, ScenarioError> {
    spec.validate()?;
    let profile = HeadingProfile::build(spec);
    let rate = TRUTH_RATE_HZ;
    let dt = 1.0 / rate as f64;
    let n = (spec.duration * rate as f64).round() as usize;

    let mut samples = Vec::with_capacity(n);
    let mut position = Vec3::new(0.0, 0.0, -spec.altitude);
    let mut prev_v: Option<Vec3> = None;
    for k in 0..n {
        let t = k as f64 / rate as f64;
        let p = truth_point(spec, &profile, t)?;
        if let Some(v0) = prev_v {
            position += (v0 + p.v_ned) * (0.5 * dt);
        }
        prev_v = Some(p.v_ned);
        samples.push(TruthSample {
            time: t,
            position,
            v_ned: p.v_ned,
            att: p.att,
            wind_n: p.wind_n,
            wind_e: p.wind_e,
            c_f: p.c_f,
        });
    }
    Ok(TruthStream { rate_hz: rate, samples })
}

/// Timestamped raw sensor streams.
#[derive(Debug, Clone, Default)]
pub struct SensorStreams {
    pub imu: Vec<(f64, EulerAttitude)>,
    pub gps: Vec<(f64, Vec3)>,
    pub pitot: Vec<(f64, f64)>,
}

fn check_rates(truth: &TruthStream, sensor: u32) -> Result<(), ScenarioError> {
    if truth.rate_hz < sensor {
        return Err(ScenarioError::TruthRateTooLow { truth: truth.rate_hz, sensor });
    }
    Ok(())
}

/// Sample times `k / rate` covering the truth stream, with the zero-order
/// hold index into the truth samples (exact integer arithmetic).
fn sensor_schedule(truth: &TruthStream, rate: u32) -> impl Iterator<Item = (f64, usize)> + '_ {
    let n_truth = truth.samples.len() as u64;
    let truth_rate = truth.rate_hz as u64;
    let count = n_truth * rate as u64 / truth_rate;
    (0..count).map(move |k| {
        let idx = (k * truth_rate / rate as u64) as usize;
        (k as f64 / rate as f64, idx)
    })
}

pub fn synthesize_imu(
    truth: &TruthStream,
    sigma_roll_pitch: f64,
    sigma_yaw: f64,
    seed: u64,
) -> Result<Vec<(f64, EulerAttitude)>, ScenarioError> {
    check_rates(truth, IMU_RATE_HZ)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_rp = Normal::new(0.0, sigma_roll_pitch).expect("sigma checked by validate");
    let n_yaw = Normal::new(0.0, sigma_yaw).expect("sigma checked by validate");
    let mut out = Vec::new();
    for (t, idx) in sensor_schedule(truth, IMU_RATE_HZ) {
        let s = &truth.samples[idx];
        let att = EulerAttitude::new(
            s.att.phi() + n_rp.sample(&mut rng),
            s.att.theta() + n_rp.sample(&mut rng),
            s.att.psi() + n_yaw.sample(&mut rng),
        )?;
        out.push((t, att));
    }
    Ok(out)
}

pub fn synthesize_gps(
    truth: &TruthStream,
    sigma: f64,
    seed: u64,
) -> Result<Vec<(f64, Vec3)>, ScenarioError> {
    check_rates(truth, GPS_RATE_HZ)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma checked by validate");
    Ok(sensor_schedule(truth, GPS_RATE_HZ)
        .map(|(t, idx)| {
            let v = truth.samples[idx].v_ned;
            let noisy = Vec3::new(
                v.x + normal.sample(&mut rng),
                v.y + normal.sample(&mut rng),
                v.z + normal.sample(&mut rng),
            );
            (t, noisy)
        })
        .collect())
}

/// Pitot synthesis runs the full measurement chain: rotate the airspeed into
/// the body frame, square the longitudinal component through the pressure
/// model, take the square root, then add noise. Negative readings are
/// clamped to zero (the probe reports a non-negative root pressure).
pub fn synthesize_pitot(
    truth: &TruthStream,
    eta: f64,
    sigma: f64,
    seed: u64,
) -> Result<Vec<(f64, f64)>, ScenarioError> {
    check_rates(truth, PITOT_RATE_HZ)?;
    let model = PitotModel::new(eta).map_err(|_| ScenarioError::NonPositive("eta"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma checked by validate");
    let mut out = Vec::new();
    for (t, idx) in sensor_schedule(truth, PITOT_RATE_HZ) {
        let s = &truth.samples[idx];
        let v_air_ned = s.v_ned - Vec3::new(s.wind_n, s.wind_e, 0.0);
        let v_air_body = rotation_body_to_ned(&s.att).transpose() * v_air_ned;
        if v_air_body.x < 0.0 {
            return Err(ScenarioError::BackwardFlow(t));
        }
        let dp = airdata::pitot_pressure(v_air_body.x, &model);
        let v_pitot = airdata::pitot_speed(dp).expect("squared pressure is non-negative");
        out.push((t, (v_pitot + normal.sample(&mut rng)).max(0.0)));
    }
    Ok(out)
}

pub fn synthesize_sensors(
    truth: &TruthStream,
    eta: f64,
    noise: &SensorNoise,
    seeds: &SensorSeeds,
) -> Result<SensorStreams, ScenarioError> {
    Ok(SensorStreams {
        imu: synthesize_imu(truth, noise.sigma_roll_pitch, noise.sigma_yaw, seeds.imu)?,
        gps: synthesize_gps(truth, noise.sigma_groundspeed, seeds.gps)?,
        pitot: synthesize_pitot(truth, eta, noise.sigma_pitot, seeds.pitot)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::windmodel::{self, MeasurementFrame, MeasurementVariant, WindState};
    use approx::assert_relative_eq;

    fn straight_spec(duration: f64) -> ScenarioSpec {
        let mut s = ScenarioSpec::new("straight", duration);
        s.segments = vec![Segment::Hold { duration }];
        s
    }

    #[test]
    fn wind_at_follows_the_velocity_direction_convention() {
        let mut s = straight_spec(300.0);
        s.wind = vec![
            WindPhase { start: 0.0, speed: 2.0, heading: PI / 2.0 },
            WindPhase { start: 160.0, speed: 3.0, heading: PI },
        ];
        let (n, e) = wind_at(&s, 10.0);
        assert_relative_eq!(n, 0.0, epsilon = 1e-12);
        assert_relative_eq!(e, 2.0, epsilon = 1e-12);
        let (n, e) = wind_at(&s, 170.0);
        assert_relative_eq!(n, -3.0, epsilon = 1e-12);
        assert_relative_eq!(e, 0.0, epsilon = 1e-12);
        // zero speed gives zero wind for any heading
        s.wind = vec![WindPhase { start: 0.0, speed: 0.0, heading: 1.234 }];
        assert_eq!(wind_at(&s, 5.0), (0.0, 0.0));
    }

    #[test]
    fn straight_flight_velocities() {
        let s = straight_spec(10.0);
        let truth = simulate_truth(&s).unwrap();
        for sample in &truth.samples {
            assert_relative_eq!(sample.v_ned, Vec3::new(7.0, 0.0, 0.0), epsilon = 1e-12);
            assert_eq!(sample.att.psi(), 0.0);
            assert_eq!(sample.c_f, 1.0);
        }

        let mut s = straight_spec(10.0);
        s.wind = vec![WindPhase { start: 0.0, speed: 2.0, heading: PI / 2.0 }];
        let truth = simulate_truth(&s).unwrap();
        for sample in &truth.samples {
            assert_relative_eq!(sample.v_ned, Vec3::new(7.0, 2.0, 0.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn airspeed_magnitude_is_constant() {
        let mut s = scenario_one();
        s.excitation = FlowExcitation { alpha_amplitude: 0.1, beta_amplitude: 0.15, period: 17.0 };
        let truth = simulate_truth(&s).unwrap();
        for sample in truth.samples.iter().step_by(37) {
            let air = sample.v_ned - Vec3::new(sample.wind_n, sample.wind_e, 0.0);
            assert!((air.norm() - 7.0).abs() < 1e-9);
            assert_eq!(sample.v_ned.z, 0.0);
        }
    }

    #[test]
    fn observation_consistency_against_the_measurement_model() {
        // Noiseless frames built from truth must satisfy the observation
        // equations at the true state, including under flow-angle excitation
        // for the squared-pressure row.
        let spec = scenario_one();
        let truth = simulate_truth(&spec).unwrap();
        let model = PitotModel::new(spec.eta).unwrap();
        for s in truth.samples.iter().step_by(101) {
            let v_air_ned = s.v_ned - Vec3::new(s.wind_n, s.wind_e, 0.0);
            let v_air_body = rotation_body_to_ned(&s.att).transpose() * v_air_ned;
            let v_pitot =
                airdata::pitot_speed(airdata::pitot_pressure(v_air_body.x, &model)).unwrap();
            let frame = MeasurementFrame {
                v_pitot,
                v_n: s.v_ned.x,
                v_e: s.v_ned.y,
                v_d: s.v_ned.z,
                att: s.att,
            };
            let state = WindState::new(s.wind_n, s.wind_e, s.c_f);
            let z = windmodel::observe(&state, &frame, MeasurementVariant::ThreeEq, None, 0.01)
                .unwrap();
            assert!((z[0] - v_pitot * v_pitot).abs() < 1e-10, "z1 residual {}", z[0] - v_pitot * v_pitot);
            assert!((z[1] - s.v_ned.x).abs() < 1e-10);
            assert!((z[2] - s.v_ned.y).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_circuits_return_to_start_under_zero_wind() {
        for (name, cfg_segments, legs) in [
            ("square", 4, 90.0),
            ("triangle", 3, 120.0),
        ] {
            let mut s = ScenarioSpec::new(name, 0.0);
            let leg = 40.0;
            for i in 0..cfg_segments {
                s.segments.push(Segment::Hold { duration: leg });
                s.segments
                    .push(Segment::TurnTo { heading: ((i + 1) as f64 * legs).to_radians() });
            }
            s.duration = s.plan_duration();
            let truth = simulate_truth(&s).unwrap();
            let start = truth.samples.first().unwrap().position;
            let end = truth.samples.last().unwrap().position;
            let closure = (end - start).norm();
            assert!(closure < 1.0, "{name}: circuit misses start by {closure} m");
        }
    }

    #[test]
    fn gps_noise_matches_configured_sigma() {
        // Monte Carlo over 1e5 GPS samples (pooled across the three axes):
        // the empirical sigma must sit within 2% of 0.4 m/s.
        let mut s = straight_spec(8350.0);
        s.segments = vec![Segment::Hold { duration: s.duration }];
        let truth = simulate_truth(&s).unwrap();
        let gps = synthesize_gps(&truth, 0.4, 99).unwrap();
        assert!(gps.len() * 3 >= 100_000, "{} samples", gps.len() * 3);
        let mut acc = 0.0;
        let mut count = 0usize;
        for (k, (_, v)) in gps.iter().enumerate() {
            let idx = k * (TRUTH_RATE_HZ / GPS_RATE_HZ) as usize;
            let true_v = truth.samples[idx].v_ned;
            for d in (v - true_v).iter() {
                acc += d * d;
                count += 1;
            }
        }
        let sigma = (acc / count as f64).sqrt();
        assert!((sigma - 0.4).abs() / 0.4 < 0.02, "empirical sigma {sigma}");
    }

    #[test]
    fn zero_noise_streams_equal_truth_and_seeds_reproduce() {
        let spec = scenario_one();
        let truth = simulate_truth(&spec).unwrap();
        let clean = synthesize_sensors(&truth, spec.eta, &SensorNoise::zero(), &spec.seeds).unwrap();
        for (k, (t, att)) in clean.imu.iter().enumerate() {
            let s = &truth.samples[k];
            assert_eq!(*t, s.time);
            assert_eq!(att.psi(), s.att.psi());
        }
        for (k, (_, v)) in clean.gps.iter().enumerate() {
            assert_eq!(*v, truth.samples[k * 25].v_ned);
        }

        let a = synthesize_sensors(&truth, spec.eta, &spec.noise, &spec.seeds).unwrap();
        let b = synthesize_sensors(&truth, spec.eta, &spec.noise, &spec.seeds).unwrap();
        assert_eq!(a.imu.len(), b.imu.len());
        assert!(a.imu.iter().zip(&b.imu).all(|(x, y)| x == y));
        assert!(a.gps.iter().zip(&b.gps).all(|(x, y)| x == y));
        assert!(a.pitot.iter().zip(&b.pitot).all(|(x, y)| x == y));

        let other = SensorSeeds::from_base(2);
        let c = synthesize_sensors(&truth, spec.eta, &spec.noise, &other).unwrap();
        assert!(a.gps.iter().zip(&c.gps).any(|(x, y)| x.1 != y.1));
    }

    #[test]
    fn pitot_reads_scaled_longitudinal_speed() {
        for eta in [0.81, 1.0, 1.21] {
            let mut s = straight_spec(5.0);
            s.eta = eta;
            let truth = simulate_truth(&s).unwrap();
            let pitot = synthesize_pitot(&truth, eta, 0.0, 1).unwrap();
            for (_, v) in pitot {
                assert_relative_eq!(v, eta.sqrt() * 7.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn truth_wind_state_agrees_with_the_full_truth_point() {
        let mut s = scenario_one();
        s.excitation = FlowExcitation { alpha_amplitude: 0.08, beta_amplitude: 0.12, period: 13.0 };
        for k in 0..64 {
            let t = k as f64 * 5.0;
            let wind = truth_wind_state(&s, t);
            let point = truth_at(&s, t).unwrap();
            assert_eq!(wind.v_nw, point.wind_n);
            assert_eq!(wind.v_ew, point.wind_e);
            assert_eq!(wind.c_f, point.c_f);
        }
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let mut s = straight_spec(10.0);
        s.segments = vec![Segment::Hold { duration: -1.0 }];
        assert!(matches!(s.validate(), Err(ScenarioError::BadSegment(_))));

        let mut s = straight_spec(10.0);
        s.wind = vec![
            WindPhase { start: 5.0, speed: 1.0, heading: 0.0 },
            WindPhase { start: 1.0, speed: 1.0, heading: 0.0 },
        ];
        assert!(matches!(s.validate(), Err(ScenarioError::BadWindPhases)));

        let mut s = straight_spec(10.0);
        s.duration = 0.0;
        assert!(matches!(s.validate(), Err(ScenarioError::NonPositive("duration"))));
    }
}

//! Real-time signal path around the estimators.
//!
//! Sensors arrive at their own rates (IMU 100 Hz, GPS 4 Hz, Pitot 18 Hz);
//! the estimators all run on a fixed 16 Hz clock. The scheduler holds the
//! latest sample of each sensor (zero-order hold) and assembles one
//! [`MeasurementFrame`] per tick. The network path is prefiltered with a
//! first-order low-pass (time constant 1.5 s); the filter path consumes the
//! raw held samples unless configured otherwise.

use crate::frames::{wrap_angle, EulerAttitude, FrameError, Vec3};
use crate::neural::{remap_inputs, MlpModel};
use crate::estimators::{EstimatorError, FilterHealth, WindFilter};
use crate::windmodel::{MeasurementFrame, WindState};
use thiserror::Error;

/// All estimators run at 16 Hz.
pub const ESTIMATOR_RATE_HZ: u32 = 16;
/// Exactly 1/16 s.
pub const ESTIMATOR_TICK_PERIOD: f64 = 0.0625;
/// Default prefilter time constant (s).
pub const DEFAULT_PREFILTER_TAU: f64 = 1.5;

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("time constant and sample period must be positive")]
    BadFilterParams,
    #[error("{sensor} sample at t={t} arrives after the next tick at t={tick}")]
    SampleFromFuture { sensor: &'static str, t: f64, tick: f64 },
    #[error("{sensor} samples must be monotone: got t={t} after t={prev}")]
    NonMonotone { sensor: &'static str, t: f64, prev: f64 },
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// First-order low-pass, discretized exactly for a fixed step:
/// `y <- a y + (1 - a) z` with `a = exp(-ts / tau)`. The first sample
/// initializes the state so there is no startup transient.
#[derive(Debug, Clone)]
pub struct LowPass {
    alpha: f64,
    state: Option<f64>,
}

impl LowPass {
    pub fn new(tau: f64, ts: f64) -> Result<Self, PipelineError> {
        if !(tau > 0.0 && ts > 0.0) {
            return Err(PipelineError::BadFilterParams);
        }
        Ok(Self { alpha: (-ts / tau).exp(), state: None })
    }

    pub fn step(&mut self, z: f64) -> f64 {
        let y = match self.state {
            Some(y) => self.alpha * y + (1.0 - self.alpha) * z,
            None => z,
        };
        self.state = Some(y);
        y
    }

    pub fn output(&self) -> Option<f64> {
        self.state
    }

    pub fn reset(&mut self) {
        self.state = None;
    }
}

/// Low-pass for angles: unwraps the input against the previous sample,
/// filters the continuous signal and wraps the output back to `(-pi, pi]`.
#[derive(Debug, Clone)]
struct AngleLowPass {
    inner: LowPass,
    unwrapped: Option<f64>,
}

impl AngleLowPass {
    fn new(tau: f64, ts: f64) -> Result<Self, PipelineError> {
        Ok(Self { inner: LowPass::new(tau, ts)?, unwrapped: None })
    }

    fn step(&mut self, angle: f64) -> f64 {
        let continuous = match self.unwrapped {
            Some(prev) => prev + wrap_angle(angle - prev),
            None => angle,
        };
        self.unwrapped = Some(continuous);
        wrap_angle(self.inner.step(continuous))
    }
}

/// Scheduler options.
#[derive(Debug, Clone)]
pub struct SchedulerConfig {
    /// Prefilter time constant for the network path.
    pub prefilter_tau: f64,
    /// Also low-pass the frames handed to the Kalman filters (off by
    /// default; the filters consume raw held samples).
    pub filter_estimator_inputs: bool,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self { prefilter_tau: DEFAULT_PREFILTER_TAU, filter_estimator_inputs: false }
    }
}

/// The two frames assembled at one 16 Hz tick.
#[derive(Debug, Clone, Copy)]
pub struct TickFrames {
    pub time: f64,
    /// Raw held samples (filter path).
    pub estimator: MeasurementFrame,
    /// Low-passed samples (network path).
    pub network: MeasurementFrame,
}

#[derive(Debug, Clone)]
struct ChannelFilters {
    v_pitot: LowPass,
    v_n: LowPass,
    v_e: LowPass,
    v_d: LowPass,
    phi: AngleLowPass,
    theta: LowPass,
    psi: AngleLowPass,
}

impl ChannelFilters {
    fn new(tau: f64) -> Result<Self, PipelineError> {
        let ts = ESTIMATOR_TICK_PERIOD;
        Ok(Self {
            v_pitot: LowPass::new(tau, ts)?,
            v_n: LowPass::new(tau, ts)?,
            v_e: LowPass::new(tau, ts)?,
            v_d: LowPass::new(tau, ts)?,
            phi: AngleLowPass::new(tau, ts)?,
            theta: LowPass::new(tau, ts)?,
            psi: AngleLowPass::new(tau, ts)?,
        })
    }

    fn step(&mut self, raw: &MeasurementFrame) -> Result<MeasurementFrame, FrameError> {
        Ok(MeasurementFrame {
            v_pitot: self.v_pitot.step(raw.v_pitot),
            v_n: self.v_n.step(raw.v_n),
            v_e: self.v_e.step(raw.v_e),
            v_d: self.v_d.step(raw.v_d),
            att: EulerAttitude::new(
                self.phi.step(raw.att.phi()),
                self.theta.step(raw.att.theta()),
                self.psi.step(raw.att.psi()),
            )?,
        })
    }
}

/// Multi-rate sample-and-hold onto the 16 Hz estimator clock.
///
/// Push sensor samples (timestamps must be monotone per sensor and must not
/// run ahead of the next tick), then call [`RateScheduler::try_tick`] once
/// per tick. Ticks are withheld (`Ok(None)`) until every sensor has reported
/// at least once.
#[derive(Debug, Clone)]
pub struct RateScheduler {
    config: SchedulerConfig,
    tick_index: u64,
    latest_imu: Option<(f64, EulerAttitude)>,
    latest_gps: Option<(f64, Vec3)>,
    latest_pitot: Option<(f64, f64)>,
    network_filters: ChannelFilters,
    estimator_filters: Option<ChannelFilters>,
}

impl RateScheduler {
    pub fn new(config: SchedulerConfig) -> Result<Self, PipelineError> {
        let network_filters = ChannelFilters::new(config.prefilter_tau)?;
        let estimator_filters = if config.filter_estimator_inputs {
            Some(ChannelFilters::new(config.prefilter_tau)?)
        } else {
            None
        };
        Ok(Self {
            config,
            tick_index: 0,
            latest_imu: None,
            latest_gps: None,
            latest_pitot: None,
            network_filters,
            estimator_filters,
        })
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.config
    }

    /// Time of the tick the next `try_tick` call will produce.
    pub fn next_tick_time(&self) -> f64 {
        self.tick_index as f64 * ESTIMATOR_TICK_PERIOD
    }

    /// Timestamps of the currently held samples (imu, gps, pitot).
    pub fn held_times(&self) -> (Option<f64>, Option<f64>, Option<f64>) {
        (
            self.latest_imu.map(|(t, _)| t),
            self.latest_gps.map(|(t, _)| t),
            self.latest_pitot.map(|(t, _)| t),
        )
    }

    fn check_push(
        sensor: &'static str,
        t: f64,
        prev: Option<f64>,
        tick: f64,
    ) -> Result<(), PipelineError> {
        if let Some(p) = prev {
            if t < p {
                return Err(PipelineError::NonMonotone { sensor, t, prev: p });
            }
        }
        if t > tick {
            return Err(PipelineError::SampleFromFuture { sensor, t, tick });
        }
        Ok(())
    }

    pub fn push_imu(&mut self, t: f64, att: EulerAttitude) -> Result<(), PipelineError> {
        Self::check_push("imu", t, self.latest_imu.map(|(p, _)| p), self.next_tick_time())?;
        self.latest_imu = Some((t, att));
        Ok(())
    }

    pub fn push_gps(&mut self, t: f64, v_ned: Vec3) -> Result<(), PipelineError> {
        Self::check_push("gps", t, self.latest_gps.map(|(p, _)| p), self.next_tick_time())?;
        self.latest_gps = Some((t, v_ned));
        Ok(())
    }

    pub fn push_pitot(&mut self, t: f64, v_pitot: f64) -> Result<(), PipelineError> {
        Self::check_push("pitot", t, self.latest_pitot.map(|(p, _)| p), self.next_tick_time())?;
        self.latest_pitot = Some((t, v_pitot));
        Ok(())
    }

    /// Produces the frames for the next tick, or `None` while any sensor has
    /// not yet reported. Either way the tick clock advances.
    pub fn try_tick(&mut self) -> Result<Option<TickFrames>, PipelineError> {
        let time = self.next_tick_time();
        self.tick_index += 1;

        let (Some((t_imu, att)), Some((t_gps, gps)), Some((t_pitot, pitot))) =
            (self.latest_imu, self.latest_gps, self.latest_pitot)
        else {
            return Ok(None);
        };
        debug_assert!(t_imu <= time && t_gps <= time && t_pitot <= time);

        let raw = MeasurementFrame {
            v_pitot: pitot,
            v_n: gps.x,
            v_e: gps.y,
            v_d: gps.z,
            att,
        };
        let network = self.network_filters.step(&raw)?;
        let estimator = match &mut self.estimator_filters {
            Some(f) => f.step(&raw)?,
            None => raw,
        };
        Ok(Some(TickFrames { time, estimator, network }))
    }
}

/// Network wind estimate for one (filtered) frame.
pub fn nn_estimate(model: &MlpModel, frame: &MeasurementFrame) -> WindState {
    let y = model.forward(&remap_inputs(frame));
    WindState::new(y[0], y[1], y[2])
}

/// One hybrid step: predict, then update with the network output appended to
/// the measurement vector as a redundant observation of the state.
pub fn hybrid_step(
    filter: &mut WindFilter,
    frame: &MeasurementFrame,
    nn_out: &WindState,
) -> Result<FilterHealth, EstimatorError> {
    filter.step(frame, Some(nn_out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{default_config, WindFilter};
    use crate::windmodel::{self, MeasurementVariant};
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn lowpass_dc_gain_is_one() {
        let mut f = LowPass::new(1.5, 0.0625).unwrap();
        for _ in 0..100 {
            assert_eq!(f.step(3.25), 3.25);
        }
    }

    #[test]
    fn lowpass_step_response() {
        // Exact discretization: after time t the unit step reads 1 - e^{-t/tau}.
        let tau = 1.5;
        let ts = 0.0625;
        let mut f = LowPass::new(tau, ts).unwrap();
        f.step(0.0);
        let mut y = 0.0;
        let steps_per_tau = (tau / ts) as usize; // 24
        for k in 1..=3 * steps_per_tau {
            y = f.step(1.0);
            let t = k as f64 * ts;
            if k % steps_per_tau == 0 {
                let expected = 1.0 - (-t / tau).exp();
                assert!((y - expected).abs() < 1e-6, "t={t}: {y} vs {expected}");
            }
        }
        assert!(y > 0.9);
    }

    #[test]
    fn lowpass_tiny_tau_tracks_input() {
        let mut f = LowPass::new(1e-9, 0.0625).unwrap();
        f.step(0.0);
        let y = f.step(5.0);
        assert!((y - 5.0).abs() < 1e-6);
    }

    #[test]
    fn lowpass_is_bounded_by_input_bound() {
        let mut f = LowPass::new(0.7, 0.0625).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let z = rng.random_range(-4.0..4.0);
            let y = f.step(z);
            assert!(y.abs() <= 4.0 + 1e-12);
        }
    }

    #[test]
    fn lowpass_rejects_bad_params() {
        assert!(LowPass::new(0.0, 0.1).is_err());
        assert!(LowPass::new(1.0, 0.0).is_err());
    }

    #[test]
    fn angle_filter_tracks_across_the_wrap() {
        // A heading dithering around +pi must filter to values near +/-pi,
        // never swinging through zero.
        let mut f = AngleLowPass::new(1.5, 0.0625).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        f.step(PI - 0.05);
        for _ in 0..500 {
            let noise: f64 = rng.random_range(-0.1..0.1);
            let y = f.step(wrap_angle(PI + noise));
            assert!(y.abs() > 2.9, "filtered heading {y} fell off the wrap region");
        }
    }

    fn level(psi: f64) -> EulerAttitude {
        EulerAttitude::level(psi).unwrap()
    }

    /// Drives a scheduler with ideal constant streams at the nominal rates
    /// over `duration` seconds. Returns the tick count, the held GPS
    /// timestamp per tick, and the stream lengths.
    fn run_schedule(duration: f64) -> (usize, Vec<f64>, usize, usize, usize) {
        let imu_times: Vec<f64> = (0..).map(|k| k as f64 / 100.0).take_while(|&t| t < duration).collect();
        let gps_times: Vec<f64> = (0..).map(|k| k as f64 / 4.0).take_while(|&t| t < duration).collect();
        let pitot_times: Vec<f64> = (0..).map(|k| k as f64 / 18.0).take_while(|&t| t < duration).collect();
        let n_ticks = (duration * 16.0).ceil() as u64;

        let mut s = RateScheduler::new(SchedulerConfig::default()).unwrap();
        let mut i_imu = 0;
        let mut i_gps = 0;
        let mut i_pitot = 0;
        let mut gps_used = Vec::new();
        let mut ticks = 0usize;

        for k in 0..n_ticks {
            let t = k as f64 * ESTIMATOR_TICK_PERIOD;
            while i_imu < imu_times.len() && imu_times[i_imu] <= t {
                s.push_imu(imu_times[i_imu], level(0.1)).unwrap();
                i_imu += 1;
            }
            while i_gps < gps_times.len() && gps_times[i_gps] <= t {
                s.push_gps(gps_times[i_gps], Vec3::new(7.0, 0.0, 0.0)).unwrap();
                i_gps += 1;
            }
            while i_pitot < pitot_times.len() && pitot_times[i_pitot] <= t {
                s.push_pitot(pitot_times[i_pitot], 7.0).unwrap();
                i_pitot += 1;
            }
            if let Some(frames) = s.try_tick().unwrap() {
                ticks += 1;
                assert_eq!(frames.time, t);
                gps_used.push(s.latest_gps.unwrap().0);
            }
        }
        (ticks, gps_used, imu_times.len(), gps_times.len(), pitot_times.len())
    }

    #[test]
    fn hundred_second_sample_counts() {
        let (ticks, gps_used, imu, gps, pitot) = run_schedule(100.0);
        assert_eq!(ticks, 1600);
        assert_eq!(imu, 10_000);
        assert_eq!(gps, 400);
        assert_eq!(pitot, 1800);
        // every GPS value is reused by exactly 4 consecutive ticks
        let mut reuse = std::collections::BTreeMap::new();
        for t in gps_used {
            *reuse.entry((t * 1000.0).round() as i64).or_insert(0usize) += 1;
        }
        assert_eq!(reuse.len(), 400);
        assert!(reuse.values().all(|&c| c == 4), "reuse counts {:?}", reuse.values().take(8).collect::<Vec<_>>());
    }

    #[test]
    fn imu_samples_between_ticks_is_six_or_seven() {
        // 100 Hz against 16 Hz: six or seven IMU samples arrive per tick.
        let mut counts = Vec::new();
        let mut prev = 0usize;
        let n_ticks = 160;
        let mut i_imu = 0usize;
        for k in 0..n_ticks {
            let t = k as f64 * ESTIMATOR_TICK_PERIOD;
            while (i_imu as f64) / 100.0 <= t {
                i_imu += 1;
            }
            if k > 0 {
                counts.push(i_imu - prev);
            }
            prev = i_imu;
        }
        assert!(counts.iter().all(|&c| c == 6 || c == 7), "{counts:?}");
        assert!(counts.iter().any(|&c| c == 6));
        assert!(counts.iter().any(|&c| c == 7));
    }

    #[test]
    fn pitot_count_over_any_half_second_window_is_nine() {
        // 18 Hz over an 8-tick (0.5 s) window.
        for window_start in 0..40u64 {
            let w0 = window_start as f64 * 0.5;
            let w1 = w0 + 0.5;
            let count = (0..2000)
                .map(|k| k as f64 / 18.0)
                .filter(|&t| t >= w0 && t < w1)
                .count();
            assert_eq!(count, 9, "window [{w0}, {w1})");
        }
    }

    #[test]
    fn ticks_withheld_until_all_sensors_report() {
        let mut s = RateScheduler::new(SchedulerConfig::default()).unwrap();
        s.push_imu(0.0, level(0.0)).unwrap();
        s.push_pitot(0.0, 7.0).unwrap();
        assert!(s.try_tick().unwrap().is_none()); // no GPS yet
        assert!(s.try_tick().unwrap().is_none());
        s.push_gps(0.125, Vec3::new(7.0, 0.0, 0.0)).unwrap();
        let frames = s.try_tick().unwrap().unwrap();
        assert_eq!(frames.time, 0.125);
        assert_eq!(frames.estimator.v_n, 7.0);
    }

    #[test]
    fn push_rejects_future_and_non_monotone_samples() {
        let mut s = RateScheduler::new(SchedulerConfig::default()).unwrap();
        assert!(matches!(
            s.push_imu(0.5, level(0.0)),
            Err(PipelineError::SampleFromFuture { .. })
        ));
        s.push_imu(0.0, level(0.0)).unwrap();
        s.try_tick().unwrap(); // advances the clock to 0.0625
        s.push_imu(0.06, level(0.0)).unwrap();
        assert!(matches!(
            s.push_imu(0.02, level(0.0)),
            Err(PipelineError::NonMonotone { .. })
        ));
    }

    #[test]
    fn network_path_is_filtered_estimator_path_raw() {
        let mut s = RateScheduler::new(SchedulerConfig::default()).unwrap();
        // step in GPS north speed between ticks
        s.push_imu(0.0, level(0.0)).unwrap();
        s.push_gps(0.0, Vec3::new(0.0, 0.0, 0.0)).unwrap();
        s.push_pitot(0.0, 7.0).unwrap();
        s.try_tick().unwrap().unwrap();
        s.push_gps(0.0625, Vec3::new(4.0, 0.0, 0.0)).unwrap();
        let f = s.try_tick().unwrap().unwrap();
        assert_eq!(f.estimator.v_n, 4.0); // raw zero-order hold
        assert!(f.network.v_n < 0.5); // filtered path lags
        assert!(f.network.v_n > 0.0);
    }

    #[test]
    fn filter_both_paths_when_configured() {
        let mut s = RateScheduler::new(SchedulerConfig {
            filter_estimator_inputs: true,
            ..Default::default()
        })
        .unwrap();
        s.push_imu(0.0, level(0.0)).unwrap();
        s.push_gps(0.0, Vec3::new(0.0, 0.0, 0.0)).unwrap();
        s.push_pitot(0.0, 7.0).unwrap();
        s.try_tick().unwrap().unwrap();
        s.push_gps(0.0625, Vec3::new(4.0, 0.0, 0.0)).unwrap();
        let f = s.try_tick().unwrap().unwrap();
        assert!(f.estimator.v_n < 0.5);
        assert_relative_eq!(f.estimator.v_n, f.network.v_n);
    }

    #[test]
    fn nn_estimate_of_zero_model_is_zero_and_deterministic() {
        let model = MlpModel::zeroed();
        let frame = MeasurementFrame {
            v_pitot: 7.0,
            v_n: 6.0,
            v_e: 2.0,
            v_d: 0.0,
            att: level(0.3),
        };
        assert_eq!(nn_estimate(&model, &frame), WindState::new(0.0, 0.0, 0.0));
        let model = MlpModel::random(9);
        assert_eq!(nn_estimate(&model, &frame), nn_estimate(&model, &frame));
    }

    fn truth_frame(psi: f64, wind: (f64, f64)) -> MeasurementFrame {
        MeasurementFrame {
            v_pitot: 7.0,
            v_n: 7.0 * psi.cos() + wind.0,
            v_e: 7.0 * psi.sin() + wind.1,
            v_d: 0.0,
            att: level(psi),
        }
    }

    #[test]
    fn hybrid_step_with_agreeing_network_has_zero_network_innovation() {
        let mut filter = WindFilter::new(default_config(MeasurementVariant::Hybrid)).unwrap();
        let frame = truth_frame(0.2, (1.0, -1.0));
        // network output equal to the prior: rows 4-6 of the innovation vanish
        let prior = filter.state();
        let health = hybrid_step(&mut filter, &frame, &prior).unwrap();
        for row in 3..6 {
            assert_relative_eq!(health.innovation[row], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn hybrid_with_oracle_network_beats_three_equation_update() {
        // Single constructed step: noisy kinematic rows, exact network rows.
        // The posterior with the network appended must be closer to the truth.
        let truth = WindState::new(2.0, -1.0, 1.0);
        let frame = MeasurementFrame {
            v_pitot: 7.0,
            // heavily corrupted GPS speeds
            v_n: 7.0 + truth.v_nw + 2.5,
            v_e: truth.v_ew - 2.0,
            v_d: 0.0,
            att: level(0.0),
        };
        let mut ekf = WindFilter::new(default_config(MeasurementVariant::ThreeEq)).unwrap();
        let mut hyb = WindFilter::new(default_config(MeasurementVariant::Hybrid)).unwrap();
        ekf.step(&frame, None).unwrap();
        hybrid_step(&mut hyb, &frame, &truth).unwrap();
        let e_ekf = (ekf.state().as_vector() - truth.as_vector()).norm();
        let e_hyb = (hyb.state().as_vector() - truth.as_vector()).norm();
        assert!(e_hyb < e_ekf, "hybrid {e_hyb} not better than {e_ekf}");
    }

    #[test]
    fn hybrid_state_stays_valid_over_a_long_run() {
        let mut filter = WindFilter::new(default_config(MeasurementVariant::Hybrid)).unwrap();
        let nn = WindState::new(0.5, 0.5, 1.0);
        for k in 0..2000 {
            let frame = truth_frame(0.01 * k as f64, (0.5, 0.5));
            hybrid_step(&mut filter, &frame, &nn).unwrap();
            assert!(filter.state().is_finite());
            assert!(filter.state().c_f >= windmodel::DEFAULT_CF_FLOOR);
        }
        let _ = DVector::<f64>::zeros(1);
    }
}

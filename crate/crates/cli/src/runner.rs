//! Scenario runner: one simulation, one set of sensor streams, all selected
//! estimators stepped on identical 16 Hz frames.

use crate::rms::{compute_rms_from_records, RmsReport};
use std::fmt;
use std::time::Instant;
use thiserror::Error;
use windest::estimators::{
    default_config, ConfigError, EstimatorConfig, EstimatorError, WindFilter,
};
use windest::neural::MlpModel;
use windest::pipeline::{
    hybrid_step, nn_estimate, PipelineError, RateScheduler, SchedulerConfig, TickFrames,
    ESTIMATOR_TICK_PERIOD,
};
use windest::simkit::{
    simulate_truth, synthesize_sensors, truth_wind_state, ScenarioError, ScenarioSpec,
    SensorStreams,
};
use windest::windmodel::{MeasurementFrame, MeasurementVariant, WindState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Cho2011,
    Ekf,
    Nn,
    Hybrid,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Cho2011,
        EstimatorKind::Ekf,
        EstimatorKind::Nn,
        EstimatorKind::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Cho2011 => "cho2011",
            EstimatorKind::Ekf => "ekf",
            EstimatorKind::Nn => "nn",
            EstimatorKind::Hybrid => "hybrid",
        }
    }

    pub fn parse(s: &str) -> Result<Self, RunError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cho2011" => Ok(EstimatorKind::Cho2011),
            "ekf" => Ok(EstimatorKind::Ekf),
            "nn" => Ok(EstimatorKind::Nn),
            "hybrid" => Ok(EstimatorKind::Hybrid),
            other => Err(RunError::UnknownEstimator(other.to_string())),
        }
    }

    pub fn needs_network(self) -> bool {
        matches!(self, EstimatorKind::Nn | EstimatorKind::Hybrid)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the network estimate comes from: a trained model, or a synthetic
/// closure (used by fixtures that need a controlled oracle).
pub enum NnSource {
    Model(Box<MlpModel>),
    Synthetic(Box<dyn Fn(f64, &MeasurementFrame) -> WindState>),
}

impl NnSource {
    fn estimate(&self, t: f64, frame: &MeasurementFrame) -> WindState {
        match self {
            NnSource::Model(m) => nn_estimate(m, frame),
            NnSource::Synthetic(f) => f(t, frame),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("unknown estimator `{0}` (expected cho2011 | ekf | nn | hybrid)")]
    UnknownEstimator(String),
    #[error("estimator `{0}` requires a network model (pass one with --model)")]
    MissingModel(&'static str),
    #[error("estimator config for `{kind}` must use the `{expected}` variant")]
    VariantMismatch { kind: &'static str, expected: &'static str },
    #[error("non-finite {what} in estimator `{kind}` at t={t} s")]
    NumericalFailure { kind: &'static str, what: &'static str, t: f64 },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Everything a run needs. Estimator configs default to the stock
/// covariances and can be overridden individually.
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub estimators: Vec<EstimatorKind>,
    pub nn: Option<NnSource>,
    pub cho_config: EstimatorConfig,
    pub ekf_config: EstimatorConfig,
    pub hybrid_config: EstimatorConfig,
    pub scheduler: SchedulerConfig,
    /// Also report RMS over ticks at or after this time.
    pub burn_in: Option<f64>,
}

impl RunConfig {
    pub fn new(scenario: ScenarioSpec, estimators: Vec<EstimatorKind>) -> Self {
        Self {
            scenario,
            estimators,
            nn: None,
            cho_config: default_config(MeasurementVariant::Cho2011),
            ekf_config: default_config(MeasurementVariant::ThreeEq),
            hybrid_config: default_config(MeasurementVariant::Hybrid),
            scheduler: SchedulerConfig::default(),
            burn_in: None,
        }
    }
}

/// One 16 Hz tick: the true wind state and each estimator's estimate,
/// in the order of `RunConfig::estimators`.
#[derive(Debug, Clone)]
pub struct TickRecord {
    pub time: f64,
    pub truth: WindState,
    pub estimates: Vec<WindState>,
}

/// Wall-clock diagnostics (not part of any determinism contract).
#[derive(Debug, Clone)]
pub struct EstimatorTiming {
    pub kind: EstimatorKind,
    pub total_micros: u128,
    pub steps: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub estimators: Vec<EstimatorKind>,
    pub ticks: Vec<TickRecord>,
    pub rms: RmsReport,
    pub timings: Vec<EstimatorTiming>,
}

fn check_finite(filter: &WindFilter, kind: &'static str, t: f64) -> Result<(), RunError> {
    if !filter.state().is_finite() {
        return Err(RunError::NumericalFailure { kind, what: "state", t });
    }
    if !filter.covariance().iter().all(|v| v.is_finite()) {
        return Err(RunError::NumericalFailure { kind, what: "covariance", t });
    }
    Ok(())
}

/// Runs one scenario: simulate the truth, synthesize one set of noisy
/// sensor streams, schedule them onto the 16 Hz clock and step every
/// selected estimator on the identical frames.
pub fn run_scenario(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    let spec = &cfg.scenario;
    spec.validate()?;

    for kind in &cfg.estimators {
        if kind.needs_network() && cfg.nn.is_none() {
            return Err(RunError::MissingModel(kind.name()));
        }
    }
    let expect_variant = |kind: &'static str, cfg: &EstimatorConfig, want: MeasurementVariant,
                          name: &'static str|
     -> Result<(), RunError> {
        if cfg.variant != want {
            return Err(RunError::VariantMismatch { kind, expected: name });
        }
        Ok(())
    };
    expect_variant("cho2011", &cfg.cho_config, MeasurementVariant::Cho2011, "cho2011")?;
    expect_variant("ekf", &cfg.ekf_config, MeasurementVariant::ThreeEq, "ekf")?;
    expect_variant("hybrid", &cfg.hybrid_config, MeasurementVariant::Hybrid, "hybrid")?;

    let truth = simulate_truth(spec)?;
    let SensorStreams { imu, gps, pitot } = synthesize_sensors(&truth, spec.eta, &spec.noise, &spec.seeds)?;

    let mut scheduler = RateScheduler::new(cfg.scheduler.clone())?;
    let n_ticks = (spec.duration * 16.0).floor() as u64;

    let mut cho = WindFilter::new(cfg.cho_config.clone())?;
    let mut ekf = WindFilter::new(cfg.ekf_config.clone())?;
    let mut hybrid = WindFilter::new(cfg.hybrid_config.clone())?;
    let mut timing: Vec<EstimatorTiming> = cfg
        .estimators
        .iter()
        .map(|&kind| EstimatorTiming { kind, total_micros: 0, steps: 0 })
        .collect();

    let mut i_imu = 0;
    let mut i_gps = 0;
    let mut i_pitot = 0;
    let mut ticks = Vec::with_capacity(n_ticks as usize);

    for k in 0..n_ticks {
        let t = k as f64 * ESTIMATOR_TICK_PERIOD;
        while i_imu < imu.len() && imu[i_imu].0 <= t {
            scheduler.push_imu(imu[i_imu].0, imu[i_imu].1)?;
            i_imu += 1;
        }
        while i_gps < gps.len() && gps[i_gps].0 <= t {
            scheduler.push_gps(gps[i_gps].0, gps[i_gps].1)?;
            i_gps += 1;
        }
        while i_pitot < pitot.len() && pitot[i_pitot].0 <= t {
            scheduler.push_pitot(pitot[i_pitot].0, pitot[i_pitot].1)?;
            i_pitot += 1;
        }
        let Some(TickFrames { time, estimator: raw_frame, network: net_frame }) =
            scheduler.try_tick()?
        else {
            continue;
        };

        // One network evaluation per tick, shared by the nn and hybrid
        // estimators so both see the same value.
        let mut nn_out: Option<WindState> = None;
        let mut nn_micros = 0u128;
        if cfg.estimators.iter().any(|k| k.needs_network()) {
            let src = cfg.nn.as_ref().expect("checked above");
            let t0 = Instant::now();
            let out = src.estimate(time, &net_frame);
            nn_micros = t0.elapsed().as_micros();
            if !out.is_finite() {
                return Err(RunError::NumericalFailure { kind: "nn", what: "state", t: time });
            }
            nn_out = Some(out);
        }

        let mut estimates = Vec::with_capacity(cfg.estimators.len());
        for (slot, &kind) in cfg.estimators.iter().enumerate() {
            let t0 = Instant::now();
            let state = match kind {
                EstimatorKind::Cho2011 => {
                    cho.step(&raw_frame, None)?;
                    check_finite(&cho, "cho2011", time)?;
                    cho.state()
                }
                EstimatorKind::Ekf => {
                    ekf.step(&raw_frame, None)?;
                    check_finite(&ekf, "ekf", time)?;
                    ekf.state()
                }
                EstimatorKind::Nn => nn_out.expect("network estimators have a source"),
                EstimatorKind::Hybrid => {
                    let nn = nn_out.expect("network estimators have a source");
                    hybrid_step(&mut hybrid, &raw_frame, &nn)?;
                    check_finite(&hybrid, "hybrid", time)?;
                    hybrid.state()
                }
            };
            let mut micros = t0.elapsed().as_micros();
            match kind {
                EstimatorKind::Nn => micros += nn_micros,
                // the cascade includes the network evaluation unless the nn
                // estimator is also selected and accounts for it
                EstimatorKind::Hybrid if !cfg.estimators.contains(&EstimatorKind::Nn) => {
                    micros += nn_micros
                }
                _ => {}
            }
            timing[slot].total_micros += micros;
            timing[slot].steps += 1;
            estimates.push(state);
        }

        ticks.push(TickRecord { time, truth: truth_wind_state(spec, time), estimates });
    }

    let rms = compute_rms_from_records(&cfg.estimators, &ticks, cfg.burn_in);
    Ok(RunOutput { estimators: cfg.estimators.clone(), ticks, rms, timings: timing })
}

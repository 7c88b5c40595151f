//! The operations behind each CLI subcommand, usable as a library.

use crate::logs::{self, LogError};
use crate::manifest::{sha256_of, ManifestError, RunManifest};
use crate::reference;
use crate::rms::{compute_rms, render_report, RmsError, RmsReport};
use crate::runner::{run_scenario, EstimatorKind, NnSource, RunConfig, RunError};
use std::path::{Path, PathBuf};
use thiserror::Error;
use windest::estimators::{ConfigError, EstimatorConfig};
use windest::neural::{
    load_model, metrics, save_model, train_scg_with, Dataset, NeuralError, TrainOptions,
    TrainReport,
};
use windest::pipeline::{RateScheduler, SchedulerConfig, ESTIMATOR_TICK_PERIOD};
use windest::simkit::{
    self, simulate_truth, synthesize_sensors, training_grid, GridConfig, ScenarioError,
    ScenarioSpec, REFERENCE_SIMULATION_COUNT,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Rms(#[from] RmsError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    BadArgument(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

// ---------------------------------------------------------------------------
// dataset

#[derive(Debug, Clone)]
pub struct DatasetSummary {
    pub scenarios: usize,
    pub rows: usize,
    /// Grid size of the originally published campaign, for comparison.
    pub reference_count: usize,
}

/// Ticks a scenario produces at the 16 Hz estimator rate.
pub fn ticks_in(spec: &ScenarioSpec) -> usize {
    (spec.duration * 16.0).floor() as usize
}

/// Runs every grid scenario, collects the filtered network inputs and true
/// targets at each 16 Hz tick, and writes the dataset file.
pub fn cmd_dataset(
    grid: &GridConfig,
    prefilter_tau: f64,
    out: &Path,
) -> Result<DatasetSummary, CliError> {
    let specs = training_grid(grid);
    let mut dataset = Dataset::new();
    for spec in &specs {
        append_scenario_rows(spec, prefilter_tau, &mut dataset)?;
    }
    dataset.save(out)?;
    Ok(DatasetSummary {
        scenarios: specs.len(),
        rows: dataset.len(),
        reference_count: REFERENCE_SIMULATION_COUNT,
    })
}

/// One scenario's worth of dataset rows: filtered network inputs at each
/// tick paired with the true wind state.
pub fn append_scenario_rows(
    spec: &ScenarioSpec,
    prefilter_tau: f64,
    dataset: &mut Dataset,
) -> Result<usize, CliError> {
    spec.validate()?;
    let truth = simulate_truth(spec)?;
    let streams = synthesize_sensors(&truth, spec.eta, &spec.noise, &spec.seeds)?;
    let mut scheduler = RateScheduler::new(SchedulerConfig {
        prefilter_tau,
        filter_estimator_inputs: false,
    })
    .map_err(RunError::from)?;

    let n_ticks = ticks_in(spec);
    let mut i_imu = 0;
    let mut i_gps = 0;
    let mut i_pitot = 0;
    let mut rows = 0;
    for k in 0..n_ticks {
        let t = k as f64 * ESTIMATOR_TICK_PERIOD;
        while i_imu < streams.imu.len() && streams.imu[i_imu].0 <= t {
            scheduler
                .push_imu(streams.imu[i_imu].0, streams.imu[i_imu].1)
                .map_err(RunError::from)?;
            i_imu += 1;
        }
        while i_gps < streams.gps.len() && streams.gps[i_gps].0 <= t {
            scheduler
                .push_gps(streams.gps[i_gps].0, streams.gps[i_gps].1)
                .map_err(RunError::from)?;
            i_gps += 1;
        }
        while i_pitot < streams.pitot.len() && streams.pitot[i_pitot].0 <= t {
            scheduler
                .push_pitot(streams.pitot[i_pitot].0, streams.pitot[i_pitot].1)
                .map_err(RunError::from)?;
            i_pitot += 1;
        }
        if let Some(frames) = scheduler.try_tick().map_err(RunError::from)? {
            let input = windest::neural::remap_inputs(&frames.network);
            let target = simkit::truth_wind_state(spec, frames.time);
            dataset.push(input, [target.v_nw, target.v_ew, target.c_f], &spec.name);
            rows += 1;
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// train

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub report: TrainReport,
    pub model_path: PathBuf,
}

pub struct TrainArgs {
    pub dataset: PathBuf,
    pub out_model: PathBuf,
    pub epochs: usize,
    pub seed: u64,
    pub report_path: Option<PathBuf>,
    /// Train on raw physical scales instead of the default min-max
    /// normalization.
    pub raw_scale: bool,
}

fn render_train_report(report: &TrainReport) -> String {
    let mut out = String::new();
    out.push_str("# network training report\n");
    let (tr, va, te) = report.split_sizes;
    out.push_str(&format!("# split_sizes = {tr} train / {va} validation / {te} test\n"));
    if let Some(best) = report.best_epoch {
        out.push_str(&format!("# best_validation_epoch = {best}\n"));
    }
    let mut line = |name: &str, m: &Option<windest::neural::SplitMetrics>| {
        if let Some(m) = m {
            let r = m.r_value.map_or("undefined".to_string(), |r| format!("{r:.5}"));
            out.push_str(&format!("{name} mse {:.6} r {r}\n", m.mse));
        }
    };
    line("train", &report.metrics.train);
    line("validation", &report.metrics.validation);
    line("test", &report.metrics.test);
    if report.metrics.zero_target_variance {
        out.push_str("# warning: targets have zero variance; correlation undefined\n");
    }
    if let Some(h) = &report.metrics.histogram {
        out.push_str("# residual histogram (edges then counts)\n");
        let edges: Vec<String> = h.edges.iter().map(|e| format!("{e:.4}")).collect();
        let counts: Vec<String> = h.counts.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("histogram_edges {}\n", edges.join(" ")));
        out.push_str(&format!("histogram_counts {}\n", counts.join(" ")));
    }
    out.push_str("#\n# reference fit from the original 1281-simulation campaign\n");
    out.push_str("# (different simulator and grid; orientation only):\n");
    for f in reference::TRAINING_FIT {
        out.push_str(&format!("# {} r {} mse {}\n", f.split, f.r_value, f.mse));
    }
    out.push_str("#\n# per-epoch mse: epoch train [validation]\n");
    for (i, tmse) in report.epoch_train_mse.iter().enumerate() {
        match report.epoch_validation_mse.get(i) {
            Some(v) => out.push_str(&format!("epoch {i} {tmse} {v}\n")),
            None => out.push_str(&format!("epoch {i} {tmse}\n")),
        }
    }
    out
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainSummary, CliError> {
    let mut dataset = Dataset::load(&args.dataset)?;
    dataset.assign_splits(simkit_split_seed(args.seed));
    let opts = TrainOptions {
        normalize: !args.raw_scale,
        ..TrainOptions::new(args.epochs, args.seed)
    };
    let (model, report) = train_scg_with(&dataset, &opts)?;
    save_model(&model, &args.out_model)?;
    if let Some(path) = &args.report_path {
        std::fs::write(path, render_train_report(&report)).map_err(io_err(path))?;
    }
    Ok(TrainSummary { report, model_path: args.out_model.clone() })
}

/// Split assignment uses a seed decoupled from the weight-initialization
/// seed so the two random choices never share a stream.
pub fn simkit_split_seed(seed: u64) -> u64 {
    seed ^ 0x73706c6974 // "split"
}

/// Evaluates a saved model against a dataset file (no training).
pub fn cmd_eval(
    model_path: &Path,
    dataset_path: &Path,
    seed: u64,
) -> Result<windest::neural::EvalMetrics, CliError> {
    let model = load_model(model_path)?;
    let mut dataset = Dataset::load(dataset_path)?;
    dataset.assign_splits(simkit_split_seed(seed));
    Ok(metrics(&model, &dataset)?)
}

// ---------------------------------------------------------------------------
// run

pub struct RunArgs {
    pub scenario_path: PathBuf,
    pub out_dir: PathBuf,
    pub estimators: Vec<EstimatorKind>,
    pub model_path: Option<PathBuf>,
    pub burn_in: Option<f64>,
    pub filter_estimator_inputs: bool,
    pub dump_truth: bool,
    pub dump_sensors: bool,
    /// Per-estimator config overrides (`key = value` files).
    pub config_paths: Vec<(EstimatorKind, PathBuf)>,
}

impl RunArgs {
    pub fn new(scenario_path: PathBuf, out_dir: PathBuf, estimators: Vec<EstimatorKind>) -> Self {
        Self {
            scenario_path,
            out_dir,
            estimators,
            model_path: None,
            burn_in: None,
            filter_estimator_inputs: false,
            dump_truth: false,
            dump_sensors: false,
            config_paths: Vec::new(),
        }
    }
}

#[derive(Debug)]
pub struct RunSummary {
    pub rms: RmsReport,
    pub report_text: String,
    pub out_dir: PathBuf,
}

pub fn cmd_run(args: &RunArgs) -> Result<RunSummary, CliError> {
    let scenario = ScenarioSpec::load(&args.scenario_path)?;

    let mut cfg = RunConfig::new(scenario, args.estimators.clone());
    cfg.burn_in = args.burn_in;
    cfg.scheduler.filter_estimator_inputs = args.filter_estimator_inputs;

    let mut config_records = Vec::new();
    for (kind, path) in &args.config_paths {
        let loaded = EstimatorConfig::load(path)?;
        match kind {
            EstimatorKind::Cho2011 => cfg.cho_config = loaded,
            EstimatorKind::Ekf => cfg.ekf_config = loaded,
            EstimatorKind::Hybrid => cfg.hybrid_config = loaded,
            EstimatorKind::Nn => {
                return Err(CliError::BadArgument(
                    "the nn estimator has no covariance config".to_string(),
                ))
            }
        }
        config_records.push((*kind, path.clone(), sha256_of(path)?));
    }

    let mut model_sha = None;
    if let Some(path) = &args.model_path {
        let model = load_model(path)?;
        model_sha = Some(sha256_of(path)?);
        cfg.nn = Some(NnSource::Model(Box::new(model)));
    }

    let output = run_scenario(&cfg)?;

    std::fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;
    let estimates_path = args.out_dir.join("estimates.csv");
    logs::write_estimates(&estimates_path, &output)?;
    logs::write_truth_ticks(&args.out_dir.join("truth_ticks.csv"), &output)?;
    let report_text = render_report(&output.rms, &cfg.scenario.name);
    let rms_path = args.out_dir.join("rms.txt");
    std::fs::write(&rms_path, &report_text).map_err(io_err(&rms_path))?;
    logs::write_timings(&args.out_dir.join("timings.txt"), &output)?;

    if args.dump_truth {
        let truth = simulate_truth(&cfg.scenario)?;
        logs::write_truth_full(&args.out_dir.join("truth_full.csv"), &truth)?;
    }
    if args.dump_sensors {
        let truth = simulate_truth(&cfg.scenario)?;
        let streams =
            synthesize_sensors(&truth, cfg.scenario.eta, &cfg.scenario.noise, &cfg.scenario.seeds)?;
        logs::write_sensors(&args.out_dir, &streams)?;
    }

    let manifest = RunManifest {
        scenario_path: args.scenario_path.clone(),
        scenario_sha256: sha256_of(&args.scenario_path)?,
        estimators: args.estimators.clone(),
        model_path: args.model_path.clone(),
        model_sha256: model_sha,
        config_paths: config_records,
        burn_in: args.burn_in,
        filter_estimator_inputs: args.filter_estimator_inputs,
    };
    manifest.save(&args.out_dir.join("manifest.txt"))?;

    Ok(RunSummary { rms: output.rms, report_text, out_dir: args.out_dir.clone() })
}

/// Replays a recorded run into a new output directory after verifying that
/// every recorded input still hashes to the same value.
pub fn cmd_run_manifest(manifest_path: &Path, out_dir: &Path) -> Result<RunSummary, CliError> {
    let manifest = RunManifest::load(manifest_path)?;
    manifest.verify_hashes()?;
    let args = RunArgs {
        scenario_path: manifest.scenario_path.clone(),
        out_dir: out_dir.to_path_buf(),
        estimators: manifest.estimators.clone(),
        model_path: manifest.model_path.clone(),
        burn_in: manifest.burn_in,
        filter_estimator_inputs: manifest.filter_estimator_inputs,
        dump_truth: false,
        dump_sensors: false,
        config_paths: manifest
            .config_paths
            .iter()
            .map(|(k, p, _)| (*k, p.clone()))
            .collect(),
    };
    cmd_run(&args)
}

pub fn run_output_paths(out_dir: &Path) -> [PathBuf; 3] {
    [
        out_dir.join("estimates.csv"),
        out_dir.join("truth_ticks.csv"),
        out_dir.join("rms.txt"),
    ]
}

// ---------------------------------------------------------------------------
// rms

pub fn cmd_rms(
    estimates_path: &Path,
    truth_path: &Path,
    burn_in: Option<f64>,
) -> Result<(RmsReport, String), CliError> {
    let estimates = logs::read_estimates(estimates_path)?;
    let truth = logs::read_truth_ticks(truth_path)?;
    let report = compute_rms(&estimates, &truth, burn_in)?;
    let text = render_report(&report, "from-logs");
    Ok((report, text))
}

// ---------------------------------------------------------------------------
// grid-list

pub struct GridListing {
    pub lines: Vec<String>,
    pub count: usize,
    pub reference_count: usize,
}

pub fn cmd_grid_list(grid: &GridConfig) -> GridListing {
    let specs = training_grid(grid);
    let lines = specs
        .iter()
        .map(|s| format!("{} duration {} s ticks {}", s.name, s.duration, ticks_in(s)))
        .collect();
    GridListing {
        count: specs.len(),
        reference_count: REFERENCE_SIMULATION_COUNT,
        lines,
    }
}

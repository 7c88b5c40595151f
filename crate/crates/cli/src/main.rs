use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use windest::simkit::{GridConfig, SensorNoise};
use windest_cli::commands::{self, RunArgs, TrainArgs};
use windest_cli::runner::EstimatorKind;

#[derive(Parser)]
#[command(
    name = "windest",
    about = "Wind velocity estimation for a robotic airship: dataset generation, network training, scenario runs and RMS comparison",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Base circuits to use: 1 (square) or 2 (square and triangle)
    #[arg(long, default_value_t = 2)]
    plans: usize,
    /// Evenly spaced rotations of each circuit
    #[arg(long, default_value_t = 8)]
    rotations: usize,
    /// Comma-separated wind speeds (m/s)
    #[arg(long, default_value = "0,1,2,3,4,5")]
    speeds: String,
    /// Evenly spaced wind headings
    #[arg(long, default_value_t = 16)]
    headings: usize,
    /// Straight-leg duration (s)
    #[arg(long, default_value_t = 40.0)]
    leg_duration: f64,
    /// Pitot calibration factor
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Turn rate (deg/s)
    #[arg(long, default_value_t = 3.0)]
    turn_rate: f64,
    /// Base seed for per-scenario sensor noise
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Disable sensor noise in the generated scenarios
    #[arg(long)]
    noise_free: bool,
}

impl GridArgs {
    fn to_config(&self) -> Result<GridConfig> {
        let mut speeds = Vec::new();
        for tok in self.speeds.split(',') {
            speeds.push(
                tok.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad wind speed `{tok}`"))?,
            );
        }
        Ok(GridConfig {
            plans: self.plans,
            rotations: self.rotations,
            speeds,
            headings: self.headings,
            leg_duration: self.leg_duration,
            eta: self.eta,
            turn_rate: self.turn_rate.to_radians(),
            noise: if self.noise_free { SensorNoise::zero() } else { SensorNoise::default() },
            base_seed: self.seed,
            ..GridConfig::default()
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a training dataset from the scenario grid
    Dataset {
        #[command(flatten)]
        grid: GridArgs,
        /// Output dataset file
        #[arg(long)]
        out: PathBuf,
        /// Prefilter time constant for the network inputs (s)
        #[arg(long, default_value_t = 1.5)]
        tau: f64,
    },
    /// Train the network on a dataset file
    Train {
        /// Dataset file produced by `dataset`
        #[arg(long)]
        dataset: PathBuf,
        /// Output model file
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5000)]
        epochs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Also write a plain-text training report
        #[arg(long)]
        report: Option<PathBuf>,
        /// Train on raw physical scales (skip min-max normalization)
        #[arg(long)]
        raw_scale: bool,
    },
    /// Run a scenario through the selected estimators
    Run {
        /// Scenario file (omit when replaying a manifest)
        #[arg(long, required_unless_present = "manifest")]
        scenario: Option<PathBuf>,
        /// Replay a recorded run manifest
        #[arg(long, conflicts_with_all = ["scenario", "estimators", "model"])]
        manifest: Option<PathBuf>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated estimators: cho2011, ekf, nn, hybrid
        #[arg(long, default_value = "cho2011,ekf")]
        estimators: Option<String>,
        /// Trained model file (required for nn and hybrid)
        #[arg(long)]
        model: Option<PathBuf>,
        /// Also report RMS excluding ticks before this time (s)
        #[arg(long)]
        burn_in: Option<f64>,
        /// Low-pass the Kalman-filter inputs as well as the network inputs
        #[arg(long)]
        filter_estimator_inputs: bool,
        /// Write the 100 Hz truth log
        #[arg(long)]
        dump_truth: bool,
        /// Write the raw sensor streams
        #[arg(long)]
        dump_sensors: bool,
        /// Estimator config override files
        #[arg(long)]
        config_cho2011: Option<PathBuf>,
        #[arg(long)]
        config_ekf: Option<PathBuf>,
        #[arg(long)]
        config_hybrid: Option<PathBuf>,
    },
    /// Recompute the RMS table from an estimate log and a truth log
    Rms {
        #[arg(long)]
        estimates: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        burn_in: Option<f64>,
        /// Write the table here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the scenario grid without running it
    GridList {
        #[command(flatten)]
        grid: GridArgs,
    },
}

fn parse_estimators(raw: &str) -> Result<Vec<EstimatorKind>> {
    let mut kinds = Vec::new();
    for tok in raw.split(',') {
        let kind = EstimatorKind::parse(tok).map_err(|e| anyhow::anyhow!("{e}"))?;
        if kinds.contains(&kind) {
            bail!("estimator `{kind}` listed twice");
        }
        kinds.push(kind);
    }
    Ok(kinds)
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Dataset { grid, out, tau } => {
            let summary = commands::cmd_dataset(&grid.to_config()?, tau, &out)?;
            println!(
                "wrote {} rows from {} scenarios to {}",
                summary.rows,
                summary.scenarios,
                out.display()
            );
            println!(
                "grid note: this sweep enumerates {} scenarios; the originally published campaign reports {}",
                summary.scenarios, summary.reference_count
            );
        }
        Command::Train { dataset, out, epochs, seed, report, raw_scale } => {
            let summary = commands::cmd_train(&TrainArgs {
                dataset,
                out_model: out.clone(),
                epochs,
                seed,
                report_path: report,
                raw_scale,
            })?;
            let (tr, va, te) = summary.report.split_sizes;
            println!("trained {epochs} epochs on {tr}/{va}/{te} train/validation/test rows");
            if let Some(test) = &summary.report.metrics.test {
                let r = test.r_value.map_or("undefined".into(), |r| format!("{r:.5}"));
                println!("test mse {:.6} r {}", test.mse, r);
            }
            println!("model written to {}", out.display());
        }
        Command::Run {
            scenario,
            manifest,
            out,
            estimators,
            model,
            burn_in,
            filter_estimator_inputs,
            dump_truth,
            dump_sensors,
            config_cho2011,
            config_ekf,
            config_hybrid,
        } => {
            let summary = if let Some(manifest) = manifest {
                commands::cmd_run_manifest(&manifest, &out)?
            } else {
                let kinds = parse_estimators(estimators.as_deref().unwrap_or("cho2011,ekf"))?;
                let mut args = RunArgs::new(scenario.expect("clap enforces presence"), out, kinds);
                args.model_path = model;
                args.burn_in = burn_in;
                args.filter_estimator_inputs = filter_estimator_inputs;
                args.dump_truth = dump_truth;
                args.dump_sensors = dump_sensors;
                if let Some(p) = config_cho2011 {
                    args.config_paths.push((EstimatorKind::Cho2011, p));
                }
                if let Some(p) = config_ekf {
                    args.config_paths.push((EstimatorKind::Ekf, p));
                }
                if let Some(p) = config_hybrid {
                    args.config_paths.push((EstimatorKind::Hybrid, p));
                }
                commands::cmd_run(&args)?
            };
            print!("{}", summary.report_text);
            println!("outputs in {}", summary.out_dir.display());
        }
        Command::Rms { estimates, truth, burn_in, out } => {
            let (_, text) = commands::cmd_rms(&estimates, &truth, burn_in)?;
            match out {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
        Command::GridList { grid } => {
            let listing = commands::cmd_grid_list(&grid.to_config()?);
            for line in &listing.lines {
                println!("{line}");
            }
            println!(
                "total {} scenarios (originally published campaign: {})",
                listing.count, listing.reference_count
            );
        }
    }
    Ok(())
}

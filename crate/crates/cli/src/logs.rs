//! Log files: estimate logs (one row per 16 Hz tick), the matching wind
//! truth at tick times, the 100 Hz full truth and raw sensor streams.
//!
//! All logs are comma-separated with a header row. Numbers are written in
//! shortest round-trip form, so reading a log back reproduces the exact
//! values that were computed.

use crate::runner::{EstimatorKind, RunOutput, TickRecord};
use std::io::Write;
use std::path::Path;
use thiserror::Error;
use windest::simkit::{SensorStreams, TruthStream};
use windest::windmodel::WindState;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path} line {line}: {detail}")]
    Format { path: String, line: usize, detail: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LogError + '_ {
    move |source| LogError::Io { path: path.display().to_string(), source }
}

fn format_err(path: &Path, line: usize, detail: String) -> LogError {
    LogError::Format { path: path.display().to_string(), line, detail }
}

fn parse_field(path: &Path, line: usize, raw: &str) -> Result<f64, LogError> {
    raw.parse()
        .map_err(|_| format_err(path, line, format!("cannot parse `{raw}` as a number")))
}

/// Estimate log contents: per tick, the embedded truth and one wind state
/// per estimator.
#[derive(Debug, Clone)]
pub struct EstimateLog {
    pub estimators: Vec<EstimatorKind>,
    pub ticks: Vec<TickRecord>,
}

pub fn write_estimates(path: &Path, out: &RunOutput) -> Result<(), LogError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    let mut header = String::from("time,true_vnw,true_vew,true_cf");
    for kind in &out.estimators {
        header.push_str(&format!(",{0}_vnw,{0}_vew,{0}_cf", kind.name()));
    }
    writeln!(w, "{header}").map_err(io_err(path))?;
    for tick in &out.ticks {
        let mut row = format!(
            "{},{},{},{}",
            tick.time, tick.truth.v_nw, tick.truth.v_ew, tick.truth.c_f
        );
        for e in &tick.estimates {
            row.push_str(&format!(",{},{},{}", e.v_nw, e.v_ew, e.c_f));
        }
        writeln!(w, "{row}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_estimates(path: &Path) -> Result<EstimateLog, LogError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(path, 1, "empty file".to_string()))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 4 || columns[0] != "time" {
        return Err(format_err(path, 1, format!("unexpected header `{header}`")));
    }
    if (columns.len() - 4) % 3 != 0 {
        return Err(format_err(path, 1, "estimator columns must come in triples".to_string()));
    }
    let mut estimators = Vec::new();
    for chunk in columns[4..].chunks(3) {
        let name = chunk[0].strip_suffix("_vnw").ok_or_else(|| {
            format_err(path, 1, format!("unexpected estimator column `{}`", chunk[0]))
        })?;
        estimators.push(
            EstimatorKind::parse(name)
                .map_err(|e| format_err(path, 1, e.to_string()))?,
        );
    }
    let mut ticks = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(format_err(
                path,
                idx + 1,
                format!("expected {} fields, got {}", columns.len(), fields.len()),
            ));
        }
        let mut vals = Vec::with_capacity(fields.len());
        for f in &fields {
            vals.push(parse_field(path, idx + 1, f)?);
        }
        let estimates = vals[4..]
            .chunks(3)
            .map(|c| WindState::new(c[0], c[1], c[2]))
            .collect();
        ticks.push(TickRecord {
            time: vals[0],
            truth: WindState::new(vals[1], vals[2], vals[3]),
            estimates,
        });
    }
    Ok(EstimateLog { estimators, ticks })
}

/// Wind truth sampled at the estimator ticks: `(time, state)` rows.
#[derive(Debug, Clone)]
pub struct TruthTickLog {
    pub ticks: Vec<(f64, WindState)>,
}

pub fn write_truth_ticks(path: &Path, out: &RunOutput) -> Result<(), LogError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    writeln!(w, "time,vnw,vew,cf").map_err(io_err(path))?;
    for tick in &out.ticks {
        writeln!(w, "{},{},{},{}", tick.time, tick.truth.v_nw, tick.truth.v_ew, tick.truth.c_f)
            .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_truth_ticks(path: &Path) -> Result<TruthTickLog, LogError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "time,vnw,vew,cf" => {}
        Some((_, h)) => return Err(format_err(path, 1, format!("unexpected header `{h}`"))),
        None => return Err(format_err(path, 1, "empty file".to_string())),
    }
    let mut ticks = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(format_err(path, idx + 1, format!("expected 4 fields, got {}", fields.len())));
        }
        let t = parse_field(path, idx + 1, fields[0])?;
        let state = WindState::new(
            parse_field(path, idx + 1, fields[1])?,
            parse_field(path, idx + 1, fields[2])?,
            parse_field(path, idx + 1, fields[3])?,
        );
        ticks.push((t, state));
    }
    Ok(TruthTickLog { ticks })
}

/// Full 100 Hz truth (positions, velocities, attitude, wind) for plotting.
pub fn write_truth_full(path: &Path, truth: &TruthStream) -> Result<(), LogError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    writeln!(w, "time,p_n,p_e,p_d,v_n,v_e,v_d,phi,theta,psi,wind_n,wind_e,cf")
        .map_err(io_err(path))?;
    for s in &truth.samples {
        writeln!(
            w,
            "{:.6},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.time,
            s.position.x,
            s.position.y,
            s.position.z,
            s.v_ned.x,
            s.v_ned.y,
            s.v_ned.z,
            s.att.phi(),
            s.att.theta(),
            s.att.psi(),
            s.wind_n,
            s.wind_e,
            s.c_f
        )
        .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Raw sensor streams, one file per sensor in `dir`.
pub fn write_sensors(dir: &Path, streams: &SensorStreams) -> Result<(), LogError> {
    let imu_path = dir.join("imu.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&imu_path).map_err(io_err(&imu_path))?);
    writeln!(w, "time,phi,theta,psi").map_err(io_err(&imu_path))?;
    for (t, att) in &streams.imu {
        writeln!(w, "{:.6},{},{},{}", t, att.phi(), att.theta(), att.psi())
            .map_err(io_err(&imu_path))?;
    }
    w.flush().map_err(io_err(&imu_path))?;

    let gps_path = dir.join("gps.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&gps_path).map_err(io_err(&gps_path))?);
    writeln!(w, "time,v_n,v_e,v_d").map_err(io_err(&gps_path))?;
    for (t, v) in &streams.gps {
        writeln!(w, "{:.6},{},{},{}", t, v.x, v.y, v.z).map_err(io_err(&gps_path))?;
    }
    w.flush().map_err(io_err(&gps_path))?;

    let pitot_path = dir.join("pitot.csv");
    let mut w =
        std::io::BufWriter::new(std::fs::File::create(&pitot_path).map_err(io_err(&pitot_path))?);
    writeln!(w, "time,v_pitot").map_err(io_err(&pitot_path))?;
    for (t, v) in &streams.pitot {
        writeln!(w, "{:.6},{}", t, v).map_err(io_err(&pitot_path))?;
    }
    w.flush().map_err(io_err(&pitot_path))
}

/// Wall-clock per-step timing diagnostics. Excluded from determinism
/// comparisons.
pub fn write_timings(path: &Path, out: &RunOutput) -> Result<(), LogError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    writeln!(w, "# mean wall-clock per estimator step (diagnostic only)").map_err(io_err(path))?;
    writeln!(w, "estimator,steps,mean_micros").map_err(io_err(path))?;
    for t in &out.timings {
        let mean = if t.steps > 0 { t.total_micros as f64 / t.steps as f64 } else { 0.0 };
        writeln!(w, "{},{},{:.2}", t.kind.name(), t.steps, mean).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

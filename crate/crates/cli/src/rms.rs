//! RMS of the wind estimation errors, per estimator and component, with
//! percentage deltas relative to the single-measurement baseline.

use crate::logs::{EstimateLog, TruthTickLog};
use crate::reference;
use crate::runner::{EstimatorKind, TickRecord};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RmsError {
    #[error("logs are misaligned: {0}")]
    Misaligned(String),
    #[error("estimate log is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentRms {
    pub north: f64,
    pub east: f64,
}

#[derive(Debug, Clone)]
pub struct EstimatorRms {
    pub kind: EstimatorKind,
    /// Full-run RMS, transients included.
    pub full: ComponentRms,
    /// Percentage relative to the cho2011 row, when that estimator ran:
    /// `(rms - rms_baseline) / rms_baseline * 100`, zero for the baseline
    /// itself by construction.
    pub pct_vs_baseline: Option<ComponentRms>,
    /// RMS over ticks at or after the burn-in time, when requested.
    pub after_burn_in: Option<ComponentRms>,
}

#[derive(Debug, Clone)]
pub struct RmsReport {
    pub rows: Vec<EstimatorRms>,
    pub burn_in: Option<f64>,
    pub ticks: usize,
}

fn component_rms(records: &[TickRecord], slot: usize, from_time: f64) -> ComponentRms {
    let mut acc_n = 0.0;
    let mut acc_e = 0.0;
    let mut count = 0usize;
    for r in records {
        if r.time < from_time {
            continue;
        }
        let e = &r.estimates[slot];
        let dn = e.v_nw - r.truth.v_nw;
        let de = e.v_ew - r.truth.v_ew;
        acc_n += dn * dn;
        acc_e += de * de;
        count += 1;
    }
    if count == 0 {
        return ComponentRms { north: f64::NAN, east: f64::NAN };
    }
    ComponentRms {
        north: (acc_n / count as f64).sqrt(),
        east: (acc_e / count as f64).sqrt(),
    }
}

pub fn compute_rms_from_records(
    estimators: &[EstimatorKind],
    records: &[TickRecord],
    burn_in: Option<f64>,
) -> RmsReport {
    let baseline_slot = estimators.iter().position(|&k| k == EstimatorKind::Cho2011);
    let baseline = baseline_slot.map(|slot| component_rms(records, slot, 0.0));

    let rows = estimators
        .iter()
        .enumerate()
        .map(|(slot, &kind)| {
            let full = component_rms(records, slot, 0.0);
            let pct_vs_baseline = baseline.map(|b| {
                if kind == EstimatorKind::Cho2011 {
                    ComponentRms { north: 0.0, east: 0.0 }
                } else {
                    ComponentRms {
                        north: (full.north - b.north) / b.north * 100.0,
                        east: (full.east - b.east) / b.east * 100.0,
                    }
                }
            });
            let after_burn_in = burn_in.map(|t0| component_rms(records, slot, t0));
            EstimatorRms { kind, full, pct_vs_baseline, after_burn_in }
        })
        .collect();
    RmsReport { rows, burn_in, ticks: records.len() }
}

/// RMS from an estimate log checked against a separately written truth log.
/// The two must cover exactly the same tick times.
pub fn compute_rms(
    estimates: &EstimateLog,
    truth: &TruthTickLog,
    burn_in: Option<f64>,
) -> Result<RmsReport, RmsError> {
    if estimates.ticks.is_empty() {
        return Err(RmsError::Empty);
    }
    if estimates.ticks.len() != truth.ticks.len() {
        return Err(RmsError::Misaligned(format!(
            "estimate log has {} ticks, truth log has {}",
            estimates.ticks.len(),
            truth.ticks.len()
        )));
    }
    for (e, t) in estimates.ticks.iter().zip(&truth.ticks) {
        if e.time != t.0 {
            return Err(RmsError::Misaligned(format!(
                "tick times differ: {} vs {}",
                e.time, t.0
            )));
        }
    }
    // re-anchor the records to the truth log's wind values
    let records: Vec<TickRecord> = estimates
        .ticks
        .iter()
        .zip(&truth.ticks)
        .map(|(e, t)| TickRecord { time: e.time, truth: t.1, estimates: e.estimates.clone() })
        .collect();
    Ok(compute_rms_from_records(&estimates.estimators, &records, burn_in))
}

/// Text rendering: machine-readable columns under `#` comment headers, with
/// the published reference table attached as annotation when the scenario is
/// one of the packaged ones.
pub fn render_report(report: &RmsReport, scenario_name: &str) -> String {
    let mut out = String::new();
    out.push_str("# wind estimation error RMS (m/s)\n");
    out.push_str(&format!("# scenario = {scenario_name}\n"));
    out.push_str(&format!("# ticks = {}\n", report.ticks));
    let mut columns = String::from("estimator rms_vnw rms_vew pct_vnw pct_vew");
    if let Some(b) = report.burn_in {
        out.push_str(&format!("# burn_in_s = {b} (extra columns exclude ticks before it)\n"));
        columns.push_str(" rms_vnw_after rms_vew_after");
    }
    out.push_str(&format!("# columns: {columns}\n"));
    for row in &report.rows {
        out.push_str(row.kind.name());
        out.push_str(&format!(" {:.6} {:.6}", row.full.north, row.full.east));
        match &row.pct_vs_baseline {
            Some(p) => out.push_str(&format!(" {:+.1} {:+.1}", p.north, p.east)),
            None => out.push_str(" - -"),
        }
        if let Some(b) = &row.after_burn_in {
            out.push_str(&format!(" {:.6} {:.6}", b.north, b.east));
        }
        out.push('\n');
    }
    if let Some(rows) = reference::rms_reference_for(scenario_name) {
        out.push_str("#\n# reference RMS from the original MATLAB/Simulink evaluation of these\n");
        out.push_str("# estimators (different simulator and trajectory; orientation only):\n");
        for r in rows {
            out.push_str(&format!("# {} {} {}\n", r.estimator, r.north, r.east));
        }
    }
    out
}

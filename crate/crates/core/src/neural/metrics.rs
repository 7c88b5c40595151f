//! Fit quality: per-split mean squared error on the normalized targets, a
//! single pooled correlation coefficient per split (predictions against
//! targets across all three outputs), and a residual histogram.

use super::dataset::{Dataset, Split};
use super::{MlpModel, NeuralError, OUTPUT_DIM};

#[derive(Debug, Clone, PartialEq)]
pub struct SplitMetrics {
    /// Mean squared error on the normalized target scale.
    pub mse: f64,
    /// Pooled correlation between predictions and targets; `None` when
    /// either side has zero variance.
    pub r_value: Option<f64>,
    pub rows: usize,
}

/// Residual histogram: `edges` has one more entry than `counts`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalMetrics {
    pub train: Option<SplitMetrics>,
    pub validation: Option<SplitMetrics>,
    pub test: Option<SplitMetrics>,
    /// Histogram of raw residuals (target minus prediction, physical units)
    /// pooled over the three outputs and the whole dataset.
    pub histogram: Option<Histogram>,
    /// Set when the pooled normalized targets have zero variance.
    pub zero_target_variance: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Training MSE after each epoch.
    pub epoch_train_mse: Vec<f64>,
    /// Validation MSE after each epoch (empty when there is no validation
    /// split).
    pub epoch_validation_mse: Vec<f64>,
    /// Epoch whose parameters were retained (best validation MSE).
    pub best_epoch: Option<usize>,
    /// (train, validation, test) row counts.
    pub split_sizes: (usize, usize, usize),
    pub metrics: EvalMetrics,
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn split_metrics(model: &MlpModel, dataset: &Dataset, split: Split) -> Option<SplitMetrics> {
    let idx = dataset.indices_of(split);
    if idx.is_empty() {
        return None;
    }
    let out_scale = model.output_scaling();
    let mut preds = Vec::with_capacity(idx.len() * OUTPUT_DIM);
    let mut tgts = Vec::with_capacity(idx.len() * OUTPUT_DIM);
    let mut sse = 0.0;
    for &i in &idx {
        let y = model.forward(dataset.input(i));
        let t = dataset.target(i);
        for j in 0..OUTPUT_DIM {
            let yn = (y[j] - out_scale.center[j]) / out_scale.scale[j];
            let tn = (t[j] - out_scale.center[j]) / out_scale.scale[j];
            sse += (yn - tn) * (yn - tn);
            preds.push(yn);
            tgts.push(tn);
        }
    }
    Some(SplitMetrics {
        mse: sse / (idx.len() * OUTPUT_DIM) as f64,
        r_value: pearson(&preds, &tgts),
        rows: idx.len(),
    })
}

fn residual_histogram(model: &MlpModel, dataset: &Dataset) -> Option<Histogram> {
    if dataset.is_empty() {
        return None;
    }
    let mut residuals = Vec::with_capacity(dataset.len() * OUTPUT_DIM);
    for i in 0..dataset.len() {
        let y = model.forward(dataset.input(i));
        let t = dataset.target(i);
        for j in 0..OUTPUT_DIM {
            residuals.push(t[j] - y[j]);
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &r in &residuals {
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return None;
    }
    if hi <= lo {
        // all residuals identical: widen to a unit span around the value
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let edges: Vec<f64> = (0..=HISTOGRAM_BINS).map(|k| lo + width * k as f64).collect();
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for &r in &residuals {
        let mut bin = ((r - lo) / width) as usize;
        if bin >= HISTOGRAM_BINS {
            bin = HISTOGRAM_BINS - 1; // max residual lands in the last bin
        }
        counts[bin] += 1;
    }
    Some(Histogram { edges, counts })
}

/// Evaluates a model over a labeled dataset.
pub fn metrics(model: &MlpModel, dataset: &Dataset) -> Result<EvalMetrics, NeuralError> {
    metrics_with_model(model, dataset)
}

pub(crate) fn metrics_with_model(
    model: &MlpModel,
    dataset: &Dataset,
) -> Result<EvalMetrics, NeuralError> {
    if dataset.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    if !dataset.splits_assigned() {
        return Err(NeuralError::MissingSplits);
    }
    let out_scale = model.output_scaling();
    let mut pooled = Vec::with_capacity(dataset.len() * OUTPUT_DIM);
    for i in 0..dataset.len() {
        let t = dataset.target(i);
        for (j, &tv) in t.iter().enumerate() {
            pooled.push((tv - out_scale.center[j]) / out_scale.scale[j]);
        }
    }
    let mean = pooled.iter().sum::<f64>() / pooled.len() as f64;
    let variance = pooled.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();

    Ok(EvalMetrics {
        train: split_metrics(model, dataset, Split::Train),
        validation: split_metrics(model, dataset, Split::Validation),
        test: split_metrics(model, dataset, Split::Test),
        histogram: residual_histogram(model, dataset),
        zero_target_variance: variance <= 0.0,
    })
}

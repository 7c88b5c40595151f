//! Feed-forward network estimator: 8 remapped inputs, three sigmoid hidden
//! layers of 24 units each, three linear outputs `(V_Nw, V_Ew, c_f)`.
//!
//! The architecture is fixed. Inputs and targets are normalized to `[-1, 1]`
//! per feature with min/max taken from the training split (raw-scale
//! training is available through [`TrainOptions::normalize`]). Training uses
//! the scaled conjugate gradient method on the full training split; the
//! parameter vector with the best validation error across epochs is the one
//! retained.

mod dataset;
mod metrics;
mod persist;
mod scg;

pub use dataset::{Dataset, Split};
pub use metrics::{metrics, EvalMetrics, Histogram, SplitMetrics, TrainReport};
pub use persist::{load_model, save_model};
pub use scg::{train_scg, train_scg_with, ScgObjective, TrainOptions};

use crate::windmodel::MeasurementFrame;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const INPUT_DIM: usize = 8;
pub const HIDDEN_DIM: usize = 24;
pub const OUTPUT_DIM: usize = 3;

/// Layer widths, input to output.
pub const LAYER_DIMS: [usize; 5] = [INPUT_DIM, HIDDEN_DIM, HIDDEN_DIM, HIDDEN_DIM, OUTPUT_DIM];

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has no split labels; assign splits before training")]
    MissingSplits,
    #[error("dataset line {line}: {detail}")]
    DatasetFormat { line: usize, detail: String },
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-feature affine normalization `(x - center) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaling {
    pub center: DVector<f64>,
    pub scale: DVector<f64>,
}

impl FeatureScaling {
    pub fn identity(dim: usize) -> Self {
        Self {
            center: DVector::zeros(dim),
            scale: DVector::from_element(dim, 1.0),
        }
    }

    /// Min-max scaling onto `[-1, 1]` fitted column-wise. Constant columns
    /// keep scale 1 so the invariant `scale > 0` holds.
    pub fn fit_minmax(data: &DMatrix<f64>) -> Self {
        let dim = data.ncols();
        let mut center = DVector::zeros(dim);
        let mut scale = DVector::from_element(dim, 1.0);
        for j in 0..dim {
            let col = data.column(j);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &v in col.iter() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if data.nrows() > 0 {
                center[j] = 0.5 * (hi + lo);
                let half = 0.5 * (hi - lo);
                scale[j] = if half > 0.0 { half } else { 1.0 };
            }
        }
        Self { center, scale }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn normalize(&self, x: &mut DVector<f64>) {
        for j in 0..x.len() {
            x[j] = (x[j] - self.center[j]) / self.scale[j];
        }
    }

    pub fn denormalize(&self, x: &mut DVector<f64>) {
        for j in 0..x.len() {
            x[j] = x[j] * self.scale[j] + self.center[j];
        }
    }

    /// Normalizes a row-major data matrix column-wise in place.
    pub fn normalize_columns(&self, data: &mut DMatrix<f64>) {
        for j in 0..data.ncols() {
            let c = self.center[j];
            let s = self.scale[j];
            for v in data.column_mut(j).iter_mut() {
                *v = (*v - c) / s;
            }
        }
    }
}

/// The network: fixed `8 -> 24 -> 24 -> 24 -> 3` architecture plus the
/// input/output normalization fitted at training time.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// Layer weight matrices: 24x8, 24x24, 24x24, 3x24.
    weights: Vec<DMatrix<f64>>,
    /// Layer biases: 24, 24, 24, 3.
    biases: Vec<DVector<f64>>,
    input_scaling: FeatureScaling,
    output_scaling: FeatureScaling,
}

impl MlpModel {
    /// All-zero parameters, identity normalization.
    pub fn zeroed() -> Self {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..4 {
            weights.push(DMatrix::zeros(LAYER_DIMS[l + 1], LAYER_DIMS[l]));
            biases.push(DVector::zeros(LAYER_DIMS[l + 1]));
        }
        Self {
            weights,
            biases,
            input_scaling: FeatureScaling::identity(INPUT_DIM),
            output_scaling: FeatureScaling::identity(OUTPUT_DIM),
        }
    }

    /// Seeded initialization: weights uniform in `[-1/sqrt(fan_in),
    /// 1/sqrt(fan_in)]` per layer, biases zero, identity normalization.
    pub fn random(seed: u64) -> Self {
        let mut model = Self::zeroed();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &mut model.weights {
            let bound = 1.0 / (w.ncols() as f64).sqrt();
            for v in w.iter_mut() {
                *v = rng.random_range(-bound..bound);
            }
        }
        model
    }

    pub fn with_scaling(mut self, input: FeatureScaling, output: FeatureScaling) -> Self {
        assert_eq!(input.dim(), INPUT_DIM);
        assert_eq!(output.dim(), OUTPUT_DIM);
        self.input_scaling = input;
        self.output_scaling = output;
        self
    }

    pub fn input_scaling(&self) -> &FeatureScaling {
        &self.input_scaling
    }

    pub fn output_scaling(&self) -> &FeatureScaling {
        &self.output_scaling
    }

    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[DVector<f64>] {
        &self.biases
    }

    /// Total number of trainable parameters (1491).
    pub fn param_count() -> usize {
        (0..4).map(|l| LAYER_DIMS[l + 1] * LAYER_DIMS[l] + LAYER_DIMS[l + 1]).sum()
    }

    /// Flattens all parameters into one vector (per layer: weights in
    /// column-major order, then biases).
    pub fn params(&self) -> DVector<f64> {
        let mut out = DVector::zeros(Self::param_count());
        let mut at = 0;
        for l in 0..4 {
            out.rows_mut(at, self.weights[l].len())
                .copy_from_slice(self.weights[l].as_slice());
            at += self.weights[l].len();
            out.rows_mut(at, self.biases[l].len())
                .copy_from_slice(self.biases[l].as_slice());
            at += self.biases[l].len();
        }
        out
    }

    /// Replaces all parameters from a flat vector laid out as [`Self::params`].
    pub fn set_params(&mut self, params: &DVector<f64>) {
        assert_eq!(params.len(), Self::param_count());
        let mut at = 0;
        for l in 0..4 {
            let n = self.weights[l].len();
            self.weights[l].as_mut_slice().copy_from_slice(params.as_slice()[at..at + n].as_ref());
            at += n;
            let n = self.biases[l].len();
            self.biases[l].as_mut_slice().copy_from_slice(params.as_slice()[at..at + n].as_ref());
            at += n;
        }
    }

    pub(crate) fn from_parts(
        weights: Vec<DMatrix<f64>>,
        biases: Vec<DVector<f64>>,
        input_scaling: FeatureScaling,
        output_scaling: FeatureScaling,
    ) -> Self {
        Self { weights, biases, input_scaling, output_scaling }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Network output on the normalized scale for a normalized input.
    pub fn forward_normalized(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut a = x.clone();
        for l in 0..3 {
            a = &self.weights[l] * a + &self.biases[l];
            a.apply(|v| *v = sigmoid(*v));
        }
        &self.weights[3] * a + &self.biases[3]
    }

    /// Full forward pass: normalize the input, run the network, denormalize
    /// the output back to physical units.
    pub fn forward(&self, input: &[f64; INPUT_DIM]) -> [f64; OUTPUT_DIM] {
        let mut x = DVector::from_row_slice(input);
        self.input_scaling.normalize(&mut x);
        let mut y = self.forward_normalized(&x);
        self.output_scaling.denormalize(&mut y);
        [y[0], y[1], y[2]]
    }
}

/// Remaps a sensor frame into the 8 network inputs, in this exact order:
/// `(V_pitot^2, V_D^2, V_N, V_E, V_E^2, V_N^2,
///   V_pitot cos(psi) cos(theta), V_pitot sin(psi) cos(theta))`.
pub fn remap_inputs(frame: &MeasurementFrame) -> [f64; INPUT_DIM] {
    let c_th = frame.att.theta().cos();
    [
        frame.v_pitot * frame.v_pitot,
        frame.v_d * frame.v_d,
        frame.v_n,
        frame.v_e,
        frame.v_e * frame.v_e,
        frame.v_n * frame.v_n,
        frame.v_pitot * frame.att.psi().cos() * c_th,
        frame.v_pitot * frame.att.psi().sin() * c_th,
    ]
}

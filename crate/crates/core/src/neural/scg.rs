//! Scaled conjugate gradient training.
//!
//! Full-batch minimization of the mean squared error on the normalized
//! training split. One epoch is one SCG iteration: conjugate directions with
//! a scalar damping term playing the role of a trust region, no line search.
//! Iterations that do not reduce the error leave the weights unchanged and
//! raise the damping, so the recorded training error is non-increasing.

use super::dataset::{Dataset, Split};
use super::metrics::{metrics_with_model, TrainReport};
use super::{FeatureScaling, MlpModel, NeuralError, INPUT_DIM, LAYER_DIMS, OUTPUT_DIM};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Rows per parallel gradient chunk. Fixed so that the reduction order (and
/// therefore every bit of the result) does not depend on the thread count.
const CHUNK_ROWS: usize = 8192;

const LAMBDA_MAX: f64 = 1e15;

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub epochs: usize,
    pub seed: u64,
    /// Min-max normalize inputs and targets to `[-1, 1]` using the training
    /// split. Disable to train on raw physical scales.
    pub normalize: bool,
    /// Step used for the finite-difference estimate of the curvature along
    /// the search direction.
    pub sigma: f64,
    /// Initial damping.
    pub lambda_init: f64,
}

impl TrainOptions {
    pub fn new(epochs: usize, seed: u64) -> Self {
        Self {
            epochs,
            seed,
            normalize: true,
            sigma: 5e-5,
            lambda_init: 1e-6,
        }
    }
}

/// Mean-squared-error objective over a fixed (normalized) batch, exposing
/// both the loss and its analytic gradient so the gradient can be checked
/// against finite differences independently of the trainer.
pub struct ScgObjective {
    /// Row-major normalized inputs, `n x 8`.
    x: DMatrix<f64>,
    /// Row-major normalized targets, `n x 3`.
    t: DMatrix<f64>,
}

struct UnpackedParams {
    weights: Vec<DMatrix<f64>>,
    /// Transposed weights, kept for the row-major batch products.
    weights_t: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
}

fn unpack(params: &DVector<f64>) -> UnpackedParams {
    let mut weights = Vec::with_capacity(4);
    let mut biases = Vec::with_capacity(4);
    let mut at = 0;
    for l in 0..4 {
        let (rows, cols) = (LAYER_DIMS[l + 1], LAYER_DIMS[l]);
        weights.push(DMatrix::from_column_slice(rows, cols, &params.as_slice()[at..at + rows * cols]));
        at += rows * cols;
        biases.push(DVector::from_column_slice(&params.as_slice()[at..at + rows]));
        at += rows;
    }
    let weights_t = weights.iter().map(|w| w.transpose()).collect();
    UnpackedParams { weights, weights_t, biases }
}

fn add_bias_sigmoid(z: &mut DMatrix<f64>, b: &DVector<f64>) {
    for j in 0..z.ncols() {
        let bj = b[j];
        for v in z.column_mut(j).iter_mut() {
            *v = super::sigmoid(*v + bj);
        }
    }
}

fn add_bias(z: &mut DMatrix<f64>, b: &DVector<f64>) {
    for j in 0..z.ncols() {
        let bj = b[j];
        for v in z.column_mut(j).iter_mut() {
            *v += bj;
        }
    }
}

fn column_sums(m: &DMatrix<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(m.ncols());
    for j in 0..m.ncols() {
        out[j] = m.column(j).sum();
    }
    out
}

impl ScgObjective {
    /// Builds the objective over the training split of a labeled dataset,
    /// fitting the normalization there. Also returns the fitted scalings.
    pub fn from_dataset(
        dataset: &Dataset,
        normalize: bool,
    ) -> Result<(Self, FeatureScaling, FeatureScaling), NeuralError> {
        if dataset.is_empty() {
            return Err(NeuralError::EmptyDataset);
        }
        if !dataset.splits_assigned() {
            return Err(NeuralError::MissingSplits);
        }
        let (mut x, mut t) = dataset.matrices_of(Split::Train);
        let (in_scale, out_scale) = if normalize {
            (FeatureScaling::fit_minmax(&x), FeatureScaling::fit_minmax(&t))
        } else {
            (FeatureScaling::identity(INPUT_DIM), FeatureScaling::identity(OUTPUT_DIM))
        };
        in_scale.normalize_columns(&mut x);
        out_scale.normalize_columns(&mut t);
        Ok((Self { x, t }, in_scale, out_scale))
    }

    /// Objective over explicit already-normalized matrices.
    pub fn from_matrices(x: DMatrix<f64>, t: DMatrix<f64>) -> Self {
        assert_eq!(x.nrows(), t.nrows());
        assert_eq!(x.ncols(), INPUT_DIM);
        assert_eq!(t.ncols(), OUTPUT_DIM);
        Self { x, t }
    }

    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    fn chunk_ranges(&self) -> Vec<(usize, usize)> {
        let n = self.rows();
        let mut ranges = Vec::new();
        let mut at = 0;
        while at < n {
            let len = CHUNK_ROWS.min(n - at);
            ranges.push((at, len));
            at += len;
        }
        ranges
    }

    /// Mean squared error at `params` (mean over rows and outputs).
    pub fn loss(&self, params: &DVector<f64>) -> f64 {
        let up = unpack(params);
        let sse: f64 = self
            .chunk_ranges()
            .into_par_iter()
            .map(|(at, len)| self.chunk_sse(&up, at, len))
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        sse / (self.rows() * OUTPUT_DIM) as f64
    }

    /// Loss together with its gradient with respect to all parameters.
    pub fn loss_and_grad(&self, params: &DVector<f64>) -> (f64, DVector<f64>) {
        let up = unpack(params);
        let partials: Vec<(f64, DVector<f64>)> = self
            .chunk_ranges()
            .into_par_iter()
            .map(|(at, len)| self.chunk_sse_grad(&up, at, len))
            .collect();
        let mut sse = 0.0;
        let mut grad = DVector::zeros(params.len());
        for (s, g) in partials {
            sse += s;
            grad += g;
        }
        let denom = (self.rows() * OUTPUT_DIM) as f64;
        (sse / denom, grad / denom)
    }

    fn chunk_forward(&self, up: &UnpackedParams, at: usize, len: usize) -> [DMatrix<f64>; 4] {
        let x = self.x.rows(at, len);
        let mut a1 = x * &up.weights_t[0];
        add_bias_sigmoid(&mut a1, &up.biases[0]);
        let mut a2 = &a1 * &up.weights_t[1];
        add_bias_sigmoid(&mut a2, &up.biases[1]);
        let mut a3 = &a2 * &up.weights_t[2];
        add_bias_sigmoid(&mut a3, &up.biases[2]);
        let mut a4 = &a3 * &up.weights_t[3];
        add_bias(&mut a4, &up.biases[3]);
        [a1, a2, a3, a4]
    }

    fn chunk_sse(&self, up: &UnpackedParams, at: usize, len: usize) -> f64 {
        let [_, _, _, a4] = self.chunk_forward(up, at, len);
        let mut sse = 0.0;
        let t = self.t.rows(at, len);
        for (y, tv) in a4.iter().zip(t.iter()) {
            let e = y - tv;
            sse += e * e;
        }
        sse
    }

    fn chunk_sse_grad(&self, up: &UnpackedParams, at: usize, len: usize) -> (f64, DVector<f64>) {
        let x = self.x.rows(at, len);
        let t = self.t.rows(at, len);
        let [a1, a2, a3, a4] = self.chunk_forward(up, at, len);

        let mut sse = 0.0;
        let mut d4 = a4;
        for (v, tv) in d4.iter_mut().zip(t.iter()) {
            let e = *v - tv;
            sse += e * e;
            *v = 2.0 * e;
        }

        let g_w4 = d4.tr_mul(&a3); // 3 x 24
        let g_b4 = column_sums(&d4);

        let mut d3 = &d4 * &up.weights[3]; // n x 24
        d3.zip_apply(&a3, |d, a| *d *= a * (1.0 - a));
        let g_w3 = d3.tr_mul(&a2);
        let g_b3 = column_sums(&d3);

        let mut d2 = &d3 * &up.weights[2];
        d2.zip_apply(&a2, |d, a| *d *= a * (1.0 - a));
        let g_w2 = d2.tr_mul(&a1);
        let g_b2 = column_sums(&d2);

        let mut d1 = &d2 * &up.weights[1];
        d1.zip_apply(&a1, |d, a| *d *= a * (1.0 - a));
        let g_w1 = d1.tr_mul(&x);
        let g_b1 = column_sums(&d1);

        let mut grad = DVector::zeros(MlpModel::param_count());
        let mut pos = 0;
        for (gw, gb) in [(g_w1, g_b1), (g_w2, g_b2), (g_w3, g_b3), (g_w4, g_b4)] {
            grad.rows_mut(pos, gw.len()).copy_from_slice(gw.as_slice());
            pos += gw.len();
            grad.rows_mut(pos, gb.len()).copy_from_slice(gb.as_slice());
            pos += gb.len();
        }
        (sse, grad)
    }
}

/// Trains with the default options (normalized features, stock SCG
/// constants).
pub fn train_scg(
    dataset: &Dataset,
    epochs: usize,
    seed: u64,
) -> Result<(MlpModel, TrainReport), NeuralError> {
    train_scg_with(dataset, &TrainOptions::new(epochs, seed))
}

pub fn train_scg_with(
    dataset: &Dataset,
    opts: &TrainOptions,
) -> Result<(MlpModel, TrainReport), NeuralError> {
    let (objective, in_scale, out_scale) = ScgObjective::from_dataset(dataset, opts.normalize)?;

    let mut model = MlpModel::random(opts.seed).with_scaling(in_scale.clone(), out_scale.clone());
    let mut params = model.params();

    // Validation objective shares the training-split normalization.
    let val_objective = {
        let (mut xv, mut tv) = dataset.matrices_of(Split::Validation);
        if xv.nrows() > 0 {
            in_scale.normalize_columns(&mut xv);
            out_scale.normalize_columns(&mut tv);
            Some(ScgObjective::from_matrices(xv, tv))
        } else {
            None
        }
    };

    let mut epoch_train_mse = Vec::with_capacity(opts.epochs);
    let mut epoch_validation_mse = Vec::with_capacity(opts.epochs);
    let mut best: Option<(usize, f64, DVector<f64>)> = None;

    if opts.epochs > 0 {
        let n_params = params.len();
        let (mut f_w, grad0) = objective.loss_and_grad(&params);
        let mut r = -grad0;
        let mut p = r.clone();
        let mut lambda = opts.lambda_init;
        let mut lambda_bar = 0.0;
        let mut success = true;
        let mut delta = 0.0;
        let mut p_norm2 = p.norm_squared();

        for epoch in 0..opts.epochs {
            if r.norm_squared() > 0.0 {
                if success {
                    p_norm2 = p.norm_squared();
                    if p_norm2 == 0.0 {
                        p = r.clone();
                        p_norm2 = p.norm_squared();
                    }
                    let sigma_k = opts.sigma / p_norm2.sqrt();
                    let (_, grad_shift) = objective.loss_and_grad(&(&params + &p * sigma_k));
                    let grad_w = -&r;
                    delta = p.dot(&((grad_shift - grad_w) / sigma_k));
                }

                delta += (lambda - lambda_bar) * p_norm2;
                if delta <= 0.0 {
                    lambda_bar = 2.0 * (lambda - delta / p_norm2);
                    delta = -delta + lambda * p_norm2;
                    lambda = lambda_bar;
                }

                let mu = p.dot(&r);
                if mu <= 0.0 {
                    // Not a descent direction (numerical degeneracy): restart
                    // from steepest descent on the next epoch.
                    p = r.clone();
                    success = true;
                    lambda_bar = 0.0;
                } else {
                    let alpha = mu / delta;
                    let candidate = &params + &p * alpha;
                    let f_new = objective.loss(&candidate);
                    let comparison = 2.0 * delta * (f_w - f_new) / (mu * mu);

                    if comparison >= 0.0 {
                        params = candidate;
                        f_w = f_new;
                        let (_, grad_new) = objective.loss_and_grad(&params);
                        let r_new = -grad_new;
                        lambda_bar = 0.0;
                        success = true;
                        if (epoch + 1) % n_params == 0 {
                            p = r_new.clone();
                        } else {
                            let beta = (r_new.norm_squared() - r_new.dot(&r)) / mu;
                            p = &r_new + &p * beta;
                        }
                        r = r_new;
                        if comparison >= 0.75 {
                            lambda *= 0.25;
                        }
                    } else {
                        lambda_bar = lambda;
                        success = false;
                    }
                    if comparison < 0.25 {
                        lambda += delta * (1.0 - comparison) / p_norm2;
                    }
                    lambda = lambda.min(LAMBDA_MAX);
                }
            }

            epoch_train_mse.push(f_w);
            if let Some(vo) = &val_objective {
                let v = vo.loss(&params);
                epoch_validation_mse.push(v);
                let improved = best.as_ref().is_none_or(|(_, bv, _)| v < *bv);
                if improved {
                    best = Some((epoch, v, params.clone()));
                }
            }
        }
    }

    let best_epoch = best.as_ref().map(|(e, ..)| *e);
    if let Some((_, _, snapshot)) = best {
        params = snapshot;
    }
    model.set_params(&params);

    let eval = metrics_with_model(&model, dataset)?;
    let report = TrainReport {
        epoch_train_mse,
        epoch_validation_mse,
        best_epoch,
        split_sizes: dataset.split_sizes(),
        metrics: eval,
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Linear synthetic task: targets are a fixed linear map of the inputs,
    /// no noise. Realizable by the network, so training must drive the error
    /// to (near) zero; an exact least-squares fit would reach zero.
    fn linear_dataset(rows: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ds = Dataset::new();
        for _ in 0..rows {
            let x: [f64; INPUT_DIM] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let t = [
                x[2] - x[6],
                x[3] - x[7],
                0.2 * x[0] + 0.1 * x[4] - 0.3 * x[5],
            ];
            ds.push(x, t, "linear");
        }
        ds.assign_splits(seed ^ 0x5eed);
        ds
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ds = linear_dataset(3, 9);
        let (obj, _, _) = ScgObjective::from_dataset(&ds, true).unwrap();
        let params = MlpModel::random(4).params();
        let (_, grad) = obj.loss_and_grad(&params);
        let step = 1e-6;
        for i in 0..params.len() {
            let mut hi = params.clone();
            let mut lo = params.clone();
            hi[i] += step;
            lo[i] -= step;
            let fd = (obj.loss(&hi) - obj.loss(&lo)) / (2.0 * step);
            let denom = grad[i].abs().max(fd.abs()).max(1e-3);
            assert!(
                (grad[i] - fd).abs() / denom < 1e-5,
                "param {i}: analytic {} vs fd {fd}",
                grad[i]
            );
        }
    }

    #[test]
    fn linear_task_trains_to_small_error() {
        let ds = linear_dataset(2000, 21);
        let (model, report) = train_scg(&ds, 1000, 3).unwrap();
        let test_mse = report.metrics.test.as_ref().unwrap().mse;
        assert!(test_mse < 1e-4, "test mse {test_mse}");
        assert!(model.is_finite());
        // error is non-increasing across epochs
        for w in report.epoch_train_mse.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "train mse increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let ds = linear_dataset(50, 2);
        let (model, report) = train_scg(&ds, 0, 7).unwrap();
        assert!(report.epoch_train_mse.is_empty());
        assert!(report.epoch_validation_mse.is_empty());
        let (obj, in_s, out_s) = ScgObjective::from_dataset(&ds, true).unwrap();
        let reference = MlpModel::random(7).with_scaling(in_s, out_s);
        assert_eq!(model.params(), reference.params());
        let _ = obj;
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let ds = linear_dataset(300, 5);
        let (m1, r1) = train_scg(&ds, 40, 11).unwrap();
        let (m2, r2) = train_scg(&ds, 40, 11).unwrap();
        assert_eq!(m1.params(), m2.params());
        assert_eq!(r1.epoch_train_mse, r2.epoch_train_mse);
        assert_eq!(r1.epoch_validation_mse, r2.epoch_validation_mse);
        assert_eq!(r1.best_epoch, r2.best_epoch);
    }

    #[test]
    fn constant_targets_flag_zero_variance() {
        let mut ds = Dataset::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..60 {
            let x: [f64; INPUT_DIM] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            ds.push(x, [2.0, 2.0, 2.0], "const");
        }
        ds.assign_splits(3);
        let (_, report) = train_scg(&ds, 10, 1).unwrap();
        assert!(report.metrics.zero_target_variance);
        assert!(report.metrics.train.as_ref().unwrap().r_value.is_none());
    }

    #[test]
    fn training_requires_split_labels() {
        let mut ds = Dataset::new();
        ds.push([0.0; INPUT_DIM], [0.0; OUTPUT_DIM], "x");
        assert!(matches!(train_scg(&ds, 5, 1), Err(NeuralError::MissingSplits)));
        assert!(matches!(
            train_scg(&Dataset::new(), 5, 1),
            Err(NeuralError::EmptyDataset)
        ));
    }
}

//! Extended Kalman filter over the wind state, in three configurations.
//!
//! The process model is the identity (random-walk wind and scale factor), so
//! prediction reduces to `P <- P + Q`. The update stage linearizes the
//! observation equations of [`crate::windmodel`] at the predicted state and
//! applies the standard EKF recursion:
//!
//! ```text
//! y = z - h(x)          innovation
//! C = H P H^T + R       innovation covariance
//! K = P H^T C^-1        gain
//! x <- x + K y
//! P <- (I - K H) P      then re-symmetrized
//! ```
//!
//! A numerically singular `C` skips the update (the filter coasts on the
//! prediction) and flags it in [`FilterHealth`]. After every update the
//! scale factor is clamped to a configurable floor.

use crate::kv::{self, KvFile, KvError};
use crate::windmodel::{
    self, MeasurementFrame, MeasurementVariant, ModelError, WindState, DEFAULT_CF_FLOOR,
};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("matrix {0} is not symmetric")]
    NotSymmetric(&'static str),
    #[error("matrix {0} is not positive semidefinite")]
    NotPositiveSemidefinite(&'static str),
    #[error("measurement covariance is not positive definite")]
    MeasurementCovarianceNotPd,
    #[error("measurement covariance is {got}x{got}, variant requires {want}x{want}")]
    MeasurementDimension { got: usize, want: usize },
    #[error("scale-factor floor must be positive, got {0}")]
    BadFloor(f64),
    #[error("initial state is not finite or has c_f below the floor")]
    BadInitialState,
    #[error("unknown estimator variant `{0}` (expected cho2011 | ekf | hybrid)")]
    UnknownVariant(String),
    #[error("key `{key}` expects {want} values, got {got}")]
    BadLength { key: &'static str, want: usize, got: usize },
    #[error(transparent)]
    Kv(#[from] KvError),
}

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("measurement has dimension {got}, variant requires {want}")]
    MeasurementDimension { got: usize, want: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Full filter configuration: variant, covariances and initial conditions.
#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    pub variant: MeasurementVariant,
    /// Process covariance (3x3).
    pub q: Matrix3<f64>,
    /// Measurement covariance, dimension matching the variant.
    pub r: DMatrix<f64>,
    /// Initial state covariance (3x3).
    pub p0: Matrix3<f64>,
    /// Initial state estimate.
    pub x0: WindState,
    /// Lower bound applied to the scale factor after every update.
    pub c_f_floor: f64,
}

fn symmetric3(m: &Matrix3<f64>) -> bool {
    (m - m.transpose()).abs().max() <= 1e-12 * (1.0 + m.abs().max())
}

fn positive_semidefinite3(m: &Matrix3<f64>) -> bool {
    let eig = m.symmetric_eigenvalues();
    let scale = 1.0 + m.abs().max();
    eig.iter().all(|&l| l >= -1e-12 * scale)
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !symmetric3(&self.q) {
            return Err(ConfigError::NotSymmetric("Q"));
        }
        if !positive_semidefinite3(&self.q) {
            return Err(ConfigError::NotPositiveSemidefinite("Q"));
        }
        if !symmetric3(&self.p0) {
            return Err(ConfigError::NotSymmetric("P0"));
        }
        if !positive_semidefinite3(&self.p0) {
            return Err(ConfigError::NotPositiveSemidefinite("P0"));
        }
        let want = self.variant.measurement_dim();
        if self.r.nrows() != want || self.r.ncols() != want {
            return Err(ConfigError::MeasurementDimension { got: self.r.nrows(), want });
        }
        let r_defect = (&self.r - self.r.transpose()).abs().max();
        if r_defect > 1e-12 * (1.0 + self.r.abs().max()) {
            return Err(ConfigError::NotSymmetric("R"));
        }
        if self.r.clone().cholesky().is_none() {
            return Err(ConfigError::MeasurementCovarianceNotPd);
        }
        if !(self.c_f_floor.is_finite() && self.c_f_floor > 0.0) {
            return Err(ConfigError::BadFloor(self.c_f_floor));
        }
        if !self.x0.is_finite() || self.x0.c_f < self.c_f_floor {
            return Err(ConfigError::BadInitialState);
        }
        Ok(())
    }

    /// Loads a configuration from a `key = value` file.
    ///
    /// Recognized keys (all optional except `variant`):
    ///
    /// ```text
    /// variant  = cho2011 | ekf | hybrid
    /// q_diag   = three process-covariance diagonal entries
    /// r_diag   = measurement-covariance diagonal (dimension of the variant)
    /// p0_diag  = three initial-covariance diagonal entries
    /// x0       = initial (V_Nw, V_Ew, c_f)
    /// cf_floor = scale-factor floor
    /// ```
    ///
    /// Missing keys keep the defaults of [`default_config`] for the variant.
    pub fn from_kv(kv: &KvFile) -> Result<Self, ConfigError> {
        let variant = parse_variant(kv.require("variant")?)?;
        let mut cfg = default_config(variant);
        if let Some(raw) = kv.get("q_diag") {
            let vals = fixed_list("q_diag", raw, 3)?;
            cfg.q = Matrix3::from_diagonal(&Vector3::new(vals[0], vals[1], vals[2]));
        }
        if let Some(raw) = kv.get("r_diag") {
            let vals = fixed_list("r_diag", raw, variant.measurement_dim())?;
            cfg.r = DMatrix::from_diagonal(&DVector::from_vec(vals));
        }
        if let Some(raw) = kv.get("p0_diag") {
            let vals = fixed_list("p0_diag", raw, 3)?;
            cfg.p0 = Matrix3::from_diagonal(&Vector3::new(vals[0], vals[1], vals[2]));
        }
        if let Some(raw) = kv.get("x0") {
            let vals = fixed_list("x0", raw, 3)?;
            cfg.x0 = WindState::new(vals[0], vals[1], vals[2]);
        }
        if let Some(raw) = kv.get("cf_floor") {
            cfg.c_f_floor = kv::parse_f64("cf_floor", raw)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_kv(&KvFile::from_path(path)?)
    }
}

fn fixed_list(key: &'static str, raw: &str, want: usize) -> Result<Vec<f64>, ConfigError> {
    let vals = kv::parse_f64_list(key, raw)?;
    if vals.len() != want {
        return Err(ConfigError::BadLength { key, want, got: vals.len() });
    }
    Ok(vals)
}

pub fn parse_variant(s: &str) -> Result<MeasurementVariant, ConfigError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "cho2011" => Ok(MeasurementVariant::Cho2011),
        "ekf" | "threeeq" => Ok(MeasurementVariant::ThreeEq),
        "hybrid" => Ok(MeasurementVariant::Hybrid),
        other => Err(ConfigError::UnknownVariant(other.to_string())),
    }
}

pub fn variant_name(v: MeasurementVariant) -> &'static str {
    match v {
        MeasurementVariant::Cho2011 => "cho2011",
        MeasurementVariant::ThreeEq => "ekf",
        MeasurementVariant::Hybrid => "hybrid",
    }
}

/// Stock covariance settings for each variant.
///
/// The initial state is zero wind with unit scale factor and a generous
/// wind uncertainty (P0 = diag(4, 4, 0.25)).
pub fn default_config(variant: MeasurementVariant) -> EstimatorConfig {
    let (q, r) = match variant {
        MeasurementVariant::Cho2011 => (
            Vector3::new(1e-3, 1e-4, 5e-6),
            DVector::from_element(1, 163.84),
        ),
        MeasurementVariant::ThreeEq => (
            Vector3::new(1e-4, 1e-4, 5e-7),
            DVector::from_element(3, 40.96),
        ),
        MeasurementVariant::Hybrid => (
            Vector3::new(1e-4, 1e-4, 5e-7),
            DVector::from_element(6, 10.24),
        ),
    };
    EstimatorConfig {
        variant,
        q: Matrix3::from_diagonal(&q),
        r: DMatrix::from_diagonal(&r),
        p0: Matrix3::from_diagonal(&Vector3::new(4.0, 4.0, 0.25)),
        x0: WindState::new(0.0, 0.0, 1.0),
        c_f_floor: DEFAULT_CF_FLOOR,
    }
}

/// Per-update diagnostics.
#[derive(Debug, Clone)]
pub struct FilterHealth {
    pub innovation: DVector<f64>,
    pub innovation_cov: DMatrix<f64>,
    /// Normalized innovation squared, `y^T C^-1 y`.
    pub normalized_innovation_sq: f64,
    /// True when the innovation covariance was numerically singular and the
    /// update was skipped (the filter coasted on the prediction).
    pub skipped: bool,
}

/// Inner update: one Kalman measurement step on explicit matrices.
/// Returns `None` when the innovation covariance has no Cholesky factor.
fn kalman_update(
    x: &Vector3<f64>,
    p: &Matrix3<f64>,
    z: &DVector<f64>,
    z_pred: &DVector<f64>,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Option<(Vector3<f64>, Matrix3<f64>, DVector<f64>, DMatrix<f64>, f64)> {
    let p_dyn = DMatrix::from_column_slice(3, 3, p.as_slice());
    let innovation = z - z_pred;
    let c = h * &p_dyn * h.transpose() + r;
    let chol = c.clone().cholesky()?;

    // K = P H^T C^-1 = (C^-1 (H P))^T since P is symmetric.
    let gain = chol.solve(&(h * &p_dyn)).transpose();
    let dx = &gain * &innovation;
    let x_new = Vector3::new(x[0] + dx[0], x[1] + dx[1], x[2] + dx[2]);

    let ikh = DMatrix::identity(3, 3) - &gain * h;
    let p_new_dyn = ikh * p_dyn;
    let mut p_new = Matrix3::from_column_slice(p_new_dyn.as_slice());
    p_new = (p_new + p_new.transpose()) * 0.5;

    let nis = innovation.dot(&chol.solve(&innovation));
    Some((x_new, p_new, innovation, c, nis))
}

/// A configured wind filter instance. Single-owner and stateful; run one
/// instance per scenario (distinct instances may run in parallel).
#[derive(Debug, Clone)]
pub struct WindFilter {
    config: EstimatorConfig,
    state: WindState,
    cov: Matrix3<f64>,
}

impl WindFilter {
    pub fn new(config: EstimatorConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let state = config.x0;
        let cov = config.p0;
        Ok(Self { config, state, cov })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn state(&self) -> WindState {
        self.state
    }

    pub fn covariance(&self) -> &Matrix3<f64> {
        &self.cov
    }

    /// Resets to the configured initial conditions.
    pub fn reset(&mut self) {
        self.state = self.config.x0;
        self.cov = self.config.p0;
    }

    /// Time update. The process matrix is the identity, so the state is
    /// unchanged and the covariance grows by Q.
    pub fn predict(&mut self) {
        self.cov += self.config.q;
    }

    /// Measurement update with an explicit measurement vector.
    ///
    /// For the hybrid variant `nn_estimate` must carry the network output
    /// (it fixes the predicted value of the appended rows to the state).
    pub fn update(
        &mut self,
        z: &DVector<f64>,
        frame: &MeasurementFrame,
        nn_estimate: Option<&WindState>,
    ) -> Result<FilterHealth, EstimatorError> {
        let want = self.config.variant.measurement_dim();
        if z.len() != want {
            return Err(EstimatorError::MeasurementDimension { got: z.len(), want });
        }
        let z_pred = windmodel::observe(
            &self.state,
            frame,
            self.config.variant,
            nn_estimate,
            self.config.c_f_floor,
        )?;
        let h = windmodel::jacobian(&self.state, frame, self.config.variant, self.config.c_f_floor)?;

        match kalman_update(&self.state.as_vector(), &self.cov, z, &z_pred, &h, &self.config.r) {
            Some((x_new, p_new, innovation, c, nis)) => {
                let mut state = WindState::from_vector(&x_new);
                state.clamp_scale_factor(self.config.c_f_floor);
                self.state = state;
                self.cov = p_new;
                Ok(FilterHealth {
                    innovation,
                    innovation_cov: c,
                    normalized_innovation_sq: nis,
                    skipped: false,
                })
            }
            None => {
                let c = &h * DMatrix::from_column_slice(3, 3, self.cov.as_slice()) * h.transpose()
                    + &self.config.r;
                Ok(FilterHealth {
                    innovation: z - z_pred,
                    innovation_cov: c,
                    normalized_innovation_sq: f64::NAN,
                    skipped: true,
                })
            }
        }
    }

    /// One predict + update cycle on a sensor frame, building the measured
    /// vector from the frame (and the network estimate for the hybrid).
    pub fn step(
        &mut self,
        frame: &MeasurementFrame,
        nn_estimate: Option<&WindState>,
    ) -> Result<FilterHealth, EstimatorError> {
        self.predict();
        let z = windmodel::measurement_vector(frame, self.config.variant, nn_estimate)?;
        self.update(&z, frame, nn_estimate)
    }
}

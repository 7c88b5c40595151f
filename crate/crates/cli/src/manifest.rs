//! Run manifest: every input needed to reproduce a run bit-exactly
//! (scenario file and hash, estimator selection and config files, model file
//! and hash, scheduler flags). Written next to the run outputs; replaying a
//! manifest re-reads the recorded inputs, verifies their hashes and produces
//! byte-identical logs and reports.

use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use thiserror::Error;
use windest::kv::{self, KvFile};

use crate::runner::EstimatorKind;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("manifest: {0}")]
    Format(String),
    #[error("{path} has changed since the manifest was written (sha256 {found} != {recorded})")]
    HashMismatch { path: String, recorded: String, found: String },
    #[error(transparent)]
    Kv(#[from] kv::KvError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ManifestError + '_ {
    move |source| ManifestError::Io { path: path.display().to_string(), source }
}

pub fn sha256_of(path: &Path) -> Result<String, ManifestError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub scenario_path: PathBuf,
    pub scenario_sha256: String,
    pub estimators: Vec<EstimatorKind>,
    pub model_path: Option<PathBuf>,
    pub model_sha256: Option<String>,
    pub config_paths: Vec<(EstimatorKind, PathBuf, String)>,
    pub burn_in: Option<f64>,
    pub filter_estimator_inputs: bool,
}

impl RunManifest {
    pub fn verify_hashes(&self) -> Result<(), ManifestError> {
        let check = |path: &Path, recorded: &str| -> Result<(), ManifestError> {
            let found = sha256_of(path)?;
            if found != recorded {
                return Err(ManifestError::HashMismatch {
                    path: path.display().to_string(),
                    recorded: recorded.to_string(),
                    found,
                });
            }
            Ok(())
        };
        check(&self.scenario_path, &self.scenario_sha256)?;
        if let (Some(p), Some(h)) = (&self.model_path, &self.model_sha256) {
            check(p, h)?;
        }
        for (_, path, hash) in &self.config_paths {
            check(path, hash)?;
        }
        Ok(())
    }

    pub fn to_string_pretty(&self) -> String {
        let mut out = String::new();
        out.push_str("manifest_version = 1\n");
        out.push_str(&format!("scenario_path = {}\n", self.scenario_path.display()));
        out.push_str(&format!("scenario_sha256 = {}\n", self.scenario_sha256));
        let names: Vec<&str> = self.estimators.iter().map(|k| k.name()).collect();
        out.push_str(&format!("estimators = {}\n", names.join(" ")));
        if let (Some(p), Some(h)) = (&self.model_path, &self.model_sha256) {
            out.push_str(&format!("model_path = {}\n", p.display()));
            out.push_str(&format!("model_sha256 = {h}\n"));
        }
        for (kind, path, hash) in &self.config_paths {
            out.push_str(&format!("config_{} = {}\n", kind.name(), path.display()));
            out.push_str(&format!("config_{}_sha256 = {hash}\n", kind.name()));
        }
        if let Some(b) = self.burn_in {
            out.push_str(&format!("burn_in = {b}\n"));
        }
        out.push_str(&format!(
            "filter_estimator_inputs = {}\n",
            self.filter_estimator_inputs
        ));
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        std::fs::write(path, self.to_string_pretty()).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let kv = KvFile::from_path(path)?;
        if kv.get("manifest_version") != Some("1") {
            return Err(ManifestError::Format(
                "missing or unsupported manifest_version".to_string(),
            ));
        }
        let scenario_path = PathBuf::from(kv.require("scenario_path")?);
        let scenario_sha256 = kv.require("scenario_sha256")?.to_string();
        let mut estimators = Vec::new();
        for tok in kv.require("estimators")?.split_whitespace() {
            estimators.push(
                EstimatorKind::parse(tok).map_err(|e| ManifestError::Format(e.to_string()))?,
            );
        }
        let model_path = kv.get("model_path").map(PathBuf::from);
        let model_sha256 = kv.get("model_sha256").map(str::to_string);
        if model_path.is_some() != model_sha256.is_some() {
            return Err(ManifestError::Format(
                "model_path and model_sha256 must appear together".to_string(),
            ));
        }
        let mut config_paths = Vec::new();
        for kind in EstimatorKind::ALL {
            if let Some(p) = kv.get(&format!("config_{}", kind.name())) {
                let hash = kv
                    .require(&format!("config_{}_sha256", kind.name()))?
                    .to_string();
                config_paths.push((kind, PathBuf::from(p), hash));
            }
        }
        let burn_in = match kv.get("burn_in") {
            Some(v) => Some(kv::parse_f64("burn_in", v)?),
            None => None,
        };
        let filter_estimator_inputs = matches!(kv.get("filter_estimator_inputs"), Some("true"));
        Ok(Self {
            scenario_path,
            scenario_sha256,
            estimators,
            model_path,
            model_sha256,
            config_paths,
            burn_in,
            filter_estimator_inputs,
        })
    }
}

//! Error classification, JSON number formatting and the run manifest.

use std::path::{Path, PathBuf};

use bayes_arbiter::calibration::CalibrationError;
use bayes_arbiter::evidence::EvidenceError;
use bayes_arbiter::experiments::format::fmt_g;
use bayes_arbiter::experiments::ExperimentError;
use bayes_arbiter::mixture::MixtureError;
use bayes_arbiter::quadrature::QuadratureError;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_ACCURACY: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("{0}")]
    Accuracy(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
            CliError::Accuracy(_) => EXIT_ACCURACY,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

fn from_quadrature(e: &QuadratureError, msg: String) -> CliError {
    match e {
        QuadratureError::NonIntegrable { .. } => CliError::Degenerate(msg),
        QuadratureError::NotConverged { .. } | QuadratureError::NotANumber { .. } => {
            CliError::Accuracy(msg)
        }
        QuadratureError::InvalidConfig(_) => CliError::Usage(msg),
    }
}

impl From<EvidenceError> for CliError {
    fn from(e: EvidenceError) -> Self {
        let msg = e.to_string();
        match &e {
            EvidenceError::Quadrature(q) => from_quadrature(q, msg),
            _ if e.is_degenerate() => CliError::Degenerate(msg),
            _ => CliError::Usage(msg),
        }
    }
}

impl From<MixtureError> for CliError {
    fn from(e: MixtureError) -> Self {
        let msg = e.to_string();
        match &e {
            MixtureError::Quadrature(q) => from_quadrature(q, msg),
            MixtureError::Degenerate => CliError::Degenerate(msg),
            MixtureError::InvalidConfig(_) | MixtureError::Distribution(_) => CliError::Usage(msg),
            MixtureError::EmptyChain => CliError::Failure(msg),
        }
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        let msg = e.to_string();
        match e {
            CalibrationError::InvalidInput(_) | CalibrationError::Distribution(_) => {
                CliError::Usage(msg)
            }
            CalibrationError::PosteriorUnavailable { .. }
            | CalibrationError::ImproperPrior { .. }
            | CalibrationError::TooManyDegenerate(_) => CliError::Degenerate(msg),
            CalibrationError::Evidence(e) => e.into(),
            CalibrationError::Mixture(e) => e.into(),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::InvalidConfig(m) => CliError::Usage(m),
            ExperimentError::Evidence(e) => e.into(),
            ExperimentError::Mixture(e) => e.into(),
            ExperimentError::Calibration(e) => e.into(),
            e @ ExperimentError::Io { .. } => CliError::Failure(e.to_string()),
        }
    }
}

/// A JSON number carrying at most ten significant digits; non-finite values
/// become strings.
pub fn num(x: f64) -> Value {
    let s = fmt_g(x);
    match s.parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
        Some(n) if x.is_finite() => Value::Number(n),
        _ => Value::String(s),
    }
}

pub fn render(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: String,
    pub config: C,
    pub seed: Value,
    pub artifacts: Vec<ArtifactEntry>,
    pub wall_time_seconds: f64,
}

/// Writes `manifest.json` into `dir` through a temporary file and rename.
pub fn write_manifest<C: Serialize>(dir: &Path, manifest: &RunManifest<C>) -> Result<PathBuf, CliError> {
    let path = dir.join("manifest.json");
    let tmp = dir.join(".manifest.json.tmp");
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Failure(e.to_string()))?;
    text.push('\n');
    std::fs::write(&tmp, text)
        .and_then(|_| std::fs::rename(&tmp, &path))
        .map_err(|e| {
            let _ = std::fs::remove_file(&tmp);
            CliError::Failure(format!("writing {}: {e}", path.display()))
        })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_are_trimmed_to_ten_digits() {
        assert_eq!(num(1.0 / 3.0).to_string(), "0.3333333333");
        assert_eq!(num(4.0).to_string(), "4.0");
        assert_eq!(num(f64::INFINITY), Value::String("inf".into()));
        assert_eq!(num(-1.5e-7).to_string(), "-1.5e-7");
    }

    #[test]
    fn exit_code_contract() {
        let not_converged = QuadratureError::NotConverged { estimate: 0.0, error: 1.0 };
        assert_eq!(CliError::from(EvidenceError::Quadrature(not_converged.clone())).exit_code(), 4);
        assert_eq!(CliError::from(MixtureError::Quadrature(not_converged)).exit_code(), 4);
        assert_eq!(CliError::from(EvidenceError::ImproperEvidence).exit_code(), 3);
        assert_eq!(CliError::from(MixtureError::Degenerate).exit_code(), 3);
        let improper = QuadratureError::NonIntegrable { side: "lower", limit: 1.0 };
        assert_eq!(CliError::from(EvidenceError::Quadrature(improper)).exit_code(), 3);
        assert_eq!(CliError::from(MixtureError::InvalidConfig("x".into())).exit_code(), 2);
        assert_eq!(
            CliError::from(CalibrationError::InvalidInput("x".into())).exit_code(),
            2
        );
        assert_eq!(
            CliError::from(CalibrationError::ImproperPrior { model: "poisson".into() }).exit_code(),
            3
        );
        assert_eq!(CliError::from(ExperimentError::InvalidConfig("x".into())).exit_code(), 2);
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}

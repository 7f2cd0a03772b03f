//! Regression models: the proposed BiLSTM and gradient-boosted trees plus
//! the five classical baselines they are benchmarked against.

pub mod baselines;
pub mod bilstm;
pub mod gbt;
pub mod model_io;
pub mod tree;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("training data invalid: {0}")]
    TrainingData(String),
    #[error("model not fitted")]
    NotFitted,
    #[error("prediction input has {got} features, model expects {expected}")]
    FeatureMismatch { expected: usize, got: usize },
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    TrainingFailed { epoch: usize },
}

/// Common contract for every model in the benchmark.
pub trait Regressor {
    /// Fits on rows `x` (one inner vec per sample) and targets `y`.
    fn fit(&mut self, x: &[Vec<f64>], y: &[f64]) -> Result<(), ModelError>;
    /// Predicts one value per row; requires a prior successful `fit`.
    fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, ModelError>;
    /// Human-readable model name as it appears in reports.
    fn name(&self) -> &'static str;
}

pub(crate) fn validate_training(x: &[Vec<f64>], y: &[f64]) -> Result<usize, ModelError> {
    if x.is_empty() {
        return Err(ModelError::TrainingData("no training rows".into()));
    }
    if x.len() != y.len() {
        return Err(ModelError::TrainingData(format!(
            "{} rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    let d = x[0].len();
    if d == 0 {
        return Err(ModelError::TrainingData("rows have no features".into()));
    }
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(ModelError::TrainingData(format!(
                "row {i} has {} features, expected {d}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::TrainingData(format!(
                "non-finite feature in row {i}"
            )));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::TrainingData("non-finite target".into()));
    }
    Ok(d)
}

pub(crate) fn validate_predict(x: &[Vec<f64>], expected: usize) -> Result<(), ModelError> {
    for row in x {
        if row.len() != expected {
            return Err(ModelError::FeatureMismatch {
                expected,
                got: row.len(),
            });
        }
    }
    Ok(())
}

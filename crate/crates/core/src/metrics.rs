//! Regression metric suite (MSE, RMSE, MAE, MAPE, R²) and Pearson
//! correlation analysis.
//!
//! Degenerate inputs error instead of returning NaN: these values feed
//! hyperparameter-search fitness, where a silent NaN would poison the
//! comparison chain. A partial variant exists for reporting contexts that
//! can tolerate missing MAPE/R².

use thiserror::Error;

use crate::data::{Dataset, FEATURE_COUNT, FEATURE_NAMES, TARGET_NAME};

/// Targets smaller than this (in magnitude) make MAPE undefined.
pub const MAPE_MIN_ABS_TARGET: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {left} observed vs {right} predicted")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 points, got {0}")]
    TooFew(usize),
    #[error("mape undefined: |target| < {MAPE_MIN_ABS_TARGET} at index {index}")]
    MapeUndefined { index: usize },
    #[error("r2 undefined: target variance is zero")]
    R2Undefined,
    #[error("correlation undefined: {0} is constant")]
    CorrelationUndefined(String),
    #[error("dataset has no target column")]
    MissingTargets,
}

/// The five-metric summary for one model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    /// Percent, i.e. (100/N)·Σ|yᵢ−ŷᵢ|/|yᵢ|.
    pub mape: f64,
    pub r2: f64,
}

/// Like [`MetricsRow`] but with MAPE/R² absent when undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialMetrics {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub mape: Option<f64>,
    pub r2: Option<f64>,
}

fn checked_len(a: &[f64], b: &[f64]) -> Result<usize, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(MetricsError::TooFew(a.len()));
    }
    Ok(a.len())
}

/// All metrics that are defined for the pair, never erroring past the
/// basic shape checks.
pub fn regression_metrics_partial(y: &[f64], yhat: &[f64]) -> Result<PartialMetrics, MetricsError> {
    let n = checked_len(y, yhat)? as f64;
    let mut ss_res = 0.0;
    let mut abs_sum = 0.0;
    for (yi, pi) in y.iter().zip(yhat) {
        let d = yi - pi;
        ss_res += d * d;
        abs_sum += d.abs();
    }
    let mse = ss_res / n;
    let mae = abs_sum / n;

    let mape = if y.iter().all(|v| v.abs() >= MAPE_MIN_ABS_TARGET) {
        let s: f64 = y
            .iter()
            .zip(yhat)
            .map(|(yi, pi)| ((yi - pi) / yi).abs())
            .sum();
        Some(100.0 * s / n)
    } else {
        None
    };

    let ybar = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r2 = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);

    Ok(PartialMetrics {
        mse,
        rmse: mse.sqrt(),
        mae,
        mape,
        r2,
    })
}

/// The full five-metric row; errors when MAPE or R² is undefined.
pub fn regression_metrics(y: &[f64], yhat: &[f64]) -> Result<MetricsRow, MetricsError> {
    let p = regression_metrics_partial(y, yhat)?;
    let mape = p.mape.ok_or_else(|| MetricsError::MapeUndefined {
        index: y
            .iter()
            .position(|v| v.abs() < MAPE_MIN_ABS_TARGET)
            .unwrap_or(0),
    })?;
    let r2 = p.r2.ok_or(MetricsError::R2Undefined)?;
    Ok(MetricsRow {
        mse: p.mse,
        rmse: p.rmse,
        mae: p.mae,
        mape,
        r2,
    })
}

/// Pearson correlation coefficient, clamped to [−1, 1] against rounding.
pub fn pearson_corr(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    checked_len(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        cov += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(MetricsError::CorrelationUndefined("first input".into()));
    }
    if syy == 0.0 {
        return Err(MetricsError::CorrelationUndefined("second input".into()));
    }
    Ok((cov / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Labels of the correlation matrix: the seven features, then the target.
pub const CORR_LABELS: [&str; 8] = [
    FEATURE_NAMES[0],
    FEATURE_NAMES[1],
    FEATURE_NAMES[2],
    FEATURE_NAMES[3],
    FEATURE_NAMES[4],
    FEATURE_NAMES[5],
    FEATURE_NAMES[6],
    TARGET_NAME,
];

/// Pairwise Pearson correlations over features plus target.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub values: [[f64; 8]; 8],
}

impl CorrelationMatrix {
    pub fn labels(&self) -> &'static [&'static str; 8] {
        &CORR_LABELS
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    /// CSV form: labels as header and first column, 2-decimal entries
    /// (heatmap annotation precision).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for label in CORR_LABELS {
            out.push(',');
            out.push_str(label);
        }
        out.push('\n');
        for (i, label) in CORR_LABELS.iter().enumerate() {
            out.push_str(label);
            for j in 0..8 {
                // Normalize -0.00 so rounding never flips the sign of zero.
                let mut r = (self.values[i][j] * 100.0).round() / 100.0;
                if r == 0.0 {
                    r = 0.0;
                }
                out.push_str(&format!(",{r:.2}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the 8×8 correlation matrix of a labeled dataset.
pub fn correlation_matrix(ds: &Dataset) -> Result<CorrelationMatrix, MetricsError> {
    let targets = ds.targets().ok_or(MetricsError::MissingTargets)?;
    let mut columns: Vec<Vec<f64>> = (0..FEATURE_COUNT).map(|j| ds.column(j)).collect();
    columns.push(targets.to_vec());
    for (label, col) in CORR_LABELS.iter().zip(&columns) {
        if col.iter().all(|&v| v == col[0]) {
            return Err(MetricsError::CorrelationUndefined(format!(
                "column `{label}`"
            )));
        }
    }
    let mut values = [[0.0; 8]; 8];
    for i in 0..8 {
        values[i][i] = 1.0;
        for j in 0..i {
            let r = pearson_corr(&columns[i], &columns[j])?;
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix { values })
}

//! Dataset schema, CSV ingestion, standardization, splitting, and the
//! embedded/synthetic sample generators.
//!
//! On-disk data is treated as raw; standardization happens in memory and the
//! stats are kept so values can be inverted. All randomness (splits, the
//! synthetic generator) is ChaCha8-seeded and reproducible.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::seeds;

/// Feature columns in schema order.
pub const FEATURE_NAMES: [&str; 7] = [
    "query_complexity",
    "doc_relevance",
    "semantic_similarity",
    "diversity",
    "entity_coverage",
    "redundancy",
    "retrieval_depth",
];

/// Target column name.
pub const TARGET_NAME: &str = "answer_quality";

/// Number of feature columns.
pub const FEATURE_COUNT: usize = 7;

/// Indices (into [`FEATURE_NAMES`]) of the unit-interval ratio features.
pub const RATIO_FEATURES: [usize; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a finite number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("dataset invariant violated: {0}")]
    Invariant(String),
    #[error("failed to access `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("internal configuration error: {0}")]
    Internal(String),
}

/// A table of rows over the seven schema features, optionally labeled.
///
/// Invariants (enforced at construction): every feature value is finite;
/// targets, when present, are finite and cover every row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<[f64; FEATURE_COUNT]>,
    targets: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        features: Vec<[f64; FEATURE_COUNT]>,
        targets: Option<Vec<f64>>,
    ) -> Result<Self, DataError> {
        if features.is_empty() {
            return Err(DataError::EmptyInput("dataset has no rows".into()));
        }
        for (i, row) in features.iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(DataError::Invariant(format!(
                    "non-finite value in row {} column `{}`",
                    i + 1,
                    FEATURE_NAMES[j]
                )));
            }
        }
        if let Some(t) = &targets {
            if t.len() != features.len() {
                return Err(DataError::Invariant(format!(
                    "{} rows but {} targets",
                    features.len(),
                    t.len()
                )));
            }
            if let Some(i) = t.iter().position(|v| !v.is_finite()) {
                return Err(DataError::Invariant(format!(
                    "non-finite target in row {}",
                    i + 1
                )));
            }
        }
        Ok(Self { features, targets })
    }

    pub fn row_count(&self) -> usize {
        self.features.len()
    }

    pub fn feature(&self, row: usize, col: usize) -> f64 {
        self.features[row][col]
    }

    pub fn rows(&self) -> &[[f64; FEATURE_COUNT]] {
        &self.features
    }

    /// Feature rows as owned vectors, the shape regressors consume.
    pub fn feature_rows(&self) -> Vec<Vec<f64>> {
        self.features.iter().map(|r| r.to_vec()).collect()
    }

    /// One feature column in row order.
    pub fn column(&self, col: usize) -> Vec<f64> {
        self.features.iter().map(|r| r[col]).collect()
    }

    pub fn targets(&self) -> Option<&[f64]> {
        self.targets.as_deref()
    }

    /// Rows at `indices`, in the given order (targets carried along).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i]).collect(),
            targets: self
                .targets
                .as_ref()
                .map(|t| indices.iter().map(|&i| t[i]).collect()),
        }
    }
}

/// Per-column mean and sample standard deviation captured by `standardize`.
///
/// A `std` of 0 marks a constant column; `apply` maps such a column to zeros
/// and `invert` restores the recorded mean.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub mean: [f64; FEATURE_COUNT],
    pub std: [f64; FEATURE_COUNT],
}

impl StandardizationStats {
    pub fn apply_row(&self, row: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        let mut out = [0.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            out[j] = if self.std[j] == 0.0 {
                0.0
            } else {
                (row[j] - self.mean[j]) / self.std[j]
            };
        }
        out
    }

    pub fn invert_row(&self, row: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        let mut out = [0.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            out[j] = row[j] * self.std[j] + self.mean[j];
        }
        out
    }

    /// Applies the recorded transform to a whole dataset (targets untouched).
    pub fn apply(&self, ds: &Dataset) -> Dataset {
        Dataset {
            features: ds.features.iter().map(|r| self.apply_row(r)).collect(),
            targets: ds.targets.clone(),
        }
    }

    pub fn invert(&self, ds: &Dataset) -> Dataset {
        Dataset {
            features: ds.features.iter().map(|r| self.invert_row(r)).collect(),
            targets: ds.targets.clone(),
        }
    }
}

/// Train/validation row indices produced by [`split`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    /// True when the floor rule would have left a side empty and the split
    /// was nudged to the 1-row minimum.
    pub adjusted: bool,
}

/// Standardizes every feature column to zero mean and unit sample std.
///
/// Constant columns become all-zero and record `std = 0`. Targets pass
/// through unchanged.
pub fn standardize(ds: &Dataset) -> Result<(Dataset, StandardizationStats), DataError> {
    let n = ds.row_count();
    if n < 2 {
        return Err(DataError::InsufficientData(format!(
            "standardize needs at least 2 rows, got {n}"
        )));
    }
    let mut mean = [0.0; FEATURE_COUNT];
    let mut std = [0.0; FEATURE_COUNT];
    for j in 0..FEATURE_COUNT {
        let col = ds.column(j);
        let m = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        mean[j] = m;
        std[j] = var.sqrt();
    }
    let stats = StandardizationStats { mean, std };
    Ok((stats.apply(ds), stats))
}

/// Splits row indices into train/validation by seeded shuffle.
///
/// The first `floor(train_fraction · N)` shuffled indices (at least 1, at
/// most N−1) form the train set. Same inputs, same indices.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitIndices, DataError> {
    let n = ds.row_count();
    if n < 2 {
        return Err(DataError::InsufficientData(format!(
            "split needs at least 2 rows, got {n}"
        )));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::Argument(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeds::rng(seed));
    let raw = (train_fraction * n as f64).floor() as usize;
    let n_train = raw.clamp(1, n - 1);
    let validation = order.split_off(n_train);
    Ok(SplitIndices {
        train: order,
        validation,
        adjusted: n_train != raw,
    })
}

const EMBEDDED: [([f64; FEATURE_COUNT], f64); 8] = [
    ([4.0, 0.57, 0.685, 0.353, 0.819, 0.70, 5.0], 54.0),
    ([8.0, 0.55, 0.678, 0.462, 0.946, 0.80, 6.0], 45.0),
    ([6.0, 0.55, 0.440, 0.665, 0.658, 0.54, 6.0], 49.0),
    ([6.0, 0.82, 0.669, 0.400, 0.797, 0.72, 7.0], 54.0),
    ([3.0, 0.75, 0.540, 0.536, 0.823, 0.69, 4.0], 62.0),
    ([3.0, 0.70, 0.665, 0.376, 0.866, 0.67, 7.0], 62.0),
    ([2.0, 0.64, 0.352, 0.587, 0.724, 0.57, 8.0], 62.0),
    ([7.0, 0.86, 0.668, 0.454, 0.687, 0.69, 8.0], 58.0),
];

/// The eight hard-coded sample rows.
pub fn embedded_sample() -> Dataset {
    Dataset {
        features: EMBEDDED.iter().map(|(f, _)| *f).collect(),
        targets: Some(EMBEDDED.iter().map(|(_, t)| *t).collect()),
    }
}

/// Latent correlation matrix for the synthetic generator, in schema order
/// with the target appended (index 7).
///
/// The strong pins: answer_quality↔doc_relevance 0.68 (observed ≈ 0.66
/// after the nonlinear quality term), semantic_similarity↔diversity −0.89,
/// redundancy↔diversity −0.88. semantic_similarity↔redundancy must then be
/// large for the matrix to stay positive-definite (two near-antiparallel
/// directions are near-parallel to each other); 0.80 keeps the smallest
/// eigenvalue near 0.08.
const LATENT_CORR: [[f64; 8]; 8] = [
    [1.00, -0.05, 0.00, 0.00, 0.00, 0.00, 0.30, -0.15],
    [-0.05, 1.00, 0.10, -0.08, 0.10, 0.00, 0.00, 0.68],
    [0.00, 0.10, 1.00, -0.89, 0.00, 0.80, 0.00, 0.12],
    [0.00, -0.08, -0.89, 1.00, 0.00, -0.88, 0.00, -0.10],
    [0.00, 0.10, 0.00, 0.00, 1.00, 0.00, 0.00, 0.20],
    [0.00, 0.00, 0.80, -0.88, 0.00, 1.00, 0.00, 0.10],
    [0.30, 0.00, 0.00, 0.00, 0.00, 0.00, 1.00, -0.10],
    [-0.15, 0.68, 0.12, -0.10, 0.20, 0.10, -0.10, 1.00],
];

/// Lower-triangular Cholesky factor, or None if the matrix is not
/// positive-definite.
fn cholesky(a: &[[f64; 8]; 8]) -> Option<[[f64; 8]; 8]> {
    let mut l = [[0.0; 8]; 8];
    for i in 0..8 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 {
                    return None;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

fn quantize6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Draws `n` synthetic rows whose correlation structure mirrors the real
/// dataset's headline pairs.
///
/// Gaussian latents from a Cholesky factor of [`LATENT_CORR`] are mapped to
/// plausible ranges: small counts for query_complexity/retrieval_depth,
/// unit-interval ratios (quantized to 6 decimals so CSV round-trips are
/// exact), and a 0–100 target with a mild nonlinearity in the
/// entity_coverage latent.
pub fn synthesize(n: usize, seed: u64) -> Result<Dataset, DataError> {
    if n < 10 {
        return Err(DataError::Argument(format!(
            "synthesize needs n >= 10, got {n}"
        )));
    }
    let l = cholesky(&LATENT_CORR).ok_or_else(|| {
        DataError::Internal("latent correlation matrix is not positive-definite".into())
    })?;
    let mut rng = seeds::rng(seed);
    let mut features = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let u: [f64; 8] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let mut z = [0.0; 8];
        for i in 0..8 {
            z[i] = (0..=i).map(|k| l[i][k] * u[k]).sum();
        }
        let row = [
            (5.0 + 2.0 * z[0]).round().clamp(1.0, 12.0),
            quantize6((0.65 + 0.12 * z[1]).clamp(0.0, 1.0)),
            quantize6((0.55 + 0.13 * z[2]).clamp(0.0, 1.0)),
            quantize6((0.45 + 0.13 * z[3]).clamp(0.0, 1.0)),
            quantize6((0.75 + 0.10 * z[4]).clamp(0.0, 1.0)),
            quantize6((0.65 + 0.10 * z[5]).clamp(0.0, 1.0)),
            (6.0 + 2.0 * z[6]).round().clamp(1.0, 15.0),
        ];
        let quality = 55.0 + 12.0 * z[7] + 2.5 * (z[4] * z[4] - 1.0);
        features.push(row);
        targets.push(quality.clamp(0.0, 100.0));
    }
    Ok(Dataset {
        features,
        targets: Some(targets),
    })
}

/// Loads a CSV whose header names the eight schema columns (any order).
///
/// Columns are returned in schema order regardless of file order; extra
/// columns are ignored. Ratio features outside [0, 1] are logged as
/// warnings, never rejected. Row numbers in errors are 1-based data rows.
pub fn load_csv(path: &Path) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
        return Err(DataError::EmptyInput(format!(
            "`{}` has no header row",
            path.display()
        )));
    }
    let col_index = |name: &str| -> Result<usize, DataError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DataError::MissingColumn(name.into()))
    };
    let feature_cols: Vec<usize> = FEATURE_NAMES
        .iter()
        .map(|name| col_index(name))
        .collect::<Result<_, _>>()?;
    let target_col = col_index(TARGET_NAME)?;

    let parse = |row: usize, column: &str, value: &str| -> Result<f64, DataError> {
        let v: f64 = value.trim().parse().map_err(|_| DataError::Parse {
            row,
            column: column.into(),
            value: value.into(),
        })?;
        if !v.is_finite() {
            return Err(DataError::Parse {
                row,
                column: column.into(),
                value: value.into(),
            });
        }
        Ok(v)
    };

    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut out_of_range = [0usize; FEATURE_COUNT];
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = idx + 1;
        let mut row = [0.0; FEATURE_COUNT];
        for (j, &col) in feature_cols.iter().enumerate() {
            let cell = record.get(col).unwrap_or("");
            row[j] = parse(row_no, FEATURE_NAMES[j], cell)?;
        }
        for &j in RATIO_FEATURES.iter() {
            if !(0.0..=1.0).contains(&row[j]) {
                out_of_range[j] += 1;
            }
        }
        let cell = record.get(target_col).unwrap_or("");
        targets.push(parse(row_no, TARGET_NAME, cell)?);
        features.push(row);
    }
    if features.is_empty() {
        return Err(DataError::EmptyInput(format!(
            "`{}` contains a header but no data rows",
            path.display()
        )));
    }
    for &j in RATIO_FEATURES.iter() {
        if out_of_range[j] > 0 {
            log::warn!(
                "column `{}`: {} value(s) outside [0, 1]",
                FEATURE_NAMES[j],
                out_of_range[j]
            );
        }
    }
    Dataset::new(features, Some(targets))
}

/// Shortest decimal representation that parses back to the same f64.
fn fmt_value(x: f64) -> String {
    format!("{x}")
}

/// Ratio-feature formatting: fixed point with at least 6 decimals, extended
/// only when more digits are needed to round-trip the value exactly.
fn fmt_ratio(x: f64) -> String {
    let s = fmt_value(x);
    match s.split_once('.') {
        Some((_, frac)) if frac.len() >= 6 => s,
        Some((int, frac)) => {
            let mut out = String::with_capacity(int.len() + 7);
            let _ = write!(out, "{int}.{frac:0<6}");
            out
        }
        None => format!("{s}.000000"),
    }
}

/// Writes a dataset in the same dialect `load_csv` reads.
pub fn save_csv(ds: &Dataset, path: &Path) -> Result<(), DataError> {
    let file = std::fs::File::create(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    if ds.targets.is_some() {
        header.push(TARGET_NAME);
    }
    writer.write_record(&header)?;
    for (i, row) in ds.features.iter().enumerate() {
        let mut record: Vec<String> = Vec::with_capacity(8);
        for (j, &v) in row.iter().enumerate() {
            record.push(if RATIO_FEATURES.contains(&j) {
                fmt_ratio(v)
            } else {
                fmt_value(v)
            });
        }
        if let Some(t) = &ds.targets {
            record.push(fmt_value(t[i]));
        }
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::io::Write as _;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn embedded_sample_matches_pinned_rows() {
        let ds = embedded_sample();
        assert_eq!(ds.row_count(), 8);
        assert_eq!(ds.rows()[0], [4.0, 0.57, 0.685, 0.353, 0.819, 0.70, 5.0]);
        assert_eq!(ds.targets().unwrap()[0], 54.0);
        assert_eq!(ds.rows()[4], [3.0, 0.75, 0.540, 0.536, 0.823, 0.69, 4.0]);
        assert_eq!(ds.targets().unwrap()[4], 62.0);
    }

    #[test]
    fn load_csv_reorders_columns_to_schema() {
        // answer_quality deliberately placed first, retrieval_depth before it.
        let f = write_temp(
            "answer_quality,retrieval_depth,query_complexity,doc_relevance,semantic_similarity,diversity,entity_coverage,redundancy\n\
             54,5,4,0.57,0.685,0.353,0.819,0.70\n\
             45,6,8,0.55,0.678,0.462,0.946,0.80\n",
        );
        let ds = load_csv(f.path()).unwrap();
        assert_eq!(ds.row_count(), 2);
        assert_eq!(ds.rows()[0], [4.0, 0.57, 0.685, 0.353, 0.819, 0.70, 5.0]);
        assert_eq!(ds.targets().unwrap()[0], 54.0);
    }

    #[test]
    fn load_csv_header_only_is_empty_input() {
        let f = write_temp(
            "query_complexity,doc_relevance,semantic_similarity,diversity,entity_coverage,redundancy,retrieval_depth,answer_quality\n",
        );
        match load_csv(f.path()) {
            Err(DataError::EmptyInput(_)) => {}
            other => panic!("expected EmptyInput, got {other:?}"),
        }
    }

    #[test]
    fn load_csv_missing_column_named() {
        let f = write_temp("query_complexity,doc_relevance\n1,0.5\n");
        match load_csv(f.path()) {
            Err(DataError::MissingColumn(c)) => assert_eq!(c, "semantic_similarity"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn load_csv_parse_error_cites_row() {
        let f = write_temp(
            "query_complexity,doc_relevance,semantic_similarity,diversity,entity_coverage,redundancy,retrieval_depth,answer_quality\n\
             4,0.57,0.685,0.353,0.819,0.70,5,54\n\
             8,0.55,0.678,0.462,0.946,0.80,6,45\n\
             6,abc,0.44,0.665,0.658,0.54,6,49\n",
        );
        match load_csv(f.path()) {
            Err(DataError::Parse { row, column, value }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "doc_relevance");
                assert_eq!(value, "abc");
            }
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn load_csv_rejects_non_finite_cells() {
        let f = write_temp(
            "query_complexity,doc_relevance,semantic_similarity,diversity,entity_coverage,redundancy,retrieval_depth,answer_quality\n\
             4,inf,0.685,0.353,0.819,0.70,5,54\n",
        );
        assert!(matches!(
            load_csv(f.path()),
            Err(DataError::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn standardize_doc_relevance_matches_spreadsheet_fixture() {
        // Computed independently over the embedded sample's doc_relevance
        // column before this module was written.
        let (z, stats) = standardize(&embedded_sample()).unwrap();
        assert_abs_diff_eq!(stats.mean[1], 0.68, epsilon = 1e-15);
        assert_abs_diff_eq!(stats.std[1], 0.12235778917350774, epsilon = 1e-15);
        let expected = [
            -0.8990028403015369,
            -1.0624579021745426,
            -1.0624579021745426,
            1.144185433111045,
            0.5720927165555225,
            0.1634550618730058,
            -0.3269101237460134,
            1.4710955568570585,
        ];
        for (got, want) in z.column(1).iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn standardize_gives_zero_mean_unit_std() {
        let (z, _) = standardize(&embedded_sample()).unwrap();
        let n = z.row_count() as f64;
        for j in 0..FEATURE_COUNT {
            let col = z.column(j);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(var.sqrt(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn standardize_constant_column_is_zeroed() {
        let rows = vec![
            [5.0, 0.1, 0.2, 0.3, 0.4, 0.5, 1.0],
            [5.0, 0.2, 0.3, 0.4, 0.5, 0.6, 2.0],
        ];
        let ds = Dataset::new(rows, None).unwrap();
        let (z, stats) = standardize(&ds).unwrap();
        assert_eq!(stats.std[0], 0.0);
        assert!(z.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardize_round_trips_through_invert() {
        let ds = embedded_sample();
        let (z, stats) = standardize(&ds).unwrap();
        let back = stats.invert(&z);
        for (a, b) in back.rows().iter().zip(ds.rows()) {
            for j in 0..FEATURE_COUNT {
                assert_abs_diff_eq!(a[j], b[j], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn standardize_rejects_single_row() {
        let ds = Dataset::new(vec![[1.0; FEATURE_COUNT]], None).unwrap();
        assert!(matches!(
            standardize(&ds),
            Err(DataError::InsufficientData(_))
        ));
    }

    #[test]
    fn split_eight_rows_at_point_eight() {
        let s = split(&embedded_sample(), 0.8, 7).unwrap();
        assert_eq!(s.train.len(), 6);
        assert_eq!(s.validation.len(), 2);
        assert!(!s.adjusted);
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn split_two_rows_keeps_both_sides_nonempty() {
        let ds = Dataset::new(vec![[1.0; FEATURE_COUNT], [2.0; FEATURE_COUNT]], None).unwrap();
        let s = split(&ds, 0.8, 0).unwrap();
        assert_eq!(s.train.len(), 1);
        assert_eq!(s.validation.len(), 1);
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let ds = synthesize(100, 3).unwrap();
        let a = split(&ds, 0.8, 11).unwrap();
        let b = split(&ds, 0.8, 11).unwrap();
        let c = split(&ds, 0.8, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let ds = embedded_sample();
        assert!(matches!(split(&ds, 0.0, 1), Err(DataError::Argument(_))));
        assert!(matches!(split(&ds, 1.0, 1), Err(DataError::Argument(_))));
    }

    #[test]
    fn synthesize_hits_configured_correlations() {
        let ds = synthesize(2000, 7).unwrap();
        let aq = ds.targets().unwrap();
        let r_dr = crate::metrics::pearson_corr(&ds.column(1), aq).unwrap();
        let r_ss_div = crate::metrics::pearson_corr(&ds.column(2), &ds.column(3)).unwrap();
        let r_red_div = crate::metrics::pearson_corr(&ds.column(5), &ds.column(3)).unwrap();
        assert!((r_dr - 0.66).abs() < 0.05, "corr(aq, dr) = {r_dr}");
        assert!((r_ss_div + 0.89).abs() < 0.05, "corr(ss, div) = {r_ss_div}");
        assert!(
            (r_red_div + 0.88).abs() < 0.05,
            "corr(red, div) = {r_red_div}"
        );
    }

    #[test]
    fn synthesize_respects_ranges_and_determinism() {
        let a = synthesize(200, 9).unwrap();
        let b = synthesize(200, 9).unwrap();
        assert_eq!(a, b);
        for row in a.rows() {
            assert!((1.0..=12.0).contains(&row[0]) && row[0].fract() == 0.0);
            assert!((1.0..=15.0).contains(&row[6]) && row[6].fract() == 0.0);
            for &j in RATIO_FEATURES.iter() {
                assert!((0.0..=1.0).contains(&row[j]));
            }
        }
        for &t in a.targets().unwrap() {
            assert!((0.0..=100.0).contains(&t));
        }
    }

    #[test]
    fn synthesize_rejects_small_n() {
        assert!(matches!(synthesize(9, 1), Err(DataError::Argument(_))));
    }

    #[test]
    fn save_then_load_round_trips_embedded_sample() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sample.csv");
        let ds = embedded_sample();
        save_csv(&ds, &path).unwrap();
        let back = load_csv(&path).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn ratio_formatting_pads_to_six_decimals() {
        assert_eq!(fmt_ratio(0.57), "0.570000");
        assert_eq!(fmt_ratio(0.0), "0.000000");
        assert_eq!(fmt_ratio(1.0), "1.000000");
        // More precision than six decimals is kept, not truncated.
        assert_eq!(fmt_ratio(0.1234567), "0.1234567");
    }
}

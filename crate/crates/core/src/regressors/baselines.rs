//! The five classical baseline regressors of the benchmark: a single
//! variance-reduction decision tree, AdaBoost.R2, a plain GBDT, extremely
//! randomized trees, and k-nearest-neighbors.

use rand::distributions::{Distribution, WeightedIndex};
use rayon::prelude::*;

use super::gbt::{GbtConfig, GbtModel};
use super::tree::{fit_mean_tree, RegressionTree, ThresholdRule, TreeFitParams};
use super::{validate_predict, validate_training, ModelError, Regressor};
use crate::seeds;

/// Kind plus kind-specific settings for one baseline model.
#[derive(Debug, Clone, PartialEq)]
pub enum BaselineConfig {
    DecisionTree {
        max_depth: usize,
        min_leaf_samples: usize,
    },
    AdaBoostR2 {
        n_estimators: usize,
        base_depth: usize,
        seed: u64,
    },
    /// Fixed at the classical operating point: η = 0.1, depth 3, 200
    /// rounds, λ = γ = 0 — the unregularized twin of the tuned GBT.
    Gbdt,
    ExtraTrees {
        n_trees: usize,
        max_depth: usize,
        seed: u64,
    },
    Knn {
        k: usize,
    },
}

impl BaselineConfig {
    /// The benchmark's five baselines in report order, at their default
    /// settings.
    pub fn all_default(seed: u64) -> Vec<BaselineConfig> {
        vec![
            BaselineConfig::DecisionTree {
                max_depth: 6,
                min_leaf_samples: 2,
            },
            BaselineConfig::AdaBoostR2 {
                n_estimators: 50,
                base_depth: 3,
                seed: seeds::derive(seed, "baseline/adaboost"),
            },
            BaselineConfig::Gbdt,
            BaselineConfig::ExtraTrees {
                n_trees: 100,
                max_depth: 10,
                seed: seeds::derive(seed, "baseline/extratrees"),
            },
            BaselineConfig::Knn { k: 5 },
        ]
    }

    /// Validates the settings and constructs the unfitted model.
    pub fn build(&self) -> Result<Box<dyn Regressor + Send + Sync>, ModelError> {
        match *self {
            BaselineConfig::DecisionTree {
                max_depth,
                min_leaf_samples,
            } => {
                if min_leaf_samples < 1 {
                    return Err(ModelError::Argument(
                        "decision tree min_leaf_samples must be at least 1".into(),
                    ));
                }
                Ok(Box::new(DecisionTreeBaseline {
                    max_depth,
                    min_leaf_samples,
                    state: None,
                }))
            }
            BaselineConfig::AdaBoostR2 {
                n_estimators,
                base_depth,
                seed,
            } => {
                if n_estimators < 1 {
                    return Err(ModelError::Argument(
                        "adaboost needs at least 1 estimator".into(),
                    ));
                }
                Ok(Box::new(AdaBoostR2 {
                    n_estimators,
                    base_depth,
                    seed,
                    state: None,
                }))
            }
            BaselineConfig::Gbdt => Ok(Box::new(GbdtBaseline(GbtModel::new(GbtConfig::default())))),
            BaselineConfig::ExtraTrees {
                n_trees,
                max_depth,
                seed,
            } => {
                if n_trees < 1 {
                    return Err(ModelError::Argument(
                        "extra trees needs at least 1 tree".into(),
                    ));
                }
                Ok(Box::new(ExtraTreesBaseline {
                    n_trees,
                    max_depth,
                    seed,
                    state: None,
                }))
            }
            BaselineConfig::Knn { k } => {
                if k < 1 {
                    return Err(ModelError::Argument("knn needs k of at least 1".into()));
                }
                Ok(Box::new(KnnBaseline { k, state: None }))
            }
        }
    }
}

/// Single variance-reduction tree.
#[derive(Debug, Clone)]
pub struct DecisionTreeBaseline {
    pub max_depth: usize,
    pub min_leaf_samples: usize,
    state: Option<(RegressionTree, usize)>,
}

impl Regressor for DecisionTreeBaseline {
    fn fit(&mut self, x: &[Vec<f64>], y: &[f64]) -> Result<(), ModelError> {
        let d = validate_training(x, y)?;
        let params = TreeFitParams {
            max_depth: self.max_depth,
            min_leaf_samples: self.min_leaf_samples,
            lambda: 0.0,
            gamma: 0.0,
            rule: ThresholdRule::ExactScan,
        };
        let tree = fit_mean_tree(x, y, None, &params, &mut seeds::rng(0));
        self.state = Some((tree, d));
        Ok(())
    }

    fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        let (tree, d) = self.state.as_ref().ok_or(ModelError::NotFitted)?;
        validate_predict(x, *d)?;
        Ok(tree.predict(x))
    }

    fn name(&self) -> &'static str {
        "DecisionTrees"
    }
}

/// AdaBoost.R2 (linear loss): weight-based resampling for each weak
/// learner, weighted-median aggregation at prediction.
#[derive(Debug, Clone)]
pub struct AdaBoostR2 {
    pub n_estimators: usize,
    pub base_depth: usize,
    pub seed: u64,
    state: Option<AdaBoostState>,
}

#[derive(Debug, Clone)]
struct AdaBoostState {
    learners: Vec<RegressionTree>,
    log_weights: Vec<f64>,
    n_features: usize,
}

impl Regressor for AdaBoostR2 {
    fn fit(&mut self, x: &[Vec<f64>], y: &[f64]) -> Result<(), ModelError> {
        let d = validate_training(x, y)?;
        let n = x.len();
        if n < 2 {
            return Err(ModelError::TrainingData(format!(
                "adaboost needs at least 2 rows, got {n}"
            )));
        }
        let mut rng = seeds::rng(self.seed);
        let params = TreeFitParams {
            max_depth: self.base_depth,
            min_leaf_samples: 1,
            lambda: 0.0,
            gamma: 0.0,
            rule: ThresholdRule::ExactScan,
        };
        let mut weights = vec![1.0 / n as f64; n];
        let mut learners = Vec::new();
        let mut log_weights = Vec::new();
        for _ in 0..self.n_estimators {
            let dist = WeightedIndex::new(&weights)
                .map_err(|e| ModelError::TrainingData(format!("degenerate weights: {e}")))?;
            let sample: Vec<usize> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            let xs: Vec<Vec<f64>> = sample.iter().map(|&i| x[i].clone()).collect();
            let ys: Vec<f64> = sample.iter().map(|&i| y[i]).collect();
            let tree = fit_mean_tree(&xs, &ys, None, &params, &mut rng);

            // Linear loss on the full training set, normalized by the
            // largest error.
            let errors: Vec<f64> = x
                .iter()
                .zip(y)
                .map(|(row, t)| (tree.predict_one(row) - t).abs())
                .collect();
            let max_err = errors.iter().fold(0.0f64, |a, &b| a.max(b));
            if max_err == 0.0 {
                // Perfect learner: keep it with a dominant vote and stop.
                learners.push(tree);
                log_weights.push((1.0f64 / 1e-10).ln());
                break;
            }
            let avg_loss: f64 = errors
                .iter()
                .zip(&weights)
                .map(|(e, w)| (e / max_err) * w)
                .sum();
            let avg_loss = avg_loss.max(1e-10);
            if avg_loss >= 0.5 {
                if learners.is_empty() {
                    // Nothing better than chance yet; keep one weak vote so
                    // the ensemble is non-empty, then stop.
                    learners.push(tree);
                    log_weights.push(((1.0f64 - 0.4999) / 0.4999).ln());
                }
                break;
            }
            let beta = avg_loss / (1.0 - avg_loss);
            log_weights.push((1.0 / beta).ln());
            learners.push(tree);
            let mut total = 0.0;
            for (w, e) in weights.iter_mut().zip(&errors) {
                *w *= beta.powf(1.0 - e / max_err);
                total += *w;
            }
            for w in &mut weights {
                *w /= total;
            }
        }
        self.state = Some(AdaBoostState {
            learners,
            log_weights,
            n_features: d,
        });
        Ok(())
    }

    fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        let state = self.state.as_ref().ok_or(ModelError::NotFitted)?;
        validate_predict(x, state.n_features)?;
        let total: f64 = state.log_weights.iter().sum();
        Ok(x.iter()
            .map(|row| {
                let mut votes: Vec<(f64, f64)> = state
                    .learners
                    .iter()
                    .zip(&state.log_weights)
                    .map(|(tree, &w)| (tree.predict_one(row), w))
                    .collect();
                votes.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut acc = 0.0;
                for (pred, w) in &votes {
                    acc += w;
                    if acc >= 0.5 * total {
                        return *pred;
                    }
                }
                votes.last().map_or(0.0, |(pred, _)| *pred)
            })
            .collect())
    }

    fn name(&self) -> &'static str {
        "AdaBoost"
    }
}

/// Plain gradient-boosted decision trees: the GBT engine without its
/// regularization terms.
#[derive(Debug, Clone)]
pub struct GbdtBaseline(GbtModel);

impl Regressor for GbdtBaseline {
    fn fit(&mut self, x: &[Vec<f64>], y: &[f64]) -> Result<(), ModelError> {
        self.0.fit(x, y)
    }

    fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        self.0.predict(x)
    }

    fn name(&self) -> &'static str {
        "GBDT"
    }
}

/// Averaged ensemble of totally random-split trees on the full training
/// set (no bootstrap).
#[derive(Debug, Clone)]
pub struct ExtraTreesBaseline {
    pub n_trees: usize,
    pub max_depth: usize,
    pub seed: u64,
    state: Option<(Vec<RegressionTree>, usize)>,
}

impl Regressor for ExtraTreesBaseline {
    fn fit(&mut self, x: &[Vec<f64>], y: &[f64]) -> Result<(), ModelError> {
        let d = validate_training(x, y)?;
        let params = TreeFitParams {
            max_depth: self.max_depth,
            min_leaf_samples: 1,
            lambda: 0.0,
            gamma: 0.0,
            rule: ThresholdRule::RandomPerFeature,
        };
        // Per-member seeds make the ensemble independent of the training
        // schedule; index-ordered collect fixes the aggregation order.
        let base = self.seed;
        let trees: Vec<RegressionTree> = (0..self.n_trees)
            .into_par_iter()
            .map(|i| {
                let mut rng = seeds::rng(seeds::mix(base, &[i as u64]));
                fit_mean_tree(x, y, None, &params, &mut rng)
            })
            .collect();
        self.state = Some((trees, d));
        Ok(())
    }

    fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        let (trees, d) = self.state.as_ref().ok_or(ModelError::NotFitted)?;
        validate_predict(x, *d)?;
        let scale = 1.0 / trees.len() as f64;
        Ok(x.iter()
            .map(|row| trees.iter().map(|t| t.predict_one(row)).sum::<f64>() * scale)
            .collect())
    }

    fn name(&self) -> &'static str {
        "ExtraTrees"
    }
}

/// Mean target of the k nearest training rows by Euclidean distance; ties
/// at the boundary resolve by lower row index.
#[derive(Debug, Clone)]
pub struct KnnBaseline {
    pub k: usize,
    state: Option<(Vec<Vec<f64>>, Vec<f64>)>,
}

impl Regressor for KnnBaseline {
    fn fit(&mut self, x: &[Vec<f64>], y: &[f64]) -> Result<(), ModelError> {
        validate_training(x, y)?;
        if self.k > x.len() {
            return Err(ModelError::TrainingData(format!(
                "k = {} exceeds the {} training rows",
                self.k,
                x.len()
            )));
        }
        self.state = Some((x.to_vec(), y.to_vec()));
        Ok(())
    }

    fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        let (train, targets) = self.state.as_ref().ok_or(ModelError::NotFitted)?;
        validate_predict(x, train[0].len())?;
        Ok(x.iter()
            .map(|row| {
                let mut dists: Vec<(f64, usize)> = train
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let d2: f64 = row.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
                        (d2, i)
                    })
                    .collect();
                dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                dists[..self.k]
                    .iter()
                    .map(|&(_, i)| targets[i])
                    .sum::<f64>()
                    / self.k as f64
            })
            .collect())
    }

    fn name(&self) -> &'static str {
        "KNN"
    }
}

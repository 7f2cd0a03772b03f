//! Gradient-boosted trees with Newton leaf weights and regularized split
//! gain (the XGBoost-style objective on squared loss).
//!
//! With loss ½(ŷ−y)² the per-sample gradient is g = ŷ−y and the Hessian
//! is 1, so each round fits a [`RegressionTree`] to (g, 1) and predictions
//! accumulate η·tree(x) on top of the mean-target base score.

use rand_chacha::ChaCha8Rng;

use super::tree::{RegressionTree, ThresholdRule, TreeFitParams};
use super::{validate_predict, validate_training, ModelError, Regressor};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtConfig {
    /// Shrinkage η applied to every tree's contribution.
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Leaf L2 regularization λ.
    pub leaf_l2: f64,
    /// Split gain floor γ.
    pub split_gain_floor: f64,
    pub n_rounds: usize,
    pub min_leaf_samples: usize,
    pub seed: u64,
}

impl Default for GbtConfig {
    /// η = 0.1, depth 3, 200 rounds, no regularization — the classical
    /// GBDT operating point; the tuned variant overrides (η, depth, λ).
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_depth: 3,
            leaf_l2: 0.0,
            split_gain_floor: 0.0,
            n_rounds: 200,
            min_leaf_samples: 1,
            seed: 0,
        }
    }
}

impl GbtConfig {
    fn validate(&self) -> Result<(), ModelError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::Argument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.leaf_l2 >= 0.0 && self.leaf_l2.is_finite()) {
            return Err(ModelError::Argument(format!(
                "leaf_l2 must be non-negative, got {}",
                self.leaf_l2
            )));
        }
        if !(self.split_gain_floor >= 0.0 && self.split_gain_floor.is_finite()) {
            return Err(ModelError::Argument(format!(
                "split_gain_floor must be non-negative, got {}",
                self.split_gain_floor
            )));
        }
        if self.min_leaf_samples < 1 {
            return Err(ModelError::Argument(
                "min_leaf_samples must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FittedGbt {
    pub(crate) base: f64,
    pub(crate) trees: Vec<RegressionTree>,
    pub(crate) n_features: usize,
    round_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    pub(crate) config: GbtConfig,
    pub(crate) state: Option<FittedGbt>,
}

impl GbtModel {
    pub fn new(config: GbtConfig) -> Self {
        Self {
            config,
            state: None,
        }
    }

    pub fn config(&self) -> &GbtConfig {
        &self.config
    }

    /// Training MSE after each boosting round; non-increasing for η ≤ 1.
    pub fn round_losses(&self) -> Option<&[f64]> {
        self.state.as_ref().map(|s| s.round_losses.as_slice())
    }

    pub(crate) fn restore(
        config: GbtConfig,
        base: f64,
        n_features: usize,
        trees: Vec<RegressionTree>,
    ) -> Self {
        Self {
            config,
            state: Some(FittedGbt {
                base,
                trees,
                n_features,
                round_losses: Vec::new(),
            }),
        }
    }
}

impl Regressor for GbtModel {
    fn fit(&mut self, x: &[Vec<f64>], y: &[f64]) -> Result<(), ModelError> {
        self.config.validate()?;
        let d = validate_training(x, y)?;
        if x.len() < 2 {
            return Err(ModelError::TrainingData(format!(
                "boosting needs at least 2 rows, got {}",
                x.len()
            )));
        }
        let n = x.len();
        let base = y.iter().sum::<f64>() / n as f64;
        let mut preds = vec![base; n];
        let mut trees = Vec::with_capacity(self.config.n_rounds);
        let mut round_losses = Vec::with_capacity(self.config.n_rounds);
        let params = TreeFitParams {
            max_depth: self.config.max_depth,
            min_leaf_samples: self.config.min_leaf_samples,
            lambda: self.config.leaf_l2,
            gamma: self.config.split_gain_floor,
            rule: ThresholdRule::ExactScan,
        };
        // Exact scans draw nothing; the RNG exists to satisfy the tree API.
        let mut rng: ChaCha8Rng = seeds::rng(self.config.seed);
        let hess = vec![1.0; n];
        for _ in 0..self.config.n_rounds {
            let grad: Vec<f64> = preds.iter().zip(y).map(|(p, t)| p - t).collect();
            let tree = RegressionTree::fit(x, &grad, &hess, &params, &mut rng);
            for (p, row) in preds.iter_mut().zip(x) {
                *p += self.config.learning_rate * tree.predict_one(row);
            }
            round_losses.push(
                preds
                    .iter()
                    .zip(y)
                    .map(|(p, t)| (p - t).powi(2))
                    .sum::<f64>()
                    / n as f64,
            );
            trees.push(tree);
        }
        self.state = Some(FittedGbt {
            base,
            trees,
            n_features: d,
            round_losses,
        });
        Ok(())
    }

    fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        let state = self.state.as_ref().ok_or(ModelError::NotFitted)?;
        validate_predict(x, state.n_features)?;
        Ok(x.iter()
            .map(|row| {
                state.base
                    + self.config.learning_rate
                        * state.trees.iter().map(|t| t.predict_one(row)).sum::<f64>()
            })
            .collect())
    }

    fn name(&self) -> &'static str {
        "GBT"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..n).map(|i| i as f64).collect();
        (x, y)
    }

    #[test]
    fn zero_rounds_predicts_the_mean() {
        let (x, y) = line(10);
        let mut model = GbtModel::new(GbtConfig {
            n_rounds: 0,
            ..GbtConfig::default()
        });
        model.fit(&x, &y).unwrap();
        let mean = y.iter().sum::<f64>() / 10.0;
        for p in model.predict(&x).unwrap() {
            assert_abs_diff_eq!(p, mean, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_unshrunk_round_memorizes_distinct_rows() {
        // depth 3 = ⌈log₂ 8⌉; with η = 1 and λ = γ = 0 every leaf isolates
        // one sample, so training predictions equal y exactly.
        let (x, y) = line(8);
        let mut model = GbtModel::new(GbtConfig {
            learning_rate: 1.0,
            max_depth: 3,
            n_rounds: 1,
            ..GbtConfig::default()
        });
        model.fit(&x, &y).unwrap();
        for (p, t) in model.predict(&x).unwrap().iter().zip(&y) {
            assert_abs_diff_eq!(*p, *t, epsilon = 1e-12);
        }
    }

    #[test]
    fn training_loss_is_non_increasing() {
        let ds = crate::data::synthesize(120, 4).unwrap();
        let x = ds.feature_rows();
        let y = ds.targets().unwrap().to_vec();
        for lr in [0.1, 1.0] {
            let mut model = GbtModel::new(GbtConfig {
                learning_rate: lr,
                n_rounds: 60,
                ..GbtConfig::default()
            });
            model.fit(&x, &y).unwrap();
            let losses = model.round_losses().unwrap();
            assert_eq!(losses.len(), 60);
            for w in losses.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-9,
                    "loss increased from {} to {} at lr={lr}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn regularization_shrinks_toward_the_base() {
        let (x, y) = line(16);
        let mut plain = GbtModel::new(GbtConfig {
            n_rounds: 20,
            ..GbtConfig::default()
        });
        plain.fit(&x, &y).unwrap();
        let mut ridged = GbtModel::new(GbtConfig {
            n_rounds: 20,
            leaf_l2: 50.0,
            ..GbtConfig::default()
        });
        ridged.fit(&x, &y).unwrap();
        let mean = y.iter().sum::<f64>() / 16.0;
        let spread = |m: &GbtModel| -> f64 {
            m.predict(&x)
                .unwrap()
                .iter()
                .map(|p| (p - mean).abs())
                .sum()
        };
        assert!(spread(&ridged) < spread(&plain));
    }

    #[test]
    fn permuting_training_rows_changes_no_prediction() {
        let ds = crate::data::synthesize(80, 6).unwrap();
        let x = ds.feature_rows();
        let y = ds.targets().unwrap().to_vec();
        let perm: Vec<usize> = (0..80).rev().collect();
        let xp: Vec<Vec<f64>> = perm.iter().map(|&i| x[i].clone()).collect();
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let mut a = GbtModel::new(GbtConfig {
            n_rounds: 25,
            ..GbtConfig::default()
        });
        a.fit(&x, &y).unwrap();
        let mut b = GbtModel::new(GbtConfig {
            n_rounds: 25,
            ..GbtConfig::default()
        });
        b.fit(&xp, &yp).unwrap();
        // Leaf statistics accumulate in row order, so allow round-off slack.
        for (pa, pb) in a.predict(&x).unwrap().iter().zip(b.predict(&x).unwrap()) {
            assert_abs_diff_eq!(*pa, pb, epsilon = 1e-9);
        }
    }

    #[test]
    fn usage_errors() {
        let model = GbtModel::new(GbtConfig::default());
        assert!(matches!(
            model.predict(&[vec![1.0]]),
            Err(ModelError::NotFitted)
        ));
        let mut model = GbtModel::new(GbtConfig::default());
        assert!(matches!(
            model.fit(&[vec![1.0]], &[1.0]),
            Err(ModelError::TrainingData(_))
        ));
        model.fit(&[vec![1.0], vec![2.0]], &[1.0, 2.0]).unwrap();
        assert!(matches!(
            model.predict(&[vec![1.0, 2.0]]),
            Err(ModelError::FeatureMismatch {
                expected: 1,
                got: 2
            })
        ));
        let mut bad = GbtModel::new(GbtConfig {
            learning_rate: 0.0,
            ..GbtConfig::default()
        });
        assert!(matches!(
            bad.fit(&[vec![1.0], vec![2.0]], &[1.0, 2.0]),
            Err(ModelError::Argument(_))
        ));
    }
}

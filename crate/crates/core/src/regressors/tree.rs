//! Depth-limited regression trees on gradient/Hessian statistics.
//!
//! One engine serves every tree consumer in the crate. A node's value is
//! the Newton step −ΣG/(ΣH+λ) and split gain is
//! ½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ. With g = −y and h = 1
//! this is exactly the variance-reduction tree (leaves predict the mean
//! target), so the classical baselines and the boosted trees differ only
//! in the statistics they feed in.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// How candidate thresholds are generated at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdRule {
    /// Scan every boundary between distinct sorted values (exact greedy).
    ExactScan,
    /// One uniform threshold per candidate feature (extremely randomized).
    RandomPerFeature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeFitParams {
    pub max_depth: usize,
    pub min_leaf_samples: usize,
    /// Leaf L2 regularization (λ).
    pub lambda: f64,
    /// Minimum gain a split must exceed (γ).
    pub gamma: f64,
    pub rule: ThresholdRule,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A fitted tree; immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a TreeFitParams,
    nodes: Vec<Node>,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl<'a> Builder<'a> {
    fn leaf_value(&self, indices: &[usize]) -> f64 {
        let g: f64 = indices.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = indices.iter().map(|&i| self.hess[i]).sum();
        -g / (h + self.params.lambda)
    }

    fn node_score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    /// Best split at this node, if any exceeds γ. Ties go to the lower
    /// feature index, then the smaller threshold (first found wins).
    fn best_split(&self, indices: &[usize], rng: &mut ChaCha8Rng) -> Option<BestSplit> {
        let total_g: f64 = indices.iter().map(|&i| self.grad[i]).sum();
        let total_h: f64 = indices.iter().map(|&i| self.hess[i]).sum();
        let parent = self.node_score(total_g, total_h);
        let d = self.x[0].len();
        let min_leaf = self.params.min_leaf_samples;
        let mut best: Option<BestSplit> = None;
        let mut consider = |gain: f64, feature: usize, threshold: f64| {
            if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(BestSplit {
                    gain,
                    feature,
                    threshold,
                });
            }
        };
        match self.params.rule {
            ThresholdRule::ExactScan => {
                let mut sorted: Vec<usize> = Vec::with_capacity(indices.len());
                for feature in 0..d {
                    sorted.clear();
                    sorted.extend_from_slice(indices);
                    sorted.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
                    let mut gl = 0.0;
                    let mut hl = 0.0;
                    for s in 0..sorted.len() - 1 {
                        gl += self.grad[sorted[s]];
                        hl += self.hess[sorted[s]];
                        let v = self.x[sorted[s]][feature];
                        let next = self.x[sorted[s + 1]][feature];
                        if v == next {
                            continue;
                        }
                        let left_n = s + 1;
                        let right_n = sorted.len() - left_n;
                        if left_n < min_leaf || right_n < min_leaf {
                            continue;
                        }
                        let gain = 0.5
                            * (self.node_score(gl, hl)
                                + self.node_score(total_g - gl, total_h - hl)
                                - parent)
                            - self.params.gamma;
                        consider(gain, feature, 0.5 * (v + next));
                    }
                }
            }
            ThresholdRule::RandomPerFeature => {
                for feature in 0..d {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for &i in indices {
                        lo = lo.min(self.x[i][feature]);
                        hi = hi.max(self.x[i][feature]);
                    }
                    if lo >= hi {
                        continue;
                    }
                    let threshold = rng.gen_range(lo..hi);
                    let mut gl = 0.0;
                    let mut hl = 0.0;
                    let mut left_n = 0usize;
                    for &i in indices {
                        if self.x[i][feature] <= threshold {
                            gl += self.grad[i];
                            hl += self.hess[i];
                            left_n += 1;
                        }
                    }
                    let right_n = indices.len() - left_n;
                    if left_n < min_leaf || right_n < min_leaf {
                        continue;
                    }
                    let gain = 0.5
                        * (self.node_score(gl, hl) + self.node_score(total_g - gl, total_h - hl)
                            - parent)
                        - self.params.gamma;
                    consider(gain, feature, threshold);
                }
            }
        }
        best
    }

    fn build(&mut self, indices: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let make_leaf = depth >= self.params.max_depth
            || indices.len() < 2 * self.params.min_leaf_samples
            || indices.len() < 2;
        let split = if make_leaf {
            None
        } else {
            self.best_split(indices, rng)
        };
        match split {
            None => {
                let value = self.leaf_value(indices);
                self.nodes.push(Node::Leaf { value });
                self.nodes.len() - 1
            }
            Some(s) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                    .iter()
                    .partition(|&&i| self.x[i][s.feature] <= s.threshold);
                // Left subtree is always built first, so node layout (and
                // any RNG draws below) depend only on the data.
                let left = self.build(&left_idx, depth + 1, rng);
                let right = self.build(&right_idx, depth + 1, rng);
                self.nodes.push(Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                });
                self.nodes.len() - 1
            }
        }
    }
}

impl RegressionTree {
    /// Fits a tree to per-sample gradient/Hessian statistics.
    ///
    /// `rng` is consumed only under `ThresholdRule::RandomPerFeature`.
    pub fn fit(
        x: &[Vec<f64>],
        grad: &[f64],
        hess: &[f64],
        params: &TreeFitParams,
        rng: &mut ChaCha8Rng,
    ) -> RegressionTree {
        debug_assert!(!x.is_empty() && x.len() == grad.len() && grad.len() == hess.len());
        let mut builder = Builder {
            x,
            grad,
            hess,
            params,
            nodes: Vec::new(),
        };
        let indices: Vec<usize> = (0..x.len()).collect();
        let root = builder.build(&indices, 0, rng);
        debug_assert_eq!(root, builder.nodes.len() - 1);
        RegressionTree {
            nodes: builder.nodes,
        }
    }

    pub fn predict_one(&self, row: &[f64]) -> f64 {
        let mut at = self.nodes.len() - 1;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        x.iter().map(|row| self.predict_one(row)).collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Flattens to (is_leaf, feature, threshold_or_value, left, right) rows
    /// for serialization; row order is the arena order.
    pub(crate) fn to_flat(&self) -> Vec<(bool, u32, f64, u32, u32)> {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Leaf { value } => (true, 0, *value, 0, 0),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => (
                    false,
                    *feature as u32,
                    *threshold,
                    *left as u32,
                    *right as u32,
                ),
            })
            .collect()
    }

    pub(crate) fn from_flat(rows: Vec<(bool, u32, f64, u32, u32)>) -> Option<RegressionTree> {
        let n = rows.len();
        if n == 0 {
            return None;
        }
        let mut nodes = Vec::with_capacity(n);
        for (i, (is_leaf, feature, value, left, right)) in rows.into_iter().enumerate() {
            if is_leaf {
                nodes.push(Node::Leaf { value });
            } else {
                // Children must precede their parent in arena order.
                if left as usize >= i || right as usize >= i {
                    return None;
                }
                nodes.push(Node::Split {
                    feature: feature as usize,
                    threshold: value,
                    left: left as usize,
                    right: right as usize,
                });
            }
        }
        Some(RegressionTree { nodes })
    }
}

/// Convenience for the variance-reduction view: g = −y·w, h = w, so leaves
/// are weighted target means and gain is weighted variance reduction.
pub fn fit_mean_tree(
    x: &[Vec<f64>],
    y: &[f64],
    weights: Option<&[f64]>,
    params: &TreeFitParams,
    rng: &mut ChaCha8Rng,
) -> RegressionTree {
    let (grad, hess): (Vec<f64>, Vec<f64>) = match weights {
        Some(w) => (
            y.iter().zip(w).map(|(yi, wi)| -yi * wi).collect(),
            w.to_vec(),
        ),
        None => (y.iter().map(|yi| -yi).collect(), vec![1.0; y.len()]),
    };
    RegressionTree::fit(x, &grad, &hess, params, rng)
}

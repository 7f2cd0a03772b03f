//! Benchmark pipeline for predicting RAG retrieval answer quality.
//!
//! The library decomposes each tabular retrieval feature into narrow-band
//! modes (VMD), tunes regressor hyperparameters with particle swarm
//! optimization, trains a BiLSTM and a gradient-boosted-tree model on the
//! expanded features, and evaluates them against five classical baselines
//! under a shared metric suite. Every stage is seeded and deterministic:
//! the same inputs and seed produce byte-identical artifacts.

pub mod data;
pub mod metrics;
pub mod pipeline;
pub mod pso;
pub mod regressors;
pub mod seeds;
pub mod vmd;

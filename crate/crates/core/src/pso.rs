//! Particle swarm optimization over a bounded hyperparameter box.
//!
//! Maximizes an externally supplied fitness. Velocities combine inertia,
//! cognitive pull toward each particle's own best, and social pull toward
//! the swarm best; positions stay clamped to the box. Integer dimensions
//! move continuously and are rounded only at evaluation time and in the
//! reported best position, which preserves the swarm dynamics.
//!
//! Evaluations may run concurrently: each gets its own seed derived from
//! (run seed, iteration, particle), and best updates are reduced in
//! particle order with strict-improvement ties, so results are identical
//! under any schedule.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::seeds;

#[derive(Debug, Error)]
pub enum PsoError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("no feasible point: every fitness evaluation failed")]
    NoFeasiblePoint,
    #[error("failed to write eval log `{path}`: {source}")]
    Log {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Bounded box with optionally integer-valued dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer_dims: BTreeSet<usize>,
}

impl SearchSpace {
    pub fn new(
        lower: Vec<f64>,
        upper: Vec<f64>,
        integer_dims: impl IntoIterator<Item = usize>,
    ) -> Result<Self, PsoError> {
        let space = Self {
            lower,
            upper,
            integer_dims: integer_dims.into_iter().collect(),
        };
        space.validate()?;
        Ok(space)
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    fn validate(&self) -> Result<(), PsoError> {
        if self.lower.is_empty() {
            return Err(PsoError::Argument("search space has no dimensions".into()));
        }
        if self.lower.len() != self.upper.len() {
            return Err(PsoError::Argument(format!(
                "bound lengths differ: {} lower vs {} upper",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for d in 0..self.lower.len() {
            if !(self.lower[d].is_finite() && self.upper[d].is_finite()) {
                return Err(PsoError::Argument(format!("non-finite bound in dim {d}")));
            }
            if self.lower[d] > self.upper[d] {
                return Err(PsoError::Argument(format!(
                    "dim {d}: lower {} exceeds upper {}",
                    self.lower[d], self.upper[d]
                )));
            }
        }
        if let Some(&d) = self.integer_dims.iter().find(|&&d| d >= self.lower.len()) {
            return Err(PsoError::Argument(format!(
                "integer dim {d} out of range for {} dims",
                self.lower.len()
            )));
        }
        Ok(())
    }

    /// Rounds integer dims and clamps back into the box.
    fn snap(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(d, &v)| {
                let v = if self.integer_dims.contains(&d) {
                    v.round()
                } else {
                    v
                };
                v.clamp(self.lower[d], self.upper[d])
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwarmConfig {
    pub population: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity cap per dimension, as a fraction of that dimension's range.
    pub vmax_fraction: f64,
}

impl Default for SwarmConfig {
    /// Population 10, 15 iterations; w = 0.8, c1 = c2 = 1.5, vmax = half
    /// the range.
    fn default() -> Self {
        Self {
            population: 10,
            iterations: 15,
            inertia: 0.8,
            cognitive: 1.5,
            social: 1.5,
            vmax_fraction: 0.5,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<(), PsoError> {
        if self.population < 2 {
            return Err(PsoError::Argument(format!(
                "population must be at least 2, got {}",
                self.population
            )));
        }
        if self.iterations < 1 {
            return Err(PsoError::Argument("iterations must be at least 1".into()));
        }
        if !(self.vmax_fraction > 0.0 && self.vmax_fraction <= 1.0) {
            return Err(PsoError::Argument(format!(
                "vmax_fraction must lie in (0, 1], got {}",
                self.vmax_fraction
            )));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
        ] {
            if !v.is_finite() {
                return Err(PsoError::Argument(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of a swarm run.
#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    /// Best position found, integer dims rounded, inside the box.
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Swarm-best fitness after each iteration; non-decreasing.
    pub best_history: Vec<f64>,
    pub evaluations: usize,
}

/// One fitness evaluation, as passed to the fitness function.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub iteration: usize,
    pub particle: usize,
    pub position: Vec<f64>,
    pub fitness: f64,
}

/// Maximizes `fitness` over `space`.
///
/// `fitness` receives the (integer-rounded) position and a per-evaluation
/// seed; returning `None` or a non-finite value counts as −∞.
pub fn optimize<F>(
    space: &SearchSpace,
    fitness: F,
    cfg: &SwarmConfig,
    seed: u64,
) -> Result<PsoResult, PsoError>
where
    F: Fn(&[f64], u64) -> Option<f64> + Sync,
{
    optimize_recorded(space, fitness, cfg, seed).map(|(result, _)| result)
}

/// Like [`optimize`], additionally returning every evaluation for audit.
pub fn optimize_recorded<F>(
    space: &SearchSpace,
    fitness: F,
    cfg: &SwarmConfig,
    seed: u64,
) -> Result<(PsoResult, Vec<EvalRecord>), PsoError>
where
    F: Fn(&[f64], u64) -> Option<f64> + Sync,
{
    space.validate()?;
    cfg.validate()?;
    let d = space.dims();
    let mut swarm_rng = seeds::rng(seeds::derive(seed, "pso/swarm"));
    let eval_base = seeds::derive(seed, "pso/eval");

    let mut positions: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| {
            (0..d)
                .map(|dim| swarm_rng.gen_range(space.lower[dim]..=space.upper[dim]))
                .collect()
        })
        .collect();
    let mut velocities = vec![vec![0.0; d]; cfg.population];
    let vmax: Vec<f64> = (0..d)
        .map(|dim| cfg.vmax_fraction * (space.upper[dim] - space.lower[dim]))
        .collect();

    let mut pbest_pos = positions.clone();
    let mut pbest_fit = vec![f64::NEG_INFINITY; cfg.population];
    let mut gbest_pos = positions[0].clone();
    let mut gbest_fit = f64::NEG_INFINITY;
    let mut history = Vec::with_capacity(cfg.iterations);
    let mut records = Vec::with_capacity(cfg.population * cfg.iterations);

    for iteration in 0..cfg.iterations {
        // Evaluate-then-move: this iteration's evals use current positions.
        let snapped: Vec<Vec<f64>> = positions.iter().map(|x| space.snap(x)).collect();
        let fits: Vec<f64> = snapped
            .par_iter()
            .enumerate()
            .map(|(particle, x)| {
                let eval_seed = seeds::mix(eval_base, &[iteration as u64, particle as u64]);
                match fitness(x, eval_seed) {
                    Some(f) if f.is_finite() => f,
                    _ => f64::NEG_INFINITY,
                }
            })
            .collect();
        for particle in 0..cfg.population {
            records.push(EvalRecord {
                iteration,
                particle,
                position: snapped[particle].clone(),
                fitness: fits[particle],
            });
            // Strict improvement only: earlier iterations and lower particle
            // indices win ties, making the reduction schedule-independent.
            if fits[particle] > pbest_fit[particle] {
                pbest_fit[particle] = fits[particle];
                pbest_pos[particle] = positions[particle].clone();
            }
            if fits[particle] > gbest_fit {
                gbest_fit = fits[particle];
                gbest_pos = positions[particle].clone();
            }
        }
        history.push(gbest_fit);

        for particle in 0..cfg.population {
            for dim in 0..d {
                let r1: f64 = swarm_rng.gen();
                let r2: f64 = swarm_rng.gen();
                let x = positions[particle][dim];
                let v = cfg.inertia * velocities[particle][dim]
                    + cfg.cognitive * r1 * (pbest_pos[particle][dim] - x)
                    + cfg.social * r2 * (gbest_pos[dim] - x);
                let v = v.clamp(-vmax[dim], vmax[dim]);
                velocities[particle][dim] = v;
                positions[particle][dim] = (x + v).clamp(space.lower[dim], space.upper[dim]);
            }
        }
    }

    if gbest_fit == f64::NEG_INFINITY {
        return Err(PsoError::NoFeasiblePoint);
    }
    Ok((
        PsoResult {
            best_position: space.snap(&gbest_pos),
            best_fitness: gbest_fit,
            best_history: history,
            evaluations: cfg.population * cfg.iterations,
        },
        records,
    ))
}

/// Writes the evaluation log as CSV: iteration, particle, one column per
/// dimension, fitness.
pub fn write_eval_log(
    records: &[EvalRecord],
    dim_names: &[&str],
    path: &Path,
) -> Result<(), PsoError> {
    let mut out = String::from("iteration,particle");
    for name in dim_names {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",fitness\n");
    for r in records {
        out.push_str(&format!("{},{}", r.iteration, r.particle));
        for v in &r.position {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{}\n", r.fitness));
    }
    std::fs::write(path, out).map_err(|source| PsoError::Log {
        path: path.display().to_string(),
        source,
    })
}

/// The three BiLSTM hyperparameters under search: L2 coefficient, initial
/// learning rate, and hidden units (integer).
pub fn bilstm_search_space() -> SearchSpace {
    SearchSpace {
        lower: vec![1e-8, 1e-4, 2.0],
        upper: vec![1e-1, 1e-1, 100.0],
        integer_dims: BTreeSet::from([2]),
    }
}

/// The three boosted-tree hyperparameters under search: learning rate,
/// maximum depth (integer), and leaf regularization λ.
pub fn gbt_search_space() -> SearchSpace {
    SearchSpace {
        lower: vec![0.01, 2.0, 1e-3],
        upper: vec![0.5, 8.0, 10.0],
        integer_dims: BTreeSet::from([1]),
    }
}

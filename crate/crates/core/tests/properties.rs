//! Randomized invariants over the data plumbing, metrics, PSO, and VMD.
//! Each property states something that must hold for *every* input, so a
//! shrunk counterexample here is a real bug, not a flaky tolerance.

use proptest::prelude::*;

use ragq::data::{self, Dataset, FEATURE_COUNT};
use ragq::metrics;
use ragq::pso::{self, SearchSpace, SwarmConfig};
use ragq::vmd::{decompose, VmdConfig};

fn dataset_strategy(rows: std::ops::Range<usize>) -> impl Strategy<Value = Dataset> {
    (rows, any::<u64>()).prop_map(|(n, seed)| data::synthesize(n, seed).expect("synthesize"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_every_row_exactly_once(
        n in 2usize..200,
        fraction in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let ds = data::synthesize(n.max(10), seed)?;
        let n = ds.row_count();
        let s = data::split(&ds, fraction, seed)?;
        prop_assert!(!s.train.is_empty());
        prop_assert!(!s.validation.is_empty());
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        // Same inputs, same partition.
        let again = data::split(&ds, fraction, seed)?;
        prop_assert_eq!(s, again);
    }

    #[test]
    fn csv_round_trip_is_bitwise_exact(ds in dataset_strategy(10..60)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        data::save_csv(&ds, &path)?;
        let back = data::load_csv(&path)?;
        prop_assert_eq!(ds, back);
    }

    #[test]
    fn standardize_yields_unit_columns_and_inverts(ds in dataset_strategy(10..80)) {
        let n = ds.row_count() as f64;
        let (scaled, stats) = data::standardize(&ds)?;
        for j in 0..FEATURE_COUNT {
            let col = scaled.column(j);
            let mean = col.iter().sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9, "column {} mean {}", j, mean);
            if stats.std[j] > 0.0 {
                let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                prop_assert!((var - 1.0).abs() < 1e-9, "column {} var {}", j, var);
            } else {
                prop_assert!(col.iter().all(|&x| x == 0.0));
            }
        }
        let restored = stats.invert(&scaled);
        for (a, b) in ds.feature_rows().iter().zip(restored.feature_rows().iter()) {
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn metric_identities_hold_for_any_pair(
        pairs in prop::collection::vec((1.0f64..100.0, -100.0f64..100.0), 2..64),
    ) {
        let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let yhat: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let m = metrics::regression_metrics_partial(&y, &yhat)?;
        prop_assert!(m.mse >= 0.0);
        prop_assert!((m.rmse - m.mse.sqrt()).abs() <= 1e-15 * m.rmse.max(1.0));
        // Power-mean inequality: L1 average never exceeds the L2 average.
        prop_assert!(m.mae <= m.rmse + 1e-12);
        if let Some(r2) = m.r2 {
            prop_assert!(r2 <= 1.0 + 1e-12);
            // R² is invariant under a joint affine map of target and prediction.
            let ya: Vec<f64> = y.iter().map(|v| 3.0 * v - 11.0).collect();
            let pa: Vec<f64> = yhat.iter().map(|v| 3.0 * v - 11.0).collect();
            let moved = metrics::regression_metrics_partial(&ya, &pa)?.r2.unwrap();
            prop_assert!((r2 - moved).abs() <= 1e-9 * r2.abs().max(1.0));
        }
    }

    #[test]
    fn pearson_stays_in_range_and_ignores_positive_affine(
        pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..64),
        scale in 0.1f64..10.0,
        shift in -20.0f64..20.0,
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        if let Ok(r) = metrics::pearson_corr(&x, &y) {
            prop_assert!((-1.0..=1.0).contains(&r), "r = {}", r);
            let xa: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            if let Ok(ra) = metrics::pearson_corr(&xa, &y) {
                prop_assert!((r - ra).abs() <= 1e-9, "{} vs {}", r, ra);
            }
        }
    }
}

proptest! {
    // The swarm and decomposition cases run a real optimizer/solver each
    // time, so fewer cases keep the target fast.
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pso_best_stays_in_bounds_with_monotone_history(
        dims in 1usize..4,
        widths in prop::collection::vec(0.5f64..20.0, 3),
        centers in prop::collection::vec(-5.0f64..5.0, 3),
        population in 3usize..8,
        iterations in 2usize..10,
        seed in any::<u64>(),
    ) {
        let lower: Vec<f64> = centers[..dims].iter().zip(&widths).map(|(c, w)| c - w).collect();
        let upper: Vec<f64> = centers[..dims].iter().zip(&widths).map(|(c, w)| c + w).collect();
        let space = SearchSpace::new(lower.clone(), upper.clone(), []).unwrap();
        let cfg = SwarmConfig { population, iterations, ..SwarmConfig::default() };
        let target = centers[..dims].to_vec();
        let result = pso::optimize(
            &space,
            |p, _| Some(-p.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()),
            &cfg,
            seed,
        )?;
        prop_assert_eq!(result.best_history.len(), iterations);
        prop_assert!(result.best_history.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(
            *result.best_history.last().unwrap(),
            result.best_fitness
        );
        for (d, v) in result.best_position.iter().enumerate() {
            prop_assert!(
                (lower[d]..=upper[d]).contains(v),
                "dim {} at {} outside [{}, {}]", d, v, lower[d], upper[d]
            );
        }
    }

    #[test]
    fn vmd_modes_sum_stays_near_the_signal_energy_scale(
        n in 32usize..160,
        k in 1usize..4,
        freq in 0.02f64..0.45,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ragq::seeds::rng(seed);
        let signal: Vec<f64> = (0..n)
            .map(|i| {
                (2.0 * std::f64::consts::PI * freq * i as f64).cos()
                    + 0.1 * rng.gen_range(-1.0..1.0)
            })
            .collect();
        let cfg = VmdConfig { n_modes: k, max_iterations: 80, ..VmdConfig::default() };
        let out = decompose(&signal, &cfg)?;
        prop_assert_eq!(out.modes.len(), k);
        prop_assert!(out.modes.iter().all(|m| m.len() == n));
        prop_assert!(out.omegas.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(out.omegas.iter().all(|w| (0.0..=0.5).contains(w)));
        // The reconstruction can drop noise but must not blow up: its energy
        // stays within the signal's energy plus a small margin.
        let recon_energy: f64 = (0..n)
            .map(|i| out.modes.iter().map(|m| m[i]).sum::<f64>().powi(2))
            .sum();
        let signal_energy: f64 = signal.iter().map(|v| v * v).sum();
        prop_assert!(recon_energy <= signal_energy * 1.5 + 1.0);
    }
}

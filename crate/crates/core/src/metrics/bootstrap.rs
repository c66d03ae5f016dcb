//! Paired bootstrap significance testing for per-example metric vectors.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::rng::derived_rng;

/// Which side of a comparison won on the observed means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOutcome {
    pub p_value: f64,
    pub significant: bool,
    /// `None` when the observed means are exactly equal (no winner exists).
    pub winner: Option<Winner>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub samples: usize,
    pub size: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { samples: 10_000, size: 5_000, alpha: 0.05, seed: 0 }
    }
}

/// Paired bootstrap: resample example indices with replacement and measure
/// how often the observed winner fails to win.
///
/// `p = (resamples where the winner's resampled mean is not strictly
/// greater) / samples`, significant iff `p < alpha`. Each resample draws its
/// RNG from a derived seed, so results are identical across thread counts,
/// and swapping the two sides flips the winner without changing `p`.
pub fn bootstrap_compare(
    scores_a: &[f64],
    scores_b: &[f64],
    cfg: &BootstrapConfig,
) -> Result<BootstrapOutcome, MetricError> {
    if scores_a.len() != scores_b.len() {
        return Err(MetricError::LengthMismatch { a: scores_a.len(), b: scores_b.len() });
    }
    if scores_a.is_empty() {
        return Err(MetricError::EmptyInput { what: "paired scores" });
    }
    if cfg.samples == 0 || cfg.size == 0 {
        return Err(MetricError::BadArgument("samples and size must be ≥ 1".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(MetricError::BadArgument("alpha must lie in (0, 1)".into()));
    }

    let n = scores_a.len();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mean_a, mean_b) = (mean(scores_a), mean(scores_b));
    if mean_a == mean_b {
        // No observed winner; nothing to test.
        return Ok(BootstrapOutcome { p_value: 1.0, significant: false, winner: None });
    }
    let winner = if mean_a > mean_b { Winner::A } else { Winner::B };

    let losses: usize = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = derived_rng(cfg.seed, "resample", i as u64);
            let mut sum_a = 0.0;
            let mut sum_b = 0.0;
            for _ in 0..cfg.size {
                let idx = rng.random_range(0..n);
                sum_a += scores_a[idx];
                sum_b += scores_b[idx];
            }
            let a_wins = sum_a > sum_b;
            let winner_wins = match winner {
                Winner::A => a_wins,
                Winner::B => sum_b > sum_a,
            };
            usize::from(!winner_wins)
        })
        .sum();

    let p_value = losses as f64 / cfg.samples as f64;
    Ok(BootstrapOutcome { p_value, significant: p_value < cfg.alpha, winner: Some(winner) })
}

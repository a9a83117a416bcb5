//! Monte-Carlo experiment runner and statistics aggregation.
//!
//! Every shot draws its randomness from an independent stream derived from
//! `(master seed, shot index)` with SHA-256, so results are reproducible
//! and order-independent under parallel execution.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::circuits::{run_chi, run_cluster, Circuit, RunOptions};
use crate::error::Result;
use crate::homodyne::{error_probability, Parity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub circuit: Circuit,
    pub alpha: f64,
    pub theta: f64,
    pub shots: u64,
    pub seed: u64,
    pub feed_forward: bool,
    pub output_path: Option<String>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shots < 1 {
            return Err(crate::error::SimError::InvalidParameter(
                "shots must be >= 1".into(),
            ));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(crate::error::SimError::InvalidParameter(
                "alpha must be > 0".into(),
            ));
        }
        if !self.theta.is_finite() || self.theta <= 0.0 || self.theta >= std::f64::consts::FRAC_PI_2
        {
            return Err(crate::error::SimError::InvalidParameter(
                "theta must lie in (0, pi/2)".into(),
            ));
        }
        Ok(())
    }
}

/// Aggregated statistics of one experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentStats {
    pub schema: u32,
    pub circuit: Circuit,
    pub alpha: f64,
    pub theta: f64,
    pub seed: u64,
    pub feed_forward: bool,
    pub shots: u64,
    /// Fraction of shots heralded as successful. With feed-forward on this
    /// is 1 by construction; with it off, the strict all-Even fraction.
    pub heralded_success_fraction: f64,
    /// Mean fidelity to the target over all shots (ground truth, including
    /// misclassified shots).
    pub true_fidelity_mean: f64,
    /// Fraction of entangler events whose classification disagreed with the
    /// sampled branch.
    pub misclassification_rate_empirical: f64,
    /// Per-branch Gaussian tail `Q(x_d/2)`.
    pub misclassification_rate_analytic: f64,
    /// `[even, odd]` classification counts for each of the three entanglers.
    pub parity_histogram: [[u64; 2]; 3],
}

/// Independent per-shot RNG stream: ChaCha12 seeded with
/// `SHA-256(seed_le || shot_le)`.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(shot.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(key)
}

struct ShotSummary {
    fidelity: f64,
    parities: [Parity; 3],
    misclassified: [bool; 3],
}

fn run_shot(config: &ExperimentConfig, shot: u64) -> Result<ShotSummary> {
    let mut rng = shot_rng(config.seed, shot);
    let opts = RunOptions {
        feed_forward: config.feed_forward,
        force_parities: None,
    };
    let record = match config.circuit {
        Circuit::Chi => run_chi(config.alpha, config.theta, &mut rng, &opts)?,
        Circuit::Cluster => run_cluster(config.alpha, config.theta, &mut rng, &opts)?,
    };
    let mut parities = [Parity::Even; 3];
    let mut misclassified = [false; 3];
    for (i, r) in record.entangler_records.iter().enumerate() {
        parities[i] = r.outcome.parity;
        misclassified[i] = r.misclassified;
    }
    Ok(ShotSummary {
        fidelity: record.fidelity_to_target,
        parities,
        misclassified,
    })
}

/// Run `config.shots` independent circuit executions and aggregate.
/// Shots execute in parallel; aggregation walks the shot-ordered results
/// sequentially, so the output is identical for any thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentStats> {
    config.validate()?;
    let summaries: Vec<ShotSummary> = (0..config.shots)
        .into_par_iter()
        .map(|shot| run_shot(config, shot))
        .collect::<Result<_>>()?;

    let shots = config.shots;
    let mut fidelity_sum = 0.0;
    let mut misclass_events = 0u64;
    let mut all_even = 0u64;
    let mut histogram = [[0u64; 2]; 3];
    for s in &summaries {
        fidelity_sum += s.fidelity;
        if s.parities.iter().all(|&p| p == Parity::Even) {
            all_even += 1;
        }
        for ((h, &parity), &wrong) in histogram.iter_mut().zip(&s.parities).zip(&s.misclassified) {
            match parity {
                Parity::Even => h[0] += 1,
                Parity::Odd => h[1] += 1,
            }
            if wrong {
                misclass_events += 1;
            }
        }
    }

    Ok(ExperimentStats {
        schema: 1,
        circuit: config.circuit,
        alpha: config.alpha,
        theta: config.theta,
        seed: config.seed,
        feed_forward: config.feed_forward,
        shots,
        heralded_success_fraction: if config.feed_forward {
            1.0
        } else {
            all_even as f64 / shots as f64
        },
        true_fidelity_mean: fidelity_sum / shots as f64,
        misclassification_rate_empirical: misclass_events as f64 / (3 * shots) as f64,
        misclassification_rate_analytic: error_probability(config.alpha, config.theta),
        parity_histogram: histogram,
    })
}

pub const STATS_CSV_HEADER: &str = "circuit,alpha,theta,seed,feed_forward,shots,\
heralded_success_fraction,true_fidelity_mean,misclassification_rate_empirical,\
misclassification_rate_analytic,e1_even,e1_odd,e2_even,e2_odd,e3_even,e3_odd";

impl ExperimentStats {
    pub fn to_csv_row(&self) -> String {
        let h = &self.parity_histogram;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.circuit,
            self.alpha,
            self.theta,
            self.seed,
            self.feed_forward,
            self.shots,
            self.heralded_success_fraction,
            self.true_fidelity_mean,
            self.misclassification_rate_empirical,
            self.misclassification_rate_analytic,
            h[0][0], h[0][1], h[1][0], h[1][1], h[2][0], h[2][1]
        )
    }
}

/// Pick theta so the peak separation `x_d = 2 alpha (1 - cos theta)` hits a
/// requested value.
pub fn theta_for_separation(alpha: f64, x_d: f64) -> f64 {
    (1.0 - x_d / (2.0 * alpha)).acos()
}

/// Cartesian sweep over `alphas` x `thetas` with a shared seed.
pub fn sweep(
    circuit: Circuit,
    alphas: &[f64],
    thetas: &[f64],
    shots: u64,
    seed: u64,
    feed_forward: bool,
) -> Result<Vec<ExperimentStats>> {
    let mut rows = Vec::with_capacity(alphas.len() * thetas.len());
    for &alpha in alphas {
        for &theta in thetas {
            let config = ExperimentConfig {
                circuit,
                alpha,
                theta,
                shots,
                seed,
                feed_forward,
                output_path: None,
                format: OutputFormat::Csv,
            };
            rows.push(run_experiment(&config)?);
        }
    }
    Ok(rows)
}

//! X-quadrature homodyne measurement of the probe.
//!
//! Quadrature convention, fixed throughout:
//!   <x|beta> = (2 pi)^{-1/4} exp(-(x - 2 Re beta)^2 / 4)
//!              * exp(i (Im beta * x - Re beta * Im beta)),
//! so `|<x|beta>|^2` is a unit-variance Gaussian centered at `2 Re beta`.
//! For the probe branches `beta = alpha e^{i k theta}` the peaks sit at
//! `2 alpha cos(k theta)` and the branch phase is
//! `phi_k(x) = alpha x sin(k theta) - (alpha^2/2) sin(2 k theta)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::state::{HybridState, PolState};

/// Parity classification of a homodyne outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Result of one homodyne measurement.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HomodyneOutcome {
    /// Measured quadrature value.
    pub x: f64,
    /// Threshold classification: Even iff `x > alpha (1 + cos theta)`.
    pub parity: Parity,
    /// Correction phase `phi(x)`, reduced mod 2 pi.
    pub phi: f64,
    /// Posterior weight of the zero-kick branch given `x`.
    pub p_even_branch: f64,
}

/// Quadrature kernel `<x|beta>`.
pub fn quadrature_amplitude(x: f64, beta: Complex64) -> Complex64 {
    const NORM: f64 = 0.6316187777460647; // (2 pi)^{-1/4}
    let d = x - 2.0 * beta.re;
    let modulus = NORM * (-d * d / 4.0).exp();
    Complex64::from_polar(modulus, beta.im * x - beta.re * beta.im)
}

fn gaussian_pdf(x: f64, mean: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.3989422804014327;
    let d = x - mean;
    INV_SQRT_2PI * (-0.5 * d * d).exp()
}

/// Weight of each probe branch: list of `(k, sum of |amp|^2)`.
fn branch_weights(state: &HybridState) -> Result<Vec<(i32, f64)>> {
    state.check_single_probe_label()?;
    let mut map: std::collections::BTreeMap<i32, f64> = std::collections::BTreeMap::new();
    for t in &state.terms {
        *map.entry(t.probe_k).or_insert(0.0) += t.amp.norm_sqr();
    }
    Ok(map.into_iter().collect())
}

fn branch_mean(alpha: f64, theta: f64, k: i32) -> f64 {
    2.0 * alpha * (k as f64 * theta).cos()
}

/// Probability density of the homodyne outcome `x`: a Gaussian mixture over
/// the probe branches.
pub fn outcome_density(state: &HybridState, x: f64) -> Result<f64> {
    let weights = branch_weights(state)?;
    Ok(weights
        .iter()
        .map(|&(k, w)| w * gaussian_pdf(x, branch_mean(state.alpha, state.theta, k)))
        .sum())
}

/// Even/odd threshold at the Gaussian midpoint `x0 = alpha (1 + cos theta)`;
/// the boundary itself classifies as Odd.
pub fn classify_parity(x: f64, alpha: f64, theta: f64) -> Parity {
    if x > alpha * (1.0 + theta.cos()) {
        Parity::Even
    } else {
        Parity::Odd
    }
}

/// Correction phase `phi(x) = alpha x sin theta - (alpha^2/2) sin 2theta`,
/// reduced mod 2 pi. This is the phase the kernel puts on the `k = +1`
/// branch, so feed-forward built from it cancels exactly.
pub fn phase_phi(x: f64, alpha: f64, theta: f64) -> f64 {
    (alpha * x * theta.sin() - 0.5 * alpha * alpha * (2.0 * theta).sin())
        .rem_euclid(2.0 * std::f64::consts::PI)
}

/// Unreduced kernel phase of the `k = +1` branch at outcome `x`, computed
/// with the same floating-point operations as [`quadrature_amplitude`] uses
/// in [`collapse`]. A correction built from this value cancels the
/// collapsed branch phase to machine precision even when the raw angle is
/// many thousands of radians; the reduced [`phase_phi`] would leave a
/// residual of order `|angle| * eps`.
pub fn branch_phase_raw(x: f64, alpha: f64, theta: f64) -> f64 {
    let beta = Complex64::from_polar(alpha, theta);
    beta.im * x - beta.re * beta.im
}

/// Per-branch misclassification probability `Q(x_d / 2)` with
/// `x_d = 2 alpha (1 - cos theta)`: the Gaussian tail mass falling on the
/// wrong side of the threshold.
pub fn error_probability(alpha: f64, theta: f64) -> f64 {
    let x_d = 2.0 * alpha * (1.0 - theta.cos());
    0.5 * libm::erfc(x_d / (2.0 * std::f64::consts::SQRT_2))
}

fn fill_outcome(state: &HybridState, x: f64) -> Result<HomodyneOutcome> {
    let weights = branch_weights(state)?;
    let total: f64 = weights
        .iter()
        .map(|&(k, w)| w * gaussian_pdf(x, branch_mean(state.alpha, state.theta, k)))
        .sum();
    let even_mass: f64 = weights
        .iter()
        .filter(|&&(k, _)| k == 0)
        .map(|&(_, w)| w * gaussian_pdf(x, branch_mean(state.alpha, state.theta, 0)))
        .sum();
    Ok(HomodyneOutcome {
        x,
        parity: classify_parity(x, state.alpha, state.theta),
        phi: phase_phi(x, state.alpha, state.theta),
        p_even_branch: if total > 0.0 { even_mass / total } else { 0.0 },
    })
}

/// Draw an outcome from the exact mixture: select a probe branch by its
/// weight, then draw a unit-variance Gaussian around that branch's peak.
/// Returns the outcome together with the sampled branch index (ground
/// truth for misclassification bookkeeping).
pub fn sample_outcome_traced<R: Rng + ?Sized>(
    state: &HybridState,
    rng: &mut R,
) -> Result<(HomodyneOutcome, i32)> {
    let weights = branch_weights(state)?;
    let total: f64 = weights.iter().map(|&(_, w)| w).sum();
    if total <= 0.0 {
        return Err(SimError::ZeroNorm);
    }
    let mut u = rng.gen::<f64>() * total;
    let mut chosen = weights[weights.len() - 1].0;
    for &(k, w) in &weights {
        if u < w {
            chosen = k;
            break;
        }
        u -= w;
    }
    let z: f64 = rng.sample(StandardNormal);
    let x = branch_mean(state.alpha, state.theta, chosen) + z;
    Ok((fill_outcome(state, x)?, chosen))
}

pub fn sample_outcome<R: Rng + ?Sized>(state: &HybridState, rng: &mut R) -> Result<HomodyneOutcome> {
    sample_outcome_traced(state, rng).map(|(o, _)| o)
}

/// Condition the state on outcome `x`: multiply each term by the kernel
/// value for its probe branch, discard the probe, renormalize.
pub fn collapse(state: &HybridState, x: f64) -> Result<PolState> {
    state.check_single_probe_label()?;
    let terms: Vec<_> = state
        .terms
        .iter()
        .map(|t| {
            let beta = Complex64::from_polar(state.alpha, t.probe_k as f64 * state.theta);
            (t.pols.clone(), t.amp * quadrature_amplitude(x, beta))
        })
        .collect();
    PolState {
        n_modes: state.n_modes,
        terms,
    }
    .simplify()
    .normalize()
}

/// Describe the outcome for a forced `x` without sampling.
pub fn outcome_at(state: &HybridState, x: f64) -> Result<HomodyneOutcome> {
    fill_outcome(state, x)
}

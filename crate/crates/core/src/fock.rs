//! Truncated number-basis oracle.
//!
//! Brute-force validation engine for the probe abstraction: coherent states
//! in a truncated Fock space, the exact cross-Kerr unitary, and quadrature
//! wavefunctions built from Hermite functions. Independent of the
//! phase-label bookkeeping in [`crate::state`] and [`crate::homodyne`];
//! used only to certify it.

use num_complex::Complex64;

use crate::elements::{apply_cross_kerr, KerrSite};
use crate::error::{Result, SimError};
use crate::homodyne::outcome_density;
use crate::state::{HybridState, Pol};

/// Probe vector in the truncated number basis.
#[derive(Debug, Clone)]
pub struct FockVector {
    pub amps: Vec<Complex64>,
}

impl FockVector {
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn overlap(&self, other: &FockVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Truncation dimension that keeps the missing coherent-state mass below
/// 1e-10 for `|alpha| <= 4`.
pub fn default_truncation(alpha: f64) -> usize {
    (alpha * alpha + 8.0 * alpha + 20.0).ceil() as usize
}

/// Coherent state `|alpha>` truncated at `n` photons:
/// `amps[k] = exp(-|alpha|^2/2) alpha^k / sqrt(k!)`, evaluated in the log
/// domain so large `k` never overflows.
pub fn coherent_fock(alpha: Complex64, n: usize) -> Result<FockVector> {
    if n < 1 {
        return Err(SimError::InvalidParameter("truncation must be >= 1".into()));
    }
    let r = alpha.norm();
    let arg = alpha.arg();
    let amps = (0..=n)
        .map(|k| {
            if k > 0 && r == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let ln_mag =
                -0.5 * r * r + k as f64 * if k == 0 { 0.0 } else { r.ln() } - 0.5 * libm::lgamma(k as f64 + 1.0);
            Complex64::from_polar(ln_mag.exp(), k as f64 * arg)
        })
        .collect();
    Ok(FockVector { amps })
}

/// Exact cross-Kerr unitary on the probe given `n_signal` photons in the
/// Kerr arm: `amps[n] *= exp(i theta n_signal n)`.
pub fn kerr_apply(probe: &FockVector, n_signal: u8, theta: f64) -> FockVector {
    let phase_per_photon = theta * n_signal as f64;
    FockVector {
        amps: probe
            .amps
            .iter()
            .enumerate()
            .map(|(n, a)| a * Complex64::from_polar(1.0, phase_per_photon * n as f64))
            .collect(),
    }
}

/// Quadrature wavefunction `sum_n amps[n] h_n(x)` where `h_n` are the
/// orthonormal oscillator eigenfunctions scaled so a coherent state `beta`
/// has mean `2 Re beta` and unit variance. Stable three-term recurrence,
/// no factorials.
pub fn quadrature_wavefunction(probe: &FockVector, x: f64) -> Complex64 {
    const NORM: f64 = 0.6316187777460647; // (2 pi)^{-1/4}
    let y = x / std::f64::consts::SQRT_2;
    let mut h_prev = 0.0f64;
    let mut h = NORM * (-x * x / 4.0).exp();
    let mut acc = probe.amps[0] * h;
    for n in 0..probe.amps.len() - 1 {
        let nf = n as f64;
        let h_next = y * (2.0 / (nf + 1.0)).sqrt() * h - (nf / (nf + 1.0)).sqrt() * h_prev;
        h_prev = h;
        h = h_next;
        acc += probe.amps[n + 1] * h;
    }
    acc
}

/// Run one EPR entangler on `|+>|+>` in the full Fock representation and
/// compare its homodyne density to the phase-label model's on a grid.
/// Returns the maximum absolute deviation.
pub fn validate_phase_label_model(alpha: f64, theta: f64, n_trunc: usize) -> Result<f64> {
    let base = coherent_fock(Complex64::new(alpha, 0.0), n_trunc)?;
    let missing = 1.0 - base.norm_sq();
    if missing >= 1e-10 {
        return Err(SimError::TruncationInsufficient(missing));
    }

    // Probe vector per polarization string: H in the first (second) mode
    // kicks the probe by +theta (-theta).
    let probes = [
        kerr_apply(&kerr_apply(&base, 1, theta), 1, -theta), // HH
        kerr_apply(&base, 1, theta),                         // HV
        kerr_apply(&base, 1, -theta),                        // VH
        base.clone(),                                        // VV
    ];

    let model = {
        let s = HybridState::new_plus_product(2, alpha, theta)?;
        let s = apply_cross_kerr(&s, KerrSite { mode: 0, pol: Pol::H, sign: 1 })?;
        apply_cross_kerr(&s, KerrSite { mode: 1, pol: Pol::H, sign: -1 })?
    };

    let lo = 2.0 * alpha * theta.cos() - 8.0;
    let hi = 2.0 * alpha + 8.0;
    let step = 0.05;
    let n_pts = ((hi - lo) / step).ceil() as usize + 1;
    let mut max_dev = 0.0f64;
    for i in 0..n_pts {
        let x = lo + i as f64 * step;
        let p_fock: f64 = probes
            .iter()
            .map(|p| 0.25 * quadrature_wavefunction(p, x).norm_sqr())
            .sum();
        let p_model = outcome_density(&model, x)?;
        max_dev = max_dev.max((p_fock - p_model).abs());
    }
    Ok(max_dev)
}

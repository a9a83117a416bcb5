//! Hybrid signal-probe state representation.
//!
//! A state is a superposition of terms `|pols> |alpha e^{i k theta}>` where
//! `pols` is a string of H/V polarization labels over the signal modes and
//! `k` is an integer probe-phase index. The probe is never expanded into a
//! wavefunction here; only `k` is tracked. [`crate::fock`] certifies that
//! abstraction against a truncated number-basis computation.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Amplitudes below this are pruned by `simplify`.
pub const AMP_PRUNE_EPS: f64 = 1e-14;
/// Norm checks are performed to this tolerance.
pub const NORM_EPS: f64 = 1e-12;

/// Single-photon polarization label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub fn flipped(self) -> Pol {
        match self {
            Pol::H => Pol::V,
            Pol::V => Pol::H,
        }
    }
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pol::H => "H",
            Pol::V => "V",
        })
    }
}

/// Parse a polarization string such as `"HHVV"`.
pub fn parse_pols(s: &str) -> Result<Vec<Pol>> {
    s.chars()
        .map(|c| match c {
            'H' => Ok(Pol::H),
            'V' => Ok(Pol::V),
            other => Err(SimError::InvalidParameter(format!(
                "invalid polarization label '{other}'"
            ))),
        })
        .collect()
}

pub fn pols_to_string(pols: &[Pol]) -> String {
    pols.iter().map(Pol::to_string).collect()
}

/// One branch of a hybrid superposition: a polarization string, the probe
/// phase index, and a complex amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTerm {
    pub pols: Vec<Pol>,
    pub probe_k: i32,
    pub amp: Complex64,
}

/// Combined signal-probe state. The probe coherent amplitude attached to a
/// term with index `k` is `alpha * exp(i k theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    pub n_modes: usize,
    pub alpha: f64,
    pub theta: f64,
    pub terms: Vec<BasisTerm>,
}

/// Probe-free polarization state (after homodyne collapse).
#[derive(Debug, Clone, PartialEq)]
pub struct PolState {
    pub n_modes: usize,
    pub terms: Vec<(Vec<Pol>, Complex64)>,
}

impl HybridState {
    /// Product state `|+>^n |alpha>`: all 2^n polarization strings with
    /// amplitude `2^{-n/2}`, probe index 0.
    pub fn new_plus_product(n_modes: usize, alpha: f64, theta: f64) -> Result<Self> {
        if n_modes < 1 {
            return Err(SimError::InvalidParameter("n_modes must be >= 1".into()));
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(SimError::InvalidParameter("alpha must be > 0".into()));
        }
        if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
            return Err(SimError::InvalidParameter(
                "theta must lie in (0, pi/2)".into(),
            ));
        }
        let amp = Complex64::new(0.5f64.powf(n_modes as f64 / 2.0), 0.0);
        let terms = (0..1usize << n_modes)
            .map(|bits| BasisTerm {
                pols: (0..n_modes)
                    .map(|m| {
                        if bits >> (n_modes - 1 - m) & 1 == 0 {
                            Pol::H
                        } else {
                            Pol::V
                        }
                    })
                    .collect(),
                probe_k: 0,
                amp,
            })
            .collect();
        Ok(HybridState {
            n_modes,
            alpha,
            theta,
            terms,
        })
    }

    /// Attach a fresh (unkicked) probe to a polarization state.
    pub fn from_pol(state: &PolState, alpha: f64, theta: f64) -> Self {
        HybridState {
            n_modes: state.n_modes,
            alpha,
            theta,
            terms: state
                .terms
                .iter()
                .map(|(pols, amp)| BasisTerm {
                    pols: pols.clone(),
                    probe_k: 0,
                    amp: *amp,
                })
                .collect(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.terms.iter().map(|t| t.amp.norm_sqr()).sum()
    }

    /// Merge duplicate `(pols, probe_k)` terms, prune negligible amplitudes,
    /// and sort into the canonical order (lexicographic pols, then k).
    pub fn simplify(&self) -> Self {
        let mut map: std::collections::BTreeMap<(Vec<Pol>, i32), Complex64> =
            std::collections::BTreeMap::new();
        for t in &self.terms {
            *map.entry((t.pols.clone(), t.probe_k))
                .or_insert(Complex64::new(0.0, 0.0)) += t.amp;
        }
        let terms = map
            .into_iter()
            .filter(|(_, amp)| amp.norm() >= AMP_PRUNE_EPS)
            .map(|((pols, probe_k), amp)| BasisTerm {
                pols,
                probe_k,
                amp,
            })
            .collect();
        HybridState {
            n_modes: self.n_modes,
            alpha: self.alpha,
            theta: self.theta,
            terms,
        }
    }

    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_sq();
        if n2 < AMP_PRUNE_EPS * AMP_PRUNE_EPS {
            return Err(SimError::ZeroNorm);
        }
        let scale = 1.0 / n2.sqrt();
        let mut out = self.clone();
        for t in &mut out.terms {
            t.amp *= scale;
        }
        Ok(out)
    }

    /// Each polarization string must carry exactly one probe index; this is
    /// what makes the homodyne density an exact Gaussian mixture.
    pub fn check_single_probe_label(&self) -> Result<()> {
        let mut seen: std::collections::HashMap<&[Pol], i32> = std::collections::HashMap::new();
        for t in &self.terms {
            match seen.get(t.pols.as_slice()) {
                Some(&k) if k != t.probe_k => {
                    return Err(SimError::ProbeLabelConflict(pols_to_string(&t.pols)));
                }
                _ => {
                    seen.insert(&t.pols, t.probe_k);
                }
            }
        }
        Ok(())
    }

    /// Drop the probe labels. Valid once every term has `probe_k == 0`
    /// (i.e. after collapse or before any Kerr interaction).
    pub fn to_pol_state(&self) -> Result<PolState> {
        for t in &self.terms {
            if t.probe_k != 0 {
                return Err(SimError::EntanglerPrecondition(format!(
                    "term {} still carries probe index {}",
                    pols_to_string(&t.pols),
                    t.probe_k
                )));
            }
        }
        Ok(PolState {
            n_modes: self.n_modes,
            terms: self
                .terms
                .iter()
                .map(|t| (t.pols.clone(), t.amp))
                .collect(),
        })
    }

    /// Canonical text form, one term per line: `<pols> <k> <re> <im>` with
    /// amplitudes at 17 significant digits. Byte-stable across runs.
    pub fn canonical_text(&self) -> String {
        let s = self.simplify();
        let mut out = String::new();
        for t in &s.terms {
            out.push_str(&format!(
                "{} {} {:.16e} {:.16e}\n",
                pols_to_string(&t.pols),
                t.probe_k,
                t.amp.re,
                t.amp.im
            ));
        }
        out
    }
}

impl PolState {
    pub fn from_amplitudes(n_modes: usize, entries: &[(&str, Complex64)]) -> Result<Self> {
        let mut terms = Vec::with_capacity(entries.len());
        for (s, amp) in entries {
            let pols = parse_pols(s)?;
            if pols.len() != n_modes {
                return Err(SimError::DimensionMismatch(pols.len(), n_modes));
            }
            terms.push((pols, *amp));
        }
        Ok(PolState { n_modes, terms }.simplify())
    }

    pub fn norm_sq(&self) -> f64 {
        self.terms.iter().map(|(_, amp)| amp.norm_sqr()).sum()
    }

    pub fn simplify(&self) -> Self {
        let mut map: std::collections::BTreeMap<Vec<Pol>, Complex64> =
            std::collections::BTreeMap::new();
        for (pols, amp) in &self.terms {
            *map.entry(pols.clone()).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        PolState {
            n_modes: self.n_modes,
            terms: map
                .into_iter()
                .filter(|(_, amp)| amp.norm() >= AMP_PRUNE_EPS)
                .collect(),
        }
    }

    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_sq();
        if n2 < AMP_PRUNE_EPS * AMP_PRUNE_EPS {
            return Err(SimError::ZeroNorm);
        }
        let scale = 1.0 / n2.sqrt();
        let mut out = self.clone();
        for (_, amp) in &mut out.terms {
            *amp *= scale;
        }
        Ok(out)
    }

    /// Amplitude on one basis string (zero if absent).
    pub fn amplitude(&self, pols: &[Pol]) -> Complex64 {
        self.terms
            .iter()
            .find(|(p, _)| p == pols)
            .map(|(_, amp)| *amp)
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// `|<target|self>|^2`. Both states should be normalized.
    pub fn fidelity(&self, target: &PolState) -> Result<f64> {
        if self.n_modes != target.n_modes {
            return Err(SimError::DimensionMismatch(self.n_modes, target.n_modes));
        }
        let mut inner = Complex64::new(0.0, 0.0);
        for (pols, amp) in &target.terms {
            inner += amp.conj() * self.amplitude(pols);
        }
        Ok(inner.norm_sqr())
    }

    pub fn canonical_text(&self) -> String {
        let s = self.simplify();
        let mut out = String::new();
        for (pols, amp) in &s.terms {
            out.push_str(&format!(
                "{} {:.16e} {:.16e}\n",
                pols_to_string(pols),
                amp.re,
                amp.im
            ));
        }
        out
    }
}

/// Coherent-state overlap `<b1|b2> = exp(-|b1|^2/2 - |b2|^2/2 + b1* b2)`.
pub fn coherent_overlap(beta1: Complex64, beta2: Complex64) -> Complex64 {
    (Complex64::new(
        -0.5 * beta1.norm_sqr() - 0.5 * beta2.norm_sqr(),
        0.0,
    ) + beta1.conj() * beta2)
        .exp()
}

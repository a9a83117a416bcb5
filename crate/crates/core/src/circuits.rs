//! The EPR entangler composite and the two four-photon generation circuits,
//! including feed-forward corrections and the target-state constructors.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::elements::{
    apply_bit_flip, apply_cross_kerr, apply_pol_phase, apply_rotation, apply_rotation_pol,
    KerrSite,
};
use crate::error::{Result, SimError};
use crate::homodyne::{branch_phase_raw, collapse, outcome_at, sample_outcome_traced, HomodyneOutcome, Parity};
use crate::state::{HybridState, Pol, PolState};

/// Polarization rotation used throughout both circuits: R(-45).
pub const ROTATION_MINUS_45: f64 = -std::f64::consts::FRAC_PI_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Circuit {
    Chi,
    Cluster,
}

impl std::fmt::Display for Circuit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Circuit::Chi => "chi",
            Circuit::Cluster => "cluster",
        })
    }
}

/// Which pair correlation the feed-forward drives the two modes toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedForwardStyle {
    /// `|HH> + |VV>`: phase correction plus bit flip on the Odd branch.
    EvenPair,
    /// `|HV> + |VH>`-type: bit flip on the Even branch, phase-only on Odd.
    OddPair,
}

/// One classically-controlled correction applied after a homodyne event.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Correction {
    PolPhase { mode: usize, pol: Pol, phase: f64 },
    BitFlip { mode: usize },
}

/// Per-entangler trace.
#[derive(Debug, Clone, Serialize)]
pub struct EntanglerRecord {
    pub mode_pair: (usize, usize),
    #[serde(flatten)]
    pub outcome: HomodyneOutcome,
    pub corrections: Vec<Correction>,
    /// True when the threshold classification disagrees with the mixture
    /// branch the outcome was actually drawn from.
    pub misclassified: bool,
}

/// Per-shot trace of a full circuit run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub circuit: Circuit,
    pub entangler_records: Vec<EntanglerRecord>,
    pub final_state: FinalStateTable,
    pub fidelity_to_target: f64,
}

/// Serializable term table of the final polarization state.
#[derive(Debug, Clone)]
pub struct FinalStateTable(pub PolState);

impl Serialize for FinalStateTable {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        #[derive(Serialize)]
        struct Term<'a> {
            pols: &'a str,
            re: f64,
            im: f64,
        }
        let state = self.0.simplify();
        let mut seq = ser.serialize_seq(Some(state.terms.len()))?;
        for (pols, amp) in &state.terms {
            let s = crate::state::pols_to_string(pols);
            seq.serialize_element(&Term {
                pols: &s,
                re: amp.re,
                im: amp.im,
            })?;
        }
        seq.end()
    }
}

/// Knobs for a single entangler invocation.
#[derive(Debug, Clone, Copy)]
pub struct EntanglerOptions {
    pub feed_forward: bool,
    pub style: FeedForwardStyle,
    /// Deterministically restrict the homodyne to one mixture branch
    /// (exact projection) before sampling; for exact-path tests.
    pub force_parity: Option<Parity>,
    /// Skip sampling and use this outcome value. Requires `force_parity`.
    pub force_x: Option<f64>,
}

impl Default for EntanglerOptions {
    fn default() -> Self {
        EntanglerOptions {
            feed_forward: true,
            style: FeedForwardStyle::EvenPair,
            force_parity: None,
            force_x: None,
        }
    }
}

/// Restrict a post-Kerr state to the even (k = 0) or odd (k != 0) probe
/// branch and renormalize.
fn restrict_branch(state: &HybridState, parity: Parity) -> Result<HybridState> {
    let mut out = state.clone();
    out.terms.retain(|t| match parity {
        Parity::Even => t.probe_k == 0,
        Parity::Odd => t.probe_k != 0,
    });
    out.normalize()
}

/// One EPR entangler on modes `(a, b)`: two cross-Kerr sites with opposite
/// kicks, homodyne measurement, collapse, and feed-forward corrections.
/// The probe is fresh on entry (all `probe_k = 0`) and fully consumed, so
/// the returned state again has `probe_k = 0` everywhere.
pub fn epr_entangle<R: Rng + ?Sized>(
    state: &HybridState,
    a: usize,
    b: usize,
    rng: &mut R,
    opts: &EntanglerOptions,
) -> Result<(HybridState, EntanglerRecord)> {
    if a == b {
        return Err(SimError::InvalidParameter(
            "entangler modes must differ".into(),
        ));
    }
    if state.terms.iter().any(|t| t.probe_k != 0) {
        return Err(SimError::EntanglerPrecondition(
            "probe must be fresh (all probe_k = 0) on entry".into(),
        ));
    }

    let s = apply_cross_kerr(state, KerrSite { mode: a, pol: Pol::H, sign: 1 })?;
    let s = apply_cross_kerr(&s, KerrSite { mode: b, pol: Pol::H, sign: -1 })?;

    let s = match opts.force_parity {
        Some(p) => restrict_branch(&s, p)?,
        None => s,
    };

    let (outcome, sampled_even) = match opts.force_x {
        Some(x) => {
            let branch = opts.force_parity.ok_or_else(|| {
                SimError::InvalidParameter("force_x requires force_parity".into())
            })?;
            (outcome_at(&s, x)?, branch == Parity::Even)
        }
        None => {
            let (outcome, k) = sample_outcome_traced(&s, rng)?;
            (outcome, k == 0)
        }
    };

    let pol = collapse(&s, outcome.x)?;
    let mut out = HybridState::from_pol(&pol, state.alpha, state.theta);

    let mut corrections = Vec::new();
    if opts.feed_forward {
        // Use the unreduced kernel phase so the correction cancels the
        // collapsed phase bit-for-bit; `outcome.phi` is the same angle
        // mod 2 pi, kept in the record for reporting.
        let phi = branch_phase_raw(outcome.x, state.alpha, state.theta);
        let phase_fix = |st: &HybridState, log: &mut Vec<Correction>| -> Result<HybridState> {
            let st = apply_pol_phase(st, a, Pol::H, -phi)?;
            let st = apply_pol_phase(&st, a, Pol::V, phi)?;
            log.push(Correction::PolPhase { mode: a, pol: Pol::H, phase: -phi });
            log.push(Correction::PolPhase { mode: a, pol: Pol::V, phase: phi });
            Ok(st)
        };
        match (opts.style, outcome.parity) {
            (FeedForwardStyle::EvenPair, Parity::Odd) => {
                out = phase_fix(&out, &mut corrections)?;
                out = apply_bit_flip(&out, b)?;
                corrections.push(Correction::BitFlip { mode: b });
            }
            (FeedForwardStyle::EvenPair, Parity::Even) => {}
            (FeedForwardStyle::OddPair, Parity::Even) => {
                out = apply_bit_flip(&out, b)?;
                corrections.push(Correction::BitFlip { mode: b });
            }
            (FeedForwardStyle::OddPair, Parity::Odd) => {
                out = phase_fix(&out, &mut corrections)?;
            }
        }
    }

    let record = EntanglerRecord {
        mode_pair: (a, b),
        outcome,
        corrections,
        misclassified: sampled_even != (outcome.parity == Parity::Even),
    };
    Ok((out.simplify(), record))
}

/// Options for a full circuit run.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub feed_forward: bool,
    /// Pin the branch selection of each of the three entanglers.
    pub force_parities: Option<[Parity; 3]>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            feed_forward: true,
            force_parities: None,
        }
    }
}

impl RunOptions {
    fn entangler(&self, i: usize, style: FeedForwardStyle) -> EntanglerOptions {
        EntanglerOptions {
            feed_forward: self.feed_forward,
            style,
            force_parity: self.force_parities.map(|p| p[i]),
            force_x: None,
        }
    }
}

fn finish(
    circuit: Circuit,
    state: HybridState,
    records: Vec<EntanglerRecord>,
    target: &PolState,
) -> Result<RunRecord> {
    let final_state = state.to_pol_state()?.normalize()?;
    let fidelity_to_target = final_state.fidelity(target)?;
    Ok(RunRecord {
        circuit,
        entangler_records: records,
        final_state: FinalStateTable(final_state),
        fidelity_to_target,
    })
}

/// Generate the four-photon chi state: entangle (1,2) and (2,3), rotate
/// modes 1-3 by -45 degrees, entangle (3,4). Mode indices are zero-based.
pub fn run_chi<R: Rng + ?Sized>(
    alpha: f64,
    theta: f64,
    rng: &mut R,
    opts: &RunOptions,
) -> Result<RunRecord> {
    let s = HybridState::new_plus_product(4, alpha, theta)?;
    let (s, r1) = epr_entangle(&s, 0, 1, rng, &opts.entangler(0, FeedForwardStyle::EvenPair))?;
    let (s, r2) = epr_entangle(&s, 1, 2, rng, &opts.entangler(1, FeedForwardStyle::EvenPair))?;
    let s = apply_rotation(&s, 0, ROTATION_MINUS_45)?;
    let s = apply_rotation(&s, 1, ROTATION_MINUS_45)?;
    let s = apply_rotation(&s, 2, ROTATION_MINUS_45)?;
    let (s, r3) = epr_entangle(&s, 2, 3, rng, &opts.entangler(2, FeedForwardStyle::EvenPair))?;
    finish(Circuit::Chi, s, vec![r1, r2, r3], &target_chi())
}

/// Generate the four-photon cluster state: entangle (1,2), entangle (2,3)
/// steered to the `|HHV> + |VVH>` correlation, rotate mode 3 by -45
/// degrees, entangle (3,4).
pub fn run_cluster<R: Rng + ?Sized>(
    alpha: f64,
    theta: f64,
    rng: &mut R,
    opts: &RunOptions,
) -> Result<RunRecord> {
    let s = HybridState::new_plus_product(4, alpha, theta)?;
    let (s, r1) = epr_entangle(&s, 0, 1, rng, &opts.entangler(0, FeedForwardStyle::EvenPair))?;
    let (s, r2) = epr_entangle(&s, 1, 2, rng, &opts.entangler(1, FeedForwardStyle::OddPair))?;
    let s = apply_rotation(&s, 2, ROTATION_MINUS_45)?;
    let (s, r3) = epr_entangle(&s, 2, 3, rng, &opts.entangler(2, FeedForwardStyle::EvenPair))?;
    finish(Circuit::Cluster, s, vec![r1, r2, r3], &target_cluster())
}

/// Hybrid state of either circuit immediately before the third homodyne
/// measurement (after the third pair of Kerr sites), with the first two
/// entangler branches pinned.
pub fn pre_third_homodyne_state<R: Rng + ?Sized>(
    circuit: Circuit,
    alpha: f64,
    theta: f64,
    parities: [Parity; 2],
    rng: &mut R,
) -> Result<HybridState> {
    let s = HybridState::new_plus_product(4, alpha, theta)?;
    let opts1 = EntanglerOptions {
        force_parity: Some(parities[0]),
        ..EntanglerOptions::default()
    };
    let (s, _) = epr_entangle(&s, 0, 1, rng, &opts1)?;
    let style2 = match circuit {
        Circuit::Chi => FeedForwardStyle::EvenPair,
        Circuit::Cluster => FeedForwardStyle::OddPair,
    };
    let opts2 = EntanglerOptions {
        style: style2,
        force_parity: Some(parities[1]),
        ..EntanglerOptions::default()
    };
    let (s, _) = epr_entangle(&s, 1, 2, rng, &opts2)?;
    let s = match circuit {
        Circuit::Chi => {
            let s = apply_rotation(&s, 0, ROTATION_MINUS_45)?;
            let s = apply_rotation(&s, 1, ROTATION_MINUS_45)?;
            apply_rotation(&s, 2, ROTATION_MINUS_45)?
        }
        Circuit::Cluster => apply_rotation(&s, 2, ROTATION_MINUS_45)?,
    };
    let s = apply_cross_kerr(&s, KerrSite { mode: 2, pol: Pol::H, sign: 1 })?;
    apply_cross_kerr(&s, KerrSite { mode: 3, pol: Pol::H, sign: -1 })
}

/// The four-photon chi state.
pub fn target_chi() -> PolState {
    let half = Complex64::new(0.5, 0.0);
    PolState::from_amplitudes(
        4,
        &[("HHHH", half), ("VVHH", half), ("HVVV", half), ("VHVV", half)],
    )
    .expect("static amplitude table")
}

/// The four-photon cluster state.
pub fn target_cluster() -> PolState {
    let half = Complex64::new(0.5, 0.0);
    PolState::from_amplitudes(
        4,
        &[
            ("HHHH", half),
            ("HHVV", half),
            ("VVHH", half),
            ("VVVV", -half),
        ],
    )
    .expect("static amplitude table")
}

/// Local-unitary map between the two targets: R(-45) on modes 1 and 2.
pub fn chi_to_cluster(state: &PolState) -> Result<PolState> {
    if state.n_modes != 4 {
        return Err(SimError::DimensionMismatch(state.n_modes, 4));
    }
    let s = apply_rotation_pol(state, 0, ROTATION_MINUS_45)?;
    apply_rotation_pol(&s, 1, ROTATION_MINUS_45)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::parse_pols;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    /// Operating point with x_d = 16: classification failures are below
    /// machine precision, residual cross-branch weight below 1e-25.
    const ALPHA: f64 = 400.0;
    fn theta() -> f64 {
        (1.0f64 - 16.0 / (2.0 * ALPHA)).acos()
    }

    #[test]
    fn targets_have_unit_norm_and_stated_amplitudes() {
        let chi = target_chi();
        assert_abs_diff_eq!(chi.norm_sq(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            chi.amplitude(&parse_pols("HVVV").unwrap()).re,
            0.5,
            epsilon = 1e-15
        );
        let cluster = target_cluster();
        assert_abs_diff_eq!(cluster.norm_sq(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            cluster.amplitude(&parse_pols("VVVV").unwrap()).re,
            -0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn chi_to_cluster_maps_target_exactly() {
        let mapped = chi_to_cluster(&target_chi()).unwrap();
        let cluster = target_cluster();
        assert_abs_diff_eq!(mapped.fidelity(&cluster).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mapped.norm_sq(), 1.0, epsilon = 1e-12);
        for (pols, amp) in &cluster.terms {
            assert!((mapped.amplitude(pols) - amp).norm() < 1e-14);
        }
    }

    #[test]
    fn chi_to_cluster_twice_equals_minus_90_rotation() {
        let s = target_chi();
        let twice = chi_to_cluster(&chi_to_cluster(&s).unwrap()).unwrap();
        let rot90 = apply_rotation_pol(
            &apply_rotation_pol(&s, 0, 2.0 * ROTATION_MINUS_45).unwrap(),
            1,
            2.0 * ROTATION_MINUS_45,
        )
        .unwrap();
        for (pols, amp) in &rot90.terms {
            assert!((twice.amplitude(pols) - amp).norm() < 1e-12);
        }
    }

    #[test]
    fn chi_to_cluster_requires_four_modes() {
        let s = PolState::from_amplitudes(2, &[("HH", Complex64::new(1.0, 0.0))]).unwrap();
        assert!(chi_to_cluster(&s).is_err());
    }

    #[test]
    fn entangler_even_branch_gives_bell_pair_exactly() {
        let s = HybridState::new_plus_product(2, ALPHA, theta()).unwrap();
        let opts = EntanglerOptions {
            force_parity: Some(Parity::Even),
            ..EntanglerOptions::default()
        };
        let (out, record) = epr_entangle(&s, 0, 1, &mut rng(1), &opts).unwrap();
        assert!(!record.misclassified);
        assert_eq!(record.outcome.parity, Parity::Even);
        let pol = out.to_pol_state().unwrap();
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        assert!((pol.amplitude(&parse_pols("HH").unwrap()).re - inv).abs() < 1e-12);
        assert!((pol.amplitude(&parse_pols("VV").unwrap()).re - inv).abs() < 1e-12);
    }

    #[test]
    fn entangler_odd_branch_feeds_forward_to_bell_pair() {
        let s = HybridState::new_plus_product(2, ALPHA, theta()).unwrap();
        let opts = EntanglerOptions {
            force_parity: Some(Parity::Odd),
            ..EntanglerOptions::default()
        };
        let (out, record) = epr_entangle(&s, 0, 1, &mut rng(2), &opts).unwrap();
        assert_eq!(record.outcome.parity, Parity::Odd);
        assert_eq!(record.corrections.len(), 3);
        let bell = PolState::from_amplitudes(
            2,
            &[
                ("HH", Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)),
                ("VV", Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)),
            ],
        )
        .unwrap();
        let fid = out.to_pol_state().unwrap().fidelity(&bell).unwrap();
        assert!((fid - 1.0).abs() < 1e-10);
    }

    #[test]
    fn entangler_extends_bell_pair_to_ghz() {
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let pair = PolState::from_amplitudes(
            3,
            &[
                ("HHH", Complex64::new(0.5, 0.0)),
                ("HHV", Complex64::new(0.5, 0.0)),
                ("VVH", Complex64::new(0.5, 0.0)),
                ("VVV", Complex64::new(0.5, 0.0)),
            ],
        )
        .unwrap();
        let s = HybridState::from_pol(&pair, ALPHA, theta());
        let opts = EntanglerOptions {
            force_parity: Some(Parity::Even),
            ..EntanglerOptions::default()
        };
        let (out, _) = epr_entangle(&s, 1, 2, &mut rng(3), &opts).unwrap();
        let pol = out.to_pol_state().unwrap();
        assert!((pol.amplitude(&parse_pols("HHH").unwrap()).re - inv).abs() < 1e-12);
        assert!((pol.amplitude(&parse_pols("VVV").unwrap()).re - inv).abs() < 1e-12);
    }

    #[test]
    fn entangler_requires_fresh_probe() {
        let s = HybridState::new_plus_product(2, ALPHA, theta()).unwrap();
        let s = crate::elements::apply_cross_kerr(
            &s,
            crate::elements::KerrSite { mode: 0, pol: Pol::H, sign: 1 },
        )
        .unwrap();
        let res = epr_entangle(&s, 0, 1, &mut rng(4), &EntanglerOptions::default());
        assert!(matches!(res, Err(SimError::EntanglerPrecondition(_))));
    }

    #[test]
    fn entangler_rejects_equal_modes() {
        let s = HybridState::new_plus_product(2, ALPHA, theta()).unwrap();
        assert!(epr_entangle(&s, 1, 1, &mut rng(5), &EntanglerOptions::default()).is_err());
    }

    #[test]
    fn force_x_requires_force_parity() {
        let s = HybridState::new_plus_product(2, ALPHA, theta()).unwrap();
        let opts = EntanglerOptions {
            force_x: Some(2.0 * ALPHA),
            ..EntanglerOptions::default()
        };
        assert!(epr_entangle(&s, 0, 1, &mut rng(6), &opts).is_err());
    }

    #[test]
    fn chi_intermediate_three_photon_state() {
        // State before the third entangler: rotate the GHZ3 by R(-45) on
        // all three modes and expand by hand.
        let mut r = rng(7);
        let opts = RunOptions {
            feed_forward: true,
            force_parities: Some([Parity::Even; 3]),
        };
        // Rebuild the first half of run_chi step by step.
        let s = HybridState::new_plus_product(4, ALPHA, theta()).unwrap();
        let (s, _) = epr_entangle(&s, 0, 1, &mut r, &opts.entangler(0, FeedForwardStyle::EvenPair)).unwrap();
        let (s, _) = epr_entangle(&s, 1, 2, &mut r, &opts.entangler(1, FeedForwardStyle::EvenPair)).unwrap();
        let s = apply_rotation(&s, 0, ROTATION_MINUS_45).unwrap();
        let s = apply_rotation(&s, 1, ROTATION_MINUS_45).unwrap();
        let s = apply_rotation(&s, 2, ROTATION_MINUS_45).unwrap();
        // (|HHH> + |VVH> + |HVV> + |VHV>)/2 tensor |+>_4
        let pol = s.to_pol_state().unwrap();
        let quarter = 0.5 * std::f64::consts::FRAC_1_SQRT_2;
        for stem in ["HHH", "HVV", "VHV", "VVH"] {
            for tail in ["H", "V"] {
                let amp = pol.amplitude(&parse_pols(&format!("{stem}{tail}")).unwrap());
                assert!((amp.re - quarter).abs() < 1e-12, "{stem}{tail}: {amp}");
                assert!(amp.im.abs() < 1e-12);
            }
        }
        assert_eq!(pol.simplify().terms.len(), 8);
    }

    #[test]
    fn run_chi_all_even_reaches_target_exactly() {
        let opts = RunOptions {
            feed_forward: true,
            force_parities: Some([Parity::Even; 3]),
        };
        let record = run_chi(ALPHA, theta(), &mut rng(8), &opts).unwrap();
        assert!((record.fidelity_to_target - 1.0).abs() < 1e-12);
        assert!(record.entangler_records.iter().all(|r| !r.misclassified));
    }

    #[test]
    fn run_cluster_all_even_reaches_target_exactly() {
        let opts = RunOptions {
            feed_forward: true,
            force_parities: Some([Parity::Even; 3]),
        };
        let record = run_cluster(ALPHA, theta(), &mut rng(9), &opts).unwrap();
        assert!((record.fidelity_to_target - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pre_measurement_branch_structure() {
        let mut r = rng(10);
        let s = pre_third_homodyne_state(
            Circuit::Chi,
            ALPHA,
            theta(),
            [Parity::Even, Parity::Even],
            &mut r,
        )
        .unwrap();
        let k_of = |pols: &str| {
            let p = parse_pols(pols).unwrap();
            s.terms.iter().find(|t| t.pols == p).map(|t| t.probe_k)
        };
        for (pols, k) in [
            ("HHHH", 0), ("VVHH", 0), ("HVVV", 0), ("VHVV", 0),
            ("HHHV", 1), ("VVHV", 1), ("HVVH", -1), ("VHVH", -1),
        ] {
            assert_eq!(k_of(pols), Some(k), "{pols}");
        }

        let s = pre_third_homodyne_state(
            Circuit::Cluster,
            ALPHA,
            theta(),
            [Parity::Even, Parity::Even],
            &mut r,
        )
        .unwrap();
        let amp_k = |pols: &str| {
            let p = parse_pols(pols).unwrap();
            let t = s.terms.iter().find(|t| t.pols == p).unwrap();
            (t.amp, t.probe_k)
        };
        let a = 0.25 * std::f64::consts::SQRT_2; // 1/(2 sqrt 2)
        for (pols, sign, k) in [
            ("HHHH", 1.0, 0), ("HHVV", 1.0, 0), ("VVHH", 1.0, 0), ("VVVV", -1.0, 0),
            ("HHHV", 1.0, 1), ("VVHV", 1.0, 1), ("HHVH", 1.0, -1), ("VVVH", -1.0, -1),
        ] {
            let (amp, kk) = amp_k(pols);
            assert_eq!(kk, k, "{pols}");
            assert!((amp.re - sign * a).abs() < 1e-12, "{pols}: {amp}");
            assert!(amp.im.abs() < 1e-12);
        }
    }

    #[test]
    fn final_state_independent_of_forced_outcome_value() {
        // Feed-forward cancels phi(x) exactly, so within a pinned branch the
        // final state does not depend on the continuous outcome.
        let th = theta();
        let x0 = ALPHA * (1.0 + th.cos());
        let even_xs = [2.0 * ALPHA - 3.0, 2.0 * ALPHA, 2.0 * ALPHA + 3.0, x0 + 0.5];
        let mut states = Vec::new();
        for &x in &even_xs {
            let s = HybridState::new_plus_product(2, ALPHA, th).unwrap();
            let opts = EntanglerOptions {
                force_parity: Some(Parity::Even),
                force_x: Some(x),
                ..EntanglerOptions::default()
            };
            let (out, _) = epr_entangle(&s, 0, 1, &mut rng(11), &opts).unwrap();
            states.push(out.to_pol_state().unwrap());
        }
        for w in states.windows(2) {
            for (pols, amp) in &w[0].terms {
                assert!((w[1].amplitude(pols) - amp).norm() < 1e-12);
            }
        }

        let odd_peak = 2.0 * ALPHA * th.cos();
        let bell = PolState::from_amplitudes(
            2,
            &[
                ("HH", Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)),
                ("VV", Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)),
            ],
        )
        .unwrap();
        for x in [odd_peak - 3.0, odd_peak, odd_peak + 3.0, x0 - 0.5] {
            let s = HybridState::new_plus_product(2, ALPHA, th).unwrap();
            let opts = EntanglerOptions {
                force_parity: Some(Parity::Odd),
                force_x: Some(x),
                ..EntanglerOptions::default()
            };
            let (out, _) = epr_entangle(&s, 0, 1, &mut rng(12), &opts).unwrap();
            let fid = out.to_pol_state().unwrap().fidelity(&bell).unwrap();
            assert!((fid - 1.0).abs() < 1e-10, "x={x}: fidelity {fid}");
        }
    }

    #[test]
    fn misclassified_flag_tracks_branch_vs_classification() {
        // Force the odd branch but hand the classifier an even-side outcome
        // (just past the threshold, where the branch still has support).
        let th = theta();
        let s = HybridState::new_plus_product(2, ALPHA, th).unwrap();
        let x0 = ALPHA * (1.0 + th.cos());
        let opts = EntanglerOptions {
            force_parity: Some(Parity::Odd),
            force_x: Some(x0 + 1.0),
            ..EntanglerOptions::default()
        };
        let (_, record) = epr_entangle(&s, 0, 1, &mut rng(13), &opts).unwrap();
        assert!(record.misclassified);
        assert_eq!(record.outcome.parity, Parity::Even);
    }

    #[test]
    fn run_record_serializes_expected_fields() {
        let opts = RunOptions {
            feed_forward: true,
            force_parities: Some([Parity::Even; 3]),
        };
        let record = run_chi(ALPHA, theta(), &mut rng(14), &opts).unwrap();
        let json = serde_json::to_value(&record).unwrap();
        assert_eq!(json["circuit"], "chi");
        assert_eq!(json["entangler_records"].as_array().unwrap().len(), 3);
        let e0 = &json["entangler_records"][0];
        assert!(e0["x"].is_number());
        assert!(e0["parity"].is_string());
        assert!(e0["phi"].is_number());
        assert!(e0["misclassified"].is_boolean());
        assert!(json["final_state"].as_array().unwrap().len() == 4);
        assert!(json["fidelity_to_target"].is_number());
    }
}

//! Optical elements: half-wave-plate rotation, bit flip, polarization-
//! conditioned phase shift, and the cross-Kerr interaction site.
//!
//! All operations are unitary and return new states.

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::state::{BasisTerm, HybridState, Pol, PolState};

/// One cross-Kerr interaction: the `pol` component of `mode` is routed
/// through the Kerr medium and advances the probe phase index by `sign`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KerrSite {
    pub mode: usize,
    pub pol: Pol,
    pub sign: i32,
}

fn check_mode(mode: usize, n_modes: usize) -> Result<()> {
    if mode >= n_modes {
        return Err(SimError::ModeIndex { mode, n_modes });
    }
    Ok(())
}

// Rotation convention: rho is the polarization rotation angle (the wave
// plate parameter delta enters as rho = 2*delta), so
//   |H> -> cos(rho)|H> + sin(rho)|V>,  |V> -> -sin(rho)|H> + cos(rho)|V>.
fn rotate_term(pols: &[Pol], amp: Complex64, mode: usize, c: f64, s: f64) -> [(Vec<Pol>, Complex64); 2] {
    let mut to_h = pols.to_vec();
    to_h[mode] = Pol::H;
    let mut to_v = pols.to_vec();
    to_v[mode] = Pol::V;
    match pols[mode] {
        Pol::H => [(to_h, amp * c), (to_v, amp * s)],
        Pol::V => [(to_h, amp * -s), (to_v, amp * c)],
    }
}

/// HWP rotation by angle `rho` (radians) on one mode of a hybrid state.
pub fn apply_rotation(state: &HybridState, mode: usize, rho: f64) -> Result<HybridState> {
    check_mode(mode, state.n_modes)?;
    let (s, c) = rho.sin_cos();
    let mut terms = Vec::with_capacity(2 * state.terms.len());
    for t in &state.terms {
        for (pols, amp) in rotate_term(&t.pols, t.amp, mode, c, s) {
            terms.push(BasisTerm {
                pols,
                probe_k: t.probe_k,
                amp,
            });
        }
    }
    Ok(HybridState { terms, ..state.clone() }.simplify())
}

/// Same rotation on a probe-free polarization state.
pub fn apply_rotation_pol(state: &PolState, mode: usize, rho: f64) -> Result<PolState> {
    check_mode(mode, state.n_modes)?;
    let (s, c) = rho.sin_cos();
    let mut terms = Vec::with_capacity(2 * state.terms.len());
    for (pols, amp) in &state.terms {
        terms.extend(rotate_term(pols, *amp, mode, c, s));
    }
    Ok(PolState {
        n_modes: state.n_modes,
        terms,
    }
    .simplify())
}

/// Swap H and V on one mode (sigma_x).
pub fn apply_bit_flip(state: &HybridState, mode: usize) -> Result<HybridState> {
    check_mode(mode, state.n_modes)?;
    let mut out = state.clone();
    for t in &mut out.terms {
        t.pols[mode] = t.pols[mode].flipped();
    }
    Ok(out.simplify())
}

/// Multiply by `exp(i phase)` every term whose `mode` carries `pol`.
pub fn apply_pol_phase(
    state: &HybridState,
    mode: usize,
    pol: Pol,
    phase: f64,
) -> Result<HybridState> {
    check_mode(mode, state.n_modes)?;
    let factor = Complex64::from_polar(1.0, phase);
    let mut out = state.clone();
    for t in &mut out.terms {
        if t.pols[mode] == pol {
            t.amp *= factor;
        }
    }
    Ok(out)
}

/// Cross-Kerr interaction: terms whose `site.mode` polarization matches
/// `site.pol` have their probe index advanced by `site.sign`.
pub fn apply_cross_kerr(state: &HybridState, site: KerrSite) -> Result<HybridState> {
    check_mode(site.mode, state.n_modes)?;
    let mut out = state.clone();
    for t in &mut out.terms {
        if t.pols[site.mode] == site.pol {
            t.probe_k += site.sign;
        }
    }
    Ok(out.simplify())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::parse_pols;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const MINUS_45: f64 = -std::f64::consts::FRAC_PI_4;

    fn pol_state(n: usize, entries: &[(&str, f64)]) -> HybridState {
        HybridState {
            n_modes: n,
            alpha: 2.0,
            theta: 0.5,
            terms: entries
                .iter()
                .map(|&(s, a)| crate::state::BasisTerm {
                    pols: parse_pols(s).unwrap(),
                    probe_k: 0,
                    amp: Complex64::new(a, 0.0),
                })
                .collect(),
        }
        .simplify()
    }

    fn assert_states_close(a: &HybridState, b: &HybridState, eps: f64) {
        let (a, b) = (a.simplify(), b.simplify());
        assert_eq!(a.terms.len(), b.terms.len(), "{:?} vs {:?}", a.terms, b.terms);
        for (ta, tb) in a.terms.iter().zip(&b.terms) {
            assert_eq!(ta.pols, tb.pols);
            assert_eq!(ta.probe_k, tb.probe_k);
            assert_abs_diff_eq!(ta.amp.re, tb.amp.re, epsilon = eps);
            assert_abs_diff_eq!(ta.amp.im, tb.amp.im, epsilon = eps);
        }
    }

    #[test]
    fn rotation_zero_is_identity() {
        let s = pol_state(2, &[("HV", 0.6), ("VH", 0.8)]);
        assert_states_close(&apply_rotation(&s, 0, 0.0).unwrap(), &s, 1e-15);
    }

    #[test]
    fn rotation_minus_45_on_single_mode() {
        let h = pol_state(1, &[("H", 1.0)]);
        let r = apply_rotation(&h, 0, MINUS_45).unwrap();
        // |H> -> (|H> - |V>)/sqrt 2
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        assert_states_close(&r, &pol_state(1, &[("H", inv), ("V", -inv)]), 1e-15);

        let v = pol_state(1, &[("V", 1.0)]);
        let r = apply_rotation(&v, 0, MINUS_45).unwrap();
        assert_states_close(&r, &pol_state(1, &[("H", inv), ("V", inv)]), 1e-15);
    }

    #[test]
    fn rotation_reproduces_three_mode_expansion() {
        // R(-45) on mode 3 of (|HHV> + |VVH>)/sqrt 2.
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let s = pol_state(3, &[("HHV", inv), ("VVH", inv)]);
        let r = apply_rotation(&s, 2, MINUS_45).unwrap();
        let expected = pol_state(
            3,
            &[("HHH", 0.5), ("HHV", 0.5), ("VVH", 0.5), ("VVV", -0.5)],
        );
        assert_states_close(&r, &expected, 1e-15);
    }

    #[test]
    fn bit_flip_examples() {
        let s = pol_state(1, &[("H", 1.0)]);
        let f = apply_bit_flip(&s, 0).unwrap();
        assert_states_close(&f, &pol_state(1, &[("V", 1.0)]), 1e-15);
        assert_states_close(&apply_bit_flip(&f, 0).unwrap(), &s, 1e-15);

        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let pair = pol_state(3, &[("HHV", inv), ("VVH", inv)]);
        let ghz = apply_bit_flip(&pair, 2).unwrap();
        assert_states_close(&ghz, &pol_state(3, &[("HHH", inv), ("VVV", inv)]), 1e-15);
    }

    #[test]
    fn pol_phase_cancels_relative_phase() {
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let phi = 1.234;
        let mut s = pol_state(2, &[("HV", inv), ("VH", inv)]);
        s.terms[0].amp *= Complex64::from_polar(1.0, phi);
        s.terms[1].amp *= Complex64::from_polar(1.0, -phi);
        let s = apply_pol_phase(&s, 0, Pol::H, -phi).unwrap();
        let s = apply_pol_phase(&s, 0, Pol::V, phi).unwrap();
        assert_states_close(&s, &pol_state(2, &[("HV", inv), ("VH", inv)]), 1e-14);
    }

    #[test]
    fn pol_phase_zero_is_identity_and_global_phase_is_irrelevant() {
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let s = pol_state(2, &[("HH", inv), ("VV", inv)]);
        assert_states_close(&apply_pol_phase(&s, 1, Pol::H, 0.0).unwrap(), &s, 1e-15);

        let target = s.to_pol_state().unwrap();
        let g = apply_pol_phase(&s, 0, Pol::H, 0.7).unwrap();
        let g = apply_pol_phase(&g, 0, Pol::V, 0.7).unwrap();
        let fid = g.to_pol_state().unwrap().fidelity(&target).unwrap();
        assert_abs_diff_eq!(fid, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cross_kerr_kicks_only_matching_pol() {
        let h = pol_state(1, &[("H", 1.0)]);
        let site = KerrSite { mode: 0, pol: Pol::H, sign: 1 };
        assert_eq!(apply_cross_kerr(&h, site).unwrap().terms[0].probe_k, 1);

        let v = pol_state(1, &[("V", 1.0)]);
        assert_eq!(apply_cross_kerr(&v, site).unwrap().terms[0].probe_k, 0);
    }

    #[test]
    fn cross_kerr_entangler_pair_reproduces_branch_structure() {
        let s = HybridState::new_plus_product(2, 2.0, 0.5).unwrap();
        let s = apply_cross_kerr(&s, KerrSite { mode: 0, pol: Pol::H, sign: 1 }).unwrap();
        let s = apply_cross_kerr(&s, KerrSite { mode: 1, pol: Pol::H, sign: -1 }).unwrap();
        let k_of = |pols: &str| {
            let p = parse_pols(pols).unwrap();
            s.terms.iter().find(|t| t.pols == p).unwrap().probe_k
        };
        assert_eq!(k_of("HH"), 0);
        assert_eq!(k_of("VV"), 0);
        assert_eq!(k_of("HV"), 1);
        assert_eq!(k_of("VH"), -1);
    }

    #[test]
    fn mode_index_errors() {
        let s = pol_state(2, &[("HH", 1.0)]);
        assert!(apply_rotation(&s, 2, 0.1).is_err());
        assert!(apply_bit_flip(&s, 5).is_err());
        assert!(apply_pol_phase(&s, 2, Pol::H, 0.1).is_err());
        assert!(apply_cross_kerr(&s, KerrSite { mode: 3, pol: Pol::H, sign: 1 }).is_err());
    }

    prop_compose! {
        fn arb_state(n_modes: usize)
            (amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n_modes))
            -> Option<HybridState>
        {
            let terms: Vec<_> = amps
                .iter()
                .enumerate()
                .map(|(bits, &(re, im))| crate::state::BasisTerm {
                    pols: (0..n_modes)
                        .map(|m| if bits >> (n_modes - 1 - m) & 1 == 0 { Pol::H } else { Pol::V })
                        .collect(),
                    probe_k: 0,
                    amp: Complex64::new(re, im),
                })
                .collect();
            let s = HybridState { n_modes, alpha: 2.0, theta: 0.5, terms };
            s.normalize().ok()
        }
    }

    proptest! {
        #[test]
        fn operations_preserve_norm(
            s in arb_state(3),
            mode in 0usize..3,
            rho in -6.3f64..6.3,
            phase in -6.3f64..6.3,
        ) {
            prop_assume!(s.is_some());
            let s = s.unwrap();
            let checks = [
                apply_rotation(&s, mode, rho).unwrap(),
                apply_bit_flip(&s, mode).unwrap(),
                apply_pol_phase(&s, mode, Pol::H, phase).unwrap(),
                apply_cross_kerr(&s, KerrSite { mode, pol: Pol::H, sign: 1 }).unwrap(),
            ];
            for out in checks {
                prop_assert!((out.norm_sq() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn rotations_compose_additively(
            s in arb_state(2),
            mode in 0usize..2,
            rho1 in -3.2f64..3.2,
            rho2 in -3.2f64..3.2,
        ) {
            prop_assume!(s.is_some());
            let s = s.unwrap();
            let seq = apply_rotation(&apply_rotation(&s, mode, rho1).unwrap(), mode, rho2).unwrap();
            let combined = apply_rotation(&s, mode, rho1 + rho2).unwrap();
            let seq = seq.simplify();
            let combined = combined.simplify();
            for (a, b) in seq.terms.iter().zip(&combined.terms) {
                prop_assert_eq!(&a.pols, &b.pols);
                prop_assert!((a.amp - b.amp).norm() < 1e-10);
            }
        }

        #[test]
        fn cross_kerr_commutes_across_modes(s in arb_state(2)) {
            prop_assume!(s.is_some());
            let s = s.unwrap();
            let site0 = KerrSite { mode: 0, pol: Pol::H, sign: 1 };
            let site1 = KerrSite { mode: 1, pol: Pol::H, sign: -1 };
            let ab = apply_cross_kerr(&apply_cross_kerr(&s, site0).unwrap(), site1).unwrap();
            let ba = apply_cross_kerr(&apply_cross_kerr(&s, site1).unwrap(), site0).unwrap();
            prop_assert_eq!(ab.simplify(), ba.simplify());
        }
    }
}

mod common;

use common::photonic::*;
use num_complex::Complex64;
use proptest::prelude::*;
use wghz::model::{AtomLevel, Branch};
use wghz::network::{
    apply_hwp, apply_pbs_routing, derive_layouts, emit_and_qwp, full_network, reference_post_network_state,
    AtomCavityState, CavityOccupation, NetworkLayout, Occupation, Polarization, PolarizedPhotonMode, OUTPUT_MODES,
};

#[test]
fn pulsed_w_matches_hand_values() {
    use Branch::{L, R};
    let big = 3.0 / (2.0 * 6f64.sqrt());
    assert!((pulsed_w_coefficient([L, L, L]) - big).abs() < 1e-15);
    assert!((pulsed_w_coefficient([R, R, R]) + big).abs() < 1e-15);
    assert!((pulsed_w_coefficient([L, L, R]) - big / 3.0).abs() < 1e-15);
}

#[test]
fn expected_expansion_is_normalized() {
    let e = expected_expansion();
    let norm: f64 = e.values().map(|a| a.norm_sqr()).sum();
    assert!((norm - 1.0).abs() < 1e-14, "{norm}");
}

#[test]
fn canonical_network_reproduces_expected_state() {
    let out = full_network(&operating_point_state(), &NetworkLayout::canonical()).unwrap();
    let got = to_expansion(&out);
    let want = expected_expansion();
    assert!(distance_up_to_phase(&got, &want) < 1e-12);
    assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    assert_eq!(out.photon_numbers(), vec![3]);
}

#[test]
fn library_reference_matches_oracle_expansion() {
    let got = to_expansion(&reference_post_network_state());
    assert!(distance_up_to_phase(&got, &expected_expansion()) < 1e-14);
}

#[test]
fn expected_coefficients_term_by_term() {
    let out = full_network(&operating_point_state(), &NetworkLayout::canonical()).unwrap();
    let got = to_expansion(&out);
    let terms = term_coefficients(&got);
    assert_eq!(terms.len(), 8);
    // one global phase for all eight
    let phase = terms[0].1 / terms[0].0;
    assert!((phase.norm() - 1.0).abs() < 1e-12);
    for (expected, measured) in terms {
        assert!((measured - phase * expected).norm() < 1e-12, "{expected} vs {measured}");
    }
    let registers: std::collections::BTreeSet<_> = out.terms().map(|(a, _, _)| *a).collect();
    assert_eq!(registers.len(), 8);
}

#[test]
fn lll_amplitude_sign() {
    // −3/(2√6) on e_L e_L e_L ⊗ ψ7− ψ8− ψ9−: the all-V component carries (−1/√2)³
    let out = full_network(&operating_point_state(), &NetworkLayout::canonical()).unwrap();
    let occ = Occupation::from_modes([7, 8, 9].map(|m| PolarizedPhotonMode::new(m, Polarization::V)));
    let occ_h = Occupation::from_modes([7, 8, 9].map(|m| PolarizedPhotonMode::new(m, Polarization::H)));
    let coef = -3.0 / (2.0 * 6f64.sqrt());
    let a_v = out.amplitude(&[AtomLevel::EL; 3], &occ);
    let a_h = out.amplitude(&[AtomLevel::EL; 3], &occ_h);
    assert!((a_v - Complex64::new(coef * -S2.powi(3), 0.0)).norm() < 1e-14);
    assert!((a_h - Complex64::new(coef * S2.powi(3), 0.0)).norm() < 1e-14);
}

#[test]
fn routing_places_lll_and_llr_photons() {
    let input = operating_point_state();
    let photons = emit_and_qwp(&input).unwrap();
    let routed = apply_pbs_routing(&photons, &NetworkLayout::canonical()).unwrap();
    for (atoms, occ, _) in routed.terms() {
        let v = |m| occ.count(PolarizedPhotonMode::new(m, Polarization::V));
        let h = |m| occ.count(PolarizedPhotonMode::new(m, Polarization::H));
        if *atoms == [AtomLevel::EL; 3] {
            assert_eq!((v(7), v(8), v(9)), (1, 1, 1));
        }
        if *atoms == [AtomLevel::EL, AtomLevel::EL, AtomLevel::ER] {
            assert_eq!((v(8), h(8)), (1, 1));
            assert_eq!(v(7), 1);
        }
    }
}

#[test]
fn exhaustive_search_finds_only_the_canonical_table() {
    let hits = derive_layouts(&operating_point_state(), 1e-10).unwrap();
    assert_eq!(hits, vec![NetworkLayout::canonical()]);
}

#[test]
fn canonical_pairs_are_unique() {
    let l = NetworkLayout::canonical();
    let mut pairs = std::collections::BTreeSet::new();
    for out in OUTPUT_MODES {
        let v = l.routes.iter().find(|r| r.output == out && r.polarization == Polarization::V).unwrap().source;
        let h = l.routes.iter().find(|r| r.output == out && r.polarization == Polarization::H).unwrap().source;
        assert_ne!(v, h);
        assert!(pairs.insert((v, h)));
    }
}

fn random_input() -> impl Strategy<Value = AtomCavityState> {
    prop::collection::vec(((0usize..8), (-1.0..1.0f64), (-1.0..1.0f64)), 1..8).prop_map(|terms| {
        let raw: Vec<_> = terms
            .into_iter()
            .map(|(bits, re, im)| {
                let b = [bits >> 2, (bits >> 1) & 1, bits & 1].map(|i| Branch::BOTH[i]);
                (b.map(AtomLevel::e), b.map(CavityOccupation::one), Complex64::new(re, im))
            })
            .collect();
        AtomCavityState::from_terms(raw)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn element_operations_are_isometries(input in random_input(), v in Just([7u8, 8, 9]), h_perm in 0usize..6) {
        let hs = [[9u8, 7, 8], [7, 8, 9], [8, 9, 7], [7, 9, 8], [9, 8, 7], [8, 7, 9]][h_perm];
        let layout = NetworkLayout::from_outputs(v, hs);
        let photons = emit_and_qwp(&input).unwrap();
        let routed = apply_pbs_routing(&photons, &layout).unwrap();
        let out = apply_hwp(&routed, &OUTPUT_MODES).unwrap();
        let n0 = input.norm_sqr();
        prop_assert!((photons.norm_sqr() - n0).abs() < 1e-12 * n0.max(1.0));
        prop_assert!((routed.norm_sqr() - n0).abs() < 1e-12 * n0.max(1.0));
        prop_assert!((out.norm_sqr() - n0).abs() < 1e-12 * n0.max(1.0));
        if !out.is_empty() {
            prop_assert_eq!(out.photon_numbers(), vec![3]);
        }
    }

    #[test]
    fn hwp_twice_is_identity(input in random_input()) {
        let photons = emit_and_qwp(&input).unwrap();
        let routed = apply_pbs_routing(&photons, &NetworkLayout::canonical()).unwrap();
        let twice = apply_hwp(&apply_hwp(&routed, &OUTPUT_MODES).unwrap(), &OUTPUT_MODES).unwrap();
        prop_assert!(twice.distance_up_to_phase(&routed) < 1e-12);
        prop_assert!((twice.inner(&routed) - Complex64::new(routed.norm_sqr(), 0.0)).norm() < 1e-12);
    }
}

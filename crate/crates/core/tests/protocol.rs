use num_complex::Complex64;
use proptest::prelude::*;
use wghz::analysis::{decay_params, pd_closed_form};
use wghz::detection::{config_state, OutcomeClass};
use wghz::model::{AtomLevel, Branch, SystemParams};
use wghz::network::NetworkLayout;
use wghz::protocol::{
    amplitude_of, apply_hadamard_pulses, ghz_target, prepare_w_state, raman_mapping, run_protocol, run_protocol_at,
    sign_correction,
};

fn branches(bits: usize) -> [Branch; 3] {
    [bits >> 2, (bits >> 1) & 1, bits & 1].map(|i| Branch::BOTH[i])
}

/// Pulsed W-state amplitudes worked out by hand, keyed by the number of R branches.
fn hand_coefficient(b: [Branch; 3]) -> f64 {
    let n = 2.0 * 6f64.sqrt();
    let r = b.iter().filter(|x| **x == Branch::R).count();
    match r {
        0 => 3.0 / n,
        1 => 1.0 / n,
        2 => -1.0 / n,
        _ => -3.0 / n,
    }
}

#[test]
fn pulsed_w_coefficients() {
    let pulsed = apply_hadamard_pulses(&prepare_w_state()).unwrap();
    for bits in 0..8 {
        let b = branches(bits);
        let a = amplitude_of(&pulsed, &b.map(AtomLevel::g)).unwrap();
        assert!((a - Complex64::new(hand_coefficient(b), 0.0)).norm() < 1e-14, "{b:?}: {a}");
    }
    assert!((pulsed.norm() - 1.0).abs() < 1e-14);
}

#[test]
fn pulses_reject_excited_input() {
    let psi = config_state(&[AtomLevel::EL, AtomLevel::GL, AtomLevel::GL]).unwrap();
    assert!(apply_hadamard_pulses(&psi).is_err());
}

#[test]
fn ideal_run_reaches_unit_fidelity() {
    let run = run_protocol(&SystemParams::default(), &NetworkLayout::canonical()).unwrap();
    assert!((run.success_probability - 0.75).abs() < 1e-12);
    assert_eq!(run.results.len(), 8);
    for r in &run.results {
        assert!((r.probability - 3.0 / 32.0).abs() < 1e-12);
        assert!(r.herald_fidelity > 1.0 - 1e-12);
        assert!(r.fidelity > 1.0 - 1e-12, "{}: {}", r.pattern, r.fidelity);
        assert!(r.final_state.fidelity(&ghz_target()).unwrap() > 1.0 - 1e-12);
    }
    assert_eq!(run.results.iter().filter(|r| r.class == OutcomeClass::GhzPlus).count(), 4);
}

#[test]
fn finite_efficiency_scales_as_cube() {
    let params = SystemParams { eta_d: 0.8, ..SystemParams::default() };
    let run = run_protocol(&params, &NetworkLayout::canonical()).unwrap();
    assert!((run.success_probability - 0.384).abs() < 1e-12);
    assert!(run.min_fidelity > 1.0 - 1e-12);
}

#[test]
fn decayed_acceptance_matches_closed_form() {
    for ratio in [100.0, 20.0] {
        let params = decay_params(ratio).unwrap();
        for kt in [0.0156582, 0.2, 0.9896] {
            let t = kt / params.kappa;
            let run = run_protocol_at(&params, &NetworkLayout::canonical(), t).unwrap();
            let want = pd_closed_form(&params, t);
            assert!((run.success_probability - want).abs() < 1e-12, "κt = {kt}: {} vs {want}", run.success_probability);
            assert!((run.predicted_probability - want).abs() < 1e-12);
            if want > 1e-9 {
                assert!(run.min_fidelity > 1.0 - 1e-10);
            }
        }
    }
}

#[test]
fn sign_correction_maps_minus_onto_plus() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let lll = config_state(&[AtomLevel::EL; 3]).unwrap();
    let rrr = config_state(&[AtomLevel::ER; 3]).unwrap();
    let minus = wghz::hilbert::StateVector::new(
        lll.space().clone(),
        lll.amplitudes() * Complex64::new(-s, 0.0) + rrr.amplitudes() * Complex64::new(s, 0.0),
    )
    .unwrap();
    let fixed = sign_correction(&minus.density(), OutcomeClass::GhzMinus).unwrap();
    let ground = raman_mapping(&fixed).unwrap();
    assert!((ground.fidelity(&ghz_target()).unwrap() - 1.0).abs() < 1e-14);
    assert!(sign_correction(&minus.density(), OutcomeClass::Reject).is_err());
    assert!(raman_mapping(&ghz_target().density()).is_err());
}

#[test]
fn report_serializes() {
    let run = run_protocol(&SystemParams::default(), &NetworkLayout::canonical()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&run.to_json()).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 8);
    assert_eq!(v["results"][0]["class"].as_str().map(|s| s.starts_with("GHZ_")), Some(true));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn accepted_probability_follows_efficiency(eta in 0.05..=1.0f64) {
        let params = SystemParams { eta_d: eta, ..SystemParams::default() };
        let run = run_protocol(&params, &NetworkLayout::canonical()).unwrap();
        prop_assert!((run.success_probability - 0.75 * eta.powi(3)).abs() < 1e-12);
        prop_assert!(run.min_fidelity > 1.0 - 1e-10);
    }
}

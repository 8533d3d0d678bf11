//! The W → GHZ pipeline: preparation, Hadamard pulses, Raman cavity
//! interaction, photon network, detection, sign correction and the final
//! Raman relabeling.

use serde::Serialize;

use crate::detection::{
    atoms_space, config_index, enumerate_outcomes, ClickPattern, DetectionReport, OutcomeClass,
    REGISTER_LEVELS,
};
use crate::dynamics::{decay_coefficients, ideal_coefficients, EvolutionCoefficients};
use crate::error::{Error, Result};
use crate::hilbert::{c, CMatrix, DensityMatrix, StateVector, C64};
use crate::model::{AtomLevel, SystemParams};
use crate::network::{
    emit_and_qwp_lossy, propagate, AtomCavityState, AtomConfig, CavityOccupation, NetworkLayout,
};

/// Amplitudes below this count as outside the support of a state.
const SUPPORT: f64 = 1e-12;

const GL: usize = 0;
const GR: usize = 1;
const EL: usize = 2;
const ER: usize = 3;

fn basis_digits(index: usize) -> [usize; 3] {
    let r = REGISTER_LEVELS;
    [index / (r * r), (index / r) % r, index % r]
}

fn levels(index: usize) -> AtomConfig {
    basis_digits(index).map(|d| AtomLevel::from_index(d).expect("register level"))
}

/// `(|g_L g_L g_R⟩ + |g_L g_R g_L⟩ + |g_R g_L g_L⟩)/√3`.
pub fn prepare_w_state() -> StateVector {
    let mut v = vec![c(0.0, 0.0); REGISTER_LEVELS.pow(3)];
    let a = c(1.0 / 3f64.sqrt(), 0.0);
    for digits in [[GL, GL, GR], [GL, GR, GL], [GR, GL, GL]] {
        v[atoms_space().index(&digits).unwrap()] = a;
    }
    StateVector::from_vec(atoms_space(), v).unwrap()
}

/// `(|g_L g_L g_L⟩ + |g_R g_R g_R⟩)/√2`.
pub fn ghz_target() -> StateVector {
    let mut v = vec![c(0.0, 0.0); REGISTER_LEVELS.pow(3)];
    let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[atoms_space().index(&[GL; 3]).unwrap()] = s;
    v[atoms_space().index(&[GR; 3]).unwrap()] = s;
    StateVector::from_vec(atoms_space(), v).unwrap()
}

fn require_support(psi: &StateVector, allowed: &[usize], what: &str) -> Result<()> {
    for (i, a) in psi.amplitudes().iter().enumerate() {
        if a.norm() > SUPPORT && basis_digits(i).iter().any(|d| !allowed.contains(d)) {
            return Err(Error::InvalidState(format!("amplitude on {:?} outside {what}", levels(i).map(AtomLevel::name))));
        }
    }
    Ok(())
}

fn require_density_support(rho: &DensityMatrix, allowed: &[usize], what: &str) -> Result<()> {
    for i in 0..rho.elements().nrows() {
        if rho.elements()[(i, i)].norm() > SUPPORT && basis_digits(i).iter().any(|d| !allowed.contains(d)) {
            return Err(Error::InvalidState(format!("population on {:?} outside {what}", levels(i).map(AtomLevel::name))));
        }
    }
    Ok(())
}

/// Same single-atom 4×4 matrix on each of the three atoms.
fn local_on_all(m: &CMatrix) -> CMatrix {
    m.kronecker(m).kronecker(m)
}

/// Per-atom pulse `g_L → (g_L+g_R)/√2`, `g_R → (g_L−g_R)/√2`.
pub fn apply_hadamard_pulses(psi: &StateVector) -> Result<StateVector> {
    if psi.space() != &atoms_space() {
        return Err(Error::SpaceMismatch { expected: atoms_space().to_string(), found: psi.space().to_string() });
    }
    require_support(psi, &[GL, GR], "{g_L, g_R}")?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = CMatrix::zeros(REGISTER_LEVELS, REGISTER_LEVELS);
    h[(GL, GL)] = c(s, 0.0);
    h[(GR, GL)] = c(s, 0.0);
    h[(GL, GR)] = c(s, 0.0);
    h[(GR, GR)] = c(-s, 0.0);
    StateVector::new(atoms_space(), local_on_all(&h) * psi.amplitudes())
}

/// Raman coefficients for one atom-cavity pair: the closed-system form when
/// κ = 0, the no-jump decayed form otherwise.
pub fn interaction_coefficients(params: &SystemParams, t: f64) -> Result<EvolutionCoefficients> {
    if params.kappa == 0.0 {
        Ok(ideal_coefficients(params, t))
    } else {
        decay_coefficients(params, t)
    }
}

/// Replaces every `|g_j⟩` by `α|g_j, vac⟩ + β|e_j, 1_j⟩` in each atom's cavity.
pub fn cavity_interaction(psi: &StateVector, params: &SystemParams, t: f64) -> Result<AtomCavityState> {
    let coeffs = interaction_coefficients(params, t)?;
    cavity_interaction_with(psi, coeffs)
}

pub fn cavity_interaction_with(psi: &StateVector, coeffs: EvolutionCoefficients) -> Result<AtomCavityState> {
    require_support(psi, &[GL, GR], "{g_L, g_R}")?;
    let mut terms = Vec::new();
    for (i, amp) in psi.amplitudes().iter().enumerate() {
        if amp.norm() <= SUPPORT {
            continue;
        }
        let config = levels(i);
        // each atom independently stays (α) or transfers with one photon (β)
        for mask in 0u8..8 {
            let mut atoms = config;
            let mut cavities = [CavityOccupation::VACUUM; 3];
            let mut a = *amp;
            for j in 0..3 {
                let branch = config[j].branch();
                if mask & (1 << j) != 0 {
                    atoms[j] = AtomLevel::e(branch);
                    cavities[j] = CavityOccupation::one(branch);
                    a *= coeffs.beta;
                } else {
                    a *= coeffs.alpha;
                }
            }
            terms.push((atoms, cavities, a));
        }
    }
    Ok(AtomCavityState::from_terms(terms))
}

/// Flips the sign of `|e_L⟩` on atom a, mapping Ψ² onto Ψ¹.
pub fn sign_correction(rho: &DensityMatrix, class: OutcomeClass) -> Result<DensityMatrix> {
    match class {
        OutcomeClass::GhzPlus => Ok(rho.clone()),
        OutcomeClass::GhzMinus => {
            let n = REGISTER_LEVELS.pow(3);
            let flip = CMatrix::from_fn(n, n, |i, j| {
                if i != j {
                    c(0.0, 0.0)
                } else if basis_digits(i)[0] == EL {
                    c(-1.0, 0.0)
                } else {
                    c(1.0, 0.0)
                }
            });
            DensityMatrix::unchecked(rho.space().clone(), &flip * rho.elements() * &flip)
        }
        OutcomeClass::Reject => Err(Error::RejectedOutcome),
    }
}

/// Fast Raman transfer `e_L → g_L`, `e_R → g_R` on every atom.
pub fn raman_mapping(rho: &DensityMatrix) -> Result<DensityMatrix> {
    require_density_support(rho, &[EL, ER], "{e_L, e_R}")?;
    let mut swap = CMatrix::zeros(REGISTER_LEVELS, REGISTER_LEVELS);
    for (a, b) in [(GL, EL), (EL, GL), (GR, ER), (ER, GR)] {
        swap[(a, b)] = c(1.0, 0.0);
    }
    let p = local_on_all(&swap);
    DensityMatrix::unchecked(rho.space().clone(), &p * rho.elements() * p.adjoint())
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolResult {
    pub pattern: ClickPattern,
    pub class: OutcomeClass,
    pub probability: f64,
    /// Fidelity of the heralded state with its GHZ class target.
    pub herald_fidelity: f64,
    /// Fidelity of the corrected, relabeled state with the ground-state GHZ
    /// target. Both fidelities are clamped to [0, 1] against rounding.
    pub fidelity: f64,
    #[serde(skip)]
    pub conditional: DensityMatrix,
    #[serde(skip)]
    pub final_state: DensityMatrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolRun {
    pub params: SystemParams,
    pub interaction_time: f64,
    pub coefficients: EvolutionCoefficients,
    pub success_probability: f64,
    /// `3η_d³|β|⁶/4`, the accepted probability predicted from the
    /// interaction coefficients.
    pub predicted_probability: f64,
    /// Probability-weighted mean fidelity over accepted patterns.
    pub fidelity: f64,
    pub min_fidelity: f64,
    pub results: Vec<ProtocolResult>,
    pub detection: DetectionReport,
}

/// Full pipeline at the operating time.
pub fn run_protocol(params: &SystemParams, layout: &NetworkLayout) -> Result<ProtocolRun> {
    run_protocol_at(params, layout, params.operating_time())
}

pub fn run_protocol_at(params: &SystemParams, layout: &NetworkLayout, t: f64) -> Result<ProtocolRun> {
    params.validate()?;
    layout.validate()?;
    let coeffs = interaction_coefficients(params, t)?;
    let pulsed = apply_hadamard_pulses(&prepare_w_state())?;
    let joint = cavity_interaction_with(&pulsed, coeffs)?;
    let photons = propagate(&emit_and_qwp_lossy(&joint), layout)?;
    let detection = enumerate_outcomes(&photons, params.eta_d)?;
    let target = ghz_target();

    let mut results = Vec::new();
    for outcome in detection.accepted() {
        let Some(conditional) = detection.conditional.get(&outcome.pattern) else {
            continue;
        };
        let corrected = sign_correction(conditional, outcome.class)?;
        let final_state = raman_mapping(&corrected)?;
        results.push(ProtocolResult {
            pattern: outcome.pattern,
            class: outcome.class,
            probability: outcome.probability,
            herald_fidelity: outcome.fidelity.unwrap_or(0.0).clamp(0.0, 1.0),
            fidelity: final_state.fidelity(&target)?.clamp(0.0, 1.0),
            conditional: conditional.clone(),
            final_state,
        });
    }
    let success: f64 = results.iter().map(|r| r.probability).sum();
    let fidelity = if success > 0.0 {
        results.iter().map(|r| r.probability * r.fidelity).sum::<f64>() / success
    } else {
        0.0
    };
    let min_fidelity = results.iter().map(|r| r.fidelity).fold(f64::INFINITY, f64::min);
    Ok(ProtocolRun {
        params: *params,
        interaction_time: t,
        coefficients: coeffs,
        success_probability: success,
        predicted_probability: 0.75 * params.eta_d.powi(3) * coeffs.beta.norm_sqr().powi(3),
        fidelity,
        min_fidelity: if min_fidelity.is_finite() { min_fidelity } else { 0.0 },
        results,
        detection,
    })
}

impl ProtocolRun {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Amplitude of `config` in a register state.
pub fn amplitude_of(psi: &StateVector, config: &AtomConfig) -> Result<C64> {
    Ok(psi.amplitudes()[config_index(config)?])
}

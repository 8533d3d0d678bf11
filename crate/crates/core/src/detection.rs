//! Non-number-resolving detectors with finite efficiency, one per polarized
//! output mode, and classification of the resulting click patterns.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hilbert::{c, CMatrix, DensityMatrix, HilbertSpace, StateVector, C64};
use crate::model::AtomLevel;
use crate::network::{AtomConfig, JointAtomPhotonState, JointState, Occupation, Polarization, PolarizedPhotonMode, OUTPUT_MODES};

/// Probability mass below which a pattern is treated as never occurring.
pub const ZERO_PROBABILITY: f64 = 1e-14;

pub const ATOM_LABELS: [&str; 3] = ["a", "b", "c"];

/// Levels kept per atom in the three-atom register.
pub const REGISTER_LEVELS: usize = 4;

/// `a ⊗ b ⊗ c`, each restricted to `{g_L, g_R, e_L, e_R}`.
pub fn atoms_space() -> HilbertSpace {
    HilbertSpace::new(ATOM_LABELS.map(|l| (l, REGISTER_LEVELS))).expect("static labels")
}

/// Basis index of an atomic configuration in [`atoms_space`].
pub fn config_index(config: &AtomConfig) -> Result<usize> {
    config.iter().try_fold(0, |acc, level| {
        if !level.is_ground() {
            return Err(Error::InvalidState(format!("level {} outside the register", level.name())));
        }
        Ok(acc * REGISTER_LEVELS + level.index())
    })
}

pub fn config_state(config: &AtomConfig) -> Result<StateVector> {
    StateVector::basis(atoms_space(), &config.map(AtomLevel::index))
}

/// `(s_L |e_L e_L e_L⟩ + |e_R e_R e_R⟩)/√2`.
fn ghz_e(sign_l: f64) -> StateVector {
    let mut v = vec![c(0.0, 0.0); REGISTER_LEVELS.pow(3)];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    v[config_index(&[AtomLevel::EL; 3]).unwrap()] = c(sign_l * s, 0.0);
    v[config_index(&[AtomLevel::ER; 3]).unwrap()] = c(s, 0.0);
    StateVector::from_vec(atoms_space(), v).unwrap()
}

/// `Ψ¹ = (|e_L e_L e_L⟩ + |e_R e_R e_R⟩)/√2`.
pub fn ghz_plus() -> StateVector {
    ghz_e(1.0)
}

/// `Ψ² = (−|e_L e_L e_L⟩ + |e_R e_R e_R⟩)/√2`.
pub fn ghz_minus() -> StateVector {
    ghz_e(-1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Detector {
    D7H,
    D7V,
    D8H,
    D8V,
    D9H,
    D9V,
}

impl Detector {
    pub const ALL: [Detector; 6] = [Detector::D7H, Detector::D7V, Detector::D8H, Detector::D8V, Detector::D9H, Detector::D9V];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn mode(self) -> PolarizedPhotonMode {
        let i = self as u8;
        let pol = if i % 2 == 0 { Polarization::H } else { Polarization::V };
        PolarizedPhotonMode::new(OUTPUT_MODES[(i / 2) as usize], pol)
    }

    pub fn for_mode(mode: PolarizedPhotonMode) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.mode() == mode)
    }

    pub fn name(self) -> &'static str {
        ["D7H", "D7V", "D8H", "D8V", "D9H", "D9V"][self as usize]
    }
}

/// Set of detectors that fired.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClickPattern(u8);

impl ClickPattern {
    pub fn new<I: IntoIterator<Item = Detector>>(fired: I) -> Self {
        Self(fired.into_iter().fold(0, |acc, d| acc | d.bit()))
    }

    pub fn none() -> Self {
        Self(0)
    }

    /// All 2⁶ patterns in bit order.
    pub fn all() -> impl Iterator<Item = Self> {
        (0u8..64).map(Self)
    }

    pub fn fired(&self, d: Detector) -> bool {
        self.0 & d.bit() != 0
    }

    pub fn detectors(&self) -> Vec<Detector> {
        Detector::ALL.into_iter().filter(|d| self.fired(*d)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for ClickPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.detectors().into_iter().map(Detector::name).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

impl FromStr for ClickPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('{').trim_end_matches('}');
        let mut fired = Vec::new();
        for name in inner.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            let d = Detector::ALL
                .into_iter()
                .find(|d| d.name().eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::InvalidState(format!("unknown detector `{name}`")))?;
            fired.push(d);
        }
        Ok(Self::new(fired))
    }
}

impl Serialize for ClickPattern {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OutcomeClass {
    GhzPlus,
    GhzMinus,
    Reject,
}

impl OutcomeClass {
    /// Target atomic state heralded by this class.
    pub fn target(self) -> Option<StateVector> {
        match self {
            OutcomeClass::GhzPlus => Some(ghz_plus()),
            OutcomeClass::GhzMinus => Some(ghz_minus()),
            OutcomeClass::Reject => None,
        }
    }
}

/// Exactly one detector per output mode must fire; the parity of the
/// V clicks then selects the GHZ sign.
pub fn classify_pattern(pattern: ClickPattern) -> OutcomeClass {
    let mut v_clicks = 0;
    for pair in Detector::ALL.chunks(2) {
        let (h, v) = (pattern.fired(pair[0]), pattern.fired(pair[1]));
        if h == v {
            return OutcomeClass::Reject;
        }
        if v {
            v_clicks += 1;
        }
    }
    if v_clicks % 2 == 1 {
        OutcomeClass::GhzPlus
    } else {
        OutcomeClass::GhzMinus
    }
}

/// Diagonal POVM of one detector in the Fock basis `|0⟩ … |n_max⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorPovm {
    pub off: CMatrix,
    pub click: CMatrix,
}

fn check_efficiency(eta_d: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta_d) {
        return Err(Error::InvalidParams(format!("eta_d = {eta_d} outside [0, 1]")));
    }
    Ok(())
}

pub fn povm_elements(eta_d: f64, n_max: usize) -> Result<DetectorPovm> {
    check_efficiency(eta_d)?;
    let d = n_max + 1;
    let off = CMatrix::from_fn(d, d, |i, j| if i == j { c(off_probability(eta_d, i as u32), 0.0) } else { c(0.0, 0.0) });
    let click = CMatrix::identity(d, d) - &off;
    Ok(DetectorPovm { off, click })
}

/// `(1 − η_d)^k`, the chance that `k` photons leave no click.
pub fn off_probability(eta_d: f64, k: u32) -> f64 {
    (1.0 - eta_d).powi(k as i32)
}

/// Weight `⟨n|Π(pattern)|n⟩` for a photon occupation.
pub fn pattern_weight(occ: &Occupation, pattern: ClickPattern, eta_d: f64) -> Result<f64> {
    let mut w = 1.0;
    for (mode, _) in occ.iter() {
        if Detector::for_mode(mode).is_none() {
            return Err(Error::UnroutedPhoton(mode.to_string()));
        }
    }
    for d in Detector::ALL {
        let off = off_probability(eta_d, occ.count(d.mode()));
        w *= if pattern.fired(d) { 1.0 - off } else { off };
    }
    Ok(w)
}

/// `Σ_n ⟨n|Π|n⟩ ψ(k,n) ψ(k',n)*` over register indices, i.e. the
/// unnormalized register state after the photons are measured.
pub fn weighted_gram<K, F>(state: &JointState<K>, pattern: ClickPattern, eta_d: f64, dim: usize, index: F) -> Result<CMatrix>
where
    K: Ord + Clone,
    F: Fn(&K) -> Result<usize>,
{
    let mut by_occ: BTreeMap<&Occupation, Vec<(usize, C64)>> = BTreeMap::new();
    for (k, occ, amp) in state.terms() {
        by_occ.entry(occ).or_default().push((index(k)?, amp));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for (occ, entries) in by_occ {
        let w = pattern_weight(occ, pattern, eta_d)?;
        if w == 0.0 {
            continue;
        }
        for &(i, a) in &entries {
            for &(j, b) in &entries {
                m[(i, j)] += a * b.conj() * w;
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct Measurement {
    pub pattern: ClickPattern,
    pub class: OutcomeClass,
    pub probability: f64,
    /// Normalized atomic state; `None` when the pattern cannot occur.
    pub conditional: Option<DensityMatrix>,
}

impl Measurement {
    /// Fidelity of the conditional state with the class target.
    pub fn fidelity(&self) -> Option<f64> {
        let target = self.class.target()?;
        self.conditional.as_ref().and_then(|rho| rho.fidelity(&target).ok())
    }
}

pub fn measure(state: &JointAtomPhotonState, pattern: ClickPattern, eta_d: f64) -> Result<Measurement> {
    check_efficiency(eta_d)?;
    let m = weighted_gram(state, pattern, eta_d, REGISTER_LEVELS.pow(3), config_index)?;
    let probability = m.trace().re.max(0.0);
    if probability <= ZERO_PROBABILITY {
        return Ok(Measurement { pattern, class: OutcomeClass::Reject, probability, conditional: None });
    }
    let rho = DensityMatrix::unchecked(atoms_space(), m.unscale(probability))?;
    Ok(Measurement { pattern, class: classify_pattern(pattern), probability, conditional: Some(rho) })
}

/// `3η_d³/4`.
pub fn success_probability_ideal(eta_d: f64) -> f64 {
    0.75 * eta_d.powi(3)
}

#[derive(Debug, Clone, Serialize)]
pub struct PatternOutcome {
    pub pattern: ClickPattern,
    pub class: OutcomeClass,
    pub probability: f64,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectionReport {
    pub eta_d: f64,
    pub outcomes: Vec<PatternOutcome>,
    /// Total probability of GHZ-heralding patterns.
    pub accepted_probability: f64,
    /// The closed-form `3η_d³/4` for comparison.
    pub formula_probability: f64,
    /// Norm missing from the input state (photons that never reached a detector).
    pub lost_probability: f64,
    pub total_probability: f64,
    #[serde(skip)]
    pub conditional: BTreeMap<ClickPattern, DensityMatrix>,
}

impl DetectionReport {
    pub fn accepted(&self) -> impl Iterator<Item = &PatternOutcome> {
        self.outcomes.iter().filter(|o| o.class != OutcomeClass::Reject)
    }

    pub fn outcome(&self, pattern: ClickPattern) -> Option<&PatternOutcome> {
        self.outcomes.iter().find(|o| o.pattern == pattern)
    }

    pub fn reject_probability(&self) -> f64 {
        self.total_probability - self.accepted_probability
    }
}

pub fn enumerate_outcomes(state: &JointAtomPhotonState, eta_d: f64) -> Result<DetectionReport> {
    check_efficiency(eta_d)?;
    let patterns: Vec<ClickPattern> = ClickPattern::all().collect();
    let measurements = patterns
        .par_iter()
        .map(|p| measure(state, *p, eta_d))
        .collect::<Result<Vec<_>>>()?;

    let mut outcomes = Vec::with_capacity(measurements.len());
    let mut conditional = BTreeMap::new();
    let mut accepted = 0.0;
    let mut measured = 0.0;
    for m in measurements {
        measured += m.probability;
        if m.class != OutcomeClass::Reject {
            accepted += m.probability;
        }
        outcomes.push(PatternOutcome { pattern: m.pattern, class: m.class, probability: m.probability, fidelity: m.fidelity() });
        if let Some(rho) = m.conditional {
            conditional.insert(m.pattern, rho);
        }
    }
    let lost = (1.0 - state.norm_sqr()).max(0.0);
    Ok(DetectionReport {
        eta_d,
        outcomes,
        accepted_probability: accepted,
        formula_probability: success_probability_ideal(eta_d),
        lost_probability: lost,
        total_probability: measured + lost,
        conditional,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Detector::*;

    #[test]
    fn detector_modes_roundtrip() {
        for d in Detector::ALL {
            assert_eq!(Detector::for_mode(d.mode()), Some(d));
        }
        assert_eq!(D8V.mode(), PolarizedPhotonMode::new(8, Polarization::V));
    }

    #[test]
    fn povm_complete_and_limits() {
        for eta in [0.0, 0.3, 1.0] {
            let p = povm_elements(eta, 2).unwrap();
            assert_eq!(&p.off + &p.click, CMatrix::identity(3, 3));
        }
        let p = povm_elements(1.0, 2).unwrap();
        assert_eq!(p.off[(0, 0)], c(1.0, 0.0));
        assert_eq!(p.off[(1, 1)], c(0.0, 0.0));
        let p = povm_elements(0.4, 2).unwrap();
        assert!((p.click[(1, 1)].re - 0.4).abs() < 1e-15);
        assert!((p.click[(2, 2)].re - (1.0 - 0.6 * 0.6)).abs() < 1e-15);
        assert!(povm_elements(1.5, 1).is_err());
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_pattern(ClickPattern::new([D7H, D8V, D9H])), OutcomeClass::GhzPlus);
        assert_eq!(classify_pattern(ClickPattern::new([D7H, D8H, D9V])), OutcomeClass::GhzPlus);
        assert_eq!(classify_pattern(ClickPattern::new([D7V, D8H, D9V])), OutcomeClass::GhzMinus);
        assert_eq!(classify_pattern(ClickPattern::new([D7H, D8H, D9H])), OutcomeClass::GhzMinus);
        assert_eq!(classify_pattern(ClickPattern::new([D7H, D7V, D8H])), OutcomeClass::Reject);
        assert_eq!(classify_pattern(ClickPattern::none()), OutcomeClass::Reject);
        let accepted = ClickPattern::all().filter(|p| classify_pattern(*p) != OutcomeClass::Reject).count();
        assert_eq!(accepted, 8);
    }

    #[test]
    fn pattern_string_roundtrip() {
        let p = ClickPattern::new([D9V, D7H, D8H]);
        assert_eq!(p.to_string(), "{D7H,D8H,D9V}");
        assert_eq!(p.to_string().parse::<ClickPattern>().unwrap(), p);
        assert_eq!(serde_json::to_string(&p).unwrap(), "\"{D7H,D8H,D9V}\"");
        assert!("{D7X}".parse::<ClickPattern>().is_err());
    }

    #[test]
    fn vacuum_gives_all_off() {
        let vac = JointState::from_terms([([AtomLevel::EL; 3], Occupation::vacuum(), c(1.0, 0.0))]);
        let report = enumerate_outcomes(&vac, 0.7).unwrap();
        assert!((report.outcome(ClickPattern::none()).unwrap().probability - 1.0).abs() < 1e-15);
        assert_eq!(report.accepted_probability, 0.0);
    }

    #[test]
    fn blind_detectors() {
        let occ = Occupation::from_modes([D7H.mode(), D8V.mode(), D9H.mode()]);
        let s = JointState::from_terms([([AtomLevel::EL; 3], occ, c(1.0, 0.0))]);
        let report = enumerate_outcomes(&s, 0.0).unwrap();
        for o in &report.outcomes {
            let expect = if o.pattern.is_empty() { 1.0 } else { 0.0 };
            assert_eq!(o.probability, expect);
        }
    }

    #[test]
    fn register_rejects_f_levels() {
        assert!(config_index(&[AtomLevel::FL, AtomLevel::EL, AtomLevel::EL]).is_err());
        assert_eq!(config_index(&[AtomLevel::ER; 3]).unwrap(), 3 * 16 + 3 * 4 + 3);
    }

    #[test]
    fn unrouted_photon_is_an_error() {
        let occ = Occupation::from_modes([PolarizedPhotonMode::new(1, Polarization::H)]);
        assert!(matches!(pattern_weight(&occ, ClickPattern::none(), 1.0), Err(Error::UnroutedPhoton(_))));
    }

    #[test]
    fn success_formula() {
        assert_eq!(success_probability_ideal(1.0), 0.75);
        assert!((success_probability_ideal(0.5) - 0.09375).abs() < 1e-16);
    }
}

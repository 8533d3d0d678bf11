//! Hamiltonians and dissipators for one six-level double-Λ atom coupled to a
//! two-polarization cavity.
//!
//! The full model lives on `atom(6) ⊗ cav_L(n_max+1) ⊗ cav_R(n_max+1)`; the
//! adiabatically eliminated model drops the excited `f` levels and lives on
//! `atom(4) ⊗ cav_L ⊗ cav_R`. Atom digits follow [`AtomLevel::index`].

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{c, CMatrix, HilbertSpace, Operator, StateVector, C64};

pub const ATOM: &str = "atom";
pub const CAVITY_L: &str = "cav_L";
pub const CAVITY_R: &str = "cav_R";

/// Circular polarization branch of the atom and cavity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Branch {
    L,
    R,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::L, Branch::R];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AtomLevel {
    #[serde(rename = "gL")]
    GL,
    #[serde(rename = "gR")]
    GR,
    #[serde(rename = "eL")]
    EL,
    #[serde(rename = "eR")]
    ER,
    #[serde(rename = "fL")]
    FL,
    #[serde(rename = "fR")]
    FR,
}

impl AtomLevel {
    pub const ALL: [AtomLevel; 6] =
        [AtomLevel::GL, AtomLevel::GR, AtomLevel::EL, AtomLevel::ER, AtomLevel::FL, AtomLevel::FR];

    /// Levels kept after adiabatic elimination.
    pub const GROUND: [AtomLevel; 4] = [AtomLevel::GL, AtomLevel::GR, AtomLevel::EL, AtomLevel::ER];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// `g` and `e` levels are long-lived ground states; `f` levels are excited.
    pub fn is_ground(self) -> bool {
        !matches!(self, AtomLevel::FL | AtomLevel::FR)
    }

    pub fn g(branch: Branch) -> Self {
        match branch {
            Branch::L => AtomLevel::GL,
            Branch::R => AtomLevel::GR,
        }
    }

    pub fn e(branch: Branch) -> Self {
        match branch {
            Branch::L => AtomLevel::EL,
            Branch::R => AtomLevel::ER,
        }
    }

    pub fn f(branch: Branch) -> Self {
        match branch {
            Branch::L => AtomLevel::FL,
            Branch::R => AtomLevel::FR,
        }
    }

    pub fn branch(self) -> Branch {
        match self {
            AtomLevel::GL | AtomLevel::EL | AtomLevel::FL => Branch::L,
            _ => Branch::R,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AtomLevel::GL => "gL",
            AtomLevel::GR => "gR",
            AtomLevel::EL => "eL",
            AtomLevel::ER => "eR",
            AtomLevel::FL => "fL",
            AtomLevel::FR => "fR",
        }
    }
}

/// Physical rates and detector efficiency. Rates are in units of a reference
/// rate γ, times in units of 1/γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Detuning Δ of drive and cavity from the `g,e ↔ f` transitions.
    pub delta: f64,
    /// Atom-cavity coupling λ_c.
    pub lambda_c: f64,
    /// Classical Rabi frequency Ω.
    pub omega: f64,
    /// Cavity field decay rate κ, equal for both polarizations.
    pub kappa: f64,
    /// Atomic spontaneous rate γ_a; each of the four `f → g/e` branches
    /// carries γ_a/2.
    pub gamma_a: f64,
    /// Detector quantum efficiency η_d.
    pub eta_d: f64,
    /// Fock cutoff per cavity polarization mode.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_n_max() -> usize {
    1
}

impl Default for SystemParams {
    /// Ideal, lossless operating point with λ_c = Ω and Δ = 100 λ_c.
    fn default() -> Self {
        Self {
            delta: 100.0,
            lambda_c: 1.0,
            omega: 1.0,
            kappa: 0.0,
            gamma_a: 0.0,
            eta_d: 1.0,
            n_max: 1,
        }
    }
}

/// How κ is tied to γ_a when only γ_a is specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaConvention {
    /// κ = γ_a.
    EqualGammaA,
    /// κ = γ_a/2, matching each atomic branch rate.
    HalfGammaA,
}

impl KappaConvention {
    pub fn kappa(self, gamma_a: f64) -> f64 {
        match self {
            KappaConvention::EqualGammaA => gamma_a,
            KappaConvention::HalfGammaA => gamma_a / 2.0,
        }
    }
}

/// Rates appearing in the closed-form decay solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    /// η = λ_c²/Δ.
    pub eta: f64,
    /// φ = √(κ² − 4η²), principal branch.
    pub phi: C64,
    /// φ′ = √(4η² − κ²), principal branch.
    pub phi_prime: C64,
    /// φ̃ = iη − κ/2.
    pub varphi: C64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("lambda_c", self.lambda_c),
            ("omega", self.omega),
            ("kappa", self.kappa),
            ("gamma_a", self.gamma_a),
        ];
        for (name, v) in rates {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be finite and ≥ 0, got {v}")));
            }
        }
        if !self.delta.is_finite() || self.delta <= 0.0 {
            return Err(Error::InvalidParams(format!("delta must be > 0, got {}", self.delta)));
        }
        if !(0.0..=1.0).contains(&self.eta_d) {
            return Err(Error::InvalidParams(format!("eta_d must lie in [0, 1], got {}", self.eta_d)));
        }
        if self.n_max < 1 {
            return Err(Error::InvalidParams("n_max must be ≥ 1".into()));
        }
        Ok(())
    }

    /// True when Δ < 10·max(λ_c, Ω), where adiabatic elimination is doubtful.
    pub fn large_detuning_advisory(&self) -> bool {
        self.delta < 10.0 * self.lambda_c.max(self.omega)
    }

    pub fn derived(&self) -> DerivedRates {
        let eta = self.lambda_c * self.lambda_c / self.delta;
        let k2 = self.kappa * self.kappa;
        DerivedRates {
            eta,
            phi: c(k2 - 4.0 * eta * eta, 0.0).sqrt(),
            phi_prime: c(4.0 * eta * eta - k2, 0.0).sqrt(),
            varphi: c(-self.kappa / 2.0, eta),
        }
    }

    /// Raman transfer time t = Δπ/(λ_c² + Ω²), where the ideal dynamics
    /// send `|g_j,0⟩` to `−|e_j,1_j⟩` when λ_c = Ω.
    pub fn operating_time(&self) -> f64 {
        self.delta * PI / (self.lambda_c.powi(2) + self.omega.powi(2))
    }

    /// Period of the effective Raman oscillation, 2πΔ/(λ_c² + Ω²).
    pub fn raman_period(&self) -> f64 {
        2.0 * self.operating_time()
    }

    pub fn with_kappa_convention(mut self, convention: KappaConvention) -> Self {
        self.kappa = convention.kappa(self.gamma_a);
        self
    }

    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }
}

fn zero() -> C64 {
    Complex64::new(0.0, 0.0)
}

fn projector(dim: usize, row: usize, col: usize) -> CMatrix {
    let mut m = DMatrix::from_element(dim, dim, zero());
    m[(row, col)] = c(1.0, 0.0);
    m
}

fn annihilation(dim: usize) -> CMatrix {
    let mut m = DMatrix::from_element(dim, dim, zero());
    for n in 1..dim {
        m[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
    }
    m
}

fn number(dim: usize) -> CMatrix {
    let mut m = DMatrix::from_element(dim, dim, zero());
    for n in 0..dim {
        m[(n, n)] = c(n as f64, 0.0);
    }
    m
}

/// Operator `local_atom ⊗ local_L ⊗ local_R`.
fn product(atom: &CMatrix, cav_l: &CMatrix, cav_r: &CMatrix) -> CMatrix {
    atom.kronecker(cav_l).kronecker(cav_r)
}

fn cavity_pair(branch: Branch, local: &CMatrix, fock: usize) -> (CMatrix, CMatrix) {
    let id = CMatrix::identity(fock, fock);
    match branch {
        Branch::L => (local.clone(), id),
        Branch::R => (id, local.clone()),
    }
}

pub fn full_space(params: &SystemParams) -> HilbertSpace {
    let f = params.fock_dim();
    HilbertSpace::new([(ATOM, 6), (CAVITY_L, f), (CAVITY_R, f)]).expect("static labels")
}

pub fn effective_space(params: &SystemParams) -> HilbertSpace {
    let f = params.fock_dim();
    HilbertSpace::new([(ATOM, 4), (CAVITY_L, f), (CAVITY_R, f)]).expect("static labels")
}

/// H_I = Σ_j [Δ|f_j⟩⟨f_j| + (λ_c a_j|f_j⟩⟨e_j| + Ω|f_j⟩⟨g_j| + h.c.)].
pub fn full_hamiltonian(params: &SystemParams) -> Operator {
    let fock = params.fock_dim();
    let id = CMatrix::identity(fock, fock);
    let a = annihilation(fock);
    let n = 6 * fock * fock;
    let mut h = DMatrix::from_element(n, n, zero());
    for branch in Branch::BOTH {
        let f = AtomLevel::f(branch).index();
        let e = AtomLevel::e(branch).index();
        let g = AtomLevel::g(branch).index();
        h += product(&projector(6, f, f), &id, &id) * c(params.delta, 0.0);

        let (al, ar) = cavity_pair(branch, &a, fock);
        let cavity = product(&projector(6, f, e), &al, &ar) * c(params.lambda_c, 0.0);
        let drive = product(&projector(6, f, g), &id, &id) * c(params.omega, 0.0);
        let coupling = cavity + drive;
        h += &coupling + coupling.adjoint();
    }
    Operator::new(full_space(params), h).expect("shape")
}

/// Adiabatically eliminated Hamiltonian on the four ground levels:
/// −Σ_j [(λ_c²/Δ)|e_j⟩⟨e_j|a_j†a_j + (Ω²/Δ)|g_j⟩⟨g_j| + (λ_cΩ/Δ)(|g_j⟩⟨e_j|a_j + h.c.)].
pub fn effective_hamiltonian(params: &SystemParams) -> Operator {
    let fock = params.fock_dim();
    let id = CMatrix::identity(fock, fock);
    let a = annihilation(fock);
    let num = number(fock);
    let n = 4 * fock * fock;
    let d = params.delta;
    let mut h = DMatrix::from_element(n, n, zero());
    for branch in Branch::BOTH {
        let e = AtomLevel::e(branch).index();
        let g = AtomLevel::g(branch).index();
        let (nl, nr) = cavity_pair(branch, &num, fock);
        let (al, ar) = cavity_pair(branch, &a, fock);
        h -= product(&projector(4, e, e), &nl, &nr) * c(params.lambda_c.powi(2) / d, 0.0);
        h -= product(&projector(4, g, g), &id, &id) * c(params.omega.powi(2) / d, 0.0);
        let raman = product(&projector(4, g, e), &al, &ar) * c(params.lambda_c * params.omega / d, 0.0);
        h -= &raman + raman.adjoint();
    }
    Operator::new(effective_space(params), h).expect("shape")
}

/// H′ = H_eff − iκ Σ_j a_j†a_j, the no-jump generator under cavity decay.
pub fn conditional_hamiltonian(params: &SystemParams) -> Operator {
    let fock = params.fock_dim();
    let id = CMatrix::identity(fock, fock);
    let num = number(fock);
    let atom_id = CMatrix::identity(4, 4);
    let photons = product(&atom_id, &num, &id) + product(&atom_id, &id, &num);
    let h = effective_hamiltonian(params).elements() - photons * c(0.0, params.kappa);
    Operator::new(effective_space(params), h).expect("shape")
}

/// A Lindblad channel `rate · D[op]`, with `op` unscaled.
#[derive(Debug, Clone)]
pub struct CollapseChannel {
    pub name: String,
    pub rate: f64,
    pub op: Operator,
}

/// Cavity leakage `a_L`, `a_R` at rate κ and the four spontaneous branches
/// `|x_j⟩⟨f_j|` (x ∈ {g, e}) at rate γ_a/2 each.
pub fn collapse_operators(params: &SystemParams) -> Vec<CollapseChannel> {
    let fock = params.fock_dim();
    let space = full_space(params);
    let id = CMatrix::identity(fock, fock);
    let atom_id = CMatrix::identity(6, 6);
    let a = annihilation(fock);
    let mut out = Vec::with_capacity(6);
    for branch in Branch::BOTH {
        let (al, ar) = cavity_pair(branch, &a, fock);
        out.push(CollapseChannel {
            name: format!("cavity_{branch:?}"),
            rate: params.kappa,
            op: Operator::new(space.clone(), product(&atom_id, &al, &ar)).expect("shape"),
        });
    }
    for branch in Branch::BOTH {
        let f = AtomLevel::f(branch);
        for x in [AtomLevel::g(branch), AtomLevel::e(branch)] {
            out.push(CollapseChannel {
                name: format!("{}_to_{}", f.name(), x.name()),
                rate: params.gamma_a / 2.0,
                op: Operator::new(space.clone(), product(&projector(6, x.index(), f.index()), &id, &id))
                    .expect("shape"),
            });
        }
    }
    out
}

/// Embeds a state of the eliminated model into the full model with zero
/// amplitude on the `f` levels.
pub fn embed_effective_state(params: &SystemParams, psi: &StateVector) -> Result<StateVector> {
    let eff = effective_space(params);
    if psi.space() != &eff {
        return Err(Error::SpaceMismatch { expected: eff.to_string(), found: psi.space().to_string() });
    }
    let full = full_space(params);
    let mut out = StateVector::zero(full.clone());
    let mut amps = out.amplitudes().clone();
    for (i, a) in psi.amplitudes().iter().enumerate() {
        let d = eff.digits(i);
        amps[full.index(&d)?] = *a;
    }
    out = StateVector::new(full, amps)?;
    Ok(out)
}

/// Restricts a full-model state to the four ground levels, dropping the `f`
/// amplitudes without renormalizing.
pub fn project_to_effective(params: &SystemParams, psi: &StateVector) -> Result<StateVector> {
    let full = full_space(params);
    if psi.space() != &full {
        return Err(Error::SpaceMismatch { expected: full.to_string(), found: psi.space().to_string() });
    }
    let eff = effective_space(params);
    let amps: Vec<C64> = (0..eff.total_dim())
        .map(|i| full.index(&eff.digits(i)).map(|j| psi.amplitudes()[j]))
        .collect::<Result<_>>()?;
    StateVector::from_vec(eff, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::max_abs_diff;

    fn params() -> SystemParams {
        SystemParams { delta: 20.0, lambda_c: 1.3, omega: 0.7, kappa: 0.2, gamma_a: 0.1, eta_d: 1.0, n_max: 1 }
    }

    #[test]
    fn six_levels_four_ground() {
        assert_eq!(AtomLevel::ALL.len(), 6);
        assert_eq!(AtomLevel::ALL.iter().filter(|l| l.is_ground()).count(), 4);
    }

    #[test]
    fn full_hamiltonian_elements() {
        let p = params();
        let h = full_hamiltonian(&p);
        assert!(h.is_hermitian());
        let fl = AtomLevel::FL.index();
        let gl = AtomLevel::GL.index();
        let el = AtomLevel::EL.index();
        let fr = AtomLevel::FR.index();
        assert_eq!(h.element(&[fl, 0, 0], &[gl, 0, 0]).unwrap(), c(p.omega, 0.0));
        assert_eq!(h.element(&[fl, 0, 0], &[el, 1, 0]).unwrap(), c(p.lambda_c, 0.0));
        assert_eq!(h.element(&[fl, 0, 0], &[fr, 0, 0]).unwrap(), c(0.0, 0.0));
        assert_eq!(h.element(&[fl, 1, 1], &[fl, 1, 1]).unwrap(), c(p.delta, 0.0));
    }

    #[test]
    fn effective_hamiltonian_elements() {
        let p = params();
        let h = effective_hamiltonian(&p);
        assert!(h.is_hermitian());
        let gl = AtomLevel::GL.index();
        let el = AtomLevel::EL.index();
        let coupling = h.element(&[gl, 0, 0], &[el, 1, 0]).unwrap();
        assert!((coupling - c(-p.lambda_c * p.omega / p.delta, 0.0)).norm() < 1e-15);
        let stark = h.element(&[el, 1, 0], &[el, 1, 0]).unwrap();
        assert!((stark - c(-p.lambda_c.powi(2) / p.delta, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn effective_block_matches_two_by_two() {
        let p = params();
        let h = effective_hamiltonian(&p);
        for b in Branch::BOTH {
            let g = AtomLevel::g(b).index();
            let e = AtomLevel::e(b).index();
            let ph = |b: Branch| match b {
                Branch::L => [1, 0],
                Branch::R => [0, 1],
            };
            let gs = [g, 0, 0];
            let es = [e, ph(b)[0], ph(b)[1]];
            let expect = [
                [p.omega.powi(2), p.lambda_c * p.omega],
                [p.lambda_c * p.omega, p.lambda_c.powi(2)],
            ];
            let states = [gs, es];
            for i in 0..2 {
                for j in 0..2 {
                    let v = h.element(&states[i], &states[j]).unwrap();
                    assert!((v.re + expect[i][j] / p.delta).abs() < 1e-15 && v.im == 0.0);
                }
            }
        }
    }

    #[test]
    fn decoupled_limit_has_no_raman_coupling() {
        let p = SystemParams { omega: 0.0, ..params() };
        let h = effective_hamiltonian(&p);
        let gl = AtomLevel::GL.index();
        let el = AtomLevel::EL.index();
        assert_eq!(h.element(&[gl, 0, 0], &[el, 1, 0]).unwrap(), c(0.0, 0.0));
        let gl0 = StateVector::basis(effective_space(&p), &[gl, 0, 0]).unwrap();
        let out = h.propagator(13.0).unwrap().apply(&gl0).unwrap();
        assert!((out.amplitude(&[gl, 0, 0]).unwrap().norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn conditional_hamiltonian_structure() {
        let p = params();
        let h = conditional_hamiltonian(&p);
        assert!(!h.is_hermitian());
        let el = AtomLevel::EL.index();
        let v = h.element(&[el, 1, 0], &[el, 1, 0]).unwrap();
        assert!((v - c(-p.lambda_c.powi(2) / p.delta, -p.kappa)).norm() < 1e-15);

        let anti = h.anti_hermitian_part();
        let fock = p.fock_dim();
        let id = CMatrix::identity(fock, fock);
        let expected = (product(&CMatrix::identity(4, 4), &number(fock), &id)
            + product(&CMatrix::identity(4, 4), &id, &number(fock)))
            * c(0.0, -p.kappa);
        assert!(max_abs_diff(&anti, &expected) < 1e-15);

        for ev in h.eigenvalues() {
            assert!(ev.im <= 1e-12);
        }

        let closed = SystemParams { kappa: 0.0, ..p };
        assert_eq!(conditional_hamiltonian(&closed).elements(), effective_hamiltonian(&closed).elements());
    }

    #[test]
    fn collapse_channels() {
        let p = params();
        let ch = collapse_operators(&p);
        assert_eq!(ch.len(), 6);
        let atomic: f64 = ch.iter().skip(2).map(|c| c.rate).sum();
        assert!((atomic - 2.0 * p.gamma_a).abs() < 1e-15);
        assert!(ch.iter().all(|c| c.rate >= 0.0));

        let space = full_space(&p);
        for channel in ch.iter().skip(2) {
            // each atomic jump moves f_j to exactly one ground level of the same branch
            let m = channel.op.elements();
            let nonzero: Vec<(usize, usize)> = (0..m.nrows())
                .flat_map(|r| (0..m.ncols()).map(move |col| (r, col)))
                .filter(|&(r, col)| m[(r, col)].norm() > 0.0)
                .collect();
            let sources: std::collections::BTreeSet<usize> =
                nonzero.iter().map(|&(_, col)| space.digits(col)[0]).collect();
            let targets: std::collections::BTreeSet<usize> =
                nonzero.iter().map(|&(r, _)| space.digits(r)[0]).collect();
            assert_eq!(sources.len(), 1);
            assert_eq!(targets.len(), 1);
            let src = AtomLevel::from_index(*sources.iter().next().unwrap()).unwrap();
            let dst = AtomLevel::from_index(*targets.iter().next().unwrap()).unwrap();
            assert!(!src.is_ground() && dst.is_ground() && src.branch() == dst.branch());
        }

        let closed = SystemParams { kappa: 0.0, gamma_a: 0.0, ..p };
        assert!(collapse_operators(&closed).iter().all(|c| c.rate == 0.0));
    }

    #[test]
    fn derived_rates_phi_relation() {
        for kappa in [0.0, 0.01, 0.05, 0.3] {
            let p = SystemParams { kappa, ..params() };
            let d = p.derived();
            assert!((d.phi * d.phi + d.phi_prime * d.phi_prime).norm() < 1e-14);
        }
    }

    #[test]
    fn params_validation() {
        assert!(params().validate().is_ok());
        assert!(SystemParams { eta_d: 1.5, ..params() }.validate().is_err());
        assert!(SystemParams { delta: 0.0, ..params() }.validate().is_err());
        assert!(SystemParams { kappa: -1.0, ..params() }.validate().is_err());
        assert!(SystemParams { n_max: 0, ..params() }.validate().is_err());
        assert!(SystemParams { delta: 5.0, ..params() }.large_detuning_advisory());
        assert!(!params().large_detuning_advisory());
    }

    #[test]
    fn params_json_keys() {
        let json = r#"{"delta":14,"lambda_c":2.86,"omega":2.9,"kappa":0.01,"gamma_a":0.02,"eta_d":0.9,"n_max":2}"#;
        let p: SystemParams = serde_json::from_str(json).unwrap();
        assert_eq!(p.n_max, 2);
        assert_eq!(p.omega, 2.9);
        let back: SystemParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn embedding_round_trip() {
        let p = params();
        let eff = effective_space(&p);
        let psi = StateVector::basis(eff, &[AtomLevel::ER.index(), 0, 1]).unwrap();
        let full = embed_effective_state(&p, &psi).unwrap();
        assert_eq!(full.amplitude(&[AtomLevel::ER.index(), 0, 1]).unwrap(), c(1.0, 0.0));
        assert_eq!(project_to_effective(&p, &full).unwrap(), psi);
    }
}

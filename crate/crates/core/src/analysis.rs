//! Success-probability curves under cavity decay and master-equation
//! fidelity estimates for the three-atom protocol.

use std::f64::consts::FRAC_1_SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::{classify_pattern, weighted_gram, ClickPattern, OutcomeClass};
use crate::dynamics::{decay_coefficients, IntegratorConfig, Liouvillian};
use crate::error::{Error, Result};
use crate::hilbert::{c, CMatrix, Operator, C64};
use crate::model::{collapse_operators, full_hamiltonian, AtomLevel, Branch, CollapseChannel, KappaConvention, SystemParams};
use crate::network::{emitted_photons, propagate, CavityOccupation, JointState, NetworkLayout};
use crate::protocol::{apply_hadamard_pulses, prepare_w_state};

/// Below this |φ′²|t² the closed form switches to its Taylor series.
const SERIES_THRESHOLD: f64 = 1e-4;

/// `(1 − cos(√s t))/s`, continued analytically to s ≤ 0.
fn one_minus_cos_over_s(s: f64, t: f64) -> f64 {
    let x2 = s * t * t;
    if x2.abs() < SERIES_THRESHOLD {
        let t2 = t * t;
        t2 / 2.0 - s * t2 * t2 / 24.0 + s * s * t2 * t2 * t2 / 720.0
    } else if s > 0.0 {
        let h = (s.sqrt() * t / 2.0).sin();
        2.0 * h * h / s
    } else {
        let h = ((-s).sqrt() * t / 2.0).sinh();
        -2.0 * h * h / s
    }
}

/// Accepted probability with leaky cavities at η_d = 1:
/// `6η⁶[1 − cos φ′t]³ e^{−3κt}/φ′⁶`, with φ′² = 4η² − κ².
pub fn pd_closed_form(params: &SystemParams, t: f64) -> f64 {
    let eta = params.derived().eta;
    let s = 4.0 * eta * eta - params.kappa * params.kappa;
    let g = one_minus_cos_over_s(s, t);
    6.0 * eta.powi(6) * g.powi(3) * (-3.0 * params.kappa * t).exp()
}

/// `(3/4)|β′(t)|⁶` from the decayed coefficients.
pub fn pd_numeric(params: &SystemParams, t: f64) -> Result<f64> {
    Ok(0.75 * decay_coefficients(params, t)?.beta.norm_sqr().powi(3))
}

/// Parameters with λ_c = Ω, η = λ_c²/Δ = 1 and κ = η / `eta_over_kappa`.
pub fn decay_params(eta_over_kappa: f64) -> Result<SystemParams> {
    if !(eta_over_kappa.is_finite() && eta_over_kappa > 0.0) {
        return Err(Error::InvalidParams(format!("eta/kappa must be positive, got {eta_over_kappa}")));
    }
    Ok(SystemParams { delta: 100.0, lambda_c: 10.0, omega: 10.0, kappa: 1.0 / eta_over_kappa, ..SystemParams::default() })
}

/// Inclusive, evenly spaced grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        let g = Self { min, max, steps };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::InvalidParams(format!("grid needs at least 2 steps, got {}", self.steps)));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::InvalidParams(format!("grid needs min < max, got [{}, {}]", self.min, self.max)));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n).map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Dimensionless κt; requires κ > 0.
    KappaT,
    /// Interaction time t.
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub grid: Grid,
    pub fixed: SystemParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub abscissa: f64,
    pub closed_form: f64,
    pub numeric: f64,
    pub abs_diff: f64,
}

pub fn pd_sweep(spec: &SweepSpec) -> Result<Vec<CurvePoint>> {
    spec.grid.validate()?;
    spec.fixed.validate()?;
    let p = &spec.fixed;
    if spec.parameter == SweepParameter::KappaT && p.kappa <= 0.0 {
        return Err(Error::InvalidParams("a kappa_t sweep needs kappa > 0".into()));
    }
    spec.grid
        .points()
        .into_iter()
        .map(|x| {
            let t = match spec.parameter {
                SweepParameter::KappaT => x / p.kappa,
                SweepParameter::Time => x,
            };
            let closed_form = pd_closed_form(p, t);
            let numeric = pd_numeric(p, t)?;
            Ok(CurvePoint { abscissa: x, closed_form, numeric, abs_diff: (closed_form - numeric).abs() })
        })
        .collect()
}

/// Parameters of the fidelity figure: Ω = 2.9, Δ = 14, λ_c = 2.86.
pub fn figure_params(kappa: f64, gamma_a: f64) -> SystemParams {
    SystemParams { delta: 14.0, lambda_c: 2.86, omega: 2.9, kappa, gamma_a, eta_d: 1.0, n_max: 1 }
}

/// Figure parameters at a given λ_c/γ_a, with κ tied to γ_a.
pub fn figure_params_for_ratio(lambda_over_gamma: f64, convention: KappaConvention) -> SystemParams {
    let base = figure_params(0.0, 0.0);
    let gamma_a = base.lambda_c / lambda_over_gamma;
    figure_params(convention.kappa(gamma_a), gamma_a)
}

/// Step size that keeps `dt · rate` at 0.01.
pub fn master_equation_integrator(rate: f64) -> IntegratorConfig {
    IntegratorConfig { dt: 0.01 / rate.max(1e-12) }
}

/// Evolved images `E_{BB′} = 𝓛_t(|g_B, vac⟩⟨g_B′, vac|)` of one atom-cavity
/// subsystem, for B, B′ ∈ {L, R}. `E_RL` is `E_LR†`.
///
/// The space is `atom ⊗ cav_L ⊗ cav_R` whose atomic levels start with
/// `g_L, g_R, e_L, e_R`; both the full and the eliminated models qualify.
#[derive(Debug, Clone)]
pub struct SubsystemChannel {
    pub fock_dim: usize,
    pub ll: CMatrix,
    pub rr: CMatrix,
    pub lr: CMatrix,
}

impl SubsystemChannel {
    pub fn evolve(h: &Operator, collapse: &[CollapseChannel], fock_dim: usize, t: f64) -> Result<Self> {
        let n = h.space().total_dim();
        let liouvillian = Liouvillian::new(h, collapse)?;
        let cfg = master_equation_integrator(liouvillian.rate());
        let cav = fock_dim * fock_dim;
        let start = |b: Branch, b2: Branch| {
            let mut m = CMatrix::zeros(n, n);
            m[(AtomLevel::g(b).index() * cav, AtomLevel::g(b2).index() * cav)] = c(1.0, 0.0);
            m
        };
        let run = |b: Branch, b2: Branch| liouvillian.evolve_with(&start(b, b2), t, &cfg, |_, _| {});
        Ok(Self {
            fock_dim,
            ll: run(Branch::L, Branch::L)?,
            rr: run(Branch::R, Branch::R)?,
            lr: run(Branch::L, Branch::R)?,
        })
    }

    /// Full-model channel from the interaction Hamiltonian and the six
    /// dissipators.
    pub fn for_params(params: &SystemParams, t: f64) -> Result<Self> {
        params.validate()?;
        Self::evolve(&full_hamiltonian(params), &collapse_operators(params), params.fock_dim(), t)
    }

    pub fn element(&self, b: Branch, b2: Branch) -> CMatrix {
        match (b, b2) {
            (Branch::L, Branch::L) => self.ll.clone(),
            (Branch::R, Branch::R) => self.rr.clone(),
            (Branch::L, Branch::R) => self.lr.clone(),
            (Branch::R, Branch::L) => self.lr.adjoint(),
        }
    }

    /// Output for the input `(|g_L⟩ + |g_R⟩)/√2 ⊗ vac`.
    pub fn balanced_output(&self) -> CMatrix {
        (&self.ll + &self.rr + &self.lr + self.lr.adjoint()) * c(0.5, 0.0)
    }

    fn cav_configs(&self) -> usize {
        self.fock_dim * self.fock_dim
    }

    fn index(&self, level: usize, nl: usize, nr: usize) -> usize {
        (level * self.fock_dim + nl) * self.fock_dim + nr
    }

    /// Fidelity of [`Self::balanced_output`] with `−(|e_L,1_L⟩ + |e_R,1_R⟩)/√2`.
    pub fn transfer_fidelity(&self) -> f64 {
        let rho = self.balanced_output();
        let l = self.index(AtomLevel::EL.index(), 1, 0);
        let r = self.index(AtomLevel::ER.index(), 0, 1);
        (0.5 * (rho[(l, l)] + rho[(r, r)] + rho[(l, r)] + rho[(r, l)])).re
    }

    /// Largest trace error over the diagonal channel elements.
    pub fn trace_error(&self) -> f64 {
        let err = |m: &CMatrix| (m.trace() - c(1.0, 0.0)).norm();
        err(&self.ll).max(err(&self.rr)).max(self.lr.trace().norm())
    }

    /// Cavity-indexed block `A(p, p′) = Σ … E[(x,p),(x′,p′)]`, either traced
    /// over the atom (`levels = None`) or at fixed atomic levels.
    fn cavity_block(&self, m: &CMatrix, levels: Option<(usize, usize)>) -> CMatrix {
        let k = self.cav_configs();
        let atoms = m.nrows() / k;
        CMatrix::from_fn(k, k, |p, p2| match levels {
            Some((x, x2)) => m[(x * k + p, x2 * k + p2)],
            None => (0..atoms).map(|x| m[(x * k + p, x * k + p2)]).sum(),
        })
    }
}

/// Measurement kernels `K_π(P, P′) = ⟨Φ_P′|Π_π|Φ_P⟩` of every GHZ-heralding
/// pattern, where `Φ_P` is the network image of the photons released by the
/// three-cavity configuration `P`.
pub struct HeraldKernels {
    pub fock_dim: usize,
    pub kernels: Vec<(ClickPattern, OutcomeClass, CMatrix)>,
}

impl HeraldKernels {
    pub fn new(layout: &NetworkLayout, fock_dim: usize, eta_d: f64) -> Result<Self> {
        let k = fock_dim * fock_dim;
        let configs = k * k * k;
        let cavity = |p: usize| CavityOccupation { l: (p / fock_dim) as u32, r: (p % fock_dim) as u32 };
        let released = JointState::from_terms((0..configs).map(|idx| {
            let cav = [cavity(idx / (k * k)), cavity((idx / k) % k), cavity(idx % k)];
            (idx, emitted_photons(&cav), c(1.0, 0.0))
        }));
        let photons = propagate(&released, layout)?;
        let kernels = ClickPattern::all()
            .filter(|p| classify_pattern(*p) != OutcomeClass::Reject)
            .map(|p| {
                let m = weighted_gram(&photons, p, eta_d, configs, |i| Ok(*i))?;
                Ok((p, classify_pattern(p), m))
            })
            .collect::<Result<_>>()?;
        Ok(Self { fock_dim, kernels })
    }
}

/// `Σ_{B,B′} c_B c̄_B′ Σ_{P,P′} K(P,P′) Π_j A^{(j)}_{B_j B′_j}(p_j, p′_j)`.
fn contract(
    inputs: &[([Branch; 3], C64)],
    kernel: &CMatrix,
    k: usize,
    blocks: &[[[CMatrix; 2]; 2]; 3],
) -> C64 {
    let bi = |b: Branch| b as usize;
    let mut total = c(0.0, 0.0);
    for (b, cb) in inputs {
        for (b2, cb2) in inputs {
            let a0 = &blocks[0][bi(b[0])][bi(b2[0])];
            let a1 = &blocks[1][bi(b[1])][bi(b2[1])];
            let a2 = &blocks[2][bi(b[2])][bi(b2[2])];
            let mut s = c(0.0, 0.0);
            for p in 0..k * k * k {
                let (p0, p1, p2) = (p / (k * k), (p / k) % k, p % k);
                for q in 0..k * k * k {
                    let kv = kernel[(p, q)];
                    if kv.re == 0.0 && kv.im == 0.0 {
                        continue;
                    }
                    let (q0, q1, q2) = (q / (k * k), (q / k) % k, q % k);
                    s += kv * a0[(p0, q0)] * a1[(p1, q1)] * a2[(p2, q2)];
                }
            }
            total += cb * cb2.conj() * s;
        }
    }
    total
}

/// Heralded probability and GHZ fidelity of three identical noisy subsystems
/// fed with the pulsed W state and measured through the network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeraldedOutcome {
    pub probability: f64,
    pub fidelity: f64,
}

pub fn heralded_outcome(channel: &SubsystemChannel, kernels: &HeraldKernels) -> Result<HeraldedOutcome> {
    if channel.fock_dim != kernels.fock_dim {
        return Err(Error::DimensionMismatch { expected: kernels.fock_dim, found: channel.fock_dim });
    }
    let pulsed = apply_hadamard_pulses(&prepare_w_state())?;
    let mut inputs = Vec::new();
    for b in 0..8usize {
        let branches = [b >> 2, (b >> 1) & 1, b & 1].map(|i| Branch::BOTH[i]);
        let amp = crate::protocol::amplitude_of(&pulsed, &branches.map(AtomLevel::g))?;
        if amp.norm() > 0.0 {
            inputs.push((branches, amp));
        }
    }
    let k = channel.cav_configs();
    let elems: [[CMatrix; 2]; 2] = Branch::BOTH.map(|b| Branch::BOTH.map(|b2| channel.element(b, b2)));
    let block = |levels: Option<(usize, usize)>| -> [[CMatrix; 2]; 2] {
        [0, 1].map(|i| [0, 1].map(|j| channel.cavity_block(&elems[i][j], levels)))
    };
    let traced = block(None);
    let el = AtomLevel::EL.index();
    let er = AtomLevel::ER.index();
    let at = |x: usize, x2: usize| block(Some((x, x2)));
    let fixed = [[at(el, el), at(el, er)], [at(er, el), at(er, er)]];

    let mut probability = 0.0;
    let mut overlap = 0.0;
    for (_, class, kernel) in &kernels.kernels {
        let traced3 = [traced.clone(), traced.clone(), traced.clone()];
        probability += contract(&inputs, kernel, k, &traced3).re;
        // target (s|e_L e_L e_L⟩ + |e_R e_R e_R⟩)/√2
        let sign = if *class == OutcomeClass::GhzPlus { 1.0 } else { -1.0 };
        let amp = [sign * FRAC_1_SQRT_2, FRAC_1_SQRT_2];
        for x in 0..2 {
            for x2 in 0..2 {
                let blocks = [fixed[x][x2].clone(), fixed[x][x2].clone(), fixed[x][x2].clone()];
                overlap += amp[x] * amp[x2] * contract(&inputs, kernel, k, &blocks).re;
            }
        }
    }
    let fidelity = if probability > 0.0 { overlap / probability } else { 0.0 };
    Ok(HeraldedOutcome { probability, fidelity })
}

/// Fidelity estimates from single atom-cavity master-equation runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MasterEquationFidelity {
    pub kappa: f64,
    pub gamma_a: f64,
    pub time: f64,
    /// Transfer fidelity of one subsystem.
    pub single: f64,
    /// Estimator (a): cube of the single-subsystem fidelity.
    pub estimator_a: f64,
    /// Estimator (b): heralded GHZ fidelity of three subsystems through the
    /// network and detectors.
    pub estimator_b: f64,
    /// Heralding probability accompanying estimator (b).
    pub herald_probability: f64,
    pub trace_error: f64,
}

pub fn master_equation_fidelity(params: &SystemParams, t: f64) -> Result<MasterEquationFidelity> {
    let kernels = HeraldKernels::new(&NetworkLayout::canonical(), params.fock_dim(), params.eta_d)?;
    master_equation_fidelity_with(params, t, &kernels)
}

pub fn master_equation_fidelity_with(params: &SystemParams, t: f64, kernels: &HeraldKernels) -> Result<MasterEquationFidelity> {
    let channel = SubsystemChannel::for_params(params, t)?;
    let single = channel.transfer_fidelity();
    let herald = heralded_outcome(&channel, kernels)?;
    Ok(MasterEquationFidelity {
        kappa: params.kappa,
        gamma_a: params.gamma_a,
        time: t,
        single,
        estimator_a: single.powi(3),
        estimator_b: herald.fidelity,
        herald_probability: herald.probability,
        trace_error: channel.trace_error(),
    })
}

/// Axes of the fidelity surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisConvention {
    /// Independent κ/γ and γ_a/γ axes.
    A,
    /// A single λ_c/γ_a axis with κ tied to γ_a.
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceSpec {
    pub axis: AxisConvention,
    /// κ/γ values (convention a).
    pub kappa: Grid,
    /// γ_a/γ values (convention a).
    pub gamma_a: Grid,
    /// λ_c/γ_a values (convention b).
    pub lambda_over_gamma_a: Grid,
    pub kappa_convention: KappaConvention,
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        Self {
            axis: AxisConvention::A,
            kappa: Grid { min: 0.0, max: 0.06, steps: 4 },
            gamma_a: Grid { min: 0.0, max: 0.06, steps: 4 },
            lambda_over_gamma_a: Grid { min: 50.0, max: 250.0, steps: 5 },
            kappa_convention: KappaConvention::EqualGammaA,
        }
    }
}

impl SurfaceSpec {
    pub fn with_steps(mut self, steps: usize) -> Self {
        self.kappa.steps = steps;
        self.gamma_a.steps = steps;
        self.lambda_over_gamma_a.steps = steps;
        self
    }

    /// Grid points in output order.
    pub fn points(&self) -> Result<Vec<SurfacePoint>> {
        match self.axis {
            AxisConvention::A => {
                self.kappa.validate()?;
                self.gamma_a.validate()?;
                let mut out = Vec::new();
                for k in self.kappa.points() {
                    for g in self.gamma_a.points() {
                        out.push(SurfacePoint { lambda_over_gamma_a: None, kappa: k, gamma_a: g });
                    }
                }
                Ok(out)
            }
            AxisConvention::B => {
                self.lambda_over_gamma_a.validate()?;
                if self.lambda_over_gamma_a.min <= 0.0 {
                    return Err(Error::InvalidParams("lambda_c/gamma_a must be positive".into()));
                }
                Ok(self
                    .lambda_over_gamma_a
                    .points()
                    .into_iter()
                    .map(|r| {
                        let p = figure_params_for_ratio(r, self.kappa_convention);
                        SurfacePoint { lambda_over_gamma_a: Some(r), kappa: p.kappa, gamma_a: p.gamma_a }
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub lambda_over_gamma_a: Option<f64>,
    pub kappa: f64,
    pub gamma_a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceRow {
    pub point: SurfacePoint,
    pub fidelity: MasterEquationFidelity,
}

/// Fidelity estimates over the grid at the operating time, rows in grid order.
pub fn fidelity_surface(spec: &SurfaceSpec) -> Result<Vec<SurfaceRow>> {
    let points = spec.points()?;
    for p in &points {
        if !(p.kappa >= 0.0 && p.gamma_a >= 0.0) {
            return Err(Error::InvalidParams(format!("negative rate at grid point {p:?}")));
        }
    }
    let base = figure_params(0.0, 0.0);
    let kernels = HeraldKernels::new(&NetworkLayout::canonical(), base.fock_dim(), base.eta_d)?;
    points
        .par_iter()
        .map(|p| {
            let params = figure_params(p.kappa, p.gamma_a);
            let fidelity = master_equation_fidelity_with(&params, params.operating_time(), &kernels)?;
            Ok(SurfaceRow { point: *p, fidelity })
        })
        .collect()
}

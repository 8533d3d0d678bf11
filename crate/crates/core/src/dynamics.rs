//! Time evolution: closed-form Raman coefficients, fixed-step RK4 integrators
//! for the Schrödinger and Lindblad equations, and the full-vs-effective
//! comparison that checks adiabatic elimination.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{c, trace_distance, CMatrix, DensityMatrix, Operator, StateVector, C64};
use crate::model::{
    self, effective_hamiltonian, effective_space, full_hamiltonian, full_space, AtomLevel,
    CollapseChannel, SystemParams,
};

/// Amplitudes of `|φ(t)⟩ = α|g_j,0⟩ + β|e_j,1_j⟩` for an atom starting in `|g_j⟩`
/// with an empty cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionCoefficients {
    pub alpha: C64,
    pub beta: C64,
}

impl EvolutionCoefficients {
    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }
}

/// Closed form obtained by diagonalizing the `{|g_j,0⟩, |e_j,1_j⟩}` block of
/// the effective Hamiltonian. With θ = (λ_c²+Ω²)t/Δ:
/// α = (λ_c² + Ω²e^{iθ})/(λ_c²+Ω²), β = λ_cΩ(e^{iθ} − 1)/(λ_c²+Ω²).
pub fn ideal_coefficients(params: &SystemParams, t: f64) -> EvolutionCoefficients {
    let l2 = params.lambda_c.powi(2);
    let o2 = params.omega.powi(2);
    let s = l2 + o2;
    if s == 0.0 {
        return EvolutionCoefficients { alpha: c(1.0, 0.0), beta: c(0.0, 0.0) };
    }
    let phase = C64::from_polar(1.0, s * t / params.delta);
    EvolutionCoefficients {
        alpha: (c(l2, 0.0) + phase * o2) / s,
        beta: (phase - 1.0) * (params.lambda_c * params.omega / s),
    }
}

/// A variant closed form whose β numerator carries `Ω²cos θ` where the
/// block diagonalization gives `λ_cΩ cos θ`. Agrees with
/// [`ideal_coefficients`] whenever λ_c = Ω; kept for comparison only.
pub fn ideal_coefficients_variant(params: &SystemParams, t: f64) -> EvolutionCoefficients {
    let l = params.lambda_c;
    let o = params.omega;
    let s = l * l + o * o;
    let theta = s * t / params.delta;
    EvolutionCoefficients {
        alpha: c(l * l + o * o * theta.cos(), o * o * theta.sin()) / s,
        beta: c(-l * o + o * o * theta.cos(), l * o * theta.sin()) / s,
    }
}

const DEGENERATE_PHI_T: f64 = 1e-6;

/// Coefficients under the no-jump generator H_eff − iκΣa†a, valid for λ_c = Ω:
/// α′ = [φ cosh(φt/2) + κ sinh(φt/2)] e^{φ̃t}/φ,
/// β′ = iη(e^{φt} − 1)e^{t(φ̃−φ/2)}/φ = 2iη sinh(φt/2) e^{φ̃t}/φ.
///
/// Near κ = 2η (φ → 0) a series in φt replaces the division.
pub fn decay_coefficients(params: &SystemParams, t: f64) -> Result<EvolutionCoefficients> {
    let scale = params.lambda_c.abs().max(params.omega.abs());
    if (params.lambda_c - params.omega).abs() > 1e-12 * scale {
        return Err(Error::InvalidParams(format!(
            "closed-form decay coefficients need lambda_c = omega, got {} and {}",
            params.lambda_c, params.omega
        )));
    }
    let d = params.derived();
    let kappa = params.kappa;
    let envelope = (d.varphi * t).exp();
    let x = d.phi * (t / 2.0);
    let (alpha, beta) = if (d.phi * t).norm() < DEGENERATE_PHI_T {
        let x2 = x * x;
        let cosh = 1.0 + x2 / 2.0 + x2 * x2 / 24.0;
        let sinhc = 1.0 + x2 / 6.0 + x2 * x2 / 120.0;
        (
            (cosh + sinhc * (kappa * t / 2.0)) * envelope,
            c(0.0, d.eta * t) * sinhc * envelope,
        )
    } else {
        (
            (d.phi * x.cosh() + x.sinh() * kappa) * envelope / d.phi,
            c(0.0, 2.0 * d.eta) * x.sinh() * envelope / d.phi,
        )
    };
    Ok(EvolutionCoefficients { alpha, beta })
}

/// Fixed-step fourth-order Runge-Kutta settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Upper bound on the step size; the horizon is split into equal steps
    /// no longer than this.
    pub dt: f64,
}

impl IntegratorConfig {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Integrator(format!("step size must be positive, got {dt}")));
        }
        Ok(Self { dt })
    }

    /// Step of `1e-3 / max_rate`.
    pub fn for_rate(max_rate: f64) -> Self {
        Self { dt: 1e-3 / max_rate.max(1e-12) }
    }

    pub fn steps(&self, t: f64) -> usize {
        ((t.abs() / self.dt).ceil() as usize).max(1)
    }

    /// `dt · max_rate ≤ 0.05`.
    pub fn is_well_resolved(&self, max_rate: f64) -> bool {
        self.dt * max_rate <= 0.05
    }
}

/// Largest absolute row sum, an upper bound on the spectral radius.
pub fn generator_rate(m: &CMatrix) -> f64 {
    (0..m.nrows())
        .map(|r| m.row(r).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Integrates `dψ/dt = −iHψ`. `h` may be non-Hermitian.
pub fn schrodinger_evolve(
    h: &Operator,
    psi0: &StateVector,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<StateVector> {
    if h.space() != psi0.space() {
        return Err(Error::SpaceMismatch {
            expected: h.space().to_string(),
            found: psi0.space().to_string(),
        });
    }
    let gen = h.elements() * c(0.0, -1.0);
    let n = cfg.steps(t);
    let dt = t / n as f64;
    let mut psi = psi0.amplitudes().clone();
    for _ in 0..n {
        let k1 = &gen * &psi;
        let k2 = &gen * (&psi + &k1 * c(dt / 2.0, 0.0));
        let k3 = &gen * (&psi + &k2 * c(dt / 2.0, 0.0));
        let k4 = &gen * (&psi + &k3 * c(dt, 0.0));
        psi += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
    }
    if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Integrator("state diverged".into()));
    }
    StateVector::new(psi0.space().clone(), psi)
}

/// Sparse matrix as `(row, col, value)` triplets.
type Triplets = Vec<(usize, usize, C64)>;

fn triplets(m: &CMatrix) -> Triplets {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if z.re != 0.0 || z.im != 0.0 {
                out.push((i, j, z));
            }
        }
    }
    out
}

/// Right-hand side of ρ̇ = −i[H,ρ] − Σ (r/2)(C†Cρ − 2CρC† + ρC†C), stored
/// as a non-Hermitian effective Hamiltonian plus scaled jump operators, both
/// sparse.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    h_eff: CMatrix,
    h_sparse: Triplets,
    jumps: Vec<Jump>,
}

/// Jump operator in whichever form is cheaper for `CρC†`.
#[derive(Debug, Clone)]
enum Jump {
    Sparse(Triplets),
    Dense(CMatrix, CMatrix),
}

impl Liouvillian {
    pub fn new(h: &Operator, collapse: &[CollapseChannel]) -> Result<Self> {
        let mut h_eff = h.elements().clone();
        let mut jumps = Vec::new();
        for ch in collapse {
            if ch.op.space() != h.space() {
                return Err(Error::SpaceMismatch {
                    expected: h.space().to_string(),
                    found: ch.op.space().to_string(),
                });
            }
            if ch.rate < 0.0 {
                return Err(Error::InvalidParams(format!("negative rate on channel {}", ch.name)));
            }
            if ch.rate == 0.0 {
                continue;
            }
            let l = ch.op.elements() * c(ch.rate.sqrt(), 0.0);
            h_eff -= l.adjoint() * &l * c(0.0, 0.5);
            let t = triplets(&l);
            let n = l.nrows();
            jumps.push(if t.len() * t.len() < 2 * n * n * n {
                Jump::Sparse(t)
            } else {
                Jump::Dense(l.adjoint(), l)
            });
        }
        Ok(Self { dim: h_eff.nrows(), h_sparse: triplets(&h_eff), h_eff, jumps })
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let n = self.dim;
        let mut out = CMatrix::zeros(n, n);
        let mi = c(0.0, -1.0);
        for &(i, j, h) in &self.h_sparse {
            // −i H ρ contributes to row i, +i ρ H† to column i
            let a = mi * h;
            let b = (mi * h).conj();
            for k in 0..n {
                out[(i, k)] += a * rho[(j, k)];
                out[(k, i)] += rho[(k, j)] * b;
            }
        }
        for jump in &self.jumps {
            match jump {
                Jump::Sparse(l) => {
                    for &(i, j, a) in l {
                        for &(k, m, b) in l {
                            out[(i, k)] += a * rho[(j, m)] * b.conj();
                        }
                    }
                }
                Jump::Dense(l_adj, l) => out += l * rho * l_adj,
            }
        }
        out
    }

    pub fn rate(&self) -> f64 {
        generator_rate(&self.h_eff)
    }

    /// RK4 from `rho0` to `t`, calling `observer(step_time, ρ)` after each step.
    /// Accepts any square matrix, so it also propagates operator inputs such
    /// as `|g_L⟩⟨g_R|`.
    pub fn evolve_with<F>(&self, rho0: &CMatrix, t: f64, cfg: &IntegratorConfig, mut observer: F) -> Result<CMatrix>
    where
        F: FnMut(f64, &CMatrix),
    {
        let n = cfg.steps(t);
        let dt = t / n as f64;
        let half = c(dt / 2.0, 0.0);
        let mut rho = rho0.clone();
        for step in 0..n {
            let k1 = self.apply(&rho);
            let k2 = self.apply(&(&rho + &k1 * half));
            let k3 = self.apply(&(&rho + &k2 * half));
            let k4 = self.apply(&(&rho + &k3 * c(dt, 0.0)));
            rho += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
            observer(dt * (step + 1) as f64, &rho);
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Integrator("density matrix diverged".into()));
        }
        Ok(rho)
    }
}

/// Integrates the Lindblad equation from a valid density matrix.
pub fn lindblad_evolve(
    h: &Operator,
    collapse: &[CollapseChannel],
    rho0: &DensityMatrix,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<DensityMatrix> {
    if h.space() != rho0.space() {
        return Err(Error::SpaceMismatch {
            expected: h.space().to_string(),
            found: rho0.space().to_string(),
        });
    }
    rho0.validate()?;
    let l = Liouvillian::new(h, collapse)?;
    let rho = l.evolve_with(rho0.elements(), t, cfg, |_, _| {})?;
    let out = DensityMatrix::unchecked(rho0.space().clone(), rho)?;
    out.validate().map_err(|e| Error::Integrator(format!("invariant lost: {e}")))?;
    Ok(out)
}

/// Per-time deviation between full and eliminated dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub times: Vec<f64>,
    pub deviations: Vec<f64>,
    /// Population that leaked into the `f` levels at each time.
    pub excited_population: Vec<f64>,
}

impl DeviationReport {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().copied().fold(0.0, f64::max)
    }
}

/// Evolves `|g_L,0,0⟩` under the full and the effective Hamiltonians and
/// reports, per time, the trace distance between the full state projected
/// onto the ground levels and the effective state. The measure ignores the
/// global phase.
pub fn compare_full_vs_effective(params: &SystemParams, t_grid: &[f64]) -> Result<DeviationReport> {
    let full_h = full_hamiltonian(params);
    let eff_h = effective_hamiltonian(params);
    let g = AtomLevel::GL.index();
    let psi_full = StateVector::basis(full_space(params), &[g, 0, 0])?;
    let psi_eff = StateVector::basis(effective_space(params), &[g, 0, 0])?;

    let rows: Vec<(f64, f64)> = t_grid
        .par_iter()
        .map(|&t| {
            let full_t = full_h.propagator(t)?.apply(&psi_full)?;
            let eff_t = eff_h.propagator(t)?.apply(&psi_eff)?;
            let projected = model::project_to_effective(params, &full_t)?;
            let excited = 1.0 - projected.norm().powi(2);
            let d = trace_distance(projected.density().elements(), eff_t.density().elements());
            Ok((d, excited))
        })
        .collect::<Result<_>>()?;
    Ok(DeviationReport {
        times: t_grid.to_vec(),
        deviations: rows.iter().map(|r| r.0).collect(),
        excited_population: rows.iter().map(|r| r.1).collect(),
    })
}

/// Evenly spaced points over `[0, t_max]`, endpoints included.
pub fn time_grid(t_max: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
}

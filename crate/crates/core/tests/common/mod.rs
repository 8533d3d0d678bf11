#![allow(dead_code)]

pub mod photonic;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use wghz::dynamics::{generator_rate, IntegratorConfig, Liouvillian};
use wghz::hilbert::{CMatrix, DensityMatrix, HilbertSpace, Operator};
use wghz::model::CollapseChannel;

/// A random open system: Hermitian H, one to three collapse channels and a
/// random full-rank initial state.
pub struct RandomSystem {
    pub h: Operator,
    pub collapse: Vec<CollapseChannel>,
    pub rho0: DensityMatrix,
    pub horizon: f64,
}

fn random_matrix(rng: &mut StdRng, n: usize) -> CMatrix {
    DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_system(seed: u64, max_dim: usize, zero_rates: bool) -> RandomSystem {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_dim);
    let space = HilbertSpace::single("s", n).unwrap();
    let b = random_matrix(&mut rng, n);
    let h = (&b + b.adjoint()) * Complex64::new(0.5 / (n as f64).sqrt(), 0.0);
    let channels = rng.gen_range(1..=3);
    let collapse = (0..channels)
        .map(|k| {
            let m = random_matrix(&mut rng, n) * Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
            CollapseChannel {
                name: format!("c{k}"),
                rate: if zero_rates { 0.0 } else { rng.gen_range(0.0..0.5) },
                op: Operator::new(space.clone(), m).unwrap(),
            }
        })
        .collect();
    let a = random_matrix(&mut rng, n);
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    let rho0 = DensityMatrix::new(space.clone(), rho / tr).unwrap();
    RandomSystem { h: Operator::new(space, h).unwrap(), collapse, rho0, horizon: rng.gen_range(0.5..2.0) }
}

/// Worst trace drift, Hermiticity error and lowest eigenvalue seen at the
/// sampled steps of a Lindblad run, or at every step with `every_step`.
#[derive(Debug, Default, Clone, Copy)]
pub struct Drift {
    pub trace: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

pub fn lindblad_drift(sys: &RandomSystem, every_step: bool) -> (CMatrix, Drift) {
    let l = Liouvillian::new(&sys.h, &sys.collapse).unwrap();
    let cfg = IntegratorConfig::new(0.005 / l.rate().max(generator_rate(sys.h.elements()))).unwrap();
    let steps = cfg.steps(sys.horizon);
    let stride = if every_step { 1 } else { (steps / 20).max(1) };
    let mut drift = Drift { min_eigenvalue: f64::INFINITY, ..Drift::default() };
    let mut step = 0;
    let space = sys.rho0.space().clone();
    let out = l
        .evolve_with(sys.rho0.elements(), sys.horizon, &cfg, |_, rho| {
            step += 1;
            if step % stride != 0 && step != steps {
                return;
            }
            let d = DensityMatrix::unchecked(space.clone(), rho.clone()).unwrap();
            drift.trace = drift.trace.max((d.trace() - Complex64::new(1.0, 0.0)).norm());
            drift.hermiticity = drift.hermiticity.max(d.hermiticity_error());
            drift.min_eigenvalue = drift.min_eigenvalue.min(d.min_eigenvalue());
        })
        .unwrap();
    (out, drift)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

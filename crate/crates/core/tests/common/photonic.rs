//! Independent first-quantized model of the post-network state: each expected
//! term is a product of three single-photon wavefunctions and its Fock
//! amplitudes come from permanents.

use std::collections::BTreeMap;

use num_complex::Complex64;
use wghz::model::{AtomLevel, Branch};
use wghz::network::{AtomCavityState, AtomConfig, CavityOccupation, JointAtomPhotonState, Polarization, PolarizedPhotonMode};

pub const S2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Output slots 7H, 7V, 8H, 8V, 9H, 9V.
pub fn slot(mode: u8, pol: Polarization) -> usize {
    (mode as usize - 7) * 2 + if pol == Polarization::H { 0 } else { 1 }
}

pub fn slot_mode(s: usize) -> PolarizedPhotonMode {
    PolarizedPhotonMode::new(7 + (s / 2) as u8, if s % 2 == 0 { Polarization::H } else { Polarization::V })
}

pub fn permanent3(m: [[Complex64; 3]; 3]) -> Complex64 {
    let p = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    p.iter().map(|s| m[0][s[0]] * m[1][s[1]] * m[2][s[2]]).sum()
}

/// Fock amplitudes of `Π_j a†(u_j)|0⟩` for three single-photon wavefunctions,
/// via `⟨n|…⟩ = perm(U_n)/√(Π n_s!)`.
pub fn three_photon_fock(u: [[Complex64; 6]; 3]) -> BTreeMap<[u32; 6], Complex64> {
    let mut out = BTreeMap::new();
    for a in 0..6 {
        for b in a..6 {
            for c in b..6 {
                let rows = [a, b, c];
                let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
                for (r, s) in rows.iter().enumerate() {
                    for j in 0..3 {
                        m[r][j] = u[j][*s];
                    }
                }
                let mut n = [0u32; 6];
                for s in rows {
                    n[s] += 1;
                }
                let fact: f64 = n.iter().map(|&k| (1..=k).product::<u32>() as f64).product();
                let amp = permanent3(m) / fact.sqrt();
                if amp.norm() > 1e-15 {
                    out.insert(n, amp);
                }
            }
        }
    }
    out
}

pub type Expansion = BTreeMap<(AtomConfig, [u32; 6]), Complex64>;

/// The expected expansion: coefficient/(2√6), atomic branches, and
/// `(mode, ±)` for each `|ψ_m^±⟩` factor.
pub fn expected_terms() -> Vec<(f64, [Branch; 3], [(u8, f64); 3])> {
    use Branch::{L, R};
    vec![
        (-3.0, [L, L, L], [(7, -1.0), (8, -1.0), (9, -1.0)]),
        (3.0, [R, R, R], [(7, 1.0), (8, 1.0), (9, 1.0)]),
        (-1.0, [L, L, R], [(7, -1.0), (8, -1.0), (8, 1.0)]),
        (-1.0, [L, R, L], [(7, -1.0), (7, 1.0), (9, -1.0)]),
        (1.0, [L, R, R], [(7, -1.0), (7, 1.0), (8, 1.0)]),
        (-1.0, [R, L, L], [(8, -1.0), (9, -1.0), (9, 1.0)]),
        (1.0, [R, L, R], [(8, -1.0), (8, 1.0), (9, 1.0)]),
        (1.0, [R, R, L], [(7, 1.0), (9, -1.0), (9, 1.0)]),
    ]
}

/// Fock amplitudes of `ψ_{m1}^± ψ_{m2}^± ψ_{m3}^± |0⟩` with `ψ^± = (H ± V)/√2`.
pub fn factor_state(factors: &[(u8, f64); 3]) -> BTreeMap<[u32; 6], Complex64> {
    let mut u = [[Complex64::new(0.0, 0.0); 6]; 3];
    for (j, (mode, sign)) in factors.iter().enumerate() {
        u[j][slot(*mode, Polarization::H)] = Complex64::new(S2, 0.0);
        u[j][slot(*mode, Polarization::V)] = Complex64::new(sign * S2, 0.0);
    }
    three_photon_fock(u)
}

pub fn expected_expansion() -> Expansion {
    let norm = 1.0 / (2.0 * 6f64.sqrt());
    let mut out = Expansion::new();
    for (coef, branches, factors) in expected_terms() {
        let atoms = branches.map(AtomLevel::e);
        for (n, a) in factor_state(&factors) {
            *out.entry((atoms, n)).or_insert(Complex64::new(0.0, 0.0)) += a * coef * norm;
        }
    }
    out
}

/// For each expected term, `(expected coefficient, ⟨term|state⟩/⟨term|term⟩)`
/// where the term is the unnormalized product of creation operators.
pub fn term_coefficients(state: &Expansion) -> Vec<(f64, Complex64)> {
    let unit = 1.0 / (2.0 * 6f64.sqrt());
    expected_terms()
        .into_iter()
        .map(|(coef, branches, factors)| {
            let atoms = branches.map(AtomLevel::e);
            let basis = factor_state(&factors);
            let norm: f64 = basis.values().map(|a| a.norm_sqr()).sum();
            let overlap: Complex64 =
                basis.iter().map(|(n, b)| b.conj() * state.get(&(atoms, *n)).copied().unwrap_or_default()).sum();
            (coef * unit, overlap / norm)
        })
        .collect()
}

pub fn to_expansion(state: &JointAtomPhotonState) -> Expansion {
    state
        .terms()
        .map(|(atoms, occ, amp)| {
            let mut n = [0u32; 6];
            for (s, slot_n) in n.iter_mut().enumerate() {
                *slot_n = occ.count(slot_mode(s));
            }
            assert_eq!(n.iter().sum::<u32>(), occ.total(), "photon outside the output modes");
            ((*atoms, n), amp)
        })
        .collect()
}

/// Pulsed W-state coefficients computed by hand: each W branch contributes
/// `Π_j h(b_j, w_j)/√3` with `h(R,R) = −1/√2` and `1/√2` otherwise.
pub fn pulsed_w_coefficient(b: [Branch; 3]) -> f64 {
    use Branch::{L, R};
    let h = |x: Branch, w: Branch| if x == R && w == R { -S2 } else { S2 };
    [[L, L, R], [L, R, L], [R, L, L]]
        .iter()
        .map(|w| (0..3).map(|j| h(b[j], w[j])).product::<f64>())
        .sum::<f64>()
        / 3f64.sqrt()
}

/// Every atom transferred with amplitude −1 and one photon in its cavity.
pub fn operating_point_state() -> AtomCavityState {
    let mut terms = Vec::new();
    for bits in 0..8 {
        let b = [bits >> 2, (bits >> 1) & 1, bits & 1].map(|i| Branch::BOTH[i]);
        let amp = -pulsed_w_coefficient(b);
        terms.push((b.map(AtomLevel::e), b.map(CavityOccupation::one), Complex64::new(amp, 0.0)));
    }
    AtomCavityState::from_terms(terms)
}

pub fn distance_up_to_phase(a: &Expansion, b: &Expansion) -> f64 {
    let zero = Complex64::new(0.0, 0.0);
    let ip: Complex64 = a.iter().map(|(k, x)| b.get(k).map_or(zero, |y| y.conj() * x)).sum();
    let phase = if ip.norm() > 0.0 { ip / ip.norm() } else { Complex64::new(1.0, 0.0) };
    let mut keys: Vec<_> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.iter()
        .map(|k| (a.get(k).copied().unwrap_or(zero) - phase * b.get(k).copied().unwrap_or(zero)).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

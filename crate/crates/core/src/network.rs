//! Emitted photons and the linear-optics network in front of the detectors.
//!
//! Photonic states are stored in the occupation-number basis with normalized
//! Fock amplitudes. Element transformations act on single photons; a term with
//! occupations `n_s` is expanded as `Π_s (a_s†)^{n_s} / √(n_s!)` so that
//! bunched photons pick up the right `√n!` factors.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{c, C64};
use crate::model::{AtomLevel, Branch};

/// Amplitudes below this are dropped after a transformation.
const PRUNE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];

    /// Quarter-wave plate: left circular → V, right circular → H.
    pub fn from_branch(branch: Branch) -> Self {
        match branch {
            Branch::L => Polarization::V,
            Branch::R => Polarization::H,
        }
    }
}

/// The three trapped atoms, each in its own cavity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Atom {
    A,
    B,
    C,
}

impl Atom {
    pub const ALL: [Atom; 3] = [Atom::A, Atom::B, Atom::C];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Spatial mode (1, 2, 3) that leaves this atom's cavity.
    pub fn source_mode(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_source_mode(mode: u8) -> Option<Self> {
        Self::ALL.get((mode as usize).checked_sub(1)?).copied()
    }
}

pub const SOURCE_MODES: [u8; 3] = [1, 2, 3];
pub const OUTPUT_MODES: [u8; 3] = [7, 8, 9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PolarizedPhotonMode {
    pub spatial: u8,
    pub polarization: Polarization,
}

impl PolarizedPhotonMode {
    pub fn new(spatial: u8, polarization: Polarization) -> Self {
        Self { spatial, polarization }
    }
}

impl fmt::Display for PolarizedPhotonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.spatial, self.polarization)
    }
}

/// Photon counts per polarized mode; empty modes are not stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(BTreeMap<PolarizedPhotonMode, u32>);

impl Occupation {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn from_modes<I: IntoIterator<Item = PolarizedPhotonMode>>(modes: I) -> Self {
        let mut occ = Self::vacuum();
        for m in modes {
            occ.add(m, 1);
        }
        occ
    }

    pub fn add(&mut self, mode: PolarizedPhotonMode, n: u32) {
        if n > 0 {
            *self.0.entry(mode).or_insert(0) += n;
        }
    }

    pub fn count(&self, mode: PolarizedPhotonMode) -> u32 {
        self.0.get(&mode).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PolarizedPhotonMode, u32)> + '_ {
        self.0.iter().map(|(m, n)| (*m, *n))
    }

    /// Distinct spatial modes carrying at least one photon.
    pub fn spatial_modes(&self) -> Vec<u8> {
        let mut v: Vec<u8> = self.0.keys().map(|m| m.spatial).collect();
        v.dedup();
        v
    }

    /// `√(Π_s n_s!)`, the norm of `Π_s (a_s†)^{n_s}|0⟩`.
    fn factorial_norm(&self) -> f64 {
        self.0
            .values()
            .map(|&n| (1..=n).map(f64::from).product::<f64>())
            .product::<f64>()
            .sqrt()
    }

    fn photons(&self) -> Vec<PolarizedPhotonMode> {
        self.0.iter().flat_map(|(m, n)| std::iter::repeat(*m).take(*n as usize)).collect()
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "vac");
        }
        let parts: Vec<String> = self.0.iter().map(|(m, n)| format!("{m}^{n}")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Superposition of `|register⟩ ⊗ |photon occupation⟩` terms.
///
/// The register is whatever the photons stay entangled with: the atomic
/// configuration in the protocol, or a cavity configuration when building
/// measurement kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState<K: Ord> {
    terms: BTreeMap<(K, Occupation), C64>,
}

/// Atomic configuration of atoms a, b, c.
pub type AtomConfig = [AtomLevel; 3];

pub type JointAtomPhotonState = JointState<AtomConfig>;

impl<K: Ord + Clone> JointState<K> {
    pub fn empty() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn from_terms<I: IntoIterator<Item = (K, Occupation, C64)>>(terms: I) -> Self {
        let mut s = Self::empty();
        for (k, occ, amp) in terms {
            s.add(k, occ, amp);
        }
        s.prune();
        s
    }

    fn add(&mut self, key: K, occ: Occupation, amp: C64) {
        *self.terms.entry((key, occ)).or_insert(c(0.0, 0.0)) += amp;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() > PRUNE);
    }

    pub fn terms(&self) -> impl Iterator<Item = (&K, &Occupation, C64)> {
        self.terms.iter().map(|((k, o), a)| (k, o, *a))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, key: &K, occ: &Occupation) -> C64 {
        self.terms.get(&(key.clone(), occ.clone())).copied().unwrap_or(c(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    /// Photon numbers appearing across terms.
    pub fn photon_numbers(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.terms.keys().map(|(_, o)| o.total()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.terms
            .iter()
            .filter_map(|(k, a)| other.terms.get(k).map(|b| a.conj() * b))
            .sum()
    }

    /// `min_θ ‖self − e^{iθ} other‖`, summed term by term to avoid the
    /// cancellation in `‖a‖² + ‖b‖² − 2|⟨a|b⟩|`.
    pub fn distance_up_to_phase(&self, other: &Self) -> f64 {
        let phase = self.relative_phase(other);
        let zero = c(0.0, 0.0);
        let mut d2 = 0.0;
        for (k, a) in &self.terms {
            let b = other.terms.get(k).copied().unwrap_or(zero);
            d2 += (a - phase * b).norm_sqr();
        }
        for (k, b) in &other.terms {
            if !self.terms.contains_key(k) {
                d2 += b.norm_sqr();
            }
        }
        d2.sqrt()
    }

    /// Global phase `e^{iθ}` with `self ≈ e^{iθ} other`.
    pub fn relative_phase(&self, other: &Self) -> C64 {
        let ip = other.inner(self);
        if ip.norm() == 0.0 {
            c(1.0, 0.0)
        } else {
            ip / ip.norm()
        }
    }

    /// Per-register photonic sub-states.
    pub fn by_register(&self) -> BTreeMap<K, Vec<(Occupation, C64)>> {
        let mut out: BTreeMap<K, Vec<(Occupation, C64)>> = BTreeMap::new();
        for ((k, o), a) in &self.terms {
            out.entry(k.clone()).or_default().push((o.clone(), *a));
        }
        out
    }

    /// Applies a linear single-photon map to every photon, expanding
    /// multi-photon terms multiplicatively with bosonic normalization.
    pub fn map_photons<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(PolarizedPhotonMode) -> Result<Vec<(PolarizedPhotonMode, C64)>>,
    {
        let mut out = Self::empty();
        for ((key, occ), amp) in &self.terms {
            let mut monomials: BTreeMap<Occupation, C64> = BTreeMap::new();
            monomials.insert(Occupation::vacuum(), *amp / occ.factorial_norm());
            for photon in occ.photons() {
                let images = f(photon)?;
                let mut next = BTreeMap::new();
                for (m, coeff) in &monomials {
                    for (target, u) in &images {
                        let mut m2 = m.clone();
                        m2.add(*target, 1);
                        *next.entry(m2).or_insert(c(0.0, 0.0)) += coeff * u;
                    }
                }
                monomials = next;
            }
            for (m, coeff) in monomials {
                let norm = m.factorial_norm();
                out.add(key.clone(), m, coeff * norm);
            }
        }
        out.prune();
        Ok(out)
    }

    /// Builds `coeff · Π_i (Σ_s u_{is} a_s†)|0⟩` for the given single-photon
    /// superpositions.
    pub fn creation_product(key: K, coeff: C64, factors: &[Vec<(PolarizedPhotonMode, C64)>]) -> Self {
        let mut monomials: BTreeMap<Occupation, C64> = BTreeMap::new();
        monomials.insert(Occupation::vacuum(), coeff);
        for factor in factors {
            let mut next = BTreeMap::new();
            for (m, a) in &monomials {
                for (slot, u) in factor {
                    let mut m2 = m.clone();
                    m2.add(*slot, 1);
                    *next.entry(m2).or_insert(c(0.0, 0.0)) += a * u;
                }
            }
            monomials = next;
        }
        Self::from_terms(monomials.into_iter().map(|(m, a)| {
            let norm = m.factorial_norm();
            (key.clone(), m, a * norm)
        }))
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((k, o), a) in &other.terms {
            out.add(k.clone(), o.clone(), *a);
        }
        out.prune();
        out
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        for a in out.terms.values_mut() {
            *a *= factor;
        }
        out
    }
}

/// Photon content of one two-polarization cavity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CavityOccupation {
    pub l: u32,
    pub r: u32,
}

impl CavityOccupation {
    pub const VACUUM: Self = Self { l: 0, r: 0 };

    pub fn one(branch: Branch) -> Self {
        match branch {
            Branch::L => Self { l: 1, r: 0 },
            Branch::R => Self { l: 0, r: 1 },
        }
    }

    pub fn total(&self) -> u32 {
        self.l + self.r
    }
}

pub type CavityConfig = [CavityOccupation; 3];

/// Atoms ⊗ cavities after the Raman interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomCavityState {
    terms: BTreeMap<(AtomConfig, CavityConfig), C64>,
}

impl AtomCavityState {
    pub fn from_terms<I: IntoIterator<Item = (AtomConfig, CavityConfig, C64)>>(terms: I) -> Self {
        let mut map = BTreeMap::new();
        for (a, cav, amp) in terms {
            *map.entry((a, cav)).or_insert(c(0.0, 0.0)) += amp;
        }
        map.retain(|_, a: &mut C64| a.norm() > PRUNE);
        Self { terms: map }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&AtomConfig, &CavityConfig, C64)> {
        self.terms.iter().map(|((a, cav), amp)| (a, cav, *amp))
    }

    pub fn amplitude(&self, atoms: &AtomConfig, cavities: &CavityConfig) -> C64 {
        self.terms.get(&(*atoms, *cavities)).copied().unwrap_or(c(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Photons that leave the three cavities, after the quarter-wave plates,
/// on source modes 1, 2, 3.
pub fn emitted_photons(cavities: &CavityConfig) -> Occupation {
    let mut occ = Occupation::vacuum();
    for atom in Atom::ALL {
        let cav = cavities[atom.index()];
        let mode = atom.source_mode();
        occ.add(PolarizedPhotonMode::new(mode, Polarization::from_branch(Branch::L)), cav.l);
        occ.add(PolarizedPhotonMode::new(mode, Polarization::from_branch(Branch::R)), cav.r);
    }
    occ
}

/// Releases the cavity photons through the quarter-wave plates. Every term
/// must carry exactly one photon per cavity, which holds at the operating
/// time of the ideal dynamics.
pub fn emit_and_qwp(state: &AtomCavityState) -> Result<JointAtomPhotonState> {
    for (_, cav, _) in state.terms() {
        if let Some(i) = cav.iter().position(|c| c.total() != 1) {
            return Err(Error::OperatingPoint(format!(
                "cavity {} holds {} photons; expected exactly one",
                ["A", "B", "C"][i],
                cav[i].total()
            )));
        }
    }
    Ok(emit_and_qwp_lossy(state))
}

/// As [`emit_and_qwp`] but accepts cavities that hold no photon or two
/// photons, which arise away from the operating point or under decay.
pub fn emit_and_qwp_lossy(state: &AtomCavityState) -> JointAtomPhotonState {
    JointState::from_terms(state.terms().map(|(a, cav, amp)| (*a, emitted_photons(cav), amp)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub source: Atom,
    pub polarization: Polarization,
    pub output: u8,
}

/// Deterministic PBS routing from (source cavity, polarization) to an
/// output spatial mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkLayout {
    pub routes: Vec<Route>,
}

impl NetworkLayout {
    /// V photons stay on their own output (a→7, b→8, c→9); H photons join
    /// the preceding cavity's output (a→9, b→7, c→8).
    pub fn canonical() -> Self {
        Self::from_outputs([7, 8, 9], [9, 7, 8])
    }

    /// Layout from per-atom outputs of V and H photons.
    pub fn from_outputs(v_outputs: [u8; 3], h_outputs: [u8; 3]) -> Self {
        let mut routes = Vec::with_capacity(6);
        for atom in Atom::ALL {
            routes.push(Route { source: atom, polarization: Polarization::V, output: v_outputs[atom.index()] });
            routes.push(Route { source: atom, polarization: Polarization::H, output: h_outputs[atom.index()] });
        }
        Self { routes }
    }

    pub fn route(&self, source: Atom, polarization: Polarization) -> Option<u8> {
        self.routes
            .iter()
            .find(|r| r.source == source && r.polarization == polarization)
            .map(|r| r.output)
    }

    /// Each (atom, polarization) routed exactly once, each output mode fed
    /// by exactly one V route and one H route.
    pub fn validate(&self) -> Result<()> {
        for atom in Atom::ALL {
            for pol in Polarization::BOTH {
                let n = self.routes.iter().filter(|r| r.source == atom && r.polarization == pol).count();
                if n != 1 {
                    return Err(Error::InvalidLayout(format!("{atom:?}/{pol:?} routed {n} times")));
                }
            }
        }
        for out in OUTPUT_MODES {
            for pol in Polarization::BOTH {
                let n = self.routes.iter().filter(|r| r.output == out && r.polarization == pol).count();
                if n != 1 {
                    return Err(Error::InvalidLayout(format!("output {out} receives {n} {pol:?} routes")));
                }
            }
        }
        if let Some(r) = self.routes.iter().find(|r| !OUTPUT_MODES.contains(&r.output)) {
            return Err(Error::InvalidLayout(format!("route to undeclared output {}", r.output)));
        }
        Ok(())
    }

    /// Every layout satisfying [`NetworkLayout::validate`]: V and H outputs
    /// are each a permutation of the output modes.
    pub fn all_valid() -> Vec<Self> {
        let perms = permutations(OUTPUT_MODES);
        let mut out = Vec::with_capacity(perms.len() * perms.len());
        for v in &perms {
            for h in &perms {
                out.push(Self::from_outputs(*v, *h));
            }
        }
        out
    }
}

fn permutations(items: [u8; 3]) -> Vec<[u8; 3]> {
    let [x, y, z] = items;
    vec![[x, y, z], [x, z, y], [y, x, z], [y, z, x], [z, x, y], [z, y, x]]
}

/// Polarizing beam splitters: transmit H, reflect V, no reflection phase.
pub fn apply_pbs_routing<K: Ord + Clone>(state: &JointState<K>, layout: &NetworkLayout) -> Result<JointState<K>> {
    state.map_photons(|m| {
        let atom = Atom::from_source_mode(m.spatial).ok_or_else(|| Error::UnroutedPhoton(m.to_string()))?;
        let out = layout
            .route(atom, m.polarization)
            .ok_or_else(|| Error::UnroutedPhoton(m.to_string()))?;
        Ok(vec![(PolarizedPhotonMode::new(out, m.polarization), c(1.0, 0.0))])
    })
}

/// Half-wave plate single-photon map: H → (H+V)/√2, V → (H−V)/√2.
pub fn hwp_matrix() -> [[C64; 2]; 2] {
    let s = c(FRAC_1_SQRT_2, 0.0);
    // columns are the images of H and V in the (H, V) basis
    [[s, s], [s, -s]]
}

/// Half-wave plates on the listed spatial modes; other photons pass through.
pub fn apply_hwp<K: Ord + Clone>(state: &JointState<K>, modes: &[u8]) -> Result<JointState<K>> {
    let m = hwp_matrix();
    state.map_photons(|p| {
        if !modes.contains(&p.spatial) {
            return Ok(vec![(p, c(1.0, 0.0))]);
        }
        let col = match p.polarization {
            Polarization::H => 0,
            Polarization::V => 1,
        };
        Ok(vec![
            (PolarizedPhotonMode::new(p.spatial, Polarization::H), m[0][col]),
            (PolarizedPhotonMode::new(p.spatial, Polarization::V), m[1][col]),
        ])
    })
}

/// Routing followed by the half-wave plates on every output mode.
pub fn propagate<K: Ord + Clone>(photons: &JointState<K>, layout: &NetworkLayout) -> Result<JointState<K>> {
    layout.validate()?;
    let routed = apply_pbs_routing(photons, layout)?;
    apply_hwp(&routed, &OUTPUT_MODES)
}

/// Quarter-wave plates, beam splitters and half-wave plates in sequence.
pub fn full_network(state: &AtomCavityState, layout: &NetworkLayout) -> Result<JointAtomPhotonState> {
    propagate(&emit_and_qwp(state)?, layout)
}

/// One term of the expected post-network state: integer coefficient over
/// 2√6, atomic branches of a, b, c, and `(mode, sign)` for each
/// `|ψ_m^±⟩ = (|H_m⟩ ± |V_m⟩)/√2` factor.
pub struct ReferenceTerm {
    pub coefficient: i32,
    pub branches: [Branch; 3],
    pub factors: [(u8, i8); 3],
}

/// The post-network state of the W-state pipeline at the operating point,
/// written out term by term.
pub const REFERENCE_TERMS: [ReferenceTerm; 8] = {
    use Branch::{L, R};
    [
        ReferenceTerm { coefficient: -3, branches: [L, L, L], factors: [(7, -1), (8, -1), (9, -1)] },
        ReferenceTerm { coefficient: 3, branches: [R, R, R], factors: [(7, 1), (8, 1), (9, 1)] },
        ReferenceTerm { coefficient: -1, branches: [L, L, R], factors: [(7, -1), (8, -1), (8, 1)] },
        ReferenceTerm { coefficient: -1, branches: [L, R, L], factors: [(7, -1), (7, 1), (9, -1)] },
        ReferenceTerm { coefficient: 1, branches: [L, R, R], factors: [(7, -1), (7, 1), (8, 1)] },
        ReferenceTerm { coefficient: -1, branches: [R, L, L], factors: [(8, -1), (9, -1), (9, 1)] },
        ReferenceTerm { coefficient: 1, branches: [R, L, R], factors: [(8, -1), (8, 1), (9, 1)] },
        ReferenceTerm { coefficient: 1, branches: [R, R, L], factors: [(7, 1), (9, -1), (9, 1)] },
    ]
};

/// Expands [`REFERENCE_TERMS`] into the occupation basis.
pub fn reference_post_network_state() -> JointAtomPhotonState {
    let norm = 1.0 / (2.0 * 6f64.sqrt());
    let s = c(FRAC_1_SQRT_2, 0.0);
    let mut out = JointState::empty();
    for term in &REFERENCE_TERMS {
        let atoms = term.branches.map(AtomLevel::e);
        let factors: Vec<Vec<(PolarizedPhotonMode, C64)>> = term
            .factors
            .iter()
            .map(|&(mode, sign)| {
                vec![
                    (PolarizedPhotonMode::new(mode, Polarization::H), s),
                    (PolarizedPhotonMode::new(mode, Polarization::V), s * f64::from(sign)),
                ]
            })
            .collect();
        out = out.plus(&JointState::creation_product(atoms, c(norm * f64::from(term.coefficient), 0.0), &factors));
    }
    out
}

/// Distance (after the optimal global phase) between the network output for
/// `input` under `layout` and the reference post-network state.
pub fn reference_mismatch(input: &AtomCavityState, layout: &NetworkLayout) -> Result<f64> {
    let out = full_network(input, layout)?;
    Ok(out.distance_up_to_phase(&reference_post_network_state()))
}

/// Exhaustive search over all valid routing tables for those that map
/// `input` onto the reference post-network state within `tol`.
pub fn derive_layouts(input: &AtomCavityState, tol: f64) -> Result<Vec<NetworkLayout>> {
    let mut hits = Vec::new();
    for layout in NetworkLayout::all_valid() {
        if reference_mismatch(input, &layout)? <= tol {
            hits.push(layout);
        }
    }
    Ok(hits)
}

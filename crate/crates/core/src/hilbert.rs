//! Dense complex linear algebra over explicit tensor-product Hilbert spaces.
//!
//! Basis ordering is row-major over the subsystem list: the last subsystem
//! varies fastest. A space `a(2) ⊗ b(3)` therefore enumerates
//! `|0,0⟩, |0,1⟩, |0,2⟩, |1,0⟩, …`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Numeric tolerances shared by every validity check in the crate.
pub mod tol {
    /// Norm deviation allowed for a normalized state vector.
    pub const NORM: f64 = 1e-10;
    /// Entrywise `|ρ − ρ†|` allowed for a density matrix.
    pub const DENSITY_HERMITIAN: f64 = 1e-10;
    /// Trace deviation allowed for a normalized density matrix.
    pub const TRACE: f64 = 1e-8;
    /// Most negative eigenvalue tolerated in a density matrix.
    pub const MIN_EIGENVALUE: f64 = -1e-8;
    /// Entrywise `|A − A†|` below which an operator is flagged Hermitian.
    pub const OPERATOR_HERMITIAN: f64 = 1e-12;
}

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

/// An ordered list of labelled subsystems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    subsystems: Vec<Subsystem>,
}

impl HilbertSpace {
    pub fn new<I, S>(subsystems: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut out: Vec<Subsystem> = Vec::new();
        for (label, dim) in subsystems {
            let label = label.into();
            if dim == 0 {
                return Err(Error::ZeroDimension(label));
            }
            if out.iter().any(|s| s.label == label) {
                return Err(Error::DuplicateLabel(label));
            }
            out.push(Subsystem { label, dim });
        }
        Ok(Self { subsystems: out })
    }

    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::new([(label, dim)])
    }

    /// The zero-subsystem space of dimension one.
    pub fn scalar() -> Self {
        Self { subsystems: Vec::new() }
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.subsystems.iter().map(|s| s.label.as_str())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.subsystems.iter().position(|s| s.label == label)
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.position(label)
            .map(|p| self.subsystems[p].dim)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if let Some(s) = other.subsystems.iter().find(|s| self.position(&s.label).is_some()) {
            return Err(Error::LabelCollision(s.label.clone()));
        }
        let mut subsystems = self.subsystems.clone();
        subsystems.extend(other.subsystems.iter().cloned());
        Ok(Self { subsystems })
    }

    /// Flat basis index of the given per-subsystem digits.
    pub fn index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.subsystems.len() {
            return Err(Error::DimensionMismatch {
                expected: self.subsystems.len(),
                found: digits.len(),
            });
        }
        let mut idx = 0;
        for (d, s) in digits.iter().zip(&self.subsystems) {
            if *d >= s.dim {
                return Err(Error::DimensionMismatch { expected: s.dim, found: *d });
            }
            idx = idx * s.dim + d;
        }
        Ok(idx)
    }

    /// Per-subsystem digits of a flat basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.subsystems.len()];
        for (slot, s) in out.iter_mut().zip(&self.subsystems).rev() {
            *slot = index % s.dim;
            index /= s.dim;
        }
        out
    }

    fn ensure_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                expected: self.to_string(),
                found: other.to_string(),
            })
        }
    }

    /// Restriction of the space to the labels in `keep`, in original order.
    fn restrict(&self, keep: &[usize]) -> Self {
        Self {
            subsystems: keep.iter().map(|&p| self.subsystems[p].clone()).collect(),
        }
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.subsystems.is_empty() {
            return write!(f, "C");
        }
        let parts: Vec<String> =
            self.subsystems.iter().map(|s| format!("{}({})", s.label, s.dim)).collect();
        write!(f, "{}", parts.join("⊗"))
    }
}

/// A ket over a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: HilbertSpace,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(space: HilbertSpace, amplitudes: CVector) -> Result<Self> {
        let n = space.total_dim();
        if amplitudes.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: amplitudes.len() });
        }
        Ok(Self { space, amplitudes })
    }

    pub fn from_vec(space: HilbertSpace, amplitudes: Vec<C64>) -> Result<Self> {
        Self::new(space, CVector::from_vec(amplitudes))
    }

    pub fn zero(space: HilbertSpace) -> Self {
        let n = space.total_dim();
        Self { space, amplitudes: CVector::zeros(n) }
    }

    pub fn basis(space: HilbertSpace, digits: &[usize]) -> Result<Self> {
        let idx = space.index(digits)?;
        let mut s = Self::zero(space);
        s.amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, digits: &[usize]) -> Result<C64> {
        Ok(self.amplitudes[self.space.index(digits)?])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= tol::NORM
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidState("cannot normalize the zero vector".into()));
        }
        Ok(Self { space: self.space.clone(), amplitudes: self.amplitudes.unscale(n) })
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self { space: self.space.clone(), amplitudes: &self.amplitudes * factor }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.space.ensure_same(&other.space)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let space = self.space.tensor(&other.space)?;
        Ok(Self { space, amplitudes: self.amplitudes.kronecker(&other.amplitudes) })
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            space: self.space.clone(),
            elements: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// A density operator. Construction through [`DensityMatrix::new`] checks
/// Hermiticity, unit trace and positivity.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    elements: CMatrix,
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, elements: CMatrix) -> Result<Self> {
        let rho = Self::unchecked(space, elements)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a square matrix without checking the density-matrix properties.
    /// Used for unnormalized intermediates such as POVM-weighted states.
    pub fn unchecked(space: HilbertSpace, elements: CMatrix) -> Result<Self> {
        let n = space.total_dim();
        if elements.nrows() != n || elements.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: elements.nrows() });
        }
        Ok(Self { space, elements })
    }

    pub fn maximally_mixed(space: HilbertSpace) -> Self {
        let n = space.total_dim();
        Self { space, elements: CMatrix::identity(n, n).unscale(n as f64) }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    pub fn into_elements(self) -> CMatrix {
        self.elements
    }

    pub fn trace(&self) -> C64 {
        self.elements.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.elements, &self.elements.adjoint())
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.elements + self.elements.adjoint()).unscale(2.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > tol::DENSITY_HERMITIAN {
            return Err(Error::NotDensity(format!("hermiticity error {herm:e}")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(Error::NotDensity(format!("trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < tol::MIN_EIGENVALUE {
            return Err(Error::NotDensity(format!("eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Divides by the trace. Fails for a trace-zero matrix.
    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace().re;
        if tr <= 0.0 {
            return Err(Error::NotDensity(format!("cannot normalize trace {tr}")));
        }
        Ok(Self { space: self.space.clone(), elements: self.elements.unscale(tr) })
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let space = self.space.tensor(&other.space)?;
        Ok(Self { space, elements: self.elements.kronecker(&other.elements) })
    }

    /// Traces out every subsystem not named in `keep`. The kept subsystems
    /// retain their original relative order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        let mut kept = Vec::with_capacity(keep.len());
        for label in keep {
            kept.push(
                self.space.position(label).ok_or_else(|| Error::UnknownLabel(label.to_string()))?,
            );
        }
        kept.sort_unstable();
        kept.dedup();
        let traced: Vec<usize> =
            (0..self.space.subsystems.len()).filter(|p| !kept.contains(p)).collect();
        let kept_space = self.space.restrict(&kept);
        let traced_space = self.space.restrict(&traced);
        let nk = kept_space.total_dim();
        let nt = traced_space.total_dim();

        // full index for (kept index, traced index)
        let mut full = vec![0usize; nk * nt];
        let mut digits = vec![0usize; self.space.subsystems.len()];
        for k in 0..nk {
            let kd = kept_space.digits(k);
            for t in 0..nt {
                let td = traced_space.digits(t);
                for (p, d) in kept.iter().zip(&kd) {
                    digits[*p] = *d;
                }
                for (p, d) in traced.iter().zip(&td) {
                    digits[*p] = *d;
                }
                full[k * nt + t] = self.space.index(&digits)?;
            }
        }

        let mut out = CMatrix::zeros(nk, nk);
        for r in 0..nk {
            for col in 0..nk {
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..nt {
                    acc += self.elements[(full[r * nt + t], full[col * nt + t])];
                }
                out[(r, col)] = acc;
            }
        }
        Ok(Self { space: kept_space, elements: out })
    }

    /// `⟨target|ρ|target⟩`.
    pub fn fidelity(&self, target: &StateVector) -> Result<f64> {
        self.space.ensure_same(target.space())?;
        let v = target.amplitudes();
        Ok(v.dotc(&(&self.elements * v)).re)
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        self.space.ensure_same(&other.space)?;
        Ok(trace_distance(&self.elements, &other.elements))
    }
}

/// `½‖a − b‖₁` for Hermitian `a`, `b`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a - b;
    let h = (&d + d.adjoint()).unscale(2.0);
    0.5 * h.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>()
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// A linear operator on a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    elements: CMatrix,
    hermitian: bool,
}

impl Operator {
    pub fn new(space: HilbertSpace, elements: CMatrix) -> Result<Self> {
        let n = space.total_dim();
        if elements.nrows() != n || elements.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: elements.nrows() });
        }
        let hermitian = max_abs_diff(&elements, &elements.adjoint()) < tol::OPERATOR_HERMITIAN;
        Ok(Self { space, elements, hermitian })
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let n = space.total_dim();
        Self { space, elements: CMatrix::identity(n, n), hermitian: true }
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        let n = space.total_dim();
        Self { space, elements: CMatrix::zeros(n, n), hermitian: true }
    }

    /// Lifts `local`, acting on the subsystem `label`, to the whole space.
    pub fn embed(space: &HilbertSpace, label: &str, local: &CMatrix) -> Result<Self> {
        let pos = space.position(label).ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        let mut full = CMatrix::identity(1, 1);
        for (i, s) in space.subsystems().iter().enumerate() {
            let factor = if i == pos {
                if local.nrows() != s.dim || local.ncols() != s.dim {
                    return Err(Error::DimensionMismatch { expected: s.dim, found: local.nrows() });
                }
                local.clone()
            } else {
                CMatrix::identity(s.dim, s.dim)
            };
            full = full.kronecker(&factor);
        }
        Self::new(space.clone(), full)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn element(&self, row: &[usize], col: &[usize]) -> Result<C64> {
        Ok(self.elements[(self.space.index(row)?, self.space.index(col)?)])
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), elements: self.elements.adjoint(), hermitian: self.hermitian }
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self::new(self.space.clone(), &self.elements * factor).expect("same shape")
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let space = self.space.tensor(&other.space)?;
        Ok(Self {
            space,
            elements: self.elements.kronecker(&other.elements),
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.space.ensure_same(psi.space())?;
        StateVector::new(self.space.clone(), &self.elements * psi.amplitudes())
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        Self::new(self.space.clone(), &self.elements * &other.elements)
    }

    /// Anti-Hermitian part `(A − A†)/2`.
    pub fn anti_hermitian_part(&self) -> CMatrix {
        (&self.elements - self.elements.adjoint()).unscale(2.0)
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        if self.hermitian {
            self.elements.symmetric_eigenvalues().iter().map(|e| c(*e, 0.0)).collect()
        } else {
            self.elements
                .clone()
                .schur()
                .eigenvalues()
                .map(|e| e.iter().copied().collect())
                .unwrap_or_default()
        }
    }

    /// `exp(−iHt)`. Hermitian operators go through an eigendecomposition,
    /// everything else through scaling and squaring.
    pub fn propagator(&self, t: f64) -> Result<Self> {
        let n = self.space.total_dim();
        if t == 0.0 {
            return Ok(Self::identity(self.space.clone()));
        }
        let elements = if self.hermitian {
            let h = (&self.elements + self.elements.adjoint()).unscale(2.0);
            let eig = h.symmetric_eigen();
            let phases = CMatrix::from_diagonal(&CVector::from_iterator(
                n,
                eig.eigenvalues.iter().map(|e| C64::from_polar(1.0, -e * t)),
            ));
            &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
        } else {
            expm(&(&self.elements * c(0.0, -t)))?
        };
        Self::new(self.space.clone(), elements)
    }
}

impl Add for &Operator {
    type Output = Operator;

    /// Panics when the spaces differ.
    fn add(self, rhs: &Operator) -> Operator {
        self.space.ensure_same(&rhs.space).expect("operator spaces differ");
        Operator::new(self.space.clone(), &self.elements + &rhs.elements).expect("same shape")
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        self.space.ensure_same(&rhs.space).expect("operator spaces differ");
        Operator::new(self.space.clone(), &self.elements - &rhs.elements).expect("same shape")
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        self.compose(rhs).expect("operator spaces differ")
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;

    fn mul(self, rhs: f64) -> Operator {
        self.scaled(c(rhs, 0.0))
    }
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    if !norm1.is_finite() {
        return Err(Error::Integrator("non-finite matrix in exponential".into()));
    }
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a.unscale(2f64.powi(squarings));

    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=30 {
        term = &term * &scaled / c(k as f64, 0.0);
        result += &term;
        if term.norm() < 1e-18 * result.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    if result.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Integrator("matrix exponential overflowed".into()));
    }
    Ok(result)
}

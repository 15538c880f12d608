//! Dense complex linear algebra on small Hilbert spaces.
//!
//! States and operators are stored in the computational basis. Tensor
//! products use row-major (big-endian) indexing: for factors of dimensions
//! `d1, d2` the basis vector `|i1⟩⊗|i2⟩` sits at index `d2 * i1 + i2`, so the
//! leftmost factor varies slowest.

mod spectral;

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use spectral::{spectral, SpectralDecomposition, DEGENERACY_TOLERANCE};

/// A probability amplitude.
pub type Amplitude = Complex64;

/// Tolerance used for the normalization, Hermiticity and unitarity checks.
pub const VALIDATION_TOLERANCE: f64 = 1e-9;

fn check_finite(values: &[Complex64], what: &'static str) -> Result<()> {
    if values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Kronecker product of two values of the same kind.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;

    /// `self ⊗ self ⊗ ... ⊗ self` with `n >= 1` factors.
    fn tensor_power(&self, n: usize) -> Self
    where
        Self: Clone,
    {
        assert!(n >= 1, "tensor power needs at least one factor");
        (1..n).fold(self.clone(), |acc, _| acc.tensor(self))
    }
}

/// A vector of amplitudes. Not necessarily normalized; see [`StateVector::normalize`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::EmptyDimension);
        }
        check_finite(&amps, "state vector")?;
        Ok(Self { amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyDimension);
        }
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn normalize(&self) -> Result<Self> {
        let norm = self.norm();
        if norm < 1e-150 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scale(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            amps: self.amps.iter().map(|z| z * factor).collect(),
        }
    }

    /// `⟨self|ket⟩`, conjugating `self`.
    pub fn inner(&self, ket: &StateVector) -> Result<Complex64> {
        inner(self, ket)
    }

    /// Equality up to a global phase factor, entrywise within `tol`.
    pub fn approx_eq_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        // Align the phase on the largest component of `self`.
        let (k, _) = self.amps.iter().enumerate().fold(
            (0, 0.0),
            |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best },
        );
        let (a, b) = (self.amps[k], other.amps[k]);
        let phase = if a.norm() < 1e-300 || b.norm() < 1e-300 {
            Complex64::new(1.0, 0.0)
        } else {
            (a / b) / (a / b).norm()
        };
        self.amps
            .iter()
            .zip(&other.amps)
            .all(|(x, y)| (x - y * phase).norm() <= tol)
    }
}

impl Tensor for StateVector {
    fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self { amps }
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, z) in self.amps.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{z}")?;
        }
        write!(f, "]")
    }
}

/// `Σ conj(bra_k) ket_k`.
pub fn inner(bra: &StateVector, ket: &StateVector) -> Result<Complex64> {
    check_dims(bra.dim(), ket.dim())?;
    Ok(bra.amps.iter().zip(&ket.amps).map(|(b, k)| b.conj() * k).sum())
}

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<Complex64>,
}

impl Operator {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyDimension);
        }
        check_dims(dim * dim, entries.len())?;
        check_finite(&entries, "operator")?;
        Ok(Self { dim, entries })
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            check_dims(dim, row.len())?;
            entries.extend(row);
        }
        Self::new(dim, entries)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        let mut op = Self::zeros(dim);
        for (i, &v) in values.iter().enumerate() {
            op.entries[i * dim + i] = Complex64::new(v, 0.0);
        }
        op
    }

    /// Rank-one projector `|v⟩⟨v| / ⟨v|v⟩`.
    pub fn projector(v: &StateVector) -> Result<Self> {
        let v = v.normalize()?;
        Ok(Self::outer(&v, &v))
    }

    /// `|ket⟩⟨bra|`.
    pub fn outer(ket: &StateVector, bra: &StateVector) -> Self {
        let dim = ket.dim();
        let mut entries = Vec::with_capacity(dim * bra.dim());
        for k in ket.amplitudes() {
            for b in bra.amplitudes() {
                entries.push(k * b.conj());
            }
        }
        Self { dim, entries }
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("static matrix")
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::new(0.0, 1.0);
        let o = Complex64::new(0.0, 0.0);
        Self::from_rows(vec![vec![o, -i], vec![i, o]]).expect("static matrix")
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.entries[row * self.dim..(row + 1) * self.dim]
    }

    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(self.get(j, i).conj());
            }
        }
        Self { dim: n, entries }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Matrix–vector product. The result is generally unnormalized.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        check_dims(self.dim, v.dim())?;
        let amps = (0..self.dim)
            .map(|i| self.row(i).iter().zip(v.amplitudes()).map(|(a, b)| a * b).sum())
            .collect();
        Ok(StateVector { amps })
    }

    /// `⟨bra|self|ket⟩`.
    pub fn sandwich(&self, bra: &StateVector, ket: &StateVector) -> Result<Complex64> {
        inner(bra, &self.apply(ket)?)
    }

    pub fn matmul(&self, rhs: &Operator) -> Result<Operator> {
        check_dims(self.dim, rhs.dim)?;
        let n = self.dim;
        let mut out = Operator::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * rhs.get(k, j);
                }
            }
        }
        Ok(out)
    }

    fn zip_with(&self, rhs: &Operator, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Operator> {
        check_dims(self.dim, rhs.dim)?;
        Ok(Operator {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn try_add(&self, rhs: &Operator) -> Result<Operator> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &Operator) -> Result<Operator> {
        self.zip_with(rhs, |a, b| a - b)
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Operator) -> Result<f64> {
        check_dims(self.dim, rhs.dim)?;
        Ok(self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `max |A - A†|` entrywise.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// `max |U†U - I|` entrywise.
    pub fn unitarity_deviation(&self) -> f64 {
        self.dagger()
            .matmul(self)
            .and_then(|p| p.max_abs_diff(&Operator::identity(self.dim)))
            .unwrap_or(f64::INFINITY)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    /// `max |AB - BA|` entrywise.
    pub fn commutator_norm(&self, rhs: &Operator) -> Result<f64> {
        self.matmul(rhs)?.max_abs_diff(&rhs.matmul(self)?)
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation <= VALIDATION_TOLERANCE {
            Ok(())
        } else {
            Err(Error::NotHermitian { deviation })
        }
    }

    pub fn ensure_unitary(&self) -> Result<()> {
        let deviation = self.unitarity_deviation();
        if deviation <= VALIDATION_TOLERANCE {
            Ok(())
        } else {
            Err(Error::NotUnitary { deviation })
        }
    }
}

impl Tensor for Operator {
    fn tensor(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i1 in 0..n {
            for j1 in 0..n {
                let a = self.get(i1, j1);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i2 in 0..m {
                    for j2 in 0..m {
                        entries[(i1 * m + i2) * dim + (j1 * m + j2)] = a * other.get(i2, j2);
                    }
                }
            }
        }
        Self { dim, entries }
    }
}

impl Add for &Operator {
    type Output = Operator;

    /// Panics on dimension mismatch; use [`Operator::try_add`] otherwise.
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator dimension mismatch")
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        self.try_sub(rhs).expect("operator dimension mismatch")
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs).expect("operator dimension mismatch")
    }
}

/// Place `local` on factor `site` of `n_sites` factors each of dimension
/// `local.dim()`, with identities elsewhere.
pub fn embed(local: &Operator, site: usize, n_sites: usize) -> Operator {
    assert!(site < n_sites, "site {site} out of range for {n_sites} sites");
    let id = Operator::identity(local.dim());
    let mut acc: Option<Operator> = None;
    for k in 0..n_sites {
        let factor = if k == site { local } else { &id };
        acc = Some(match acc {
            None => factor.clone(),
            Some(a) => a.tensor(factor),
        });
    }
    acc.expect("at least one site")
}

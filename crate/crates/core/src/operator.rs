//! Operators and state vectors on a finite spin Hilbert space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{DdError, Result};
use crate::linalg::{self, CMatrix};
use crate::sparse::CsrMatrix;

/// Dimension at and above which builders store operators sparse.
pub const SPARSE_THRESHOLD: usize = 1 << 12;

/// Largest dimension the dense eigendecomposition paths accept.
pub const DENSE_LIMIT: usize = 1 << 12;

const HERMITIAN_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub enum Storage {
    Dense(CMatrix),
    Sparse(CsrMatrix),
}

/// A square complex matrix with a cached Hermiticity flag.
#[derive(Clone, Debug)]
pub struct Operator {
    storage: Storage,
    hermitian: bool,
}

impl Operator {
    pub fn from_dense(m: CMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operator must be square");
        let hermitian = linalg::hermiticity_error(&m) <= HERMITIAN_TOL;
        Self {
            storage: Storage::Dense(m),
            hermitian,
        }
    }

    pub fn from_sparse(m: CsrMatrix) -> Self {
        let hermitian = m.hermiticity_error() <= HERMITIAN_TOL;
        Self {
            storage: Storage::Sparse(m),
            hermitian,
        }
    }

    /// Picks dense or sparse storage by [`SPARSE_THRESHOLD`].
    pub fn auto(m: CsrMatrix) -> Self {
        if m.dim() >= SPARSE_THRESHOLD {
            Self::from_sparse(m)
        } else {
            Self::from_dense(m.to_dense())
        }
    }

    pub fn dim(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.nrows(),
            Storage::Sparse(m) => m.dim(),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn to_dense(&self) -> CMatrix {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(m) => m.to_dense(),
        }
    }

    pub fn to_sparse(&self) -> CsrMatrix {
        match &self.storage {
            Storage::Dense(m) => CsrMatrix::from_dense(m),
            Storage::Sparse(m) => m.clone(),
        }
    }

    pub fn as_sparse(&self) -> Option<&CsrMatrix> {
        match &self.storage {
            Storage::Sparse(m) => Some(m),
            Storage::Dense(_) => None,
        }
    }

    pub fn as_dense(&self) -> Option<&CMatrix> {
        match &self.storage {
            Storage::Dense(m) => Some(m),
            Storage::Sparse(_) => None,
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        match &self.storage {
            Storage::Dense(m) => {
                let n = m.nrows();
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                for j in 0..n {
                    let xj = x[j];
                    if xj == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for i in 0..n {
                        out[i] += m[(i, j)] * xj;
                    }
                }
                out
            }
            Storage::Sparse(m) => m.mul_vec(x),
        }
    }

    pub fn hermiticity_error(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => linalg::hermiticity_error(m),
            Storage::Sparse(m) => m.hermiticity_error(),
        }
    }

    /// ⟨ψ|A|ψ⟩
    pub fn expectation(&self, psi: &StateVector) -> Complex64 {
        linalg::vdot(psi.amplitudes(), &self.apply(psi.amplitudes()))
    }
}

/// A normalized amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Accepts amplitudes that are already normalized to 1e-12.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let n = linalg::norm(&amps);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(DdError::NotNormalized(n));
        }
        Ok(Self { amps })
    }

    /// Rescales to unit norm.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let n = linalg::norm(&amps);
        if n == 0.0 || !n.is_finite() {
            return Err(DdError::NotNormalized(n));
        }
        for a in &mut amps {
            *a /= n;
        }
        Ok(Self { amps })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    pub(crate) fn from_raw(amps: Vec<Complex64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amps)
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        linalg::distance(&self.amps, &other.amps)
    }

    pub fn to_dvector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.amps)
    }

    /// `|⟨a|b⟩|²`
    pub fn overlap_sq(&self, other: &StateVector) -> f64 {
        linalg::vdot(&self.amps, &other.amps).norm_sqr()
    }

    /// Applies a unitary and keeps the result (no renormalization).
    pub fn evolve_by(&self, u: &DMatrix<Complex64>) -> StateVector {
        let v = u * self.to_dvector();
        Self {
            amps: v.iter().copied().collect(),
        }
    }

    /// Tensor product `self ⊗ other`; `self` occupies the more significant index.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self { amps }
    }
}

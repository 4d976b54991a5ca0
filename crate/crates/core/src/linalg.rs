//! Dense helpers built on nalgebra: Hermitian eigendecomposition, matrix
//! exponentials of Hermitian generators and operator distances.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Eigendecomposition `H = V diag(λ) V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Self {
        let eig = SymmetricEigen::new(h.clone());
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    /// Real symmetric input; cheaper than the complex path for large blocks.
    pub fn new_real(h: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(h.clone());
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors.map(c64),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `exp(-i t H)` as a dense matrix.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let phase = Complex64::from_polar(1.0, -self.values[j] * t);
            for i in 0..n {
                scaled[(i, j)] *= phase;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// `exp(-i t H) ψ` without forming the propagator.
    pub fn apply(&self, t: f64, psi: &[Complex64]) -> Vec<Complex64> {
        let v = &self.vectors;
        let n = self.dim();
        let mut coeff = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                acc += v[(i, j)].conj() * psi[i];
            }
            coeff[j] = acc * Complex64::from_polar(1.0, -self.values[j] * t);
        }
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let cj = coeff[j];
            for i in 0..n {
                out[i] += v[(i, j)] * cj;
            }
        }
        out
    }
}

/// `exp(-i t H)` for Hermitian `H`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    HermitianEigen::new(h).propagator(t)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// `min_φ ‖U − e^{iφ}V‖₂` with φ fixed by the trace overlap `arg Tr(V†U)`.
pub fn phase_aligned_distance(u: &CMatrix, v: &CMatrix) -> f64 {
    let overlap = (v.adjoint() * u).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        c64(1.0)
    };
    spectral_norm(&(u - v * phase))
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == c64(0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn vdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_diagonal() {
        let h = CMatrix::from_diagonal(&DVector::from_vec(vec![c64(1.0), c64(-2.0)]));
        let u = expm_hermitian(&h, 0.3);
        assert!((u[(0, 0)] - Complex64::from_polar(1.0, -0.3)).norm() < 1e-14);
        assert!((u[(1, 1)] - Complex64::from_polar(1.0, 0.6)).norm() < 1e-14);
        assert!(u[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn phase_distance_ignores_global_phase() {
        let h = CMatrix::from_fn(3, 3, |i, j| c64((i + j) as f64) + I * (i as f64 - j as f64));
        let u = expm_hermitian(&h, 0.7);
        let v = &u * Complex64::from_polar(1.0, 1.234);
        assert!(phase_aligned_distance(&u, &v) < 1e-12);
        assert!(spectral_norm(&(&u - &v)) > 0.1);
    }

    #[test]
    fn apply_matches_propagator() {
        let h = CMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                c64(i as f64)
            } else {
                Complex64::new(0.3, 0.1 * (i as f64 - j as f64))
            }
        });
        let h = (&h + h.adjoint()) * c64(0.5);
        let eig = HermitianEigen::new(&h);
        let psi = vec![c64(0.5), c64(0.5), Complex64::new(0.0, 0.5), c64(0.5)];
        let a = eig.apply(1.3, &psi);
        let b = eig.propagator(1.3) * DVector::from_vec(psi);
        for i in 0..4 {
            assert!((a[i] - b[i]).norm() < 1e-13);
        }
    }
}

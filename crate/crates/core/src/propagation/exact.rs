//! Dense eigendecomposition propagator, used as the oracle.

use num_complex::Complex64;

use crate::error::{DdError, Result};
use crate::linalg::HermitianEigen;
use crate::operator::{Operator, StateVector, DENSE_LIMIT};

/// `exp(−iHt) ψ` for a dense-capable Hermitian `H`.
pub fn evolve_exact(h: &Operator, psi: &StateVector, t: f64) -> Result<StateVector> {
    let mut p = ExactPropagator::new(h)?;
    let mut amps = psi.amplitudes().to_vec();
    p.evolve(&mut amps, t)?;
    Ok(StateVector::from_raw(amps))
}

#[derive(Clone, Debug)]
pub struct ExactPropagator {
    eig: HermitianEigen,
}

impl ExactPropagator {
    pub fn new(h: &Operator) -> Result<Self> {
        if h.dim() > DENSE_LIMIT {
            return Err(DdError::TooLarge {
                what: "dense propagation",
                dim: h.dim(),
                limit: DENSE_LIMIT,
            });
        }
        if !h.is_hermitian() {
            return Err(DdError::InvalidParameter("Hamiltonian is not Hermitian".into()));
        }
        Ok(Self {
            eig: HermitianEigen::new(&h.to_dense()),
        })
    }

    pub fn dim(&self) -> usize {
        self.eig.dim()
    }

    pub fn evolve(&mut self, psi: &mut [Complex64], t: f64) -> Result<()> {
        if psi.len() != self.dim() {
            return Err(DdError::DimensionMismatch {
                expected: self.dim(),
                actual: psi.len(),
            });
        }
        if t != 0.0 {
            let out = self.eig.apply(t, psi);
            psi.copy_from_slice(&out);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, CMatrix};

    #[test]
    fn zero_hamiltonian_is_identity() {
        let h = Operator::from_dense(CMatrix::zeros(3, 3));
        let psi = StateVector::normalized(vec![c64(1.0), c64(2.0), c64(0.5)]).unwrap();
        assert!(evolve_exact(&h, &psi, 4.0).unwrap().distance(&psi) < 1e-15);
    }

    #[test]
    fn spin_half_phases() {
        let w = 1.3;
        let h = Operator::from_dense(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c64(0.5 * w),
            c64(-0.5 * w),
        ])));
        let psi = StateVector::normalized(vec![c64(1.0), c64(1.0)]).unwrap();
        let out = evolve_exact(&h, &psi, 2.0).unwrap();
        let r = 0.5f64.sqrt();
        assert!((out.amplitudes()[0] - Complex64::from_polar(r, -w)).norm() < 1e-14);
        assert!((out.amplitudes()[1] - Complex64::from_polar(r, w)).norm() < 1e-14);
    }
}

//! Chebyshev expansion of `exp(−iHt)` for sparse Hermitian `H`.
//!
//! With `H = a + b·H̃` and the spectrum of `H̃` inside `[−1, 1]`,
//! `exp(−iHt) = e^{−iat} Σ_k (2 − δ_k0) (−i)^k J_k(bt) T_k(H̃)`.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{DdError, Result};
use crate::linalg;
use crate::sparse::CsrMatrix;

/// Largest tolerated change of the state norm over one propagation call.
pub const NORM_DRIFT_LIMIT: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChebyshevConfig {
    pub tol: f64,
    pub spectral_margin: f64,
}

impl Default for ChebyshevConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            spectral_margin: 1.05,
        }
    }
}

impl ChebyshevConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-6) {
            return Err(DdError::InvalidParameter(format!("cheb_tol = {}", self.tol)));
        }
        if !(self.spectral_margin >= 1.0) {
            return Err(DdError::InvalidParameter(format!(
                "spectral_margin = {}",
                self.spectral_margin
            )));
        }
        Ok(())
    }
}

/// `J_0(x) … J_{n-1}(x)` for `x ≥ 0` by Miller's backward recurrence.
pub fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = {
        let m = (n as f64).max(x) + 30.0 + 10.0 * x.cbrt();
        let m = m.ceil() as usize;
        m + (m % 2)
    };
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-300;
    for k in (1..=start).rev() {
        vals[k - 1] = 2.0 * k as f64 / x * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > 1e250 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    // J_0 + 2 Σ J_{2k} = 1
    let norm: f64 = vals[0] + 2.0 * vals[2..].iter().step_by(2).sum::<f64>();
    for (o, v) in out.iter_mut().zip(&vals) {
        *o = v / norm;
    }
    out
}

/// Expansion coefficients `(2 − δ_k0)(−i)^k J_k(x)`, truncated at the first
/// `k > |x|` with `|J_k| < tol`.
pub fn chebyshev_coefficients(x: f64, tol: f64, max_terms: usize) -> Result<Vec<Complex64>> {
    let ax = x.abs();
    let probe = ((ax * 1.2) as usize + 64).min(max_terms + 2);
    let mut j = bessel_j_sequence(ax, probe);
    let mut cut = None;
    loop {
        for (k, v) in j.iter().enumerate() {
            if k as f64 > ax && v.abs() < tol {
                cut = Some(k);
                break;
            }
        }
        if cut.is_some() || j.len() > max_terms {
            break;
        }
        j = bessel_j_sequence(ax, (j.len() * 2).min(max_terms + 2));
    }
    let terms = match cut {
        Some(k) if k <= max_terms => k.max(1),
        _ => return Err(DdError::ChebyshevNotConverged { terms: max_terms }),
    };
    let phases = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    Ok((0..terms)
        .map(|k| {
            // J_k(−x) = (−1)^k J_k(x)
            let sign = if x < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
            let w = if k == 0 { 1.0 } else { 2.0 };
            phases[k % 4] * (w * sign * j[k])
        })
        .collect())
}

/// A sparse Hamiltonian prepared for repeated Chebyshev propagation.
#[derive(Clone, Debug)]
pub struct ChebyshevPropagator {
    h: CsrMatrix,
    center: f64,
    half_width: f64,
    cfg: ChebyshevConfig,
    cache: HashMap<u64, Vec<Complex64>>,
    scratch: [Vec<Complex64>; 3],
}

impl ChebyshevPropagator {
    pub fn new(h: CsrMatrix, cfg: ChebyshevConfig) -> Result<Self> {
        cfg.validate()?;
        if h.hermiticity_error() > 1e-12 {
            return Err(DdError::InvalidParameter("Hamiltonian is not Hermitian".into()));
        }
        let (lo, hi) = h.gershgorin_bounds();
        let center = 0.5 * (lo + hi);
        let half_width = 0.5 * (hi - lo) * cfg.spectral_margin;
        let dim = h.dim();
        let zero = Complex64::new(0.0, 0.0);
        Ok(Self {
            h,
            center,
            half_width,
            cfg,
            cache: HashMap::new(),
            scratch: [vec![zero; dim], vec![zero; dim], vec![zero; dim]],
        })
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn spectral_bounds(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn max_terms(&self, t: f64) -> usize {
        (10.0 * self.half_width * t.abs()).ceil() as usize + 100
    }

    /// Number of expansion terms used for duration `t`.
    pub fn term_count(&mut self, t: f64) -> Result<usize> {
        Ok(self.coefficients(t)?.len())
    }

    fn coefficients(&mut self, t: f64) -> Result<Vec<Complex64>> {
        if let Some(c) = self.cache.get(&t.to_bits()) {
            return Ok(c.clone());
        }
        let c = chebyshev_coefficients(self.half_width * t, self.cfg.tol, self.max_terms(t))?;
        self.cache.insert(t.to_bits(), c.clone());
        Ok(c)
    }

    /// `ψ ← exp(−iHt) ψ`.
    pub fn evolve(&mut self, psi: &mut [Complex64], t: f64) -> Result<()> {
        if psi.len() != self.dim() {
            return Err(DdError::DimensionMismatch {
                expected: self.dim(),
                actual: psi.len(),
            });
        }
        if t == 0.0 {
            return Ok(());
        }
        let norm_in = linalg::norm(psi);
        let global = Complex64::from_polar(1.0, -self.center * t);
        if self.half_width == 0.0 {
            psi.iter_mut().for_each(|v| *v *= global);
            return Ok(());
        }
        let coeffs = self.coefficients(t)?;
        let inv = 1.0 / self.half_width;
        let [prev, cur, acc] = &mut self.scratch;
        prev.copy_from_slice(psi);
        for (a, p) in acc.iter_mut().zip(prev.iter()) {
            *a = p * coeffs[0];
        }
        if coeffs.len() > 1 {
            self.h.shifted_mul_into(self.center, inv, prev, cur);
            for (a, c) in acc.iter_mut().zip(cur.iter()) {
                *a += c * coeffs[1];
            }
            for ck in &coeffs[2..] {
                // prev ← 2H̃ cur − prev, then swap so cur holds T_k
                self.h.chebyshev_step(self.center, inv, cur, prev);
                std::mem::swap(prev, cur);
                for (a, c) in acc.iter_mut().zip(cur.iter()) {
                    *a += c * ck;
                }
            }
        }
        for (p, a) in psi.iter_mut().zip(acc.iter()) {
            *p = a * global;
        }
        let drift = (linalg::norm(psi) - norm_in).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(DdError::NormDrift { drift });
        }
        Ok(())
    }
}

/// One-shot `exp(−iHt) ψ`.
pub fn evolve_chebyshev(
    h: &CsrMatrix,
    psi: &crate::operator::StateVector,
    t: f64,
    cfg: ChebyshevConfig,
) -> Result<crate::operator::StateVector> {
    let mut prop = ChebyshevPropagator::new(h.clone(), cfg)?;
    let mut amps = psi.amplitudes().to_vec();
    prop.evolve(&mut amps, t)?;
    Ok(crate::operator::StateVector::from_raw(amps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        // J_0(1), J_1(1), J_5(10), J_0(100)
        let a = bessel_j_sequence(1.0, 3);
        assert!((a[0] - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((a[1] - 0.440_050_585_744_933_5).abs() < 1e-14);
        let b = bessel_j_sequence(10.0, 6);
        assert!((b[5] - (-0.234_061_528_186_793_6)).abs() < 1e-13);
        let c = bessel_j_sequence(100.0, 1);
        assert!((c[0] - 0.019_985_850_304_223_122).abs() < 1e-13);
    }

    #[test]
    fn term_count_monotone_in_tol() {
        let mut last = usize::MAX;
        for tol in [1e-14, 1e-12, 1e-10, 1e-8, 1e-6] {
            let n = chebyshev_coefficients(37.5, tol, 10_000).unwrap().len();
            assert!(n <= last);
            last = n;
        }
    }

    #[test]
    fn scalar_hamiltonian() {
        let h = CsrMatrix::identity(3).scale(Complex64::new(2.0, 0.0));
        let mut p = ChebyshevPropagator::new(h, ChebyshevConfig::default()).unwrap();
        let mut psi = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        p.evolve(&mut psi, 0.5).unwrap();
        assert!((psi[0] - Complex64::from_polar(1.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn rejects_loose_tolerance() {
        let cfg = ChebyshevConfig {
            tol: 1e-3,
            ..ChebyshevConfig::default()
        };
        assert!(ChebyshevPropagator::new(CsrMatrix::identity(2), cfg).is_err());
    }
}

//! Effective Hamiltonians of one uniaxial cycle under the magic condition,
//! and their comparison against brute-force cycle propagators.

use std::f64::consts::PI;

use crate::error::{DdError, Result};
use crate::linalg::{self, c64, CMatrix, I};
use crate::models::{bec_hamiltonian_signed, BecModel, QdModel};
use crate::operator::{Operator, DENSE_LIMIT};
use crate::propagation::ModelRef;
use crate::sequences::{uni_dd, SequenceEvent};
use crate::spin::{collective_spin_operators, rotation_operator, single_site_operator, spin_half_matrices};

/// Bath size above which the quantum terms are not assembled densely.
pub const MAX_FER_BATH: usize = 10;

/// First- and zeroth-order Fer generators of one delay and the cycle-averaged
/// Hamiltonian.
#[derive(Clone, Debug)]
pub struct FerTerms {
    pub hf0: Operator,
    pub hf1: Operator,
    pub hbar: Operator,
    pub omega: f64,
}

/// Collective spin in a static stray field `b`.
pub fn classical_fer_terms(model: &BecModel, b: [f64; 3]) -> Result<FerTerms> {
    if model.omega == 0.0 {
        return Err(DdError::InvalidParameter("effective Hamiltonian needs omega != 0".into()));
    }
    let ops = collective_spin_operators(model.j)?;
    let (jx, jy, jz, jsq) = (
        ops.jx.to_dense(),
        ops.jy.to_dense(),
        ops.jz.to_dense(),
        ops.jsq.to_dense(),
    );
    let g = model.gamma;
    let big_b = model.omega / g;
    let [bx, by, bz] = b;
    let hf0 = &jz * c64(g * bz);
    let hf1 = (&jx * c64(bx) + &jy * c64(by)) * c64(g * bz / big_b)
        + &jz * c64(g * (bx * bx + by * by) / (2.0 * big_b));
    let hbar = &jsq * c64(model.c2p) + &jy * c64(bz / big_b * g * by);
    Ok(FerTerms {
        hf0: Operator::from_dense(hf0),
        hf1: Operator::from_dense(hf1),
        hbar: Operator::from_dense(hbar),
        omega: model.omega,
    })
}

/// Terms built from central-spin operators `s` and noise operators `h`, both
/// given on the full space. With scalar `h` this reduces to the classical case.
pub fn fer_terms_from_noise(s: &[CMatrix; 3], h: &[CMatrix; 3], omega: f64) -> Result<FerTerms> {
    if omega == 0.0 {
        return Err(DdError::InvalidParameter("effective Hamiltonian needs omega != 0".into()));
    }
    let [hx, hy, hz] = h;
    let [sx, sy, sz] = s;
    let anti = |a: &CMatrix, b: &CMatrix| a * b + b * a;
    let comm = linalg::commutator(hx, hy) * (I / (4.0 * omega));
    let w = c64(1.0 / (2.0 * omega));
    let hf0 = hz * sz;
    let hf1 = sx * anti(hz, hx) * w
        + sy * anti(hz, hy) * w
        + sz * (hx * hx + hy * hy) * w
        + &comm;
    let hbar = sy * anti(hz, hy) * w + comm;
    Ok(FerTerms {
        hf0: Operator::from_dense(hf0),
        hf1: Operator::from_dense(hf1),
        hbar: Operator::from_dense(hbar),
        omega,
    })
}

/// Central spin and Overhauser operators `h_α = Σ A_k I_kα` on the full space.
pub fn overhauser_operators(model: &QdModel) -> Result<([CMatrix; 3], [CMatrix; 3])> {
    let n = model.n();
    if n > MAX_FER_BATH {
        return Err(DdError::TooLarge {
            what: "dense effective Hamiltonian",
            dim: 2 << n,
            limit: 2 << MAX_FER_BATH,
        });
    }
    model.validate()?;
    let local = spin_half_matrices();
    let dim = 2usize << n;
    let mut s = [CMatrix::zeros(dim, dim), CMatrix::zeros(dim, dim), CMatrix::zeros(dim, dim)];
    let mut h = s.clone();
    for a in 0..3 {
        s[a] = single_site_operator(n, 0, &local[a])?.to_dense();
        for (k, &ak) in model.couplings.iter().enumerate() {
            h[a] += single_site_operator(n, k + 1, &local[a])?.to_dense() * c64(ak);
        }
    }
    Ok((s, h))
}

/// Quantum-bath terms at the model's bias frequency. Bath-only dipolar terms
/// are not part of the expansion.
pub fn quantum_fer_terms(model: &QdModel) -> Result<FerTerms> {
    let (s, h) = overhauser_operators(model)?;
    fer_terms_from_noise(&s, &h, model.omega)
}

/// Literal product of the delay and pulse unitaries of `cycle`, in
/// application order. The collective model needs the static field `b`.
pub fn cycle_propagator_exact(
    model: ModelRef<'_>,
    cycle: &[SequenceEvent],
    b: Option<[f64; 3]>,
) -> Result<Operator> {
    let dim = match model {
        ModelRef::Bec(m) => m.spin().dim(),
        ModelRef::CentralSpin(sys) => sys.dim(),
    };
    if dim > DENSE_LIMIT {
        return Err(DdError::TooLarge {
            what: "dense cycle propagator",
            dim,
            limit: DENSE_LIMIT,
        });
    }
    let mut u = CMatrix::identity(dim, dim);
    for e in cycle {
        let step = match (*e, model) {
            (SequenceEvent::Delay { duration, bias_sign }, ModelRef::Bec(m)) => {
                let b = b.ok_or(DdError::MissingNoise)?;
                let h = bec_hamiltonian_signed(m, b, bias_sign as f64)?;
                linalg::expm_hermitian(&h.to_dense(), duration)
            }
            (SequenceEvent::Delay { duration, bias_sign }, ModelRef::CentralSpin(sys)) => {
                linalg::expm_hermitian(&sys.hamiltonian(bias_sign as f64).to_dense(), duration)
            }
            (SequenceEvent::Pulse(r), ModelRef::Bec(m)) => {
                rotation_operator(&r, &collective_spin_operators(m.j)?).to_dense()
            }
            (SequenceEvent::Pulse(r), ModelRef::CentralSpin(_)) => {
                let su2 = r.su2();
                let p = CMatrix::from_fn(2, 2, |i, j| su2[i][j]);
                linalg::kron(&p, &CMatrix::identity(dim / 2, dim / 2))
            }
        };
        u = step * u;
    }
    Ok(Operator::from_dense(u))
}

/// What the effective Hamiltonian is compared on.
#[derive(Clone, Copy, Debug)]
pub enum FerSubject<'a> {
    Classical { model: &'a BecModel, b: [f64; 3] },
    Quantum(&'a QdModel),
}

/// One magic-line point: `τ = 2π/ω`, the cycle residual
/// `d = min_φ ‖U₂τ − e^{iφ} exp(−i2τH̄)‖₂` and the coupling reduction factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuppressionPoint {
    pub omega: f64,
    pub tau: f64,
    pub distance: f64,
    pub coupling_ratio: f64,
}

/// Scans the magic line `ω = 2π/τ`. The residual is compared up to a global
/// phase because two ideal π pulses on a half-integer spin give `−1`.
pub fn suppression_factor(subject: FerSubject<'_>, omegas: &[f64]) -> Result<Vec<SuppressionPoint>> {
    omegas
        .iter()
        .map(|&omega| {
            if !(omega > 0.0) {
                return Err(DdError::InvalidParameter(format!("omega = {omega}")));
            }
            let tau = 2.0 * PI / omega;
            let cycle = uni_dd(tau, 1, 0.0, false)?.events;
            let (u, terms, ratio) = match subject {
                FerSubject::Classical { model, b } => {
                    let m = model.with_omega(omega);
                    let u = cycle_propagator_exact(ModelRef::Bec(&m), &cycle, Some(b))?;
                    let terms = classical_fer_terms(&m, b)?;
                    let ops = collective_spin_operators(m.j)?;
                    let free = ops.along([m.gamma * b[0], m.gamma * b[1], m.gamma * b[2]]);
                    let reduced = terms.hbar.to_dense() - ops.jsq.to_dense() * c64(m.c2p);
                    let denom = linalg::spectral_norm(&free);
                    let ratio = if denom > 0.0 {
                        linalg::spectral_norm(&reduced) / denom
                    } else {
                        0.0
                    };
                    (u, terms, ratio)
                }
                FerSubject::Quantum(model) => {
                    let m = model.with_omega(omega);
                    let u = cycle_propagator_exact(ModelRef::CentralSpin(&m.system()?), &cycle, None)?;
                    let (s, h) = overhauser_operators(&m)?;
                    let terms = fer_terms_from_noise(&s, &h, omega)?;
                    let free = &s[0] * &h[0] + &s[1] * &h[1] + &s[2] * &h[2];
                    let denom = linalg::spectral_norm(&free);
                    let ratio = if denom > 0.0 {
                        linalg::spectral_norm(&terms.hbar.to_dense()) / denom
                    } else {
                        0.0
                    };
                    (u, terms, ratio)
                }
            };
            let predicted = linalg::expm_hermitian(&terms.hbar.to_dense(), 2.0 * tau);
            Ok(SuppressionPoint {
                omega,
                tau,
                distance: linalg::phase_aligned_distance(&u.to_dense(), &predicted),
                coupling_ratio: ratio,
            })
        })
        .collect()
}

/// `omega,tau,d,coupling_ratio` rows.
pub fn suppression_csv(points: &[SuppressionPoint]) -> String {
    let mut out = String::from("omega,tau,d,coupling_ratio\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{:e},{:e}\n",
            p.omega, p.tau, p.distance, p.coupling_ratio
        ));
    }
    out
}

/// Geometric ladder `ω₀·2^k`, `k = 0..=octaves`.
pub fn omega_ladder(omega0: f64, octaves: usize) -> Vec<f64> {
    (0..=octaves).map(|k| omega0 * f64::powi(2.0, k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::models::{hyperfine_couplings, HyperfineGrid};

    fn bec(j: f64, omega: f64) -> BecModel {
        BecModel::new(j, -0.5, omega).unwrap()
    }

    #[test]
    fn longitudinal_field_leaves_only_exchange() {
        let m = bec(3.0, 2.0 * PI / 0.05);
        let ops = collective_spin_operators(3.0).unwrap();
        let t = classical_fer_terms(&m, [0.0, 0.0, 0.7]).unwrap();
        assert!(max_abs(&t.hf1.to_dense()) < 1e-15);
        assert!(max_abs(&(t.hbar.to_dense() - ops.jsq.to_dense() * c64(-0.5))) < 1e-12);
        let t = classical_fer_terms(&m, [0.4, 0.0, 0.7]).unwrap();
        assert!(max_abs(&(t.hbar.to_dense() - ops.jsq.to_dense() * c64(-0.5))) < 1e-12);
        assert!(classical_fer_terms(&bec(3.0, 0.0), [0.1; 3]).is_err());
    }

    #[test]
    fn scalar_noise_reduces_to_classical() {
        let j = 2.0;
        let omega = 40.0;
        let b = [0.3, -0.2, 0.5];
        let ops = collective_spin_operators(j).unwrap();
        let s = [ops.jx.to_dense(), ops.jy.to_dense(), ops.jz.to_dense()];
        let id = CMatrix::identity(5, 5);
        let h = [&id * c64(b[0]), &id * c64(b[1]), &id * c64(b[2])];
        let q = fer_terms_from_noise(&s, &h, omega).unwrap();
        let c = classical_fer_terms(&BecModel::new(j, 0.0, omega).unwrap(), b).unwrap();
        for (a, b) in [(&q.hf0, &c.hf0), (&q.hf1, &c.hf1), (&q.hbar, &c.hbar)] {
            assert!(max_abs(&(a.to_dense() - b.to_dense())) < 1e-14);
        }
    }

    #[test]
    fn quantum_terms_hermitian_and_vanish_without_coupling() {
        let m = QdModel::new(vec![0.9, 0.4, 0.7], vec![], 2.0 * PI / 0.05).unwrap();
        let t = quantum_fer_terms(&m).unwrap();
        for op in [&t.hf0, &t.hf1, &t.hbar] {
            assert!(linalg::hermiticity_error(&op.to_dense()) < 1e-12);
        }
        let zero = QdModel::new(vec![0.0; 3], vec![], 10.0).unwrap();
        assert!(max_abs(&quantum_fer_terms(&zero).unwrap().hbar.to_dense()) < 1e-15);
    }

    #[test]
    fn magic_cycle_is_trivial_without_noise() {
        let tau = 0.05;
        let omega = 2.0 * PI / tau;
        let cycle = uni_dd(tau, 1, 0.0, false).unwrap().events;
        // integer J: identity up to the exchange phase
        let m = BecModel::new(2.0, 0.0, omega).unwrap();
        let u = cycle_propagator_exact(ModelRef::Bec(&m), &cycle, Some([0.0; 3])).unwrap();
        assert!(max_abs(&(u.to_dense() - CMatrix::identity(5, 5))) < 1e-12);
        // spin-1/2: Y² = −1
        let m = BecModel::new(0.5, 0.0, omega).unwrap();
        let u = cycle_propagator_exact(ModelRef::Bec(&m), &cycle, Some([0.0; 3])).unwrap();
        assert!(max_abs(&(u.to_dense() + CMatrix::identity(2, 2))) < 1e-12);
        let m = BecModel::new(3.0, -0.5, omega).unwrap();
        let u = cycle_propagator_exact(ModelRef::Bec(&m), &cycle, Some([0.3, -0.6, 0.5])).unwrap().to_dense();
        assert!(max_abs(&(u.adjoint() * &u - CMatrix::identity(7, 7))) < 1e-12);
    }

    #[test]
    fn residual_shrinks_along_magic_line() {
        let m = bec(10.0, 1.0);
        let pts = suppression_factor(
            FerSubject::Classical {
                model: &m,
                b: [0.5, -0.6, 0.4],
            },
            &omega_ladder(2.0 * PI / 0.05, 3),
        )
        .unwrap();
        assert!(pts[0].distance <= 0.05);
        for w in pts.windows(2) {
            assert!(w[1].distance <= w[0].distance);
        }
        let b: [f64; 3] = [0.5, -0.6, 0.4];
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let expect = (b[2] * b[1]).abs() / (pts[0].omega * bn);
        assert!((pts[0].coupling_ratio - expect).abs() < 1e-10);
    }

    #[test]
    fn quantum_residual_small_at_default_couplings() {
        let grid = HyperfineGrid::with_dims(2, 2);
        let m = QdModel::new(hyperfine_couplings(&grid).unwrap(), vec![], 1.0).unwrap();
        let pts = suppression_factor(FerSubject::Quantum(&m), &omega_ladder(2.0 * PI / 0.05, 2)).unwrap();
        assert!(pts[0].distance <= 0.05, "{pts:?}");
        for w in pts.windows(2) {
            assert!(w[1].distance <= w[0].distance);
        }
    }
}

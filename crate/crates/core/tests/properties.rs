use std::f64::consts::PI;

use proptest::prelude::*;

use ddsim_core::linalg::{self, CMatrix};
use ddsim_core::models::{qd_hamiltonian, total_sz, BecModel, DipolarBond, NvModel, QdModel};
use ddsim_core::noise::NoiseRealization;
use ddsim_core::observables::{characteristic_time, spin_average_from, Direction};
use ddsim_core::operator::{Operator, StateVector};
use ddsim_core::propagation::{evolve_chebyshev, run_collective, ChebyshevConfig};
use ddsim_core::sequences::{cudd, free_evolution, pdd, qdd, uni_dd, Sequence};
use ddsim_core::spin::{
    coherent_spin_state, collective_moments, collective_spin_operators, rotation_operator, Rotation,
    SpinQuantum,
};

fn axis() -> impl Strategy<Value = [f64; 3]> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("nonzero axis", |(x, y, z)| x * x + y * y + z * z > 1e-3)
        .prop_map(|(x, y, z)| [x, y, z])
}

fn twice_j() -> impl Strategy<Value = u32> {
    1u32..=16
}

fn dense(op: &Operator) -> CMatrix {
    op.to_dense()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn su2_algebra_holds(tj in twice_j()) {
        let j = tj as f64 / 2.0;
        let s = collective_spin_operators(j).unwrap();
        let jx = s.along([1.0, 0.0, 0.0]);
        let jy = s.along([0.0, 1.0, 0.0]);
        let jz = s.along([0.0, 0.0, 1.0]);
        let i = num_complex::Complex64::i();
        prop_assert!(linalg::max_abs(&(linalg::commutator(&jx, &jy) - jz.clone() * i)) < 1e-10);
        prop_assert!(linalg::max_abs(&(linalg::commutator(&jy, &jz) - jx.clone() * i)) < 1e-10);
        let casimir = &jx * &jx + &jy * &jy + &jz * &jz;
        let expect = CMatrix::identity(s.dim(), s.dim()) * num_complex::Complex64::from(j * (j + 1.0));
        prop_assert!(linalg::max_abs(&(casimir.clone() - expect)) < 1e-9);
        prop_assert!(linalg::max_abs(&linalg::commutator(&casimir, &jx)) < 1e-9);
    }

    #[test]
    fn rotations_are_unitary_and_invert(tj in twice_j(), ax in axis(), angle in -2.0 * PI..2.0 * PI) {
        let s = collective_spin_operators(tj as f64 / 2.0).unwrap();
        let r = Rotation::new(ax, angle).unwrap();
        let u = dense(&rotation_operator(&r, &s));
        let back = dense(&rotation_operator(&Rotation::new(ax, -angle).unwrap(), &s));
        let id = CMatrix::identity(s.dim(), s.dim());
        prop_assert!(linalg::max_abs(&(u.adjoint() * &u - &id)) < 1e-10);
        prop_assert!(linalg::max_abs(&(back * &u - &id)) < 1e-10);
    }

    #[test]
    fn css_is_fully_polarized_along_its_direction(tj in twice_j(), dir in axis()) {
        let j = tj as f64 / 2.0;
        let psi = coherent_spin_state(j, dir).unwrap();
        let m = collective_moments(SpinQuantum::new(j).unwrap(), &psi).unwrap();
        let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        for a in 0..3 {
            prop_assert!((m.mean[a] - j * dir[a] / n).abs() < 1e-10);
        }
        prop_assert!((spin_average_from(&m) - 1.0).abs() < 1e-10);
        // variance along the mean is zero, transverse variance is J/2
        let u = [dir[0] / n, dir[1] / n, dir[2] / n];
        let var_along: f64 = (0..3)
            .flat_map(|a| (0..3).map(move |b| (a, b)))
            .map(|(a, b)| u[a] * u[b] * m.covariance(a, b))
            .sum();
        prop_assert!(var_along.abs() < 1e-9);
        let total: f64 = (0..3).map(|a| m.variance(a)).sum();
        prop_assert!((total - j).abs() < 1e-9);
    }

    #[test]
    fn central_spin_hamiltonians_are_hermitian_and_conserve_total_z(
        couplings in prop::collection::vec(0.0..1.0f64, 1..5),
        gammas in prop::collection::vec(0.0..0.05f64, 4),
        omega in 0.0..200.0f64,
    ) {
        let n = couplings.len();
        let dipolar: Vec<DipolarBond> = (0..n.saturating_sub(1))
            .map(|i| DipolarBond { i, j: i + 1, gamma: gammas[i % gammas.len()] })
            .collect();
        let qd = QdModel::new(couplings.clone(), dipolar, omega).unwrap();
        let h = qd_hamiltonian(&qd, true).unwrap();
        prop_assert!(h.hermiticity_error() < 1e-12);
        let hz = dense(&h);
        let sz = total_sz(n).to_dense();
        prop_assert!(linalg::max_abs(&linalg::commutator(&hz, &sz)) < 1e-12);

        let nv = NvModel::new(couplings, omega).unwrap().system().unwrap();
        let hn = nv.hamiltonian(1.0).to_dense();
        prop_assert!(linalg::hermiticity_error(&hn) < 1e-12);
        prop_assert!(linalg::max_abs(&linalg::commutator(&hn, &sz)) < 1e-12);
    }

    #[test]
    fn chebyshev_preserves_norm_and_matches_eigen(
        couplings in prop::collection::vec(0.0..1.0f64, 2..4),
        omega in 0.0..50.0f64,
        t in 0.01..3.0f64,
        phase in 0.0..2.0 * PI,
    ) {
        let qd = QdModel::new(couplings.clone(), Vec::new(), omega).unwrap();
        let h = qd_hamiltonian(&qd, true).unwrap();
        let dim = h.dim();
        let amps: Vec<_> = (0..dim)
            .map(|k| num_complex::Complex64::from_polar(1.0 + k as f64 * 0.1, phase * k as f64))
            .collect();
        let psi = StateVector::normalized(amps).unwrap();
        let out = evolve_chebyshev(&h.to_sparse(), &psi, t, ChebyshevConfig::default()).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-10);
        let reference = psi.evolve_by(&linalg::expm_hermitian(&h.to_dense(), t));
        prop_assert!(out.distance(&reference) < 1e-9);
    }

    #[test]
    fn pulse_counts_and_durations(tau in 0.001..1.0f64, l in 1usize..40, eps in 0.0..0.05f64) {
        let u = uni_dd(tau, l, eps, false).unwrap();
        prop_assert_eq!(u.pulse_count(), 2 * l);
        prop_assert!((u.total_time() - 2.0 * tau * l as f64).abs() < 1e-9 * l as f64);
        let p = pdd(tau, l).unwrap();
        prop_assert_eq!(p.pulse_count(), 4 * l);
        prop_assert!((p.total_time() - 4.0 * tau * l as f64).abs() < 1e-9 * l as f64);
        let f = free_evolution(tau, l).unwrap();
        prop_assert_eq!(f.pulse_count(), 0);
    }

    #[test]
    fn uhrig_sequences_fill_their_time(n in 1usize..20, t in 0.1..50.0f64) {
        let c = cudd(n, t).unwrap();
        prop_assert_eq!(c.pulse_count(), 4 * n + 2);
        prop_assert!((c.total_time() - t).abs() < 1e-9 * t);
        let odd = 2 * (n / 2) + 1;
        let q = qdd(odd, t).unwrap();
        prop_assert_eq!(q.pulse_count(), (odd + 1) * (odd + 2));
        prop_assert!((q.total_time() - t).abs() < 1e-9 * t);
    }

    #[test]
    fn overbar_is_an_involution_and_text_round_trips(tau in 0.001..1.0f64, l in 1usize..6, modified: bool) {
        let s = uni_dd(tau, l, 0.01, modified).unwrap();
        prop_assert_eq!(s.overbar().overbar().events, s.events.clone());
        let cycle = Sequence::new("c", s.cycle().to_vec()).unwrap();
        let parsed = Sequence::from_text("c", &cycle.to_text()).unwrap();
        prop_assert_eq!(parsed.events.len(), cycle.events.len());
        prop_assert!((parsed.total_time() - cycle.total_time()).abs() < 1e-12);
        prop_assert_eq!(parsed.to_text(), cycle.to_text());
    }

    #[test]
    fn noiseless_longitudinal_field_keeps_full_polarization(
        bz in -1.0..1.0f64,
        l in 1usize..80,
        dir in axis(),
    ) {
        // pure dephasing with ideal pulses: every cycle is an exact echo
        let model = BecModel::new(20.0, -0.5, 2.0 * PI / 0.05).unwrap();
        let seq = uni_dd(0.05, l, 0.0, false).unwrap();
        let noise = NoiseRealization::constant([0.0, 0.0, bz], seq.total_time() + 1.0);
        let m0 = collective_moments(model.spin(), &coherent_spin_state(20.0, dir).unwrap()).unwrap();
        let traj = run_collective(&model, &seq, &m0, &noise).unwrap();
        for o in &traj.observations {
            let ddsim_core::propagation::Observation::Collective(m) = o else { unreachable!() };
            prop_assert!((spin_average_from(m) - 1.0).abs() < 1e-10);
            for a in 0..3 {
                prop_assert!((m.mean[a] - m0.mean[a]).abs() < 1e-10 * m0.j);
            }
        }
    }

    #[test]
    fn crossing_lies_between_bracketing_samples(
        values in prop::collection::vec(0.0..1.0f64, 2..30),
        thr in 0.05..0.95f64,
    ) {
        let times: Vec<f64> = (0..values.len()).map(|k| k as f64 * 0.5).collect();
        let c = characteristic_time(&times, &values, thr, Direction::Falling).unwrap();
        match c.value {
            None => prop_assert!(values.iter().all(|&v| v > thr)),
            Some(t) => {
                let i = values.iter().position(|&v| v <= thr).unwrap();
                prop_assert!(t <= times[i] + 1e-12);
                if i > 0 {
                    prop_assert!(t >= times[i - 1] - 1e-12);
                } else {
                    prop_assert_eq!(t, times[0]);
                }
            }
        }
    }
}

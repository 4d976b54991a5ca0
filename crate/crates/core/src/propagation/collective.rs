//! Collective-spin runs. Inside the maximal multiplet `H = c2′J(J+1) + Ω·J`,
//! so each delay and pulse acts on `⟨J⟩` and `⟨{J_a, J_b}⟩/2` as an SO(3)
//! rotation and moments can be propagated without the state vector.

use std::collections::HashMap;

use num_complex::Complex64;

use super::{check_coverage, split_delay, Observation, Trajectory, TrajectoryMeta};
use crate::error::Result;
use crate::linalg::{CMatrix, HermitianEigen};
use crate::models::{bec_hamiltonian_signed, BecModel};
use crate::noise::NoiseRealization;
use crate::operator::StateVector;
use crate::sequences::{Sequence, SequenceEvent};
use crate::spin::{collective_moments, collective_spin_operators, rotation_operator, CollectiveMoments, Rotation};

/// Heisenberg-picture action `⟨J⟩ ↦ R⟨J⟩` of a unitary generated by `J`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollectiveMap(pub [[f64; 3]; 3]);

impl CollectiveMap {
    pub fn identity() -> Self {
        Self([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn pulse(r: &Rotation) -> Self {
        Self(r.so3())
    }

    /// Free evolution for `duration` under `c2′J² + Ω·J`.
    pub fn delay(model: &BecModel, b: [f64; 3], bias_sign: i8, duration: f64) -> Self {
        let w = model.precession_vector(b, bias_sign as f64);
        let norm = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        if norm == 0.0 || duration == 0.0 {
            return Self::identity();
        }
        let rot = Rotation::new(w, norm * duration).expect("nonzero axis");
        Self(rot.so3())
    }

    /// `next ∘ self`: first `self`, then `next`.
    pub fn then(&self, next: &Self) -> Self {
        let (a, b) = (&next.0, &self.0);
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        Self(out)
    }

    pub fn apply(&self, m: &CollectiveMoments) -> CollectiveMoments {
        m.rotated(&self.0)
    }
}

fn event_map(
    model: &BecModel,
    noise: &NoiseRealization,
    t: &mut f64,
    e: &SequenceEvent,
) -> Result<CollectiveMap> {
    Ok(match *e {
        SequenceEvent::Pulse(r) => CollectiveMap::pulse(&r),
        SequenceEvent::Delay {
            duration,
            bias_sign,
        } => {
            let mut map = CollectiveMap::identity();
            split_delay(noise, *t, duration, |k, d| {
                let b = noise.segments[k].b;
                map = map.then(&CollectiveMap::delay(model, b, bias_sign, d));
                Ok(())
            })?;
            *t += duration;
            map
        }
    })
}

/// Moment propagation from `m0`; cycles lying inside one noise segment reuse
/// a cached cycle map.
pub fn run_collective(
    model: &BecModel,
    seq: &Sequence,
    m0: &CollectiveMoments,
    noise: &NoiseRealization,
) -> Result<Trajectory> {
    check_coverage(noise, seq.total_time())?;
    let cycle_time = seq.cycle_time();
    let mut m = *m0;
    let mut t = 0.0;
    let mut times = vec![t];
    let mut observations = vec![Observation::Collective(m)];
    let mut cache: Option<(usize, CollectiveMap)> = None;
    let last = noise.segments.len() - 1;
    for cycle in seq.events.chunks(seq.cycle_len()) {
        let k = noise.segment_index(t);
        let seg_end = if k == last {
            f64::INFINITY
        } else {
            noise.segments[k].end
        };
        let t_end = t + cycle_time;
        if seg_end >= t_end - 1e-12 * t_end.max(1.0) {
            let map = match cache {
                Some((seg, map)) if seg == k => map,
                _ => {
                    let mut tt = t;
                    let mut map = CollectiveMap::identity();
                    for e in cycle {
                        map = map.then(&event_map(model, noise, &mut tt, e)?);
                    }
                    cache = Some((k, map));
                    map
                }
            };
            m = map.apply(&m);
            for e in cycle {
                if let SequenceEvent::Delay { duration, .. } = e {
                    t += duration;
                }
            }
        } else {
            for e in cycle {
                let map = event_map(model, noise, &mut t, e)?;
                m = map.apply(&m);
            }
        }
        times.push(t);
        observations.push(Observation::Collective(m));
    }
    Ok(Trajectory {
        times,
        observations,
        meta: TrajectoryMeta {
            label: seq.label.clone(),
            realization: noise.index,
        },
    })
}

/// State-vector reference engine: one eigendecomposition per
/// (noise segment, bias sign), reused across that segment's delays.
pub fn run_bec_dense(
    model: &BecModel,
    seq: &Sequence,
    psi0: &StateVector,
    noise: &NoiseRealization,
) -> Result<Trajectory> {
    check_coverage(noise, seq.total_time())?;
    let spin = model.spin();
    let ops = collective_spin_operators(model.j)?;
    let mut eigs: HashMap<(usize, i8), HermitianEigen> = HashMap::new();
    let mut pulses: HashMap<[u64; 4], CMatrix> = HashMap::new();
    let mut psi = psi0.amplitudes().to_vec();
    let mut t = 0.0;
    let record = |psi: &[Complex64]| -> Result<Observation> {
        let sv = StateVector::from_raw(psi.to_vec());
        Ok(Observation::Collective(collective_moments(spin, &sv)?))
    };
    let mut times = vec![t];
    let mut observations = vec![record(&psi)?];
    for cycle in seq.events.chunks(seq.cycle_len()) {
        for e in cycle {
            match *e {
                SequenceEvent::Pulse(r) => {
                    let [x, y, z] = r.axis();
                    let key = [x.to_bits(), y.to_bits(), z.to_bits(), r.angle().to_bits()];
                    let u = pulses
                        .entry(key)
                        .or_insert_with(|| rotation_operator(&r, &ops).to_dense());
                    let v = &*u * nalgebra::DVector::from_column_slice(&psi);
                    psi.copy_from_slice(v.as_slice());
                }
                SequenceEvent::Delay {
                    duration,
                    bias_sign,
                } => {
                    split_delay(noise, t, duration, |k, d| {
                        let eig = match eigs.entry((k, bias_sign)) {
                            std::collections::hash_map::Entry::Occupied(o) => o.into_mut(),
                            std::collections::hash_map::Entry::Vacant(v) => {
                                let h = bec_hamiltonian_signed(
                                    model,
                                    noise.segments[k].b,
                                    bias_sign as f64,
                                )?;
                                v.insert(HermitianEigen::new(&h.to_dense()))
                            }
                        };
                        let out = eig.apply(d, &psi);
                        psi.copy_from_slice(&out);
                        Ok(())
                    })?;
                    t += duration;
                }
            }
        }
        times.push(t);
        observations.push(record(&psi)?);
    }
    Ok(Trajectory {
        times,
        observations,
        meta: TrajectoryMeta {
            label: seq.label.clone(),
            realization: noise.index,
        },
    })
}

//! Time evolution under piecewise-constant Hamiltonians and execution of
//! pulse sequences against the models.

mod central;
pub mod chebyshev;
mod collective;
pub mod exact;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DdError, Result};
use crate::models::{BecModel, CentralSpinSystem};
use crate::noise::{stream_rng, NoiseRealization, DOMAIN_BATH};
use crate::observables::DensityMatrix2;
use crate::operator::StateVector;
use crate::sequences::Sequence;
use crate::spin::CollectiveMoments;

pub use central::CentralSpinRunner;
pub use chebyshev::{evolve_chebyshev, ChebyshevConfig, ChebyshevPropagator};
pub use collective::{run_bec_dense, run_collective, CollectiveMap};
pub use exact::{evolve_exact, ExactPropagator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Exact,
    #[default]
    Chebyshev,
}

/// How collective-spin runs are propagated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BecEngine {
    /// SO(3) propagation of first and second moments; exact for `c2′J² + Ω·J`.
    #[default]
    Collective,
    /// State-vector propagation with one eigendecomposition per noise segment.
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorConfig {
    pub engine: Engine,
    pub bec_engine: BecEngine,
    pub cheb: ChebyshevConfig,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            engine: Engine::Chebyshev,
            bec_engine: BecEngine::Collective,
            cheb: ChebyshevConfig::default(),
        }
    }
}

/// What a run records at each cycle boundary. Both variants are linear in
/// the density matrix, so realization averages are taken on them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observation {
    Collective(CollectiveMoments),
    Electron(DensityMatrix2),
}

impl Observation {
    fn zero_like(&self) -> Self {
        match self {
            Self::Collective(m) => Self::Collective(CollectiveMoments::zero(m.j)),
            Self::Electron(_) => Self::Electron([[Complex64::new(0.0, 0.0); 2]; 2]),
        }
    }

    fn add_scaled(&mut self, other: &Self, w: f64) -> Result<()> {
        match (self, other) {
            (Self::Collective(a), Self::Collective(b)) => a.add_scaled(b, w),
            (Self::Electron(a), Self::Electron(b)) => {
                for r in 0..2 {
                    for c in 0..2 {
                        a[r][c] += b[r][c] * w;
                    }
                }
            }
            _ => return Err(DdError::InvalidParameter("mixed observation kinds".into())),
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrajectoryMeta {
    pub label: String,
    pub realization: usize,
}

/// Observations at `t = 0` and at every cycle boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub observations: Vec<Observation>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Pointwise mean, reduced in realization-index order.
pub fn average_trajectories(trajs: &[Trajectory]) -> Result<Trajectory> {
    if trajs.is_empty() {
        return Err(DdError::Empty("trajectories"));
    }
    let mut order: Vec<usize> = (0..trajs.len()).collect();
    order.sort_by_key(|&i| trajs[i].meta.realization);
    let mut avg = TrajectoryAverager::new(trajs.len());
    for &i in &order {
        avg.push(&trajs[i])?;
    }
    avg.finish()
}

/// Running mean of `count` trajectories on one grid. Pushing in realization
/// order gives the same bits as [`average_trajectories`].
#[derive(Clone, Debug)]
pub struct TrajectoryAverager {
    weight: f64,
    acc: Option<Trajectory>,
}

impl TrajectoryAverager {
    pub fn new(count: usize) -> Self {
        Self {
            weight: 1.0 / count.max(1) as f64,
            acc: None,
        }
    }

    pub fn push(&mut self, traj: &Trajectory) -> Result<()> {
        let acc = self.acc.get_or_insert_with(|| Trajectory {
            times: traj.times.clone(),
            observations: traj.observations.iter().map(|o| o.zero_like()).collect(),
            meta: TrajectoryMeta {
                label: traj.meta.label.clone(),
                realization: 0,
            },
        });
        if traj.times.len() != acc.times.len()
            || traj
                .times
                .iter()
                .zip(&acc.times)
                .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
        {
            return Err(DdError::GridMismatch);
        }
        for (a, o) in acc.observations.iter_mut().zip(&traj.observations) {
            a.add_scaled(o, self.weight)?;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<Trajectory> {
        self.acc.ok_or(DdError::Empty("trajectories"))
    }
}

/// Random pure bath state: normalized complex Gaussian amplitudes.
pub fn random_bath_state(n_bath: usize, seed: u64, realization: usize) -> StateVector {
    let mut rng = stream_rng(seed, DOMAIN_BATH, realization as u64);
    let amps: Vec<Complex64> = (0..1usize << n_bath)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    StateVector::normalized(amps).expect("Gaussian draw is nonzero")
}

/// Spin-1/2 states along x, y, z, −z.
pub fn electron_benchmark_states() -> [(&'static str, StateVector); 4] {
    let r = 0.5f64.sqrt();
    let c = |re: f64, im: f64| Complex64::new(re, im);
    [
        ("x", StateVector::from_raw(vec![c(r, 0.0), c(r, 0.0)])),
        ("y", StateVector::from_raw(vec![c(r, 0.0), c(0.0, r)])),
        ("z", StateVector::from_raw(vec![c(1.0, 0.0), c(0.0, 0.0)])),
        ("-z", StateVector::from_raw(vec![c(0.0, 0.0), c(1.0, 0.0)])),
    ]
}

#[derive(Clone, Copy)]
pub enum ModelRef<'a> {
    Bec(&'a BecModel),
    CentralSpin(&'a CentralSpinSystem),
}

/// Runs `seq` from `psi0`, calling `hook` at `t = 0` and at every cycle boundary.
///
/// The collective model needs a noise realization; central-spin models carry
/// their environment quantum mechanically and take none.
pub fn run_sequence(
    model: ModelRef<'_>,
    seq: &Sequence,
    psi0: &StateVector,
    noise: Option<&NoiseRealization>,
    cfg: &PropagatorConfig,
    hook: &mut dyn FnMut(f64, &Observation),
) -> Result<Trajectory> {
    let traj = match model {
        ModelRef::Bec(m) => {
            let noise = noise.ok_or(DdError::MissingNoise)?;
            match cfg.bec_engine {
                BecEngine::Collective => {
                    let m0 = crate::spin::collective_moments(m.spin(), psi0)?;
                    run_collective(m, seq, &m0, noise)?
                }
                BecEngine::Dense => run_bec_dense(m, seq, psi0, noise)?,
            }
        }
        ModelRef::CentralSpin(sys) => {
            if noise.is_some() {
                return Err(DdError::Unsupported(
                    "classical noise on a central-spin model".into(),
                ));
            }
            CentralSpinRunner::new(sys, cfg)?.run(seq, psi0, 0)?
        }
    };
    for (t, o) in traj.times.iter().zip(&traj.observations) {
        hook(*t, o);
    }
    Ok(traj)
}

/// Steps through a delay of `duration` starting at `t`, splitting at noise
/// segment boundaries. Calls `f(segment, piece)`.
pub(crate) fn split_delay(
    noise: &NoiseRealization,
    t: f64,
    duration: f64,
    mut f: impl FnMut(usize, f64) -> Result<()>,
) -> Result<()> {
    let end = t + duration;
    let eps = 1e-12 * end.abs().max(1.0);
    let last = noise.segments.len() - 1;
    let mut now = t;
    loop {
        let k = noise.segment_index(now);
        let seg_end = if k == last {
            f64::INFINITY
        } else {
            noise.segments[k].end
        };
        if seg_end >= end - eps {
            return f(k, end - now);
        }
        f(k, seg_end - now)?;
        now = seg_end;
    }
}

pub(crate) fn check_coverage(noise: &NoiseRealization, needed: f64) -> Result<()> {
    let covered = noise.covered();
    if covered + 1e-9 * needed.max(1.0) < needed {
        return Err(DdError::NoiseTooShort { covered, needed });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseSegment;

    fn electron(p: f64) -> Observation {
        let z = Complex64::new(0.0, 0.0);
        Observation::Electron([[Complex64::new(p, 0.0), z], [z, Complex64::new(1.0 - p, 0.0)]])
    }

    fn traj(realization: usize, p: f64) -> Trajectory {
        Trajectory {
            times: vec![0.0, 1.0],
            observations: vec![electron(1.0), electron(p)],
            meta: TrajectoryMeta {
                label: "t".into(),
                realization,
            },
        }
    }

    #[test]
    fn averaging_rules() {
        let one = average_trajectories(&[traj(0, 0.3)]).unwrap();
        assert_eq!(one.observations, traj(0, 0.3).observations);
        let two = average_trajectories(&[traj(0, 0.2), traj(1, 0.6)]).unwrap();
        match (two.observations[1], electron(0.4)) {
            (Observation::Electron(a), Observation::Electron(b)) => {
                for r in 0..2 {
                    for c in 0..2 {
                        assert!((a[r][c] - b[r][c]).norm() < 1e-15);
                    }
                }
            }
            _ => unreachable!(),
        }
        let a = average_trajectories(&[traj(0, 0.1), traj(1, 0.7), traj(2, 0.3)]).unwrap();
        let b = average_trajectories(&[traj(2, 0.3), traj(0, 0.1), traj(1, 0.7)]).unwrap();
        assert_eq!(a, b);
        let mut bad = traj(1, 0.5);
        bad.times[1] = 2.0;
        assert!(matches!(
            average_trajectories(&[traj(0, 0.5), bad]),
            Err(DdError::GridMismatch)
        ));
    }

    #[test]
    fn delay_splitting() {
        let noise = NoiseRealization {
            segments: (0..4)
                .map(|n| NoiseSegment {
                    start: n as f64 * 0.5,
                    end: (n + 1) as f64 * 0.5,
                    b: [n as f64, 0.0, 0.0],
                })
                .collect(),
            seed: 0,
            index: 0,
        };
        let mut pieces = Vec::new();
        split_delay(&noise, 0.3, 1.0, |k, d| {
            pieces.push((k, d));
            Ok(())
        })
        .unwrap();
        assert_eq!(pieces.len(), 3);
        assert_eq!(pieces[0].0, 0);
        assert!((pieces[0].1 - 0.2).abs() < 1e-15);
        assert!((pieces[1].1 - 0.5).abs() < 1e-15);
        assert!((pieces[2].1 - 0.3).abs() < 1e-12);
    }

    #[test]
    fn bath_state_is_seeded() {
        let a = random_bath_state(3, 1, 0);
        assert_eq!(a, random_bath_state(3, 1, 0));
        assert_ne!(a, random_bath_state(3, 1, 1));
        assert!((a.norm() - 1.0).abs() < 1e-14);
    }
}

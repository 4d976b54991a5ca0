//! Metrics recorded along trajectories: normalized spin average, squeezing,
//! electron fidelity, worst-case aggregation and threshold crossing times.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DdError, Result};
use crate::operator::StateVector;
use crate::propagation::{Observation, Trajectory};
use crate::spin::{collective_moments, transverse_squeezing, CollectiveMoments, SpinQuantum};

/// 2×2 density matrix of the central spin, row 0 = up.
pub type DensityMatrix2 = [[Complex64; 2]; 2];

/// Reduced density matrix of the most significant qubit (site 0).
pub fn reduced_electron(amps: &[Complex64], n_bath: usize) -> DensityMatrix2 {
    let half = 1usize << n_bath;
    debug_assert_eq!(amps.len(), 2 * half);
    let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in a..2 {
            let mut s = Complex64::new(0.0, 0.0);
            for r in 0..half {
                s += amps[a * half + r] * amps[b * half + r].conj();
            }
            rho[a][b] = s;
        }
    }
    rho[1][0] = rho[0][1].conj();
    rho
}

/// `|ψ⟩⟨ψ|` for a single spin-1/2.
pub fn pure_density(psi: &StateVector) -> Result<DensityMatrix2> {
    if psi.dim() != 2 {
        return Err(DdError::DimensionMismatch {
            expected: 2,
            actual: psi.dim(),
        });
    }
    Ok(reduced_electron(psi.amplitudes(), 0))
}

/// `Re Tr[ρ₀ ρ]`.
pub fn overlap(rho0: &DensityMatrix2, rho: &DensityMatrix2) -> f64 {
    let mut s = Complex64::new(0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            s += rho0[a][b] * rho[b][a];
        }
    }
    s.re
}

/// `Tr[ρ_e(0) Tr_n |ψ⟩⟨ψ|]` with the bath of `n_bath` spins traced out.
pub fn fidelity(rho_e0: &DensityMatrix2, psi_full: &StateVector, n_bath: usize) -> Result<f64> {
    let dim = 2usize << n_bath;
    if psi_full.dim() != dim {
        return Err(DdError::DimensionMismatch {
            expected: dim,
            actual: psi_full.dim(),
        });
    }
    Ok(overlap(rho_e0, &reduced_electron(psi_full.amplitudes(), n_bath)))
}

/// `|⟨J⟩| / J`.
pub fn spin_average_from(m: &CollectiveMoments) -> f64 {
    m.mean.iter().map(|v| v * v).sum::<f64>().sqrt() / m.j
}

pub fn spin_average(spin: SpinQuantum, psi: &StateVector) -> Result<f64> {
    Ok(spin_average_from(&collective_moments(spin, psi)?))
}

/// `2 min{ΔJx², ΔJy², ΔJz²} / J` over the fixed laboratory axes.
pub fn squeezing_from(m: &CollectiveMoments) -> f64 {
    let v = (0..3).map(|a| m.variance(a)).fold(f64::INFINITY, f64::min);
    (2.0 * v / m.j).max(0.0)
}

pub fn squeezing(spin: SpinQuantum, psi: &StateVector) -> Result<f64> {
    Ok(squeezing_from(&collective_moments(spin, psi)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SpinAvg,
    Xi2,
    Xi2Transverse,
    Fidelity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Falling,
    Rising,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Self::SpinAvg => "spin_avg",
            Self::Xi2 => "xi2",
            Self::Xi2Transverse => "xi2_transverse",
            Self::Fidelity => "fidelity",
        }
    }

    /// Direction in which the metric degrades; worst case follows it.
    pub fn degrades(self) -> Direction {
        match self {
            Self::SpinAvg | Self::Fidelity => Direction::Falling,
            Self::Xi2 | Self::Xi2Transverse => Direction::Rising,
        }
    }

    fn of(self, obs: &Observation, rho0: Option<&DensityMatrix2>) -> Option<f64> {
        match (self, obs) {
            (Self::SpinAvg, Observation::Collective(m)) => Some(spin_average_from(m)),
            (Self::Xi2, Observation::Collective(m)) => Some(squeezing_from(m)),
            (Self::Xi2Transverse, Observation::Collective(m)) => Some(transverse_squeezing(m)),
            (Self::Fidelity, Observation::Electron(rho)) => rho0.map(|r0| overlap(r0, rho)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct MetricRecord {
    pub t: f64,
    pub spin_avg: Option<f64>,
    pub xi2: Option<f64>,
    pub xi2_transverse: Option<f64>,
    pub fidelity: Option<f64>,
}

/// Per-sample metrics. Fidelity uses the first observation as `ρ_e(0)`.
pub fn metric_records(traj: &Trajectory) -> Vec<MetricRecord> {
    let rho0 = match traj.observations.first() {
        Some(Observation::Electron(r)) => Some(*r),
        _ => None,
    };
    traj.times
        .iter()
        .zip(&traj.observations)
        .map(|(&t, o)| MetricRecord {
            t,
            spin_avg: Metric::SpinAvg.of(o, rho0.as_ref()),
            xi2: Metric::Xi2.of(o, rho0.as_ref()),
            xi2_transverse: Metric::Xi2Transverse.of(o, rho0.as_ref()),
            fidelity: Metric::Fidelity.of(o, rho0.as_ref()),
        })
        .collect()
}

/// One metric sampled on a trajectory's grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricCurve {
    pub metric: Metric,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl MetricCurve {
    pub fn from_trajectory(traj: &Trajectory, metric: Metric) -> Result<Self> {
        let rho0 = match traj.observations.first() {
            Some(Observation::Electron(r)) => Some(*r),
            Some(_) => None,
            None => return Err(DdError::Empty("trajectory")),
        };
        let values = traj
            .observations
            .iter()
            .map(|o| metric.of(o, rho0.as_ref()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| {
                DdError::Unsupported(format!("metric {} on this trajectory", metric.name()))
            })?;
        Ok(Self {
            metric,
            times: traj.times.clone(),
            values,
        })
    }

    pub fn crossing(&self, threshold: f64) -> Result<CharacteristicTime> {
        characteristic_time(&self.times, &self.values, threshold, self.metric.degrades())
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("curves are nonempty")
    }
}

/// Pointwise worst case: minimum for falling metrics, maximum for rising ones.
pub fn worst_case(curves: &[MetricCurve]) -> Result<MetricCurve> {
    let first = curves.first().ok_or(DdError::Empty("curves"))?;
    for c in curves {
        if c.metric != first.metric
            || c.times.len() != first.times.len()
            || c.times
                .iter()
                .zip(&first.times)
                .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
        {
            return Err(DdError::GridMismatch);
        }
    }
    let pick = match first.metric.degrades() {
        Direction::Falling => f64::min,
        Direction::Rising => f64::max,
    };
    let values = (0..first.values.len())
        .map(|i| curves.iter().map(|c| c.values[i]).reduce(pick).expect("nonempty"))
        .collect();
    Ok(MetricCurve {
        metric: first.metric,
        times: first.times.clone(),
        values,
    })
}

/// First threshold crossing, or `None` if not reached before `horizon`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacteristicTime {
    pub threshold: f64,
    pub value: Option<f64>,
    pub horizon: f64,
}

impl CharacteristicTime {
    /// Crossing time, with "not reached" counted as the horizon.
    pub fn lower_bound(&self) -> f64 {
        self.value.unwrap_or(self.horizon)
    }
}

/// First time the series reaches `threshold` in the given direction, linearly
/// interpolated between the bracketing samples.
pub fn characteristic_time(
    times: &[f64],
    values: &[f64],
    threshold: f64,
    direction: Direction,
) -> Result<CharacteristicTime> {
    if times.is_empty() {
        return Err(DdError::Empty("series"));
    }
    if times.len() != values.len() {
        return Err(DdError::DimensionMismatch {
            expected: times.len(),
            actual: values.len(),
        });
    }
    let past = |v: f64| match direction {
        Direction::Falling => v <= threshold,
        Direction::Rising => v >= threshold,
    };
    let horizon = *times.last().expect("nonempty");
    let value = values.iter().position(|&v| past(v)).map(|i| {
        if i == 0 {
            return times[0];
        }
        let (t0, t1, v0, v1) = (times[i - 1], times[i], values[i - 1], values[i]);
        t0 + (threshold - v0) / (v1 - v0) * (t1 - t0)
    });
    Ok(CharacteristicTime {
        threshold,
        value,
        horizon,
    })
}

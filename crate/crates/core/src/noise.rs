//! Classical stray-field realizations and seeded random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DdError, Result};

/// Stream domains; keep distinct so different consumers never share draws.
pub(crate) const DOMAIN_STRAY: u64 = 1;
pub(crate) const DOMAIN_BATH: u64 = 2;
pub(crate) const DOMAIN_DIPOLAR: u64 = 3;
pub(crate) const DOMAIN_EMPIRICAL: u64 = 4;
pub(crate) const DOMAIN_COUPLINGS: u64 = 5;

/// ChaCha8 keyed by `(seed, domain)` with the stream id selecting the
/// counter-mode stream, so `(seed, domain, stream)` triples never overlap.
pub(crate) fn stream_rng(seed: u64, domain: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrayFieldConfig {
    pub b_c: f64,
    /// `None` is the quasi-static limit.
    pub tau_c: Option<f64>,
    pub realizations: usize,
    pub seed: u64,
}

impl StrayFieldConfig {
    pub fn quasi_static(realizations: usize, seed: u64) -> Self {
        Self {
            b_c: 1.0,
            tau_c: None,
            realizations,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b_c > 0.0 && self.b_c.is_finite()) {
            return Err(DdError::InvalidParameter(format!("b_c = {}", self.b_c)));
        }
        if let Some(tc) = self.tau_c {
            if !(tc > 0.0) {
                return Err(DdError::InvalidParameter(format!("tau_c = {tc}")));
            }
        }
        if self.realizations == 0 {
            return Err(DdError::InvalidParameter("realizations = 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSegment {
    pub start: f64,
    pub end: f64,
    pub b: [f64; 3],
}

/// One piecewise-constant field trajectory on `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseRealization {
    pub segments: Vec<NoiseSegment>,
    pub seed: u64,
    pub index: usize,
}

impl NoiseRealization {
    /// A single fixed field; handy for deterministic runs.
    pub fn constant(b: [f64; 3], total_time: f64) -> Self {
        Self {
            segments: vec![NoiseSegment {
                start: 0.0,
                end: total_time,
                b,
            }],
            seed: 0,
            index: 0,
        }
    }

    pub fn covered(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    /// Index of the segment containing `t` (segments are half-open, the last is closed).
    pub fn segment_index(&self, t: f64) -> usize {
        let k = self.segments.partition_point(|s| s.end <= t);
        k.min(self.segments.len().saturating_sub(1))
    }

    pub fn field_at(&self, t: f64) -> [f64; 3] {
        self.segments[self.segment_index(t)].b
    }
}

/// Draws realization `index`: each component uniform on `[−b_c, b_c]`,
/// redrawn at every multiple of `tau_c`.
pub fn sample_realization(
    cfg: &StrayFieldConfig,
    index: usize,
    total_time: f64,
) -> Result<NoiseRealization> {
    cfg.validate()?;
    if index >= cfg.realizations {
        return Err(DdError::InvalidParameter(format!(
            "realization {index} out of range for {}",
            cfg.realizations
        )));
    }
    if !(total_time >= 0.0 && total_time.is_finite()) {
        return Err(DdError::InvalidParameter(format!("total time {total_time}")));
    }
    let mut rng = stream_rng(cfg.seed, DOMAIN_STRAY, index as u64);
    let count = match cfg.tau_c {
        None => 1,
        Some(tc) => ((total_time / tc - 1e-9).ceil() as usize).max(1),
    };
    let mut segments = Vec::with_capacity(count);
    for n in 0..count {
        let (start, end) = match cfg.tau_c {
            None => (0.0, total_time),
            Some(tc) => (n as f64 * tc, ((n + 1) as f64 * tc).min(total_time)),
        };
        let end = if n + 1 == count { total_time } else { end };
        segments.push(NoiseSegment {
            start,
            end,
            b: draw_field(&mut rng, cfg.b_c),
        });
    }
    Ok(NoiseRealization {
        segments,
        seed: cfg.seed,
        index,
    })
}

fn draw_field(rng: &mut ChaCha8Rng, b_c: f64) -> [f64; 3] {
    [
        rng.random_range(-b_c..=b_c),
        rng.random_range(-b_c..=b_c),
        rng.random_range(-b_c..=b_c),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldMoments {
    pub mean: [f64; 3],
    pub variance: [f64; 3],
}

/// Sample mean and variance of `n_samples` field draws.
pub fn empirical_moments(cfg: &StrayFieldConfig, n_samples: usize) -> Result<FieldMoments> {
    cfg.validate()?;
    if n_samples == 0 {
        return Err(DdError::Empty("samples"));
    }
    let mut rng = stream_rng(cfg.seed, DOMAIN_EMPIRICAL, 0);
    let mut sum = [0.0; 3];
    let mut sq = [0.0; 3];
    for _ in 0..n_samples {
        let b = draw_field(&mut rng, cfg.b_c);
        for a in 0..3 {
            sum[a] += b[a];
            sq[a] += b[a] * b[a];
        }
    }
    let n = n_samples as f64;
    let mean = sum.map(|s| s / n);
    let mut variance = [0.0; 3];
    for a in 0..3 {
        variance[a] = sq[a] / n - mean[a] * mean[a];
    }
    Ok(FieldMoments { mean, variance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(tau_c: Option<f64>) -> StrayFieldConfig {
        StrayFieldConfig {
            b_c: 1.0,
            tau_c,
            realizations: 4,
            seed: 7,
        }
    }

    #[test]
    fn quasi_static_is_one_segment() {
        let r = sample_realization(&cfg(None), 0, 12.5).unwrap();
        assert_eq!(r.segments.len(), 1);
        assert_eq!((r.segments[0].start, r.segments[0].end), (0.0, 12.5));
    }

    #[test]
    fn resampling_boundaries() {
        let r = sample_realization(&cfg(Some(0.5)), 1, 100.0).unwrap();
        assert_eq!(r.segments.len(), 200);
        for (n, s) in r.segments.iter().enumerate() {
            assert_eq!(s.start, n as f64 * 0.5);
            assert!(s.b.iter().all(|v| v.abs() <= 1.0));
        }
        assert_eq!(r.covered(), 100.0);
        assert_eq!(r.segment_index(0.5), 1);
        assert_eq!(r.segment_index(100.0), 199);
    }

    #[test]
    fn deterministic_and_independent() {
        let c = cfg(Some(1.0));
        let a = sample_realization(&c, 2, 10.0).unwrap();
        let b = sample_realization(&c, 2, 10.0).unwrap();
        assert_eq!(a, b);
        let other = sample_realization(&c, 3, 10.0).unwrap();
        assert_ne!(a.segments[0].b, other.segments[0].b);
        assert!(sample_realization(&c, 4, 10.0).is_err());
    }

    #[test]
    fn uniform_moments() {
        let m = empirical_moments(&cfg(None), 1_000_000).unwrap();
        for a in 0..3 {
            assert!(m.mean[a].abs() <= 0.01);
            assert!((m.variance[a] - 1.0 / 3.0).abs() <= 0.05 / 3.0);
        }
        let wide = StrayFieldConfig { b_c: 2.0, ..cfg(None) };
        let w = empirical_moments(&wide, 1_000_000).unwrap();
        for a in 0..3 {
            assert!((w.variance[a] / m.variance[a] - 4.0).abs() < 1e-9);
        }
    }
}

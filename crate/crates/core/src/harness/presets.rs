//! Desk-scale presets, one per experiment id. Every parameter is spelled out.

use super::config::*;
use crate::propagation::{BecEngine, Engine};
use crate::spin::TwistKind;

const TAU: f64 = 0.05;
const SEED: u64 = 20_240_601;

fn offsets(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

fn detunings() -> Vec<f64> {
    vec![-2.0, -1.0, 0.0, 1.0, 2.0]
}

fn bec_base(id: ExperimentId) -> ExperimentConfig {
    ExperimentConfig {
        version: CONFIG_VERSION,
        experiment: id,
        scale: Scale::Desk,
        seed: SEED,
        workers: 1,
        output: None,
        model: ModelConfig::Bec { j: 100.0, c2p: -0.5 },
        noise: NoiseSettings {
            b_c: 1.0,
            tau_c_values: Vec::new(),
            realizations: 20,
        },
        initial: InitialSettings {
            kind: InitialKind::Css,
            target_xi2: 1.0,
            twist: TwistKind::TwoAxis,
        },
        run: RunSettings {
            tau: TAU,
            harmonic: 1,
            omega_offsets: detunings(),
            epsilons: vec![0.0],
            horizon: 400.0,
            pulse_budget: None,
            shot_points: 50,
            trajectory_stride: 10,
        },
        protocols: vec![
            ProtocolSpec::new(ProtocolKind::UniDd, TAU),
            ProtocolSpec::new(ProtocolKind::Fe, TAU),
        ],
        propagator: PropagatorSettings {
            engine: Engine::Chebyshev,
            bec_engine: BecEngine::Collective,
            cheb_tol: 1e-12,
            spectral_margin: 1.05,
        },
    }
}

fn qd_base(id: ExperimentId) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelConfig::Qd {
            nx: 4,
            ny: 3,
            wx: 1.5,
            wy: 2.0,
            x0: 0.1,
            y0: 0.2,
            scale: 1.0,
            gamma_max: 0.01,
            bath_samples: 1,
        },
        noise: NoiseSettings {
            b_c: 1.0,
            tau_c_values: Vec::new(),
            realizations: 1,
        },
        run: RunSettings {
            tau: TAU,
            harmonic: 1,
            omega_offsets: vec![0.0],
            epsilons: vec![0.0],
            horizon: 40.0,
            pulse_budget: None,
            shot_points: 20,
            trajectory_stride: 2,
        },
        ..bec_base(id)
    }
}

/// Preset for `id`.
pub fn preset(id: ExperimentId) -> ExperimentConfig {
    match id {
        ExperimentId::Fig2a => bec_base(id),
        ExperimentId::Fig2b => {
            let mut c = bec_base(id);
            c.run.omega_offsets = offsets(-15.0, 15.0, 0.5);
            c.run.trajectory_stride = 0;
            c
        }
        ExperimentId::Fig2c | ExperimentId::Fig2d => {
            let mut c = bec_base(id);
            c.initial = InitialSettings {
                kind: InitialKind::Sss,
                target_xi2: 0.01,
                twist: TwistKind::TwoAxis,
            };
            if id == ExperimentId::Fig2d {
                c.run.omega_offsets = offsets(-15.0, 15.0, 0.5);
                c.run.trajectory_stride = 0;
            }
            c
        }
        ExperimentId::Fig3a => {
            let mut c = qd_base(id);
            c.run.omega_offsets = detunings();
            c.run.horizon = 200.0;
            c.protocols = vec![
                ProtocolSpec::new(ProtocolKind::UniDd, TAU),
                ProtocolSpec::new(ProtocolKind::Fe, TAU).with_horizon(10.0),
                ProtocolSpec::new(ProtocolKind::Hahn, TAU).with_bias(false).with_horizon(20.0),
                ProtocolSpec::new(ProtocolKind::Pdd, TAU).with_horizon(100.0),
            ];
            c
        }
        ExperimentId::Fig3b => {
            let mut c = qd_base(id);
            c.run.omega_offsets = offsets(-10.0, 10.0, 1.0);
            c.run.trajectory_stride = 0;
            c.protocols = vec![
                ProtocolSpec::new(ProtocolKind::UniDd, TAU),
                ProtocolSpec::new(ProtocolKind::Fe, TAU),
            ];
            c
        }
        ExperimentId::Fig4 => {
            let mut c = qd_base(id);
            c.run.epsilons = vec![0.0, 0.01, 0.03];
            c.protocols = vec![
                ProtocolSpec::new(ProtocolKind::UniDd, TAU),
                ProtocolSpec::new(ProtocolKind::UniDdMod, TAU),
                ProtocolSpec::new(ProtocolKind::Fe, TAU),
            ];
            c
        }
        ExperimentId::S1 => {
            let mut c = bec_base(id);
            c.noise.tau_c_values = vec![0.5, 3.0, 30.0];
            c.run.omega_offsets = vec![0.0];
            c.run.horizon = 100.0;
            c.run.shot_points = 500;
            c.protocols = vec![
                ProtocolSpec::new(ProtocolKind::UniDd, TAU),
                ProtocolSpec::new(ProtocolKind::Hahn, TAU),
                ProtocolSpec::new(ProtocolKind::Fe, TAU),
            ];
            c
        }
        ExperimentId::S2 => {
            let mut c = qd_base(id);
            c.run.horizon = 200.0;
            c.protocols = vec![
                ProtocolSpec::new(ProtocolKind::UniDd, TAU),
                ProtocolSpec::new(ProtocolKind::UniDd, 0.1).with_label("Uni-DD(tau=0.1)"),
                ProtocolSpec::new(ProtocolKind::SuniDd, TAU),
                ProtocolSpec::new(ProtocolKind::CuniDd2, TAU),
                ProtocolSpec::new(ProtocolKind::Pdd, TAU),
                ProtocolSpec::new(ProtocolKind::Sdd, TAU),
                ProtocolSpec::new(ProtocolKind::Cdd2, TAU),
                ProtocolSpec::new(ProtocolKind::Fe, TAU),
            ];
            c
        }
        ExperimentId::S3 => {
            let mut c = qd_base(id);
            if let ModelConfig::Qd { gamma_max, .. } = &mut c.model {
                *gamma_max = 0.05;
            }
            c.run.pulse_budget = Some(210);
            c.run.horizon = 60.0;
            c.run.shot_points = 30;
            c.run.trajectory_stride = 1;
            c.protocols = vec![
                ProtocolSpec::new(ProtocolKind::UniDd, TAU),
                ProtocolSpec::new(ProtocolKind::Cudd, TAU).with_order(52),
                ProtocolSpec::new(ProtocolKind::Qdd, TAU).with_order(13),
                ProtocolSpec::new(ProtocolKind::Fe, TAU),
            ];
            c
        }
        ExperimentId::S4 => {
            let mut c = qd_base(id);
            c.model = ModelConfig::Nv {
                n: 10,
                bath_samples: 1,
            };
            c.protocols = vec![
                ProtocolSpec::new(ProtocolKind::UniDd, TAU),
                ProtocolSpec::new(ProtocolKind::Fe, TAU),
            ];
            c
        }
        ExperimentId::Custom => {
            let mut c = bec_base(id);
            c.model = ModelConfig::Bec { j: 20.0, c2p: -0.5 };
            c.noise.realizations = 4;
            c.run.omega_offsets = vec![0.0];
            c.run.horizon = 20.0;
            c
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for id in ExperimentId::ALL {
            let c = preset(id);
            c.validate().unwrap();
            assert_eq!(c.experiment, id);
            let text = c.to_toml().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c, "{}", id.name());
        }
    }

    #[test]
    fn scan_grid_brackets_magic() {
        let c = preset(ExperimentId::Fig2b);
        assert_eq!(c.run.omega_offsets.len(), 61);
        assert!(c.run.omega_offsets.contains(&0.0));
        assert_eq!(c.run.omega_offsets[0], -15.0);
    }
}

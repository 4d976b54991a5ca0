//! Experiment configuration, read from TOML. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DdError, Result};
use crate::propagation::{BecEngine, ChebyshevConfig, Engine, PropagatorConfig};
use crate::spin::TwistKind;

/// Hard limits; anything between desk scale and these only warns.
pub const MAX_BATH_SPINS: usize = 24;
pub const MAX_COLLECTIVE_J: f64 = 5000.0;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Fig2a,
    Fig2b,
    Fig2c,
    Fig2d,
    Fig3a,
    Fig3b,
    Fig4,
    S1,
    S2,
    S3,
    S4,
    Custom,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 12] = [
        Self::Fig2a,
        Self::Fig2b,
        Self::Fig2c,
        Self::Fig2d,
        Self::Fig3a,
        Self::Fig3b,
        Self::Fig4,
        Self::S1,
        Self::S2,
        Self::S3,
        Self::S4,
        Self::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig2a => "fig2a",
            Self::Fig2b => "fig2b",
            Self::Fig2c => "fig2c",
            Self::Fig2d => "fig2d",
            Self::Fig3a => "fig3a",
            Self::Fig3b => "fig3b",
            Self::Fig4 => "fig4",
            Self::S1 => "s1",
            Self::S2 => "s2",
            Self::S3 => "s3",
            Self::S4 => "s4",
            Self::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| DdError::Config(format!("unknown experiment id '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Paper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Bec {
        j: f64,
        c2p: f64,
    },
    Qd {
        nx: usize,
        ny: usize,
        wx: f64,
        wy: f64,
        x0: f64,
        y0: f64,
        scale: f64,
        gamma_max: f64,
        bath_samples: usize,
    },
    Nv {
        n: usize,
        bath_samples: usize,
    },
}

impl ModelConfig {
    pub fn is_bec(&self) -> bool {
        matches!(self, Self::Bec { .. })
    }

    /// Independent runs averaged per point: stray-field draws or bath states.
    pub fn samples(&self, noise: &NoiseSettings) -> usize {
        match self {
            Self::Bec { .. } => noise.realizations,
            Self::Qd { bath_samples, .. } | Self::Nv { bath_samples, .. } => *bath_samples,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSettings {
    pub b_c: f64,
    /// Correlation times to sweep; empty means quasi-static.
    pub tau_c_values: Vec<f64>,
    pub realizations: usize,
}

impl Default for NoiseSettings {
    fn default() -> Self {
        Self {
            b_c: 1.0,
            tau_c_values: Vec::new(),
            realizations: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Css,
    Sss,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSettings {
    pub kind: InitialKind,
    pub target_xi2: f64,
    pub twist: TwistKind,
}

impl Default for InitialSettings {
    fn default() -> Self {
        Self {
            kind: InitialKind::Css,
            target_xi2: 1.0,
            twist: TwistKind::TwoAxis,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    /// Nominal pulse delay.
    pub tau: f64,
    /// Harmonic `n` of the magic frequency `2πn/τ`.
    pub harmonic: u32,
    /// Offsets `ω − ω_m` applied to biased protocols.
    pub omega_offsets: Vec<f64>,
    /// Pulse-angle errors applied to Uni-DD variants.
    pub epsilons: Vec<f64>,
    pub horizon: f64,
    /// Common pulse count; protocols are then stretched over each time point.
    #[serde(default)]
    pub pulse_budget: Option<usize>,
    /// Time points for protocols that are rebuilt per total time.
    pub shot_points: usize,
    /// Keep every k-th trajectory sample in the CSV; 0 writes only crossing times.
    pub trajectory_stride: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Fe,
    UniDd,
    UniDdMod,
    SuniDd,
    CuniDd2,
    Hahn,
    Pdd,
    Sdd,
    Cdd2,
    Cudd,
    Qdd,
}

impl ProtocolKind {
    /// Runs under the bias field `ω = 2πn/τ + offset`; the rest use `ω = 0`.
    pub fn biased(self) -> bool {
        matches!(
            self,
            Self::UniDd | Self::UniDdMod | Self::SuniDd | Self::CuniDd2 | Self::Hahn
        )
    }

    /// Swept over the configured bias offsets; other biased kinds stay at the magic frequency.
    pub fn scanned(self) -> bool {
        matches!(self, Self::UniDd | Self::UniDdMod)
    }

    pub fn uses_epsilon(self) -> bool {
        matches!(self, Self::UniDd | Self::UniDdMod)
    }

    pub fn default_label(self) -> &'static str {
        match self {
            Self::Fe => "FE",
            Self::UniDd => "Uni-DD",
            Self::UniDdMod => "Uni-DD-mod",
            Self::SuniDd => "SUni-DD",
            Self::CuniDd2 => "CUni-DD2",
            Self::Hahn => "Hahn",
            Self::Pdd => "PDD",
            Self::Sdd => "SDD",
            Self::Cdd2 => "CDD2",
            Self::Cudd => "CUDD",
            Self::Qdd => "QDD",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    /// Pulse delay; defaults to the run's `tau`.
    #[serde(default)]
    pub tau: Option<f64>,
    /// Order for CUDD / QDD.
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub label: Option<String>,
    /// Overrides the run horizon for this protocol.
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Runs under the magic bias field; defaults to the kind's convention.
    #[serde(default)]
    pub bias: Option<bool>,
}

impl ProtocolSpec {
    pub fn new(kind: ProtocolKind, tau: f64) -> Self {
        Self {
            kind,
            tau: Some(tau),
            order: None,
            label: Some(kind.default_label().to_string()),
            horizon: None,
            bias: None,
        }
    }

    pub fn biased(&self) -> bool {
        self.bias.unwrap_or(self.kind.biased())
    }

    pub fn with_bias(mut self, bias: bool) -> Self {
        self.bias = Some(bias);
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = Some(order);
        self.label = Some(format!("{}{}", self.kind.default_label(), order));
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.kind.default_label().to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorSettings {
    pub engine: Engine,
    pub bec_engine: BecEngine,
    pub cheb_tol: f64,
    pub spectral_margin: f64,
}

impl Default for PropagatorSettings {
    fn default() -> Self {
        let c = ChebyshevConfig::default();
        Self {
            engine: Engine::Chebyshev,
            bec_engine: BecEngine::Collective,
            cheb_tol: c.tol,
            spectral_margin: c.spectral_margin,
        }
    }
}

impl PropagatorSettings {
    pub fn to_config(&self) -> PropagatorConfig {
        PropagatorConfig {
            engine: self.engine,
            bec_engine: self.bec_engine,
            cheb: ChebyshevConfig {
                tol: self.cheb_tol,
                spectral_margin: self.spectral_margin,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub experiment: ExperimentId,
    pub scale: Scale,
    pub seed: u64,
    pub workers: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub model: ModelConfig,
    #[serde(default)]
    pub noise: NoiseSettings,
    #[serde(default)]
    pub initial: InitialSettings,
    pub run: RunSettings,
    pub protocols: Vec<ProtocolSpec>,
    #[serde(default)]
    pub propagator: PropagatorSettings,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| DdError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| DdError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DdError::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            ));
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.protocols.is_empty() {
            return bad("no protocols given".into());
        }
        let r = &self.run;
        if !(r.tau > 0.0 && r.horizon > 0.0 && r.horizon.is_finite()) {
            return bad(format!("tau = {}, horizon = {}", r.tau, r.horizon));
        }
        if r.harmonic == 0 {
            return bad("harmonic must be at least 1".into());
        }
        if r.omega_offsets.is_empty() || r.epsilons.is_empty() {
            return bad("omega_offsets and epsilons must be nonempty".into());
        }
        if r.epsilons.iter().any(|e| !(0.0..1.0).contains(e)) {
            return bad(format!("epsilons {:?}", r.epsilons));
        }
        if r.shot_points == 0 {
            return bad("shot_points must be at least 1".into());
        }
        if let Some(b) = r.pulse_budget {
            if b == 0 || b % 2 == 1 {
                return bad(format!("pulse_budget {b} must be even and positive"));
            }
        }
        for p in &self.protocols {
            if let Some(t) = p.tau {
                if !(t > 0.0) {
                    return bad(format!("protocol {} tau = {t}", p.label()));
                }
            }
            if let Some(h) = p.horizon {
                if !(h > 0.0 && h.is_finite()) {
                    return bad(format!("protocol {} horizon = {h}", p.label()));
                }
            }
            if matches!(p.kind, ProtocolKind::Cudd | ProtocolKind::Qdd) && p.order.is_none() {
                return bad(format!("protocol {} needs an order", p.label()));
            }
        }
        let sites = match &self.model {
            ModelConfig::Qd { nx, ny, .. } => nx * ny,
            ModelConfig::Nv { n, .. } => *n,
            ModelConfig::Bec { .. } => 0,
        };
        if sites > MAX_BATH_SPINS {
            return Err(DdError::TooLarge {
                what: "bath spins",
                dim: sites,
                limit: MAX_BATH_SPINS,
            });
        }
        match &self.model {
            ModelConfig::Bec { j, .. } => {
                if !(*j >= 0.5) {
                    return bad(format!("j = {j}"));
                }
                if *j > MAX_COLLECTIVE_J {
                    return Err(DdError::TooLarge {
                        what: "collective spin j",
                        dim: *j as usize,
                        limit: MAX_COLLECTIVE_J as usize,
                    });
                }
                crate::noise::StrayFieldConfig {
                    b_c: self.noise.b_c,
                    tau_c: None,
                    realizations: self.noise.realizations,
                    seed: self.seed,
                }
                .validate()?;
                if self.noise.tau_c_values.iter().any(|t| !(*t > 0.0)) {
                    return bad(format!("tau_c_values {:?}", self.noise.tau_c_values));
                }
                if !(self.initial.target_xi2 > 0.0 && self.initial.target_xi2 <= 1.0) {
                    return bad(format!("target_xi2 = {}", self.initial.target_xi2));
                }
            }
            ModelConfig::Qd {
                nx,
                ny,
                bath_samples,
                gamma_max,
                ..
            } => {
                if nx * ny == 0 || *bath_samples == 0 || !(*gamma_max >= 0.0) {
                    return bad("qd model needs nx, ny, bath_samples >= 1 and gamma_max >= 0".into());
                }
            }
            ModelConfig::Nv { n, bath_samples } => {
                if *n == 0 || *bath_samples == 0 {
                    return bad("nv model needs n, bath_samples >= 1".into());
                }
            }
        }
        self.propagator.to_config().cheb.validate()
    }

    /// Notes on runs that exceed desk scale.
    pub fn resource_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        match &self.model {
            ModelConfig::Bec { j, .. } if *j > 200.0 => {
                out.push(format!("collective spin j = {j} is beyond desk scale"))
            }
            ModelConfig::Qd { nx, ny, .. } if nx * ny > 12 => out.push(format!(
                "{} bath spins: state dimension {}",
                nx * ny,
                2usize << (nx * ny)
            )),
            ModelConfig::Nv { n, .. } if *n > 12 => {
                out.push(format!("{n} bath spins: state dimension {}", 2usize << n))
            }
            _ => {}
        }
        if self.model.samples(&self.noise) > 50 {
            out.push(format!(
                "{} samples per point is beyond desk scale",
                self.model.samples(&self.noise)
            ));
        }
        out
    }
}

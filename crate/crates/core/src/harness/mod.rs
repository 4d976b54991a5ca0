//! Experiment runner: expands a config into parameter points, runs them on a
//! bounded worker pool and writes results in a fixed order.

pub mod config;
pub mod presets;

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

pub use config::*;
pub use presets::preset;

use crate::avg_hamiltonian::{omega_ladder, suppression_factor, FerSubject, SuppressionPoint};
use crate::error::{DdError, Result};
use crate::linalg::CMatrix;
use crate::models::{hyperfine_couplings, sample_dipolar, BecModel, CentralSpinSystem, DipolarBond, HyperfineGrid, NvModel, QdModel};
use crate::noise::{sample_realization, NoiseRealization, StrayFieldConfig};
use crate::observables::{reduced_electron, CharacteristicTime, Metric, MetricCurve};
use crate::operator::StateVector;
use crate::propagation::{
    electron_benchmark_states, random_bath_state, run_bec_dense, run_collective, BecEngine,
    CentralSpinRunner, Observation, PropagatorConfig, Trajectory, TrajectoryAverager, TrajectoryMeta,
};
use crate::sequences::{self, Sequence};
use crate::spin::{
    benchmark_rotations, coherent_spin_state, collective_moments, collective_spin_operators,
    rotation_operator, squeezed_spin_state, CollectiveMoments,
};

pub const CSV_SCHEMA: &str = "ddsim-results/1";
pub const CSV_COLUMNS: &str = "experiment,point_id,protocol,omega,tau,epsilon,tau_c,t,metric,value,r,seed";

/// `2πn/τ`.
pub fn magic_omega(tau: f64, n: u32) -> Result<f64> {
    if !(tau > 0.0) || n == 0 {
        return Err(DdError::InvalidParameter(format!("tau = {tau}, n = {n}")));
    }
    Ok(2.0 * PI * n as f64 / tau)
}

/// Threshold and CSV name of the characteristic time for `metric`.
pub fn threshold_of(metric: Metric) -> (f64, &'static str) {
    match metric {
        Metric::SpinAvg | Metric::Fidelity => (0.9, "T0.9"),
        Metric::Xi2 => (0.05, "T0.05"),
        Metric::Xi2Transverse => (0.05, "T0.05_transverse"),
    }
}

/// One parameter point of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub id: usize,
    pub protocol: ProtocolSpec,
    pub label: String,
    pub omega_offset: f64,
    /// Bias frequency; `None` when it changes with the time point.
    pub omega: Option<f64>,
    /// Pulse delay; `None` when it changes with the time point.
    pub tau: Option<f64>,
    pub epsilon: f64,
    pub tau_c: Option<f64>,
    pub horizon: f64,
}

#[derive(Clone, Debug)]
pub struct PointResult {
    pub point: Point,
    /// Worst case over the benchmark initial states.
    pub curves: Vec<MetricCurve>,
    /// Per initial state, in benchmark order.
    pub per_state: Vec<(String, Vec<MetricCurve>)>,
    pub samples: usize,
}

impl PointResult {
    pub fn curve(&self, metric: Metric) -> Option<&MetricCurve> {
        self.curves.iter().find(|c| c.metric == metric)
    }

    pub fn characteristic(&self, metric: Metric) -> Option<CharacteristicTime> {
        let c = self.curve(metric)?;
        c.crossing(threshold_of(metric).0).ok()
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub points: Vec<PointResult>,
    pub warnings: Vec<String>,
}

impl ExperimentResult {
    pub fn by_label<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a PointResult> + 'a {
        self.points.iter().filter(move |p| p.point.label == label)
    }

    /// First point with this label, offset, error and correlation time.
    pub fn find<'a>(
        &'a self,
        label: &'a str,
        omega_offset: f64,
        epsilon: f64,
        tau_c: Option<f64>,
    ) -> Option<&'a PointResult> {
        self.by_label(label).find(|p| {
            (p.point.omega_offset - omega_offset).abs() < 1e-12
                && (p.point.epsilon - epsilon).abs() < 1e-12
                && p.point.tau_c == tau_c
        })
    }

    pub fn to_csv(&self) -> Result<String> {
        let cfg = &self.config;
        let mut out = String::new();
        writeln!(out, "# schema={CSV_SCHEMA}").unwrap();
        for (k, v) in provenance(cfg)? {
            writeln!(out, "# {k}={v}").unwrap();
        }
        for w in &self.warnings {
            writeln!(out, "# warning={w}").unwrap();
        }
        writeln!(out, "{CSV_COLUMNS}").unwrap();
        let exp = cfg.experiment.name();
        let stride = cfg.run.trajectory_stride;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for pr in &self.points {
            let p = &pr.point;
            let prefix = format!(
                "{exp},{},{},{},{},{},{}",
                p.id,
                p.label,
                opt(p.omega),
                opt(p.tau),
                p.epsilon,
                opt(p.tau_c)
            );
            let suffix = format!("{},{}", pr.samples, cfg.seed);
            for c in &pr.curves {
                if stride == 0 {
                    continue;
                }
                let last = c.times.len() - 1;
                for i in (0..=last).filter(|i| i % stride == 0 || *i == last) {
                    writeln!(
                        out,
                        "{prefix},{},{},{},{suffix}",
                        c.times[i],
                        c.metric.name(),
                        c.values[i]
                    )
                    .unwrap();
                }
            }
            for c in &pr.curves {
                let (thr, name) = threshold_of(c.metric);
                let ct = c.crossing(thr)?;
                let v = ct.value.map_or_else(|| "inf".to_string(), |v| v.to_string());
                writeln!(out, "{prefix},{},{name},{v},{suffix}", ct.horizon).unwrap();
            }
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

/// Flattened config keys for the CSV header, excluding output path and worker count.
pub fn provenance(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>> {
    let value = toml::Value::try_from(cfg).map_err(|e| DdError::Config(e.to_string()))?;
    let mut out = Vec::new();
    flatten("", &value, &mut out);
    out.retain(|(k, _)| k != "output" && k != "workers");
    Ok(out)
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                flatten(&key(k), v, out);
            }
        }
        toml::Value::Array(a) if a.iter().any(|x| x.is_table()) => {
            for (i, v) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Parameter points in canonical order: protocol, correlation time, pulse
/// error, bias offset.
pub fn enumerate_points(cfg: &ExperimentConfig) -> Result<Vec<Point>> {
    let tau_cs: Vec<Option<f64>> = if cfg.model.is_bec() && !cfg.noise.tau_c_values.is_empty() {
        cfg.noise.tau_c_values.iter().map(|&t| Some(t)).collect()
    } else {
        vec![None]
    };
    let mut points = Vec::new();
    for spec in &cfg.protocols {
        let tau = spec.tau.unwrap_or(cfg.run.tau);
        let budget = cfg.run.pulse_budget.is_some()
            && matches!(spec.kind, ProtocolKind::UniDd | ProtocolKind::UniDdMod);
        let offsets = if spec.kind.scanned() && spec.biased() {
            cfg.run.omega_offsets.clone()
        } else {
            vec![0.0]
        };
        let eps = if spec.kind.uses_epsilon() {
            cfg.run.epsilons.clone()
        } else {
            vec![0.0]
        };
        let stretched = budget || matches!(spec.kind, ProtocolKind::Cudd | ProtocolKind::Qdd);
        for &tau_c in &tau_cs {
            for &epsilon in &eps {
                for &off in &offsets {
                    let omega = if !spec.biased() {
                        Some(0.0)
                    } else if budget {
                        None
                    } else {
                        Some(magic_omega(tau, cfg.run.harmonic)? + off)
                    };
                    points.push(Point {
                        id: points.len(),
                        protocol: spec.clone(),
                        label: spec.label(),
                        omega_offset: off,
                        omega,
                        tau: if stretched { None } else { Some(tau) },
                        epsilon,
                        tau_c,
                        horizon: spec.horizon.unwrap_or(cfg.run.horizon),
                    });
                }
            }
        }
    }
    Ok(points)
}

/// A protocol either repeats one cycle up to the horizon, or is rebuilt for
/// each total time and recorded only at its end.
enum Plan {
    Periodic { seq: Sequence, omega: f64 },
    Shots(Vec<Shot>),
}

struct Shot {
    t: f64,
    seq: Sequence,
    omega: f64,
}

fn cycles_within(horizon: f64, cycle_time: f64) -> usize {
    ((horizon / cycle_time + 1e-9).floor() as usize).max(1)
}

fn check_budget(seq: &Sequence, budget: Option<usize>) -> Result<()> {
    match budget {
        Some(b) if seq.pulse_count() != b => Err(DdError::PulseBudget {
            protocol: seq.label.clone(),
            expected: b,
            actual: seq.pulse_count(),
        }),
        _ => Ok(()),
    }
}

fn plan(cfg: &ExperimentConfig, p: &Point) -> Result<Plan> {
    let spec = &p.protocol;
    let tau = spec.tau.unwrap_or(cfg.run.tau);
    let h = p.horizon;
    let budget = cfg.run.pulse_budget;
    let n_shots = cfg.run.shot_points;
    let even_grid = || (1..=n_shots).map(|j| h * j as f64 / n_shots as f64);
    let periodic = |seq: Sequence| -> Result<Plan> {
        if spec.kind != ProtocolKind::Fe {
            check_budget(&seq, budget)?;
        }
        Ok(Plan::Periodic {
            seq,
            omega: p.omega.unwrap_or(0.0),
        })
    };
    use ProtocolKind as K;
    match spec.kind {
        K::Fe => periodic(sequences::free_evolution(2.0 * tau, cycles_within(h, 2.0 * tau))?),
        K::UniDd | K::UniDdMod if budget.is_none() => periodic(sequences::uni_dd(
            tau,
            cycles_within(h, 2.0 * tau),
            p.epsilon,
            spec.kind == K::UniDdMod,
        )?),
        K::UniDd | K::UniDdMod => {
            let np = budget.expect("budget mode");
            even_grid()
                .map(|t| {
                    let tau_t = t / np as f64;
                    let mut seq =
                        sequences::uni_dd(tau_t, np / 2, p.epsilon, spec.kind == K::UniDdMod)?;
                    seq.label = p.label.clone();
                    check_budget(&seq, budget)?;
                    Ok(Shot {
                        t,
                        seq,
                        omega: magic_omega(tau_t, cfg.run.harmonic)? + p.omega_offset,
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(Plan::Shots)
        }
        K::SuniDd => periodic(sequences::suni_dd(tau, cycles_within(h, 4.0 * tau))?),
        K::CuniDd2 => periodic(sequences::concat_uni(2, tau, cycles_within(h, 16.0 * tau))?),
        K::Pdd => periodic(sequences::pdd(tau, cycles_within(h, 4.0 * tau))?),
        K::Sdd => periodic(sequences::sdd(tau, cycles_within(h, 8.0 * tau))?),
        K::Cdd2 => periodic(sequences::cdd2(tau, cycles_within(h, 16.0 * tau))?),
        K::Hahn => {
            let omega = p.omega.unwrap_or(0.0);
            let k_max = cycles_within(h, 2.0 * tau);
            let stride = k_max.div_ceil(n_shots).max(1);
            (1..=k_max)
                .filter(|k| k % stride == 0)
                .map(|k| {
                    let t = 2.0 * tau * k as f64;
                    let seq = sequences::hahn(t, Some(omega))?;
                    check_budget(&seq, budget)?;
                    Ok(Shot { t, seq, omega })
                })
                .collect::<Result<Vec<_>>>()
                .map(Plan::Shots)
        }
        K::Cudd | K::Qdd => {
            let order = spec.order.ok_or_else(|| DdError::Config("missing order".into()))?;
            even_grid()
                .map(|t| {
                    let mut seq = if spec.kind == K::Cudd {
                        sequences::cudd(order, t)?
                    } else {
                        sequences::qdd(order, t)?
                    };
                    seq.label = p.label.clone();
                    check_budget(&seq, budget)?;
                    Ok(Shot { t, seq, omega: 0.0 })
                })
                .collect::<Result<Vec<_>>>()
                .map(Plan::Shots)
        }
    }
}

enum Environment {
    Bec {
        j: f64,
        c2p: f64,
        initial: Vec<StateVector>,
        moments: Vec<CollectiveMoments>,
        /// Realizations per correlation time, sampled over the longest horizon.
        noise: Vec<(Option<f64>, Vec<NoiseRealization>)>,
    },
    CentralSpin {
        couplings: Vec<f64>,
        dipolar: Vec<DipolarBond>,
        nv: bool,
        initial: Vec<StateVector>,
        baths: Vec<StateVector>,
    },
}

struct Context {
    cfg: ExperimentConfig,
    prop: PropagatorConfig,
    env: Environment,
    state_labels: Vec<&'static str>,
}

impl Context {
    fn new(cfg: &ExperimentConfig, points: &[Point]) -> Result<Self> {
        let horizon = points.iter().map(|p| p.horizon).fold(0.0, f64::max);
        let state_labels: Vec<&'static str> = benchmark_rotations().iter().map(|(n, _)| *n).collect();
        let env = match &cfg.model {
            ModelConfig::Bec { j, c2p } => {
                let initial = bec_initial_states(*j, &cfg.initial)?;
                let spin = crate::spin::SpinQuantum::new(*j)?;
                let moments = initial
                    .iter()
                    .map(|s| collective_moments(spin, s))
                    .collect::<Result<Vec<_>>>()?;
                let tau_cs: BTreeSet<u64> = points
                    .iter()
                    .map(|p| p.tau_c.map_or(u64::MAX, f64::to_bits))
                    .collect();
                let mut noise = Vec::new();
                for bits in tau_cs {
                    let tau_c = (bits != u64::MAX).then(|| f64::from_bits(bits));
                    let sc = StrayFieldConfig {
                        b_c: cfg.noise.b_c,
                        tau_c,
                        realizations: cfg.noise.realizations,
                        seed: cfg.seed,
                    };
                    let draws = (0..sc.realizations)
                        .map(|i| sample_realization(&sc, i, horizon * (1.0 + 1e-9)))
                        .collect::<Result<Vec<_>>>()?;
                    noise.push((tau_c, draws));
                }
                Environment::Bec {
                    j: *j,
                    c2p: *c2p,
                    initial,
                    moments,
                    noise,
                }
            }
            ModelConfig::Qd {
                nx,
                ny,
                wx,
                wy,
                x0,
                y0,
                scale,
                gamma_max,
                bath_samples,
            } => {
                let grid = HyperfineGrid {
                    nx: *nx,
                    ny: *ny,
                    wx: *wx,
                    wy: *wy,
                    x0: *x0,
                    y0: *y0,
                    scale: *scale,
                    coords: None,
                };
                let n = grid.sites();
                Environment::CentralSpin {
                    couplings: hyperfine_couplings(&grid)?,
                    dipolar: sample_dipolar(&grid, *gamma_max, cfg.seed),
                    nv: false,
                    initial: electron_benchmark_states().into_iter().map(|(_, s)| s).collect(),
                    baths: (0..*bath_samples).map(|s| random_bath_state(n, cfg.seed, s)).collect(),
                }
            }
            ModelConfig::Nv { n, bath_samples } => Environment::CentralSpin {
                couplings: NvModel::random(*n, 0.0, cfg.seed)?.couplings,
                dipolar: Vec::new(),
                nv: true,
                initial: electron_benchmark_states().into_iter().map(|(_, s)| s).collect(),
                baths: (0..*bath_samples).map(|s| random_bath_state(*n, cfg.seed, s)).collect(),
            },
        };
        Ok(Self {
            cfg: cfg.clone(),
            prop: cfg.propagator.to_config(),
            env,
            state_labels,
        })
    }

    fn metrics(&self) -> Vec<Metric> {
        match (&self.env, self.cfg.initial.kind) {
            (Environment::Bec { .. }, InitialKind::Css) => vec![Metric::SpinAvg],
            (Environment::Bec { .. }, InitialKind::Sss) => {
                vec![Metric::SpinAvg, Metric::Xi2, Metric::Xi2Transverse]
            }
            (Environment::CentralSpin { .. }, _) => vec![Metric::Fidelity],
        }
    }

    fn system(&self, omega: f64) -> Result<CentralSpinSystem> {
        match &self.env {
            Environment::CentralSpin {
                couplings,
                dipolar,
                nv,
                ..
            } => {
                if *nv {
                    NvModel::new(couplings.clone(), omega)?.system()
                } else {
                    QdModel::new(couplings.clone(), dipolar.clone(), omega)?.system()
                }
            }
            Environment::Bec { .. } => Err(DdError::Unsupported("central-spin system of a BEC model".into())),
        }
    }

    fn runner_for(&self, runners: &mut Vec<(u64, CentralSpinRunner)>, omega: f64) -> Result<usize> {
        if let Some(i) = runners.iter().position(|(w, _)| *w == omega.to_bits()) {
            return Ok(i);
        }
        // budget-mode shots use a new frequency per time point
        if runners.len() > 4 {
            runners.remove(0);
        }
        runners.push((omega.to_bits(), CentralSpinRunner::new(&self.system(omega)?, &self.prop)?));
        Ok(runners.len() - 1)
    }

    /// Sample-averaged trajectory of one initial state at one point.
    fn run_state(&self, point: &Point, plan: &Plan, state: usize) -> Result<Trajectory> {
        let meta = TrajectoryMeta {
            label: point.label.clone(),
            realization: 0,
        };
        match &self.env {
            Environment::Bec {
                j,
                c2p,
                initial,
                moments,
                noise,
            } => {
                let draws = &noise
                    .iter()
                    .find(|(tc, _)| *tc == point.tau_c)
                    .expect("sampled for every point")
                    .1;
                let mut avg = TrajectoryAverager::new(draws.len());
                for real in draws {
                    let run = |omega: f64, seq: &Sequence| -> Result<Trajectory> {
                        let model = BecModel::new(*j, *c2p, omega)?;
                        match self.prop.bec_engine {
                            BecEngine::Collective => run_collective(&model, seq, &moments[state], real),
                            BecEngine::Dense => run_bec_dense(&model, seq, &initial[state], real),
                        }
                    };
                    let traj = match plan {
                        Plan::Periodic { seq, omega } => run(*omega, seq)?,
                        Plan::Shots(shots) => {
                            let mut times = vec![0.0];
                            let mut observations = vec![Observation::Collective(moments[state])];
                            for s in shots {
                                let tr = run(s.omega, &s.seq)?;
                                times.push(s.t);
                                observations.push(*tr.observations.last().expect("nonempty"));
                            }
                            Trajectory {
                                times,
                                observations,
                                meta: meta.clone(),
                            }
                        }
                    };
                    avg.push(&traj)?;
                }
                avg.finish()
            }
            Environment::CentralSpin { initial, baths, .. } => {
                let n_bath = self.system(0.0)?.n_bath;
                let mut avg = TrajectoryAverager::new(baths.len());
                let mut runners: Vec<(u64, CentralSpinRunner)> = Vec::new();
                for (s, bath) in baths.iter().enumerate() {
                    let psi0 = initial[state].tensor(bath);
                    let traj = match plan {
                        Plan::Periodic { seq, omega } => {
                            let i = self.runner_for(&mut runners, *omega)?;
                            runners[i].1.run(seq, &psi0, s)?
                        }
                        Plan::Shots(shots) => {
                            let mut times = vec![0.0];
                            let mut observations =
                                vec![Observation::Electron(reduced_electron(psi0.amplitudes(), n_bath))];
                            for sh in shots {
                                let i = self.runner_for(&mut runners, sh.omega)?;
                                let out = runners[i].1.final_state(&sh.seq, &psi0)?;
                                times.push(sh.t);
                                observations.push(Observation::Electron(reduced_electron(out.amplitudes(), n_bath)));
                            }
                            Trajectory {
                                times,
                                observations,
                                meta: TrajectoryMeta {
                                    label: point.label.clone(),
                                    realization: s,
                                },
                            }
                        }
                    };
                    avg.push(&traj)?;
                }
                avg.finish()
            }
        }
    }
}


/// Benchmark initial states along x, y, z, −z. A squeezed state is prepared
/// with its mean along +x and rotated as a whole.
fn bec_initial_states(j: f64, init: &InitialSettings) -> Result<Vec<StateVector>> {
    match init.kind {
        InitialKind::Css => [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]
            .iter()
            .map(|d| coherent_spin_state(j, *d))
            .collect(),
        InitialKind::Sss => {
            let sss = squeezed_spin_state(j, init.target_xi2, init.twist)?;
            let ops = collective_spin_operators(j)?;
            Ok(benchmark_rotations()
                .iter()
                .map(|(_, r)| {
                    let u: CMatrix = rotation_operator(r, &ops).to_dense();
                    sss.state.evolve_by(&u)
                })
                .collect())
        }
    }
}

/// Runs every point of `cfg` on a pool of `cfg.workers` threads. Output order
/// does not depend on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let points = enumerate_points(cfg)?;
    let ctx = Context::new(cfg, &points)?;
    let plans = points.iter().map(|p| plan(cfg, p)).collect::<Result<Vec<_>>>()?;
    let mut warnings = cfg.resource_warnings();
    let mut seen = BTreeSet::new();
    for (p, pl) in points.iter().zip(&plans) {
        let ws: Vec<&String> = match pl {
            Plan::Periodic { seq, .. } => seq.warnings.iter().collect(),
            Plan::Shots(s) => s.iter().flat_map(|s| s.seq.warnings.iter()).collect(),
        };
        if !ws.is_empty() && seen.insert(p.id) {
            warnings.push(format!("point {} ({}): {}", p.id, p.label, ws[0]));
        }
    }
    let n_states = ctx.state_labels.len();
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..n_states).map(move |s| (p, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| DdError::Config(e.to_string()))?;
    let metrics = ctx.metrics();
    let results: Vec<Result<Vec<MetricCurve>>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, s)| {
                let traj = ctx.run_state(&points[p], &plans[p], s)?;
                metrics
                    .iter()
                    .map(|&m| MetricCurve::from_trajectory(&traj, m))
                    .collect()
            })
            .collect()
    });
    let mut results = results.into_iter();
    let samples = cfg.model.samples(&cfg.noise);
    let mut out = Vec::with_capacity(points.len());
    for point in points {
        let per_state: Vec<(String, Vec<MetricCurve>)> = ctx
            .state_labels
            .iter()
            .map(|l| Ok((l.to_string(), results.next().expect("one result per task")?)))
            .collect::<Result<_>>()?;
        let curves = (0..metrics.len())
            .map(|m| {
                let cs: Vec<MetricCurve> = per_state.iter().map(|(_, c)| c[m].clone()).collect();
                crate::observables::worst_case(&cs)
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(PointResult {
            point,
            curves,
            per_state,
            samples,
        });
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        points: out,
        warnings,
    })
}

/// Runs a protocol comparison. With a pulse budget every protocol except free
/// evolution must apply exactly that many pulses.
pub fn compare_protocols(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    if let Some(b) = cfg.run.pulse_budget {
        for p in enumerate_points(cfg)? {
            if p.protocol.kind == ProtocolKind::Fe {
                continue;
            }
            // plans check the count of every sequence they build
            plan(cfg, &p).map_err(|e| match e {
                DdError::PulseBudget { .. } => e,
                other => DdError::Config(format!("protocol {} under budget {b}: {other}", p.label)),
            })?;
        }
    }
    run_experiment(cfg)
}

/// Effective-Hamiltonian residuals along the magic line.
#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub classical: Vec<(String, Vec<SuppressionPoint>)>,
    pub quantum: Vec<SuppressionPoint>,
    pub tolerance: f64,
}

impl VerifyReport {
    fn check(points: &[SuppressionPoint], tol: f64) -> bool {
        points.first().is_some_and(|p| p.distance <= tol)
            && points.windows(2).all(|w| w[1].distance <= w[0].distance)
    }

    pub fn passed(&self) -> bool {
        self.classical.iter().all(|(_, p)| Self::check(p, self.tolerance))
            && Self::check(&self.quantum, self.tolerance)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut table = |name: &str, pts: &[SuppressionPoint]| {
            let ok = Self::check(pts, self.tolerance);
            writeln!(out, "{name}: {}", if ok { "PASS" } else { "FAIL" }).unwrap();
            writeln!(out, "  omega        tau          d            ratio").unwrap();
            for p in pts {
                writeln!(
                    out,
                    "  {:<12.4} {:<12.6} {:<12.4e} {:<12.4e}",
                    p.omega, p.tau, p.distance, p.coupling_ratio
                )
                .unwrap();
            }
        };
        for (name, pts) in &self.classical {
            table(name, pts);
        }
        table("quantum N=4", &self.quantum);
        out
    }
}

/// Classical check at `J = 20` for a few stray fields with `|b| ≤ 1`, quantum
/// check at `N = 4` with grid couplings; four octaves from `ω = 2π/0.05`.
pub fn verify_suite() -> Result<VerifyReport> {
    let ladder = omega_ladder(2.0 * PI / 0.05, 4);
    let model = BecModel::new(20.0, -0.5, 1.0)?;
    let fields: [[f64; 3]; 3] = [[0.5, -0.6, 0.4], [0.1, 0.7, -0.6], [-0.55, 0.35, 0.55]];
    let classical = fields
        .iter()
        .map(|&b| {
            let pts = suppression_factor(FerSubject::Classical { model: &model, b }, &ladder)?;
            Ok((format!("classical J=20 b={b:?}"), pts))
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = HyperfineGrid::with_dims(2, 2);
    let qd = QdModel::new(hyperfine_couplings(&grid)?, Vec::new(), 1.0)?;
    let quantum = suppression_factor(FerSubject::Quantum(&qd), &ladder)?;
    Ok(VerifyReport {
        classical,
        quantum,
        tolerance: 0.05,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magic_frequencies() {
        assert!((magic_omega(0.05, 1).unwrap() - 125.663_706_143_591_7).abs() < 1e-9);
        assert!((magic_omega(0.1, 1).unwrap() - 62.831_853_071_795_86).abs() < 1e-9);
        assert!((magic_omega(0.05, 2).unwrap() - 251.327_412_287_183_4).abs() < 1e-9);
        assert!(magic_omega(0.0, 1).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = preset(ExperimentId::Custom).to_toml().unwrap();
        assert!(ExperimentConfig::from_toml(&text).is_ok());
        let bad = text.replacen("seed =", "sede = 1\nseed =", 1);
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad_model = text.replacen("kind = \"bec\"", "kind = \"bec\"\nspin = 3", 1);
        assert!(ExperimentConfig::from_toml(&bad_model).is_err());
    }

    #[test]
    fn point_order_is_canonical() {
        let cfg = preset(ExperimentId::Fig4);
        let pts = enumerate_points(&cfg).unwrap();
        // two Uni-DD variants × three errors, plus free evolution
        assert_eq!(pts.len(), 7);
        assert_eq!(pts[0].label, "Uni-DD");
        assert_eq!(pts[2].epsilon, 0.03);
        assert_eq!(pts[6].label, "FE");
        assert_eq!(pts[6].omega, Some(0.0));
        assert!((pts[0].omega.unwrap() - 2.0 * PI / 0.05).abs() < 1e-9);
    }

    #[test]
    fn budget_mode_checks_pulse_counts() {
        let mut cfg = preset(ExperimentId::S3);
        cfg.run.shot_points = 2;
        for p in enumerate_points(&cfg).unwrap() {
            if let Plan::Shots(shots) = plan(&cfg, &p).unwrap() {
                assert!(shots.iter().all(|s| s.seq.pulse_count() == 210));
            }
        }
        cfg.protocols.push(ProtocolSpec::new(ProtocolKind::Pdd, 0.05));
        assert!(matches!(compare_protocols(&cfg), Err(DdError::PulseBudget { .. })));
    }

    #[test]
    fn small_run_is_deterministic_and_worker_independent() {
        let mut cfg = preset(ExperimentId::Custom);
        cfg.run.horizon = 2.0;
        cfg.protocols.push(ProtocolSpec::new(ProtocolKind::Hahn, 0.05));
        cfg.run.shot_points = 5;
        let a = run_experiment(&cfg).unwrap().to_csv().unwrap();
        cfg.workers = 3;
        let b = run_experiment(&cfg).unwrap().to_csv().unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("# schema=ddsim-results/1\n"));
        assert!(a.contains(&format!("\n{CSV_COLUMNS}\n")));
        assert!(a.contains(",T0.9,"));
    }
}

//! Pulse sequences as flat event lists.
//!
//! Events are stored in application order: `events[0]` acts first. Operator
//! products such as `[Y U_τ Y U_τ]` read right to left, so their rightmost
//! factor becomes `events[0]`.
//!
//! Text form, one event per line:
//!
//! ```text
//! D <duration> <bias_sign>
//! P <ax> <ay> <az> <angle>
//! ```

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{DdError, Result};
use crate::spin::Rotation;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SequenceEvent {
    /// Free evolution; `bias_sign = −1` reverses the bias field.
    Delay { duration: f64, bias_sign: i8 },
    /// Instantaneous rotation of the central or collective spin.
    Pulse(Rotation),
}

impl SequenceEvent {
    pub fn delay(duration: f64) -> Self {
        Self::Delay {
            duration,
            bias_sign: 1,
        }
    }

    pub fn is_pulse(&self) -> bool {
        matches!(self, Self::Pulse(_))
    }

    fn overbar(self) -> Self {
        match self {
            Self::Delay {
                duration,
                bias_sign,
            } => Self::Delay {
                duration,
                bias_sign: -bias_sign,
            },
            p => p,
        }
    }
}

fn x_pulse() -> SequenceEvent {
    SequenceEvent::Pulse(Rotation::x(PI))
}

fn y_pulse() -> SequenceEvent {
    SequenceEvent::Pulse(Rotation::y(PI))
}

fn z_pulse() -> SequenceEvent {
    SequenceEvent::Pulse(Rotation::z(PI))
}

fn u(duration: f64) -> SequenceEvent {
    SequenceEvent::delay(duration)
}

/// A protocol: `cycles` repetitions of a block of `cycle_len` events.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    pub label: String,
    pub events: Vec<SequenceEvent>,
    cycle_len: usize,
    pub warnings: Vec<String>,
}

impl Sequence {
    /// A single-cycle sequence.
    pub fn new(label: impl Into<String>, events: Vec<SequenceEvent>) -> Result<Self> {
        let len = events.len();
        Self::repeated(label, events, 1).map(|mut s| {
            s.cycle_len = len;
            s
        })
    }

    /// `cycle` repeated `times` times.
    pub fn repeated(label: impl Into<String>, cycle: Vec<SequenceEvent>, times: usize) -> Result<Self> {
        if cycle.is_empty() {
            return Err(DdError::Empty("sequence cycle"));
        }
        if times == 0 {
            return Err(DdError::InvalidParameter("cycle count must be at least 1".into()));
        }
        for e in &cycle {
            if let SequenceEvent::Delay {
                duration,
                bias_sign,
            } = e
            {
                if !(*duration >= 0.0 && duration.is_finite()) {
                    return Err(DdError::InvalidParameter(format!("delay {duration}")));
                }
                if bias_sign.abs() != 1 {
                    return Err(DdError::InvalidParameter(format!("bias sign {bias_sign}")));
                }
            }
        }
        let cycle_len = cycle.len();
        let mut events = Vec::with_capacity(cycle_len * times);
        for _ in 0..times {
            events.extend_from_slice(&cycle);
        }
        Ok(Self {
            label: label.into(),
            events,
            cycle_len,
            warnings: Vec::new(),
        })
    }

    pub fn total_time(&self) -> f64 {
        self.delays().map(|(d, _)| d).sum()
    }

    pub fn pulse_count(&self) -> usize {
        self.events.iter().filter(|e| e.is_pulse()).count()
    }

    pub fn cycle_len(&self) -> usize {
        self.cycle_len
    }

    pub fn cycles(&self) -> usize {
        self.events.len() / self.cycle_len
    }

    pub fn cycle(&self) -> &[SequenceEvent] {
        &self.events[..self.cycle_len]
    }

    pub fn cycle_time(&self) -> f64 {
        self.cycle()
            .iter()
            .map(|e| match e {
                SequenceEvent::Delay { duration, .. } => *duration,
                SequenceEvent::Pulse(_) => 0.0,
            })
            .sum()
    }

    pub fn delays(&self) -> impl Iterator<Item = (f64, i8)> + '_ {
        self.events.iter().filter_map(|e| match e {
            SequenceEvent::Delay {
                duration,
                bias_sign,
            } => Some((*duration, *bias_sign)),
            SequenceEvent::Pulse(_) => None,
        })
    }

    /// Flips the bias sign of every delay.
    pub fn overbar(&self) -> Self {
        Self {
            events: self.events.iter().map(|e| e.overbar()).collect(),
            ..self.clone()
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            match e {
                SequenceEvent::Delay {
                    duration,
                    bias_sign,
                } => writeln!(s, "D {duration} {bias_sign}"),
                SequenceEvent::Pulse(r) => {
                    let [ax, ay, az] = r.axis();
                    writeln!(s, "P {ax} {ay} {az} {}", r.angle())
                }
            }
            .expect("writing to a String cannot fail");
        }
        s
    }

    /// Parses the text form as a single-cycle sequence.
    pub fn from_text(label: &str, text: &str) -> Result<Self> {
        let mut events = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| DdError::Parse {
                line: n + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s}: {e}")));
            match fields.as_slice() {
                ["D", d, b] => events.push(SequenceEvent::Delay {
                    duration: num(d)?,
                    bias_sign: b.parse::<i8>().map_err(|e| err(format!("{b}: {e}")))?,
                }),
                ["P", x, y, z, a] => {
                    let rot = Rotation::new([num(x)?, num(y)?, num(z)?], num(a)?)
                        .map_err(|e| err(e.to_string()))?;
                    events.push(SequenceEvent::Pulse(rot));
                }
                _ => return Err(err(format!("unrecognized event `{line}`"))),
            }
        }
        Self::new(label, events)
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(DdError::InvalidParameter(format!("{name} = {v}")))
    }
}

/// `[Y U_τ Y U_τ]^L`, or `[Ȳ U_τ Y U_τ]^L` when `modified`; pulse angle `(1−ε)π`.
pub fn uni_dd(tau: f64, cycles: usize, epsilon: f64, modified: bool) -> Result<Sequence> {
    check_positive("tau", tau)?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(DdError::InvalidParameter(format!("epsilon = {epsilon}")));
    }
    let angle = (1.0 - epsilon) * PI;
    let second = if modified { -1.0 } else { 1.0 };
    let cycle = vec![
        u(tau),
        SequenceEvent::Pulse(Rotation::y(angle)),
        u(tau),
        SequenceEvent::Pulse(Rotation::new([0.0, second, 0.0], angle)?),
    ];
    let label = if modified { "Uni-DD-mod" } else { "Uni-DD" };
    Sequence::repeated(label, cycle, cycles)
}

/// Free evolution recorded every `step`.
pub fn free_evolution(step: f64, cycles: usize) -> Result<Sequence> {
    check_positive("step", step)?;
    Sequence::repeated("FE", vec![u(step)], cycles)
}

/// `[Z U_τ X U_τ Z U_τ X U_τ]^L`.
pub fn pdd(tau: f64, cycles: usize) -> Result<Sequence> {
    check_positive("tau", tau)?;
    Sequence::repeated("PDD", pdd_block(tau), cycles)
}

fn pdd_block(tau: f64) -> Vec<SequenceEvent> {
    vec![u(tau), x_pulse(), u(tau), z_pulse(), u(tau), x_pulse(), u(tau), z_pulse()]
}

/// Whether `ω·(t/2)` is an integer multiple of 2π to 1e−9.
pub fn hahn_is_magic(t: f64, omega: f64) -> bool {
    let k = omega * 0.5 * t / (2.0 * PI);
    (k - k.round()).abs() <= 1e-9
}

/// `Y U(t/2) Y U(t/2)`. A magic-condition miss is recorded in `warnings`.
pub fn hahn(t: f64, omega: Option<f64>) -> Result<Sequence> {
    check_positive("t", t)?;
    let mut s = Sequence::new("Hahn", vec![u(0.5 * t), y_pulse(), u(0.5 * t), y_pulse()])?;
    if let Some(w) = omega {
        if !hahn_is_magic(t, w) {
            s.warnings.push(format!(
                "omega*t/2 = {} is not a multiple of 2*pi",
                w * 0.5 * t
            ));
        }
    }
    Ok(s)
}

/// `[B̄ Y B̄ B Y B]`, i.e. application order `B, Y, B, B̄, Y, B̄`.
pub fn symmetrize(block: &[SequenceEvent]) -> Vec<SequenceEvent> {
    let bar: Vec<SequenceEvent> = block.iter().map(|e| e.overbar()).collect();
    let mut out = Vec::with_capacity(4 * block.len() + 2);
    out.extend_from_slice(block);
    out.push(y_pulse());
    out.extend_from_slice(block);
    out.extend_from_slice(&bar);
    out.push(y_pulse());
    out.extend_from_slice(&bar);
    out
}

/// `[Ū_τ Y Ū_τ U_τ Y U_τ]^L`.
pub fn suni_dd(tau: f64, cycles: usize) -> Result<Sequence> {
    check_positive("tau", tau)?;
    Sequence::repeated("SUni-DD", symmetrize(&[u(tau)]), cycles)
}

/// Concatenated Uni-DD: level 1 is SUni-DD, level 2 symmetrizes it once more.
pub fn concat_uni(level: usize, tau: f64, cycles: usize) -> Result<Sequence> {
    check_positive("tau", tau)?;
    match level {
        1 => suni_dd(tau, cycles).map(|mut s| {
            s.label = "CUni-DD1".into();
            s
        }),
        2 => Sequence::repeated("CUni-DD2", symmetrize(&symmetrize(&[u(tau)])), cycles),
        _ => Err(DdError::Unsupported(format!("CUni-DD level {level}"))),
    }
}

/// `[U X U Z U X U U X U Z U X U]^L`.
pub fn sdd(tau: f64, cycles: usize) -> Result<Sequence> {
    check_positive("tau", tau)?;
    let half = [u(tau), x_pulse(), u(tau), z_pulse(), u(tau), x_pulse(), u(tau)];
    let mut cycle = half.to_vec();
    cycle.extend_from_slice(&half);
    Sequence::repeated("SDD", cycle, cycles)
}

/// `[Z C₁ X C₁ Z C₁ X C₁]^L` with `C₁` = PDD, no pulse merging.
pub fn cdd2(tau: f64, cycles: usize) -> Result<Sequence> {
    check_positive("tau", tau)?;
    let c1 = pdd_block(tau);
    let mut cycle = Vec::with_capacity(4 * c1.len() + 4);
    for outer in [x_pulse(), z_pulse(), x_pulse(), z_pulse()] {
        cycle.extend_from_slice(&c1);
        cycle.push(outer);
    }
    Sequence::repeated("CDD2", cycle, cycles)
}

/// `t_j = t sin²(jπ/(2N_p − 2))` for `j = 0..N_p`.
pub fn uhrig_times(np: usize, t: f64) -> Result<Vec<f64>> {
    if np < 2 {
        return Err(DdError::InvalidParameter(format!("N_p = {np}")));
    }
    check_positive("t", t)?;
    let denom = (2 * np - 2) as f64;
    Ok((0..np)
        .map(|j| {
            let s = (j as f64 * PI / denom).sin();
            t * s * s
        })
        .collect())
}

/// Uhrig grid with `order` interior pulses: `N_p = order + 2`, so the last point is `t`.
fn uhrig_intervals(order: usize, t: f64) -> Result<Vec<f64>> {
    let times = uhrig_times(order + 2, t)?;
    Ok(times.windows(2).map(|w| w[1] - w[0]).collect())
}

/// `U_{t−t_n} Z U_{τ_n} ⋯ Z U_{τ_1}` in application order; `leading_z` adds the outer Z.
fn inner_z_block(n: usize, t: f64, leading_z: bool) -> Result<Vec<SequenceEvent>> {
    let tau = uhrig_intervals(n, t)?;
    let mut out = Vec::with_capacity(2 * tau.len() + 1);
    for (k, d) in tau.iter().enumerate() {
        out.push(u(*d));
        if k + 1 < tau.len() {
            out.push(z_pulse());
        }
    }
    if leading_z {
        out.push(z_pulse());
    }
    Ok(out)
}

fn assert_budget(s: &Sequence, expected: usize) -> Result<()> {
    if s.pulse_count() != expected {
        return Err(DdError::PulseBudget {
            protocol: s.label.clone(),
            expected,
            actual: s.pulse_count(),
        });
    }
    Ok(())
}

/// `CUDD_n = U_n(t/4) X U_n(t/4) U_n(t/4) X U_n(t/4)`, `4n + 2` pulses.
pub fn cudd(n: usize, t: f64) -> Result<Sequence> {
    if n == 0 {
        return Err(DdError::InvalidParameter("CUDD order must be at least 1".into()));
    }
    let block = inner_z_block(n, 0.25 * t, false)?;
    let mut events = Vec::new();
    for (k, b) in [&block, &block, &block, &block].into_iter().enumerate() {
        events.extend_from_slice(b);
        if k == 0 || k == 2 {
            events.push(x_pulse());
        }
    }
    let s = Sequence::new(format!("CUDD{n}"), events)?;
    assert_budget(&s, 4 * n + 2)?;
    Ok(s)
}

/// `QDD_n = X U_n(δ_{n+1}) X ⋯ X U_n(δ_1)` for odd `n`, `(n+1)(n+2)` pulses.
pub fn qdd(n: usize, t: f64) -> Result<Sequence> {
    if n == 0 || n % 2 == 0 {
        return Err(DdError::InvalidParameter(format!("QDD order {n} must be odd")));
    }
    let deltas = uhrig_intervals(n, t)?;
    let mut events = Vec::new();
    for d in deltas {
        events.extend(inner_z_block(n, d, true)?);
        events.push(x_pulse());
    }
    let s = Sequence::new(format!("QDD{n}"), events)?;
    assert_budget(&s, (n + 1) * (n + 2))?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse_axes(s: &Sequence) -> Vec<[f64; 3]> {
        s.events
            .iter()
            .filter_map(|e| match e {
                SequenceEvent::Pulse(r) => Some(r.axis()),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn uni_dd_layout() {
        let s = uni_dd(0.05, 1, 0.0, false).unwrap();
        assert_eq!(s.events.len(), 4);
        assert!(!s.events[0].is_pulse() && s.events[1].is_pulse());
        assert_eq!(uni_dd(0.05, 7, 0.0, false).unwrap().pulse_count(), 14);
        let m = uni_dd(0.05, 1, 0.01, true).unwrap();
        assert_eq!(pulse_axes(&m), vec![[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]]);
    }

    #[test]
    fn golden_text() {
        let s = uni_dd(0.05, 1, 0.0, false).unwrap();
        let expect = "D 0.05 1\nP 0 1 0 3.141592653589793\nD 0.05 1\nP 0 1 0 3.141592653589793\n";
        assert_eq!(s.to_text(), expect);
        let su = suni_dd(0.1, 1).unwrap();
        let expect = "D 0.1 1\nP 0 1 0 3.141592653589793\nD 0.1 1\nD 0.1 -1\nP 0 1 0 3.141592653589793\nD 0.1 -1\n";
        assert_eq!(su.to_text(), expect);
    }

    #[test]
    fn text_round_trip() {
        let s = cdd2(0.2, 1).unwrap();
        let back = Sequence::from_text("CDD2", &s.to_text()).unwrap();
        assert_eq!(back.events, s.events);
        assert!(Sequence::from_text("x", "Q 1 2").is_err());
    }

    #[test]
    fn pdd_counts() {
        let s = pdd(0.1, 1).unwrap();
        assert_eq!(
            pulse_axes(&s),
            vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]
        );
        let l3 = pdd(0.1, 3).unwrap();
        assert!((l3.total_time() - 1.2).abs() < 1e-12);
        assert_eq!(l3.pulse_count(), 12);
    }

    #[test]
    fn hahn_magic_check() {
        let w = 3.0;
        let ok = hahn(4.0 * PI / w, Some(w)).unwrap();
        assert!(ok.warnings.is_empty());
        assert_eq!(ok.pulse_count(), 2);
        for k in 1..20 {
            assert!(hahn_is_magic(100.0, 2.0 * PI * k as f64 / 50.0));
        }
        assert_eq!(hahn(1.0, Some(1.0)).unwrap().warnings.len(), 1);
    }

    #[test]
    fn suni_and_concatenation() {
        let s = suni_dd(0.05, 2).unwrap();
        let signs: Vec<i8> = s.delays().map(|(_, b)| b).take(4).collect();
        assert_eq!(signs, vec![1, 1, -1, -1]);
        assert!(s.cycle()[1].is_pulse() && s.cycle()[4].is_pulse());
        assert!((s.total_time() - 0.4).abs() < 1e-12);
        assert_eq!(concat_uni(1, 0.05, 2).unwrap().events, s.events);
        let c2 = concat_uni(2, 0.05, 1).unwrap();
        assert_eq!(c2.pulse_count(), 10);
        assert!((c2.total_time() - 16.0 * 0.05).abs() < 1e-12);
        assert!(concat_uni(3, 0.05, 1).is_err());
        assert_eq!(c2.overbar().overbar(), c2);
    }

    #[test]
    fn biaxial_counts() {
        let s = sdd(0.1, 1).unwrap();
        assert_eq!(s.delays().count(), 8);
        assert_eq!(s.pulse_count(), 6);
        let c = cdd2(0.1, 1).unwrap();
        assert_eq!(c.pulse_count(), 20);
        assert!((c.total_time() - 1.6).abs() < 1e-12);
    }

    #[test]
    fn uhrig_grid_values() {
        let t = uhrig_times(2, 3.0).unwrap();
        assert_eq!(t[0], 0.0);
        assert!((t[1] - 3.0).abs() < 1e-15);
        let t6 = uhrig_times(6, 1.0).unwrap();
        assert!((t6[1] - 0.0954915028125263).abs() < 1e-12);
        assert!(t6.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn uhrig_family_budgets() {
        let c = cudd(52, 7.0).unwrap();
        assert_eq!(c.pulse_count(), 210);
        assert!((c.total_time() - 7.0).abs() < 1e-9);
        let q = qdd(13, 7.0).unwrap();
        assert_eq!(q.pulse_count(), 210);
        assert!((q.total_time() - 7.0).abs() < 1e-9);
        assert!(qdd(4, 1.0).is_err());
        assert!(q.delays().all(|(d, _)| d >= 0.0));
    }
}

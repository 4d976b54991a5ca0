use ddsim_core::error::DdError;
use ddsim_core::harness::{
    compare_protocols, enumerate_points, magic_omega, preset, run_experiment, ExperimentConfig, ExperimentId,
    ProtocolKind, ProtocolSpec, CSV_COLUMNS,
};
use ddsim_core::sequences::{cdd2, hahn, sdd, uni_dd, Sequence};

const PI: &str = "3.141592653589793";

#[test]
fn uni_dd_cycle_text() {
    let s = uni_dd(0.05, 1, 0.0, false).unwrap();
    assert_eq!(
        s.to_text(),
        format!("D 0.05 1\nP 0 1 0 {PI}\nD 0.05 1\nP 0 1 0 {PI}\n")
    );
    let m = uni_dd(0.05, 1, 0.0, true).unwrap();
    assert_eq!(
        m.to_text(),
        format!("D 0.05 1\nP 0 1 0 {PI}\nD 0.05 1\nP 0 -1 0 {PI}\n")
    );
}

#[test]
fn biaxial_cycles_from_their_definitions() {
    // [U X U Z U X U U X U Z U X U]: eight delays, six pulses
    let s = sdd(0.1, 1).unwrap();
    let kinds: String = s
        .events
        .iter()
        .map(|e| match e {
            ddsim_core::sequences::SequenceEvent::Delay { .. } => 'U',
            ddsim_core::sequences::SequenceEvent::Pulse(r) => match r.axis() {
                [a, _, _] if (a.abs() - 1.0).abs() < 1e-12 => 'X',
                [_, _, c] if (c.abs() - 1.0).abs() < 1e-12 => 'Z',
                _ => '?',
            },
        })
        .collect();
    assert_eq!(kinds, "UXUZUXUUXUZUXU");
    assert_eq!(s.pulse_count(), 6);
    let c = cdd2(0.1, 1).unwrap();
    assert_eq!(c.pulse_count(), 20);
    assert!((c.total_time() - 1.6).abs() < 1e-12);
}

#[test]
fn hahn_warns_off_magic() {
    let omega = magic_omega(0.05, 1).unwrap();
    assert!(hahn(0.1, Some(omega)).unwrap().warnings.is_empty());
    assert_eq!(hahn(0.13, Some(omega)).unwrap().warnings.len(), 1);
}

#[test]
fn text_form_parses_and_reports_lines() {
    let s = Sequence::from_text("t", "# echo\nD 0.5 1\nP 0 1 0 3.14\n\nD 0.5 -1\n").unwrap();
    assert_eq!(s.events.len(), 3);
    match Sequence::from_text("t", "D 0.5 1\nQ 1\n") {
        Err(DdError::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

fn tiny() -> ExperimentConfig {
    let mut cfg = preset(ExperimentId::Custom);
    cfg.run.horizon = 4.0;
    cfg.run.omega_offsets = vec![-1.0, 0.0];
    cfg.run.trajectory_stride = 5;
    cfg
}

#[test]
fn csv_layout() {
    let csv = run_experiment(&tiny()).unwrap().to_csv().unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# schema=ddsim-results/1"));
    let header: Vec<&str> = csv.lines().take_while(|l| l.starts_with('#')).collect();
    for key in ["experiment=", "scale=", "seed=", "model.j=", "run.tau=", "noise.realizations="] {
        assert!(header.iter().any(|l| l.contains(key)), "missing {key}");
    }
    assert!(!header.iter().any(|l| l.starts_with("# workers=")));
    let body: Vec<&str> = csv.lines().skip(header.len()).collect();
    assert_eq!(body[0], CSV_COLUMNS);
    let n_cols = CSV_COLUMNS.split(',').count();
    for row in &body[1..] {
        assert_eq!(row.split(',').count(), n_cols, "{row}");
        assert!(row.starts_with("custom,"));
        assert!(row.ends_with(",4,20240601"));
    }
    // two Uni-DD offsets and FE, one characteristic-time row each
    assert_eq!(body.iter().filter(|r| r.contains(",T0.9,")).count(), 3);
    let point_ids: Vec<usize> = body[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(point_ids.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn csv_is_a_function_of_config() {
    let cfg = tiny();
    let a = run_experiment(&cfg).unwrap().to_csv().unwrap();
    let b = run_experiment(&cfg).unwrap().to_csv().unwrap();
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(a, run_experiment(&other).unwrap().to_csv().unwrap());
}

#[test]
fn config_errors() {
    let text = tiny().to_toml().unwrap();
    assert!(ExperimentConfig::from_toml(&text.replace("experiment = \"custom\"", "experiment = \"fig9\"")).is_err());
    assert!(ExperimentConfig::from_toml(&text.replace("[run]", "[run]\nbogus = 1")).is_err());
    assert!(ExperimentConfig::from_toml(&text.replace("version = 1", "version = 7")).is_err());
    assert!(ExperimentId::parse("fig2b").is_ok());
    assert!(ExperimentId::parse("fig5").is_err());

    let mut cfg = tiny();
    cfg.run.tau = -1.0;
    assert!(run_experiment(&cfg).is_err());
    let mut cfg = tiny();
    cfg.protocols.clear();
    assert!(run_experiment(&cfg).is_err());
    let mut cfg = preset(ExperimentId::S4);
    cfg.model = ddsim_core::harness::ModelConfig::Nv { n: 30, bath_samples: 1 };
    assert!(matches!(cfg.validate(), Err(DdError::TooLarge { .. })));
}

#[test]
fn paper_scale_is_accepted_with_a_warning() {
    let mut cfg = preset(ExperimentId::Fig2a);
    cfg.model = ddsim_core::harness::ModelConfig::Bec { j: 1000.0, c2p: -0.5 };
    cfg.noise.realizations = 100;
    cfg.validate().unwrap();
    assert!(!cfg.resource_warnings().is_empty());
    assert!(preset(ExperimentId::Fig2a).resource_warnings().is_empty());
}

#[test]
fn single_protocol_comparison_matches_plain_run() {
    let mut cfg = tiny();
    cfg.protocols = vec![ProtocolSpec::new(ProtocolKind::UniDd, 0.05)];
    let a = compare_protocols(&cfg).unwrap().to_csv().unwrap();
    let b = run_experiment(&cfg).unwrap().to_csv().unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_preset_enumerates() {
    for id in ExperimentId::ALL {
        let cfg = preset(id);
        let pts = enumerate_points(&cfg).unwrap();
        assert!(!pts.is_empty(), "{}", id.name());
        assert!(pts.iter().enumerate().all(|(i, p)| p.id == i));
    }
}

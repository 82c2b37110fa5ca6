mod common;

use std::path::Path;

use bcwave::config::{parse_config, write_config, RunConfig, Stage};
use bcwave::forward::{response_matrix, ResponseMatrix};
use bcwave::goursat::solve_kernels;
use bcwave::io::{fmt_f64, read_response_csv, to_json_string, write_response_csv};
use bcwave::pipeline::{run_pipeline, run_pipeline_with, RunOptions, StageStatus};
use bcwave::{Error, Potential};
use proptest::prelude::*;

fn sample_response(n: usize) -> ResponseMatrix {
    let p = Potential::gaussian(1.0, 0.3, 0.2).unwrap();
    response_matrix(&solve_kernels(&p, &common::kernel_grid(1.0, n)).unwrap())
}

fn ingestion_row(path: &Path, horizon: f64) -> usize {
    match read_response_csv(path, horizon) {
        Err(Error::Ingestion { row, .. }) => row,
        other => panic!("expected an ingestion error, got {other:?}"),
    }
}

#[test]
fn response_csv_round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let r = sample_response(32);
    write_response_csv(&r, &path).unwrap();
    let back = read_response_csv(&path, 1.0).unwrap();
    assert_eq!(back.r11, r.r11);
    assert_eq!(back.r12, r.r12);
    assert_eq!(back.r21, r.r21);
    assert_eq!(back.r22, r.r22);
    assert_eq!(back.grid().n, 64);
}

#[test]
fn malformed_response_csv_reports_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let good: Vec<String> = (0..=20).map(|k| format!("{},0,0,0,0", k as f64 * 0.1)).collect();
    let write = |lines: &[String]| std::fs::write(&path, lines.join("\n")).unwrap();

    write(&[&["time,r11,r12,r21,r22".to_string()][..], &good].concat());
    assert_eq!(ingestion_row(&path, 1.0), 1);

    let header = "t,r11,r12,r21,r22".to_string();
    let mut bad = good.clone();
    bad[5] = "0.5,0,abc,0,0".into();
    write(&[&[header.clone()][..], &bad].concat());
    assert_eq!(ingestion_row(&path, 1.0), 7);

    let mut gap = good.clone();
    gap.remove(10);
    write(&[&[header.clone()][..], &gap].concat());
    assert_eq!(ingestion_row(&path, 0.9), 12);

    let mut jitter = good.clone();
    jitter[3] = "0.3001,0,0,0,0".into();
    write(&[&[header.clone()][..], &jitter].concat());
    assert_eq!(ingestion_row(&path, 1.0), 5);

    write(&[&[header.clone()][..], &good].concat());
    assert_eq!(ingestion_row(&path, 1.5), 22);
    assert!(read_response_csv(&path, 1.0).is_ok());

    write(&[&[header][..], &good[..5]].concat());
    assert!(matches!(read_response_csv(&path, 0.1), Err(Error::Ingestion { .. })));
}

#[test]
fn config_parsing_is_strict() {
    let ok = r#"{"potential": {"kind": "gaussian", "amplitude": 1.0, "width": 0.3}, "T": 1.0, "n": 32, "stages": ["krein"]}"#;
    let cfg = parse_config(ok).unwrap();
    assert_eq!(cfg.stages, vec![Stage::Krein]);
    assert_eq!(cfg.spectral_half_length(), 4.0);
    let back = parse_config(&write_config(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);

    let bad = [
        r#"{"potential": {"kind": "zero"}, "T": 1.0, "n": 32, "sigma": 1}"#,
        r#"{"potential": {"kind": "zero"}, "T": -1.0, "n": 32}"#,
        r#"{"potential": {"kind": "zero"}, "T": 1.0, "n": 4}"#,
        r#"{"T": 1.0, "n": 32}"#,
        r#"{"potential": {"kind": "zero"}, "response_csv": "r.csv", "T": 1.0, "n": 32}"#,
        r#"{"potential": {"kind": "zero"}, "T": 1.0, "n": 32, "spectral": {"N": 0.5}}"#,
        r#"{"potential": {"kind": "zero"}, "T": 1.0, "n": 32, "stages": ["forward"]}"#,
        r#"{"potential": {"kind": "zero"}, "T": 1.0, "n": 32, "tolerances": {"band": [0.5, 0.2]}}"#,
        r#"{"potential": {"kind": "gaussian", "amplitude": 1.0, "width": -0.3}, "T": 1.0, "n": 32}"#,
    ];
    for text in bad {
        assert!(matches!(parse_config(text), Err(Error::Config(_))), "{text}");
    }
}

#[test]
fn json_floats_have_seventeen_significant_digits() {
    let v = vec![0.1, -1.0 / 3.0, f64::NAN, 1e-300];
    let text = to_json_string(&v).unwrap();
    assert!(text.contains("1.0000000000000001e-1"));
    assert!(text.contains("-3.3333333333333331e-1"));
    assert!(text.contains("null"));
    let back: Vec<Option<f64>> = serde_json::from_str(&text).unwrap();
    assert_eq!(back[1], Some(-1.0 / 3.0));
}

#[test]
fn pipeline_writes_report_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(Potential::gaussian(1.0, 0.3, 0.0).unwrap(), 1.0, 32);
    cfg.stages = vec![Stage::Gl];
    cfg.out = dir.path().join("run");
    let report = run_pipeline(&cfg).unwrap();
    assert!(report.success);
    let names: Vec<_> = report.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["kernels", "response", "connect", "gl"]);
    for f in ["kernels.csv", "response.csv", "connecting.csv", "gl_kernel.csv", "gl_q.csv", "report.json"] {
        assert!(cfg.out.join(f).exists(), "{f}");
    }
    assert!(report.metric("gl", "q_relative_error").unwrap() < 0.05);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(cfg.out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["success"], true);
}

#[test]
fn inverse_only_run_from_response_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("response.csv");
    write_response_csv(&sample_response(64), &path).unwrap();
    let text = format!(
        r#"{{"response_csv": {:?}, "T": 1.0, "n": 64, "stages": ["krein", "gl"], "out": {:?}}}"#,
        path,
        dir.path().join("out")
    );
    let cfg = parse_config(&text).unwrap();
    let report = run_pipeline(&cfg).unwrap();
    assert!(report.success);
    assert_eq!(report.stage("kernels").unwrap().status, StageStatus::Skipped);
    assert!(report.metric("gl", "krein_gl_agreement").unwrap() < 0.02);
    assert!(report.metric("krein", "q_relative_error").is_none());

    let mismatched = text.replace("\"n\": 64", "\"n\": 32");
    let report = run_pipeline(&parse_config(&mismatched).unwrap()).unwrap();
    assert!(!report.success);
    assert_eq!(report.stage("connect").unwrap().status, StageStatus::Failed);
    assert_eq!(report.stage("krein").unwrap().status, StageStatus::Skipped);
}

#[test]
fn serial_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let mut cfg = RunConfig::new(Potential::sech2(1.0, 0.3, 0.1).unwrap(), 1.0, 32);
        cfg.stages = vec![Stage::Krein, Stage::Gl];
        cfg.out = dir.path().join(name);
        run_pipeline_with(&cfg, RunOptions { serial: true }).unwrap();
        cfg.out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["response.csv", "connecting.csv", "krein.csv", "gl_q.csv", "report.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

proptest! {
    #[test]
    fn float_format_round_trips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }
}

use std::process::Command;

fn bcwave() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bcwave"))
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bcwave().args(["selftest", "--serial", "--out"]).arg(dir.path()).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")), "{stdout}");
}

#[test]
fn roundtrip_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"potential": {"kind": "sech2", "amplitude": 1.0, "width": 0.3, "center": 0.2}, "T": 1.0, "n": 32}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = bcwave().arg("roundtrip").arg("--config").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("krein_gl_agreement"));
    assert!(!stdout.contains("spectral"));
    for f in ["krein.csv", "gl_q.csv", "report.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }

    let printed = bcwave()
        .args(["gl", "--printed-sign", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("printed"))
        .output()
        .unwrap();
    assert!(printed.status.success());
}

#[test]
fn bad_config_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"potential": {"kind": "zero"}, "T": 1.0, "n": 32, "bogus": 1}"#).unwrap();
    let out = bcwave().arg("krein").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    let missing = bcwave().args(["krein", "--config", "/nonexistent/cfg.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn failed_stage_gives_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let rows: Vec<String> = std::iter::once("t,r11,r12,r21,r22".to_string())
        .chain((0..=20).map(|k| format!("{},0,0,0,0", k as f64 * 0.1)))
        .collect();
    std::fs::write(&csv, rows.join("\n")).unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, format!(r#"{{"response_csv": {csv:?}, "T": 1.5, "n": 15}}"#)).unwrap();
    let out = bcwave().arg("connect").arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAILED"));
}

//! Command-line driver for the boundary-control inverse pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use bcwave::config::{parse_config, RunConfig, Stage};
use bcwave::gl::SignConvention;
use bcwave::pipeline::{run_pipeline_with, RunOptions, RunReport, StageStatus};
use bcwave::Potential;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bcwave", version, about = "Boundary-control inverse problem for the 1-D wave equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the characteristic problems for w1, w2
    Kernels(Common),
    /// Response matrix on [0, 2T]
    Response(Common),
    /// Connecting operator from response data
    Connect(Common),
    /// Krein reconstruction
    Krein(Common),
    /// Gelfand–Levitan reconstruction
    Gl(Common),
    /// Spectral-measure checks
    Spectral(Common),
    /// Krein and Gelfand–Levitan reconstructions with their agreement
    Roundtrip(Common),
    /// Built-in smoke run; needs no config
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the printed sign for the left half-line in the GL recovery
    #[arg(long)]
    printed_sign: bool,
    /// Single-threaded, byte-reproducible run
    #[arg(long)]
    serial: bool,
    /// Seed for generated test controls (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value = "bcwave-selftest")]
    out: PathBuf,
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    seed: Option<u64>,
}

fn load(common: &Common, stages: &[Stage]) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(&common.config).map_err(|e| format!("{}: {e}", common.config.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| e.to_string())?;
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if common.printed_sign {
        cfg.sign = SignConvention::Printed;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.stages = stages.to_vec();
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn print_report(report: &RunReport) {
    for s in &report.stages {
        let status = match s.status {
            StageStatus::Ok => "ok",
            StageStatus::Failed => "FAILED",
            StageStatus::Skipped => "skipped",
        };
        println!("{:<9} {status}", s.name);
        if let Some(msg) = &s.message {
            println!("    {msg}");
        }
        for (k, v) in &s.metrics {
            println!("    {k:<28} {v:.6e}");
        }
    }
}

fn run(cfg: &RunConfig, serial: bool) -> Result<RunReport, String> {
    let report = run_pipeline_with(cfg, RunOptions { serial }).map_err(|e| e.to_string())?;
    print_report(&report);
    println!("outputs in {}", cfg.out.display());
    Ok(report)
}

/// `(stage, metric, upper limit)`.
type Check = (&'static str, &'static str, f64);

fn selftest(args: &SelftestArgs) -> Result<bool, String> {
    let cases: [(&str, Potential, &[Check]); 2] = [
        (
            "zero",
            Potential::zero(),
            &[("krein", "q_relative_error", 1e-8), ("gl", "q_relative_error", 1e-8), ("connect", "max_abs_kernel", 1e-12)],
        ),
        (
            "gaussian",
            Potential::gaussian(1.0, 0.3, 0.0).map_err(|e| e.to_string())?,
            &[("krein", "q_relative_error", 0.1), ("gl", "q_relative_error", 0.1), ("connect", "gram_identity_error", 1e-2)],
        ),
    ];
    let mut ok = true;
    for (name, p, checks) in cases {
        let mut cfg = RunConfig::new(p, 1.0, 64);
        cfg.stages = vec![Stage::Krein, Stage::Gl];
        cfg.out = args.out.join(name);
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        let report = run_pipeline_with(&cfg, RunOptions { serial: args.serial }).map_err(|e| e.to_string())?;
        for (stage, key, limit) in checks {
            let v = report.metric(stage, key).unwrap_or(f64::NAN);
            let pass = v <= *limit;
            ok &= pass;
            println!("{} {name}: {stage}.{key} = {v:.3e} (limit {limit:.1e})", if pass { "PASS" } else { "FAIL" });
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Selftest(args) => selftest(args),
        Command::Kernels(c) => load(c, &[Stage::Kernels]).and_then(|cfg| run(&cfg, c.serial)).map(|r| r.success),
        Command::Response(c) => load(c, &[Stage::Response]).and_then(|cfg| run(&cfg, c.serial)).map(|r| r.success),
        Command::Connect(c) => load(c, &[Stage::Connect]).and_then(|cfg| run(&cfg, c.serial)).map(|r| r.success),
        Command::Krein(c) => load(c, &[Stage::Krein]).and_then(|cfg| run(&cfg, c.serial)).map(|r| r.success),
        Command::Gl(c) => load(c, &[Stage::Gl]).and_then(|cfg| run(&cfg, c.serial)).map(|r| r.success),
        Command::Spectral(c) => load(c, &[Stage::Spectral]).and_then(|cfg| run(&cfg, c.serial)).map(|r| r.success),
        Command::Roundtrip(c) => {
            load(c, &[Stage::Krein, Stage::Gl]).and_then(|cfg| run(&cfg, c.serial)).map(|r| r.success)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

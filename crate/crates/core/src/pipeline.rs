//! Stage orchestration: kernels → response → connect → {krein, gl} → spectral.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use crate::config::{RunConfig, Stage};
use crate::connecting::{assemble_matrix, build_connecting, connecting_form, reflect_kernel, ConnectingKernel};
use crate::error::{Error, Result};
use crate::forward::{forward_solution, response_matrix, ResponseMatrix};
use crate::gl::{recover_q_from_m, solve_gl};
use crate::goursat::{extract_traces, solve_kernels, KernelField};
use crate::io;
use crate::krein::{recover_q_from_y, sweep_kernel};
use crate::model::{inner_inner, Control, Potential, RecoveredPotential, UniformGrid};
use crate::spectral::{
    eigensolve, integrated_relative_l2, renormalized_response, spectral_connecting_form, BoundaryConditions,
    SpectralMeasure,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub name: String,
    pub status: StageStatus,
    pub metrics: BTreeMap<String, f64>,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub success: bool,
    pub stages: Vec<StageReport>,
}

impl RunReport {
    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn metric(&self, stage: &str, key: &str) -> Option<f64> {
        self.stage(stage)?.metrics.get(key).copied()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Run on a single thread.
    pub serial: bool,
}

pub fn write_report(report: &RunReport, path: &Path) -> Result<()> {
    io::write_json(report, path)
}

/// Runs the configured stages, writing CSVs and `report.json` into `cfg.out`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport> {
    run_pipeline_with(cfg, RunOptions::default())
}

pub fn run_pipeline_with(cfg: &RunConfig, opts: RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    if opts.serial {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::config(format!("cannot build serial thread pool: {e}")))?;
        pool.install(|| run(cfg))
    } else {
        run(cfg)
    }
}

#[derive(Default)]
struct State {
    kernels: Option<KernelField>,
    response: Option<ResponseMatrix>,
    connecting: Option<ConnectingKernel>,
    krein_q: Option<RecoveredPotential>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: &'a Path,
    grid: UniformGrid,
}

type StageOutput = (BTreeMap<String, f64>, Vec<String>);

fn run(cfg: &RunConfig) -> Result<RunReport> {
    std::fs::create_dir_all(&cfg.out)?;
    let requested: BTreeSet<Stage> = cfg.stages.iter().copied().collect();
    let mut needed = requested.clone();
    for s in &requested {
        needed.extend(s.dependencies().iter().copied());
    }
    let ctx = Ctx { cfg, out: &cfg.out, grid: UniformGrid::new(cfg.horizon, cfg.n)? };
    let mut state = State::default();
    let mut stages = Vec::new();
    let mut broken = false;
    for stage in Stage::ALL {
        if !needed.contains(&stage) {
            continue;
        }
        let skip = |msg: &str| StageReport {
            name: stage.name().into(),
            status: StageStatus::Skipped,
            metrics: BTreeMap::new(),
            files: vec![],
            message: Some(msg.into()),
        };
        if broken {
            stages.push(skip("an upstream stage failed"));
            continue;
        }
        let forward_only = matches!(stage, Stage::Kernels | Stage::Spectral);
        if forward_only && cfg.potential.is_none() {
            stages.push(skip("no potential: inverse-only run"));
            continue;
        }
        let result = match stage {
            Stage::Kernels => stage_kernels(&ctx, &mut state),
            Stage::Response => stage_response(&ctx, &mut state),
            Stage::Connect => stage_connect(&ctx, &mut state),
            Stage::Krein => stage_krein(&ctx, &mut state),
            Stage::Gl => stage_gl(&ctx, &mut state),
            Stage::Spectral => stage_spectral(&ctx, &mut state),
        };
        let report = match result {
            Ok((metrics, files)) => StageReport {
                name: stage.name().into(),
                status: StageStatus::Ok,
                metrics,
                files,
                message: None,
            },
            Err(e) => {
                // krein and gl are independent siblings; other failures cut the chain.
                if !matches!(stage, Stage::Krein | Stage::Gl) {
                    broken = true;
                }
                StageReport {
                    name: stage.name().into(),
                    status: StageStatus::Failed,
                    metrics: BTreeMap::new(),
                    files: vec![],
                    message: Some(e.to_string()),
                }
            }
        };
        stages.push(report);
    }
    let success = stages.iter().all(|s| s.status != StageStatus::Failed);
    let report = RunReport { success, stages };
    write_report(&report, &cfg.out.join("report.json"))?;
    Ok(report)
}

fn potential<'a>(ctx: &Ctx<'a>) -> Result<&'a Potential> {
    ctx.cfg.potential.as_ref().ok_or_else(|| Error::config("stage needs a potential"))
}

fn stage_kernels(ctx: &Ctx, st: &mut State) -> Result<StageOutput> {
    let p = potential(ctx)?;
    let k = solve_kernels(p, &ctx.grid.doubled())?;
    let tr = extract_traces(&k);
    let mut m = BTreeMap::new();
    m.insert("max_abs_w1".into(), k.field(crate::goursat::Which::W1).max_abs());
    m.insert("max_abs_w2".into(), k.field(crate::goursat::Which::W2).max_abs());
    m.insert("continuity_residual".into(), tr.max_continuity_residual());
    io::write_kernels_csv(&k, &ctx.out.join("kernels.csv"))?;
    st.kernels = Some(k);
    Ok((m, vec!["kernels.csv".into()]))
}

fn stage_response(ctx: &Ctx, st: &mut State) -> Result<StageOutput> {
    let mut files = vec![];
    let r = match (&st.kernels, &ctx.cfg.response_csv) {
        (Some(k), _) => {
            let r = response_matrix(k);
            io::write_response_csv(&r, &ctx.out.join("response.csv"))?;
            files.push("response.csv".into());
            r
        }
        (None, Some(path)) => io::read_response_csv(path, ctx.cfg.horizon)?,
        (None, None) => return Err(Error::config("no kernels and no response_csv")),
    };
    let (minus, plus) = r.compatibility_residuals();
    let mut m = BTreeMap::new();
    m.insert("max_abs_response".into(), r.max_abs());
    m.insert("compat_r21p_minus_r12".into(), minus);
    m.insert("compat_r21p_plus_r12".into(), plus);
    st.response = Some(r);
    Ok((m, files))
}

fn stage_connect(ctx: &Ctx, st: &mut State) -> Result<StageOutput> {
    let r = st.response.as_ref().ok_or_else(|| Error::config("connect needs response data"))?;
    let ck = build_connecting(r, ctx.cfg.horizon)?;
    if ck.grid().n != ctx.cfg.n {
        return Err(Error::shape(format!(
            "response data give {} steps over [0, T], config says n = {}",
            ck.grid().n,
            ctx.cfg.n
        )));
    }
    let sym = ck.symmetry_report();
    let asm = assemble_matrix(&ck)?;
    let eig = asm.matrix.clone().symmetric_eigen();
    let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), v| (a.min(*v), b.max(v.abs())));
    let mut m = BTreeMap::new();
    m.insert("max_abs_kernel".into(), ck.max_abs());
    m.insert("block_transpose_residual".into(), sym.block_transpose);
    m.insert("pointwise_c21_c12_residual".into(), sym.pointwise);
    m.insert("tilde_difference".into(), sym.tilde_difference);
    m.insert("tilde_sum".into(), sym.tilde_sum);
    m.insert("kernel_asymmetry".into(), asm.asymmetry);
    m.insert("min_eigenvalue".into(), lo);
    m.insert("condition_number".into(), hi / lo);
    if let Some(k) = &st.kernels {
        // Gram identity on seeded control pairs, normalized by ‖F‖‖G‖.
        let mut worst = 0.0_f64;
        for pair in 0..3u64 {
            let f = Control::random_smooth(ctx.grid, 4, ctx.cfg.seed.wrapping_mul(1000) + 2 * pair);
            let g = Control::random_smooth(ctx.grid, 4, ctx.cfg.seed.wrapping_mul(1000) + 2 * pair + 1);
            let lhs = connecting_form(&ck, &f, &g)?;
            let uf = forward_solution(&f, k, ctx.cfg.horizon)?;
            let ug = forward_solution(&g, k, ctx.cfg.horizon)?;
            let rhs = inner_inner(&uf, &ug)?;
            worst = worst.max((lhs - rhs).abs() / (f.norm() * g.norm()));
        }
        m.insert("gram_identity_error".into(), worst);
    }
    io::write_connecting_csv(&ck, &ctx.out.join("connecting.csv"))?;
    st.connecting = Some(ck);
    Ok((m, vec!["connecting.csv".into()]))
}

fn band_pred(ctx: &Ctx) -> impl Fn(f64) -> bool {
    let [lo, hi] = ctx.cfg.tolerances.band;
    let t = ctx.cfg.horizon;
    move |x: f64| x.abs() >= lo * t - 1e-12 && x.abs() <= hi * t + 1e-12
}

fn stage_krein(ctx: &Ctx, st: &mut State) -> Result<StageOutput> {
    let ck = st.connecting.as_ref().ok_or_else(|| Error::config("krein needs the connecting kernel"))?;
    let profile = sweep_kernel(ck)?;
    let q = recover_q_from_y(&profile, ctx.cfg.tolerances.eps_y)?;
    let mut m = BTreeMap::new();
    m.insert("max_solve_residual".into(), profile.max_residual());
    m.insert("regularized_solves".into(), profile.regularized.iter().filter(|v| **v).count() as f64);
    m.insert("failed_solves".into(), profile.failed.iter().filter(|v| **v).count() as f64);
    m.insert("slope_at_origin".into(), profile.slope_at_origin());
    m.insert("valid_points".into(), q.valid_count() as f64);
    if let Some(p) = &ctx.cfg.potential {
        if let Some(e) = q.relative_error(p, band_pred(ctx)) {
            m.insert("q_relative_error".into(), e);
        }
    }
    io::write_krein_csv(&profile, &q, &ctx.out.join("krein.csv"))?;
    st.krein_q = Some(q);
    Ok((m, vec!["krein.csv".into()]))
}

fn stage_gl(ctx: &Ctx, st: &mut State) -> Result<StageOutput> {
    let ck = st.connecting.as_ref().ok_or_else(|| Error::config("gl needs the connecting kernel"))?;
    let ct = reflect_kernel(ck);
    let sol = solve_gl(&ct)?;
    let q = recover_q_from_m(&sol.m, ctx.cfg.sign)?;
    let mut m = BTreeMap::new();
    m.insert("regularized_columns".into(), sol.regularized_columns as f64);
    let hi = ctx.cfg.tolerances.band[1] * ctx.cfg.horizon + 1e-12;
    if let Some(p) = &ctx.cfg.potential {
        if let Some(e) = q.relative_error(p, |x| x.abs() <= hi) {
            m.insert("q_relative_error".into(), e);
        }
    }
    if let Some(kq) = &st.krein_q {
        let mut diff = 0.0_f64;
        let mut scale = 0.0_f64;
        let band = band_pred(ctx);
        for j in 0..kq.x.len() {
            if kq.valid[j] && band(kq.x[j]) {
                diff = diff.max((kq.q[j] - q.q[j]).abs());
                scale = scale.max(kq.q[j].abs());
            }
        }
        m.insert("krein_gl_agreement".into(), if scale > 0.0 { diff / scale } else { diff });
    }
    io::write_gl_kernel_csv(&sol.m, &ctx.out.join("gl_kernel.csv"))?;
    io::write_q_csv(&q, "GL", &ctx.out.join("gl_q.csv"))?;
    Ok((m, vec!["gl_kernel.csv".into(), "gl_q.csv".into()]))
}

/// One dynamic-vs-spectral comparison in `spectral.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub name: String,
    pub dynamic: f64,
    pub spectral: f64,
    pub relative_error: f64,
    pub cutoff: usize,
    pub tail: f64,
}

fn measures(p: &Potential, half: f64, bc: BoundaryConditions, cutoff: usize, mesh: usize) -> Result<(SpectralMeasure, SpectralMeasure)> {
    let (a, b) = rayon::join(|| eigensolve(p, half, bc, cutoff, mesh), || eigensolve(&Potential::zero(), half, bc, cutoff, mesh));
    Ok((a?, b?))
}

fn stage_spectral(ctx: &Ctx, st: &mut State) -> Result<StageOutput> {
    let p = potential(ctx)?;
    let r = st.response.as_ref().ok_or_else(|| Error::config("spectral needs response data"))?;
    let ck = st.connecting.as_ref().ok_or_else(|| Error::config("spectral needs the connecting kernel"))?;
    let opts = &ctx.cfg.spectral;
    let half = ctx.cfg.spectral_half_length();
    p.require_support(1.5 * half)?;
    let (sq, s0) = measures(p, half, opts.bc, opts.cutoff, opts.mesh)?;
    let h = ctx.grid.h();
    let mut comparisons = Vec::new();

    // Response traces on [0, 2T], compared after one time integration.
    let f = Control::random_smooth(ctx.grid.doubled(), 3, ctx.cfg.seed);
    let dynamic = crate::spectral::dynamic_regular_response(r, &f)?;
    let spec = renormalized_response(&sq, &s0, &f)?;
    let norm = |a: &(Vec<f64>, Vec<f64>)| {
        let z = vec![0.0; a.0.len()];
        integrated_relative_l2((&z, &z), (&a.0, &a.1), h)
    };
    comparisons.push(Comparison {
        name: "response_integrated_l2".into(),
        dynamic: norm(&dynamic),
        spectral: norm(&spec.value),
        relative_error: integrated_relative_l2((&dynamic.0, &dynamic.1), (&spec.value.0, &spec.value.1), h),
        cutoff: sq.len(),
        tail: spec.tail,
    });

    for pair in 0..opts.pairs as u64 {
        let seed = ctx.cfg.seed.wrapping_mul(1000) + 100 + 2 * pair;
        let f = Control::random_smooth(ctx.grid, 4, seed);
        let g = Control::random_smooth(ctx.grid, 4, seed + 1);
        let dynamic = connecting_form(ck, &f, &g)?;
        let spectral = spectral_connecting_form(&sq, &f, &g)?;
        comparisons.push(Comparison {
            name: format!("connecting_form_pair_{pair}"),
            dynamic,
            spectral: spectral.value,
            relative_error: (spectral.value - dynamic).abs() / (f.norm() * g.norm()),
            cutoff: sq.len(),
            tail: spectral.tail,
        });
    }

    for (label, half2, bc2) in [("longer_interval", 1.5 * half, opts.bc), ("neumann", half, BoundaryConditions::NEUMANN)] {
        let (aq, a0) = measures(p, half2, bc2, opts.cutoff, opts.mesh)?;
        let other = renormalized_response(&aq, &a0, &f)?;
        comparisons.push(Comparison {
            name: format!("independence_{label}"),
            dynamic: norm(&spec.value),
            spectral: norm(&other.value),
            relative_error: integrated_relative_l2((&spec.value.0, &spec.value.1), (&other.value.0, &other.value.1), h),
            cutoff: aq.len(),
            tail: other.tail,
        });
    }

    let worst = |prefix: &str| {
        comparisons.iter().filter(|c| c.name.starts_with(prefix)).map(|c| c.relative_error).fold(0.0, f64::max)
    };
    let mut m = BTreeMap::new();
    m.insert("response_relative_l2".into(), worst("response"));
    m.insert("connecting_form_error".into(), worst("connecting_form"));
    m.insert("n_independence".into(), worst("independence"));
    m.insert("max_tail".into(), comparisons.iter().map(|c| c.tail).fold(0.0, f64::max));
    m.insert("flagged".into(), comparisons.iter().filter(|c| c.tail > ctx.cfg.tolerances.tail).count() as f64);
    m.insert("warnings".into(), sq.warnings.len() as f64);
    io::write_measure_csv(&sq, &ctx.out.join("spectral_measure.csv"))?;
    io::write_json(&comparisons, &ctx.out.join("spectral.json"))?;
    Ok((m, vec!["spectral_measure.csv".into(), "spectral.json".into()]))
}

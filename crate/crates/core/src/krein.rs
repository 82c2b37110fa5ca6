//! Krein route: solve `C^τ F = (τ - t)(1, 0)` for every horizon `τ`, read
//! `y(±τ)` from `F(0)`, and recover `q = y''/y`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::connecting::{assemble_matrix, build_connecting, AssembledMatrix, ConnectingKernel};
use crate::error::{Error, Result};
use crate::forward::ResponseMatrix;
use crate::model::{Control, RecoveredPotential, UniformGrid};
use crate::numerics::{max_abs, second_difference5, smoothing_spline};

/// Default exclusion band around zeros of `y`, relative to `max |y|`.
pub const DEFAULT_EPS_Y: f64 = 0.05;
/// Tikhonov shift relative to `trace / size`.
pub const TIKHONOV_SCALE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct KreinSolution {
    pub control: Control,
    /// `‖C^τ F - RHS‖ / ‖RHS‖` for the solved (symmetrized) system.
    pub residual: f64,
    /// A Tikhonov shift was needed.
    pub regularized: bool,
}

/// Solution of a symmetric Nyström system with fallbacks.
pub(crate) struct DenseSolve {
    pub x: DVector<f64>,
    pub regularized: bool,
}

pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DenseSolve> {
    if let Some(ch) = a.clone().cholesky() {
        let x = ch.solve(b);
        if x.iter().all(|v| v.is_finite()) {
            return Ok(DenseSolve { x, regularized: false });
        }
    }
    let size = a.nrows() as f64;
    let alpha = TIKHONOV_SCALE * a.trace().abs() / size;
    let shifted = a + DMatrix::identity(a.nrows(), a.ncols()) * alpha;
    if let Some(ch) = shifted.clone().cholesky() {
        return Ok(DenseSolve { x: ch.solve(b), regularized: true });
    }
    shifted
        .lu()
        .solve(b)
        .map(|x| DenseSolve { x, regularized: true })
        .ok_or_else(|| Error::Solver("Krein system is singular even after regularization".into()))
}

fn krein_system(sys: &AssembledMatrix, grid: &UniformGrid) -> (DVector<f64>, Vec<f64>) {
    let m = grid.n + 1;
    let rhs: Vec<f64> = (0..m).map(|i| grid.horizon - grid.t(i)).collect();
    let mut b = DVector::zeros(2 * m);
    for i in 0..m {
        b[i] = sys.weights[i] * rhs[i];
    }
    (b, rhs)
}

/// Solves the Krein equation for a kernel at horizon `τ` (its own grid).
pub fn solve_krein(ck: &ConnectingKernel) -> Result<KreinSolution> {
    let grid = *ck.grid();
    let sys = assemble_matrix(ck)?;
    let (b, rhs) = krein_system(&sys, &grid);
    let sol = solve_spd(&sys.matrix, &b)?;
    let m = grid.n + 1;
    // Weighted relative residual: ‖D^{-1}(A x - b)‖_D / ‖rhs‖_D.
    let r = &sys.matrix * &sol.x - &b;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..m {
        let w = sys.weights[i];
        if w > 0.0 {
            num += (r[i] * r[i] + r[m + i] * r[m + i]) / w;
        }
        den += w * rhs[i] * rhs[i];
    }
    let residual = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    let control = Control::from_samples(
        grid,
        sol.x.rows(0, m).iter().copied().collect(),
        sol.x.rows(m, m).iter().copied().collect(),
    );
    Ok(KreinSolution { control, residual, regularized: sol.regularized })
}

/// `(y(τ), y(-τ)) = (f1(0)/2 - f2(0)/2, -f1(0)/2 - f2(0)/2)`.
pub fn endpoint_values(f: &Control) -> (f64, f64) {
    let (a, b) = (f.f1()[0], f.f2()[0]);
    (0.5 * a - 0.5 * b, -0.5 * a - 0.5 * b)
}

/// Reconstructed Cauchy solution `y` on `x_j = -T + j h`, `j = 0..=2n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyProfile {
    pub horizon: f64,
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Residual of the solve at `τ_k = k h` (index `k`; zero at `k = 0`).
    pub residuals: Vec<f64>,
    pub regularized: Vec<bool>,
    /// Solve failed at `τ_k`; `y(±τ_k)` is NaN.
    pub failed: Vec<bool>,
}

impl CauchyProfile {
    pub fn h(&self) -> f64 {
        self.horizon / self.n as f64
    }

    /// Central-difference `y'(0)`.
    pub fn slope_at_origin(&self) -> f64 {
        (self.y[self.n + 1] - self.y[self.n - 1]) / (2.0 * self.h())
    }

    /// Largest jump between neighbouring samples.
    pub fn max_jump(&self) -> f64 {
        self.y.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        max_abs(&self.residuals)
    }
}

/// Solves the Krein equation for every `τ_k = k h`, `k = 1..=n`, using the
/// response data on `[0, 2T]` only.
pub fn sweep_reconstruct(r: &ResponseMatrix, horizon: f64, n: usize) -> Result<CauchyProfile> {
    let ck = build_connecting(r, horizon)?;
    if ck.grid().n != n {
        return Err(Error::shape(format!(
            "response step gives {} steps over [0, {horizon}], expected {n}",
            ck.grid().n
        )));
    }
    sweep_kernel(&ck)
}

/// Horizon sweep over a prebuilt connecting kernel.
pub fn sweep_kernel(ck: &ConnectingKernel) -> Result<CauchyProfile> {
    let grid = *ck.grid();
    let n = grid.n;
    let per_tau: Vec<Option<(f64, f64, f64, bool)>> = (1..=n)
        .into_par_iter()
        .map(|k| {
            let sub = ck.restrict(k).ok()?;
            let sol = solve_krein(&sub).ok()?;
            let (yp, ym) = endpoint_values(&sol.control);
            Some((yp, ym, sol.residual, sol.regularized))
        })
        .collect();
    let mut y = vec![0.0; 2 * n + 1];
    let mut residuals = vec![0.0; n + 1];
    let mut regularized = vec![false; n + 1];
    let mut failed = vec![false; n + 1];
    for (k, res) in (1..=n).zip(per_tau) {
        match res {
            Some((yp, ym, r, reg)) => {
                y[n + k] = yp;
                y[n - k] = ym;
                residuals[k] = r;
                regularized[k] = reg;
            }
            None => {
                y[n + k] = f64::NAN;
                y[n - k] = f64::NAN;
                residuals[k] = f64::NAN;
                failed[k] = true;
            }
        }
    }
    let x = (0..=2 * n).map(|j| -grid.horizon + j as f64 * grid.h()).collect();
    Ok(CauchyProfile { horizon: grid.horizon, n, x, y, residuals, regularized, failed })
}

/// `q = y''/y` from a smoothing-spline fit (penalty `h^4`) and 5-point second
/// differences; points with `|y| < eps_y max|y|`, failed solves and the two
/// outermost nodes on each side are masked.
pub fn recover_q_from_y(profile: &CauchyProfile, eps_y: f64) -> Result<RecoveredPotential> {
    let h = profile.h();
    let len = profile.y.len();
    let bad = |j: usize| {
        let k = j.abs_diff(profile.n);
        profile.failed[k]
    };
    // Bridge failed samples linearly so the smoother sees finite data.
    let mut y = profile.y.clone();
    for j in 0..len {
        if bad(j) {
            let lo = (0..j).rev().find(|&i| !bad(i));
            let hi = (j + 1..len).find(|&i| !bad(i));
            y[j] = match (lo, hi) {
                (Some(a), Some(b)) => y[a] + (y[b] - y[a]) * (j - a) as f64 / (b - a) as f64,
                (Some(a), None) => y[a],
                (None, Some(b)) => profile.y[b],
                (None, None) => return Err(Error::Reconstruction("every Krein solve failed".into())),
            };
        }
    }
    let g = smoothing_spline(&y, h, h.powi(4))?;
    let ymax = max_abs(&y);
    let mut q = vec![0.0; len];
    let mut valid = vec![false; len];
    for j in 2..len.saturating_sub(2) {
        if y[j].abs() < eps_y * ymax || (j - 2..=j + 2).any(bad) {
            continue;
        }
        q[j] = second_difference5(&g, j, h) / g[j];
        valid[j] = q[j].is_finite();
    }
    let out = RecoveredPotential { x: profile.x.clone(), q, valid };
    if out.valid_count() < 5 {
        return Err(Error::Reconstruction(format!(
            "only {} usable points for q = y''/y",
            out.valid_count()
        )));
    }
    Ok(out)
}

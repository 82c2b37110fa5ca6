//! Finite-interval matrix spectral measure of `-y'' + q y` on `(-N, N)` and
//! the spectral forms of the forward solution, response and connecting form.
//!
//! The eigenproblem is discretized by 3-point differences on a uniform mesh
//! with ghost nodes for Robin ends, `a y + b y' = 0`, and symmetrized with
//! half weights at Robin end nodes. Eigenpairs come from Sturm bisection and
//! inverse iteration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{regular_part, ResponseMatrix};
use crate::model::{Control, Potential, StateVector};
use crate::numerics::{cumtrapz, trapezoid_weights};

/// `[a1, b1, a2, b2]` with `a1 y(-N) + b1 y'(-N) = 0`, `a2 y(N) + b2 y'(N) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConditions(pub [f64; 4]);

impl BoundaryConditions {
    pub const DIRICHLET: Self = Self([1.0, 0.0, 1.0, 0.0]);
    pub const NEUMANN: Self = Self([0.0, 1.0, 0.0, 1.0]);

    fn validate(&self) -> Result<()> {
        let [a1, b1, a2, b2] = self.0;
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("boundary coefficients must be finite"));
        }
        if (a1 == 0.0 && b1 == 0.0) || (a2 == 0.0 && b2 == 0.0) {
            return Err(Error::config("boundary condition with a = b = 0 is not self-adjoint"));
        }
        Ok(())
    }
}

impl Default for BoundaryConditions {
    fn default() -> Self {
        Self::DIRICHLET
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    pub half_length: f64,
    pub bc: BoundaryConditions,
    pub mesh: usize,
    pub lambda: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Normalized eigenfunctions on the `mesh + 1` nodes of `[-N, N]`.
    eigenvectors: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl SpectralMeasure {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn mesh_step(&self) -> f64 {
        2.0 * self.half_length / self.mesh as f64
    }

    pub fn eigenvector(&self, n: usize) -> &[f64] {
        &self.eigenvectors[n]
    }

    /// Eigenfunction `n` at `x` by linear interpolation.
    pub fn eigenfunction(&self, n: usize, x: f64) -> f64 {
        let v = &self.eigenvectors[n];
        let s = ((x + self.half_length) / self.mesh_step()).clamp(0.0, self.mesh as f64);
        let i = (s.floor() as usize).min(self.mesh - 1);
        let f = s - i as f64;
        (1.0 - f) * v[i] + f * v[i + 1]
    }
}

/// Symmetric tridiagonal matrix: `d` diagonal, `e` off-diagonal.
struct Tridiagonal {
    d: Vec<f64>,
    e: Vec<f64>,
}

impl Tridiagonal {
    /// Number of eigenvalues strictly below `x`.
    fn sturm_count(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.d.len() {
            let prev = if q == 0.0 { tiny } else { q };
            q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / prev;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// `k`-th smallest eigenvalue (0-based) by bisection.
    fn eigenvalue(&self, k: usize, bounds: (f64, f64)) -> f64 {
        let (mut lo, mut hi) = bounds;
        let scale = lo.abs().max(hi.abs()).max(1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 4.0 * f64::EPSILON * scale || mid == lo || mid == hi {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(A - sigma) x = b` by Gaussian elimination with partial pivoting.
    fn shifted_solve(&self, sigma: f64, b: &mut [f64]) {
        let n = self.d.len();
        let mut dl = self.e.clone();
        let mut dd: Vec<f64> = self.d.iter().map(|v| v - sigma).collect();
        let mut du = self.e.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let guard = f64::EPSILON * self.gershgorin().1.abs().max(1.0);
        for i in 0..n - 1 {
            if dd[i].abs() >= dl[i].abs() {
                if dd[i] == 0.0 {
                    dd[i] = guard;
                }
                let fact = dl[i] / dd[i];
                dl[i] = fact;
                dd[i + 1] -= fact * du[i];
            } else {
                let fact = dd[i] / dl[i];
                dd[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = dd[i + 1];
                dd[i + 1] = temp - fact * dd[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if dd[n - 1] == 0.0 {
            dd[n - 1] = guard;
        }
        for i in 0..n - 1 {
            if swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - dl[i] * b[i];
            } else {
                b[i + 1] -= dl[i] * b[i];
            }
        }
        b[n - 1] /= dd[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / dd[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / dd[i];
        }
    }

    fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.d.len();
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_7).sin()).collect();
        for _ in 0..4 {
            self.shifted_solve(lambda, &mut v);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                break;
            }
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

/// Lowest `count` eigenpairs of `-y'' + q y` on `(-N, N)`.
///
/// Requesting more than `mesh / 8` modes is allowed but adds a warning: the
/// upper part of such a spectrum is visibly affected by the discretization.
pub fn eigensolve(
    p: &Potential,
    half_length: f64,
    bc: BoundaryConditions,
    count: usize,
    mesh: usize,
) -> Result<SpectralMeasure> {
    bc.validate()?;
    if !(half_length.is_finite() && half_length > 0.0) {
        return Err(Error::config(format!("interval half-length must be positive, got {half_length}")));
    }
    if mesh < 16 || !mesh.is_multiple_of(2) {
        return Err(Error::config(format!("spectral mesh must be even and at least 16, got {mesh}")));
    }
    p.require_support(half_length)?;
    let [a1, b1, a2, b2] = bc.0;
    let he = 2.0 * half_length / mesh as f64;
    let first = if b1 == 0.0 { 1 } else { 0 };
    let last = if b2 == 0.0 { mesh - 1 } else { mesh };
    let dof = last - first + 1;
    if count == 0 || count > dof {
        return Err(Error::config(format!("cannot compute {count} eigenpairs from {dof} unknowns")));
    }
    let mut warnings = Vec::new();
    if count > mesh / 8 {
        warnings.push(format!("{count} modes exceed mesh/8 = {}; upper eigenvalues are inaccurate", mesh / 8));
    }
    let x = |i: usize| -half_length + i as f64 * he;
    let inv = 1.0 / (he * he);
    let mut d: Vec<f64> = (first..=last).map(|i| 2.0 * inv + p.value(x(i))).collect();
    let mut e = vec![-inv; dof - 1];
    // Half-weight scaling for Robin end nodes.
    let mut scale = vec![1.0; dof];
    if b1 != 0.0 {
        d[0] -= 2.0 * a1 / (b1 * he);
        e[0] *= std::f64::consts::SQRT_2;
        scale[0] = std::f64::consts::FRAC_1_SQRT_2;
    }
    if b2 != 0.0 {
        d[dof - 1] += 2.0 * a2 / (b2 * he);
        e[dof - 2] *= std::f64::consts::SQRT_2;
        scale[dof - 1] = std::f64::consts::FRAC_1_SQRT_2;
    }
    let tri = Tridiagonal { d, e };
    let bounds = tri.gershgorin();
    let bounds = (bounds.0 - 1.0, bounds.1 + 1.0);
    let weights = trapezoid_weights(mesh, he);
    let i0 = mesh / 2;
    let pairs: Vec<(f64, Vec<f64>)> = (0..count)
        .into_par_iter()
        .map(|k| {
            let lambda = tri.eigenvalue(k, bounds);
            let u = tri.eigenvector(lambda);
            let mut full = vec![0.0; mesh + 1];
            for (r, val) in u.iter().enumerate() {
                full[first + r] = val / scale[r];
            }
            let norm = full.iter().zip(&weights).map(|(v, w)| w * v * v).sum::<f64>().sqrt();
            // Sign: first clearly nonzero sample positive.
            let peak = full.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let lead = full.iter().find(|v| v.abs() > 1e-3 * peak).copied().unwrap_or(1.0);
            let s = lead.signum() / norm;
            full.iter_mut().for_each(|v| *v *= s);
            (lambda, full)
        })
        .collect();
    let mut lambda = Vec::with_capacity(count);
    let mut beta = Vec::with_capacity(count);
    let mut gamma = Vec::with_capacity(count);
    let mut eigenvectors = Vec::with_capacity(count);
    for (l, v) in pairs {
        lambda.push(l);
        beta.push((v[i0 + 1] - v[i0 - 1]) / (2.0 * he));
        gamma.push(-v[i0]);
        eigenvectors.push(v);
    }
    if lambda.windows(2).any(|w| w[1] <= w[0]) {
        warnings.push("eigenvalues are not strictly increasing (degenerate or unresolved spectrum)".into());
    }
    Ok(SpectralMeasure { half_length, bc, mesh, lambda, beta, gamma, eigenvectors, warnings })
}

/// `s(λ, t) = sin(√λ t)/√λ`, `t`, or `sinh(√-λ t)/√-λ`.
pub fn wave_kernel(lambda: f64, t: f64) -> f64 {
    let z = lambda * t * t;
    if z.abs() < 1e-3 {
        // t (1 - z/6 + z^2/120 - z^3/5040 + z^4/362880)
        return t * (1.0 + z * (-1.0 / 6.0 + z * (1.0 / 120.0 + z * (-1.0 / 5040.0 + z / 362_880.0))));
    }
    if lambda > 0.0 {
        let w = lambda.sqrt();
        (w * t).sin() / w
    } else {
        let w = (-lambda).sqrt();
        (w * t).sinh() / w
    }
}

/// `∫_0^1 (1-τ) e^{iθτ} dτ` and `∫_0^1 τ e^{iθτ} dτ` as (re, im) pairs.
fn linear_panel_moments(theta: f64) -> ((f64, f64), (f64, f64)) {
    if theta.abs() < 0.5 {
        let (mut i0, mut i1) = ((0.0, 0.0), (0.0, 0.0));
        // (iθ)^k / k!
        let (mut re, mut im) = (1.0, 0.0);
        for k in 0..30 {
            let kf = k as f64;
            let c0 = 1.0 / ((kf + 1.0) * (kf + 2.0));
            let c1 = 1.0 / (kf + 2.0);
            i0 = (i0.0 + c0 * re, i0.1 + c0 * im);
            i1 = (i1.0 + c1 * re, i1.1 + c1 * im);
            let next = (-im * theta / (kf + 1.0), re * theta / (kf + 1.0));
            re = next.0;
            im = next.1;
        }
        (i0, i1)
    } else {
        let (c, s) = (theta.cos(), theta.sin());
        // full = (e^{iθ} - 1)/(iθ)
        let full = (s / theta, (1.0 - c) / theta);
        // i1 = e^{iθ}/(iθ) + (e^{iθ} - 1)/θ^2
        let a = (s / theta, -c / theta);
        let b = ((c - 1.0) / (theta * theta), s / (theta * theta));
        let i1 = (a.0 + b.0, a.1 + b.1);
        ((full.0 - i1.0, full.1 - i1.1), i1)
    }
}

/// `c(t_k) = ∫_0^{t_k} s(λ, t_k - s) g(s) ds` for all grid times, with `g`
/// interpolated linearly between samples (exact integration for `λ t^2` not
/// small; trapezoid convolution otherwise).
pub fn mode_coefficients(lambda: f64, g: &[f64], h: f64) -> Vec<f64> {
    let n = g.len() - 1;
    let horizon = n as f64 * h;
    if lambda * horizon * horizon <= 1e-4 || lambda <= 0.0 {
        let kernel: Vec<f64> = (0..=n).map(|k| wave_kernel(lambda, k as f64 * h)).collect();
        return (0..=n)
            .map(|m| {
                trapezoid_weights(m, h).iter().enumerate().map(|(j, w)| w * kernel[m - j] * g[j]).sum()
            })
            .collect();
    }
    let omega = lambda.sqrt();
    let ((p0r, p0i), (p1r, p1i)) = linear_panel_moments(omega * h);
    let mut a = 0.0;
    let mut b = 0.0;
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        let s0 = (k - 1) as f64 * h;
        let (er, ei) = ((omega * s0).cos(), (omega * s0).sin());
        let pr = g[k - 1] * p0r + g[k] * p1r;
        let pi = g[k - 1] * p0i + g[k] * p1i;
        a += h * (er * pr - ei * pi);
        b += h * (er * pi + ei * pr);
        let t = k as f64 * h;
        out[k] = ((omega * t).sin() * a - (omega * t).cos() * b) / omega;
    }
    out
}

/// Spectral forcing `f1 β + f2' γ` of one mode.
fn forcing(f: &Control, beta: f64, gamma: f64) -> Vec<f64> {
    f.f1().iter().zip(f.df2()).map(|(a, d)| a * beta + d * gamma).collect()
}

/// A spectral partial sum with its tail indicator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralValue<T> {
    pub value: T,
    /// Relative movement of the partial sums over the last 10% of modes.
    pub tail: f64,
    pub flagged: bool,
}

/// Default tail tolerance for flagging.
pub const TAIL_TOLERANCE: f64 = 0.05;

fn tail_start(len: usize) -> usize {
    len - (len / 10).max(1)
}

/// `Σ_n c_n(t) (β_n, γ_n)` on the control grid.
pub fn spectral_response(sigma: &SpectralMeasure, f: &Control) -> Result<SpectralValue<(Vec<f64>, Vec<f64>)>> {
    if f.grid().horizon >= 2.0 * sigma.half_length {
        return Err(Error::domain("spectral response needs t < 2N"));
    }
    let h = f.grid().h();
    let coeffs: Vec<Vec<f64>> = (0..sigma.len())
        .into_par_iter()
        .map(|n| mode_coefficients(sigma.lambda[n], &forcing(f, sigma.beta[n], sigma.gamma[n]), h))
        .collect();
    let len = f.grid().len();
    let cut = tail_start(sigma.len());
    let (mut r1, mut r2) = (vec![0.0; len], vec![0.0; len]);
    let (mut head1, mut head2) = (vec![0.0; len], vec![0.0; len]);
    for (n, c) in coeffs.iter().enumerate() {
        if n == cut {
            head1.clone_from(&r1);
            head2.clone_from(&r2);
        }
        for k in 0..len {
            r1[k] += c[k] * sigma.beta[n];
            r2[k] += c[k] * sigma.gamma[n];
        }
    }
    let tail = relative_change(&[&head1, &head2], &[&r1, &r2]);
    Ok(SpectralValue { value: (r1, r2), tail, flagged: tail > TAIL_TOLERANCE })
}

fn relative_change(a: &[&Vec<f64>], b: &[&Vec<f64>]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        for (u, v) in x.iter().zip(y.iter()) {
            num += (u - v) * (u - v);
            den += v * v;
        }
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

/// Spectral response of `q` minus that of the free operator on the same
/// interval, mesh and cutoff. The free sum carries the singular part
/// `(-f1'/2, f2/2)`, so the difference approximates `R * F`.
pub fn renormalized_response(
    sigma: &SpectralMeasure,
    free: &SpectralMeasure,
    f: &Control,
) -> Result<SpectralValue<(Vec<f64>, Vec<f64>)>> {
    let a = spectral_response(sigma, f)?;
    let b = spectral_response(free, f)?;
    let r1: Vec<f64> = a.value.0.iter().zip(&b.value.0).map(|(x, y)| x - y).collect();
    let r2: Vec<f64> = a.value.1.iter().zip(&b.value.1).map(|(x, y)| x - y).collect();
    let tail = a.tail.max(b.tail);
    Ok(SpectralValue { value: (r1, r2), tail, flagged: a.flagged || b.flagged })
}

/// `A_n(F) = c_n(T)` for every mode.
fn amplitudes(sigma: &SpectralMeasure, f: &Control) -> Vec<f64> {
    let h = f.grid().h();
    (0..sigma.len())
        .into_par_iter()
        .map(|n| *mode_coefficients(sigma.lambda[n], &forcing(f, sigma.beta[n], sigma.gamma[n]), h).last().unwrap())
        .collect()
}

/// `Σ_n A_n(F) A_n(G)`.
pub fn spectral_connecting_form(sigma: &SpectralMeasure, f: &Control, g: &Control) -> Result<SpectralValue<f64>> {
    if f.grid().horizon >= sigma.half_length {
        return Err(Error::domain("spectral connecting form needs T < N"));
    }
    if !f.grid().same_as(g.grid()) {
        return Err(Error::shape("controls live on different grids"));
    }
    let (a, b) = (amplitudes(sigma, f), amplitudes(sigma, g));
    let cut = tail_start(sigma.len());
    let head: f64 = a[..cut].iter().zip(&b[..cut]).map(|(x, y)| x * y).sum();
    let value = head + a[cut..].iter().zip(&b[cut..]).map(|(x, y)| x * y).sum::<f64>();
    let tail = if value != 0.0 { ((value - head) / value).abs() } else { (value - head).abs() };
    Ok(SpectralValue { value, tail, flagged: tail > TAIL_TOLERANCE })
}

/// `v^F(·, t) = Σ c_n(t) y_n` on the control grid, restricted to `|x| <= t`.
pub fn spectral_forward(sigma: &SpectralMeasure, f: &Control, t: f64) -> Result<SpectralValue<StateVector>> {
    let grid = *f.grid();
    let m = grid
        .index_of(t)
        .ok_or_else(|| Error::domain(format!("t = {t} is not a node of the control grid")))?;
    if t >= sigma.half_length {
        return Err(Error::domain("spectral forward solution needs t < N"));
    }
    let h = grid.h();
    let c: Vec<f64> = (0..sigma.len())
        .into_par_iter()
        .map(|n| mode_coefficients(sigma.lambda[n], &forcing(&f.prefix(m), sigma.beta[n], sigma.gamma[n]), h)[m])
        .collect();
    let cut = tail_start(sigma.len());
    let eval = |x: f64, upto: usize| -> f64 { (0..upto).map(|n| c[n] * sigma.eigenfunction(n, x)).sum() };
    let mut a1 = vec![0.0; grid.len()];
    let mut a2 = vec![0.0; grid.len()];
    let mut h1 = vec![0.0; grid.len()];
    let mut h2 = vec![0.0; grid.len()];
    for i in 0..=m {
        let x = grid.t(i);
        a1[i] = eval(x, sigma.len());
        a2[i] = eval(-x, sigma.len());
        h1[i] = eval(x, cut);
        h2[i] = eval(-x, cut);
    }
    let tail = relative_change(&[&h1, &h2], &[&a1, &a2]);
    Ok(SpectralValue { value: StateVector::new(grid, a1, a2), tail, flagged: tail > TAIL_TOLERANCE })
}

/// Relative L2 distance of the time-integrated traces `∫_0^t a` and `∫_0^t b`
/// over both components.
pub fn integrated_relative_l2(a: (&[f64], &[f64]), b: (&[f64], &[f64]), h: f64) -> f64 {
    let ia = [cumtrapz(a.0, h), cumtrapz(a.1, h)];
    let ib = [cumtrapz(b.0, h), cumtrapz(b.1, h)];
    relative_change(&[&ib[0], &ib[1]], &[&ia[0], &ia[1]])
}

/// Dynamic counterpart of [`renormalized_response`]: `R * F` from response data.
pub fn dynamic_regular_response(r: &ResponseMatrix, f: &Control) -> Result<(Vec<f64>, Vec<f64>)> {
    regular_part(r, f)
}

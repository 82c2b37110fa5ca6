//! Quadrature, finite differences, tridiagonal solves and cubic splines on
//! uniform grids.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Composite trapezoid weights for `n` steps of size `h` (`n + 1` nodes).
/// For `n == 0` the single weight is zero.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n + 1];
    if n == 0 {
        w[0] = 0.0;
    } else {
        w[0] = 0.5 * h;
        w[n] = 0.5 * h;
    }
    w
}

/// Cumulative trapezoid integral, starting at zero.
pub fn cumtrapz(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..f.len() {
        acc += 0.5 * h * (f[k - 1] + f[k]);
        out.push(acc);
    }
    out.truncate(f.len());
    out
}

/// First derivative of uniformly sampled data: 4th-order central differences
/// in the interior, 2nd-order central one node in from each end, one-sided
/// 2nd-order at the ends.
pub fn derivative_fd(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            d[0] = (f[1] - f[0]) / h;
            d[1] = d[0];
        }
        return d;
    }
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = if i >= 2 && i + 2 < n {
            (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h)
        } else {
            (f[i + 1] - f[i - 1]) / (2.0 * h)
        };
    }
    d
}

/// First derivative with 4th-order stencils everywhere (one-sided at the two
/// nodes nearest each end). Needs at least 5 samples.
pub fn derivative_o4(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5, "derivative_o4 needs at least 5 samples");
    let mut d = vec![0.0; n];
    let c = 12.0 * h;
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / c;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / c;
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / c;
    }
    d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / c;
    d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / c;
    d
}

/// 5-point second difference at interior node `i` (`2 <= i < len - 2`).
pub fn second_difference5(f: &[f64], i: usize, h: f64) -> f64 {
    (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h * h)
}

/// Thomas algorithm for a tridiagonal system. `lower[i]` couples row `i + 1`
/// to column `i`; `upper[i]` couples row `i` to column `i + 1`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if rhs.len() != n || lower.len() + 1 != n || upper.len() + 1 != n {
        return Err(Error::shape("tridiagonal system dimensions disagree"));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut b = diag[0];
    if b == 0.0 {
        return Err(Error::Solver("zero pivot in tridiagonal solve".into()));
    }
    if n > 1 {
        c[0] = upper[0] / b;
    }
    d[0] = rhs[0] / b;
    for i in 1..n {
        b = diag[i] - lower[i - 1] * c[i - 1];
        if b == 0.0 {
            return Err(Error::Solver("zero pivot in tridiagonal solve".into()));
        }
        if i + 1 < n {
            c[i] = upper[i] / b;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / b;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Natural cubic spline through strictly increasing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::shape("spline abscissae and ordinates differ in length"));
        }
        if n < 3 {
            return Err(Error::config("a cubic spline needs at least 3 knots"));
        }
        if x.windows(2).any(|w| w[1].is_nan() || w[1] <= w[0]) {
            return Err(Error::config("spline knots must be strictly increasing"));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::config("spline data must be finite"));
        }
        let mut m = vec![0.0; n];
        let k = n - 2;
        let mut lower = vec![0.0; k.saturating_sub(1)];
        let mut upper = vec![0.0; k.saturating_sub(1)];
        let mut diag = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for r in 0..k {
            let i = r + 1;
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            diag[r] = (h0 + h1) / 3.0;
            if r + 1 < k {
                upper[r] = h1 / 6.0;
                lower[r] = h1 / 6.0;
            }
            rhs[r] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        let inner = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        m[1..n - 1].copy_from_slice(&inner);
        Ok(Self { x: x.to_vec(), y: y.to_vec(), m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    fn eval_in(&self, i: usize, t: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    /// Evaluates the spline; the end cubics are extended outside the knots.
    pub fn eval(&self, t: f64) -> f64 {
        self.eval_in(self.segment(t), t)
    }

    /// `∫_{x_0}^{t} s`, by Simpson's rule on each cubic piece (exact).
    pub fn integral_from_start(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let mut acc = 0.0;
        for j in 0..i {
            acc += self.simpson_piece(j, self.x[j], self.x[j + 1]);
        }
        acc + self.simpson_piece(i, self.x[i], t)
    }

    fn simpson_piece(&self, i: usize, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (self.eval_in(i, a) + 4.0 * self.eval_in(i, 0.5 * (a + b)) + self.eval_in(i, b))
    }
}

/// Cubic smoothing spline on a uniform grid: minimizes
/// `h Σ (y_i - g_i)^2 + lambda ∫ g''^2` and returns the fitted values `g_i`.
pub fn smoothing_spline(y: &[f64], h: f64, lambda: f64) -> Result<Vec<f64>> {
    let n = y.len();
    if n < 4 {
        return Err(Error::Reconstruction("smoothing needs at least 4 samples".into()));
    }
    if lambda == 0.0 {
        return Ok(y.to_vec());
    }
    // Reinsch form: (R + mu Q^T Q) gamma = Q^T y,  g = y - mu Q gamma,
    // with mu = lambda / h because the fidelity weights are all h.
    let k = n - 2;
    let mu = lambda / h;
    let qt_col = |j: usize| -> [(usize, f64); 3] {
        [(j, 1.0 / h), (j + 1, -2.0 / h), (j + 2, 1.0 / h)]
    };
    let mut a = DMatrix::<f64>::zeros(k, k);
    for r in 0..k {
        a[(r, r)] += 2.0 * h / 3.0;
        if r + 1 < k {
            a[(r, r + 1)] += h / 6.0;
            a[(r + 1, r)] += h / 6.0;
        }
        for c in r.saturating_sub(2)..(r + 3).min(k) {
            let mut s = 0.0;
            for (i, qi) in qt_col(r) {
                for (j, qj) in qt_col(c) {
                    if i == j {
                        s += qi * qj;
                    }
                }
            }
            a[(r, c)] += mu * s;
        }
    }
    let mut rhs = DVector::<f64>::zeros(k);
    for r in 0..k {
        rhs[r] = qt_col(r).iter().map(|&(i, q)| q * y[i]).sum();
    }
    let gamma = a
        .cholesky()
        .ok_or_else(|| Error::Solver("smoothing-spline system is not positive definite".into()))?
        .solve(&rhs);
    let mut g = y.to_vec();
    for r in 0..k {
        for (i, q) in qt_col(r) {
            g[i] -= mu * q * gamma[r];
        }
    }
    Ok(g)
}

/// Largest absolute value in a slice (0 for an empty slice).
pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Discrete L2 norm with trapezoid weights.
pub fn l2_norm(v: &[f64], h: f64) -> f64 {
    let w = trapezoid_weights(v.len().saturating_sub(1), h);
    v.iter().zip(&w).map(|(x, wi)| wi * x * x).sum::<f64>().sqrt()
}

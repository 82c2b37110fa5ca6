//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use bcwave::{Potential, UniformGrid};

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
#[allow(clippy::too_many_arguments)]
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `y'' = q y`, `y(0) = 0`, `y'(0) = 1`, integrated by classical RK4 to `x`
/// (negative `x` integrates to the left).
pub fn cauchy_rk4(p: &Potential, x: f64, steps: usize) -> f64 {
    let h = x / steps as f64;
    let rhs = |s: f64, y: [f64; 2]| [y[1], p.eval(s).unwrap() * y[0]];
    let mut y = [0.0, 1.0];
    for i in 0..steps {
        let s = i as f64 * h;
        let k1 = rhs(s, y);
        let k2 = rhs(s + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = rhs(s + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = rhs(s + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for c in 0..2 {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    y[0]
}

/// Exact eigenvalues of the 3-point Dirichlet Laplacian on `(-n_half, n_half)`
/// with `mesh` cells.
pub fn discrete_dirichlet_free(n_half: f64, mesh: usize, count: usize) -> Vec<f64> {
    let h = 2.0 * n_half / mesh as f64;
    (1..=count)
        .map(|k| {
            let s = (k as f64 * std::f64::consts::PI / (2.0 * mesh as f64)).sin();
            4.0 / (h * h) * s * s
        })
        .collect()
}

/// Free-space forward solution `(u(x,t), u(-x,t))` from d'Alembert.
pub fn free_state(f1: &dyn Fn(f64) -> f64, f2: &dyn Fn(f64) -> f64, x: f64, t: f64) -> (f64, f64) {
    if x > t {
        return (0.0, 0.0);
    }
    let s = t - x;
    (0.5 * f1(s) - 0.5 * f2(s), -0.5 * f1(s) - 0.5 * f2(s))
}

/// Kernel grid `(2T, 2n)` matching a control grid `(T, n)`.
pub fn kernel_grid(horizon: f64, n: usize) -> UniformGrid {
    UniformGrid::new(2.0 * horizon, 2 * n).unwrap()
}

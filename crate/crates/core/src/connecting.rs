//! Connecting (Gram) operator `C^T F = F/2 + ∫_0^T C(t,s) F(s) ds` built from
//! response data alone, with `(C^T F, G) = (u^F(·,T), u^G(·,T))`.
//!
//! With `p1 = ∫ r11`, `p2 = ∫ r12`, `p̃1` the odd extension of `p2` and `r̃21`
//! the odd extension of `r21`:
//!
//! ```text
//! C11 = 1/2 [p1(2T-t-s) - p1(|t-s|)]      C12 = 1/2 [p̃1(2T-t-s) - p̃1(t-s)]
//! C21 = 1/2 [r̃21(t-s) + r21(2T-t-s)]     C22 = 1/2 [r22(|t-s|) + r22(2T-t-s)]
//! ```
//!
//! Exact response data satisfy `r21' = r12`, so `C21(t,s) = C12(s,t)` and the
//! block kernel is symmetric under `(t,s) -> (s,t)` with block transpose.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::ResponseMatrix;
use crate::model::{inner_outer, Control, Mat2, UniformGrid, Vec2};
use crate::numerics::{cumtrapz, max_abs, trapezoid_weights};

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectingKernel {
    grid: UniformGrid,
    /// `C(t_i, s_j)` at `i (n+1) + j`.
    data: Vec<Mat2>,
    reflected: bool,
    p1: Vec<f64>,
    p2: Vec<f64>,
    r21: Vec<f64>,
}

/// Structural residuals of a connecting kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryReport {
    /// `max |C21(t,s) - C12(s,t)|`.
    pub block_transpose: f64,
    /// `max |C21(t,s) - C12(t,s)|`.
    pub pointwise: f64,
    /// `max |r̃21 - p̃1|`.
    pub tilde_difference: f64,
    /// `max |r̃21 + p̃1|`.
    pub tilde_sum: f64,
}

fn odd(v: &[f64], d: isize) -> f64 {
    if d >= 0 {
        v[d as usize]
    } else {
        -v[(-d) as usize]
    }
}

/// Builds the kernel on `[0, T]^2` from response data on `[0, 2T]` (or longer).
pub fn build_connecting(r: &ResponseMatrix, horizon: f64) -> Result<ConnectingKernel> {
    let h = r.grid().h();
    let n_real = horizon / h;
    let n = n_real.round() as usize;
    if (n_real - n as f64).abs() > 1e-8 * n_real.max(1.0) {
        return Err(Error::shape(format!("horizon {horizon} is not a multiple of the response step {h}")));
    }
    if 2 * n > r.grid().n {
        return Err(Error::domain(format!(
            "response data cover [0, {}] but [0, {}] is needed",
            r.grid().horizon,
            2.0 * horizon
        )));
    }
    let grid = UniformGrid::new(horizon, n)?;
    let r = r.prefix(2 * n);
    let p1 = cumtrapz(&r.r11, h);
    let p2 = cumtrapz(&r.r12, h);
    let m = n + 1;
    let data: Vec<Mat2> = (0..m * m)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / m, idx % m);
            let a = 2 * n - i - j;
            let d = i as isize - j as isize;
            let ad = d.unsigned_abs();
            Mat2::new(
                0.5 * (p1[a] - p1[ad]),
                0.5 * (p2[a] - odd(&p2, d)),
                0.5 * (odd(&r.r21, d) + r.r21[a]),
                0.5 * (r.r22[ad] + r.r22[a]),
            )
        })
        .collect();
    Ok(ConnectingKernel { grid, data, reflected: false, p1, p2, r21: r.r21 })
}

impl ConnectingKernel {
    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn is_reflected(&self) -> bool {
        self.reflected
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Mat2 {
        self.data[i * (self.grid.n + 1) + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, c| m.max(c.max_abs()))
    }

    pub fn symmetry_report(&self) -> SymmetryReport {
        let m = self.grid.n + 1;
        let mut block_transpose = 0.0_f64;
        let mut pointwise = 0.0_f64;
        for i in 0..m {
            for j in 0..m {
                let c = self.at(i, j);
                block_transpose = block_transpose.max((c.a21 - self.at(j, i).a12).abs());
                pointwise = pointwise.max((c.a21 - c.a12).abs());
            }
        }
        let diff: Vec<f64> = self.r21.iter().zip(&self.p2).map(|(a, b)| a - b).collect();
        let sum: Vec<f64> = self.r21.iter().zip(&self.p2).map(|(a, b)| a + b).collect();
        SymmetryReport { block_transpose, pointwise, tilde_difference: max_abs(&diff), tilde_sum: max_abs(&sum) }
    }

    /// Kernel of the connecting operator for the shorter horizon `k h`:
    /// `C^τ(t,s) = C^T(T - τ + t, T - τ + s)`.
    pub fn restrict(&self, k: usize) -> Result<ConnectingKernel> {
        let n = self.grid.n;
        if k > n || k == 0 {
            return Err(Error::domain(format!("restriction to {k} steps of a {n}-step kernel")));
        }
        let off = if self.reflected { 0 } else { n - k };
        let mut data = Vec::with_capacity((k + 1) * (k + 1));
        for i in 0..=k {
            for j in 0..=k {
                data.push(self.at(off + i, off + j));
            }
        }
        let cut = |v: &Vec<f64>| if v.len() > 2 * k { v[..=2 * k].to_vec() } else { v.clone() };
        Ok(ConnectingKernel {
            grid: self.grid.prefix(k),
            data,
            reflected: self.reflected,
            p1: cut(&self.p1),
            p2: cut(&self.p2),
            r21: cut(&self.r21),
        })
    }

}

/// `C̃(t,s) = C(T - t, T - s)`.
pub fn reflect_kernel(ck: &ConnectingKernel) -> ConnectingKernel {
    let n = ck.grid.n;
    let mut data = Vec::with_capacity(ck.data.len());
    for i in 0..=n {
        for j in 0..=n {
            data.push(ck.at(n - i, n - j));
        }
    }
    ConnectingKernel { data, reflected: !ck.reflected, ..ck.clone() }
}

/// `C^T F = F/2 + ∫_0^T C(t,s) F(s) ds`. The kernels kink on `s = t`; every
/// such point is a grid node, so the composite trapezoid rule is split there
/// automatically and stays second order.
pub fn apply_connecting(ck: &ConnectingKernel, f: &Control) -> Result<Control> {
    if !ck.grid.same_as(f.grid()) {
        return Err(Error::shape("control grid differs from the connecting-kernel grid"));
    }
    let n = ck.grid.n;
    let w = trapezoid_weights(n, ck.grid.h());
    let g: Vec<Vec2> = f.f1().iter().zip(f.f2()).map(|(a, b)| Vec2::new(*a, *b)).collect();
    let out: Vec<Vec2> = (0..=n)
        .into_par_iter()
        .map(|i| {
            (0..=n).fold(0.5 * g[i], |acc, j| acc + w[j] * (ck.at(i, j) * g[j]))
        })
        .collect();
    Ok(Control::from_samples(
        ck.grid,
        out.iter().map(|v| v.x).collect(),
        out.iter().map(|v| v.y).collect(),
    ))
}

/// `(C^T F, G)`.
pub fn connecting_form(ck: &ConnectingKernel, f: &Control, g: &Control) -> Result<f64> {
    inner_outer(&apply_connecting(ck, f)?, g)
}

/// Symmetric Nyström matrix `D/2 + D C D` (trapezoid weights `D`),
/// component-major (`index = c (n+1) + i`).
#[derive(Debug, Clone)]
pub struct AssembledMatrix {
    pub matrix: DMatrix<f64>,
    pub weights: Vec<f64>,
    /// `max |C_ab(t_i, t_j) - C_ba(t_j, t_i)|` before symmetrization.
    pub asymmetry: f64,
}

pub fn assemble_matrix(ck: &ConnectingKernel) -> Result<AssembledMatrix> {
    let n = ck.grid.n;
    let m = n + 1;
    let h = ck.grid.h();
    let w = trapezoid_weights(n, h);
    let mut a = DMatrix::<f64>::zeros(2 * m, 2 * m);
    let mut asymmetry = 0.0_f64;
    for i in 0..m {
        for j in 0..m {
            let c = ck.at(i, j);
            let ct = ck.at(j, i).transpose();
            asymmetry = asymmetry.max((c - ct).max_abs());
            for r in 0..2 {
                for s in 0..2 {
                    a[(r * m + i, s * m + j)] = w[i] * w[j] * 0.5 * (c.entry(r, s) + ct.entry(r, s));
                }
            }
        }
        a[(i, i)] += 0.5 * w[i];
        a[(m + i, m + i)] += 0.5 * w[i];
    }
    let limit = 100.0 * h * h * ck.max_abs().max(1.0);
    if asymmetry > limit {
        return Err(Error::Consistency { what: "connecting-kernel asymmetry".into(), observed: asymmetry, limit });
    }
    Ok(AssembledMatrix { matrix: a, weights: w, asymmetry })
}

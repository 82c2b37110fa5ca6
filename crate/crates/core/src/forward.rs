//! Forward solution through the kernel representation, the control operator
//! `W^T = S (I + K) J^T`, and the response matrix.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::goursat::{extract_traces, KernelField};
use crate::model::{Control, Mat2, StateVector, UniformGrid, Vec2, S};
use crate::numerics::{derivative_fd, max_abs, trapezoid_weights};

/// `r11 = w1_x(0,·)`, `r12 = w2_x(0,·)`, `r21 = -w1(0,·)`, `r22 = -w2(0,·)` on `[0, 2T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    grid: UniformGrid,
    pub r11: Vec<f64>,
    pub r12: Vec<f64>,
    pub r21: Vec<f64>,
    pub r22: Vec<f64>,
}

impl ResponseMatrix {
    pub fn new(grid: UniformGrid, r11: Vec<f64>, r12: Vec<f64>, r21: Vec<f64>, r22: Vec<f64>) -> Result<Self> {
        if [&r11, &r12, &r21, &r22].iter().any(|r| r.len() != grid.len()) {
            return Err(Error::shape("response entries must have one sample per grid node"));
        }
        Ok(Self { grid, r11, r12, r21, r22 })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn at(&self, k: usize) -> Mat2 {
        Mat2::new(self.r11[k], self.r12[k], self.r21[k], self.r22[k])
    }

    /// Response data on the first `k` steps.
    pub fn prefix(&self, k: usize) -> Self {
        let cut = |v: &Vec<f64>| v[..=k].to_vec();
        Self {
            grid: self.grid.prefix(k),
            r11: cut(&self.r11),
            r12: cut(&self.r12),
            r21: cut(&self.r21),
            r22: cut(&self.r22),
        }
    }

    /// `max |r21' - r12|` and `max |r21' + r12|`, with `r21'` by finite differences.
    pub fn compatibility_residuals(&self) -> (f64, f64) {
        let d = derivative_fd(&self.r21, self.grid.h());
        let minus: Vec<f64> = d.iter().zip(&self.r12).map(|(a, b)| a - b).collect();
        let plus: Vec<f64> = d.iter().zip(&self.r12).map(|(a, b)| a + b).collect();
        (max_abs(&minus), max_abs(&plus))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.r11).max(max_abs(&self.r12)).max(max_abs(&self.r21)).max(max_abs(&self.r22))
    }
}

pub fn response_matrix(k: &KernelField) -> ResponseMatrix {
    let tr = extract_traces(k);
    let neg = |v: Vec<f64>| v.into_iter().map(|x| -x).collect();
    ResponseMatrix { grid: tr.grid, r11: tr.w1x, r12: tr.w2x, r21: neg(tr.w1), r22: neg(tr.w2) }
}

fn check_kernel_grid(f: &UniformGrid, k: &KernelField, horizon: f64) -> Result<()> {
    if !f.same_step(k.grid()) {
        return Err(Error::shape(format!(
            "control step {} differs from kernel step {}",
            f.h(),
            k.grid().h()
        )));
    }
    if horizon > k.grid().horizon * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "time {horizon} exceeds the kernel horizon {}",
            k.grid().horizon
        )));
    }
    Ok(())
}

/// `u^F(·, t)` on the control grid; zero for `x > t`.
pub fn forward_solution(f: &Control, k: &KernelField, t: f64) -> Result<StateVector> {
    let grid = *f.grid();
    check_kernel_grid(&grid, k, t)?;
    let m = grid
        .index_of(t)
        .ok_or_else(|| Error::domain(format!("t = {t} is not a node of the control grid")))?;
    let (f1, f2) = (f.f1(), f.f2());
    let h = grid.h();
    let rows: Vec<(f64, f64)> = (0..=grid.n)
        .into_par_iter()
        .map(|i| {
            if i > m {
                return (0.0, 0.0);
            }
            let mut right = 0.5 * f1[m - i] - 0.5 * f2[m - i];
            let mut left = -0.5 * f1[m - i] - 0.5 * f2[m - i];
            let w = trapezoid_weights(m - i, h);
            let ii = i as isize;
            for (l, wl) in w.iter().enumerate() {
                let j = i + l;
                let (g1, g2) = (f1[m - j], f2[m - j]);
                right += wl * (k.w1(ii, j) * g1 + k.w2(ii, j) * g2);
                left += wl * (k.w1(-ii, j) * g1 + k.w2(-ii, j) * g2);
            }
            (right, left)
        })
        .collect();
    let (a1, a2) = rows.into_iter().unzip();
    Ok(StateVector::new(grid, a1, a2))
}

/// Block kernel `K = 2 S W` on the triangle `0 <= x <= s <= T`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorK {
    grid: UniformGrid,
    data: Vec<Mat2>,
}

pub(crate) fn tri_index(n: usize, i: usize, j: usize) -> usize {
    i * (n + 1) - i * i.saturating_sub(1) / 2 + (j - i)
}

pub(crate) fn tri_len(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

impl OperatorK {
    pub fn from_kernels(k: &KernelField, grid: &UniformGrid) -> Result<Self> {
        check_kernel_grid(grid, k, grid.horizon)?;
        let n = grid.n;
        let mut data = vec![Mat2::ZERO; tri_len(n)];
        for i in 0..=n {
            let ii = i as isize;
            for j in i..=n {
                let (a, b) = (k.w1(ii, j), k.w1(-ii, j));
                let (c, d) = (k.w2(ii, j), k.w2(-ii, j));
                data[tri_index(n, i, j)] = Mat2::new(a - b, c - d, -a - b, -c - d);
            }
        }
        Ok(Self { grid: *grid, data })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    /// `k(x_i, s_j)`; zero below the diagonal.
    pub fn at(&self, i: usize, j: usize) -> Mat2 {
        if j < i {
            Mat2::ZERO
        } else {
            self.data[tri_index(self.grid.n, i, j)]
        }
    }

    /// `(K g)(x_i) = ∫_{x_i}^T k(x_i, s) g(s) ds`, trapezoid on `[x_i, T]`.
    pub fn apply(&self, g: &[Vec2]) -> Vec<Vec2> {
        let n = self.grid.n;
        let h = self.grid.h();
        (0..=n)
            .map(|i| {
                let w = trapezoid_weights(n - i, h);
                w.iter().enumerate().fold(Vec2::ZERO, |acc, (l, wl)| acc + *wl * (self.at(i, i + l) * g[i + l]))
            })
            .collect()
    }

    /// Nyström matrix of `K` in component-major layout (`index = c (n+1) + i`).
    pub fn quadrature_matrix(&self) -> DMatrix<f64> {
        let n = self.grid.n;
        let m = n + 1;
        let h = self.grid.h();
        let mut a = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..=n {
            let w = trapezoid_weights(n - i, h);
            for (l, wl) in w.iter().enumerate() {
                let j = i + l;
                let kij = self.at(i, j);
                for r in 0..2 {
                    for c in 0..2 {
                        a[(r * m + i, c * m + j)] = wl * kij.entry(r, c);
                    }
                }
            }
        }
        a
    }
}

fn as_pairs(f: &Control) -> Vec<Vec2> {
    f.f1().iter().zip(f.f2()).map(|(a, b)| Vec2::new(*a, *b)).collect()
}

/// `W^T F = S (I + K) J^T F`, cross-checked against the direct representation.
pub fn control_operator(f: &Control, k: &KernelField) -> Result<StateVector> {
    let grid = *f.grid();
    let kop = OperatorK::from_kernels(k, &grid)?;
    let factored = apply_control_operator(&kop, f);
    let direct = forward_solution(f, k, grid.horizon)?;
    let diff = factored.max_abs_diff(&direct);
    let limit = 100.0 * grid.h() * grid.h() * f.norm().max(1e-300);
    if diff > limit {
        return Err(Error::Consistency { what: "factored vs direct control operator".into(), observed: diff, limit });
    }
    Ok(factored)
}

/// `S (I + K) J^T F` for a precomputed `K`.
pub fn apply_control_operator(kop: &OperatorK, f: &Control) -> StateVector {
    let g = as_pairs(&f.time_reversed());
    let kg = kop.apply(&g);
    let (a1, a2): (Vec<f64>, Vec<f64>) = g
        .iter()
        .zip(&kg)
        .map(|(gi, ki)| {
            let v = S * (*gi + *ki);
            (v.x, v.y)
        })
        .unzip();
    StateVector::new(*f.grid(), a1, a2)
}

/// Weighted matrix `D^{1/2} W^T D^{-1/2}` (trapezoid weights `D`), whose
/// spectral condition number is that of `W^T` on the grid.
pub fn control_operator_matrix(kop: &OperatorK) -> DMatrix<f64> {
    let grid = *kop.grid();
    let n = grid.n;
    let m = n + 1;
    let mut wt = kop.quadrature_matrix();
    for i in 0..2 * m {
        wt[(i, i)] += 1.0;
    }
    let mut s = DMatrix::zeros(2 * m, 2 * m);
    let mut jt = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for r in 0..2 {
            for c in 0..2 {
                s[(r * m + i, c * m + i)] = S.entry(r, c);
            }
            jt[(r * m + i, r * m + (n - i))] = 1.0;
        }
    }
    let mut a = s * wt * jt;
    let w = trapezoid_weights(n, grid.h());
    for r in 0..2 * m {
        for c in 0..2 * m {
            a[(r, c)] *= (w[r % m] / w[c % m]).sqrt();
        }
    }
    a
}

/// Output of [`apply_response`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseOutput {
    pub value: Control,
    /// Set when `f1'` came from finite differences (lower order at the ends).
    pub endpoint_warning: bool,
}

/// Convolution `(R * F)(t_m) = ∫_0^{t_m} R(s) F(t_m - s) ds` on the control grid.
pub fn regular_part(r: &ResponseMatrix, f: &Control) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = *f.grid();
    if !grid.same_step(r.grid()) {
        return Err(Error::shape("control and response grids have different steps"));
    }
    if grid.n > r.grid().n {
        return Err(Error::domain(format!(
            "control horizon {} exceeds response horizon {}",
            grid.horizon,
            r.grid().horizon
        )));
    }
    let (f1, f2) = (f.f1(), f.f2());
    let h = grid.h();
    let out: Vec<(f64, f64)> = (0..=grid.n)
        .into_par_iter()
        .map(|m| {
            let w = trapezoid_weights(m, h);
            w.iter().enumerate().fold((0.0, 0.0), |(a, b), (j, wj)| {
                let (g1, g2) = (f1[m - j], f2[m - j]);
                (a + wj * (r.r11[j] * g1 + r.r12[j] * g2), b + wj * (r.r21[j] * g1 + r.r22[j] * g2))
            })
        })
        .collect();
    Ok(out.into_iter().unzip())
}

/// `R^T F = -1/2 (f1', -f2) + R * F`. Consumes response data only.
pub fn apply_response(r: &ResponseMatrix, f: &Control) -> Result<ResponseOutput> {
    let (c1, c2) = regular_part(r, f)?;
    let df1 = f.df1();
    let v1 = c1.iter().zip(&df1).map(|(c, d)| c - 0.5 * d).collect();
    let v2 = c2.iter().zip(f.f2()).map(|(c, g)| c + 0.5 * g).collect();
    Ok(ResponseOutput {
        value: Control::from_samples(*f.grid(), v1, v2),
        endpoint_warning: !f.has_analytic_derivative(),
    })
}

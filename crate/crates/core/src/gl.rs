//! Gelfand–Levitan route: solve for the kernel `m` of `(I + K)^{-1} - I` from
//! the reflected connecting kernel and read `q` off its diagonal.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connecting::ConnectingKernel;
use crate::error::{Error, Result};
use crate::forward::{tri_index, tri_len, OperatorK};
use crate::krein::TIKHONOV_SCALE;
use crate::model::{Mat2, RecoveredPotential, UniformGrid};
use crate::numerics::{derivative_o4, smoothing_spline, trapezoid_weights};

/// Sign used for the left half-line: `q(-x) = ±2 d/dx (m11 + m12)(x, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignConvention {
    /// `+`, from the diagonal algebra of `K = 2 S W`.
    #[default]
    Derived,
    /// `-`, the sign as usually printed.
    Printed,
}

/// Upper-triangular block kernel `m(x_i, s_j)`, `i <= j`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorM {
    grid: UniformGrid,
    data: Vec<Mat2>,
}

impl OperatorM {
    pub fn from_fn(grid: UniformGrid, f: impl Fn(usize, usize) -> Mat2) -> Self {
        let n = grid.n;
        let mut data = vec![Mat2::ZERO; tri_len(n)];
        for i in 0..=n {
            for j in i..=n {
                data[tri_index(n, i, j)] = f(i, j);
            }
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    /// `m(x_i, s_j)`; zero for `j < i`.
    pub fn at(&self, i: usize, j: usize) -> Mat2 {
        if j < i {
            Mat2::ZERO
        } else {
            self.data[tri_index(self.grid.n, i, j)]
        }
    }

    pub fn diagonal(&self) -> Vec<Mat2> {
        (0..=self.grid.n).map(|i| self.at(i, i)).collect()
    }

    pub fn max_abs_diff(&self, other: &OperatorM) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0_f64, |m, (a, b)| m.max((*a - *b).max_abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, a| m.max(a.max_abs()))
    }

    fn from_columns(grid: UniformGrid, columns: Vec<Vec<Mat2>>) -> Self {
        let n = grid.n;
        let mut data = vec![Mat2::ZERO; tri_len(n)];
        for (j, col) in columns.into_iter().enumerate() {
            for (i, v) in col.into_iter().enumerate() {
                data[tri_index(n, i, j)] = v;
            }
        }
        Self { grid, data }
    }
}

/// Weights of the trapezoid rule on `[x_i, s_j]` (nodes `i..=j`).
fn segment_weights(i: usize, j: usize, h: f64) -> Vec<f64> {
    trapezoid_weights(j - i, h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolterraInverse {
    pub m: OperatorM,
    /// `max |m + k + ∫ k m|` over the triangle.
    pub residual: f64,
}

/// `M` with `(I + K)(I + M) = I`, i.e. `m + k + ∫_x^s k(x,α) m(α,s) dα = 0`,
/// by backward substitution in each column.
pub fn invert_volterra(k: &OperatorK) -> VolterraInverse {
    let grid = *k.grid();
    let n = grid.n;
    let h = grid.h();
    let columns: Vec<Vec<Mat2>> = (0..=n)
        .into_par_iter()
        .map(|j| {
            let mut col = vec![Mat2::ZERO; j + 1];
            col[j] = -k.at(j, j);
            for i in (0..j).rev() {
                let w = segment_weights(i, j, h);
                let mut rhs = -k.at(i, j);
                for l in i + 1..=j {
                    rhs = rhs - w[l - i] * (k.at(i, l) * col[l]);
                }
                let lhs = Mat2::IDENTITY + w[0] * k.at(i, i);
                col[i] = lhs.inverse().unwrap_or(Mat2::IDENTITY) * rhs;
            }
            col
        })
        .collect();
    let m = OperatorM::from_columns(grid, columns);
    let mut residual = 0.0_f64;
    for j in 0..=n {
        for i in 0..=j {
            let w = segment_weights(i, j, h);
            let mut r = m.at(i, j) + k.at(i, j);
            for l in i..=j {
                r += w[l - i] * (k.at(i, l) * m.at(l, j));
            }
            residual = residual.max(r.max_abs());
        }
    }
    VolterraInverse { m, residual }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlSolution {
    pub m: OperatorM,
    /// Number of columns that needed a Tikhonov shift.
    pub regularized_columns: usize,
}

/// Solves `m(x,s) + G(x,s) + ∫_0^s G(x,α) m(α,s) dα = 0` for `0 <= x <= s`,
/// column by column, with `G = 2 C̃` the reflected Gram kernel doubled
/// (the operator `2 J C^T J - I`).
pub fn solve_gl(ct: &ConnectingKernel) -> Result<GlSolution> {
    if !ct.is_reflected() {
        return Err(Error::config("solve_gl expects the reflected connecting kernel"));
    }
    let grid = *ct.grid();
    let n = grid.n;
    let h = grid.h();
    let g = |i: usize, j: usize| 2.0 * ct.at(i, j);
    let columns: Vec<Result<(Vec<Mat2>, bool)>> = (0..=n)
        .into_par_iter()
        .map(|j| {
            let m = j + 1;
            let w = trapezoid_weights(j, h);
            let mut a = DMatrix::<f64>::identity(2 * m, 2 * m);
            for i in 0..m {
                for l in 0..m {
                    let gil = g(i, l);
                    for r in 0..2 {
                        for c in 0..2 {
                            a[(r * m + i, c * m + l)] += gil.entry(r, c) * w[l];
                        }
                    }
                }
            }
            let mut b = DMatrix::<f64>::zeros(2 * m, 2);
            for i in 0..m {
                let gij = g(i, j);
                for r in 0..2 {
                    for c in 0..2 {
                        b[(r * m + i, c)] = -gij.entry(r, c);
                    }
                }
            }
            let (x, regularized) = match a.clone().lu().solve(&b) {
                Some(x) if x.iter().all(|v| v.is_finite()) => (x, false),
                _ => {
                    let alpha = TIKHONOV_SCALE * a.trace().abs() / (2 * m) as f64;
                    let shifted = a + DMatrix::identity(2 * m, 2 * m) * alpha;
                    let x = shifted
                        .lu()
                        .solve(&b)
                        .ok_or_else(|| Error::Solver(format!("Gelfand–Levitan column {j} is singular")))?;
                    (x, true)
                }
            };
            let col = (0..m)
                .map(|i| Mat2::new(x[(i, 0)], x[(i, 1)], x[(m + i, 0)], x[(m + i, 1)]))
                .collect();
            Ok((col, regularized))
        })
        .collect();
    let mut cols = Vec::with_capacity(n + 1);
    let mut regularized_columns = 0;
    for c in columns {
        let (col, reg) = c?;
        regularized_columns += reg as usize;
        cols.push(col);
    }
    Ok(GlSolution { m: OperatorM::from_columns(grid, cols), regularized_columns })
}

/// `q(x) = 2 d/dx (m11 - m12)(x,x)` and `q(-x) = ±2 d/dx (m11 + m12)(x,x)`
/// on `x_j = -T + j h`. The diagonals are lightly smoothed (penalty `h^4`)
/// and differentiated with 4th-order stencils.
pub fn recover_q_from_m(m: &OperatorM, sign: SignConvention) -> Result<RecoveredPotential> {
    let grid = *m.grid();
    let n = grid.n;
    if n + 1 < 5 {
        return Err(Error::Reconstruction(format!("diagonal has only {} nodes", n + 1)));
    }
    let h = grid.h();
    let diag = m.diagonal();
    let dminus: Vec<f64> = diag.iter().map(|d| d.a11 - d.a12).collect();
    let dplus: Vec<f64> = diag.iter().map(|d| d.a11 + d.a12).collect();
    let right = derivative_o4(&smoothing_spline(&dminus, h, h.powi(4))?, h);
    let left = derivative_o4(&smoothing_spline(&dplus, h, h.powi(4))?, h);
    let s = match sign {
        SignConvention::Derived => 2.0,
        SignConvention::Printed => -2.0,
    };
    let mut q = vec![0.0; 2 * n + 1];
    for i in 1..=n {
        q[n + i] = 2.0 * right[i];
        q[n - i] = s * left[i];
    }
    q[n] = 0.5 * (2.0 * right[0] + s * left[0]);
    let x = (0..=2 * n).map(|j| -grid.horizon + j as f64 * h).collect();
    let valid = q.iter().map(|v| v.is_finite()).collect();
    Ok(RecoveredPotential { x, q, valid })
}

/// Weighted Hilbert–Schmidt norm of the kernel of `(I+M)^* (I+G) (I+M) - I`,
/// `G = 2 C̃`, with the adjoint taken in the trapezoid-weighted inner product.
///
/// With `B = G + M + G M` (the kernel of `(I+G)(I+M) - I`), the residual
/// kernel is `B(x,s)` for `x <= s` and
/// `M(s,x)^T + B(x,s) + ∫_s^x M(α,x)^T B(α,s) dα` for `x > s`. Every
/// composition is integrated piecewise between the kinks on the diagonal,
/// and `B(s,s)` enters the last integral as its limit from `x > s`.
pub fn operator_identity_residual(m: &OperatorM, ct: &ConnectingKernel) -> Result<f64> {
    let grid = *m.grid();
    if !grid.same_as(ct.grid()) {
        return Err(Error::shape("kernel grids differ"));
    }
    let n = grid.n;
    let sz = n + 1;
    let h = grid.h();
    let g = |i: usize, j: usize| 2.0 * ct.at(i, j);
    // `G + G M` on the whole square; adding `M` above the diagonal gives `B`.
    let gm: Vec<Mat2> = (0..sz * sz)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / sz, idx % sz);
            let w = trapezoid_weights(j, h);
            (0..=j).fold(g(i, j), |acc, l| acc + w[l] * (g(i, l) * m.at(l, j)))
        })
        .collect();
    let w = trapezoid_weights(n, h);
    let rows: Vec<f64> = (0..sz)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..sz {
                let e = if i > j {
                    let wl = segment_weights(j, i, h);
                    (j..=i).fold(m.at(j, i).transpose() + gm[i * sz + j], |a, l| {
                        a + wl[l - j] * (m.at(l, i).transpose() * gm[l * sz + j])
                    })
                } else {
                    m.at(i, j) + gm[i * sz + j]
                };
                acc += w[i] * w[j] * (e.a11 * e.a11 + e.a12 * e.a12 + e.a21 * e.a21 + e.a22 * e.a22);
            }
            acc
        })
        .collect();
    Ok(rows.iter().sum::<f64>().sqrt())
}

/// Diagonal relation `max |m(x,x) + k(x,x)|`.
pub fn diagonal_relation_residual(m: &OperatorM, k: &OperatorK) -> f64 {
    (0..=m.grid().n).map(|i| (m.at(i, i) + k.at(i, i)).max_abs()).fold(0.0, f64::max)
}

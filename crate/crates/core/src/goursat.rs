//! Characteristic (Goursat) problems for the representation kernels `w1`, `w2`.
//!
//! In `ξ = t + x`, `η = t - x` the equation `w_tt - w_xx + q w = 0` becomes
//! `4 w_ξη = -q((ξ - η)/2) w`. The solver marches over characteristic cells of
//! side `h` (the grid step), so the lattice `(p, q)` with `ξ = p h`, `η = q h`
//! contains every grid node `(x_i, t_k) = (i h, k h)` at `p = k + i`,
//! `q = k - i`, plus the half-nodes with `p + q` odd.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Potential, UniformGrid};
use crate::numerics::max_abs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    W1,
    W2,
}

/// Which light-cone boundary: `t = x` (right, `x >= 0`) or `t = -x` (left).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Right,
    Left,
}

/// Integrated diagonal condition, anchored at `w(0, 0) = 0`.
pub fn diagonal_data(p: &Potential, x: f64, which: Which, side: Side) -> Result<f64> {
    match side {
        Side::Right if x < 0.0 => return Err(Error::domain(format!("right diagonal needs x >= 0, got {x}"))),
        Side::Left if x > 0.0 => return Err(Error::domain(format!("left diagonal needs x <= 0, got {x}"))),
        _ => {}
    }
    let q = p.cumint(x)?;
    Ok(diagonal_value(q, which, side))
}

fn diagonal_value(big_q: f64, which: Which, side: Side) -> f64 {
    match (which, side) {
        (Which::W2, Side::Right) => 0.25 * big_q,
        _ => -0.25 * big_q,
    }
}

/// One scalar field on the triangular lattice `p, q >= 0`, `p + q <= levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeField {
    h: f64,
    levels: usize,
    data: Vec<f64>,
}

impl ConeField {
    fn zeros(h: f64, levels: usize) -> Self {
        let len = (levels + 1) * (levels + 2) / 2;
        Self { h, levels, data: vec![0.0; len] }
    }

    #[inline]
    fn index(&self, p: usize, q: usize) -> usize {
        debug_assert!(p + q <= self.levels);
        p * (self.levels + 1) - p * p.saturating_sub(1) / 2 + q
    }

    /// Value at lattice node `(p, q)`.
    #[inline]
    pub fn lattice(&self, p: usize, q: usize) -> f64 {
        self.data[self.index(p, q)]
    }

    #[inline]
    fn set(&mut self, p: usize, q: usize, v: f64) {
        let i = self.index(p, q);
        self.data[i] = v;
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Value at the grid node `x = i h`, `t = k h`; zero outside the cone.
    #[inline]
    pub fn at(&self, i: isize, k: usize) -> f64 {
        if i.unsigned_abs() > k {
            return 0.0;
        }
        let p = (k as isize + i) as usize;
        let q = (k as isize - i) as usize;
        self.lattice(p, q)
    }

    pub fn max_abs_diff(&self, other: &ConeField) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest difference over grid nodes only (half-nodes skipped).
    pub fn max_abs_diff_on_grid(&self, other: &ConeField) -> f64 {
        let mut m = 0.0_f64;
        for p in 0..=self.levels {
            for q in (p % 2..=self.levels - p).step_by(2) {
                m = m.max((self.lattice(p, q) - other.lattice(p, q)).abs());
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }
}

/// Both kernels on the cone `|x| <= t <= grid.horizon`.
#[derive(Debug, Clone)]
pub struct KernelField {
    grid: UniformGrid,
    w1: ConeField,
    w2: ConeField,
    q0: f64,
}

impl KernelField {
    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn field(&self, which: Which) -> &ConeField {
        match which {
            Which::W1 => &self.w1,
            Which::W2 => &self.w2,
        }
    }

    /// `w1(i h, k h)`.
    #[inline]
    pub fn w1(&self, i: isize, k: usize) -> f64 {
        self.w1.at(i, k)
    }

    #[inline]
    pub fn w2(&self, i: isize, k: usize) -> f64 {
        self.w2.at(i, k)
    }

    /// `q(0)`, needed for the exact derivative traces at the corner.
    pub fn q_at_origin(&self) -> f64 {
        self.q0
    }
}

struct Setup {
    h: f64,
    levels: usize,
    /// `q((p - q) h / 2)` indexed by `p - q + levels`.
    qv: Vec<f64>,
    right: Vec<f64>,
    left: Vec<f64>,
}

fn setup(p: &Potential, grid: &UniformGrid) -> Result<Setup> {
    if grid.n < crate::model::grid::MIN_STEPS {
        return Err(Error::config(format!("kernel grid needs at least 8 steps, got {}", grid.n)));
    }
    p.require_support(grid.horizon)?;
    let h = grid.h();
    let levels = 2 * grid.n;
    let x = |d: isize| d as f64 * h / 2.0;
    let qv = (0..=2 * levels).map(|j| p.value(x(j as isize - levels as isize))).collect();
    let right = (0..=levels).map(|k| p.antiderivative(x(k as isize))).collect();
    let left = (0..=levels).map(|k| p.antiderivative(x(-(k as isize)))).collect();
    Ok(Setup { h, levels, qv, right, left })
}

fn boundary_field(s: &Setup, which: Which) -> ConeField {
    let mut w = ConeField::zeros(s.h, s.levels);
    for k in 1..=s.levels {
        w.set(k, 0, diagonal_value(s.right[k], which, Side::Right));
        w.set(0, k, diagonal_value(s.left[k], which, Side::Left));
    }
    w
}

fn march(s: &Setup, which: Which) -> ConeField {
    let mut w = boundary_field(s, which);
    let c = s.h * s.h / 8.0;
    let big_p = s.levels;
    for p in 1..=big_p {
        for q in 1..=big_p - p {
            let a = w.lattice(p - 1, q);
            let b = w.lattice(p, q - 1);
            let d = w.lattice(p - 1, q - 1);
            let qm = s.qv[p + big_p - q];
            w.set(p, q, a + b - d - c * qm * (a + b));
        }
    }
    w
}

/// Second-order characteristic march for both kernels on `grid` (horizon `2T`).
pub fn solve_kernels(p: &Potential, grid: &UniformGrid) -> Result<KernelField> {
    let s = setup(p, grid)?;
    let (w1, w2) = rayon::join(|| march(&s, Which::W1), || march(&s, Which::W2));
    Ok(KernelField { grid: *grid, w1, w2, q0: p.value(0.0) })
}

/// Fixed-point iteration of the characteristic integral equation
/// `w = a(ξ) + b(η) - 1/4 ∬ q w` with trapezoid cells, starting from `a + b`.
pub fn picard_oracle(p: &Potential, grid: &UniformGrid, which: Which, iterations: usize) -> Result<ConeField> {
    if iterations == 0 {
        return Err(Error::config("picard_oracle needs at least one iteration"));
    }
    let s = setup(p, grid)?;
    let big_p = s.levels;
    let mut base_sum = boundary_field(&s, which);
    for pp in 1..=big_p {
        for q in 1..=big_p - pp {
            let v = base_sum.lattice(pp, 0) + base_sum.lattice(0, q);
            base_sum.set(pp, q, v);
        }
    }
    let mut w = base_sum.clone();
    let c = s.h * s.h / 4.0;
    for _ in 0..iterations {
        let mut integral = ConeField::zeros(s.h, big_p);
        let g = |f: &ConeField, a: usize, b: usize| s.qv[a + big_p - b] * f.lattice(a, b);
        for pp in 1..=big_p {
            for q in 1..=big_p - pp {
                let v = integral.lattice(pp - 1, q) + integral.lattice(pp, q - 1) - integral.lattice(pp - 1, q - 1)
                    + c * (g(&w, pp, q) + g(&w, pp - 1, q) + g(&w, pp, q - 1) + g(&w, pp - 1, q - 1));
                integral.set(pp, q, v);
            }
        }
        let mut next = base_sum.clone();
        for pp in 1..=big_p {
            for q in 1..=big_p - pp {
                next.set(pp, q, base_sum.lattice(pp, q) - 0.25 * integral.lattice(pp, q));
            }
        }
        w = next;
    }
    Ok(w)
}

/// Both kernels from the Picard oracle.
pub fn picard_kernels(p: &Potential, grid: &UniformGrid, iterations: usize) -> Result<KernelField> {
    let (w1, w2) = rayon::join(
        || picard_oracle(p, grid, Which::W1, iterations),
        || picard_oracle(p, grid, Which::W2, iterations),
    );
    Ok(KernelField { grid: *grid, w1: w1?, w2: w2?, q0: p.value(0.0) })
}

/// Kernel traces at `x = 0` on the kernel grid `[0, 2T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Traces {
    pub grid: UniformGrid,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub w1x: Vec<f64>,
    pub w2x: Vec<f64>,
    /// Right minus left one-sided `x`-derivative, per kernel.
    pub residual1: Vec<f64>,
    pub residual2: Vec<f64>,
}

impl Traces {
    pub fn max_continuity_residual(&self) -> f64 {
        max_abs(&self.residual1).max(max_abs(&self.residual2))
    }
}

pub fn extract_traces(k: &KernelField) -> Traces {
    let n = k.grid.n;
    let h = k.grid.h();
    let value = |f: &ConeField| (0..=n).map(|t| f.at(0, t)).collect::<Vec<_>>();
    let derivative = |f: &ConeField, corner: f64| {
        let mut d = vec![0.0; n + 1];
        let mut r = vec![0.0; n + 1];
        d[0] = corner;
        d[1] = (f.at(1, 1) - f.at(-1, 1)) / (2.0 * h);
        for t in 2..=n {
            let right = (-3.0 * f.at(0, t) + 4.0 * f.at(1, t) - f.at(2, t)) / (2.0 * h);
            let left = (3.0 * f.at(0, t) - 4.0 * f.at(-1, t) + f.at(-2, t)) / (2.0 * h);
            d[t] = 0.5 * (right + left);
            r[t] = right - left;
        }
        (d, r)
    };
    // Exact corner values from the two diagonal conditions.
    let (w1x, residual1) = derivative(&k.w1, -0.25 * k.q0);
    let (w2x, residual2) = derivative(&k.w2, 0.0);
    Traces { grid: k.grid, w1: value(&k.w1), w2: value(&k.w2), w1x, w2x, residual1, residual2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_index_is_dense() {
        let f = ConeField::zeros(0.1, 6);
        let mut seen = vec![false; f.data.len()];
        for p in 0..=6 {
            for q in 0..=6 - p {
                let i = f.index(p, q);
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn corner_and_diagonals_are_imposed() {
        let p = Potential::gaussian(1.0, 0.3, 0.2).unwrap();
        let g = UniformGrid::new(2.0, 32).unwrap();
        let k = solve_kernels(&p, &g).unwrap();
        assert_eq!(k.w1(0, 0), 0.0);
        assert_eq!(k.w2(0, 0), 0.0);
        for t in 1..=32usize {
            let x = t as f64 * g.h();
            let want = diagonal_data(&p, x, Which::W1, Side::Right).unwrap();
            assert!((k.w1(t as isize, t) - want).abs() < 1e-12);
            let want = diagonal_data(&p, -x, Which::W2, Side::Left).unwrap();
            assert!((k.w2(-(t as isize), t) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_side_is_a_domain_error() {
        let p = Potential::zero();
        assert!(matches!(diagonal_data(&p, -1.0, Which::W1, Side::Right), Err(Error::Domain(_))));
        assert!(matches!(diagonal_data(&p, 1.0, Which::W2, Side::Left), Err(Error::Domain(_))));
    }

    #[test]
    fn short_support_is_rejected() {
        let p = Potential::tabulate(1.0, 32, |_| 1.0).unwrap();
        let g = UniformGrid::new(2.0, 16).unwrap();
        assert!(matches!(solve_kernels(&p, &g), Err(Error::Domain(_))));
    }
}

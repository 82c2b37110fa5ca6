use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::UniformGrid;
use crate::numerics::derivative_fd;

/// Two-component boundary control `F = (f1, f2)` sampled on a grid, with
/// optional exact derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    grid: UniformGrid,
    f1: Vec<f64>,
    f2: Vec<f64>,
    derivative: Option<(Vec<f64>, Vec<f64>)>,
}

impl Control {
    /// # Panics
    /// If the sample vectors do not have `grid.len()` entries.
    pub fn from_samples(grid: UniformGrid, f1: Vec<f64>, f2: Vec<f64>) -> Self {
        assert!(f1.len() == grid.len() && f2.len() == grid.len(), "control samples must match the grid");
        Self { grid, f1, f2, derivative: None }
    }

    pub fn zeros(grid: UniformGrid) -> Self {
        Self::from_samples(grid, vec![0.0; grid.len()], vec![0.0; grid.len()])
    }

    pub fn from_fn(grid: UniformGrid, f1: impl Fn(f64) -> f64, f2: impl Fn(f64) -> f64) -> Self {
        let t = grid.points();
        Self::from_samples(grid, t.iter().map(|&s| f1(s)).collect(), t.iter().map(|&s| f2(s)).collect())
    }

    /// Analytic control carrying exact derivatives `df1`, `df2`.
    pub fn analytic(
        grid: UniformGrid,
        f1: impl Fn(f64) -> f64,
        f2: impl Fn(f64) -> f64,
        df1: impl Fn(f64) -> f64,
        df2: impl Fn(f64) -> f64,
    ) -> Self {
        let t = grid.points();
        let mut c = Self::from_fn(grid, f1, f2);
        c.derivative = Some((t.iter().map(|&s| df1(s)).collect(), t.iter().map(|&s| df2(s)).collect()));
        c
    }

    /// Random smooth control `Σ_{m=1}^{modes} c_m sin(m π t / T)` per component,
    /// with coefficients uniform in `[-1, 1] / m`. Vanishes at both ends.
    pub fn random_smooth(grid: UniformGrid, modes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coef = || -> Vec<f64> { (1..=modes).map(|m| rng.gen_range(-1.0..=1.0) / m as f64).collect() };
        let (c1, c2) = (coef(), coef());
        Self::sine_series(grid, grid.horizon, &c1, &c2)
    }

    /// `f_j(t) = Σ_m c_j[m-1] sin(m π t / period)` with exact derivatives.
    pub fn sine_series(grid: UniformGrid, period: f64, c1: &[f64], c2: &[f64]) -> Self {
        let series = |c: &[f64], t: f64| -> f64 {
            c.iter().enumerate().map(|(m, cm)| cm * ((m + 1) as f64 * PI * t / period).sin()).sum()
        };
        let dseries = |c: &[f64], t: f64| -> f64 {
            c.iter()
                .enumerate()
                .map(|(m, cm)| {
                    let k = (m + 1) as f64 * PI / period;
                    cm * k * (k * t).cos()
                })
                .sum()
        };
        Self::analytic(grid, |t| series(c1, t), |t| series(c2, t), |t| dseries(c1, t), |t| dseries(c2, t))
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn f1(&self) -> &[f64] {
        &self.f1
    }

    pub fn f2(&self) -> &[f64] {
        &self.f2
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// `f1'` on the grid: exact if available, otherwise by finite differences.
    pub fn df1(&self) -> Vec<f64> {
        match &self.derivative {
            Some((d, _)) => d.clone(),
            None => derivative_fd(&self.f1, self.grid.h()),
        }
    }

    pub fn df2(&self) -> Vec<f64> {
        match &self.derivative {
            Some((_, d)) => d.clone(),
            None => derivative_fd(&self.f2, self.grid.h()),
        }
    }

    pub fn time_reversed(&self) -> Self {
        let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
        Self {
            grid: self.grid,
            f1: rev(&self.f1),
            f2: rev(&self.f2),
            derivative: self.derivative.as_ref().map(|(a, b)| {
                (rev(a).into_iter().map(|v| -v).collect(), rev(b).into_iter().map(|v| -v).collect())
            }),
        }
    }

    /// `a F + b G`; exact derivatives survive only if both carry them.
    pub fn combine(a: f64, f: &Control, b: f64, g: &Control) -> Self {
        let lin = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| a * u + b * v).collect::<Vec<_>>();
        let derivative = match (&f.derivative, &g.derivative) {
            (Some((f1, f2)), Some((g1, g2))) => Some((lin(f1, g1), lin(f2, g2))),
            _ => None,
        };
        Self { grid: f.grid, f1: lin(&f.f1, &g.f1), f2: lin(&f.f2, &g.f2), derivative }
    }

    /// Same control on the first `k` steps of the grid.
    pub fn prefix(&self, k: usize) -> Self {
        Self {
            grid: self.grid.prefix(k),
            f1: self.f1[..=k].to_vec(),
            f2: self.f2[..=k].to_vec(),
            derivative: self.derivative.as_ref().map(|(a, b)| (a[..=k].to_vec(), b[..=k].to_vec())),
        }
    }

    /// Extends the control by zero up to `grid` (same step, longer horizon).
    pub fn zero_extended(&self, grid: UniformGrid) -> Self {
        let pad = |v: &[f64]| {
            let mut out = v.to_vec();
            out.resize(grid.len(), 0.0);
            out
        };
        Self {
            grid,
            f1: pad(&self.f1),
            f2: pad(&self.f2),
            derivative: self.derivative.as_ref().map(|(a, b)| (pad(a), pad(b))),
        }
    }

    pub fn norm(&self) -> f64 {
        super::inner_outer(self, self).map(f64::sqrt).unwrap_or(f64::NAN)
    }
}

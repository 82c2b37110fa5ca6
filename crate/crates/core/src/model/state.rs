use super::UniformGrid;

/// Element of `L2(-T, T)` stored as `a1(x) = a(x)`, `a2(x) = a(-x)` for
/// `x ∈ [0, T]`. At `x = 0` the two components hold the one-sided limits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    grid: UniformGrid,
    a1: Vec<f64>,
    a2: Vec<f64>,
}

impl StateVector {
    pub fn new(grid: UniformGrid, a1: Vec<f64>, a2: Vec<f64>) -> Self {
        assert!(a1.len() == grid.len() && a2.len() == grid.len(), "state samples must match the grid");
        Self { grid, a1, a2 }
    }

    pub fn zeros(grid: UniformGrid) -> Self {
        Self::new(grid, vec![0.0; grid.len()], vec![0.0; grid.len()])
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn a1(&self) -> &[f64] {
        &self.a1
    }

    pub fn a2(&self) -> &[f64] {
        &self.a2
    }

    /// Values on `x_j = -T + j h`, `j = 0..=2n`; the value at `x = 0` is the
    /// mean of the one-sided limits.
    pub fn to_full(&self) -> Vec<f64> {
        let n = self.grid.n;
        let mut out = Vec::with_capacity(2 * n + 1);
        out.extend(self.a2.iter().rev().take(n));
        out.push(0.5 * (self.a1[0] + self.a2[0]));
        out.extend(&self.a1[1..]);
        out
    }

    pub fn from_full(grid: UniformGrid, values: &[f64]) -> Self {
        let n = grid.n;
        assert_eq!(values.len(), 2 * n + 1, "full state must have 2n + 1 samples");
        let a1 = values[n..].to_vec();
        let a2 = values[..=n].iter().rev().copied().collect();
        Self::new(grid, a1, a2)
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.a1
            .iter()
            .zip(&other.a1)
            .chain(self.a2.iter().zip(&other.a2))
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn norm(&self) -> f64 {
        super::inner_inner(self, self).map(f64::sqrt).unwrap_or(f64::NAN)
    }
}

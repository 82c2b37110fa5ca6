//! Shared grids, potentials, controls, states and the small fixed operator
//! algebra (`S`, time reversal, inner products).

mod control;
pub mod grid;
mod mat2;
mod potential;
mod state;

pub use control::Control;
pub use grid::UniformGrid;
pub use mat2::{Mat2, Vec2, S};
pub use potential::{Potential, PotentialKind};
pub use state::StateVector;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::trapezoid_weights;

/// `S v` with `S = 1/2 [[1, -1], [-1, -1]]`.
pub fn s_apply(v: Vec2) -> Vec2 {
    S * v
}

/// `(J F)(t) = F(T - t)`: reverses the sample order.
pub fn jt_apply(f: &Control) -> Control {
    f.time_reversed()
}

/// Inner product of the control space `L2(0,T; R^2)`, composite trapezoid.
pub fn inner_outer(f: &Control, g: &Control) -> Result<f64> {
    if !f.grid().same_as(g.grid()) {
        return Err(Error::shape(format!(
            "controls live on different grids ({:?} vs {:?})",
            f.grid(),
            g.grid()
        )));
    }
    let w = trapezoid_weights(f.grid().n, f.grid().h());
    Ok(w.iter()
        .zip(f.f1().iter().zip(f.f2()))
        .zip(g.f1().iter().zip(g.f2()))
        .map(|((wi, (a1, a2)), (b1, b2))| wi * (a1 * b1 + a2 * b2))
        .sum())
}

/// Inner product of the state space `L2(-T,T)` in the `(a(x), a(-x))` encoding.
pub fn inner_inner(a: &StateVector, b: &StateVector) -> Result<f64> {
    if !a.grid().same_as(b.grid()) {
        return Err(Error::shape("states live on different grids"));
    }
    let w = trapezoid_weights(a.grid().n, a.grid().h());
    Ok(w.iter()
        .zip(a.a1().iter().zip(a.a2()))
        .zip(b.a1().iter().zip(b.a2()))
        .map(|((wi, (x1, x2)), (y1, y2))| wi * (x1 * y1 + x2 * y2))
        .sum())
}

/// Potential samples recovered by an inverse route on `x_j = -T + j h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveredPotential {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub valid: Vec<bool>,
}

impl RecoveredPotential {
    /// `max |q - q_true| / max |q_true|` over valid points with `include(x)`;
    /// falls back to the absolute error when `q_true` vanishes there.
    /// `None` if no valid point is included.
    pub fn relative_error(&self, truth: &Potential, include: impl Fn(f64) -> bool) -> Option<f64> {
        let mut err = 0.0_f64;
        let mut scale = 0.0_f64;
        let mut any = false;
        for ((x, q), ok) in self.x.iter().zip(&self.q).zip(&self.valid) {
            if !*ok || !include(*x) {
                continue;
            }
            let t = truth.eval(*x).ok()?;
            err = err.max((q - t).abs());
            scale = scale.max(t.abs());
            any = true;
        }
        any.then(|| if scale > 0.0 { err / scale } else { err })
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

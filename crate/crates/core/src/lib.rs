//! Boundary-control inverse problem for the wave equation `u_tt - u_xx + q(x) u = 0`
//! on the real line, driven by a two-component control acting through jump
//! conditions at the origin.
//!
//! The crate is organized as a pipeline:
//!
//! * [`goursat`] solves the characteristic problems for the representation
//!   kernels `w1`, `w2` on the light cone;
//! * [`forward`] evaluates the forward solution, the control operator and the
//!   response matrix;
//! * [`connecting`] assembles the connecting (Gram) operator from response data
//!   alone;
//! * [`krein`] and [`gl`] are the two independent inverse routes recovering `q`;
//! * [`spectral`] builds finite-interval matrix spectral measures and checks the
//!   spectral representations against the dynamic ones;
//! * [`config`], [`io`] and [`pipeline`] wire the stages to files.

pub mod config;
pub mod connecting;
pub mod error;
pub mod forward;
pub mod gl;
pub mod goursat;
pub mod io;
pub mod krein;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{Control, Mat2, Potential, RecoveredPotential, StateVector, UniformGrid, Vec2};
